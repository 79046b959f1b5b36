"""Run configuration: INI-style text with [problem], [algorithm] and
[output] sections, `key = value` lines and `#` comments.

Parsing is strict: unknown sections or keys, duplicate keys and type
mismatches are errors. parse -> render -> parse is the identity.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, asdict, replace

from .algorithms import VARIANTS, HyperParams
from .federation import SCHEMES
from .problems import ProblemInstance, make_auc, make_robust, make_synthetic


class ConfigError(ValueError):
    pass


# key -> (type tag, default); "opt_int"/"opt_float" admit the literal none.
PROBLEM_SCHEMAS = {
    "synthetic": {
        "k": ("int", 10),
        "dim": ("int", 20),
        "s": ("float", 1.0),
        "tau": ("float", 10.0),
        "n_per_client": ("int", 50),
        "noise_sigma": ("float", 0.1),
        "seed": ("opt_int", None),
    },
    "auc": {
        "k": ("int", 10),
        "dim": ("int", 10),
        "n_per_client": ("int", 40),
        "pos_ratio": ("float", 0.05),
        "margin": ("float", 1.0),
        "center_spread": ("float", 0.5),
        "noise_std": ("float", 0.5),
        "scheme": ("str", "by_group"),
        "n_test": ("int", 400),
        "seed": ("opt_int", None),
    },
    "robust": {
        "k": ("int", 10),
        "dim": ("int", 10),
        "n_per_client": ("int", 40),
        "margin": ("float", 1.5),
        "fragile_total": ("float", 0.5),
        "fragile_noise": ("float", 0.15),
        "scheme": ("str", "iid"),
        "n_test": ("int", 400),
        "ball_radius": ("float", 1.0),
        "seed": ("opt_int", None),
    },
}

ALGORITHM_SCHEMA = {
    "variant": ("str", "fgda"),
    "gamma": ("float", 0.1),
    "lambda": ("float", 0.1),
    "eta_n": ("float", 1.0),
    "eta_m": ("float", 10.0),
    "c1": ("float", 1.0),
    "c2": ("float", 1.0),
    "q": ("int", 20),
    "t": ("int", 4000),
    "rho": ("float", 0.01),
    "varrho": ("float", 0.9),
    "rho_u": ("float", 1.0),
    "beta_m": ("float", 0.9),
    "tie_varrho_to_momentum": ("bool", False),
    "eta_const": ("opt_float", None),
    "alpha_const": ("opt_float", None),
    "beta_const": ("opt_float", None),
    "init_scale": ("float", 1.0),
    "y_init_scale": ("opt_float", None),
}

OUTPUT_SCHEMA = {
    "csv_dir": ("str", "out"),
    "seeds": ("int_list", (1,)),
    "heavy_cadence": ("int", 1),
}

_ALGO_TO_HP = {"lambda": "lam", "t": "T"}


@dataclass
class ProblemConfig:
    name: str
    params: dict = field(default_factory=dict)


@dataclass
class OutputConfig:
    csv_dir: str = "out"
    seeds: tuple = (1,)
    heavy_cadence: int = 1


@dataclass
class RunConfig:
    problem: ProblemConfig
    algorithm: HyperParams
    output: OutputConfig

    def hp_for_seed(self, seed: int) -> HyperParams:
        return replace(self.algorithm, seed=seed)

    def build_problem(self, run_seed: int) -> ProblemInstance:
        params = dict(self.problem.params)
        seed = params.pop("seed", None)
        seed = run_seed if seed is None else seed
        k = params.pop("k")
        if self.problem.name == "synthetic":
            return make_synthetic(K=k, seed=seed, **params)
        if self.problem.name == "auc":
            return make_auc(K=k, seed=seed, **params)
        if self.problem.name == "robust":
            return make_robust(K=k, seed=seed, **params)
        raise ConfigError(f"unknown problem {self.problem.name!r}")


def _convert(raw: str, kind: str, key: str):
    raw = raw.strip()
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "str":
            return raw
        if kind == "bool":
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        if kind == "opt_int":
            return None if raw.lower() == "none" else int(raw)
        if kind == "opt_float":
            return None if raw.lower() == "none" else float(raw)
        if kind == "int_list":
            return tuple(int(tok) for tok in raw.split(",") if tok.strip())
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: cannot parse {raw!r} as {kind}") from exc
    raise ConfigError(f"unknown type tag {kind}")


def _render_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    return repr(value) if isinstance(value, float) else str(value)


def parse_config(text: str) -> RunConfig:
    """Parse config text into a typed RunConfig with defaults filled."""
    parser = configparser.ConfigParser(
        strict=True, interpolation=None, delimiters=("=",), comment_prefixes=("#",)
    )
    try:
        parser.read_string(text)
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r} at line {exc.lineno}") from exc
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc

    known = {"problem", "algorithm", "output"}
    unknown = set(parser.sections()) - known
    if unknown:
        raise ConfigError(f"unknown sections: {sorted(unknown)}")
    if "problem" not in parser:
        raise ConfigError("missing [problem] section")

    prob_raw = dict(parser["problem"])
    name = prob_raw.pop("name", None)
    if name is None:
        raise ConfigError("[problem] must set name")
    if name not in PROBLEM_SCHEMAS:
        raise ConfigError(f"unknown problem {name!r}; expected one of {sorted(PROBLEM_SCHEMAS)}")
    schema = PROBLEM_SCHEMAS[name]
    params = {}
    for key, (kind, default) in schema.items():
        if key in prob_raw:
            params[key] = _convert(prob_raw.pop(key), kind, f"problem.{key}")
        else:
            params[key] = default
    if prob_raw:
        raise ConfigError(f"unknown problem keys: {sorted(prob_raw)}")
    if "scheme" in params and params["scheme"] not in SCHEMES:
        raise ConfigError(f"problem.scheme must be one of {SCHEMES}")

    algo_raw = dict(parser["algorithm"]) if "algorithm" in parser else {}
    hp_kwargs = {}
    for key, (kind, default) in ALGORITHM_SCHEMA.items():
        val = _convert(algo_raw.pop(key), kind, f"algorithm.{key}") if key in algo_raw else default
        hp_kwargs[_ALGO_TO_HP.get(key, key)] = val
    if algo_raw:
        raise ConfigError(f"unknown algorithm keys: {sorted(algo_raw)}")
    if hp_kwargs["variant"] not in VARIANTS:
        raise ConfigError(f"algorithm.variant must be one of {VARIANTS}")
    try:
        hp = HyperParams(**hp_kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    out_raw = dict(parser["output"]) if "output" in parser else {}
    out_kwargs = {}
    for key, (kind, default) in OUTPUT_SCHEMA.items():
        out_kwargs[key] = _convert(out_raw.pop(key), kind, f"output.{key}") if key in out_raw else default
    if out_raw:
        raise ConfigError(f"unknown output keys: {sorted(out_raw)}")
    if not out_kwargs["seeds"]:
        raise ConfigError("output.seeds must list at least one seed")

    return RunConfig(ProblemConfig(name, params), hp, OutputConfig(**out_kwargs))


def render_config(cfg: RunConfig) -> str:
    """Canonical text form; parse(render(cfg)) == cfg."""
    buf = io.StringIO()
    buf.write("[problem]\n")
    buf.write(f"name = {cfg.problem.name}\n")
    for key in PROBLEM_SCHEMAS[cfg.problem.name]:
        buf.write(f"{key} = {_render_value(cfg.problem.params[key])}\n")
    buf.write("\n[algorithm]\n")
    hp_dict = asdict(cfg.algorithm)
    for key in ALGORITHM_SCHEMA:
        buf.write(f"{key} = {_render_value(hp_dict[_ALGO_TO_HP.get(key, key)])}\n")
    buf.write("\n[output]\n")
    out = cfg.output
    buf.write(f"csv_dir = {out.csv_dir}\n")
    buf.write(f"seeds = {_render_value(out.seeds)}\n")
    buf.write(f"heavy_cadence = {out.heavy_cadence}\n")
    return buf.getvalue()


def apply_overrides(cfg: RunConfig, overrides: dict[str, str]) -> RunConfig:
    """Apply dotted-path overrides like {"algorithm.gamma": "0.05"}."""
    text_sections = {"problem": {}, "algorithm": {}, "output": {}}
    for path, raw in overrides.items():
        if "." not in path:
            raise ConfigError(f"override {path!r} must look like section.key")
        section, key = path.split(".", 1)
        if section not in text_sections:
            raise ConfigError(f"unknown override section {section!r}")
        text_sections[section][key] = raw

    # Reuse the strict parser by rendering and patching the text form.
    parser = configparser.ConfigParser(strict=True, interpolation=None, delimiters=("=",))
    parser.read_string(render_config(cfg))
    for section, kv in text_sections.items():
        for key, raw in kv.items():
            if section == "problem" and key == "name":
                raise ConfigError("problem.name cannot be overridden")
            parser.set(section, key, raw)
    buf = io.StringIO()
    parser.write(buf)
    return parse_config(buf.getvalue())
