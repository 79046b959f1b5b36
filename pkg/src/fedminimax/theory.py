"""Machine-checkable hyperparameter constraint systems and numeric probes.

The convergence guarantees for the adaptive and non-adaptive variants hold
under a system of ten inequalities coupling the step sizes, the schedule
parameters (n, m, c1, c2), the sync period and the problem constants
(L_f, mu, and the preconditioner bounds rho, rho_u). validate_theorem1
evaluates the adaptive system; validate_theorem2 is the same system
specialized at identity preconditioners (rho = rho_l = rho_u = 1).

The step-size coupling is evaluated as tau = gamma / lam <= min(...): the
two step sizes satisfy gamma <= lam * mu / (16 rho_u L) in the same system,
which forces gamma < lam, so the smaller-over-larger ratio is the only
feasible reading of the coupling.

Probes check, on concrete instances, the gradient-growth inequality behind
the analysis (probe_pl), the Lipschitz constants of the inner maximizer
and the value-function gradient (probe_lipschitz), the analytic gradient
oracles against finite differences (grad_check), and the constants
themselves (estimate_constants).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .algorithms import HyperParams
from .core import Vector
from .problems import AucProblem, ProblemInstance, RobustProblem, SyntheticProblem, grad_F, grad_full

CONSTRAINT_NAMES = (
    "m_min_two",
    "m_lower",
    "c_square_upper",
    "c1_lower",
    "c2_lower",
    "tau_coupling",
    "gamma_upper",
    "lambda_upper",
    "rho_range",
    "rho_u_range",
)


@dataclass
class ConstantSet:
    """Problem constants feeding the validator, with per-field provenance
    ("analytic", "estimated" or "config")."""

    L_f: float
    mu: float
    sigma: float
    delta_x: float
    delta_y: float
    rho: float = 1.0
    rho_u: float = 1.0
    provenance: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.mu <= 0 or self.L_f < self.mu:
            raise ValueError("require L_f >= mu > 0")
        if self.rho <= 0 or self.rho_u <= 0:
            raise ValueError("rho and rho_u must be positive")

    @property
    def kappa(self) -> float:
        return self.L_f / self.mu

    @property
    def L(self) -> float:
        return self.L_f * (1.0 + self.L_f / self.mu)

    def with_safety_margin(self, factor: float = 1.1) -> "ConstantSet":
        """Inflate estimated fields by `factor` before feeding the validator,
        so sampling error cannot understate a constant."""
        updates = {}
        for name in ("L_f", "mu", "sigma", "delta_x", "delta_y"):
            if self.provenance.get(name) == "estimated":
                val = getattr(self, name) * factor
                # mu is a lower-bound-style constant; inflating it would be
                # anti-conservative.
                if name == "mu":
                    val = getattr(self, name) / factor
                updates[name] = val
        return replace(self, **updates) if updates else self


@dataclass
class ConstraintRecord:
    name: str
    lhs: float
    rhs: float
    satisfied: bool
    relation: str = "<="


@dataclass
class ConstraintReport:
    constraints: list[ConstraintRecord]

    @property
    def all_satisfied(self) -> bool:
        return all(c.satisfied for c in self.constraints)

    def by_name(self, name: str) -> ConstraintRecord:
        for c in self.constraints:
            if c.name == name:
                return c
        raise KeyError(name)

    def render(self) -> str:
        width = max(len(c.name) for c in self.constraints)
        lines = []
        for c in self.constraints:
            flag = "ok " if c.satisfied else "VIOLATED"
            lines.append(f"{c.name:<{width}}  {flag:<8} lhs={c.lhs:.6g} {c.relation} rhs={c.rhs:.6g}")
        lines.append(f"overall: {'satisfied' if self.all_satisfied else 'violated'}")
        return "\n".join(lines)

    def machine_lines(self) -> str:
        return "\n".join(
            f"{c.name}={'satisfied' if c.satisfied else 'violated'}|{c.lhs:.17g}|{c.rhs:.17g}"
            for c in self.constraints
        )


def _theorem_system(hp: HyperParams, c: ConstantSet, K: int, rho: float, rho_l: float, rho_u: float) -> ConstraintReport:
    n, m = hp.eta_n, hp.eta_m
    c1, c2, q = hp.c1, hp.c2, hp.q
    gamma, lam = hp.gamma, hp.lam
    L_f, mu, L = c.L_f, c.mu, c.L

    records = []

    def add(name: str, lhs: float, rhs: float, satisfied: bool, relation: str = "<="):
        records.append(ConstraintRecord(name, float(lhs), float(rhs), bool(satisfied), relation))

    add("m_min_two", m, 2.0, m >= 2.0, ">=")
    m_bound = max(
        n**3,
        (c1 * n) ** 3 * K,
        (c2 * n) ** 3 * K,
        K * (12.0 * math.sqrt(2.0) * n * lam * q * L_f) ** 3 / rho**3,
    )
    add("m_lower", m, m_bound, m >= m_bound, ">=")
    add(
        "c_square_upper",
        c1**2 + c2**2,
        12.0**4 * lam**4 * q**2 * L_f**2 / rho**4,
        c1**2 + c2**2 <= 12.0**4 * lam**4 * q**2 * L_f**2 / rho**4,
    )
    c1_bound = 2.0 / (3.0 * n**3 * K) + 9.0 * rho_u * L_f**2 / (2.0 * mu**2 * rho)
    add("c1_lower", c1, c1_bound, c1 >= c1_bound, ">=")
    c2_bound = 2.0 / (3.0 * n**3 * K) + 4.5
    add("c2_lower", c2, c2_bound, c2 >= c2_bound, ">=")

    Lam = 1.0 / 16.0 + L_f**2 * rho_u / (4.0 * mu**2) + 16.0 * lam**2 * L_f**2 / (K * rho**2)
    tau = gamma / lam if lam > 0 else math.inf
    tau_bound = min(math.sqrt(5.0 * K) / (4.0 * math.sqrt(2.0 * Lam)), 1.0)
    add("tau_coupling", tau, tau_bound, tau <= tau_bound)

    gamma_bound = min(
        m ** (1.0 / 3.0) * rho / (4.0 * L * n),
        lam * mu / (16.0 * rho_u * L),
        rho_l * mu / (16.0 * rho_u * L_f**2),
        2.0 * lam * mu**2 * rho / (27.0 * L_f**2 * rho_u),
        math.sqrt(K) * rho / (8.0 * math.sqrt(3.0) * L_f),
    )
    add("gamma_upper", gamma, gamma_bound, gamma <= gamma_bound)

    lam_bound = min(
        m ** (1.0 / 3.0) / (4.0 * L_f * n * rho_u),
        3.0 * math.sqrt(5.0 * K) / (32.0 * math.sqrt(2.0) * mu),
    )
    add("lambda_upper", lam, lam_bound, lam <= lam_bound)

    add("rho_range", rho, 1.0, 0.0 < rho <= 1.0)
    add("rho_u_range", rho_u, 135.0 / (64.0 * rho**2), 0.0 < rho_u <= 135.0 / (64.0 * rho**2))

    report = ConstraintReport(records)
    assert [c.name for c in records] == list(CONSTRAINT_NAMES)
    return report


def validate_theorem1(hp: HyperParams, c: ConstantSet, K: int) -> ConstraintReport:
    """Constraint system of the adaptive variant's convergence guarantee.

    rho (= rho_l) is taken from the run configuration, rho_u from the
    constant set. Violations are report entries, never errors.
    """
    return _theorem_system(hp, c, K, rho=hp.rho, rho_l=hp.rho, rho_u=c.rho_u)


def validate_theorem2(hp: HyperParams, c: ConstantSet, K: int) -> ConstraintReport:
    """Same system at identity preconditioners (rho = rho_l = rho_u = 1)."""
    return _theorem_system(hp, c, K, rho=1.0, rho_l=1.0, rho_u=1.0)


def bound_constant_G(
    hp: HyperParams,
    c: ConstantSet,
    K: int,
    F_init: float,
    f_init: float,
    F_star: float,
) -> float:
    """Scale constant of the convergence guarantee, for display only.

    Its absolute value hides unknown factors at desk scale, so nothing is
    ever asserted against it. The guarantee's printed grouping is
    ambiguous around the duality-gap term; the reading here closes that
    bracket before the following additive term.
    """
    n, m = hp.eta_n, hp.eta_m
    c1, c2, q = hp.c1, hp.c2, hp.q
    gamma, lam = hp.gamma, hp.lam
    rho, rho_u = hp.rho, c.rho_u
    L_f, mu, sigma = c.L_f, c.mu, c.sigma
    Delta = (c1**2 + c2**2) * sigma**2 + 3.0 * c2**2 * c.delta_x**2 + 3.0 * c1**2 * c.delta_y**2
    Lam = 1.0 / 16.0 + L_f**2 * rho_u / (4.0 * mu**2) + 16.0 * lam**2 * L_f**2 / (K * rho**2)
    return (
        4.0 * (F_init - F_star) / (rho * gamma * n)
        + 36.0 * rho_u * L_f**2 / (rho * lam * mu**2 * n) * (F_init - f_init)
        + 8.0 * m ** (1.0 / 3.0) * sigma**2 / (q * K ** (4.0 / 3.0) * n**2 * rho)
        + 8.0 * K * n**2
        * ((c1**2 + c2**2) * sigma**2 / (rho**2 * K) + Lam * Delta / (15.0 * K * lam**2 * L_f**2))
        * math.log(m + hp.T)
    )


def _probe_points(inst: ProblemInstance, n_points: int, seed: int, scale: float = 2.0):
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    for _ in range(n_points):
        x = scale * rng.standard_normal(inst.d)
        y = scale * rng.standard_normal(inst.p)
        yield x, y


def pl_slack(inst: ProblemInstance, x: Vector, y: Vector, mu: float | None = None) -> float:
    """Slack ||grad_y f(x, y)||^2 - 2 mu (max_y' f(x, y') - f(x, y)) at one point."""
    if not inst.has_closed_form_inner_max:
        raise ValueError(f"{inst.name} has no closed-form inner maximum")
    if mu is None:
        mu = inst.mu
    _, gy = inst.global_grad(x, y)
    gap = inst.inner_max_value(x) - inst.global_value(x, y)
    return float(gy @ gy) - 2.0 * mu * gap


def probe_pl(inst: ProblemInstance, n_points: int, seed: int, mu: float | None = None) -> float:
    """Worst observed slack of the gradient-growth inequality

        ||grad_y f(x, y')||^2 >= 2 mu (max_y f(x, y) - f(x, y'))

    over sampled (x, y'). Requires a closed-form inner maximum. A result
    at or above a small negative numerical tolerance certifies the probe.
    """
    worst = math.inf
    for x, y in _probe_points(inst, n_points, seed):
        worst = min(worst, pl_slack(inst, x, y, mu))
    return worst


@dataclass
class LipschitzReport:
    max_ratio_y_star: float
    kappa: float
    max_ratio_grad_F: float
    L: float
    n_pairs: int

    @property
    def ok(self) -> bool:
        return self.max_ratio_y_star <= self.kappa and self.max_ratio_grad_F <= self.L


def probe_lipschitz(inst: ProblemInstance, n_pairs: int, seed: int, c: ConstantSet | None = None) -> LipschitzReport:
    """Check || y*(x1) - y*(x2) || <= kappa ||x1 - x2|| and
    || grad F(x1) - grad F(x2) || <= L ||x1 - x2|| over random pairs.

    Requires closed forms for y* and grad F (synthetic, AUC)."""
    if not inst.has_closed_form_inner_max:
        raise ValueError(f"{inst.name} has no closed-form inner maximizer")
    if c is None:
        c = estimate_constants(inst, n_samples=50, seed=seed)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    r_y = 0.0
    r_F = 0.0
    for _ in range(n_pairs):
        x1 = 2.0 * rng.standard_normal(inst.d)
        x2 = 2.0 * rng.standard_normal(inst.d)
        dx = float(np.linalg.norm(x1 - x2))
        if dx == 0.0:
            continue
        r_y = max(r_y, float(np.linalg.norm(inst.y_star(x1) - inst.y_star(x2))) / dx)
        r_F = max(r_F, float(np.linalg.norm(grad_F(inst, x1) - grad_F(inst, x2))) / dx)
    return LipschitzReport(r_y, c.kappa, r_F, c.L, n_pairs)


def grad_check(inst: ProblemInstance, k: int, x: Vector, y: Vector, h: float = 1e-6) -> float:
    """Central finite differences of f^k against the analytic partial
    gradients, both blocks; returns the max relative error."""
    if not 1e-8 < h < 1e-3:
        raise ValueError("h must lie in (1e-8, 1e-3)")
    gx, gy = grad_full(inst, k, x, y)
    fd_x = np.zeros_like(gx)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h
        fd_x[i] = (inst.value(k, x + e, y) - inst.value(k, x - e, y)) / (2.0 * h)
    fd_y = np.zeros_like(gy)
    for i in range(len(y)):
        e = np.zeros_like(y)
        e[i] = h
        fd_y[i] = (inst.value(k, x, y + e) - inst.value(k, x, y - e)) / (2.0 * h)
    scale = max(1.0, float(np.abs(gx).max(initial=0.0)), float(np.abs(gy).max(initial=0.0)))
    err = max(float(np.abs(fd_x - gx).max(initial=0.0)), float(np.abs(fd_y - gy).max(initial=0.0)))
    return err / scale


def _estimate_heterogeneity(inst: ProblemInstance, n_samples: int, rng) -> tuple[float, float]:
    dx = dy = 0.0
    for _ in range(n_samples):
        x = 2.0 * rng.standard_normal(inst.d)
        y = 2.0 * rng.standard_normal(inst.p)
        gxs, gys = [], []
        for k in range(inst.K):
            gx, gy = grad_full(inst, k, x, y)
            gxs.append(gx)
            gys.append(gy)
        for a in range(inst.K):
            for b in range(a + 1, inst.K):
                dx = max(dx, float(np.linalg.norm(gxs[a] - gxs[b])))
                dy = max(dy, float(np.linalg.norm(gys[a] - gys[b])))
    return dx, dy


def _estimate_sigma(inst: ProblemInstance, n_samples: int, rng) -> float:
    worst = 0.0
    for _ in range(max(1, n_samples // 10)):
        x = 2.0 * rng.standard_normal(inst.d)
        y = 2.0 * rng.standard_normal(inst.p)
        for k in range(inst.K):
            gx, gy = grad_full(inst, k, x, y)
            acc = 0.0
            n_k = inst.dataset_size(k)
            for item in range(n_k):
                sx, sy = inst.grad_stoch(k, x, y, item)
                acc += float((sx - gx) @ (sx - gx) + (sy - gy) @ (sy - gy))
            worst = max(worst, acc / n_k)
    return math.sqrt(worst)


def estimate_constants(inst: ProblemInstance, n_samples: int, seed: int,
                       rho: float = 1.0, rho_u: float = 1.0) -> ConstantSet:
    """Analytic constants where the family admits them, max-over-probes
    estimates elsewhere; provenance recorded per field."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    delta_x, delta_y = _estimate_heterogeneity(inst, n_samples, rng)
    prov = {"delta_x": "estimated", "delta_y": "estimated", "rho": "config", "rho_u": "config"}

    if isinstance(inst, SyntheticProblem):
        L_f, mu = inst.lipschitz_L_f, inst.mu
        sigma = inst.sigma_bound
        prov.update(L_f="analytic", mu="analytic", sigma="analytic")
    elif isinstance(inst, AucProblem):
        L_f, mu = inst.lipschitz_L_f, inst.mu
        sigma = _estimate_sigma(inst, n_samples, rng)
        prov.update(L_f="analytic", mu="analytic", sigma="estimated")
    elif isinstance(inst, RobustProblem):
        L_f = _estimate_robust_L_f(inst, n_samples, rng)
        mu = _estimate_pl_ratio(inst, n_samples, rng)
        sigma = _estimate_sigma(inst, n_samples, rng)
        prov.update(L_f="estimated", mu="estimated", sigma="estimated")
    else:
        raise TypeError(f"unknown problem family {inst.name!r}")

    return ConstantSet(
        L_f=L_f, mu=mu, sigma=sigma, delta_x=delta_x, delta_y=delta_y,
        rho=rho, rho_u=rho_u, provenance=prov,
    )


def _estimate_robust_L_f(inst: RobustProblem, n_samples: int, rng) -> float:
    # Per-sample Hessian of loss(w.(x+rho)) in (w, rho): l'' u u^T + l' J
    # with u = (x+rho, w); spectral norm sampled over points and items.
    worst = 0.0
    for _ in range(max(1, n_samples // 10)):
        w = rng.standard_normal(inst.d)
        rho_v = inst.y_constraint.project(rng.standard_normal(inst.p))
        for k in range(inst.K):
            for xi, lab in zip(inst.clients_X[k], inst.clients_y[k]):
                z = float((xi + rho_v) @ w)
                ez = 1.0 / (1.0 + math.exp(lab * z))
                lpp = ez * (1.0 - ez)
                lp = -lab * ez
                u = np.concatenate([xi + rho_v, w])
                H = lpp * np.outer(u, u)
                d = inst.d
                H[:d, d:] += lp * np.eye(d)
                H[d:, :d] += lp * np.eye(d)
                worst = max(worst, float(np.abs(np.linalg.eigvalsh(H)).max()))
    return worst


def _estimate_pl_ratio(inst: RobustProblem, n_samples: int, rng) -> float:
    # Sampled surrogate for a gradient-growth constant. The robust family's
    # inner problem is convex, not concave, so no true constant exists; this
    # is a nominal estimate for record-keeping, floored away from zero.
    best = math.inf
    for _ in range(max(2, n_samples // 5)):
        x = rng.standard_normal(inst.d)
        ys = [inst.y_constraint.project(rng.standard_normal(inst.p)) for _ in range(8)]
        vals = [inst.global_value(x, y) for y in ys]
        f_best = max(vals)
        for y, val in zip(ys, vals):
            gap = f_best - val
            if gap <= 1e-12:
                continue
            _, gy = inst.global_grad(x, y)
            best = min(best, float(gy @ gy) / (2.0 * gap))
    return max(1e-6, 0.0 if math.isinf(best) else best)
