"""Federated descent-ascent algorithms as state transitions over client and
server states.

One run alternates synchronization steps (every q-th iteration: the server
averages iterates and gradient estimates, regenerates the diagonal
preconditioners, takes one preconditioned interpolated step and broadcasts
everything back) with purely local steps (each client moves with its own
estimates, then refreshes them with one fresh sample using the recursive
variance-reduced rule).

Variants share this skeleton:

    fgda                 identity preconditioners, decaying eta/momentum schedules
    adafgda_adam         preconditioners from accumulated squared averaged gradients
    adafgda_adabelief    preconditioners from squared innovations between syncs
    local_sgda           identity preconditioners, eta = 1, momentum = 1
    momentum_local_sgda  identity preconditioners, eta = 1, heavy-ball estimator

After every synchronization the clients hold bitwise copies of the
broadcast iterates and averaged estimates; this is what makes the
consensus metrics exactly zero on sync records.

Complexity ledger: one local step draws one sample and consumes both of
its partial gradients, counted as 2 stochastic-gradient evaluations per
client; initialization consumes 2q; sync steps sample nothing. Hence
sfo_per_client = 2q + 2(T - floor(T/q)) and comm_rounds = floor(T/q).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, asdict, replace

import numpy as np

from .core import Counters, DiagMatrix, Vector, precondition, vec_mean
from .estimators import (
    MODE_ADABELIEF,
    MODE_ADAM,
    MODE_IDENTITY,
    AdaptiveAccumulator,
    momentum_schedule,
    storm_update,
)
from .metrics import RunTrace, TraceRecorder
from .problems import ProblemInstance, SampleRef, grad_stoch, project_y

VARIANT_FGDA = "fgda"
VARIANT_ADAFGDA_ADAM = "adafgda_adam"
VARIANT_ADAFGDA_ADABELIEF = "adafgda_adabelief"
VARIANT_LOCAL_SGDA = "local_sgda"
VARIANT_MOMENTUM_LOCAL_SGDA = "momentum_local_sgda"
VARIANTS = (
    VARIANT_FGDA,
    VARIANT_ADAFGDA_ADAM,
    VARIANT_ADAFGDA_ADABELIEF,
    VARIANT_LOCAL_SGDA,
    VARIANT_MOMENTUM_LOCAL_SGDA,
)

_MATRIX_MODE = {
    VARIANT_FGDA: MODE_IDENTITY,
    VARIANT_LOCAL_SGDA: MODE_IDENTITY,
    VARIANT_MOMENTUM_LOCAL_SGDA: MODE_IDENTITY,
    VARIANT_ADAFGDA_ADAM: MODE_ADAM,
    VARIANT_ADAFGDA_ADABELIEF: MODE_ADABELIEF,
}

# Variants that run at a fixed unit interpolation weight.
_UNIT_ETA = (VARIANT_LOCAL_SGDA, VARIANT_MOMENTUM_LOCAL_SGDA)


def eta_schedule(n: float, K: int, m: float, t: int) -> float:
    """Decaying interpolation weight n * K^(1/3) / (m + t)^(1/3).

    Nonincreasing in t; stays at or below 1 for all t >= 0 whenever
    m >= K * n^3.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    if K < 1:
        raise ValueError("K must be >= 1")
    if m <= 0:
        raise ValueError("m must be positive")
    if t < 0:
        raise ValueError("t must be nonnegative")
    return n * K ** (1.0 / 3.0) / (m + t) ** (1.0 / 3.0)


@dataclass
class HyperParams:
    """Everything one run needs besides the problem instance.

    eta_const / alpha_const / beta_const pin the schedules to a constant;
    they exist for the reduction identities between variants (local SGDA is
    the unit-constant corner of the main algorithm) and for controlled
    experiments. m >= 2 and rho <= 1 are convergence-theory conditions
    checked by the validator, not construction requirements.
    """

    variant: str = VARIANT_FGDA
    gamma: float = 0.1
    lam: float = 0.1
    eta_n: float = 1.0
    eta_m: float = 10.0
    c1: float = 1.0
    c2: float = 1.0
    q: int = 20
    T: int = 4000
    rho: float = 0.01
    varrho: float = 0.9
    rho_u: float = 1.0
    beta_m: float = 0.9
    tie_varrho_to_momentum: bool = False
    eta_const: float | None = None
    alpha_const: float | None = None
    beta_const: float | None = None
    init_scale: float = 1.0
    y_init_scale: float | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.gamma < 0 or self.lam < 0:
            raise ValueError("gamma and lam must be nonnegative")
        if self.eta_n <= 0 or self.eta_m <= 0:
            raise ValueError("eta_n and eta_m must be positive")
        if self.c1 <= 0 or self.c2 <= 0:
            raise ValueError("c1 and c2 must be positive")
        if self.q < 1 or self.T < 1:
            raise ValueError("q and T must be >= 1")
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        if not 0.0 < self.varrho <= 1.0:
            raise ValueError("varrho must lie in (0, 1]")
        if self.rho_u <= 0:
            raise ValueError("rho_u must be positive")
        if not 0.0 <= self.beta_m < 1.0:
            raise ValueError("beta_m must lie in [0, 1)")
        for name in ("eta_const", "alpha_const", "beta_const"):
            val = getattr(self, name)
            if val is not None and not 0.0 < val <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1]")

    def eta(self, K: int, t: int) -> float:
        if self.variant in _UNIT_ETA:
            return 1.0
        if self.eta_const is not None:
            return self.eta_const
        return eta_schedule(self.eta_n, K, self.eta_m, t)

    def momentum(self, eta_t: float) -> tuple[float, float]:
        """(alpha, beta) used by the estimator refresh after a step at eta_t."""
        if self.variant == VARIANT_LOCAL_SGDA:
            return 1.0, 1.0
        alpha, beta = momentum_schedule(self.c1, self.c2, eta_t)
        if self.alpha_const is not None:
            alpha = self.alpha_const
        if self.beta_const is not None:
            beta = self.beta_const
        return alpha, beta

    def sync_varrho(self, eta_t: float) -> float | None:
        """Per-generation accumulator decay; None means the configured value."""
        if not self.tie_varrho_to_momentum:
            return None
        _, beta = self.momentum(eta_t)
        return 1.0 - beta if beta < 1.0 else None


@dataclass
class ClientState:
    k: int
    x: Vector
    y: Vector
    w: Vector  # x-side gradient estimate
    v: Vector  # y-side gradient estimate
    rng: np.random.Generator = field(repr=False)


@dataclass
class ServerState:
    x_bar: Vector
    y_bar: Vector
    acc: AdaptiveAccumulator
    A: DiagMatrix
    B: DiagMatrix


def _spawn_rngs(seed: int, K: int) -> tuple[list[np.random.Generator], np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(K + 1)
    return [np.random.default_rng(c) for c in children[:K]], np.random.default_rng(children[K])


def init_round(problem: ProblemInstance, hp: HyperParams) -> tuple[list[ClientState], ServerState, Counters]:
    """Set up common iterates, initial full-batch-of-q estimates and the
    first preconditioners.

    Every client averages q stochastic gradients at the shared starting
    point (sampled without replacement), costing 2q gradient evaluations.
    The initial matrices come from the variant's generation rule applied to
    the averaged initial estimates with a zero accumulator (identity for
    the non-adaptive variants).
    """
    K = problem.K
    rngs, _ = _spawn_rngs(hp.seed, K)
    x1 = np.full(problem.d, hp.init_scale, dtype=np.float64)
    y_scale = hp.init_scale if hp.y_init_scale is None else hp.y_init_scale
    y1 = project_y(problem, np.full(problem.p, y_scale, dtype=np.float64))

    clients = []
    for k in range(K):
        n_k = problem.dataset_size(k)
        if hp.q > n_k:
            raise ValueError(f"q={hp.q} exceeds client {k} dataset size {n_k}")
        items = rngs[k].choice(n_k, size=hp.q, replace=False)
        w_acc = np.zeros(problem.d)
        v_acc = np.zeros(problem.p)
        for item in items:
            gx, gy = grad_stoch(problem, k, x1, y1, SampleRef(k, int(item)))
            w_acc += gx
            v_acc += gy
        clients.append(
            ClientState(k=k, x=x1.copy(), y=y1.copy(), w=w_acc / hp.q, v=v_acc / hp.q, rng=rngs[k])
        )

    counters = Counters()
    counters.add_sfo(2 * hp.q)

    acc = AdaptiveAccumulator(mode=_MATRIX_MODE[hp.variant], rho=hp.rho, varrho=hp.varrho)
    w_bar = vec_mean([c.w for c in clients])
    v_bar = vec_mean([c.v for c in clients])
    A, B = acc.generate(w_bar, v_bar, varrho=hp.sync_varrho(hp.eta(K, 0)))
    server = ServerState(x_bar=x1, y_bar=y1, acc=acc, A=A, B=B)
    return clients, server, counters


def local_step(
    problem: ProblemInstance,
    hp: HyperParams,
    t: int,
    client: ClientState,
    A: DiagMatrix,
    B: DiagMatrix,
) -> ClientState:
    """One purely local iteration of a single client.

    Order: preconditioned ascent proposal on y and descent proposal on x,
    interpolated by eta_t (y projected); then one fresh sample refreshes
    both estimates, evaluating the new-point and old-point gradients on the
    same sample.
    """
    if t % hp.q == 0:
        raise ValueError(f"t={t} is a sync index (q={hp.q})")
    k = client.k
    eta_t = hp.eta(problem.K, t)
    alpha, beta = hp.momentum(eta_t)

    y_hat = client.y + hp.lam * precondition(B, client.v)
    y_new = project_y(problem, client.y + eta_t * (y_hat - client.y))
    x_hat = client.x - hp.gamma * precondition(A, client.w)
    x_new = client.x + eta_t * (x_hat - client.x)

    item = int(client.rng.integers(problem.dataset_size(k)))
    xi = SampleRef(k, item)
    gx_new, gy_new = grad_stoch(problem, k, x_new, y_new, xi)

    if hp.variant == VARIANT_MOMENTUM_LOCAL_SGDA:
        w_new = hp.beta_m * client.w + gx_new
        v_new = hp.beta_m * client.v + gy_new
    else:
        gx_old, gy_old = grad_stoch(problem, k, client.x, client.y, xi)
        v_new = storm_update(gy_new, gy_old, client.v, alpha)
        w_new = storm_update(gx_new, gx_old, client.w, beta)

    return ClientState(k=k, x=x_new, y=y_new, w=w_new, v=v_new, rng=client.rng)


def sync_step(
    problem: ProblemInstance,
    hp: HyperParams,
    t: int,
    clients: list[ClientState],
    server: ServerState,
    counters: Counters,
) -> None:
    """One synchronization round, mutating clients, server and counters.

    Averages (v, w, y, x) in fixed client order, regenerates the matrices,
    takes the server's preconditioned interpolated step, and broadcasts the
    new iterates together with the averaged estimates so all clients agree
    bitwise afterwards. No samples are drawn.
    """
    if t % hp.q != 0:
        raise ValueError(f"t={t} is not a sync index (q={hp.q})")
    K = problem.K
    v_bar = vec_mean([c.v for c in clients])
    w_bar = vec_mean([c.w for c in clients])
    y_bar = vec_mean([c.y for c in clients])
    x_bar = vec_mean([c.x for c in clients])

    eta_t = hp.eta(K, t)
    A, B = server.acc.generate(w_bar, v_bar, varrho=hp.sync_varrho(eta_t))

    y_hat = y_bar + hp.lam * precondition(B, v_bar)
    y_next = project_y(problem, y_bar + eta_t * (y_hat - y_bar))
    x_hat = x_bar - hp.gamma * precondition(A, w_bar)
    x_next = x_bar + eta_t * (x_hat - x_bar)

    for c in clients:
        c.x = x_next.copy()
        c.y = y_next.copy()
        c.w = w_bar.copy()
        c.v = v_bar.copy()
    server.x_bar = x_next
    server.y_bar = y_next
    server.A = A
    server.B = B
    counters.add_comm()


def run(problem: ProblemInstance, hp: HyperParams, heavy_cadence: int = 1) -> RunTrace:
    """Execute initialization plus T steps and return the full trace.

    Also draws one uniformly random step index (the single-iterate output
    rule); analyses here use the full trace, the sampled index is reported
    alongside.
    """
    t_start = time.perf_counter()
    clients, server, counters = init_round(problem, hp)
    config_echo = {"problem": problem.describe().replace("\n", ";"), **asdict(hp)}
    recorder = TraceRecorder(problem, config_echo, heavy_cadence=heavy_cadence)

    _, out_rng = _spawn_rngs(hp.seed, problem.K)
    final_index = int(out_rng.integers(1, hp.T + 1))
    sampled_iterate = None

    for t in range(1, hp.T + 1):
        if t % hp.q == 0:
            sync_step(problem, hp, t, clients, server, counters)
            x_bar, y_bar = server.x_bar, server.y_bar
            is_sync = True
        else:
            for i in range(len(clients)):
                clients[i] = local_step(problem, hp, t, clients[i], server.A, server.B)
            counters.add_sfo(2)
            counters.local_steps += 1
            x_bar = vec_mean([c.x for c in clients])
            y_bar = vec_mean([c.y for c in clients])
            is_sync = False
        recorder.record(t, is_sync, hp.q, clients, counters, x_bar, y_bar)
        if t == final_index:
            sampled_iterate = (x_bar.copy(), y_bar.copy())

    return recorder.finish(
        final_index,
        time.perf_counter() - t_start,
        final_iterate=(x_bar.copy(), y_bar.copy()),
        sampled_iterate=sampled_iterate,
    )


def baseline_momentum_local_sgda(problem: ProblemInstance, hp: HyperParams, heavy_cadence: int = 1) -> RunTrace:
    """Local SGDA with heavy-ball estimator buffers on the same
    sync/broadcast skeleton. A faithful-in-spirit reimplementation of the
    standard momentum baseline, not a reproduction of any specific one."""
    return run(problem, replace(hp, variant=VARIANT_MOMENTUM_LOCAL_SGDA), heavy_cadence=heavy_cadence)
