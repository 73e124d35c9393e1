"""Outer majorization-minimization loop with locally/globally majorant schedules.

Each outer iteration minimizes the convex surrogate at the current anchor via
the LADMPSAP inner solver and applies the increment. In the globally majorant
schedule the proximal weights (rho_u, rho_v) stay at their mask-derived upper
bounds; in the locally majorant schedule they start small and double whenever
the accepted increment would violate F(x+) <= G(x+), re-solving within the
same outer iteration. Either way the objective trace is nonincreasing up to a
slack of 1e-10 * |f(x0)|.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyTrace,
    InfeasibleDirection,
    InfeasibleInit,
    NonFiniteInnerState,
    NonFiniteObjective,
)
from .ladmpsap import InnerConfig, InnerState, cold_start, solve_inner
from .model import (
    FactorPair,
    MaskedMatrix,
    RmfProblem,
    SurrogateParams,
    build_inner_problem,
    objective,
    rho_bounds,
    surrogate_value,
)

DESCENT_SLACK_REL = 1e-10
LMMM_RHO_START_FRACTION = 1e-2
LMMM_RHO_FLOOR = 1e-3
LMMM_RHO_GROWTH = 2.0


class MmMode(Enum):
    """Surrogate schedule: prox weights pinned at their bounds, or grown on demand."""

    GLOBALLY_MAJORANT = "gmmm"
    LOCALLY_MAJORANT = "lmmm"


@dataclass(frozen=True)
class TraceEntry:
    """One outer step x_k -> x_{k+1}; the final entry of a trace has step_sq 0."""

    iteration: int
    objective: float
    step_sq: float
    surrogate: float
    rho_u: float
    rho_v: float
    inner_iterations: int
    wall_ms: float


@dataclass
class DescentTrace:
    entries: list[TraceEntry] = field(default_factory=list)
    converged: bool = False

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def iterations(self) -> int:
        """Number of accepted outer steps."""
        return self.entries[-1].iteration if self.entries else 0

    def objectives(self) -> np.ndarray:
        return np.array([e.objective for e in self.entries])

    def step_sqs(self) -> np.ndarray:
        return np.array([e.step_sq for e in self.entries])


@dataclass(frozen=True)
class IterationReport:
    """Streamed to `on_iteration`: the freshly accepted iterate and step stats."""

    iteration: int
    factors: FactorPair
    objective: float
    rel_change: float
    rho_u: float
    rho_v: float
    inner_iterations: int
    elapsed_ms: float


@dataclass(frozen=True)
class MajorizationCertificate:
    """Outcome of sampling the two-sided quadratic envelope around an anchor."""

    gamma_u: float
    gamma_l: float
    epsilon_radius: float
    holds: bool


def run_mm(
    problem: RmfProblem,
    data: MaskedMatrix,
    init: FactorPair,
    mode: MmMode,
    tol: float = 1e-4,
    max_outer: int = 500,
    inner_config: Optional[InnerConfig] = None,
    epsilon_margin: float = 1e-3,
    on_iteration: Optional[Callable[[IterationReport], None]] = None,
) -> tuple[FactorPair, DescentTrace]:
    """Run the outer loop until the relative objective change drops below `tol`.

    Returns the final iterate and the full descent trace. `on_iteration` is
    called once for the initial point (iteration 0) and once after each
    accepted outer step; everything it sees is already committed, so writing
    trace rows from it is safe.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_outer < 1:
        raise ValueError("max_outer must be >= 1")
    m, n = data.shape
    if init.u.shape != (m, problem.rank) or init.v.shape != (n, problem.rank):
        raise DimensionMismatch(
            f"init {init.u.shape} x {init.v.shape} vs data {data.shape} rank {problem.rank}"
        )
    problem.check_feasible(init, exc=InfeasibleInit)

    rho_u_bar, rho_v_bar = rho_bounds(data.mask, epsilon_margin)
    if mode is MmMode.GLOBALLY_MAJORANT:
        rho_u, rho_v = rho_u_bar, rho_v_bar
    else:
        rho_u = min(max(LMMM_RHO_START_FRACTION * rho_u_bar, LMMM_RHO_FLOOR), rho_u_bar)
        rho_v = min(max(LMMM_RHO_START_FRACTION * rho_v_bar, LMMM_RHO_FLOOR), rho_v_bar)
    config = inner_config or InnerConfig.for_variant(problem.variant, m, n)

    trace = DescentTrace()
    x = init
    f_cur = objective(problem, data, x)
    if not math.isfinite(f_cur):
        raise NonFiniteObjective("objective is non-finite at the initial point", trace)
    slack = DESCENT_SLACK_REL * abs(f_cur)
    if on_iteration is not None:
        on_iteration(IterationReport(0, x, f_cur, 0.0, rho_u, rho_v, 0, 0.0))

    warm: Optional[InnerState] = None
    steps = 0
    for k in range(max_outer):
        t0 = time.perf_counter()
        rejected = False
        while True:
            params = SurrogateParams(rho_u, rho_v, rho_u_bar, rho_v_bar, epsilon_margin)
            inner = build_inner_problem(problem, data, x, params)
            if warm is None:
                start = cold_start(inner, config)
            else:
                start = InnerState(warm.e, warm.du, warm.dv, warm.y, config.beta0)
            try:
                result = solve_inner(inner, start, config)
            except NonFiniteInnerState as err:
                raise NonFiniteObjective(str(err), trace) from err
            du, dv = result.state.du, result.state.dv
            candidate = FactorPair(x.u + du, x.v + dv)
            g_val = surrogate_value(problem, data, x, (du, dv), params)
            f_new = objective(problem, data, candidate)
            if not (math.isfinite(f_new) and math.isfinite(g_val)):
                raise NonFiniteObjective("candidate objective is non-finite", trace)

            majorant_ok = mode is MmMode.GLOBALLY_MAJORANT or f_new <= g_val + slack
            descent_ok = f_new <= f_cur + slack
            if majorant_ok and descent_ok:
                break
            at_cap = rho_u >= rho_u_bar and rho_v >= rho_v_bar
            if mode is MmMode.GLOBALLY_MAJORANT or at_cap:
                # No room to tighten the surrogate; keep the current iterate.
                rejected = True
                break
            rho_u = min(LMMM_RHO_GROWTH * rho_u, rho_u_bar)
            rho_v = min(LMMM_RHO_GROWTH * rho_v, rho_v_bar)
            # Restart the increments, keep the residual/multiplier estimates.
            warm = InnerState(
                result.state.e, np.zeros_like(du), np.zeros_like(dv), result.state.y, config.beta0
            )
        if rejected:
            trace.converged = True
            break
        elapsed_ms = (time.perf_counter() - t0) * 1e3
        step_sq = candidate.step_sq(x)
        trace.entries.append(
            TraceEntry(k, f_cur, step_sq, g_val, rho_u, rho_v, result.iterations, elapsed_ms)
        )
        rel_change = abs(f_cur - f_new) / max(abs(f_cur), 1.0)
        x, f_cur = candidate, f_new
        warm = result.state
        steps = k + 1
        if on_iteration is not None:
            on_iteration(
                IterationReport(
                    steps, x, f_cur, rel_change, rho_u, rho_v, result.iterations, elapsed_ms
                )
            )
        if rel_change < tol:
            trace.converged = True
            break
    trace.entries.append(TraceEntry(steps, f_cur, 0.0, f_cur, rho_u, rho_v, 0, 0.0))
    return x, trace


def check_sufficient_descent(trace: DescentTrace) -> float:
    """Largest alpha with f(x_k) - f(x_{k+1}) >= alpha * ||x_k - x_{k+1}||^2.

    Pairs with a zero step are skipped; +inf when every step is zero.
    """
    if len(trace.entries) < 2:
        raise EmptyTrace("need at least two trace entries")
    alpha = math.inf
    for prev, nxt in zip(trace.entries, trace.entries[1:]):
        if prev.step_sq > 0.0:
            alpha = min(alpha, (prev.objective - nxt.objective) / prev.step_sq)
    return alpha


def _axpy(x, t: float, d):
    if isinstance(x, FactorPair):
        return FactorPair(x.u + t * d.u, x.v + t * d.v)
    if isinstance(x, tuple):
        return tuple(a + t * b for a, b in zip(x, d))
    return x + t * d


def _sq_dist(a, b) -> float:
    if isinstance(a, FactorPair):
        return a.step_sq(b)
    if isinstance(a, tuple):
        return float(sum(np.sum((np.asarray(p) - np.asarray(q)) ** 2) for p, q in zip(a, b)))
    return float(np.sum((np.asarray(a) - np.asarray(b)) ** 2))


def check_asymptotic_smoothness(
    f_eval: Callable,
    g_eval: Callable,
    anchor,
    directions: Sequence,
    theta_grid: Sequence[float],
    feasible: Optional[Callable] = None,
) -> float:
    """Largest directional-derivative gap between objective and surrogate.

    Each one-sided derivative is approximated by the smallest forward
    difference (h(x + theta d) - h(x)) / theta over the strictly decreasing
    positive grid, matching a liminf from above.
    """
    thetas = list(theta_grid)
    if not thetas or any(t <= 0 for t in thetas):
        raise ValueError("theta_grid must contain positive values")
    if any(a <= b for a, b in zip(thetas, thetas[1:])):
        raise ValueError("theta_grid must be strictly decreasing")
    f0 = f_eval(anchor)
    g0 = g_eval(anchor)
    worst = 0.0
    for d in directions:
        if feasible is not None and not feasible(_axpy(anchor, 1.0, d)):
            raise InfeasibleDirection("anchor + direction leaves the feasible set")
        df = min((f_eval(_axpy(anchor, t, d)) - f0) / t for t in thetas)
        dg = min((g_eval(_axpy(anchor, t, d)) - g0) / t for t in thetas)
        worst = max(worst, abs(df - dg))
    return worst


def certify_majorization(
    f_eval: Callable,
    g_hat_eval: Callable,
    anchor,
    gamma_u: float,
    gamma_l: float,
    epsilon_radius: float,
    samples: Sequence,
) -> MajorizationCertificate:
    """Sample the two-sided envelope g_hat +/- gamma ||x - anchor||^2 around `anchor`.

    Only samples within `epsilon_radius` of the anchor are inspected; `holds`
    reports whether g_hat + gamma_u d^2 >= f >= g_hat - gamma_l d^2 at every
    one of them (with a 1e-9-scale float slack).
    """
    if gamma_u < 0 or gamma_l < 0:
        raise ValueError("gamma bounds must be nonnegative")
    if epsilon_radius <= 0:
        raise ValueError("epsilon_radius must be positive")
    holds = True
    for x in samples:
        d_sq = _sq_dist(x, anchor)
        if d_sq > epsilon_radius * epsilon_radius:
            continue
        f_x = f_eval(x)
        g_x = g_hat_eval(x)
        pad = 1e-9 * max(1.0, abs(f_x))
        if g_x + gamma_u * d_sq < f_x - pad or f_x < g_x - gamma_l * d_sq - pad:
            holds = False
            break
    return MajorizationCertificate(gamma_u, gamma_l, epsilon_radius, holds)
