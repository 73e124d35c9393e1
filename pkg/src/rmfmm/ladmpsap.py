"""Inner solver: linearized alternating direction with parallel splitting and adaptive penalty.

Solves the constrained splitting built by :func:`rmfmm.model.build_inner_problem`:

    min ||W . E||_1 + (rho_u/2 ||dU||^2 + R_u(U_k + dU) + constraints)
                    + (rho_v/2 ||dV||^2 + R_v(V_k + dV) + constraints)
    s.t. E + dU V_k^T + U_k dV^T = B,   B = M - U_k V_k^T.

Each iteration updates E, dU, dV in parallel from the shared multiplier
estimate  Yhat = Y + beta * (constraint violation), then advances the
multiplier Y and the penalty beta. The per-block proximal weights are
sigma_j = eta_j * beta with

    eta_e = 3 + eps,  eta_u = 3 ||V_k||_2^2 + eps,  eta_v = 3 ||U_k||_2^2 + eps,

where 3 is the number of parallel blocks and ||.||_2 the spectral norm.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonFiniteInnerState
from .kernels import shrink, shrink_positive, spectral_norm
from .model import InnerProblem, Variant

Array = np.ndarray

ETA_EPS = 1e-6
DENOM_FLOOR = 1e-12
_SPECTRAL_SEED = 0


@dataclass
class InnerState:
    """Solver variables carried across iterations and warm starts."""

    e: Array
    du: Array
    dv: Array
    y: Array
    beta: float

    def copy(self) -> "InnerState":
        return InnerState(self.e.copy(), self.du.copy(), self.dv.copy(), self.y.copy(), self.beta)


@dataclass(frozen=True)
class InnerConfig:
    """Stopping thresholds and penalty schedule."""

    eps1: float
    eps2: float
    rho0: float
    beta_max: float
    beta0: float
    max_inner: int = 500

    def __post_init__(self):
        if self.eps1 <= 0 or self.eps2 <= 0:
            raise ValueError("stopping thresholds must be positive")
        if self.rho0 < 1:
            raise ValueError("rho0 must be >= 1")
        if not (0 < self.beta0 <= self.beta_max):
            raise ValueError("beta0 must lie in (0, beta_max]")
        if self.max_inner < 1:
            raise ValueError("max_inner must be >= 1")

    @staticmethod
    def for_variant(variant: Variant, m: int, n: int, max_inner: int = 500) -> "InnerConfig":
        if variant is Variant.ROBUST_NMF:
            eps1, rho0 = 1e-4, 3.0
        else:
            eps1, rho0 = 1e-5, 1.5
        return InnerConfig(
            eps1=eps1,
            eps2=1e-4,
            rho0=rho0,
            beta_max=1e10,
            beta0=(m + n) * eps1,
            max_inner=max_inner,
        )


@dataclass(frozen=True)
class StepSizes:
    """Linearization coefficients; per-iteration prox weights are eta * beta."""

    eta_e: float
    eta_u: float
    eta_v: float

    def sigmas(self, beta: float) -> tuple[float, float, float]:
        return self.eta_e * beta, self.eta_u * beta, self.eta_v * beta


def compute_step_sizes(inner: InnerProblem) -> StepSizes:
    norm_v = spectral_norm(inner.anchor.v, seed=_SPECTRAL_SEED)
    norm_u = spectral_norm(inner.anchor.u, seed=_SPECTRAL_SEED)
    return StepSizes(
        eta_e=3.0 + ETA_EPS,
        eta_u=3.0 * norm_v * norm_v + ETA_EPS,
        eta_v=3.0 * norm_u * norm_u + ETA_EPS,
    )


def cold_start(inner: InnerProblem, config: InnerConfig) -> InnerState:
    """Feasible start: E = B, dU = dV = 0, Y = 0."""
    m, n = inner.shape
    r = inner.anchor.rank
    return InnerState(
        e=inner.rhs.copy(),
        du=np.zeros((m, r)),
        dv=np.zeros((n, r)),
        y=np.zeros((m, n)),
        beta=config.beta0,
    )


def constraint_residual(e: Array, du: Array, dv: Array, inner: InnerProblem) -> Array:
    return e + du @ inner.anchor.v.T + inner.anchor.u @ dv.T - inner.rhs


def multiplier_estimate(state: InnerState, inner: InnerProblem) -> Array:
    """Yhat = Y + beta * (current constraint violation)."""
    return state.y + state.beta * constraint_residual(state.e, state.du, state.dv, inner)


def update_e(state: InnerState, y_hat: Array, sigma_e: float, mask_bool: Array) -> Array:
    """Prox step on E: soft-threshold observed entries, pass the rest through."""
    z = state.e - y_hat / sigma_e
    return np.where(mask_bool, shrink(z, 1.0 / sigma_e), z)


def update_du(state: InnerState, y_hat: Array, inner: InnerProblem, sigma_u: float) -> Array:
    """Closed-form prox step on dU.

    Low-rank recovery: (-lambda_u U_k + sigma_u dU - Yhat V_k) / (lambda_u + sigma_u + rho_u).
    NMF: project the unconstrained minimizer of the same quadratic onto
    U_k + dU >= 0; the result keeps the shifted factor exactly nonnegative.
    """
    u_k = inner.anchor.u
    grad = y_hat @ inner.anchor.v
    denom = inner.lambda_u + sigma_u + inner.rho_u
    if inner.variant is Variant.LOW_RANK_RECOVERY:
        return (-inner.lambda_u * u_k + sigma_u * state.du - grad) / denom
    target = np.maximum(((sigma_u + inner.rho_u) * u_k + sigma_u * state.du - grad) / denom, 0.0)
    du = target - u_k
    return np.where(u_k + du < 0.0, -u_k, du)


def update_dv(state: InnerState, y_hat: Array, inner: InnerProblem, sigma_v: float) -> Array:
    """Closed-form prox step on dV.

    Low-rank recovery mirrors :func:`update_du`. NMF applies the one-sided
    threshold lambda_v / (rho_v + sigma_v) to the quadratic minimizer,
    handling the l1 penalty and the nonnegativity of V_k + dV in one step.
    """
    v_k = inner.anchor.v
    grad = y_hat.T @ inner.anchor.u
    if inner.variant is Variant.LOW_RANK_RECOVERY:
        denom = inner.lambda_v + sigma_v + inner.rho_v
        return (-inner.lambda_v * v_k + sigma_v * state.dv - grad) / denom
    weight = inner.rho_v + sigma_v
    z = ((weight * v_k) + sigma_v * state.dv - grad) / weight
    target = shrink_positive(z, inner.lambda_v / weight)
    dv = target - v_k
    return np.where(v_k + dv < 0.0, -v_k, dv)


def variable_change(new: InnerState, prev: InnerState, sizes: StepSizes) -> float:
    """max_j sqrt(eta_j) ||x_j_new - x_j_old||_F across the three blocks."""
    return max(
        math.sqrt(sizes.eta_e) * float(np.linalg.norm(new.e - prev.e)),
        math.sqrt(sizes.eta_u) * float(np.linalg.norm(new.du - prev.du)),
        math.sqrt(sizes.eta_v) * float(np.linalg.norm(new.dv - prev.dv)),
    )


def update_multiplier_and_beta(
    state: InnerState,
    residual: Array,
    change: float,
    config: InnerConfig,
    denom: float,
) -> tuple[Array, float]:
    """Advance Y along the constraint violation and grow beta when steps stall."""
    y_new = state.y + state.beta * residual
    rho = config.rho0 if state.beta * change / denom < config.eps1 else 1.0
    return y_new, min(config.beta_max, rho * state.beta)


def check_stop(
    new: InnerState,
    prev: InnerState,
    inner: InnerProblem,
    sizes: StepSizes,
    config: InnerConfig,
    denom: float,
) -> tuple[bool, bool]:
    """(variables stalled, constraint met); the solver stops when both hold.

    Uses the penalty that was in effect while `new` was produced, i.e.
    ``prev.beta``.
    """
    crit1 = prev.beta * variable_change(new, prev, sizes) / denom
    crit2 = float(np.linalg.norm(constraint_residual(new.e, new.du, new.dv, inner))) / denom
    return crit1 < config.eps1, crit2 < config.eps2


@dataclass
class InnerResult:
    """Final state, iterations used, and whether both stop rules fired."""

    state: InnerState
    iterations: int
    converged: bool


def solve_inner(inner: InnerProblem, warm: InnerState, config: InnerConfig) -> InnerResult:
    """Iterate the parallel prox updates from `warm` until both stop rules hold.

    On hitting ``config.max_inner`` the state with the smallest constraint
    residual seen so far is returned with ``converged=False``.
    """
    m, n = inner.shape
    r = inner.anchor.rank
    if warm.e.shape != (m, n) or warm.du.shape != (m, r) or warm.dv.shape != (n, r):
        raise DimensionMismatch("warm-start state does not match the inner problem")
    sizes = compute_step_sizes(inner)
    mask_bool = inner.mask.astype(bool)
    denom = float(np.linalg.norm(inner.rhs))
    if denom == 0.0:
        denom = DENOM_FLOOR

    state = warm.copy()
    best_state = state
    best_crit2 = math.inf
    for i in range(config.max_inner):
        beta = state.beta
        sigma_e, sigma_u, sigma_v = sizes.sigmas(beta)
        y_hat = multiplier_estimate(state, inner)
        e_new = update_e(state, y_hat, sigma_e, mask_bool)
        du_new = update_du(state, y_hat, inner, sigma_u)
        dv_new = update_dv(state, y_hat, inner, sigma_v)

        change = max(
            math.sqrt(sizes.eta_e) * float(np.linalg.norm(e_new - state.e)),
            math.sqrt(sizes.eta_u) * float(np.linalg.norm(du_new - state.du)),
            math.sqrt(sizes.eta_v) * float(np.linalg.norm(dv_new - state.dv)),
        )
        residual = constraint_residual(e_new, du_new, dv_new, inner)
        crit1 = beta * change / denom
        crit2 = float(np.linalg.norm(residual)) / denom
        if not (np.isfinite(crit1) and np.isfinite(crit2)):
            raise NonFiniteInnerState(f"inner iterate became non-finite at iteration {i + 1}")

        y_new = state.y + beta * residual
        rho = config.rho0 if crit1 < config.eps1 else 1.0
        state = InnerState(e_new, du_new, dv_new, y_new, min(config.beta_max, rho * beta))

        if crit2 < best_crit2:
            best_crit2 = crit2
            best_state = state
        if crit1 < config.eps1 and crit2 < config.eps2:
            return InnerResult(state, i + 1, True)
    return InnerResult(best_state, config.max_inner, False)
