"""Problem data, the two factorization variants, objective and surrogate evaluation.

The objective being minimized is

    F(U, V) = ||W . (M - U V^T)||_1 + R_u(U) + R_v(V)

over factors U (m x r) and V (n x r), where W is a 0/1 mask of observed
entries and "." is the entrywise product. The two variants differ in the
regularizers and the constraint set:

  * low-rank recovery:  R_u = lambda_u/2 ||U||_F^2, R_v = lambda_v/2 ||V||_F^2,
    unconstrained;
  * robust NMF:         R_u = lambda_u/2 ||U||_F^2, R_v = lambda_v ||V||_1,
    with U >= 0 and V >= 0.

At an anchor (U_k, V_k) the convex surrogate in the increment (dU, dV) is

    G(dU, dV) = ||W . (M - U_k V_k^T - dU V_k^T - U_k dV^T)||_1
                + R_u(U_k + dU) + R_v(V_k + dV)
                + rho_u/2 ||dU||_F^2 + rho_v/2 ||dV||_F^2,

which majorizes F(U_k + dU, V_k + dV) everywhere once rho_u and rho_v reach
the mask-derived bounds returned by :func:`rho_bounds`.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DimensionMismatch, EmptyMask, InfeasibleFactors
from .kernels import masked_l1

Array = np.ndarray


class Variant(Enum):
    """Regularizer/constraint combination of the factorization model."""

    LOW_RANK_RECOVERY = "lrmr"
    ROBUST_NMF = "nmf"


def _as_matrix(a, name: str) -> Array:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-d, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class MaskedMatrix:
    """Observed matrix plus its 0/1 mask; unobserved values are stored as 0.

    Observed entries must be finite. An all-zero mask is representable (files
    may contain one) but is rejected wherever a solve would be vacuous.
    """

    values: Array
    mask: Array

    def __post_init__(self):
        values = _as_matrix(self.values, "values")
        mask = _as_matrix(self.mask, "mask")
        if values.shape != mask.shape:
            raise DimensionMismatch(f"values {values.shape} vs mask {mask.shape}")
        if not np.all((mask == 0.0) | (mask == 1.0)):
            raise ValueError("mask entries must be 0 or 1")
        observed = mask == 1.0
        if not np.all(np.isfinite(values[observed])):
            raise ValueError("observed entries must be finite")
        object.__setattr__(self, "values", np.where(observed, values, 0.0))
        object.__setattr__(self, "mask", mask.astype(float))

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def observed_count(self) -> int:
        return int(self.mask.sum())


@dataclass(frozen=True)
class FactorPair:
    """Factor iterate (U, V) with U of shape (m, r) and V of shape (n, r)."""

    u: Array
    v: Array

    def __post_init__(self):
        u = _as_matrix(self.u, "u")
        v = _as_matrix(self.v, "v")
        if u.shape[1] != v.shape[1]:
            raise DimensionMismatch(f"factor ranks differ: {u.shape} vs {v.shape}")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise ValueError("factor entries must be finite")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @property
    def rank(self) -> int:
        return self.u.shape[1]

    def product(self) -> Array:
        return self.u @ self.v.T

    def step_sq(self, other: "FactorPair") -> float:
        """Squared Euclidean distance over both stacked factors."""
        du = self.u - other.u
        dv = self.v - other.v
        return float(np.sum(du * du) + np.sum(dv * dv))


@dataclass(frozen=True)
class RmfProblem:
    """Model variant plus rank and regularizer weights."""

    variant: Variant
    rank: int
    lambda_u: float
    lambda_v: float

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be >= 1")
        if self.lambda_u < 0 or self.lambda_v < 0:
            raise ValueError("regularizer weights must be >= 0")

    def regularizer(self, factors: FactorPair) -> float:
        ru = 0.5 * self.lambda_u * float(np.sum(factors.u * factors.u))
        if self.variant is Variant.ROBUST_NMF:
            rv = self.lambda_v * float(np.sum(np.abs(factors.v)))
        else:
            rv = 0.5 * self.lambda_v * float(np.sum(factors.v * factors.v))
        return ru + rv

    def check_feasible(self, factors: FactorPair, exc=InfeasibleFactors) -> None:
        if self.variant is Variant.ROBUST_NMF:
            if np.any(factors.u < 0.0) or np.any(factors.v < 0.0):
                raise exc("nonnegative factors required")


@dataclass(frozen=True)
class SurrogateParams:
    """Proximal weights of the surrogate and their mask-derived upper bounds."""

    rho_u: float
    rho_v: float
    rho_u_bar: float
    rho_v_bar: float
    epsilon_margin: float = 1e-3

    def __post_init__(self):
        if self.epsilon_margin <= 0:
            raise ValueError("epsilon_margin must be positive")
        if not (0.0 < self.rho_u <= self.rho_u_bar):
            raise ValueError(f"rho_u {self.rho_u} outside (0, {self.rho_u_bar}]")
        if not (0.0 < self.rho_v <= self.rho_v_bar):
            raise ValueError(f"rho_v {self.rho_v} outside (0, {self.rho_v_bar}]")


def rho_bounds(mask: Array, epsilon_margin: float = 1e-3) -> tuple[float, float]:
    """Proximal-weight bounds that make the surrogate a global majorant.

    Returns (max observed count over rows + margin,
             max observed count over columns + margin).
    """
    if epsilon_margin <= 0:
        raise ValueError("epsilon_margin must be positive")
    mask = _as_matrix(mask, "mask")
    if not np.any(mask):
        raise EmptyMask("mask has no observed entries")
    row_max = float(mask.sum(axis=1).max())
    col_max = float(mask.sum(axis=0).max())
    return row_max + epsilon_margin, col_max + epsilon_margin


def _check_factor_shapes(data: MaskedMatrix, factors: FactorPair) -> None:
    m, n = data.shape
    if factors.u.shape[0] != m or factors.v.shape[0] != n:
        raise DimensionMismatch(
            f"factors {factors.u.shape} x {factors.v.shape} vs data {data.shape}"
        )


def objective(problem: RmfProblem, data: MaskedMatrix, factors: FactorPair) -> float:
    """F(U, V): masked l1 residual plus regularizers."""
    _check_factor_shapes(data, factors)
    problem.check_feasible(factors)
    residual = data.values - factors.product()
    return masked_l1(data.mask, residual) + problem.regularizer(factors)


def surrogate_value(
    problem: RmfProblem,
    data: MaskedMatrix,
    anchor: FactorPair,
    increment: tuple[Array, Array],
    params: SurrogateParams,
) -> float:
    """G(dU, dV) at the given anchor; equals the objective when dU = dV = 0."""
    _check_factor_shapes(data, anchor)
    du = np.asarray(increment[0], dtype=float)
    dv = np.asarray(increment[1], dtype=float)
    if du.shape != anchor.u.shape or dv.shape != anchor.v.shape:
        raise DimensionMismatch(
            f"increment {du.shape} x {dv.shape} vs anchor "
            f"{anchor.u.shape} x {anchor.v.shape}"
        )
    moved = FactorPair(anchor.u + du, anchor.v + dv)
    problem.check_feasible(moved)
    linearized = data.values - anchor.product() - du @ anchor.v.T - anchor.u @ dv.T
    g_hat = masked_l1(data.mask, linearized) + problem.regularizer(moved)
    prox = 0.5 * params.rho_u * float(np.sum(du * du))
    prox += 0.5 * params.rho_v * float(np.sum(dv * dv))
    return g_hat + prox


@dataclass(frozen=True)
class InnerProblem:
    """Constrained splitting of one surrogate minimization.

    minimize ||W . E||_1 + rho_u/2 ||dU||_F^2 + R_u(U_k + dU)
             + rho_v/2 ||dV||_F^2 + R_v(V_k + dV)   (+ nonnegativity for NMF)
    subject to E + dU V_k^T + U_k dV^T = rhs,  rhs = M - U_k V_k^T.

    The right-hand side is dense; residuals at unobserved entries are free
    because the l1 term only sees masked entries.
    """

    variant: Variant
    anchor: FactorPair
    mask: Array
    rhs: Array
    rho_u: float
    rho_v: float
    lambda_u: float
    lambda_v: float

    @property
    def shape(self) -> tuple[int, int]:
        return self.rhs.shape


def build_inner_problem(
    problem: RmfProblem,
    data: MaskedMatrix,
    anchor: FactorPair,
    params: SurrogateParams,
) -> InnerProblem:
    _check_factor_shapes(data, anchor)
    rhs = data.values - anchor.product()
    return InnerProblem(
        variant=problem.variant,
        anchor=anchor,
        mask=data.mask,
        rhs=rhs,
        rho_u=params.rho_u,
        rho_v=params.rho_v,
        lambda_u=problem.lambda_u,
        lambda_v=problem.lambda_v,
    )
