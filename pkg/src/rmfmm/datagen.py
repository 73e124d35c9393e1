"""Seeded synthetic factorization instances and the evaluation metrics.

All randomness comes from numpy's default PCG64 generator seeded per spec, so
bundles are bit-reproducible across platforms. Draw order is fixed: factors,
factor sparsification (NMF), outlier positions, outlier values, missing
positions.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyMask, InvalidFraction
from .kernels import masked_l1
from .model import FactorPair, MaskedMatrix, Variant

Array = np.ndarray


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for one synthetic instance.

    Outliers REPLACE clean entry values at uniformly drawn positions, before
    the mask is drawn; the two position sets are independent, so an entry may
    be both corrupted and hidden. Counts are exact: round(fraction * total).
    """

    kind: Variant
    m: int
    n: int
    r: int
    outlier_fraction: float = 0.0
    outlier_range: tuple[float, float] = (-10.0, 10.0)
    missing_fraction: float = 0.0
    sparsity_fraction: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if min(self.m, self.n, self.r) < 1 or self.r > min(self.m, self.n):
            raise ValueError(f"bad dimensions m={self.m} n={self.n} r={self.r}")
        if not 0.0 <= self.outlier_fraction <= 1.0:
            raise InvalidFraction(f"outlier_fraction {self.outlier_fraction} not in [0, 1]")
        if not 0.0 <= self.missing_fraction < 1.0:
            raise InvalidFraction(f"missing_fraction {self.missing_fraction} not in [0, 1)")
        if not 0.0 <= self.sparsity_fraction <= 1.0:
            raise InvalidFraction(f"sparsity_fraction {self.sparsity_fraction} not in [0, 1]")
        if self.outlier_range[0] > self.outlier_range[1]:
            raise ValueError(f"empty outlier range {self.outlier_range}")

    @staticmethod
    def recovery_defaults(m: int = 500, n: int = 500, r: int = 10, seed: int = 0) -> "SyntheticSpec":
        """Gaussian factors, 40% outliers on [-10, 10], 80% missing."""
        return SyntheticSpec(
            kind=Variant.LOW_RANK_RECOVERY,
            m=m,
            n=n,
            r=r,
            outlier_fraction=0.4,
            outlier_range=(-10.0, 10.0),
            missing_fraction=0.8,
            seed=seed,
        )

    @staticmethod
    def nmf_defaults(m: int = 500, n: int = 500, r: int = 10, seed: int = 0) -> "SyntheticSpec":
        """Uniform(0,1) factors, 30% of V zeroed, 40% outliers on [0, 10], nothing missing."""
        return SyntheticSpec(
            kind=Variant.ROBUST_NMF,
            m=m,
            n=n,
            r=r,
            outlier_fraction=0.4,
            outlier_range=(0.0, 10.0),
            missing_fraction=0.0,
            sparsity_fraction=0.3,
            seed=seed,
        )


@dataclass(frozen=True)
class GroundTruthBundle:
    data: MaskedMatrix
    true_factors: FactorPair
    outlier_positions: Array  # sorted flat indices into the m*n grid


def generate(spec: SyntheticSpec) -> GroundTruthBundle:
    """Materialize a bundle; a pure function of the spec (seed included)."""
    rng = np.random.default_rng(spec.seed)
    if spec.kind is Variant.ROBUST_NMF:
        u0 = rng.uniform(size=(spec.m, spec.r))
        v0 = rng.uniform(size=(spec.n, spec.r))
        zeroed = round(spec.sparsity_fraction * v0.size)
        if zeroed:
            v0.flat[rng.choice(v0.size, zeroed, replace=False)] = 0.0
    else:
        u0 = rng.standard_normal((spec.m, spec.r))
        v0 = rng.standard_normal((spec.n, spec.r))
    values = u0 @ v0.T

    total = spec.m * spec.n
    n_out = round(spec.outlier_fraction * total)
    if n_out:
        positions = np.sort(rng.choice(total, n_out, replace=False))
        values.flat[positions] = rng.uniform(*spec.outlier_range, size=n_out)
    else:
        positions = np.empty(0, dtype=int)

    mask = np.ones((spec.m, spec.n))
    n_missing = round(spec.missing_fraction * total)
    if n_missing:
        mask.flat[rng.choice(total, n_missing, replace=False)] = 0.0

    return GroundTruthBundle(
        data=MaskedMatrix(values, mask),
        true_factors=FactorPair(u0, v0),
        outlier_positions=positions,
    )


def ground_truth_error(est: FactorPair, truth: FactorPair) -> float:
    """||U_e V_e^T - U_0 V_0^T||_1 / (m n); invariant to the factorization chosen."""
    if est.u.shape[0] != truth.u.shape[0] or est.v.shape[0] != truth.v.shape[0]:
        raise DimensionMismatch(
            f"estimate {est.u.shape} x {est.v.shape} vs truth {truth.u.shape} x {truth.v.shape}"
        )
    diff = est.product() - truth.product()
    return float(np.abs(diff).sum()) / diff.size


def observed_error(est: FactorPair, data: MaskedMatrix) -> float:
    """||W . (U_e V_e^T - M)||_1 / #observed."""
    m, n = data.shape
    if est.u.shape[0] != m or est.v.shape[0] != n:
        raise DimensionMismatch(f"estimate {est.u.shape} x {est.v.shape} vs data {data.shape}")
    count = data.observed_count
    if count == 0:
        raise EmptyMask("no observed entries to evaluate against")
    return masked_l1(data.mask, est.product() - data.values) / count
