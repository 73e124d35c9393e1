"""Dense-matrix primitives: proximal operators, masked norms, spectral norm, truncated SVD.

Matrices are plain float64 numpy arrays throughout; there is no wrapper type.
"""
from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, NegativeGamma, RankTooLarge

Array = np.ndarray


def shrink(x, gamma: float):
    """Soft threshold S_g(x) = max(|x|-g, 0)*sgn(x), the prox of g*|.|.

    Works on scalars and arrays elementwise.
    """
    if gamma < 0:
        raise NegativeGamma(f"shrinkage threshold must be >= 0, got {gamma}")
    return np.sign(x) * np.maximum(np.abs(x) - gamma, 0.0)


def shrink_positive(x, gamma: float):
    """One-sided threshold max(x-g, 0), the prox of g*x + indicator(x >= 0)."""
    if gamma < 0:
        raise NegativeGamma(f"shrinkage threshold must be >= 0, got {gamma}")
    return np.maximum(x - gamma, 0.0)


def masked_l1(mask: Array, residual: Array) -> float:
    """Sum of |residual| over entries where mask == 1."""
    mask = np.asarray(mask)
    residual = np.asarray(residual)
    if mask.shape != residual.shape:
        raise DimensionMismatch(f"mask {mask.shape} vs residual {residual.shape}")
    return float(np.sum(mask * np.abs(residual)))


def spectral_norm(a: Array, tol: float = 1e-6, max_iter: int = 200, seed: int = 0) -> float:
    """Largest singular value of `a` by power iteration on the smaller Gram matrix.

    Deterministic for a given seed. A zero matrix yields 0.0. If the start
    vector happens to be annihilated by the Gram matrix, draws a fresh one
    once before giving up.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise DimensionMismatch(f"expected a 2-d array, got shape {a.shape}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not np.any(a):
        return 0.0
    m, n = a.shape
    gram = a.T @ a if n <= m else a @ a.T
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(gram.shape[0])
    x /= np.linalg.norm(x)
    restarted = False
    sigma = 0.0
    sigma_prev = -1.0
    for _ in range(max_iter):
        y = gram @ x
        norm_y = np.linalg.norm(y)
        if norm_y == 0.0:
            if restarted:
                return 0.0
            x = rng.standard_normal(gram.shape[0])
            x /= np.linalg.norm(x)
            restarted = True
            continue
        sigma = float(np.sqrt(max(x @ y, 0.0)))  # Rayleigh quotient, ||x|| = 1
        x = y / norm_y
        if sigma_prev >= 0.0 and abs(sigma - sigma_prev) <= tol * max(sigma, 1e-300):
            break
        sigma_prev = sigma
    return sigma


def truncated_svd_init(masked, r: int, seed: int = 0):
    """Rank-r factor initialization from the top-r SVD of the zero-filled data.

    Runs orthogonal (block power) iteration on a 2r-dimensional subspace with
    Rayleigh-Ritz extraction, then splits the singular values symmetrically:
    returns factors (U_r s^(1/2), V_r s^(1/2)) whose product is the best
    rank-r Frobenius approximation of ``masked.values``.
    """
    from .model import FactorPair

    a = np.asarray(masked.values, dtype=float)
    m, n = a.shape
    if r < 1 or r > min(m, n):
        raise RankTooLarge(f"rank {r} not in [1, {min(m, n)}]")
    p = min(2 * r, min(m, n))
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((n, p)))
    ritz_vectors = None
    ritz_values = None
    prev = None
    for _ in range(500):
        q, _ = np.linalg.qr(a.T @ (a @ q))
        b = a @ q
        lam, s = np.linalg.eigh(b.T @ b)  # ascending
        order = np.argsort(lam)[::-1][:r]
        ritz_values = np.maximum(lam[order], 0.0)
        ritz_vectors = q @ s[:, order]
        if prev is not None:
            # ||P_new - P_old||_F via the cross-Gram trick
            cross = ritz_vectors.T @ prev
            gap = np.sqrt(max(0.0, 2.0 * r - 2.0 * float(np.sum(cross * cross))))
            if gap <= 1e-8:
                break
        prev = ritz_vectors
    sig = np.sqrt(ritz_values)
    left = a @ ritz_vectors
    safe = np.where(sig > 0.0, sig, 1.0)
    left = np.where(sig > 0.0, left / safe, 0.0)
    root = np.sqrt(sig)
    return FactorPair(left * root, ritz_vectors * root)
