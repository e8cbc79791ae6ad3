"""Dense complex-matrix helpers and the Autonne-Takagi factorization.

Convention used throughout the package: a complex symmetric ``Y`` is
factorized as

.. math::  Y = Z^\\dagger \\operatorname{diag}(\\sigma) Z^*

with ``Z`` unitary and ``sigma`` the singular values of ``Y`` sorted in
descending order.  Equivalently ``W = Z^\\dagger`` satisfies
``Y = W diag(sigma) W^T`` (the form found in most textbooks).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import NonFinite, NonSymmetric, SigmaMismatch

SYMMETRY_TOL = 1e-10
RECONSTRUCTION_TOL = 1e-9
DEGENERACY_TOL = 1e-8
GAUGE_TOL = 1e-8
NEGLIGIBLE = 1e-13


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def as_complex_square(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a finite square complex array or raise."""
    arr = np.array(a, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise NonSymmetric(f"{name} must be a non-empty square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFinite(f"{name} has NaN or Inf entries")
    return arr


def max_abs(a: np.ndarray) -> float:
    return float(np.max(np.abs(a))) if a.size else 0.0


def unitarity_defect(u: np.ndarray) -> float:
    """``max |U U^dagger - I|``."""
    u = np.asarray(u)
    return max_abs(u @ dagger(u) - np.eye(u.shape[0]))


def is_unitary(u: np.ndarray, tol: float | None = None) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    if tol is None:
        tol = 1e-10 * u.shape[0]
    return unitarity_defect(u) <= tol


def degeneracy_tolerance(sigma) -> float:
    sigma = np.asarray(sigma, dtype=float)
    smax = float(sigma.max()) if sigma.size else 0.0
    return DEGENERACY_TOL * max(1.0, smax)


def group_singular_values(sigma, tol: float | None = None) -> tuple[list[list[int]], list[int]]:
    """Partition indices of descending ``sigma`` into degenerate groups.

    Values at or below ``tol`` form the kernel.  The remaining values are
    clustered by single linkage on neighbouring gaps, so a run of values
    whose consecutive differences are all within ``tol`` shares one group.

    Returns:
        tuple: ``(groups, kernel)`` where ``groups`` lists the index groups of
        positive singular values and ``kernel`` the indices treated as zero.
    """
    sigma = np.asarray(sigma, dtype=float)
    if tol is None:
        tol = degeneracy_tolerance(sigma)
    order = sorted(range(len(sigma)), key=lambda i: (-sigma[i], i))
    kernel = sorted(i for i in order if sigma[i] <= tol)
    groups: list[list[int]] = []
    prev = None
    for i in order:
        if sigma[i] <= tol:
            continue
        if prev is not None and abs(sigma[prev] - sigma[i]) <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
        prev = i
    return [sorted(g) for g in groups], kernel


@dataclass(frozen=True)
class TakagiFactorization:
    """Unitary ``Z`` and descending ``sigma`` with ``Y = Z^† diag(sigma) Z^*``."""

    Z: np.ndarray
    sigma: np.ndarray

    @property
    def n(self) -> int:
        return self.Z.shape[0]

    def reconstruct(self) -> np.ndarray:
        w = dagger(self.Z)
        return (w * self.sigma) @ w.T

    def residual(self, Y) -> float:
        """Frobenius reconstruction error ``||Y - Z^† diag(sigma) Z^*||_F``."""
        return float(np.linalg.norm(np.asarray(Y) - self.reconstruct()))

    def groups(self, tol: float | None = None) -> tuple[list[list[int]], list[int]]:
        return group_singular_values(self.sigma, tol)


def _symmetric_unitary_sqrt(c: np.ndarray) -> np.ndarray:
    # principal root of a symmetric unitary is a polynomial in it, hence symmetric
    if c.shape == (1, 1):
        return np.sqrt(c.astype(complex))
    b = linalg.sqrtm(c)
    return 0.5 * (b + b.T)


def _takagi_embedding(Y: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Takagi vectors from the real symmetric embedding ``[[A, B], [B, -A]]``.

    For ``Y = A + iB`` and eigenpair ``(s, [x; y])`` of the embedding,
    ``w = x + iy`` obeys ``Y w^* = s w``.  Eigenvalues come in ``+-s`` pairs;
    the positive half gives complex-orthonormal columns.  The kernel is
    completed with an orthonormal basis of the complement.

    Returns ``(W, s)`` with ``Y ~= W diag(s) W^T`` and ``s`` descending.
    """
    n = Y.shape[0]
    a, b = Y.real, Y.imag
    h = np.block([[a, b], [b, -a]])
    vals, vecs = np.linalg.eigh(h)
    vals, vecs = vals[::-1], vecs[:, ::-1]
    r = int(np.sum(vals[:n] > tol))
    w_pos = vecs[:n, :r] + 1j * vecs[n:, :r]
    if r < n:
        w_ker = linalg.null_space(dagger(w_pos)) if r else np.eye(n, dtype=complex)
        w = np.hstack([w_pos, w_ker])
    else:
        w = w_pos
    s = np.concatenate([vals[:r], np.zeros(n - r)])
    return w, s


def _takagi_svd(Y: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    u, s, vh = np.linalg.svd(Y)
    order = sorted(range(len(s)), key=lambda i: (-s[i], i))
    u, s, vh = u[:, order], s[order], vh[order, :]
    groups, kernel = group_singular_values(s, tol)
    if kernel:
        groups = groups + [kernel]
    w = np.empty_like(u)
    for g in groups:
        ug = u[:, g]
        # U_g and V_g^* span the same subspace; C couples the two bases
        c = vh[g, :] @ ug.conj()
        wg = ug @ _symmetric_unitary_sqrt(c)
        if len(g) > 1:
            # near-degenerate clusters are not exactly scalar: finish the
            # small block exactly so reconstruction does not pick up the spread
            block = dagger(wg) @ Y @ wg.conj()
            block = 0.5 * (block + block.T)
            if max_abs(block - np.diag(np.diag(block).real)) > 1e-15 * max(1.0, s[g[0]]):
                wb, _ = _takagi_embedding(block, 1e-14 * max(1.0, s[g[0]]))
                wg = wg @ wb
        w[:, g] = wg
    return w, s


def takagi(Y, method: str = "svd") -> TakagiFactorization:
    """Autonne-Takagi factorization of a complex symmetric matrix.

    Args:
        Y (array[complex]): square complex symmetric matrix.
        method (str): ``"svd"`` (default) phase-corrects an SVD, absorbing a
            symmetric unitary square root within each degenerate block;
            ``"eigh"`` diagonalizes the real symmetric ``2n x 2n`` embedding.
            Both satisfy the same postconditions and serve as cross-checks.

    Returns:
        TakagiFactorization: ``Z`` unitary and descending ``sigma`` with
        ``Y = Z^† diag(sigma) Z^*``.

    Raises:
        NonFinite: ``Y`` has NaN/Inf entries.
        NonSymmetric: ``Y`` is not square or ``Y - Y^T`` exceeds tolerance.
    """
    Y = as_complex_square(Y, "Y")
    n = Y.shape[0]
    scale = max(1.0, max_abs(Y))
    if max_abs(Y - Y.T) > SYMMETRY_TOL * scale:
        raise NonSymmetric(f"Y is not symmetric (defect {max_abs(Y - Y.T):.3e})")
    Y = 0.5 * (Y + Y.T)
    s_ref = np.linalg.svd(Y, compute_uv=False)
    if s_ref[0] <= NEGLIGIBLE:
        # rounding noise only: keep the identity rather than an arbitrary kernel basis
        return TakagiFactorization(np.eye(n, dtype=complex), s_ref)
    tol = degeneracy_tolerance(s_ref)
    if method == "svd":
        w, _ = _takagi_svd(Y, tol)
        sigma = np.sort(s_ref)[::-1]
    elif method == "eigh":
        w, s = _takagi_embedding(Y, tol)
        r = int(np.sum(s > 0))
        if r < n:
            # the kernel basis is arbitrary; resolve the tiny residual values inside it
            wk = w[:, r:]
            block = dagger(wk) @ Y @ wk.conj()
            block = 0.5 * (block + block.T)
            if np.any(block):
                wb, _ = _takagi_embedding(block, 0.0)
                w[:, r:] = wk @ wb
        sigma = np.sort(s_ref)[::-1]
        sigma[:r] = s[:r]
    else:
        raise ValueError(f"unknown takagi method {method!r}")
    w = linalg.polar(w)[0]
    return TakagiFactorization(Z=dagger(w), sigma=np.asarray(sigma, dtype=float))


def takagi_equivalent(
    f1: TakagiFactorization, f2: TakagiFactorization, Y, tol: float = GAUGE_TOL
) -> bool:
    """True iff two factorizations of ``Y`` differ by an allowed gauge.

    ``Q = Z1 Z2^†`` must be block diagonal over the degenerate groups of the
    singular values, with real orthogonal blocks on positive groups and an
    arbitrary unitary block on the kernel.  For distinct nonzero values this
    means ``Q = diag(+-1)``.
    """
    s1 = np.sort(np.asarray(f1.sigma, dtype=float))[::-1]
    s2 = np.sort(np.asarray(f2.sigma, dtype=float))[::-1]
    if s1.shape != s2.shape or np.max(np.abs(s1 - s2)) > 1e-8 * max(1.0, s1.max(initial=0.0)):
        raise SigmaMismatch("factorizations have different singular values")
    Y = np.asarray(Y, dtype=complex)
    ytol = 1e-8 * max(1.0, float(np.linalg.norm(Y)))
    if f1.residual(Y) > ytol or f2.residual(Y) > ytol:
        return False

    q = f1.Z @ dagger(f2.Z)
    groups, kernel = group_singular_values(f1.sigma)
    blocks = groups + ([kernel] if kernel else [])
    mask = np.zeros(q.shape, dtype=bool)
    for g in blocks:
        mask[np.ix_(g, g)] = True
    if max_abs(q[~mask]) > tol:
        return False
    return all(max_abs(q[np.ix_(g, g)].imag) <= tol for g in groups)
