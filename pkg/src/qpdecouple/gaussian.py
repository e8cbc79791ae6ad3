"""Covariance matrices of zero-mean Gaussian states.

Units: vacuum quadrature variance is 1/2.  Two quadrature orderings are
supported, ``"interleaved"`` (q1, p1, q2, p2, ...) and ``"grouped"``
(q1, ..., qn, p1, ..., pn); interleaved is the default everywhere.

The complex basis is ``a = (a_1..a_n, a_1^†..a_n^†)`` with
``a_j = (q_j + i p_j)/sqrt(2)``.  In that basis the covariance matrix has the
block form ``[[X, Y], [Y^*, X^*]]`` and a passive operation ``E`` acts as
``(X, Y) -> (E X E^†, E Y E^T)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import ortho_group, unitary_group

from .errors import (
    DimensionMismatch,
    InvalidParameter,
    MalformedInput,
    NonPhysicalStructure,
    NonPositiveParameter,
    NotUnitary,
)
from .matcore import dagger, is_unitary, max_abs

INTERLEAVED = "interleaved"
GROUPED = "grouped"
_ORDERING_ALIASES = {
    "interleaved": INTERLEAVED,
    "qpqp": INTERLEAVED,
    "grouped": GROUPED,
    "qqpp": GROUPED,
}
STRUCTURE_TOL = 1e-10


def normalize_ordering(ordering: str) -> str:
    try:
        return _ORDERING_ALIASES[ordering]
    except KeyError:
        raise MalformedInput(f"unknown quadrature ordering {ordering!r}") from None


def grouped_to_interleaved(n: int) -> np.ndarray:
    """Index array ``perm`` with ``M_interleaved = M_grouped[perm][:, perm]``."""
    perm = np.empty(2 * n, dtype=int)
    perm[0::2] = np.arange(n)
    perm[1::2] = np.arange(n, 2 * n)
    return perm


def _reorder(m: np.ndarray, src: str, dst: str) -> np.ndarray:
    if src == dst:
        return m
    perm = grouped_to_interleaved(m.shape[0] // 2)
    if src == GROUPED:
        return m[np.ix_(perm, perm)]
    inv = np.argsort(perm)
    return m[np.ix_(inv, inv)]


def omega(n: int, ordering: str = INTERLEAVED) -> np.ndarray:
    """Symplectic form; ``[[0, 1], [-1, 0]]`` per mode in interleaved order."""
    w = np.kron(np.eye(n), np.array([[0.0, 1.0], [-1.0, 0.0]]))
    return _reorder(w, INTERLEAVED, normalize_ordering(ordering))


def basis_matrix(n: int, ordering: str = INTERLEAVED) -> np.ndarray:
    """Unitary ``L`` mapping quadratures to ``(a, a^†)``: ``S = L M L^†``."""
    ordering = normalize_ordering(ordering)
    L = np.zeros((2 * n, 2 * n), dtype=complex)
    for j in range(n):
        q, p = (2 * j, 2 * j + 1) if ordering == INTERLEAVED else (j, n + j)
        L[j, q] = L[n + j, q] = 1 / np.sqrt(2)
        L[j, p] = 1j / np.sqrt(2)
        L[n + j, p] = -1j / np.sqrt(2)
    return L


@dataclass(frozen=True)
class QuadCov:
    """Real symmetric ``2n x 2n`` quadrature covariance matrix."""

    M: np.ndarray
    ordering: str = INTERLEAVED

    def __post_init__(self):
        ordering = normalize_ordering(self.ordering)
        m = np.array(self.M, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] % 2 or m.shape[0] == 0:
            raise MalformedInput(f"covariance matrix must be 2n x 2n, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise MalformedInput("covariance matrix has NaN or Inf entries")
        if max_abs(m - m.T) > STRUCTURE_TOL * max(1.0, max_abs(m)):
            raise MalformedInput("covariance matrix is not symmetric")
        m = 0.5 * (m + m.T)
        m.setflags(write=False)
        object.__setattr__(self, "M", m)
        object.__setattr__(self, "ordering", ordering)

    @property
    def n(self) -> int:
        return self.M.shape[0] // 2

    def to(self, ordering: str) -> "QuadCov":
        ordering = normalize_ordering(ordering)
        return QuadCov(_reorder(self.M, self.ordering, ordering), ordering)

    @property
    def interleaved(self) -> np.ndarray:
        return _reorder(self.M, self.ordering, INTERLEAVED)


def as_quadcov(s) -> QuadCov:
    """Accept a :class:`QuadCov` or a bare matrix in interleaved order."""
    return s if isinstance(s, QuadCov) else QuadCov(s)


@dataclass(frozen=True)
class XYBlocks:
    X: np.ndarray
    Y: np.ndarray

    @property
    def n(self) -> int:
        return self.X.shape[0]


@dataclass(frozen=True)
class ComplexCov:
    """Hermitian ``2n x 2n`` covariance in the ``(a, a^†)`` basis."""

    S: np.ndarray

    def __post_init__(self):
        S = np.array(self.S, dtype=complex)
        if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] % 2:
            raise MalformedInput(f"complex covariance must be 2n x 2n, got shape {S.shape}")
        tol = STRUCTURE_TOL * max(1.0, max_abs(S))
        n = S.shape[0] // 2
        X, Y = S[:n, :n], S[:n, n:]
        if (
            max_abs(S - dagger(S)) > tol
            or max_abs(S[n:, n:] - X.conj()) > tol
            or max_abs(S[n:, :n] - Y.conj()) > tol
            or max_abs(Y - Y.T) > tol
        ):
            raise NonPhysicalStructure("matrix lacks the [[X, Y], [Y*, X*]] Hermitian structure")
        object.__setattr__(self, "S", S)

    @property
    def n(self) -> int:
        return self.S.shape[0] // 2

    @property
    def X(self) -> np.ndarray:
        return self.S[: self.n, : self.n]

    @property
    def Y(self) -> np.ndarray:
        return self.S[: self.n, self.n :]

    @property
    def blocks(self) -> XYBlocks:
        return XYBlocks(self.X.copy(), self.Y.copy())

    @classmethod
    def from_blocks(cls, X, Y) -> "ComplexCov":
        X, Y = np.asarray(X, dtype=complex), np.asarray(Y, dtype=complex)
        return cls(np.block([[X, Y], [Y.conj(), X.conj()]]))


@dataclass(frozen=True)
class PassiveOp:
    """Unitary ``E`` acting on annihilation operators, ``a -> E a``."""

    E: np.ndarray

    def __post_init__(self):
        E = np.array(self.E, dtype=complex)
        if E.ndim != 2 or not is_unitary(E):
            raise NotUnitary("passive operation must be a unitary matrix")
        object.__setattr__(self, "E", E)

    @property
    def n(self) -> int:
        return self.E.shape[0]

    def __matmul__(self, other: "PassiveOp") -> "PassiveOp":
        return PassiveOp(self.E @ other.E)


@dataclass(frozen=True)
class SymplecticOp:
    """Real ``2n x 2n`` symplectic matrix; acts on covariances as ``T M T^T``."""

    T: np.ndarray
    ordering: str = INTERLEAVED

    def __post_init__(self):
        T = np.array(self.T, dtype=float)
        ordering = normalize_ordering(self.ordering)
        if T.ndim != 2 or T.shape[0] != T.shape[1] or T.shape[0] % 2:
            raise InvalidParameter(f"symplectic matrix must be 2n x 2n, got shape {T.shape}")
        w = omega(T.shape[0] // 2, ordering)
        if max_abs(T @ w @ T.T - w) > 1e-9 * max(1.0, max_abs(T)) ** 2:
            raise InvalidParameter("matrix is not symplectic")
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "ordering", ordering)

    @property
    def n(self) -> int:
        return self.T.shape[0] // 2

    def to(self, ordering: str) -> "SymplecticOp":
        ordering = normalize_ordering(ordering)
        return SymplecticOp(_reorder(self.T, self.ordering, ordering), ordering)

    def __matmul__(self, other: "SymplecticOp") -> "SymplecticOp":
        return SymplecticOp(self.T @ other.to(self.ordering).T, self.ordering)


def quad_to_complex(s: QuadCov) -> ComplexCov:
    s = as_quadcov(s)
    L = basis_matrix(s.n, s.ordering)
    S = L @ s.M @ dagger(L)
    n = s.n
    # restore exact structure lost to rounding
    X = 0.5 * (S[:n, :n] + dagger(S[:n, :n]))
    Y = 0.5 * (S[:n, n:] + S[:n, n:].T)
    return ComplexCov.from_blocks(X, Y)


def complex_to_quad(c: ComplexCov, ordering: str = INTERLEAVED) -> QuadCov:
    if not isinstance(c, ComplexCov):
        c = ComplexCov(c)
    L = basis_matrix(c.n, ordering)
    m = dagger(L) @ c.S @ L
    if max_abs(m.imag) > STRUCTURE_TOL * max(1.0, max_abs(c.S)):
        raise NonPhysicalStructure("quadrature matrix has an imaginary residue")
    return QuadCov(m.real, ordering)


def xy_blocks(s: QuadCov) -> XYBlocks:
    return quad_to_complex(s).blocks


def quad_from_blocks(b: XYBlocks, ordering: str = INTERLEAVED) -> QuadCov:
    return complex_to_quad(ComplexCov.from_blocks(b.X, b.Y), ordering)


def _as_passive(p) -> PassiveOp:
    return p if isinstance(p, PassiveOp) else PassiveOp(p)


def apply_passive(b: XYBlocks, p: PassiveOp) -> XYBlocks:
    """Transform ``(X, Y) -> (E X E^†, E Y E^T)``."""
    p = _as_passive(p)
    if p.n != b.n:
        raise DimensionMismatch(f"operation acts on {p.n} modes, state has {b.n}")
    E = p.E
    X = E @ b.X @ dagger(E)
    Y = E @ b.Y @ E.T
    return XYBlocks(0.5 * (X + dagger(X)), 0.5 * (Y + Y.T))


def passive_to_symplectic(p: PassiveOp, ordering: str = INTERLEAVED) -> SymplecticOp:
    """Real orthogonal symplectic ``T = L^† diag(E, E^*) L``."""
    p = _as_passive(p)
    L = basis_matrix(p.n, ordering)
    big = np.zeros((2 * p.n, 2 * p.n), dtype=complex)
    big[: p.n, : p.n] = p.E
    big[p.n :, p.n :] = p.E.conj()
    return SymplecticOp((dagger(L) @ big @ L).real, ordering)


def apply_symplectic(s: QuadCov, op: SymplecticOp) -> QuadCov:
    s = as_quadcov(s)
    if op.n != s.n:
        raise DimensionMismatch(f"operation acts on {op.n} modes, state has {s.n}")
    T = op.to(s.ordering).T
    return QuadCov(T @ s.M @ T.T, s.ordering)


def cross_corr_block(s: QuadCov) -> np.ndarray:
    """Matrix ``C`` with ``C[j, k] = cov(q_j, p_k)``."""
    m = as_quadcov(s).interleaved
    return m[0::2, 1::2]


def cross_corr_norm(s: QuadCov) -> float:
    """Largest absolute covariance between any ``q_j`` and any ``p_k``."""
    return max_abs(cross_corr_block(s))


def symplectic_eigenvalues(s: QuadCov) -> np.ndarray:
    s = as_quadcov(s)
    m, w = s.M, omega(s.n, s.ordering)
    evals, evecs = np.linalg.eigh(m)
    if evals.min() > 0:
        root = (evecs * np.sqrt(evals)) @ evecs.T
        nu = np.linalg.eigvalsh(1j * root @ w @ root)
        return np.sort(nu[s.n :])
    # not positive definite: fall back to the general spectrum of i Omega M
    nu = np.sort(np.abs(np.linalg.eigvals(1j * w @ m)))
    return nu[0::2]


def is_physical(s: QuadCov, tol: float = 1e-9) -> bool:
    """Uncertainty principle: positive definite with symplectic spectrum >= 1/2."""
    s = as_quadcov(s)
    if np.linalg.eigvalsh(s.M).min() <= 0:
        return False
    return bool(symplectic_eigenvalues(s).min() >= 0.5 - tol)


# -- elementary operations --------------------------------------------------


def _embed_passive(n: int, modes: Sequence[int], block: np.ndarray) -> PassiveOp:
    if len(set(modes)) != len(modes) or any(not 0 <= m < n for m in modes):
        raise InvalidParameter(f"modes {list(modes)} out of range for {n} modes")
    E = np.eye(n, dtype=complex)
    E[np.ix_(modes, modes)] = block
    return PassiveOp(E)


def phase_shifter(theta: float, mode: int = 0, n: int = 1) -> SymplecticOp:
    """Rotation ``a -> e^{i theta} a``: ``q -> q cos - p sin``, ``p -> q sin + p cos``."""
    return passive_to_symplectic(_embed_passive(n, [mode], np.array([[np.exp(1j * theta)]])))


def beamsplitter(t: float, modes: Sequence[int] = (0, 1), n: int = 2) -> SymplecticOp:
    """Mode mixing ``[[sqrt t, sqrt(1-t)], [-sqrt(1-t), sqrt t]]`` on q and p alike."""
    if not 0.0 <= t <= 1.0:
        raise InvalidParameter(f"transmissivity must lie in [0, 1], got {t}")
    a, b = np.sqrt(t), np.sqrt(1.0 - t)
    return passive_to_symplectic(_embed_passive(n, list(modes), np.array([[a, b], [-b, a]])))


def squeezer(r: float, mode: int = 0, n: int = 1) -> SymplecticOp:
    """Scale the q variance by ``e^{-2r}`` and the p variance by ``e^{2r}``."""
    if not np.isfinite(r):
        raise InvalidParameter("squeezing parameter must be finite")
    if not 0 <= mode < n:
        raise InvalidParameter(f"mode {mode} out of range for {n} modes")
    T = np.eye(2 * n)
    T[2 * mode, 2 * mode] = np.exp(-r)
    T[2 * mode + 1, 2 * mode + 1] = np.exp(r)
    return SymplecticOp(T)


def add_displacement_noise(
    s: QuadCov, mode: int | Sequence[int], quadrature: str, variance: float
) -> QuadCov:
    """Add classical Gaussian displacement noise to one quadrature.

    ``mode`` may be a sequence, in which case the *same* random displacement
    drives that quadrature of every listed mode (fully correlated noise).
    """
    s = as_quadcov(s)
    if variance < 0 or not np.isfinite(variance):
        raise InvalidParameter(f"noise variance must be nonnegative, got {variance}")
    if quadrature not in ("q", "p"):
        raise InvalidParameter(f"quadrature must be 'q' or 'p', got {quadrature!r}")
    modes = [mode] if np.isscalar(mode) else list(mode)
    e = np.zeros(2 * s.n)
    for m in modes:
        if not 0 <= m < s.n:
            raise InvalidParameter(f"mode {m} out of range for {s.n} modes")
        e[2 * m + (quadrature == "p")] = 1.0
    m = s.interleaved + variance * np.outer(e, e)
    return QuadCov(m).to(s.ordering)


# -- fixture states ---------------------------------------------------------

_CCC_LITERAL = 0.5 * np.array(
    [
        [3.0, 0.5, 1.0, 0.0],
        [0.5, 0.75, 0.5, 0.0],
        [1.0, 0.5, 2.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]
)


def vacuum(n: int) -> QuadCov:
    return QuadCov(0.5 * np.eye(2 * n))


def preset_cccstate() -> QuadCov:
    """Two-mode state whose cross-quadrature correlations are locked in by squeezing."""
    return QuadCov(_CCC_LITERAL.copy())


def preset_twomode(m: float, n: float, c: float, s: float) -> QuadCov:
    """Two-mode family with ``X = diag(m, n)`` and ``Y = [[0, c], [c, i s]]``."""
    if min(m, n, c, s) <= 0:
        raise NonPositiveParameter("m, n, c and s must all be positive")
    return QuadCov(
        np.array(
            [
                [m, 0.0, c, 0.0],
                [0.0, m, 0.0, -c],
                [c, 0.0, n, s],
                [0.0, -c, s, n],
            ]
        )
    )


def simulate_cccstate_scheme() -> QuadCov:
    """Prepare the locked-correlation state from vacuum with optical elements.

    One random-number generator (variance 1/2) drives amplitude modulators on
    the q quadrature of both modes.  Mode 1 then passes a pi/4 phase shifter
    and a 3 dB squeezer that halves its p variance and doubles its q variance.
    """
    s = add_displacement_noise(vacuum(2), (0, 1), "q", 0.5)
    s = apply_symplectic(s, phase_shifter(np.pi / 4, 0, 2))
    return apply_symplectic(s, squeezer(-0.5 * np.log(2.0), 0, 2))


def random_passive(n: int, rng: np.random.Generator) -> PassiveOp:
    """Haar-random passive operation."""
    if n == 1:
        return PassiveOp(np.array([[np.exp(2j * np.pi * rng.random())]]))
    return PassiveOp(unitary_group.rvs(n, random_state=rng))


def _squeezed_product(n: int, rng: np.random.Generator) -> np.ndarray:
    r = rng.uniform(-1.0, 1.0, size=n)
    d = np.empty(2 * n)
    d[0::2], d[1::2] = np.exp(-2 * r), np.exp(2 * r)
    return 0.5 * np.diag(d)


def random_pure_state(n: int, seed: int | None = None) -> QuadCov:
    """Squeezed vacua followed by a Haar-random interferometer."""
    if n < 1:
        raise InvalidParameter("n must be positive")
    rng = np.random.default_rng(seed)
    s = QuadCov(_squeezed_product(n, rng))
    return apply_symplectic(s, passive_to_symplectic(random_passive(n, rng)))


def random_state(n: int, seed: int | None = None, decouplable: bool = False) -> QuadCov:
    """Random mixed state: a pure state plus random positive semidefinite noise.

    With ``decouplable=True`` the state is built without any q-p correlation
    (real orthogonal mixing, noise acting on q and p separately) and then
    scrambled by a random passive operation, so the correlations are always
    removable.
    """
    if n < 1:
        raise InvalidParameter("n must be positive")
    rng = np.random.default_rng(seed)
    if not decouplable:
        base = random_pure_state(n, rng.integers(2**32))
        g = rng.normal(scale=0.4, size=(2 * n, 2 * n))
        return QuadCov(base.M + g @ g.T)
    m = _squeezed_product(n, rng)
    o = ortho_group.rvs(n, random_state=rng) if n > 1 else np.eye(1)
    s = apply_symplectic(QuadCov(m), passive_to_symplectic(PassiveOp(o)))
    gq = rng.normal(scale=0.4, size=(n, n))
    gp = rng.normal(scale=0.4, size=(n, n))
    noise = np.zeros((2 * n, 2 * n))
    noise[:n, :n], noise[n:, n:] = gq @ gq.T, gp @ gp.T
    s = QuadCov(s.to(GROUPED).M + noise, GROUPED).to(INTERLEAVED)
    return apply_symplectic(s, passive_to_symplectic(random_passive(n, rng)))
