"""Decide whether q-p correlations can be removed by a passive operation.

Pipeline for a covariance with complex blocks ``(X, Y)``:

1. Takagi-factorize ``Y = Z^† diag(sigma) Z^*``.
2. Form ``M = Z X Z^†``.  The passive operation ``R^† Z`` removes every q-p
   correlation exactly when ``R^† M R`` is real for some diagonal ``R`` with
   entries in ``{1, i}``.
3. Real entries of ``M`` force equal labels on their two modes, imaginary
   entries force different labels, and an entry that is neither rules the
   operation out.  Label consistency is a two-colouring problem solved with
   a parity union-find.

When the singular values are distinct and nonzero, ``Z`` is fixed up to
row signs, which never change an entry's real/imaginary character, so the
answer is exact.  Degenerate or zero singular values leave a continuous
gauge freedom that is searched numerically; that path reports
``UNDETERMINED`` instead of claiming impossibility.
"""

from __future__ import annotations

import enum
import functools
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg, optimize

from .errors import NotHermitian
from .gaussian import (
    PassiveOp,
    QuadCov,
    apply_symplectic,
    as_quadcov,
    cross_corr_norm,
    passive_to_symplectic,
    xy_blocks,
)
from .matcore import TakagiFactorization, dagger, max_abs, takagi


class Relation(enum.Enum):
    SAME = "same"
    DIFFERENT = "different"


class Verdict(enum.Enum):
    DECOUPLED = "decoupled"
    NOT_DECOUPLABLE = "not_decouplable"
    UNDETERMINED = "undetermined"


UNIT, QUARTER = "unit", "quarter"


@dataclass(frozen=True)
class RPhase:
    """Per-mode quadrature relabelling: ``unit`` keeps (q, p), ``quarter`` maps it to (p, -q)."""

    labels: tuple[str, ...]

    @classmethod
    def from_bits(cls, bits) -> "RPhase":
        return cls(tuple(QUARTER if b else UNIT for b in bits))

    @property
    def quarter_modes(self) -> list[int]:
        return [j for j, lab in enumerate(self.labels) if lab == QUARTER]

    def matrix(self) -> np.ndarray:
        return np.diag([1j if lab == QUARTER else 1.0 for lab in self.labels]).astype(complex)


@dataclass
class ParityConstraintGraph:
    n: int
    constraints: list[tuple[int, int, Relation]] = field(default_factory=list)


@dataclass(frozen=True)
class EntryWitness:
    """Entry ``M[j, k]`` that is neither real nor purely imaginary."""

    j: int
    k: int
    value: complex


@dataclass(frozen=True)
class OddCycle:
    """Constraints around a cycle with an odd number of ``DIFFERENT`` edges."""

    constraints: tuple[tuple[int, int, Relation], ...]


class _ParityUnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.parity = [0] * n  # parity relative to parent
        self.rank = [0] * n

    def find(self, x: int) -> tuple[int, int]:
        path = []
        while self.parent[x] != x:
            path.append(x)
            x = self.parent[x]
        root, acc = x, 0
        for node in reversed(path):
            acc ^= self.parity[node]
            self.parity[node] = acc
            self.parent[node] = root
        return root, (self.parity[path[0]] if path else 0)

    def union(self, a: int, b: int, diff: int) -> bool:
        ra, pa = self.find(a)
        rb, pb = self.find(b)
        if ra == rb:
            return (pa ^ pb) == diff
        if self.rank[ra] < self.rank[rb]:
            ra, rb, pa, pb = rb, ra, pb, pa
        self.parent[rb] = ra
        self.parity[rb] = pa ^ pb ^ diff
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True


def classify_entries(M, tol: float | None = None) -> ParityConstraintGraph | EntryWitness:
    """Turn the off-diagonal entries of Hermitian ``M`` into parity constraints.

    Entries of modulus at most ``tol`` are ignored.  If some entry has both a
    real and an imaginary part above ``tol``, the strongest such entry (largest
    ``min(|Re|, |Im|)``) is returned as a witness instead.
    """
    M = np.asarray(M, dtype=complex)
    scale = max(1.0, max_abs(M))
    if M.ndim != 2 or M.shape[0] != M.shape[1] or max_abs(M - dagger(M)) > 1e-10 * scale:
        raise NotHermitian("M must be a Hermitian matrix")
    if tol is None:
        tol = 1e-8 * scale
    n = M.shape[0]
    graph = ParityConstraintGraph(n)
    witness, strength = None, 0.0
    for j in range(n):
        for k in range(j + 1, n):
            v = M[j, k]
            if abs(v) <= tol:
                continue
            re, im = abs(v.real), abs(v.imag)
            if im <= tol:
                graph.constraints.append((j, k, Relation.SAME))
            elif re <= tol:
                graph.constraints.append((j, k, Relation.DIFFERENT))
            elif min(re, im) > strength:
                witness, strength = EntryWitness(j, k, complex(v)), min(re, im)
    return witness if witness is not None else graph


def solve_parity(g: ParityConstraintGraph) -> RPhase | OddCycle:
    """Two-colour the modes; the smallest mode of each component gets ``unit``."""
    uf = _ParityUnionFind(g.n)
    adj: list[list[tuple[int, int, Relation]]] = [[] for _ in range(g.n)]
    for j, k, rel in g.constraints:
        diff = int(rel is Relation.DIFFERENT)
        if not uf.union(j, k, diff):
            return OddCycle(tuple(_tree_path(adj, j, k)) + ((j, k, rel),))
        adj[j].append((j, k, rel))
        adj[k].append((j, k, rel))
    parity = [uf.find(x)[1] for x in range(g.n)]
    root_of = [uf.find(x)[0] for x in range(g.n)]
    anchor: dict[int, int] = {}
    for x in range(g.n):
        anchor.setdefault(root_of[x], parity[x])
    return RPhase.from_bits(parity[x] ^ anchor[root_of[x]] for x in range(g.n))


def _tree_path(adj, start: int, goal: int) -> list[tuple[int, int, Relation]]:
    prev: dict[int, tuple[int, tuple]] = {start: (start, ())}
    queue = deque([start])
    while queue:
        x = queue.popleft()
        if x == goal:
            break
        for edge in adj[x]:
            y = edge[1] if edge[0] == x else edge[0]
            if y not in prev:
                prev[y] = (x, edge)
                queue.append(y)
    path = []
    x = goal
    while x != start:
        x, edge = prev[x]
        path.append(edge)
    return path[::-1]


@dataclass
class DecoupleOptions:
    """Relative tolerances and search budget.

    Tolerances are multiplied by ``max(1, norm)`` of the relevant matrix:
    ``class_tol`` by ``max|ZXZ^†|``, ``out_tol`` and ``success_tol`` by the
    Frobenius norm of the quadrature covariance.
    """

    class_tol: float = 1e-8
    out_tol: float = 1e-8
    success_tol: float = 1e-7
    restarts: int = 32
    enum_limit: int = 12
    maxiter: int = 400
    seed: int = 0
    takagi_method: str = "svd"


@dataclass
class GaugeSearchResult:
    Q: np.ndarray
    rphase: RPhase
    residual: float
    restarts_used: int
    exact: bool = False


@dataclass
class DecoupleReport:
    verdict: Verdict
    sigma: np.ndarray
    degenerate_groups: list[list[int]]
    kernel: list[int]
    Z: np.ndarray
    M: np.ndarray
    E_total: Optional[np.ndarray] = None
    quad_out: Optional[QuadCov] = None
    residual: Optional[float] = None
    rphase: Optional[RPhase] = None
    witness: Optional[EntryWitness] = None
    cycle: Optional[OddCycle] = None
    search: Optional[GaugeSearchResult] = None

    @property
    def decoupled(self) -> bool:
        return self.verdict is Verdict.DECOUPLED

    @property
    def passive_op(self) -> PassiveOp:
        if self.E_total is None:
            raise ValueError("report carries no passive operation")
        return PassiveOp(self.E_total)


def imag_residual(Mp: np.ndarray, rphase: RPhase) -> float:
    """``||Im(R^† M R)||_F``."""
    R = rphase.matrix()
    return float(np.linalg.norm((dagger(R) @ Mp @ R).imag))


def decouple(s: QuadCov, opts: DecoupleOptions | None = None) -> DecoupleReport:
    """Find a passive operation that removes all q-p correlations, if one exists.

    Returns:
        DecoupleReport: ``DECOUPLED`` with ``E_total`` and the transformed
        covariance ``quad_out``; ``NOT_DECOUPLABLE`` with an entry witness or
        an odd constraint cycle (only for distinct nonzero singular values of
        ``Y``); or ``UNDETERMINED`` with the best operation found.
    """
    opts = opts or DecoupleOptions()
    s = as_quadcov(s)
    b = xy_blocks(s)
    fac: TakagiFactorization = takagi(b.Y, method=opts.takagi_method)
    groups, kernel = fac.groups()
    Z = fac.Z
    M = Z @ b.X @ dagger(Z)
    M = 0.5 * (M + dagger(M))
    out_tol = opts.out_tol * max(1.0, float(np.linalg.norm(s.M)))
    report = DecoupleReport(Verdict.UNDETERMINED, fac.sigma, groups, kernel, Z, M)

    if not kernel and all(len(g) == 1 for g in groups):
        cls = classify_entries(M, opts.class_tol * max(1.0, max_abs(M)))
        if isinstance(cls, EntryWitness):
            report.verdict, report.witness = Verdict.NOT_DECOUPLABLE, cls
            return report
        sol = solve_parity(cls)
        if isinstance(sol, OddCycle):
            report.verdict, report.cycle = Verdict.NOT_DECOUPLABLE, sol
            return report
        _finish(report, s, dagger(sol.matrix()) @ Z, sol)
        if report.residual <= out_tol:
            report.verdict = Verdict.DECOUPLED
        return report

    search = degenerate_block_search(M, groups, kernel, opts)
    report.search = search
    _finish(report, s, dagger(search.rphase.matrix()) @ dagger(search.Q) @ Z, search.rphase)
    success_tol = opts.success_tol * max(1.0, float(np.linalg.norm(s.M)))
    if search.residual <= success_tol and report.residual <= out_tol:
        report.verdict = Verdict.DECOUPLED
    return report


def _finish(report: DecoupleReport, s: QuadCov, E: np.ndarray, rphase: RPhase) -> None:
    op = PassiveOp(E)
    report.E_total = op.E
    report.rphase = rphase
    report.quad_out = apply_symplectic(s, passive_to_symplectic(op, s.ordering))
    report.residual = cross_corr_norm(report.quad_out)


# -- degenerate gauge search -------------------------------------------------


@functools.lru_cache(maxsize=None)
def _patterns(n: int) -> tuple[np.ndarray, np.ndarray]:
    """All labellings with mode 0 pinned to unit, and their disagreement masks.

    Pinning is harmless: a global factor ``i`` leaves ``R^† M R`` unchanged.
    """
    m = max(n - 1, 0)
    codes = np.arange(2**m)
    bits = np.hstack([np.zeros((len(codes), 1), dtype=int), (codes[:, None] >> np.arange(m)) & 1])
    differ = (bits[:, :, None] != bits[:, None, :]).reshape(len(codes), n * n).astype(float)
    return bits, differ


def _enumerated_cost(Mp: np.ndarray) -> tuple[float, np.ndarray]:
    """Minimum over all labellings of ``||Im(R^† M R)||_F^2`` and its labelling."""
    bits, differ = _patterns(Mp.shape[0])
    # entry (j, k) costs Im^2 when labels agree and Re^2 when they differ;
    # both sums are nonnegative so nothing cancels
    A = (Mp.imag**2).ravel()
    B = (Mp.real**2).ravel()
    B[:: Mp.shape[0] + 1] = 0.0
    costs = (1.0 - differ) @ A + differ @ B
    best = int(np.argmin(costs))
    return float(costs[best]), bits[best]


def _relaxed_cost(Mp: np.ndarray) -> float:
    m = np.minimum(Mp.imag**2, Mp.real**2)
    np.fill_diagonal(m, 0.0)
    return float(m.sum())


class _GaugeParam:
    """Exponential parameterization of ``Q = (+) SO(g) blocks (+) U(kernel)``."""

    def __init__(self, n: int, groups: list[list[int]], kernel: list[int]):
        self.n = n
        self.real_blocks = [g for g in groups if len(g) > 1]
        self.kernel = kernel
        self.sizes = [len(g) * (len(g) - 1) // 2 for g in self.real_blocks]
        self.size = sum(self.sizes) + len(kernel) ** 2
        self._block_idx = [(np.ix_(g, g), np.triu_indices(len(g), 1)) for g in self.real_blocks]
        self._kernel_idx = np.ix_(kernel, kernel)
        self._kernel_triu = np.triu_indices(len(kernel), 1)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        Q = np.eye(self.n, dtype=complex)
        pos = 0
        for g, m, (block, iu) in zip(self.real_blocks, self.sizes, self._block_idx):
            A = np.zeros((len(g), len(g)))
            A[iu] = x[pos : pos + m]
            Q[block] = linalg.expm(A - A.T)
            pos += m
        k = len(self.kernel)
        if k:
            iu = self._kernel_triu
            m = len(iu[0])
            H = np.zeros((k, k), dtype=complex)
            H[iu] = x[pos : pos + m] + 1j * x[pos + m : pos + 2 * m]
            H = H - dagger(H)
            H[np.diag_indices(k)] = 1j * x[pos + 2 * m : pos + 2 * m + k]
            Q[self._kernel_idx] = linalg.expm(H)
        return Q


def degenerate_block_search(
    M, groups: list[list[int]], kernel: list[int], opts: DecoupleOptions | None = None
) -> GaugeSearchResult:
    """Search the Takagi gauge freedom for a ``Q`` making ``R^† Q^† M Q R`` real.

    ``Q`` ranges over real orthogonal blocks on the degenerate positive groups
    and a unitary block on the kernel.  The objective is the smallest
    ``||Im(R^† Q^† M Q R)||_F`` over labellings ``R`` (all ``2^(n-1)`` of them
    for ``n <= opts.enum_limit``, otherwise a per-entry relaxation that
    lower-bounds it).  Closed-form shortcuts are tried first: ``Q = I``, a
    full kernel (diagonalize ``M``) and a one-dimensional kernel beside
    distinct values (a single phase).  Otherwise Nelder-Mead from
    ``opts.restarts`` seeded starts, each polished by least squares at the
    best labelling; ties go to the earliest restart.
    """
    opts = opts or DecoupleOptions()
    M = np.asarray(M, dtype=complex)
    n = M.shape[0]
    tol = opts.class_tol * max(1.0, max_abs(M))
    eye = np.eye(n, dtype=complex)

    def exact(Q: np.ndarray) -> GaugeSearchResult | None:
        Mp = dagger(Q) @ M @ Q
        sol = classify_entries(0.5 * (Mp + dagger(Mp)), tol)
        if isinstance(sol, ParityConstraintGraph):
            sol = solve_parity(sol)
            if isinstance(sol, RPhase):
                return GaugeSearchResult(Q, sol, imag_residual(Mp, sol), 0, exact=True)
        return None

    res = exact(eye)
    if res is not None:
        return res
    if len(kernel) == n:
        _, W = np.linalg.eigh(M)
        res = exact(W.astype(complex))
        if res is not None:
            return res
    if len(kernel) == 1 and all(len(g) == 1 for g in groups):
        k = kernel[0]
        col = np.delete(M[:, k], k)
        if np.any(np.abs(col) > tol):
            Q = eye.copy()
            # rotate the largest coupling onto the real axis; others follow or fail
            Q[k, k] = np.exp(-1j * np.angle(col[np.argmax(np.abs(col))]))
            res = exact(Q)
            if res is not None:
                return res

    param = _GaugeParam(n, groups, kernel)
    enumerate_all = n <= opts.enum_limit

    def cost(x):
        Q = param(x)
        Mp = dagger(Q) @ M @ Q
        return _enumerated_cost(Mp)[0] if enumerate_all else _relaxed_cost(Mp)

    def evaluate(x) -> tuple[float, np.ndarray, RPhase]:
        Q = param(x)
        Mp = dagger(Q) @ M @ Q
        if enumerate_all:
            r = RPhase.from_bits(_enumerated_cost(Mp)[1])
            return imag_residual(Mp, r), Q, r
        sol = classify_entries(0.5 * (Mp + dagger(Mp)), tol)
        sol = solve_parity(sol) if isinstance(sol, ParityConstraintGraph) else None
        r = sol if isinstance(sol, RPhase) else RPhase((UNIT,) * n)
        return imag_residual(Mp, r), Q, r

    def polish(x, r: RPhase):
        bits = np.array([lab == QUARTER for lab in r.labels])
        iu = np.triu_indices(n, 1)
        differ = bits[iu[0]] != bits[iu[1]]

        def resid(y):
            Q = param(y)
            Mp = (dagger(Q) @ M @ Q)[iu]
            return np.sqrt(2) * np.where(differ, Mp.real, Mp.imag)

        if param.size == 0 or len(iu[0]) == 0:
            return x
        sol = optimize.least_squares(resid, x, method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15)
        return sol.x

    rng = np.random.default_rng(opts.seed)
    stop = 1e-3 * min(opts.success_tol, opts.out_tol)
    best: tuple[float, np.ndarray, RPhase] | None = None
    used = 0
    for i in range(max(1, opts.restarts)):
        used = i + 1
        x0 = np.zeros(param.size) if i == 0 else rng.uniform(-np.pi, np.pi, param.size)
        if param.size:
            x = optimize.minimize(
                cost,
                x0,
                method="Nelder-Mead",
                options={"maxiter": opts.maxiter, "maxfev": 2 * opts.maxiter, "xatol": 1e-8, "fatol": 1e-16},
            ).x
        else:
            x = x0
        cand = evaluate(x)
        x = polish(x, cand[2])
        polished = evaluate(x)
        if polished[0] < cand[0]:
            cand = polished
        if best is None or cand[0] < best[0]:
            best = cand
        if best[0] <= stop or param.size == 0:
            break
    assert best is not None
    return GaugeSearchResult(best[1], best[2], float(best[0]), used)


def is_trivial_gauge(E, tol: float = 1e-8) -> bool:
    """True when ``E`` only permutes modes and relabels quadratures.

    That is, ``E`` is a monomial matrix whose nonzero entries lie in
    ``{+-1, +-i}``: mode swaps and quarter turns ``(q, p) -> (p, -q)``.
    """
    E = np.asarray(E, dtype=complex)
    big = np.abs(E) > 0.5
    if not (np.all(big.sum(axis=0) == 1) and np.all(big.sum(axis=1) == 1)):
        return False
    vals = E[big]
    nearest = np.round(vals.real) + 1j * np.round(vals.imag)
    return bool(
        max_abs(E[~big]) <= tol
        and np.all(np.abs(vals - nearest) <= tol)
        and np.all(np.abs(nearest) == 1)
    )
