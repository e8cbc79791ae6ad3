"""Brute-force cross-check: minimize q-p correlations over all passive operations.

Each restart draws a Haar-random passive operation ``B`` and searches
``U(x) B`` where ``U(x)`` is a triangular mesh of two-mode rotations with
phases followed by a layer of output phases (``n^2`` real angles, identity at
``x = 0``).  A Levenberg-Marquardt solve drives the q-p block to zero in the
least-squares sense.  When that leaves a nonzero floor, an SLSQP solve of the
epigraph problem lowers the max-norm itself.  The reported floor is the max-norm of the q-p block, recomputed in
the quadrature basis.
"""

from __future__ import annotations

import cmath
import functools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .decoupler import DecoupleOptions, Verdict, decouple
from .errors import InvalidDimension, InvalidParameter
from .gaussian import (
    PassiveOp,
    QuadCov,
    apply_symplectic,
    as_quadcov,
    cross_corr_norm,
    passive_to_symplectic,
    random_passive,
    xy_blocks,
)

MAX_MODES = 6


@dataclass
class OracleResult:
    min_residual: float
    best_E: PassiveOp
    restarts_used: int


@functools.lru_cache(maxsize=None)
def _mesh_pairs(n: int) -> tuple[tuple[int, int], ...]:
    return tuple((i - 1, i) for j in range(n - 1) for i in range(n - 1, j, -1))


def mesh_unitary(x: np.ndarray, n: int) -> np.ndarray:
    """Unitary from ``n^2`` angles: ``(theta, phi)`` per mesh cell, then ``n`` phases."""
    U = np.eye(n, dtype=complex)
    for c, (a, b) in enumerate(_mesh_pairs(n)):
        th, ph = x[2 * c], x[2 * c + 1]
        ect = cmath.exp(1j * ph) * math.cos(th)
        est = cmath.exp(1j * ph) * math.sin(th)
        ct, st = math.cos(th), math.sin(th)
        ra, rb = U[a].copy(), U[b]
        U[a] = ect * ra - st * rb
        U[b] = est * ra + ct * rb
    return np.exp(1j * x[n * (n - 1) :])[:, None] * U


def _qp_block(E: np.ndarray, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    # cov(q_j, p_k) = Im Y'_jk - Im X'_jk in the rotated frame
    return (E @ Y @ E.T).imag - (E @ X @ E.conj().T).imag


def oracle_min_residual(
    s: QuadCov,
    restarts: int = 16,
    seed: int = 0,
    warm_start: PassiveOp | None = None,
    maxiter: int = 2000,
    tol: float = 1e-10,
    jobs: int = 1,
    minimax: bool = True,
) -> OracleResult:
    """Numerically minimize ``cross_corr_norm`` over passive operations.

    Args:
        s: covariance matrix, at most ``MAX_MODES`` modes.
        restarts: number of random starting points.  The sequence is fixed by
            the seed and the search stops early once the floor reaches
            ``tol``, so more restarts never give a worse floor.
        warm_start: optional passive operation tried as an extra first start.
        maxiter: function-evaluation budget of each local solve.
        jobs: restarts evaluated concurrently; the merge is deterministic.
        minimax: finish each restart with the epigraph solve.  Without it the
            floor is that of the least-squares optimum, which is exact when
            the true floor is zero but may overstate a positive one.

    Raises:
        InvalidDimension: more than ``MAX_MODES`` modes.
    """
    s = as_quadcov(s)
    n = s.n
    if n > MAX_MODES:
        raise InvalidDimension(f"oracle is limited to {MAX_MODES} modes, got {n}")
    if restarts < 1:
        raise InvalidParameter("restarts must be at least 1")
    b = xy_blocks(s)
    X, Y = b.X, b.Y
    rng = np.random.default_rng(seed)
    starts: list[np.ndarray] = []
    if warm_start is not None:
        starts.append(np.asarray(getattr(warm_start, "E", warm_start), dtype=complex))
    starts += [random_passive(n, rng).E for _ in range(restarts)]

    def run(base: np.ndarray) -> tuple[float, np.ndarray]:
        def resid(x):
            return _qp_block(mesh_unitary(x, n) @ base, X, Y).ravel()

        # the mesh is the identity at x = 0, so every start is the base unitary
        x = optimize.least_squares(
            resid, np.zeros(n * n), method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=maxiter
        ).x
        floor = float(np.max(np.abs(resid(x))))
        if minimax and floor > tol:
            # the least-squares optimum need not minimize the max-norm: finish
            # with the epigraph form  min t  s.t.  |C_jk(x)| <= t
            def bounds(z):
                r = resid(z[:-1])
                return np.concatenate([z[-1] - r, z[-1] + r])

            def bounds_jac(z):
                J = optimize.approx_fprime(z[:-1], resid, 1.5e-8)
                ones = np.ones((J.shape[0], 1))
                return np.vstack([np.hstack([-J, ones]), np.hstack([J, ones])])

            z = optimize.minimize(
                lambda z: z[-1],
                np.append(x, floor),
                jac=lambda z: np.eye(len(z))[-1],
                method="SLSQP",
                constraints=[{"type": "ineq", "fun": bounds, "jac": bounds_jac}],
                options={"maxiter": 200, "ftol": 1e-14},
            ).x
            cand = float(np.max(np.abs(resid(z[:-1]))))
            if cand < floor:
                x, floor = z[:-1], cand
        return floor, mesh_unitary(x, n) @ base

    # restarts are consumed in order and the search stops at the first one
    # that reaches ``tol``, so the floor never increases with more restarts
    results: list[tuple[float, np.ndarray]] = []
    batch = max(1, jobs)
    pool = ThreadPoolExecutor(max_workers=jobs) if jobs > 1 else None
    try:
        for i in range(0, len(starts), batch):
            chunk = starts[i : i + batch]
            results += list(pool.map(run, chunk)) if pool else [run(c) for c in chunk]
            hit = [k for k, r in enumerate(results) if r[0] <= tol]
            if hit:
                results = results[: hit[0] + 1]
                break
    finally:
        if pool:
            pool.shutdown()
    best = min(range(len(results)), key=lambda i: (results[i][0], i))
    E = PassiveOp(results[best][1])
    floor = cross_corr_norm(apply_symplectic(s, passive_to_symplectic(E, s.ordering)))
    return OracleResult(floor, E, len(results))


@dataclass
class AgreementReport:
    verdict: Verdict
    decoupler_residual: float | None
    oracle_residual: float
    threshold: float
    agree: bool

    @property
    def status(self) -> str:
        tag = {
            Verdict.DECOUPLED: "Decoupled",
            Verdict.NOT_DECOUPLABLE: "NotDecouplable",
            Verdict.UNDETERMINED: "Undetermined",
        }[self.verdict]
        return f"{'agree' if self.agree else 'disagree'}-{tag}"


def oracle_agreement(
    s: QuadCov,
    opts: DecoupleOptions | None = None,
    restarts: int = 64,
    seed: int = 0,
) -> AgreementReport:
    """Compare the decoupler verdict with an independent oracle run.

    The oracle is *not* warm-started here, so a ``DECOUPLED`` verdict is only
    confirmed if the oracle finds a decorrelating operation on its own.  Both
    thresholds ask whether the floor is essentially zero, which the
    least-squares stage settles, so the minimax finish is skipped.
    Disagreement: ``DECOUPLED`` with oracle floor above ``10 * tau_out``, or
    ``NOT_DECOUPLABLE`` with floor below ``tau_out``.  ``UNDETERMINED`` never
    disagrees.
    """
    opts = opts or DecoupleOptions()
    s = as_quadcov(s)
    rep = decouple(s, opts)
    orc = oracle_min_residual(s, restarts=restarts, seed=seed, minimax=False)
    tau = opts.out_tol * max(1.0, float(np.linalg.norm(s.M)))
    if rep.verdict is Verdict.DECOUPLED:
        agree = orc.min_residual <= 10 * tau
    elif rep.verdict is Verdict.NOT_DECOUPLABLE:
        agree = orc.min_residual >= tau
    else:
        agree = True
    return AgreementReport(rep.verdict, rep.residual, orc.min_residual, tau, agree)
