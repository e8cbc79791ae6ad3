"""Beamsplitter and phase-shifter networks for passive unitaries.

A :class:`Network` lists elements in the order light meets them, so the
realized unitary is ``U = U_last @ ... @ U_first``.  Beamsplitters act on
their two modes as ``[[sqrt t, sqrt(1-t)], [-sqrt(1-t), sqrt t]]`` and phase
shifters multiply one mode by ``e^{i theta}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import InvalidElement, NotUnitary
from .gaussian import PassiveOp
from .matcore import is_unitary


@dataclass(frozen=True)
class PhaseShifter:
    mode: int
    theta: float

    def matrix(self) -> np.ndarray:
        return np.array([[np.exp(1j * self.theta)]])

    @property
    def modes(self) -> tuple[int, ...]:
        return (self.mode,)


@dataclass(frozen=True)
class Beamsplitter:
    mode_a: int
    mode_b: int
    t: float

    def matrix(self) -> np.ndarray:
        a, b = np.sqrt(self.t), np.sqrt(1.0 - self.t)
        return np.array([[a, b], [-b, a]], dtype=complex)

    @property
    def modes(self) -> tuple[int, ...]:
        return (self.mode_a, self.mode_b)


Element = Union[PhaseShifter, Beamsplitter]


@dataclass
class Network:
    n: int
    elements: list[Element] = field(default_factory=list)

    def count(self, kind: type) -> int:
        return sum(isinstance(e, kind) for e in self.elements)

    def to_dict(self) -> dict:
        out = []
        for e in self.elements:
            if isinstance(e, PhaseShifter):
                out.append({"type": "phase", "mode": e.mode, "theta": float(e.theta)})
            else:
                out.append({"type": "beamsplitter", "modes": [e.mode_a, e.mode_b], "t": float(e.t)})
        return {"n": self.n, "elements": out}

    @classmethod
    def from_dict(cls, d: dict) -> "Network":
        elements: list[Element] = []
        for e in d["elements"]:
            if e["type"] == "phase":
                elements.append(PhaseShifter(int(e["mode"]), float(e["theta"])))
            elif e["type"] == "beamsplitter":
                a, b = e["modes"]
                elements.append(Beamsplitter(int(a), int(b), float(e["t"])))
            else:
                raise InvalidElement(f"unknown element type {e['type']!r}")
        return cls(int(d["n"]), elements)


def _check_element(e: Element, n: int) -> None:
    if not isinstance(e, (PhaseShifter, Beamsplitter)):
        raise InvalidElement(f"not a network element: {e!r}")
    modes = e.modes
    if len(set(modes)) != len(modes) or any(not 0 <= m < n for m in modes):
        raise InvalidElement(f"element {e} addresses modes outside 0..{n - 1}")
    if isinstance(e, Beamsplitter) and not 0.0 <= e.t <= 1.0:
        raise InvalidElement(f"transmissivity {e.t} outside [0, 1]")
    if isinstance(e, PhaseShifter) and not np.isfinite(e.theta):
        raise InvalidElement("phase must be finite")


def reassemble(net: Network) -> PassiveOp:
    """Multiply out a network into its unitary."""
    U = np.eye(net.n, dtype=complex)
    for e in net.elements:
        _check_element(e, net.n)
        idx = list(e.modes)
        U[idx, :] = e.matrix() @ U[idx, :]
    return PassiveOp(U)


def decompose(p: PassiveOp, prune: bool = True, tol: float = 1e-13) -> Network:
    """Triangular (Reck-style) decomposition of a passive unitary.

    Rows of ``U^†`` are combined pairwise by ``B(t) diag(e^{i phi}, 1)`` to clear
    the strictly lower triangle column by column, bottom-up.  What remains is
    a diagonal of phases, emitted as the final (output) layer.  The result
    has at most ``n(n-1)/2`` beamsplitters and ``n(n+1)/2`` phase shifters and
    reproduces ``U`` exactly, global phase included.

    With ``prune`` the identity elements (zero phases, ``t = 1``) are dropped.
    """
    U = p.E if isinstance(p, PassiveOp) else np.asarray(p, dtype=complex)
    if U.ndim != 2 or not is_unitary(U, 1e-9 * U.shape[0]):
        raise NotUnitary("decompose requires a unitary matrix")
    n = U.shape[0]
    A = U.conj().T.copy()
    steps: list[tuple[int, int, float, float]] = []
    for j in range(n - 1):
        for i in range(n - 1, j, -1):
            a, b = A[i - 1, j], A[i, j]
            ra, rb = abs(a), abs(b)
            if ra + rb == 0.0:
                t, phi = 1.0, 0.0
            else:
                t = ra**2 / (ra**2 + rb**2)
                phi = float(np.angle(b) - np.angle(a)) if ra > 0 and rb > 0 else 0.0
            e = np.exp(1j * phi)
            sa, sb = np.sqrt(t), np.sqrt(1.0 - t)
            row_a, row_b = A[i - 1].copy(), A[i].copy()
            A[i - 1] = sa * e * row_a + sb * row_b
            A[i] = -sb * e * row_a + sa * row_b
            A[i, j] = 0.0
            steps.append((i - 1, i, t, phi))

    # U^dagger = T_1^dagger ... T_m^dagger D  =>  U = D^* T_m ... T_1
    elements: list[Element] = []
    for a, b, t, phi in steps:
        elements.append(PhaseShifter(a, _wrap(phi)))
        elements.append(Beamsplitter(a, b, float(t)))
    for k in range(n):
        elements.append(PhaseShifter(k, _wrap(-np.angle(A[k, k]))))
    if prune:
        elements = [e for e in elements if not _is_identity(e, tol)]
    return Network(n, elements)


def _wrap(theta: float) -> float:
    return float((theta + np.pi) % (2 * np.pi) - np.pi)


def _is_identity(e: Element, tol: float) -> bool:
    if isinstance(e, PhaseShifter):
        return abs(_wrap(e.theta)) <= tol
    return np.sqrt(max(0.0, 1.0 - e.t)) <= tol
