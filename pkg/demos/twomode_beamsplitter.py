"""
Removing q-p correlations with one beamsplitter
===============================================

A two-mode state with ``X = diag(m, n)`` and ``Y = [[0, c], [c, i s]]`` has a
correlation between the amplitude and phase quadratures of its second mode.
A single beamsplitter with transmissivity ``t = (1 + s / sqrt(4c^2 + s^2)) / 2``,
dressed with phase shifts, removes it.
"""

# %%
import numpy as np

from qpdecouple import decompose, decouple, preset_twomode, xy_blocks
from qpdecouple.gaussian import PassiveOp, cross_corr_norm

m, n, c, s = 2.0, 1.0, 0.5, 0.5
state = preset_twomode(m, n, c, s)
print(np.round(state.M, 3))
print("largest q-p covariance before:", cross_corr_norm(state))

# %%
# The decoupler takes the Takagi factorization of Y, checks which entries of
# Z X Z^dagger are real or imaginary and assigns each mode a quarter turn if
# needed.
report = decouple(state)
print(report.verdict.value, "residual", report.residual)
print("quadrature labels:", report.rphase.labels)

# %%
# Modes come out sorted by descending singular value; swapping them gives
# the ordering of the closed form.
E = np.array([[0, 1], [1, 0]]) @ report.E_total
t = (1 + s / np.sqrt(4 * c**2 + s**2)) / 2
print("|E_00|^2 =", abs(E[0, 0]) ** 2, " closed form t =", t)

# %%
# As an optical network: one beamsplitter and three phase shifters.
for element in decompose(PassiveOp(E)).elements:
    print(element)

# %%
# The decoupled amplitude block, in the same swapped order.
X = np.flip(xy_blocks(report.quad_out).X.real)
print(np.round(X, 6))
print("expected diagonal:", n * (1 - t) + m * t, n * t + m * (1 - t))
