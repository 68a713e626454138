"""Sparse time-frequency reconstruction toolkit.

Recovers concentrated, cross-term-free time-frequency distributions of
non-stationary signals by solving a LASSO over the ambiguity-function /
Wigner-Ville Fourier pair, with classical fixed-threshold solvers and a
K-layer unrolled solver whose per-iteration thresholds come from a small
U-Net.
"""

__version__ = "0.1.0"
