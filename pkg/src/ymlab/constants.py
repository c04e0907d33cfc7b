"""Frozen calibration constants.

Produced by scripts/calibrate_constants.py on the N=16 corpus (see ymlab.corpus)
and never refitted by the tests.
"""

# Phi(R2, t) <= exp(C0 (R1 - R2)) Phi(R1, t - R1^2 + R2^2) + C1 (R1^2 - R2^2) E
MONOTONICITY_C0 = 4.0
MONOTONICITY_C1 = 2.1577e-7

EPS0 = 1e-2

# largest radius in the calibration corpus (R^2 = 25 * record spacing)
CALIBRATED_R_MAX = 0.25

# |Phi(R, t2) - Phi(R, t1)| <= C xi (xi + sqrt((t2 - t1) E0) / R), largest per-run fit
ANTIBUBBLE_C = 3.96e-3

# sup_{B_{R/2}} |F(t0)| R^2 <= C sqrt(Phi(R, x, t0 - R^2)) when Phi < EPS0
EPS_REGULARITY_C = 6.29
