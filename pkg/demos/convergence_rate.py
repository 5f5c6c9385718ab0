"""
How fast does the empirical measure approach the limit?
=======================================================

A scaled-down rate study: simulate replicas at increasing lattice sizes,
estimate a dictionary distance between the empirical measure and the
Picard reference, and fit the slope of log distance against log N.  The
shipped configs in ``configs/`` run the full-size versions through
``mflattice rate-study``; this one finishes in well under a minute.
"""

from mflattice.cli.config import parse_config
from mflattice.cli.studies import expected_rate, rate_study

config = parse_config({
    "model": {"name": "kuramoto", "K": 1.0, "sigma": 1.0},
    "lattice": {"dim": 1, "half_width": 16},
    "kernel": {"kind": "p_nearest", "R": 0.5},
    "initial": {"kind": "gaussian", "mean": [0.0], "std": [1.0]},
    "disorder": {"kind": "gaussian", "mean": [0.0], "std": [0.5]},
    "sim": {"t_final": 0.5, "dt": 0.005},
    "metric": {"family": "pnn", "R": 0.5, "levels": [1, 2], "dictionary_size": 16, "replicas": 32},
    "sweep": [8, 16, 32, 64, 128],
    "reference": {"k_ref": 8, "omega_samples": 8, "path_samples": 128, "path_points": 11,
                  "tol": 1e-3, "max_iter": 6},
})

print("theoretical exponent for P-nearest, d=1:", expected_rate(None, 1, "pnn"))
print("power law alpha=0.75:", expected_rate(0.75, 1, "powerlaw"))

result = rate_study(config, workers=2, progress=print)
for N, value, err in zip(result.N, result.values, result.stderrs):
    print(f"N={N:4d}  distance {value:.4f} +- {err:.4f}")
print(f"fitted slope {result.slope:.3f} against the bound -{result.exponent}: {result.verdict}")
