"""Convergence-rate studies of the empirical measure towards the mean-field limit."""

from dataclasses import dataclass, field, replace
import math

import numpy as np

from ..errors import ConfigurationError, ContractViolation
from ..lattice import choose_gamma
from ..meanfield import load_path_law, picard_solve
from ..metrics import (anchors_up_to, build_dictionary, d_infinity, distance_differences,
                       distance_from_differences, empirical_from_record, reference_values)
from ..simulate import simulate_replicas
from .persist import Table

__all__ = ["expected_rate", "fit_slope", "RateResult", "solve_reference", "dictionary_for", "rate_study"]

FLOOR = 1e-6


def expected_rate(alpha=None, dim=1, family="pnn", gamma=None):
    """Rate exponent of the law of large numbers and whether a ``ln N`` factor appears.

    Returns ``(exponent, log_factor)``: the distance is bounded by
    ``C N^{-exponent}``, times ``ln N`` when ``log_factor`` is true.
    """
    if family == "pnn":
        return min(1.0, dim / 2), False
    if family != "powerlaw":
        raise ContractViolation(f"unknown family {family!r}")
    if alpha is None or not 0 <= alpha < dim:
        raise ContractViolation("power-law rates need 0 <= alpha < d")
    half = dim / 2
    if abs(alpha - half) <= 1e-12:
        return min(half, 1.0), True
    if alpha < half:
        g = choose_gamma(alpha, dim) if gamma is None else float(gamma)
        return min(g, 1.0), False
    return min(dim - alpha, 1.0), True


def fit_slope(N_values, distances, log_factor=False):
    """Least-squares slope and intercept of ``log d`` (or ``log(d / ln N)``) against ``log N``."""
    N = np.asarray(N_values, dtype=float)
    d = np.asarray(distances, dtype=float)
    if N.size < 4:
        raise ContractViolation("a rate fit needs at least 4 values of N")
    y = np.log(d / np.log(N)) if log_factor else np.log(d)
    slope, intercept = np.polyfit(np.log(N), y, 1)
    return float(slope), float(intercept)


@dataclass
class RateResult:
    """Outcome of a rate study.

    ``slope`` is fitted after dividing by ``ln N`` when ``log_factor`` is
    true; ``raw_slope`` never is.  ``verdict`` is ``PASS`` when
    ``slope <= -exponent + slack``, ``FLOOR-LIMITED`` when every distance
    sits below the numerical floor, and ``FAIL`` otherwise.
    """

    N: tuple
    values: tuple
    stderrs: tuple
    slope: float
    intercept: float
    raw_slope: float
    raw_intercept: float
    exponent: float
    log_factor: bool
    slack: float
    verdict: str
    family: str
    p: int
    level: int
    per_time: dict = field(default_factory=dict)
    d_infinity: tuple = ()
    excluded_atoms: int = 0
    tables: list = field(default_factory=list)

    def summary(self):
        return {k: getattr(self, k) for k in ("N", "values", "stderrs", "slope", "intercept",
                                               "raw_slope", "raw_intercept", "exponent",
                                               "log_factor", "slack", "verdict", "family", "p",
                                               "level", "excluded_atoms")}


def solve_reference(config, model=None, kernel=None):
    """Picard reference law for a config (or load it from ``reference.path``)."""
    ref = config.reference_settings()
    if ref["path"]:
        return load_path_law(ref["path"]), None
    model = model or config.build_model()
    kernel = kernel or config.build_kernel()
    init, dis = config.build_laws()
    boundary = config.build_lattice().boundary
    return picard_solve(model, kernel, config.grid_spec(), config.build_sim(), init, dis,
                        tol=ref["tol"], max_iter=ref["max_iter"], seed=ref["seed"], boundary=boundary)


def dictionary_for(config, model, settings):
    """Dictionary over the union of the anchor levels, and the member count per cumulative level."""
    dim = config.build_lattice().dim
    levels = settings["levels"]
    anchors = anchors_up_to(levels, dim)
    counts = [len(anchors_up_to(levels[:i + 1], dim)) for i in range(len(levels))]
    kw = {"R": settings.get("R"), "alpha": settings.get("alpha", 0.0), "gamma": settings.get("gamma")}
    D = build_dictionary(settings["family"], anchors, settings["dictionary_size"], settings["seed"],
                         model.state_dim, model.disorder_dim,
                         probe_resolution=settings["probe_resolution"], **kw)
    return D, [c * settings["dictionary_size"] for c in counts]


def rate_study(config, workers=1, reference=None, progress=None):
    """Run the N-sweep of a config and fit the decay of the distance.

    Parameters
    ----------
    reference : PathLaw, optional
        Precomputed Picard reference (``reference.strategy = picard``).
    progress : callable, optional
        Called with a short status string after each stage.
    """
    say = progress or (lambda msg: None)
    settings = config.metric_settings()
    ref_cfg = config.reference_settings()
    sweep = list(config.sweep)
    self_ref = ref_cfg["strategy"] == "self"
    fit_N = sweep[:-1] if self_ref else sweep
    if len(fit_N) < 4:
        raise ConfigurationError("a rate study needs at least 4 values of N in the fit")
    model, kernel = config.build_model(), config.build_kernel()
    init, dis = config.build_laws()
    sim = config.build_sim()
    times = settings["times"] or [sim.t_final / 2, sim.t_final]
    dim = config.build_lattice().dim
    p, levels = settings["p"], settings["levels"]
    D, rows = dictionary_for(config, model, settings)
    say(f"dictionary: {len(D)} test functions")

    if kernel.kind == "p_nearest":
        exponent, log_factor = expected_rate(None, dim, "pnn")
    else:
        exponent, log_factor = expected_rate(kernel.alpha, dim, "powerlaw", kernel.gamma)

    ref_vals, surrogate = {}, None
    if self_ref:
        lat = config.build_lattice(sweep[-1])
        sim_ref = replace(sim, seed=ref_cfg["seed"])
        recs = simulate_replicas(model, lat, kernel, init, dis, sim_ref, settings["replicas"],
                                 sample_times=times, engine=config.engine, workers=workers)
        surrogate = {t: [empirical_from_record(r, t) for r in recs] for t in times}
        say(f"self reference at N={sweep[-1]}")
    else:
        if reference is None:
            reference, report = solve_reference(config, model, kernel)
            say(f"picard reference: {len(report.deltas)} iterations" if report else "reference loaded")
        ref_vals = {t: reference_values(D, reference, t) for t in times}

    dist_rows, values, stderrs, per_time, dinf, excluded = [], [], [], {}, [], 0
    for N in fit_N:
        lat = config.build_lattice(N)
        recs = simulate_replicas(model, lat, kernel, init, dis, sim, settings["replicas"],
                                 sample_times=times, engine=config.engine, workers=workers)
        best = None
        for t in times:
            ems = [empirical_from_record(r, t) for r in recs]
            diffs, exc = distance_differences(ems, surrogate[t] if self_ref else None, t, D,
                                              None if self_ref else ref_vals[t])
            excluded += exc
            level_est = {}
            for K, n_rows in zip(levels, rows):
                est = distance_from_differences(diffs[:n_rows], p, K, exc)
                level_est[K] = est
                dist_rows.append([N, t, K, est.value, est.stderr, p, est.replicas,
                                  est.dictionary_size, exc])
            top = level_est[levels[-1]]
            per_time.setdefault(t, []).append(top.value)
            if levels == list(range(1, levels[-1] + 1)):
                dinf.append(d_infinity(level_est, p, settings["C"], levels[-1], dim).value)
            if best is None or top.value > best.value:
                best = top
        values.append(best.value)
        stderrs.append(best.stderr)
        say(f"N={N}: distance {best.value:.5g} +- {best.stderr:.2g}")

    if max(values) < FLOOR:
        slope = intercept = raw_slope = raw_intercept = float("nan")
        verdict = "FLOOR-LIMITED"
    else:
        slope, intercept = fit_slope(fit_N, values, log_factor)
        raw_slope, raw_intercept = fit_slope(fit_N, values, False)
        verdict = "PASS" if slope <= -exponent + settings["slack"] else "FAIL"
    result = RateResult(tuple(fit_N), tuple(values), tuple(stderrs), slope, intercept, raw_slope,
                        raw_intercept, exponent, log_factor, settings["slack"], verdict,
                        settings["family"], p, levels[-1], per_time, tuple(dinf), excluded)
    result.tables = [
        Table("distances", ["N", "t", "level", "value", "stderr", "p", "replicas",
                            "dictionary_size", "excluded_atoms"], dist_rows),
        Table("rate_fit", ["family", "p", "level", "exponent", "log_factor", "slope", "intercept",
                           "raw_slope", "raw_intercept", "slack", "verdict"],
              [[settings["family"], p, levels[-1], exponent, log_factor, slope, intercept,
                raw_slope, raw_intercept, settings["slack"], verdict]]),
        Table("rate_points", ["N", "distance", "stderr", "log_distance", "log_distance_over_lnN"],
              [[N, v, s, math.log(v) if v > 0 else None,
                math.log(v / math.log(N)) if v > 0 else None] for N, v, s in zip(fit_N, values, stderrs)]),
    ]
    return result
