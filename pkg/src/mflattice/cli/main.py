"""``mflattice`` command line.

Every subcommand reads a YAML config (see ``docs/config.md``), writes
CSV tables and a ``manifest.json`` into the output directory, and prints a
short summary.  Outputs depend only on the config and its seeds, never on
``--workers``.
"""

import argparse
import io
from pathlib import Path
import sys
import time

import numpy as np

from ..errors import ConfigurationError, ContractViolation, SolverError
from ..lattice import lattice_sum_bound_check
from ..meanfield import save_path_law
from ..metrics import (distance_differences, distance_from_differences, empirical_from_record,
                       reference_values)
from ..simulate import TrajectoryRecord, simulate_replicas
from ..yosida import YosidaConfig, shifted_drift, yosida_convergence_study, yosida_drift
from ..rng import generator
from .config import load_config, parse_config, with_overrides
from .persist import Table, persist_run
from .studies import dictionary_for, expected_rate, rate_study, solve_reference

__all__ = ["main", "build_parser", "load_trajectories"]


def _config(args):
    return load_config(args.config) if args.config else parse_config({})


def _out(args, cfg):
    return args.out or cfg.output


def _trajectory_table(records, model):
    m, k = model.state_dim, model.disorder_dim
    d = records[0].positions.shape[1]
    header = (["replica", "time", "site"] + [f"x{i}" for i in range(d)]
              + [f"omega{i}" for i in range(k)] + [f"theta{i}" for i in range(m)])
    rows = []
    for rec in records:
        r = rec.metadata["replica"]
        for ti, t in enumerate(rec.times):
            for site in range(rec.positions.shape[0]):
                rows.append([r, float(t), site, *rec.positions[site].tolist(),
                             *rec.omegas[site].tolist(), *rec.states[ti, site].tolist()])
    return Table("trajectories", header, rows)


def _record_bytes(rec):
    buf = io.BytesIO()
    np.savez(buf, times=rec.times, states=rec.states, omegas=rec.omegas, positions=rec.positions,
             replica=np.array(rec.metadata["replica"]), seed=np.array(rec.metadata["seed"]))
    return buf.getvalue()


def load_trajectories(directory):
    """Read the per-replica ``replica_*.npz`` files written by ``simulate --format npz``."""
    files = sorted(Path(directory).glob("replica_*.npz"))
    if not files:
        raise ConfigurationError(f"no replica_*.npz files in {directory}")
    recs = []
    for f in files:
        with np.load(f) as z:
            recs.append(TrajectoryRecord(z["times"], z["states"], z["omegas"], z["positions"],
                                         {"replica": int(z["replica"]), "seed": int(z["seed"])}))
    return recs


def cmd_simulate(args):
    cfg = with_overrides(_config(args), {"seed": args.seed, "sim": {"replicas": args.replicas,
                                                                     "format": args.format}})
    started = time.time()
    model, kernel, lattice = cfg.build_model(), cfg.build_kernel(), cfg.build_lattice()
    init, dis = cfg.build_laws()
    sim = cfg.build_sim()
    replicas = int(cfg.sim.get("replicas", 1))
    fmt = str(cfg.sim.get("format", "csv"))
    if fmt not in ("csv", "npz"):
        raise ConfigurationError("sim.format must be 'csv' or 'npz'")
    recs = simulate_replicas(model, lattice, kernel, init, dis, sim, replicas,
                             sample_times=cfg.sample_times(), engine=cfg.engine, workers=args.workers)
    if fmt == "npz":
        artifacts = [(f"replica_{r.metadata['replica']:04d}.npz", _record_bytes(r)) for r in recs]
    else:
        artifacts = [_trajectory_table(recs, model)]
    man = persist_run(artifacts, _out(args, cfg), cfg.raw, {"seed": sim.seed}, started,
                      {"config_hash": recs[0].metadata["config_hash"]})
    print(f"simulated {replicas} replica(s) of {lattice.site_count} sites; files: {', '.join(man['files'])}")
    return 0


def cmd_reference(args):
    cfg = with_overrides(_config(args), {"reference": {"tol": args.tol, "max_iter": args.max_iter}})
    started = time.time()
    law, report = solve_reference(cfg)
    buf = io.BytesIO()
    save_path_law(law, buf)
    rows = [[i + 1, d, s] for i, (d, s) in enumerate(zip(report.deltas, report.stderrs))]
    persist_run([Table("picard", ["iteration", "delta", "stderr"], rows), ("reference.npz", buf.getvalue())],
                _out(args, cfg), cfg.raw, {"reference_seed": cfg.reference_settings()["seed"]}, started,
                {"converged": report.converged})
    print(f"picard: {report.iterations} iterations, last delta {report.deltas[-1]:.3e}, "
          f"converged={report.converged}")
    return 0


def cmd_distance(args):
    levels = None if args.K_levels is None else [int(k) for k in args.K_levels.split(",")]
    cfg = with_overrides(_config(args), {"metric": {"family": args.family, "levels": levels,
                                                    "dictionary_size": args.dict_size},
                                         "reference": {"path": args.reference}})
    started = time.time()
    settings = cfg.metric_settings()
    model, kernel = cfg.build_model(), cfg.build_kernel()
    init, dis = cfg.build_laws()
    sim = cfg.build_sim()
    law, _ = solve_reference(cfg, model, kernel)
    D, rows = dictionary_for(cfg, model, settings)
    if args.traj_dir:
        recs = load_trajectories(args.traj_dir)
        times = settings["times"] or [float(recs[0].times[len(recs[0].times) // 2]), float(recs[0].times[-1])]
    else:
        times = settings["times"] or [sim.t_final / 2, sim.t_final]
        recs = simulate_replicas(model, cfg.build_lattice(), kernel, init, dis, sim, settings["replicas"],
                                 sample_times=times, engine=cfg.engine, workers=args.workers)
    side = recs[0].positions.shape[0]
    out = []
    for t in times:
        ems = [empirical_from_record(r, t) for r in recs]
        diffs, exc = distance_differences(ems, None, t, D, reference_values(D, law, t))
        for K, n in zip(settings["levels"], rows):
            est = distance_from_differences(diffs[:n], settings["p"], K, exc)
            out.append([t, K, est.p, est.value, est.stderr, est.dictionary_size, exc, est.replicas, side])
    persist_run([Table("distances", ["t", "K", "p", "distance", "stderr", "dict_size", "excluded_atoms",
                                     "replicas", "sites"], out)],
                _out(args, cfg), cfg.raw, {"seed": sim.seed}, started)
    for row in out:
        print(f"t={row[0]:g} K={row[1]} distance={row[3]:.5g} +- {row[4]:.2g}")
    return 0


def cmd_rate_study(args):
    cfg = _config(args)
    started = time.time()
    res = rate_study(cfg, workers=args.workers, progress=(lambda m: print(m, flush=True)) if args.verbose else None)
    persist_run(res.tables, _out(args, cfg), cfg.raw, {"seed": cfg.seed}, started, {"result": res.summary()})
    print(f"slope {res.slope:.4f} (raw {res.raw_slope:.4f}), expected exponent {res.exponent:g}"
          f"{' with ln N' if res.log_factor else ''}: {res.verdict}")
    return 0


def _domination_samples(model, count, seed):
    rng = generator(seed, "yosida-domination")
    theta = 3.0 * rng.standard_normal((count, model.state_dim))
    if model.disorder_box is not None:
        lo, hi = model.disorder_box
        omega = lo + rng.random((count, model.disorder_dim)) * (hi - lo)
    else:
        omega = rng.standard_normal((count, model.disorder_dim))
    return theta, omega


def cmd_yosida_check(args):
    cfg = _config(args)
    started = time.time()
    y = cfg.yosida
    model, init_dis = cfg.build_model(), cfg.build_laws()
    kernel = None if y.get("interaction", True) is False else cfg.build_kernel()
    lambdas = args.lambdas.split(",") if args.lambdas else y.get("lambdas", (10.0, 100.0, 1000.0))
    ycfg = YosidaConfig(tuple(float(v) for v in lambdas))
    lattice = cfg.build_lattice(int(y.get("half_width", min(cfg.build_lattice().half_width, 64))))
    study = yosida_convergence_study(model, kernel, lattice, cfg.build_sim(), ycfg, *init_dis,
                                     replicas=int(y.get("replicas", 8)),
                                     sample_every=int(y.get("sample_every", 10)))
    theta, omega = _domination_samples(model, int(y.get("samples", 100000)), cfg.seed)
    base = np.linalg.norm(shifted_drift(model, theta, omega), axis=-1)
    dom_rows = []
    for lam in ycfg.lambda_schedule:
        excess = np.linalg.norm(yosida_drift(model, lam, theta, omega, ycfg), axis=-1) - base
        dom_rows.append([lam, float(excess.max()), bool(np.all(excess <= 1e-9))])
    rows = [list(r) for r in zip(study.lambdas, study.sup_errors, study.sup_stderr, study.h_norms,
                                 study.h_stderr, study.newton_iters)]
    persist_run([Table("yosida", ["lambda", "sup_error", "sup_stderr", "h_norm", "h_stderr",
                                  "newton_iters_mean"], rows),
                 Table("domination", ["lambda", "max_excess", "dominated"], dom_rows)],
                _out(args, cfg), cfg.raw, {"seed": cfg.seed}, started,
                {"errors_decreasing": study.errors_decreasing,
                 "h_nondecreasing": study.h_nondecreasing(), "constant": study.constant})
    print(f"sup errors {np.array2string(study.sup_errors, precision=4)} decreasing={study.errors_decreasing}; "
          f"H-norms nondecreasing={study.h_nondecreasing()}")
    return 0


def cmd_lemma_sums(args):
    cfg = _config(args)
    started = time.time()
    lem = cfg.lemma
    dim = int(lem.get("dim", 1))
    N_values = [int(n) for n in lem.get("N", [2**k for k in range(4, 13)] if dim == 1 else [8, 16, 32, 64])]
    K = int(lem.get("K", 3))
    anchors = lem.get("anchors", [[0.0] * dim])
    rows, summary = [], []
    for beta in lem.get("beta", [dim / 2, float(dim), 1.5 * dim]):
        for a in anchors:
            rep = lattice_sum_bound_check(float(beta), dim, N_values, K, np.asarray(a, dtype=float),
                                          lem.get("boundary", "free"), float(lem.get("threshold", 4.0)))
            for N, s, pr, r in zip(rep.N, rep.sums, rep.predicted, rep.ratios):
                rows.append([N, K, rep.beta, rep.regime, " ".join(map(repr, rep.anchor)), s, pr, r])
            summary.append([rep.beta, rep.regime, " ".join(map(repr, rep.anchor)), rep.spread, rep.passed])
    persist_run([Table("lemma_sums", ["N", "K", "beta", "regime", "anchor", "sum", "predicted_scale", "ratio"],
                       rows),
                 Table("lemma_spread", ["beta", "regime", "anchor", "spread", "passed"], summary)],
                _out(args, cfg), cfg.raw, {}, started)
    for row in summary:
        print(f"beta={row[0]:g} ({row[1]}) a=[{row[2]}]: spread {row[3]:.3f} {'PASS' if row[4] else 'FAIL'}")
    return 0


def cmd_expected_rate(args):
    exponent, log_factor = expected_rate(args.alpha, args.dim, args.family, args.gamma)
    print(f"exponent={exponent:g} log_factor={'true' if log_factor else 'false'}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="mflattice", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text, config=True):
        p = sub.add_parser(name, help=help_text)
        if config:
            p.add_argument("--config", "-c", help="YAML experiment config")
            p.add_argument("--out", "-o", help="output directory (overrides the config)")
            p.add_argument("--workers", "-j", type=int, default=1, help="worker threads for replicas")
        p.set_defaults(func=func)
        return p

    p = add("simulate", cmd_simulate, "simulate the particle system and write trajectories")
    p.add_argument("--format", choices=("csv", "npz"), default=None,
                   help="one long CSV table or one .npz file per replica (default: sim.format or csv)")
    p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    p.add_argument("--replicas", type=int, default=None, help="overrides sim.replicas")
    p = add("reference", cmd_reference, "solve the mean-field reference by Picard iteration")
    p.add_argument("--tol", type=float, default=None, help="overrides reference.tol")
    p.add_argument("--max-iter", type=int, default=None, help="overrides reference.max_iter")
    p = add("distance", cmd_distance, "estimate the distance to the reference at one lattice size")
    p.add_argument("--traj-dir", default=None, help="directory of replica_*.npz files from simulate")
    p.add_argument("--reference", default=None, help="reference.npz written by the reference command")
    p.add_argument("--family", choices=("pnn", "powerlaw"), default=None)
    p.add_argument("--K-levels", dest="K_levels", default=None, help="comma-separated anchor levels")
    p.add_argument("--dict-size", type=int, default=None, help="test functions per anchor")
    p = add("rate-study", cmd_rate_study, "fit the convergence rate over the N sweep")
    p.add_argument("--verbose", "-v", action="store_true")
    p = add("yosida-check", cmd_yosida_check, "Yosida regularisation diagnostics")
    p.add_argument("--lambdas", default=None, help="comma-separated regularisation parameters")
    add("lemma-sums", cmd_lemma_sums, "lattice Riesz-sum scaling table")
    p = add("expected-rate", cmd_expected_rate, "theoretical rate exponent", config=False)
    p.add_argument("--family", choices=("pnn", "powerlaw"), default="pnn")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--gamma", type=float, default=None)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, ContractViolation, SolverError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
