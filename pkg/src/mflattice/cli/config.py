"""Experiment configuration files.

A config is a YAML mapping of blocks; every block and key is optional
except where noted.  ``docs/config.md`` describes the grammar and the
shipped files under ``configs/`` cover every subcommand.
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from ..errors import ConfigurationError
from ..lattice import LatticeConfig, choose_gamma, choose_p, p_nearest, power_law
from ..meanfield import GridSpec
from ..models import fitzhugh_nagumo, gaussian, kuramoto, point_mass, product, uniform_box
from ..simulate import SCHEMES, SimConfig

__all__ = ["ExperimentConfig", "load_config", "parse_config", "with_overrides"]

BLOCKS = ("model", "lattice", "kernel", "initial", "disorder", "sim", "metric", "sweep",
          "reference", "seed", "yosida", "lemma", "output")


def _block(raw, name):
    value = raw.get(name) or {}
    if not isinstance(value, dict):
        raise ConfigurationError(f"block {name!r} must be a mapping")
    return dict(value)


def _pop(block, key, default, kind, where):
    value = block.pop(key, default)
    if value is None:
        return None
    try:
        return kind(value)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"{where}.{key}: {exc}") from None


def _no_extra(block, where):
    if block:
        raise ConfigurationError(f"unknown keys in {where}: {sorted(block)}")


def _floats(v):
    return [float(x) for x in np.atleast_1d(v)]


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed experiment configuration (see the module docstring)."""

    model: dict = field(default_factory=lambda: {"name": "kuramoto"})
    lattice: dict = field(default_factory=lambda: {"dim": 1, "half_width": 16, "boundary": "free"})
    kernel: dict = field(default_factory=lambda: {"kind": "power_law", "alpha": 0.0})
    initial: dict = field(default_factory=lambda: {"kind": "gaussian", "mean": [0.0], "std": [1.0]})
    disorder: dict = field(default_factory=lambda: {"kind": "gaussian", "mean": [0.0], "std": [0.5]})
    sim: dict = field(default_factory=dict)
    metric: dict = field(default_factory=dict)
    sweep: tuple = (16, 32, 64, 128, 256)
    reference: dict = field(default_factory=dict)
    seed: int = 0
    yosida: dict = field(default_factory=dict)
    lemma: dict = field(default_factory=dict)
    output: str = "results"
    raw: dict = field(default_factory=dict)

    # -- builders -----------------------------------------------------------

    def build_model(self):
        block = dict(self.model)
        name = block.pop("name", "kuramoto")
        w = "model"
        if name == "kuramoto":
            m = kuramoto(_pop(block, "K", 1.0, float, w), _pop(block, "sigma", 1.0, float, w))
        elif name in ("fitzhugh_nagumo", "fhn"):
            box = block.pop("disorder_box", ((0.7, 0.8), (0.7, 0.8)))
            m = fitzhugh_nagumo(_pop(block, "I", 0.0, float, w), _pop(block, "sigma_v", 0.0, float, w),
                                _pop(block, "sigma_w", 0.0, float, w), _pop(block, "clip", 5.0, float, w),
                                tuple(tuple(_floats(b)) for b in box),
                                _pop(block, "state_radius", 10.0, float, w))
        else:
            raise ConfigurationError(f"unknown model {name!r}")
        _no_extra(block, w)
        return m

    def build_lattice(self, half_width=None):
        block = dict(self.lattice)
        w = "lattice"
        dim = _pop(block, "dim", 1, int, w)
        n = _pop(block, "half_width", 16, int, w)
        boundary = _pop(block, "boundary", "free", str, w)
        _no_extra(block, w)
        return LatticeConfig(dim, n if half_width is None else int(half_width), boundary)

    def build_kernel(self):
        block = dict(self.kernel)
        w = "kernel"
        kind = _pop(block, "kind", "power_law", str, w)
        dim = self.build_lattice().dim
        if kind == "p_nearest":
            k = p_nearest(_pop(block, "R", 0.5, float, w), dim)
        elif kind == "power_law":
            k = power_law(_pop(block, "alpha", 0.0, float, w), dim,
                          epsilon_gamma=_pop(block, "epsilon_gamma", 0.01, float, w))
        else:
            raise ConfigurationError(f"unknown kernel kind {kind!r}")
        _no_extra(block, w)
        return k

    @staticmethod
    def _law(block, where):
        block = dict(block)
        kind = _pop(block, "kind", "point_mass", str, where)
        if kind == "point_mass":
            law = point_mass(_floats(block.pop("value", [0.0])))
        elif kind == "gaussian":
            law = gaussian(_floats(block.pop("mean", [0.0])), _floats(block.pop("std", [1.0])))
        elif kind == "uniform_box":
            law = uniform_box(_floats(block.pop("low")), _floats(block.pop("high")))
        elif kind == "product":
            law = product(*[ExperimentConfig._law(f, where) for f in block.pop("factors")])
        else:
            raise ConfigurationError(f"unknown law kind {kind!r} in {where}")
        _no_extra(block, where)
        return law

    def build_laws(self):
        return self._law(self.initial, "initial"), self._law(self.disorder, "disorder")

    def build_sim(self, seed=None):
        block = dict(self.sim)
        w = "sim"
        scheme = _pop(block, "scheme", None, str, w)
        if scheme is not None and scheme not in SCHEMES:
            raise ConfigurationError(f"sim.scheme must be one of {SCHEMES}")
        cfg = SimConfig(_pop(block, "t_final", 1.0, float, w), _pop(block, "dt", None, float, w),
                        scheme, self.seed if seed is None else seed)
        return cfg

    def sample_times(self):
        sim = self.build_sim()
        times = self.sim.get("sample_times")
        if times is None:
            return sim.default_sample_times()
        return np.asarray(_floats(times))

    @property
    def engine(self):
        return str(self.sim.get("engine", "auto"))

    def metric_settings(self):
        """Resolved metric block: family, R or (alpha, gamma), levels, p and sizes."""
        block = dict(self.metric)
        kernel = self.kernel
        dim = self.build_lattice().dim
        family = block.get("family") or ("pnn" if kernel.get("kind") == "p_nearest" else "powerlaw")
        out = {"family": family,
               "dictionary_size": int(block.get("dictionary_size", 64)),
               "replicas": int(block.get("replicas", 64)),
               "times": None if block.get("times") is None else _floats(block["times"]),
               "C": float(block.get("C", 1.0)),
               "slack": float(block.get("slack", 0.15)),
               "probe_resolution": int(block.get("probe_resolution", 1024)),
               "seed": int(block.get("seed", self.seed))}
        if family == "pnn":
            out["R"] = float(block.get("R", kernel.get("R", 0.5)))
            out["levels"] = [int(k) for k in block.get("levels", [1, 2, 4, 8])]
            out["p"] = 2
        elif family == "powerlaw":
            alpha = float(block.get("alpha", kernel.get("alpha", 0.0)))
            out["alpha"] = alpha
            out["gamma"] = float(block.get("gamma", choose_gamma(alpha, dim)))
            out["levels"] = [int(k) for k in block.get("levels", [1, 3, 5, 7])]
            out["p"] = int(block.get("p", choose_p(alpha, dim)))
        else:
            raise ConfigurationError(f"unknown metric family {family!r}")
        if out["replicas"] < 8:
            raise ConfigurationError("metric.replicas must be at least 8")
        return out

    def grid_spec(self):
        r = self.reference
        return GridSpec(int(r.get("k_ref", 16)), int(r.get("omega_samples", 16)),
                        int(r.get("path_samples", 256)), int(r.get("path_points", 101)))

    def reference_settings(self):
        r = self.reference
        strategy = str(r.get("strategy", "picard"))
        if strategy not in ("picard", "self"):
            raise ConfigurationError("reference.strategy must be 'picard' or 'self'")
        return {"strategy": strategy, "tol": float(r.get("tol", 1e-4)),
                "max_iter": int(r.get("max_iter", 8)), "seed": int(r.get("seed", self.seed + 1)),
                "path": r.get("path")}


def parse_config(raw):
    """Validate a raw mapping and return an :class:`ExperimentConfig`."""
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigurationError("a config must be a mapping of blocks")
    unknown = set(raw) - set(BLOCKS)
    if unknown:
        raise ConfigurationError(f"unknown config blocks: {sorted(unknown)}")
    defaults = ExperimentConfig()
    kwargs = {}
    for name in ("model", "lattice", "kernel", "initial", "disorder"):
        kwargs[name] = _block(raw, name) if name in raw else getattr(defaults, name)
    for name in ("sim", "metric", "reference", "yosida", "lemma"):
        kwargs[name] = _block(raw, name)
    sweep = tuple(int(n) for n in raw.get("sweep", defaults.sweep))
    if any(b <= a for a, b in zip(sweep, sweep[1:])):
        raise ConfigurationError("sweep must be strictly increasing")
    kwargs["sweep"] = sweep
    kwargs["seed"] = int(raw.get("seed", 0))
    kwargs["output"] = str(raw.get("output", "results"))
    cfg = ExperimentConfig(raw=raw, **kwargs)
    # build once so that malformed blocks fail early
    cfg.build_model()
    cfg.build_lattice()
    cfg.build_kernel()
    cfg.build_laws()
    cfg.build_sim()
    if raw.get("metric") is not None:
        cfg.metric_settings()
    return cfg


def _merge(base, updates):
    out = dict(base)
    for key, value in updates.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def with_overrides(config, updates):
    """Re-parse ``config`` with ``updates`` merged into its raw blocks.

    ``None`` values in ``updates`` are skipped, so optional command-line
    flags can be passed through unchanged.
    """
    def prune(d):
        return {k: prune(v) if isinstance(v, dict) else v for k, v in d.items() if v is not None}

    return parse_config(_merge(config.raw, prune(updates)))


def load_config(path):
    """Read a YAML config file."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"cannot parse {path}: {exc}") from None
    return parse_config(raw)
