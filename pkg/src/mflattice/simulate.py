"""Time stepping of the finite particle system.

Each site ``i`` of the lattice carries a state ``theta_i``, a frozen disorder
value ``omega_i`` and a frozen position ``x_i``.  The state evolves by

    d theta_i = c(theta_i, omega_i) dt
                + |Lambda|^{-1} sum_{j != i} Gamma(theta_i, omega_i, theta_j, omega_j) Psi(x_i, x_j) dt
                + sigma dB_i.

The interaction field is computed either by a direct pairwise sum or, for
couplings with a low-rank factorisation, by fast convolution over the
lattice.  Noise comes from counter-based streams keyed by
``(seed, replica, step)``; within a step the noise of site ``i`` is row ``i``
of one standard normal block, so results never depend on how replicas are
scheduled across threads.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
import hashlib
import json
import math

import numpy as np
from scipy import fft as sfft

from .errors import BlowUpError, ContractViolation, UnsupportedConfiguration
from .lattice import LatticeConfig, minimal_image, positions
from .rng import generator

__all__ = [
    "ParticleEnsemble",
    "SimConfig",
    "TrajectoryRecord",
    "init_ensemble",
    "DirectField",
    "ConvolutionField",
    "interaction_operator",
    "interaction_field_direct",
    "interaction_field_convolution",
    "step",
    "simulate",
    "simulate_replicas",
    "config_hash",
]

SCHEMES = ("euler_maruyama", "tamed_euler")


def _frozen(a):
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ParticleEnsemble:
    """State of all sites at one time.

    ``omegas`` and ``positions`` are read-only arrays shared by every
    ensemble derived from the same initialisation.
    """

    lattice: LatticeConfig
    thetas: np.ndarray
    omegas: np.ndarray
    positions: np.ndarray
    time: float = 0.0
    step_index: int = 0
    seed: int = 0
    replica: int = 0

    @property
    def size(self):
        return self.thetas.shape[0]


@dataclass(frozen=True)
class SimConfig:
    """Time grid, scheme and seed of a simulation.

    ``dt`` defaults to ``t_final / 1000``; it is adjusted down so that the
    step count ``t_final / dt`` is an integer.
    """

    t_final: float = 1.0
    dt: float = None
    scheme: str = None
    seed: int = 0
    replica_id: int = 0

    def __post_init__(self):
        if self.t_final <= 0:
            raise ContractViolation("final time must be positive")
        dt = self.t_final * 1e-3 if self.dt is None else float(self.dt)
        if dt <= 0 or dt > self.t_final:
            raise ContractViolation("need 0 < dt <= t_final")
        steps = math.ceil(self.t_final / dt - 1e-9)
        object.__setattr__(self, "dt", self.t_final / steps)
        if self.scheme is not None and self.scheme not in SCHEMES:
            raise ContractViolation(f"unknown scheme {self.scheme!r}")

    @property
    def n_steps(self):
        return int(round(self.t_final / self.dt))

    def resolved_scheme(self, model):
        return self.scheme or model.default_scheme

    def step_of(self, t):
        """Step index of a time on the grid, or raise."""
        k = t / self.dt
        if abs(k - round(k)) > 1e-7 or not -1e-9 <= t <= self.t_final + 1e-9:
            raise ContractViolation(f"time {t} is not on the step grid")
        return int(round(k))

    def default_sample_times(self, count=33):
        steps = np.unique(np.rint(np.linspace(0, self.n_steps, count)).astype(int))
        return steps * self.dt


@dataclass(frozen=True)
class TrajectoryRecord:
    """Snapshots of one replica.

    Attributes
    ----------
    times : ndarray, shape (S,)
    states : ndarray, shape (S, n, m)
    omegas, positions : ndarray
        The frozen site data.
    metadata : dict
        Seed, replica, config hash, scheme and step size.
    """

    times: np.ndarray
    states: np.ndarray
    omegas: np.ndarray
    positions: np.ndarray
    metadata: dict = field(default_factory=dict)


def config_hash(description):
    """Short content hash of a plain-data description."""
    text = json.dumps(description, sort_keys=True, default=str)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Initialisation


def init_ensemble(model, lattice, initial_law, disorder_law, seed=0, replica=0):
    """Draw i.i.d. initial states and disorder for every site.

    Row ``i`` of each draw belongs to site ``i``, so a sub-lattice prefix
    reproduces the same values under the same seed.
    """
    if initial_law.dim != model.state_dim or disorder_law.dim != model.disorder_dim:
        raise ContractViolation("law dimensions do not match the model")
    n = lattice.site_count
    theta = initial_law.sample(generator(seed, "initial", 0, replica), n)
    omega = disorder_law.sample(generator(seed, "disorder", 0, replica), n)
    _, x = positions(lattice)
    return ParticleEnsemble(lattice, np.asarray(theta, dtype=float), _frozen(omega), _frozen(x),
                            0.0, 0, int(seed), int(replica))


# ---------------------------------------------------------------------------
# Interaction engines


class DirectField:
    """Pairwise interaction field with a dense weight matrix.

    ``W[i, j] = Psi(x_i, x_j) / |Lambda|`` with a zero diagonal.  Works for
    any coupling and any batch of leading axes.
    """

    def __init__(self, lattice, kernel, model, chunk=256):
        _, x = positions(lattice)
        u = x[:, None, :] - x[None, :, :]
        if lattice.periodic:
            u = minimal_image(u)
        with np.errstate(divide="ignore"):
            W = kernel.profile(u)
        np.fill_diagonal(W, 0.0)
        self.weights = W / lattice.site_count
        self.model = model
        self.chunk = chunk

    def __call__(self, thetas, omegas):
        model, W = self.model, self.weights
        out = np.empty(thetas.shape, dtype=float)
        n = thetas.shape[-2]
        for start in range(0, n, self.chunk):
            sl = slice(start, min(start + self.chunk, n))
            g = model.coupling(thetas[..., sl, None, :], omegas[..., sl, None, :],
                               thetas[..., None, :, :], omegas[..., None, :, :])
            out[..., sl, :] = np.einsum("...ijm,ij->...im", g, W[sl])
        return out


class ConvolutionField:
    """Interaction field by FFT convolution for separable couplings.

    The weight table holds ``phi(x_i - x_j)`` for every displacement, with
    the zero displacement set to 0 so the self term is excluded exactly.
    Free boundaries use zero padding to ``2 (2N + 1)`` points per axis;
    periodic boundaries use a circular convolution of length ``2N``.
    """

    def __init__(self, lattice, kernel, model):
        if model.separable is None:
            raise UnsupportedConfiguration(f"coupling of model {model.name!r} is not separable")
        if lattice.half_width == 0:
            raise UnsupportedConfiguration("convolution engine needs N >= 1")
        self.model = model
        self.lattice = lattice
        d, N = lattice.dim, lattice.half_width
        h = 1.0 / (2 * N)
        if lattice.periodic:
            self.length = 2 * N
            offsets = np.arange(self.length)
            disp = minimal_image(offsets * h)
        else:
            self.length = 2 * (2 * N + 1)
            offsets = np.arange(self.length)
            signed = np.where(offsets <= self.length // 2, offsets, offsets - self.length)
            disp = signed * h
        grids = np.meshgrid(*([disp] * d), indexing="ij")
        u = np.stack(grids, axis=-1)
        with np.errstate(divide="ignore"):
            table = kernel.profile(u)
        table[(0,) * d] = 0.0
        if not lattice.periodic:
            # displacements beyond the lattice diameter never occur
            far = np.any(np.abs(u) > 1.0 + 1e-12, axis=-1)
            table[far] = 0.0
        self.axes = tuple(range(-d, 0))
        self.spectrum = sfft.rfftn(table, axes=self.axes)

    def __call__(self, thetas, omegas):
        lat, sep = self.lattice, self.model.separable
        d, side = lat.dim, lat.side
        lead = thetas.shape[:-2]
        A, B = sep.factors(thetas, omegas)        # (..., n, r, m), (..., n, r)
        B = np.moveaxis(B, -1, -2).reshape(lead + (sep.rank,) + (side,) * d)
        shape = (self.length,) * d
        conv = sfft.irfftn(sfft.rfftn(B, s=shape, axes=self.axes) * self.spectrum,
                           s=shape, axes=self.axes)
        conv = conv[(Ellipsis,) + (slice(0, side),) * d]
        conv = conv.reshape(lead + (sep.rank, side**d))
        conv = np.moveaxis(conv, -1, -2) / lat.site_count   # (..., n, r)
        return np.einsum("...nrm,...nr->...nm", A, conv)


def interaction_operator(lattice, kernel, model, engine="auto"):
    """Build the interaction-field callable for a lattice and kernel.

    ``engine`` is ``"direct"``, ``"convolution"`` or ``"auto"`` (convolution
    when the coupling is separable).
    """
    if engine == "direct":
        return DirectField(lattice, kernel, model)
    if engine == "convolution":
        return ConvolutionField(lattice, kernel, model)
    if engine != "auto":
        raise ContractViolation(f"unknown engine {engine!r}")
    if model.separable is not None and lattice.half_width > 0:
        return ConvolutionField(lattice, kernel, model)
    return DirectField(lattice, kernel, model)


def interaction_field_direct(ensemble, model, kernel):
    """Field ``F_i`` by direct pairwise summation."""
    return DirectField(ensemble.lattice, kernel, model)(ensemble.thetas, ensemble.omegas)


def interaction_field_convolution(ensemble, model, kernel):
    """Field ``F_i`` by fast convolution; raises for non-separable couplings."""
    return ConvolutionField(ensemble.lattice, kernel, model)(ensemble.thetas, ensemble.omegas)


# ---------------------------------------------------------------------------
# Stepping


def _increment(drift, dt, scheme):
    if scheme == "tamed_euler":
        norm = np.linalg.norm(drift, axis=-1, keepdims=True)
        return drift * dt / (1.0 + dt * norm)
    return drift * dt


def _advance(thetas, omegas, drift_fn, field_fn, sigma, dt, scheme, noise):
    drift = drift_fn(thetas, omegas)
    if field_fn is not None:
        drift = drift + field_fn(thetas, omegas)
    new = thetas + _increment(drift, dt, scheme)
    if noise is not None:
        new = new + math.sqrt(dt) * noise @ sigma.T
    return new


def _check_finite(thetas, step_index, replicas=None):
    if np.all(np.isfinite(thetas)):
        return
    bad = np.argwhere(~np.isfinite(thetas))[0]
    if thetas.ndim == 3:
        replica = int(bad[0]) if replicas is None else int(replicas[bad[0]])
        raise BlowUpError(bad[1], step_index, replica)
    raise BlowUpError(bad[0], step_index, replicas)


def _noise(seed, replica, step_index, shape):
    return generator(seed, "noise", step_index, replica).standard_normal(shape)


def step(ensemble, model, kernel, sim_config, noise_draws=None, engine="auto", operator=None):
    """Advance one ensemble by one time step.

    ``noise_draws`` defaults to the keyed block for
    ``(seed, replica, step)``.  The disorder and position arrays of the
    returned ensemble are the same read-only objects as the input's.
    ``kernel=None`` switches the interaction off.
    """
    op = operator
    if op is None and kernel is not None:
        op = interaction_operator(ensemble.lattice, kernel, model, engine)
    if noise_draws is None:
        noise_draws = _noise(ensemble.seed, ensemble.replica, ensemble.step_index, ensemble.thetas.shape)
    new = _advance(ensemble.thetas, ensemble.omegas, model.drift, op, model.sigma, sim_config.dt,
                   sim_config.resolved_scheme(model), noise_draws)
    _check_finite(new, ensemble.step_index, ensemble.replica)
    return replace(ensemble, thetas=new, time=ensemble.time + sim_config.dt,
                   step_index=ensemble.step_index + 1)


def _description(model, lattice, kernel, sim_config, extra=None):
    desc = {"model": model.name, "params": model.params, "lattice": lattice.describe(),
            "kernel": None if kernel is None else kernel.describe(),
            "dt": sim_config.dt, "T": sim_config.t_final,
            "scheme": sim_config.resolved_scheme(model), "seed": sim_config.seed}
    if extra:
        desc.update(extra)
    return desc


def _run_batch(thetas, omegas, replicas, seed, model, op, sim_config, sample_steps, drift_fn=None,
               observer=None):
    drift_fn = drift_fn or model.drift
    scheme = sim_config.resolved_scheme(model)
    dt, sigma = sim_config.dt, model.sigma
    noisy = np.any(sigma != 0)
    wanted = {int(s): k for k, s in enumerate(sample_steps)}
    out = np.empty((len(sample_steps),) + thetas.shape)
    if 0 in wanted:
        out[wanted[0]] = thetas
    if observer is not None:
        observer(0, thetas)
    for n in range(sim_config.n_steps):
        noise = None
        if noisy:
            noise = np.stack([_noise(seed, r, n, thetas.shape[1:]) for r in replicas])
        thetas = _advance(thetas, omegas, drift_fn, op, sigma, dt, scheme, noise)
        _check_finite(thetas, n, replicas)
        if observer is not None:
            observer(n + 1, thetas)
        if n + 1 in wanted:
            out[wanted[n + 1]] = thetas
    return out


def simulate(ensemble, model, kernel, sim_config, sample_times=None, engine="auto",
             drift_fn=None):
    """Integrate one ensemble over ``[0, T]`` and record snapshots.

    Parameters
    ----------
    sample_times : array_like, optional
        Times on the step grid; defaults to 33 equispaced snapshots.
    drift_fn : callable, optional
        Replacement for the model drift (used by the Yosida studies).
    """
    batch = _batch_of([ensemble])
    recs = _simulate_batch_records(batch, model, kernel, sim_config, sample_times, engine, drift_fn)
    return recs[0]


def _batch_of(ensembles):
    thetas = np.stack([e.thetas for e in ensembles])
    omegas = np.stack([e.omegas for e in ensembles])
    return ensembles, thetas, omegas


def _simulate_batch_records(batch, model, kernel, sim_config, sample_times, engine, drift_fn,
                            operator=None):
    ensembles, thetas, omegas = batch
    lattice = ensembles[0].lattice
    times = sim_config.default_sample_times() if sample_times is None else np.asarray(sample_times, float)
    steps = [sim_config.step_of(t) for t in times]
    if any(b <= a for a, b in zip(steps, steps[1:])):
        raise ContractViolation("sample times must be strictly increasing")
    op = operator
    if op is None and kernel is not None:
        op = interaction_operator(lattice, kernel, model, engine)
    replicas = [e.replica for e in ensembles]
    states = _run_batch(thetas, omegas, replicas, ensembles[0].seed, model, op, sim_config, steps,
                        drift_fn)
    digest = config_hash(_description(model, lattice, kernel, sim_config))
    out = []
    for k, ens in enumerate(ensembles):
        meta = {"seed": ens.seed, "replica": ens.replica, "config_hash": digest,
                "scheme": sim_config.resolved_scheme(model), "dt": sim_config.dt}
        out.append(TrajectoryRecord(steps_to_times(steps, sim_config), states[:, k], ens.omegas,
                                    ens.positions, meta))
    return out


def steps_to_times(steps, sim_config):
    return np.asarray(steps, dtype=float) * sim_config.dt


def simulate_replicas(model, lattice, kernel, initial_law, disorder_law, sim_config, replicas,
                      sample_times=None, engine="auto", workers=1, batch_size=16, drift_fn=None):
    """Simulate independent replicas ``0 .. replicas-1``.

    Replicas are integrated in vectorised batches; batches may run on a
    thread pool.  Every replica draws from its own keyed streams, so the
    records are identical for any ``workers`` and ``batch_size``.
    """
    if replicas < 1:
        raise ContractViolation("need at least one replica")
    op = None if kernel is None else interaction_operator(lattice, kernel, model, engine)
    ensembles = [init_ensemble(model, lattice, initial_law, disorder_law, sim_config.seed, r)
                 for r in range(replicas)]
    groups = [ensembles[i:i + batch_size] for i in range(0, replicas, batch_size)]

    def run(group):
        return _simulate_batch_records(_batch_of(group), model, kernel, sim_config, sample_times,
                                       engine, drift_fn, operator=op)

    if workers > 1 and len(groups) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, groups))
    else:
        parts = [run(g) for g in groups]
    return [rec for part in parts for rec in part]
