"""Monte-Carlo construction of the mean-field limit.

A measure on path space disintegrates over disorder and position,
``m(d theta, d omega, dx) = m^{omega, x}(d theta) mu(d omega) dx``.  It is
represented here by a :class:`PathLaw`: bundles of ``M`` sampled
trajectories for every node of a quadrature grid in ``(omega, x)``.

The limit is the fixed point of the map ``Theta`` which sends ``m`` to the
law of the SDE

    d theta = c(theta, omega) dt + int Gamma(theta, omega, tb, ob) Psi(x, xb) m_t(d tb, d ob, d xb) dt
              + sigma dB,

and :func:`picard_solve` iterates it from the decoupled law.  The same
Brownian draws and initial values are used at every iteration (they are
keyed by node, sample and step), so successive iterates are synchronously
coupled and their path distance is a low-variance contraction proxy.

Spatial integrals use the cells of the grid ``D_K``: the singular part of
the weight is integrated exactly over each cell and the bounded remainder
is taken at the node.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import ContractViolation
from .lattice import cell_weight_matrix, kernel_constants, node_cells
from .rng import generator
from .simulate import _increment

__all__ = [
    "GridSpec",
    "PathLaw",
    "PicardReport",
    "decoupled_law",
    "theta_map",
    "picard_solve",
    "measure_integrate",
    "coupled_path_distance",
    "ProbeReport",
    "propagator_lipschitz_probe",
    "gronwall_constant",
    "save_path_law",
    "load_path_law",
]

PATH_LAW_VERSION = 1
FULL_STORAGE_LIMIT = 60_000_000


@dataclass(frozen=True)
class GridSpec:
    """Discretisation of the disintegrated measure.

    Parameters
    ----------
    k_ref : int
        Positions are the nodes of ``D_{k_ref}``.
    omega_samples : int
        Quadrature nodes per disorder axis (one node for a point mass).
    path_samples : int
        Trajectories ``M`` per node.
    path_points : int
        Approximate number of stored time points per trajectory; the full
        step grid is kept when the coupling is not separable.
    """

    k_ref: int = 16
    omega_samples: int = 16
    path_samples: int = 256
    path_points: int = 101

    def __post_init__(self):
        if self.k_ref < 1 or self.path_samples < 1 or self.omega_samples < 1:
            raise ContractViolation("grid sizes must be positive")


@dataclass(frozen=True)
class PathLaw:
    """Sampled path-space measure on an ``(omega, x)`` grid.

    Attributes
    ----------
    grid : GridSpec
    boundary : str
    x_nodes, x_lo, x_hi : ndarray, shape (nx, d)
        Position nodes and their quadrature cells.
    x_weights : ndarray, shape (nx,)
    omega_nodes : ndarray, shape (nw, n)
    omega_weights : ndarray, shape (nw,)
    dt : float
    n_steps : int
    path_steps : ndarray of int
        Step indices at which trajectories are stored.
    paths : ndarray, shape (len(path_steps), nx, nw, M, m)
    field_stats : ndarray or None, shape (n_steps + 1, nx, rank)
        Weighted averages of the right factors of a separable coupling at
        every step; this is all the map ``Theta`` needs from the measure.
    iteration : int
    seed : int
    model_name : str
    """

    grid: GridSpec
    boundary: str
    x_nodes: np.ndarray
    x_lo: np.ndarray
    x_hi: np.ndarray
    x_weights: np.ndarray
    omega_nodes: np.ndarray
    omega_weights: np.ndarray
    dt: float
    n_steps: int
    path_steps: np.ndarray
    paths: np.ndarray
    field_stats: object
    iteration: int
    seed: int
    model_name: str

    @property
    def t_final(self):
        return self.n_steps * self.dt

    @property
    def times(self):
        return self.path_steps * self.dt

    def time_index(self, t):
        """Index of ``t`` in the stored time grid, or raise."""
        k = t / self.dt
        if abs(k - round(k)) > 1e-7:
            raise ContractViolation(f"time {t} is off the step grid")
        hits = np.nonzero(self.path_steps == int(round(k)))[0]
        if hits.size == 0:
            raise ContractViolation(f"time {t} is not stored in this path law")
        return int(hits[0])

    def states_at(self, t):
        return self.paths[self.time_index(t)]

    def same_layout(self, other):
        return (self.paths.shape == other.paths.shape and self.seed == other.seed
                and np.array_equal(self.path_steps, other.path_steps)
                and np.array_equal(self.x_nodes, other.x_nodes)
                and np.array_equal(self.omega_nodes, other.omega_nodes)
                and self.dt == other.dt)


@dataclass(frozen=True)
class PicardReport:
    """Contraction proxies ``delta(m^{k+1}, m^k)`` of the Picard iteration."""

    deltas: tuple
    stderrs: tuple
    converged: bool
    iterations: int

    def non_increasing(self, tolerance_stderr=2.0):
        """Whether deltas after the first never rise by more than the tolerance."""
        d, s = np.array(self.deltas), np.array(self.stderrs)
        rises = d[2:] - d[1:-1]
        tol = tolerance_stderr * np.hypot(s[2:], s[1:-1])
        return bool(np.all(rises <= tol))


# ---------------------------------------------------------------------------
# Bundle integration


class _Setup:
    """Grid, weights and keyed draws shared by every iterate."""

    def __init__(self, model, kernel, grid, sim_config, initial_law, disorder_law, seed, boundary):
        d = kernel.dim
        self.model, self.kernel, self.grid = model, kernel, grid
        self.sim, self.seed, self.boundary = sim_config, int(seed), boundary
        self.x_nodes, self.x_lo, self.x_hi, self.x_weights = node_cells(grid.k_ref, d, boundary)
        omega_nodes, omega_weights = disorder_law.quadrature(grid.omega_samples)
        self.omega_nodes, self.omega_weights = omega_nodes, omega_weights
        nx, nw, M, m = len(self.x_nodes), len(omega_nodes), grid.path_samples, model.state_dim
        self.shape = (nx, nw, M, m)
        # W[x, xb] = int_{cell xb} Psi(x, y) dy
        self.W = cell_weight_matrix(kernel, self.x_nodes, self.x_nodes, self.x_lo, self.x_hi, boundary)
        self.field_bound = model.gamma_sup * float(self.W.sum(axis=1).max())
        init = initial_law.sample(generator(seed, "path-initial"), nx * nw * M)
        self.theta0 = np.asarray(init, dtype=float).reshape(self.shape)
        for a in (self.x_nodes, self.x_lo, self.x_hi, self.x_weights, omega_nodes, omega_weights):
            a.setflags(write=False)
        self.omega_b = omega_nodes[None, :, None, :]
        steps = sim_config.n_steps
        if model.separable is None:
            stride = 1
        else:
            stride = max(1, steps // max(1, grid.path_points - 1))
            while steps % stride:
                stride -= 1
        self.path_steps = np.arange(0, steps + 1, stride)
        if model.separable is None and self.path_steps.size * self.theta0.size > FULL_STORAGE_LIMIT:
            raise ContractViolation("non-separable coupling needs full trajectories; grid too large")
        self.noisy = bool(np.any(model.sigma != 0))

    def noise(self, n):
        return generator(self.seed, "path-noise", n).standard_normal(self.shape)

    def summaries(self, right):
        """Quadrature averages of the right factors, shape ``(nx, r)``."""
        per_node = right.mean(axis=2)                                  # (nx, nw, r)
        return np.einsum("xwr,w->xr", per_node, self.omega_weights)

    def field(self, thetas, current, n, left=None):
        """Interaction term for every bundle state at step ``n``."""
        model = self.model
        if model.separable is not None:
            G = self.W @ current.field_stats[n]                        # (nx, r)
            A = model.separable.left(thetas, self.omega_b) if left is None else left
            out = np.einsum("xwsrm,xr->xwsm", A, G)
        else:
            ref = current.paths[n]                                     # (nx, nw, M, m)
            nx, nw, M, m = ref.shape
            flat_ref = ref.reshape(-1, m)
            ref_omega = np.broadcast_to(self.omega_b, ref.shape[:3] + (self.omega_nodes.shape[1],))
            ref_omega = ref_omega.reshape(-1, self.omega_nodes.shape[1])
            # quadrature weight of each reference sample seen from node x
            wq = (self.W[:, :, None] * (self.omega_weights / M)[None, None, :]).reshape(self.W.shape[0], nx * nw)
            wq = np.repeat(wq, M, axis=1)
            flat = thetas.reshape(self.W.shape[0], -1, m)
            omg = np.broadcast_to(self.omega_b, thetas.shape[:3] + (self.omega_nodes.shape[1],))
            omg = omg.reshape(self.W.shape[0], -1, self.omega_nodes.shape[1])
            out = np.empty_like(flat)
            for x in range(flat.shape[0]):
                g = model.coupling(flat[x][:, None, :], omg[x][:, None, :],
                                   flat_ref[None, :, :], ref_omega[None, :, :])
                out[x] = np.einsum("ijm,j->im", g, wq[x])
            out = out.reshape(thetas.shape)
        norm = np.linalg.norm(out, axis=-1).max() if out.size else 0.0
        if norm > self.field_bound * (1 + 1e-9) + 1e-12:
            raise AssertionError(f"interaction {norm} exceeds the bound {self.field_bound}")
        return out

    def run(self, current, iteration):
        model, sim = self.model, self.sim
        dt, scheme, sigma = sim.dt, sim.resolved_scheme(model), model.sigma
        thetas = self.theta0.copy()
        stored = np.empty((self.path_steps.size,) + self.shape)
        stored[0] = thetas
        slot = 1
        sep = model.separable
        stats = None
        if sep is not None:
            stats = np.empty((sim.n_steps + 1, self.shape[0], sep.rank))
        for n in range(sim.n_steps):
            left = None
            if sep is not None:
                left, right = sep.factors(thetas, self.omega_b)
                stats[n] = self.summaries(right)
            drift = model.drift(thetas, self.omega_b)
            if current is not None:
                drift = drift + self.field(thetas, current, n, left)
            thetas = thetas + _increment(drift, dt, scheme)
            if self.noisy:
                thetas = thetas + math.sqrt(dt) * self.noise(n) @ sigma.T
            if not np.all(np.isfinite(thetas)):
                raise FloatingPointError(f"non-finite bundle state at step {n}")
            if slot < self.path_steps.size and self.path_steps[slot] == n + 1:
                stored[slot] = thetas
                slot += 1
        if sep is not None:
            stats[sim.n_steps] = self.summaries(sep.right(thetas, self.omega_b))
        return PathLaw(
            grid=self.grid, boundary=self.boundary, x_nodes=self.x_nodes, x_lo=self.x_lo,
            x_hi=self.x_hi, x_weights=self.x_weights, omega_nodes=self.omega_nodes,
            omega_weights=self.omega_weights, dt=dt, n_steps=sim.n_steps,
            path_steps=self.path_steps, paths=stored, field_stats=stats, iteration=iteration,
            seed=self.seed, model_name=model.name,
        )


def decoupled_law(model, kernel, grid, sim_config, initial_law, disorder_law, seed=0, boundary="free"):
    """Law of the SDE with the interaction switched off."""
    setup = _Setup(model, kernel, grid, sim_config, initial_law, disorder_law, seed, boundary)
    return setup.run(None, 0), setup


def _setup_for(current, model, kernel, sim_config, initial_law, disorder_law):
    return _Setup(model, kernel, current.grid, sim_config, initial_law, disorder_law,
                  current.seed, current.boundary)


def theta_map(current, model, kernel, sim_config, initial_law, disorder_law, setup=None):
    """Apply ``Theta``: simulate fresh bundles driven by the frozen measure ``current``.

    The initial values and Brownian draws are the ones keyed by
    ``current.seed``, identical at every iteration.
    """
    setup = setup or _setup_for(current, model, kernel, sim_config, initial_law, disorder_law)
    if current.n_steps != sim_config.n_steps or not math.isclose(current.dt, sim_config.dt):
        raise ContractViolation("path law and simulation config use different step grids")
    return setup.run(current, current.iteration + 1)


def picard_solve(model, kernel, grid, sim_config, initial_law, disorder_law, tol=1e-3, max_iter=12,
                 seed=0, boundary="free", kappa=None):
    """Iterate ``m^{k+1} = Theta(m^k)`` from the decoupled law.

    Stops when the synchronous-coupling distance between consecutive
    iterates drops below ``tol`` or after ``max_iter`` maps.

    Returns
    -------
    law : PathLaw
        Last iterate.
    report : PicardReport
        ``deltas[k-1] = delta(m^k, m^{k-1})`` with jackknife standard errors.
    """
    if tol <= 0:
        raise ContractViolation("tolerance must be positive")
    kappa = kappa or max(2.0, model.poly_bound.kappa)
    law, setup = decoupled_law(model, kernel, grid, sim_config, initial_law, disorder_law, seed, boundary)
    deltas, errs = [], []
    converged = False
    for _ in range(max_iter):
        new = theta_map(law, model, kernel, sim_config, initial_law, disorder_law, setup)
        value, err = coupled_path_distance(new, law, kappa, kernel.p, return_stderr=True)
        deltas.append(value)
        errs.append(err)
        law = new
        if value < tol:
            converged = True
            break
    return law, PicardReport(tuple(deltas), tuple(errs), converged, len(deltas))


# ---------------------------------------------------------------------------
# Integration and distances


def measure_integrate(f, law, t):
    """``<f, m_t>`` by quadrature over nodes and averaging over samples.

    ``f`` is either a plain callable ``f(theta, omega, x)`` (evaluated at
    the node position) or a test function exposing ``g(theta, omega)`` and
    ``spatial_cell_integrals(nodes, lo, hi, boundary)``, whose spatial
    factor is then integrated cell by cell with the singularity-aware rule.
    """
    states = law.states_at(t)                                       # (nx, nw, M, m)
    omega = np.broadcast_to(law.omega_nodes[None, :, None, :],
                            states.shape[:3] + (law.omega_nodes.shape[1],))
    if hasattr(f, "spatial_cell_integrals"):
        per = np.asarray(f.g(states, omega), dtype=float).mean(axis=2)   # (nx, nw)
        spatial = f.spatial_cell_integrals(law.x_nodes, law.x_lo, law.x_hi, law.boundary)
        return float(spatial @ (per @ law.omega_weights))
    x = np.broadcast_to(law.x_nodes[:, None, None, :], states.shape[:3] + (law.x_nodes.shape[1],))
    vals = np.asarray(f(states, omega, x), dtype=float)
    vals = np.broadcast_to(vals, states.shape[:3]).mean(axis=2)
    return float(law.x_weights @ (vals @ law.omega_weights))


def _jackknife(stat, samples, blocks):
    """Delete-one-block jackknife standard error of ``stat`` along the sample axis."""
    M = samples.shape[2]
    blocks = max(2, min(blocks, M))
    edges = np.linspace(0, M, blocks + 1).astype(int)
    reps = []
    for b in range(blocks):
        keep = np.r_[0:edges[b], edges[b + 1]:M]
        reps.append(stat(samples[:, :, keep]))
    reps = np.array(reps)
    return float(np.sqrt((blocks - 1) / blocks * np.sum((reps - reps.mean()) ** 2)))


def coupled_path_distance(law_a, law_b, kappa=2.0, p=2, return_stderr=False, blocks=16):
    """Synchronous-coupling bound on the path-space distance of two laws.

    Per node: ``(E sup_t |theta^a - theta^b|^kappa)^{1/kappa}`` over paired
    samples, with the supremum over the stored time grid; then an ``L^p``
    average over nodes with the quadrature weights.
    """
    if not law_a.same_layout(law_b):
        raise ContractViolation("path laws do not share grid, time grid and noise keys")
    diff = np.linalg.norm(law_a.paths - law_b.paths, axis=-1)     # (S, nx, nw, M)
    sup = diff.max(axis=0)                                         # (nx, nw, M)
    w = law_a.x_weights[:, None] * law_a.omega_weights[None, :]

    def stat(s):
        per_node = np.mean(s**kappa, axis=2) ** (1.0 / kappa)
        return float(np.sum(w * per_node**p) ** (1.0 / p))

    value = stat(sup)
    if not return_stderr:
        return value
    return value, _jackknife(stat, sup, blocks)


# ---------------------------------------------------------------------------
# Propagator probe


def gronwall_constant(model, kernel, law=None):
    """``C = 2 L + 3 |Gamma|_Lip S(Psi)`` of the flow stability bound."""
    s = kernel_constants(kernel).s_psi
    if law is not None:
        W = cell_weight_matrix(kernel, law.x_nodes, law.x_nodes, law.x_lo, law.x_hi, law.boundary)
        s = max(s, float(W.sum(axis=1).max()))
    return 2 * model.one_sided_L + 3 * model.gamma_lip * s


@dataclass(frozen=True)
class ProbeReport:
    """Observed Gronwall quotients of the frozen mean-field flow."""

    max_quotient: float
    constant: float
    pairs: int
    quotients: np.ndarray

    @property
    def passed(self):
        return bool(self.max_quotient <= 1.05)


def _random_pairs(model, law, count, seed):
    rng = generator(seed, "probe-pairs")
    m, k = model.state_dim, model.disorder_dim
    base = law.paths[0].reshape(-1, m)
    scale = max(1.0, float(np.std(base)))
    th1 = scale * rng.standard_normal((count, m))
    th2 = th1 + scale * rng.standard_normal((count, m)) * 10.0 ** rng.uniform(-3, 0, (count, 1))
    if model.disorder_box is not None:
        lo, hi = model.disorder_box
        om1 = lo + rng.random((count, k)) * (hi - lo)
        om2 = lo + rng.random((count, k)) * (hi - lo)
    else:
        om1 = law.omega_nodes[rng.integers(0, len(law.omega_nodes), count)]
        om2 = om1 + 0.1 * rng.standard_normal((count, k)) * (rng.random((count, 1)) < 0.5)
    xi = rng.integers(0, len(law.x_nodes), count)
    return th1, om1, th2, om2, xi


def propagator_lipschitz_probe(model, kernel, law, pairs=1000, t=0.0, T=None, seed=0):
    """Gronwall quotients of paired flows under the frozen measure ``law``.

    Each pair ``(theta1, omega1), (theta2, omega2)`` at node ``x`` is
    integrated from ``t`` to ``T`` with the interaction taken from ``law``
    and shared noise.  The quotient is
    ``(|d Phi|^2 + |d omega|^2) / (exp(C (T - t)) (|d theta|^2 + |d omega|^2))``
    with ``C`` from :func:`gronwall_constant`.

    ``pairs`` is a count (random pairs) or a tuple
    ``(theta1, omega1, theta2, omega2, x_index)`` of arrays.
    """
    T = law.t_final if T is None else T
    dt = law.dt
    n0, n1 = int(round(t / dt)), int(round(T / dt))
    if isinstance(pairs, (int, np.integer)):
        th1, om1, th2, om2, xi = _random_pairs(model, law, int(pairs), seed)
    else:
        th1, om1, th2, om2, xi = (np.asarray(a) for a in pairs)
    P = th1.shape[0]
    W = cell_weight_matrix(kernel, law.x_nodes, law.x_nodes, law.x_lo, law.x_hi, law.boundary)
    thetas = np.concatenate([th1, th2]).astype(float)
    omegas = np.concatenate([om1, om2]).astype(float)
    nodes = np.concatenate([xi, xi])
    C = gronwall_constant(model, kernel, law)
    noisy = bool(np.any(model.sigma != 0))
    nx, nw, M = law.paths.shape[1:4]
    for n in range(n0, n1):
        drift = model.drift(thetas, omegas)
        if model.separable is not None:
            G = (W @ law.field_stats[n])[nodes]                            # (2P, r)
            A = model.separable.left(thetas, omegas)                       # (2P, r, m)
            drift = drift + np.einsum("prm,pr->pm", A, G)
        else:
            idx = int(np.nonzero(law.path_steps == n)[0][0])
            ref = law.paths[idx].reshape(-1, model.state_dim)
            ref_om = np.repeat(np.tile(law.omega_nodes, (nx, 1)), M, axis=0)
            wq = np.repeat((W[:, :, None] * (law.omega_weights / M)).reshape(nx, nx * nw), M, axis=1)
            g = model.coupling(thetas[:, None, :], omegas[:, None, :], ref[None], ref_om[None])
            drift = drift + np.einsum("pjm,pj->pm", g, wq[nodes])
        thetas = thetas + drift * dt
        if noisy:
            xi_noise = generator(seed, "probe-noise", n).standard_normal((P, model.state_dim))
            thetas = thetas + math.sqrt(dt) * np.concatenate([xi_noise, xi_noise]) @ model.sigma.T
    dphi = np.sum((thetas[:P] - thetas[P:]) ** 2, axis=1)
    dom = np.sum((om1 - om2) ** 2, axis=1)
    dini = np.sum((th1 - th2) ** 2, axis=1) + dom
    with np.errstate(invalid="ignore", divide="ignore"):
        q = np.where(dini > 0, (dphi + dom) / (math.exp(C * (T - t)) * dini), 0.0)
    return ProbeReport(float(q.max()) if q.size else 0.0, C, P, q)


# ---------------------------------------------------------------------------
# Persistence


def save_path_law(law, path):
    """Write a path law to a versioned ``.npz`` file."""
    arrays = {k: getattr(law, k) for k in ("x_nodes", "x_lo", "x_hi", "x_weights", "omega_nodes",
                                           "omega_weights", "path_steps", "paths")}
    if law.field_stats is not None:
        arrays["field_stats"] = law.field_stats
    g = law.grid
    meta = np.array([PATH_LAW_VERSION, g.k_ref, g.omega_samples, g.path_samples, g.path_points,
                     law.n_steps, law.iteration, law.seed], dtype=np.int64)
    np.savez(path, meta=meta, dt=np.array(law.dt), boundary=np.array(law.boundary),
             model_name=np.array(law.model_name), **arrays)


def load_path_law(path):
    """Read a path law written by :func:`save_path_law`."""
    with np.load(path) as z:
        meta = z["meta"]
        if int(meta[0]) != PATH_LAW_VERSION:
            raise ContractViolation(f"unsupported path-law version {int(meta[0])}")
        grid = GridSpec(*(int(v) for v in meta[1:5]))
        return PathLaw(
            grid=grid, boundary=str(z["boundary"]), x_nodes=z["x_nodes"], x_lo=z["x_lo"],
            x_hi=z["x_hi"], x_weights=z["x_weights"], omega_nodes=z["omega_nodes"],
            omega_weights=z["omega_weights"], dt=float(z["dt"]), n_steps=int(meta[5]),
            path_steps=z["path_steps"], paths=z["paths"],
            field_stats=z["field_stats"] if "field_stats" in z.files else None,
            iteration=int(meta[6]), seed=int(meta[7]), model_name=str(z["model_name"]),
        )
