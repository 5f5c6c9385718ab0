"""Test functions and random-measure distances.

Distances between the empirical measure of the particle system and the
mean-field reference are suprema, over classes of test functions, of
``(E |<f, nu^N> - <f, nu>|^p)^{1/p}``.  Two classes are implemented:

* P-nearest functions ``f = g(theta, omega) chi_R(x - a)`` with ``g``
  Lipschitz, normalised so that ``Lip(g) <= 1`` and ``|f| <= 1``;
* power-law functions ``f = g(theta, omega) |x - a|^{-alpha} b(x - a)``
  normalised by a weighted Hoelder seminorm (Lipschitz term, bounded term
  and Hoelder term of ``|x - a|^{2 gamma} f``).

The suprema are replaced by finite deterministic dictionaries, so every
reported distance is a lower bound of the distance over the full class.
"""

from dataclasses import dataclass, field
from fractions import Fraction
import math

import numpy as np

from .errors import ContractViolation
from .lattice import box_integral, choose_gamma, conjugate_exponent, p_nearest, power_law
from .rng import generator

__all__ = [
    "EmpiricalMeasure",
    "empirical_from_record",
    "GFeature",
    "TestFunction",
    "LinearCombination",
    "empirical_eval",
    "seminorm_terms",
    "seminorm",
    "seminorm_bound",
    "anchor_grid",
    "anchors_up_to",
    "build_dictionary",
    "DistanceEstimate",
    "reference_values",
    "estimate_distance",
    "distance_differences",
    "distance_from_differences",
    "evaluation_matrix",
    "d_infinity",
    "WeightedSum",
    "indicator_mass",
    "riemann_sum",
    "RiemannReport",
    "riemann_discretization_check",
]

SAFETY = 1.1


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Atoms ``(theta_i, omega_i, x_i)`` with equal weights ``1/n``."""

    thetas: np.ndarray
    omegas: np.ndarray
    positions: np.ndarray
    time: float = 0.0

    @property
    def size(self):
        return self.thetas.shape[0]


def empirical_from_record(record, t):
    """Snapshot of a trajectory record at time ``t``."""
    hits = np.nonzero(np.isclose(record.times, t, rtol=0, atol=1e-9))[0]
    if hits.size == 0:
        raise ContractViolation(f"time {t} is not a recorded snapshot")
    k = int(hits[0])
    return EmpiricalMeasure(record.states[k], record.omegas, record.positions, float(record.times[k]))


# ---------------------------------------------------------------------------
# Features in (theta, omega)


@dataclass(frozen=True)
class GFeature:
    """Bounded Lipschitz feature of ``(theta, omega)``.

    Kinds
    -----
    ``constant``
        ``value``.
    ``clipped_linear``
        ``clip(u . (theta, omega) + offset, -1, 1)`` with ``|u| = 1``.
    ``sine``
        ``sin(k . theta + phase)`` with ``|k| <= 1``.
    ``windowed``
        ``clipped_linear`` times the tent ``max(0, 1 - |omega - centre| / width)``.
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __call__(self, theta, omega):
        theta = np.asarray(theta, dtype=float)
        omega = np.asarray(omega, dtype=float)
        p = self.params
        if self.kind == "constant":
            return np.full(np.broadcast_shapes(theta.shape[:-1], omega.shape[:-1]), p["value"])
        if self.kind == "sine":
            return np.sin(theta @ p["k"] + p["phase"])
        z = theta @ p["u_theta"] + omega @ p["u_omega"] + p["offset"]
        lin = np.clip(z, -1.0, 1.0)
        if self.kind == "clipped_linear":
            return lin
        if self.kind == "windowed":
            dist = np.linalg.norm(omega - p["centre"], axis=-1)
            return lin * np.maximum(0.0, 1.0 - dist / p["width"])
        raise ContractViolation(f"unknown feature kind {self.kind!r}")


def _unit(rng, size):
    v = rng.standard_normal(size)
    return v / np.linalg.norm(v)


def _random_feature(rng, kind, m, k):
    if kind == "constant":
        return GFeature("constant", {"value": 1.0})
    if kind == "sine":
        return GFeature("sine", {"k": _unit(rng, m) * rng.uniform(0.25, 1.0),
                                 "phase": rng.uniform(0, 2 * np.pi)})
    u = _unit(rng, m + k)
    params = {"u_theta": u[:m], "u_omega": u[m:], "offset": rng.uniform(-0.5, 0.5)}
    if kind == "windowed":
        params.update(centre=rng.standard_normal(k) * 0.5, width=rng.uniform(0.5, 2.0))
    return GFeature(kind, params)


# ---------------------------------------------------------------------------
# Test functions


@dataclass(frozen=True)
class TestFunction:
    """Product test function ``scale * g(theta, omega) * s(x)``.

    ``s(x) = chi_R(x - a)`` for the ``pnn`` family and
    ``s(x) = |x - a|^{-alpha} b(x - a)`` for the ``powerlaw`` family, with
    ``b`` a Gaussian bump of width ``bump_width`` (or 1 when ``None``).
    """

    __test__ = False  # not a pytest class

    family: str
    anchor: np.ndarray
    feature: GFeature
    scale: float = 1.0
    R: float = None
    alpha: float = 0.0
    gamma: float = None
    bump_width: float = None

    def __post_init__(self):
        object.__setattr__(self, "anchor", np.atleast_1d(np.asarray(self.anchor, dtype=float)))
        if self.family == "pnn":
            if self.R is None or not 0 < self.R <= 1:
                raise ContractViolation("pnn test functions need 0 < R <= 1")
        elif self.family == "powerlaw":
            if self.gamma is None:
                object.__setattr__(self, "gamma", choose_gamma(self.alpha, self.dim))
        else:
            raise ContractViolation(f"unknown family {self.family!r}")

    @property
    def dim(self):
        return self.anchor.size

    def with_scale(self, scale):
        return TestFunction(self.family, self.anchor, self.feature, scale, self.R, self.alpha,
                            self.gamma, self.bump_width)

    def g(self, theta, omega):
        return self.scale * self.feature(theta, omega)

    def bump(self, u):
        u = np.asarray(u, dtype=float)
        if self.bump_width is None:
            return np.ones(u.shape[:-1])
        return np.exp(-np.sum(u**2, axis=-1) / (2 * self.bump_width**2))

    def spatial(self, x):
        """Spatial factor ``s(x)``; ``inf`` at the anchor for singular profiles."""
        u = np.asarray(x, dtype=float) - self.anchor
        if self.family == "pnn":
            return np.all(np.abs(u) <= self.R, axis=-1) / (2 * self.R) ** self.dim
        r = np.linalg.norm(u, axis=-1)
        with np.errstate(divide="ignore"):
            sing = r ** (-self.alpha) if self.alpha > 0 else np.ones_like(r)
        return sing * self.bump(u)

    def coincident(self, x):
        """Mask of positions sitting exactly on a singular anchor."""
        if self.family != "powerlaw" or self.alpha == 0:
            return np.zeros(np.shape(x)[:-1], dtype=bool)
        return np.all(np.abs(np.asarray(x) - self.anchor) < 1e-12, axis=-1)

    def __call__(self, theta, omega, x):
        return self.g(theta, omega) * self.spatial(x)

    def spatial_cell_integrals(self, nodes, lo, hi, boundary="free"):
        """``int_{cell} s(y) dy`` per cell; singular part exact, bump at the node."""
        lo, hi = lo - self.anchor, hi - self.anchor
        if self.family == "pnn":
            return box_integral(p_nearest(self.R, self.dim), lo, hi)
        exact = box_integral(power_law(self.alpha, self.dim), lo, hi)
        return exact * self.bump(nodes - self.anchor)


@dataclass(frozen=True)
class LinearCombination:
    """``sum_k coef_k f_k``; evaluations combine the terms' evaluations."""

    terms: tuple

    def __call__(self, theta, omega, x):
        return sum(c * f(theta, omega, x) for c, f in self.terms)


def empirical_eval(f, em, return_excluded=False):
    """``<f, nu^N> = n^{-1} sum_i f(theta_i, omega_i, x_i)``.

    Atoms sitting exactly on the anchor of a singular power-law function
    are dropped (they contribute 0) and counted.
    """
    if isinstance(f, LinearCombination):
        parts = [empirical_eval(t, em, True) for _, t in f.terms]
        value = sum(c * v for (c, _), (v, _) in zip(f.terms, parts))
        excluded = sum(e for _, e in parts)
        return (value, excluded) if return_excluded else value
    if isinstance(f, TestFunction):
        mask = f.coincident(em.positions)
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.where(mask, 0.0, f.spatial(em.positions))
        vals = f.g(em.thetas, em.omegas) * s
        excluded = int(mask.sum())
    else:
        vals = np.asarray(f(em.thetas, em.omegas, em.positions), dtype=float)
        excluded = 0
    value = float(np.sum(vals) / em.size)
    return (value, excluded) if return_excluded else value


# ---------------------------------------------------------------------------
# Seminorms


def _probe_points(rng, count, m, k, radius=3.0):
    z = rng.uniform(-radius, radius, (count, m + k))
    z2 = rng.uniform(-radius, radius, (count, m + k))
    near = rng.random(count) < 0.75
    part = rng.integers(0, 3, count)    # 0: theta only, 1: omega only, 2: both
    step = rng.standard_normal((count, m + k)) * 10.0 ** rng.uniform(-4, -1, (count, 1))
    step[part == 0, m:] = 0.0
    step[part == 1, :m] = 0.0
    z2[near] = z[near] + step[near]
    return z, z2


def _holder_constant(h, anchor, s, rng, count):
    d = anchor.size
    x = rng.uniform(-0.5, 0.5, (count, d))
    y = rng.uniform(-0.5, 0.5, (count, d))
    sel = rng.integers(0, 3, count)
    y[sel == 0] = anchor                                                  # pairs with the anchor
    near = sel == 1
    y[near] = np.clip(x[near] + rng.standard_normal((near.sum(), d)) * 10.0 ** rng.uniform(-4, -1, (near.sum(), 1)), -0.5, 0.5)
    dist = np.linalg.norm(x - y, axis=1)
    ok = dist > 0
    diff = np.abs(h(x) - h(y))[ok]
    return float(np.max(diff / dist[ok] ** s)) if s > 0 else float(np.max(diff))


def seminorm_terms(f, probe_resolution=4096, seed=0, state_dim=None, disorder_dim=None):
    """Sampled estimates of the seminorm terms of a product test function.

    Returns a dict with ``lipschitz`` (of ``|x-a|^alpha f`` in
    ``(theta, omega)``), ``bounded`` (sup of ``|x-a|^alpha |f|``) and
    ``holder`` (Hoelder constant of ``|x-a|^{2 gamma} f`` in ``x``).  For the
    P-nearest family the Lipschitz term refers to ``g`` and ``bounded`` is
    ``sup |f|``; the Hoelder term is not part of that seminorm and is 0.
    """
    if probe_resolution < 64:
        raise ContractViolation("probe resolution must be at least 64")
    m = state_dim or _infer_dim(f.feature, "theta")
    k = disorder_dim or _infer_dim(f.feature, "omega")
    rng = generator(seed, "seminorm")
    z, z2 = _probe_points(rng, probe_resolution, m, k)
    g1, g2 = f.g(z[:, :m], z[:, m:]), f.g(z2[:, :m], z2[:, m:])
    dz = np.linalg.norm(z[:, :m] - z2[:, :m], axis=1) + np.linalg.norm(z[:, m:] - z2[:, m:], axis=1)
    ok = dz > 0
    lip_g = float(np.max(np.abs(g1 - g2)[ok] / dz[ok])) if ok.any() else 0.0
    sup_g = float(max(np.max(np.abs(g1)), np.max(np.abs(g2))))
    if f.family == "pnn":
        return {"lipschitz": lip_g, "bounded": sup_g / (2 * f.R) ** f.dim, "holder": 0.0}
    x = np.vstack([f.anchor[None, :], rng.uniform(-0.5, 0.5, (probe_resolution, f.dim))])
    sup_b = float(np.max(np.abs(f.bump(x - f.anchor))))
    s_exp = 2 * f.gamma - f.alpha

    def h(pts):
        u = pts - f.anchor
        return np.linalg.norm(u, axis=-1) ** s_exp * f.bump(u)

    holder = _holder_constant(h, f.anchor, min(max(s_exp, 0.0), 1.0), rng, probe_resolution)
    return {"lipschitz": lip_g * sup_b, "bounded": sup_g * sup_b, "holder": sup_g * holder}


def _infer_dim(feature, which):
    p = feature.params
    if which == "theta":
        for key in ("u_theta", "k"):
            if key in p:
                return np.size(p[key])
        return 1
    return np.size(p["u_omega"]) if "u_omega" in p else 1


def _feature_bounds(feature):
    """Analytic ``(Lipschitz, sup)`` upper bounds of a feature."""
    p = feature.params
    if feature.kind == "constant":
        return 0.0, abs(p["value"])
    if feature.kind == "sine":
        return float(np.linalg.norm(p["k"])), 1.0
    lin = max(np.linalg.norm(p["u_theta"]), np.linalg.norm(p["u_omega"]))
    if feature.kind == "windowed":
        return float(lin + 1.0 / p["width"]), 1.0
    return float(lin), 1.0


def seminorm_bound(f):
    """Analytic upper bound of the seminorm terms of a product test function.

    Same keys as :func:`seminorm_terms`.  Used together with the sampled
    estimate so that normalised dictionary members never exceed 1.
    """
    lip, sup = _feature_bounds(f.feature)
    lip, sup = abs(f.scale) * lip, abs(f.scale) * sup
    if f.family == "pnn":
        return {"lipschitz": lip, "bounded": sup / (2 * f.R) ** f.dim, "holder": 0.0}
    s_exp = 2 * f.gamma - f.alpha
    expo = min(max(s_exp, 0.0), 1.0)
    diam = math.sqrt(f.dim)
    if s_exp <= 0:
        power_part = 0.0
    elif s_exp <= 1:
        power_part = 1.0
    else:
        power_part = s_exp * diam ** (s_exp - 1)
    if f.bump_width is None:
        bump_part = 0.0
    else:
        bump_lip = math.exp(-0.5) / f.bump_width
        bump_holder = 1.0 if expo == 0 else bump_lip * diam ** (1 - expo)
        bump_part = diam ** max(s_exp, 0.0) * bump_holder
    return {"lipschitz": lip, "bounded": sup, "holder": sup * (power_part + bump_part)}


def seminorm(f, probe_resolution=4096, seed=0, state_dim=None, disorder_dim=None):
    """Sum of the sampled seminorm terms (a lower bound of the true seminorm).

    For the P-nearest family this is the Lipschitz seminorm of ``g``.
    """
    t = seminorm_terms(f, probe_resolution, seed, state_dim, disorder_dim)
    if f.family == "pnn":
        return t["lipschitz"]
    return t["lipschitz"] + t["bounded"] + t["holder"]


# ---------------------------------------------------------------------------
# Dictionaries


def anchor_grid(K, dim):
    """Points of ``D_K`` in lexicographic order."""
    axis = np.arange(-K, K + 1) / (2.0 * K)
    grids = np.meshgrid(*([axis] * dim), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def anchors_up_to(levels, dim):
    """Union of ``D_K`` over the given levels, without duplicates, in first-seen order."""
    seen, out = set(), []
    for K in levels:
        for a in anchor_grid(K, dim):
            key = tuple(np.round(a * 2 * math.lcm(*levels)).astype(int))
            if key not in seen:
                seen.add(key)
                out.append(a)
    return np.array(out)


FEATURE_CYCLE = ("clipped_linear", "sine", "windowed", "clipped_linear", "constant")
BUMP_CYCLE = (None, 0.5, 0.25, 0.1)


def build_dictionary(family, anchors, size=64, seed=0, state_dim=1, disorder_dim=1, R=None,
                     alpha=0.0, gamma=None, probe_resolution=1024):
    """Deterministic finite family of normalised test functions.

    Members cycle through clipped linear, sinusoidal, disorder-windowed and
    constant features; power-law members also cycle through bump widths.
    Each member is rescaled by ``1 / (1.1 * norm)`` where ``norm`` is the
    larger of the sampled seminorm and its analytic upper bound (for the
    P-nearest family ``norm`` also covers ``sup |f|``).
    """
    if size < 1:
        raise ContractViolation("dictionary size must be at least 1")
    anchors = np.atleast_2d(np.asarray(anchors, dtype=float))
    out = []
    for ai, a in enumerate(anchors):
        rng = generator(seed, "dictionary", ai)
        for j in range(size):
            kind = FEATURE_CYCLE[j % len(FEATURE_CYCLE)]
            feat = _random_feature(rng, kind, state_dim, disorder_dim)
            if family == "pnn":
                f = TestFunction("pnn", a, feat, 1.0, R=R)
                t = seminorm_terms(f, probe_resolution, seed + j, state_dim, disorder_dim)
                b = seminorm_bound(f)
                norm = max(t["lipschitz"], t["bounded"], b["lipschitz"], b["bounded"])
            else:
                width = BUMP_CYCLE[(j // len(FEATURE_CYCLE)) % len(BUMP_CYCLE)]
                f = TestFunction("powerlaw", a, feat, 1.0, alpha=alpha, gamma=gamma, bump_width=width)
                norm = max(seminorm(f, probe_resolution, seed + j, state_dim, disorder_dim),
                           sum(seminorm_bound(f).values()))
            out.append(f.with_scale(1.0 / (SAFETY * norm)) if norm > 0 else f)
    return out


# ---------------------------------------------------------------------------
# Distance estimation


@dataclass(frozen=True)
class DistanceEstimate:
    """Dictionary estimate of ``sup_f (E |<f, lambda> - <f, nu>|^p)^{1/p}``."""

    value: float
    p: int
    K: int
    replicas: int
    stderr: float
    dictionary_size: int
    excluded_atoms: int = 0
    argmax: int = -1


def reference_values(dictionary, reference, t):
    """``<f, nu_t>`` for every dictionary member, from a path law."""
    from .meanfield import measure_integrate
    return np.array([measure_integrate(f, reference, t) for f in dictionary])


def _empirical_matrix(dictionary, ems):
    vals = np.empty((len(dictionary), len(ems)))
    excluded = 0
    for i, f in enumerate(dictionary):
        for r, em in enumerate(ems):
            vals[i, r], e = empirical_eval(f, em, True)
            excluded += e
    return vals, excluded


def _batched_empirical(dictionary, ems):
    """Vectorised version of the double loop for product test functions."""
    thetas = np.stack([em.thetas for em in ems])
    omegas = np.stack([em.omegas for em in ems])
    pos = ems[0].positions
    if not all(em.positions is pos or np.array_equal(em.positions, pos) for em in ems):
        return _empirical_matrix(dictionary, ems)
    vals = np.empty((len(dictionary), len(ems)))
    excluded = 0
    for i, f in enumerate(dictionary):
        mask = f.coincident(pos)
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.where(mask, 0.0, f.spatial(pos))
        vals[i] = (f.g(thetas, omegas) @ s) / pos.shape[0]
        excluded += int(mask.sum()) * len(ems)
    return vals, excluded


def _max_stat(diffs, p):
    return float(np.max(np.mean(np.abs(diffs) ** p, axis=1) ** (1.0 / p)))


def distance_from_differences(diffs, p, K=0, excluded_atoms=0):
    """Distance estimate from a ``(functions, replicas)`` matrix of differences.

    ``diffs[i, r] = <f_i, lambda_r> - <f_i, nu_r>``.  The standard error is
    the delete-one-replica jackknife of the maximum.
    """
    diffs = np.asarray(diffs, dtype=float)
    R = diffs.shape[1]
    per_f = np.mean(np.abs(diffs) ** p, axis=1) ** (1.0 / p)
    value = float(per_f.max())
    jack = np.array([_max_stat(np.delete(diffs, r, axis=1), p) for r in range(R)])
    stderr = float(np.sqrt((R - 1) / R * np.sum((jack - jack.mean()) ** 2)))
    return DistanceEstimate(value, int(p), int(K), R, stderr, diffs.shape[0], int(excluded_atoms),
                            int(np.argmax(per_f)))


def evaluation_matrix(dictionary, ems):
    """``<f_i, em_r>`` for all members and measures, with the excluded-atom count."""
    if all(isinstance(f, TestFunction) for f in dictionary):
        return _batched_empirical(dictionary, list(ems))
    return _empirical_matrix(dictionary, list(ems))


def distance_differences(em_replicas, reference, t, dictionary, reference_vals=None):
    """Matrix of differences ``<f, nu^N_r> - <f, nu>`` and the excluded-atom count.

    See :func:`estimate_distance` for the accepted references.
    """
    R = len(em_replicas)
    if R < 8:
        raise ContractViolation("distance estimation needs at least 8 replicas")
    emp, excluded = evaluation_matrix(dictionary, em_replicas)
    if reference_vals is not None:
        return emp - np.asarray(reference_vals)[:, None], excluded
    if isinstance(reference, (list, tuple)):
        if len(reference) != R:
            raise ContractViolation("paired empirical references need one per replica")
        other, e2 = evaluation_matrix(dictionary, reference)
        return emp - other, excluded + e2
    return emp - reference_values(dictionary, reference, t)[:, None], excluded


def estimate_distance(em_replicas, reference, t, p, dictionary, K=0, reference_vals=None):
    """Monte-Carlo dictionary estimate of a random-measure distance.

    Parameters
    ----------
    em_replicas : list of EmpiricalMeasure
        At least 8 independent replicas at time ``t``.
    reference : PathLaw, list of EmpiricalMeasure or None
        A path law (deterministic ``<f, nu_t>``), or a list of empirical
        measures paired replica by replica.
    reference_vals : ndarray, optional
        Precomputed ``<f, nu_t>`` for the dictionary.
    """
    diffs, excluded = distance_differences(em_replicas, reference, t, dictionary, reference_vals)
    return distance_from_differences(diffs, p, K, excluded)


@dataclass(frozen=True)
class WeightedSum:
    """Truncated weighted sum with a bound on the omitted tail."""

    value: float
    truncation_bound: float

    def __float__(self):
        return self.value


def d_infinity(estimates, p, C=1.0, K_max=None, dim=1):
    """``sum_{K <= K_max} 2^{-K} exp(-C K^{d p / q}) K^{-2d} min(d_K, 1)``.

    ``estimates`` maps ``K`` to a :class:`DistanceEstimate` or a float.  The
    omitted tail is bounded by ``sum_{K > K_max} 2^{-K} = 2^{-K_max}``.
    """
    K_max = K_max or max(estimates)
    missing = [K for K in range(1, K_max + 1) if K not in estimates]
    if missing:
        raise ContractViolation(f"missing distance levels {missing}")
    q = conjugate_exponent(p)
    total = 0.0
    for K in range(1, K_max + 1):
        v = estimates[K]
        v = v.value if isinstance(v, DistanceEstimate) else float(v)
        total += 2.0**-K * math.exp(-C * K ** (dim * p / q)) / K ** (2 * dim) * min(v, 1.0)
    return WeightedSum(total, 2.0**-K_max)


# ---------------------------------------------------------------------------
# Riemann discretisation of the P-nearest indicator


def _frac(v):
    return v if isinstance(v, Fraction) else Fraction(v).limit_denominator(10**9)


def indicator_mass(R, a):
    """``int_{-1/2}^{1/2} chi_R(x - a) dx`` by the three-case formula (exact)."""
    R, a = _frac(R), _frac(a)
    half = Fraction(1, 2)
    left_in, right_in = a - R >= -half, a + R <= half
    if left_in and right_in:
        return Fraction(1)
    if right_in:                     # box sticks out on the left only
        return (half + a + R) / (2 * R)
    if left_in:                      # box sticks out on the right only
        return (half - a + R) / (2 * R)
    return 1 / (2 * R)               # box covers the whole interval


def riemann_sum(R, a, N):
    """``(2N+1)^{-1} sum_{|j| <= N} chi_R(j/(2N) - a)`` by exact counting."""
    R, a = _frac(R), _frac(a)
    lo = max(-N, math.ceil(2 * N * (a - R)))
    hi = min(N, math.floor(2 * N * (a + R)))
    count = max(0, hi - lo + 1)
    return Fraction(count, 2 * N + 1) / (2 * R)


@dataclass(frozen=True)
class RiemannReport:
    """Worst Riemann errors against the bound ``1/(2N)``."""

    R: float
    worst_scaled: float
    worst: tuple
    violations: tuple
    checked: int

    @property
    def passed(self):
        return not self.violations


def riemann_discretization_check(R, anchors, N_values):
    """Compare exact Riemann sums of ``chi_R(. - a)`` with the exact integral.

    Every ``(a, N)`` with ``|I_N(a) - I(a)| > 1/(2N)`` is listed in
    ``violations`` as ``(a, N, difference)``.  ``worst_scaled`` is the
    largest ``2N |I_N(a) - I(a)|``.
    """
    violations, worst, worst_scaled, checked = [], None, Fraction(0), 0
    for N in N_values:
        bound = Fraction(1, 2 * N)
        for a in anchors:
            diff = abs(riemann_sum(R, a, N) - indicator_mass(R, a))
            checked += 1
            if diff / bound > worst_scaled:
                worst_scaled, worst = diff / bound, (float(a), int(N), float(diff))
            if diff > bound:
                violations.append((float(a), int(N), float(diff)))
    return RiemannReport(float(R), float(worst_scaled), worst, tuple(violations), checked)
