"""Drift, coupling and noise of the disordered diffusions.

A model is the triple ``(c, Gamma, sigma)`` of a single-site drift
``c(theta, omega)``, a pairwise coupling ``Gamma(theta, omega, theta_bar,
omega_bar)`` and a constant diffusion matrix, together with the regularity
constants the convergence analysis needs.  All callables are vectorised:
they accept arrays whose last axis is the state (or disorder) coordinate and
broadcast over every leading axis.

Two models are built in:

* :func:`kuramoto`, with ``c = omega`` and ``Gamma = K sin(theta_bar - theta)``;
* :func:`fitzhugh_nagumo`, with the cubic excitable drift and a clipped linear
  coupling that keeps ``Gamma`` bounded and Lipschitz.

:func:`custom_model` wraps user callables.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ContractViolation, DomainError
from .rng import generator

__all__ = [
    "PolyBound",
    "SeparableCoupling",
    "ModelSpec",
    "Law",
    "point_mass",
    "gaussian",
    "uniform_box",
    "product",
    "kuramoto",
    "fitzhugh_nagumo",
    "custom_model",
    "eval_drift",
    "eval_coupling",
    "RegularityReport",
    "probe_regularity",
]


@dataclass(frozen=True)
class PolyBound:
    """Polynomial growth bound ``|c(theta, omega)| <= constant (1 + |theta|^kappa + |omega|^iota)``."""

    constant: float
    kappa: float
    iota: float

    def __post_init__(self):
        if self.kappa < 2 or self.iota < 1:
            raise ContractViolation("growth exponents need kappa >= 2 and iota >= 1")


@dataclass(frozen=True)
class SeparableCoupling:
    """Factorisation ``Gamma(theta, omega, tb, ob) = sum_r A_r(theta, omega) B_r(tb, ob)``.

    ``left(theta, omega)`` returns shape ``(..., rank, m)`` and
    ``right(theta_bar, omega_bar)`` returns shape ``(..., rank)``.
    """

    rank: int
    left: Callable
    right: Callable
    both: Optional[Callable] = None

    def factors(self, theta, omega):
        """Left and right factors at the same arguments, sharing work when possible."""
        if self.both is not None:
            return self.both(theta, omega)
        return self.left(theta, omega), self.right(theta, omega)


@dataclass(frozen=True)
class ModelSpec:
    """A diffusion model and its regularity constants.

    Parameters
    ----------
    name : str
        Identifier used in configs and metadata.
    state_dim, disorder_dim : int
        Dimensions ``m`` of the state and ``n`` of the disorder.
    drift : callable
        ``drift(theta, omega) -> (..., m)``.
    coupling : callable
        ``coupling(theta, omega, theta_bar, omega_bar) -> (..., m)``.
    sigma : ndarray
        Constant ``m x m`` diffusion matrix.
    one_sided_L : float
        One-sided Lipschitz constant of the drift in ``(theta, omega)``.
    poly_bound : PolyBound
        Polynomial growth constants.
    gamma_sup, gamma_lip : float
        Sup norm and Lipschitz constant of the coupling.
    circle_state : bool
        Whether the state lives on the circle.  States are stored unwrapped.
    separable : SeparableCoupling, optional
        Low-rank form of the coupling, enabling the convolution engine.
    drift_jacobian : callable, optional
        ``drift_jacobian(theta, omega) -> (..., m, m)``.
    default_scheme : str
        Time-stepping scheme used when the simulation config leaves it open.
    disorder_box : tuple of ndarray, optional
        Bounds ``(lo, hi)`` of the disorder support the constants hold on.
    state_radius : float, optional
        State radius the constants hold on, or ``None`` when global.
    params : dict
        Parameters the model was built from, recorded in metadata.
    """

    name: str
    state_dim: int
    disorder_dim: int
    drift: Callable
    coupling: Callable
    sigma: np.ndarray
    one_sided_L: float
    poly_bound: PolyBound
    gamma_sup: float
    gamma_lip: float
    circle_state: bool = False
    separable: Optional[SeparableCoupling] = None
    drift_jacobian: Optional[Callable] = None
    default_scheme: str = "euler_maruyama"
    disorder_box: Optional[tuple] = None
    state_radius: Optional[float] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.state_dim < 1 or self.disorder_dim < 1:
            raise ContractViolation("state and disorder dimensions must be at least 1")
        sigma = np.asarray(self.sigma, dtype=float)
        if sigma.shape != (self.state_dim, self.state_dim):
            raise ContractViolation(f"sigma must be {self.state_dim}x{self.state_dim}")
        object.__setattr__(self, "sigma", sigma)
        if self.gamma_sup < 0 or self.gamma_lip < 0:
            raise ContractViolation("coupling constants must be nonnegative")


# ---------------------------------------------------------------------------
# Laws of the disorder and of the initial condition


@dataclass(frozen=True)
class Law:
    """A probability law on ``R^dim`` with sampling and quadrature.

    Use the constructors :func:`point_mass`, :func:`gaussian`,
    :func:`uniform_box` and :func:`product` rather than this class directly.
    """

    kind: str
    dim: int
    params: dict
    factors: tuple = ()

    @property
    def is_point_mass(self):
        if self.kind == "product":
            return all(f.is_point_mass for f in self.factors)
        return self.kind == "point_mass"

    def sample(self, rng, n):
        """Draw ``n`` i.i.d. samples, one row per sample."""
        if self.kind == "point_mass":
            return np.broadcast_to(self.params["value"], (n, self.dim)).copy()
        if self.kind == "gaussian":
            z = rng.standard_normal((n, self.dim))
            return self.params["mean"] + z * self.params["std"]
        if self.kind == "uniform_box":
            u = rng.random((n, self.dim))
            return self.params["low"] + u * (self.params["high"] - self.params["low"])
        return np.concatenate([f.sample(rng, n) for f in self.factors], axis=1)

    def quadrature(self, nodes_per_axis):
        """Nodes and weights integrating smooth functions against the law.

        Gauss-Hermite for Gaussians, Gauss-Legendre for boxes, tensor
        products across factors and axes.  Weights sum to one.
        """
        if self.kind == "point_mass":
            return self.params["value"][None, :].copy(), np.ones(1)
        if self.kind == "product":
            parts = [f.quadrature(nodes_per_axis) for f in self.factors]
            return _tensor(parts)
        k = max(1, int(nodes_per_axis))
        if self.kind == "gaussian":
            x, w = np.polynomial.hermite_e.hermegauss(k)
            w = w / w.sum()
            axes = [(self.params["mean"][i] + self.params["std"][i] * x, w) for i in range(self.dim)]
        else:
            x, w = np.polynomial.legendre.leggauss(k)
            w = w / w.sum()
            lo, hi = self.params["low"], self.params["high"]
            axes = [(lo[i] + (hi[i] - lo[i]) * (x + 1) / 2, w) for i in range(self.dim)]
        return _tensor([(a[:, None], b) for a, b in axes])

    def moment(self, order):
        """Exact ``E|X|^order`` when available, otherwise a quadrature value."""
        if self.kind == "point_mass":
            return float(np.linalg.norm(self.params["value"]) ** order)
        nodes, weights = self.quadrature(12)
        return float(weights @ np.linalg.norm(nodes, axis=1) ** order)

    def describe(self):
        """Plain-data description for metadata and hashing."""
        if self.kind == "product":
            return {"kind": "product", "factors": [f.describe() for f in self.factors]}
        out = {"kind": self.kind}
        out.update({k: np.asarray(v).tolist() for k, v in self.params.items()})
        return out


def _tensor(parts):
    nodes, weights = parts[0]
    for n2, w2 in parts[1:]:
        i, j = np.meshgrid(np.arange(len(weights)), np.arange(len(w2)), indexing="ij")
        nodes = np.concatenate([nodes[i.ravel()], n2[j.ravel()]], axis=1)
        weights = weights[i.ravel()] * w2[j.ravel()]
    return nodes, weights


def _vec(value):
    return np.atleast_1d(np.asarray(value, dtype=float))


def point_mass(value):
    """Dirac law at ``value``."""
    v = _vec(value)
    return Law("point_mass", v.size, {"value": v})


def gaussian(mean, std):
    """Gaussian law with independent coordinates."""
    m, s = np.broadcast_arrays(_vec(mean), _vec(std))
    if np.any(s <= 0):
        raise ContractViolation("standard deviations must be positive")
    return Law("gaussian", m.size, {"mean": m.copy(), "std": s.copy()})


def uniform_box(low, high):
    """Uniform law on the box ``[low, high]``."""
    lo, hi = np.broadcast_arrays(_vec(low), _vec(high))
    if np.any(hi <= lo):
        raise ContractViolation("box needs high > low on every axis")
    return Law("uniform_box", lo.size, {"low": lo.copy(), "high": hi.copy()})


def product(*factors):
    """Product of independent laws, coordinates concatenated in order."""
    if not factors:
        raise ContractViolation("product needs at least one factor")
    return Law("product", sum(f.dim for f in factors), {}, tuple(factors))


# ---------------------------------------------------------------------------
# Built-in models


def kuramoto(K=1.0, sigma=1.0):
    """Kuramoto oscillators with natural frequencies as disorder.

    ``c(theta, omega) = omega`` and ``Gamma = K sin(theta_bar - theta)``.
    The drift satisfies the one-sided bound with ``L = 1/2`` (Cauchy-Schwarz
    on ``<d theta, d omega>``) and grows linearly.
    """
    K = float(K)

    def drift(theta, omega):
        return np.broadcast_to(omega, np.broadcast_shapes(np.shape(theta), np.shape(omega))).copy()

    def coupling(theta, omega, theta_bar, omega_bar):
        return K * np.sin(theta_bar - theta)

    # sin(tb - t) = sin(tb) cos(t) - cos(tb) sin(t)
    def left(theta, omega):
        return K * np.stack([np.cos(theta), -np.sin(theta)], axis=-2)

    def right(theta_bar, omega_bar):
        t = theta_bar[..., 0]
        return np.stack([np.sin(t), np.cos(t)], axis=-1)

    def both(theta, omega):
        t = theta[..., 0]
        s, c = np.sin(t), np.cos(t)
        A = np.stack([K * c, -K * s], axis=-1)[..., None]
        return A, np.stack([s, c], axis=-1)

    def jacobian(theta, omega):
        return np.zeros(np.shape(theta) + (1,))

    return ModelSpec(
        name="kuramoto",
        state_dim=1,
        disorder_dim=1,
        drift=drift,
        coupling=coupling,
        sigma=np.array([[float(sigma)]]),
        one_sided_L=0.5,
        poly_bound=PolyBound(1.0, 2.0, 1.0),
        gamma_sup=abs(K),
        gamma_lip=abs(K),
        circle_state=True,
        separable=SeparableCoupling(2, left, right, both),
        drift_jacobian=jacobian,
        default_scheme="euler_maruyama",
        params={"K": K, "sigma": float(sigma)},
    )


def fhn_one_sided_constant(disorder_box, state_radius):
    """One-sided Lipschitz constant of the FitzHugh-Nagumo drift.

    With ``theta = (V, w)`` and ``omega = (a, b)`` the cubic term only helps,
    and every remaining cross term is bounded by a nonnegative coefficient
    times products of ``|dV|, |dw|, |da|, |db|``.  The constant is the largest
    eigenvalue of the resulting symmetric matrix.  When the disorder box is a
    single point the disorder increments vanish and the bound is global in
    the state; otherwise it holds for states of norm at most
    ``state_radius``.
    """
    lo, hi = (np.asarray(b, dtype=float) for b in disorder_box)
    a_vals, b_vals = np.array([lo[0], hi[0]]), np.array([lo[1], hi[1]])
    ab = np.outer(a_vals, b_vals)
    g1 = np.max(np.abs(ab - 1.0))
    a_min = max(lo[0], 0.0)
    M = np.array([[1.0, g1 / 2], [g1 / 2, -a_min]])
    if np.allclose(lo, hi):
        return float(np.linalg.eigvalsh(M)[-1])
    r = float(state_radius)
    a_max, b_max = np.max(np.abs(a_vals)), np.max(np.abs(b_vals))
    full = np.zeros((4, 4))
    full[:2, :2] = M
    full[1, 2] = full[2, 1] = r * (b_max + 1.0) / 2
    full[1, 3] = full[3, 1] = r * a_max / 2
    return float(np.linalg.eigvalsh(full)[-1])


def fitzhugh_nagumo(I=0.0, sigma_v=0.0, sigma_w=0.0, clip=5.0,
                    disorder_box=((0.7, 0.8), (0.7, 0.8)), state_radius=10.0):
    """Stochastic FitzHugh-Nagumo neurons with a clipped electrical coupling.

    ``c(V, w; a, b) = (V - V^3/3 - w + I, a (b V - w))`` and
    ``Gamma = clip(theta_bar - theta, -clip, clip)`` componentwise.

    Parameters
    ----------
    I : float
        Input current.
    sigma_v, sigma_w : float
        Noise intensities on the two components.
    clip : float
        Coupling clip bound ``B``.
    disorder_box : pair of array_like
        Box containing the support of ``(a, b)``.  The default is the point
        ``(0.7, 0.8)``.
    state_radius : float
        Radius on which the one-sided constant is guaranteed when the
        disorder is not a point.
    """
    I, B = float(I), float(clip)
    box = tuple(np.asarray(b, dtype=float) for b in disorder_box)
    if np.any(box[0] < 0):
        raise ContractViolation("the disorder box must lie in a, b >= 0")

    def drift(theta, omega):
        V, w = theta[..., 0], theta[..., 1]
        a, b = omega[..., 0], omega[..., 1]
        return np.stack([V - V**3 / 3 - w + I, a * (b * V - w)], axis=-1)

    def coupling(theta, omega, theta_bar, omega_bar):
        return np.clip(theta_bar - theta, -B, B)

    def jacobian(theta, omega):
        V = theta[..., 0]
        a, b = np.broadcast_arrays(omega[..., 0], omega[..., 1])
        a, b = np.broadcast_to(a, V.shape), np.broadcast_to(b, V.shape)
        row0 = np.stack([1 - V**2, -np.ones_like(V)], axis=-1)
        row1 = np.stack([a * b, -a], axis=-1)
        return np.stack([row0, row1], axis=-2)

    return ModelSpec(
        name="fitzhugh_nagumo",
        state_dim=2,
        disorder_dim=2,
        drift=drift,
        coupling=coupling,
        sigma=np.diag([float(sigma_v), float(sigma_w)]),
        one_sided_L=fhn_one_sided_constant(box, state_radius),
        poly_bound=PolyBound(10.0 / 3.0 + abs(I), 3.0, 3.0),
        gamma_sup=B * np.sqrt(2.0),
        gamma_lip=1.0,
        circle_state=False,
        separable=None,
        drift_jacobian=jacobian,
        default_scheme="tamed_euler",
        disorder_box=box,
        state_radius=None if np.allclose(*box) else float(state_radius),
        params={"I": I, "sigma_v": float(sigma_v), "sigma_w": float(sigma_w), "clip": B,
                "disorder_box": [b.tolist() for b in box], "state_radius": float(state_radius)},
    )


def custom_model(drift, coupling, state_dim, disorder_dim, sigma, one_sided_L,
                 poly_bound=(1.0, 2.0, 1.0), gamma_sup=0.0, gamma_lip=0.0, name="custom",
                 **kwargs):
    """Wrap user callables into a :class:`ModelSpec`.

    ``poly_bound`` may be a :class:`PolyBound` or a ``(constant, kappa,
    iota)`` tuple.  Extra keyword arguments are forwarded.
    """
    if not isinstance(poly_bound, PolyBound):
        poly_bound = PolyBound(*poly_bound)
    return ModelSpec(
        name=name,
        state_dim=state_dim,
        disorder_dim=disorder_dim,
        drift=drift,
        coupling=coupling,
        sigma=np.atleast_2d(np.asarray(sigma, dtype=float)),
        one_sided_L=float(one_sided_L),
        poly_bound=poly_bound,
        gamma_sup=float(gamma_sup),
        gamma_lip=float(gamma_lip),
        **kwargs,
    )


def zero_coupling(theta, omega, theta_bar, omega_bar):
    """Coupling that vanishes identically."""
    return np.zeros(np.broadcast_shapes(np.shape(theta), np.shape(theta_bar)))


# ---------------------------------------------------------------------------
# Evaluation with argument checks


def _check(model, theta, omega):
    theta = np.asarray(theta, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if theta.ndim == 0:
        theta = theta[None]
    if omega.ndim == 0:
        omega = omega[None]
    if theta.shape[-1] != model.state_dim:
        raise ContractViolation(f"state has dimension {theta.shape[-1]}, model expects {model.state_dim}")
    if omega.shape[-1] != model.disorder_dim:
        raise ContractViolation(
            f"disorder has dimension {omega.shape[-1]}, model expects {model.disorder_dim}")
    if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(omega))):
        raise DomainError("non-finite state or disorder")
    return theta, omega


def eval_drift(model, theta, omega):
    """Evaluate ``c(theta, omega)`` with dimension and finiteness checks."""
    theta, omega = _check(model, theta, omega)
    return np.asarray(model.drift(theta, omega), dtype=float)


def eval_coupling(model, theta, omega, theta_bar, omega_bar):
    """Evaluate ``Gamma(theta, omega, theta_bar, omega_bar)`` with checks."""
    theta, omega = _check(model, theta, omega)
    theta_bar, omega_bar = _check(model, theta_bar, omega_bar)
    return np.asarray(model.coupling(theta, omega, theta_bar, omega_bar), dtype=float)


# ---------------------------------------------------------------------------
# Regularity probe


@dataclass(frozen=True)
class RegularityReport:
    """Outcome of :func:`probe_regularity`.

    Attributes
    ----------
    observed_L, stored_L : float
        Largest sampled one-sided quotient and the model constant.
    observed_poly, stored_poly : float
        Largest sampled growth quotient and the model constant.
    sample_count : int
    violation_L, violation_poly : bool
        Whether a sampled quotient exceeds its constant by more than 1%.
    """

    observed_L: float
    stored_L: float
    observed_poly: float
    stored_poly: float
    sample_count: int
    violation_L: bool
    violation_poly: bool

    @property
    def violation(self):
        return self.violation_L or self.violation_poly


def _exceeds(observed, stored):
    return bool(observed > stored + 0.01 * abs(stored) + 1e-12)


def _ball(rng, n, dim, radius):
    direction = rng.standard_normal((n, dim))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    return direction * radius * rng.random((n, 1)) ** (1.0 / dim)


def probe_regularity(model, sample_count, radius, seed=0):
    """Sample the one-sided and growth quotients of the drift.

    States are drawn in the ball of the given radius; disorder values are
    drawn in ``model.disorder_box`` when set, otherwise in the same ball.
    Half of the pairs are small perturbations of the first point, which
    probes the local (derivative) regime of the one-sided quotient.
    """
    if sample_count < 1 or radius <= 0:
        raise ContractViolation("need sample_count >= 1 and radius > 0")
    rng = generator(seed, "probe-regularity")
    n, m, k = int(sample_count), model.state_dim, model.disorder_dim

    def draw_omega(count):
        if model.disorder_box is not None:
            lo, hi = model.disorder_box
            return lo + rng.random((count, k)) * (hi - lo)
        return _ball(rng, count, k, radius)

    theta1, omega1 = _ball(rng, n, m, radius), draw_omega(n)
    theta2, omega2 = _ball(rng, n, m, radius), draw_omega(n)
    near = np.arange(n) % 2 == 1
    scale = 10.0 ** rng.uniform(-6, -1, size=(n, 1))
    theta2[near] = theta1[near] + scale[near] * rng.standard_normal((near.sum(), m))
    if model.disorder_box is None:
        omega2[near] = omega1[near] + scale[near] * rng.standard_normal((near.sum(), k))
    else:
        omega2[near] = omega1[near]
    if model.state_radius is not None:
        # keep every probed state inside the certified region
        for th in (theta1, theta2):
            norm = np.linalg.norm(th, axis=1, keepdims=True)
            th *= np.minimum(1.0, model.state_radius / np.maximum(norm, 1e-300))
    dtheta, domega = theta1 - theta2, omega1 - omega2
    dc = model.drift(theta1, omega1) - model.drift(theta2, omega2)
    denom = np.sum(dtheta**2, axis=1) + np.sum(domega**2, axis=1)
    ok = denom > 0
    quotient = np.sum(dtheta * dc, axis=1)[ok] / denom[ok]
    observed_L = float(quotient.max()) if quotient.size else 0.0

    pb = model.poly_bound
    growth = np.linalg.norm(model.drift(theta1, omega1), axis=1) / (
        1 + np.linalg.norm(theta1, axis=1) ** pb.kappa + np.linalg.norm(omega1, axis=1) ** pb.iota)
    observed_poly = float(growth.max())
    return RegularityReport(
        observed_L=observed_L,
        stored_L=model.one_sided_L,
        observed_poly=observed_poly,
        stored_poly=pb.constant,
        sample_count=n,
        violation_L=_exceeds(observed_L, model.one_sided_L),
        violation_poly=_exceeds(observed_poly, pb.constant),
    )
