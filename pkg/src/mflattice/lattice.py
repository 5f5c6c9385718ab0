"""Lattice geometry, spatial weights and discrete Riesz sums.

Sites are the integer points of ``[-N, N]^d`` placed at ``x_j = j / (2N)``
in the unit cube ``[-1/2, 1/2]^d``.  Under periodic boundary conditions the
two faces ``-N`` and ``N`` are identified, so each axis carries ``2N`` sites
(indices ``-N .. N-1``) and displacements are taken on the unit torus.

Two weight families are provided:

* the P-nearest kernel ``chi_R(u) = (2R)^{-d} 1{|u|_inf <= R}``;
* the power-law kernel ``|u|^{-alpha}``, optionally multiplied by a bounded
  Lipschitz factor of the displacement.

The module also computes exact integrals of both kernels over axis-aligned
boxes (closed forms in one and two dimensions for the power law), which the
mean-field quadrature and the kernel constants build on.
"""

from dataclasses import dataclass
from typing import Callable, Optional
import math

import numpy as np
from scipy import special

from .errors import ConfigurationError, ContractViolation, SingularityError, UnsupportedConfiguration

__all__ = [
    "LatticeConfig",
    "positions",
    "WeightKernel",
    "p_nearest",
    "power_law",
    "choose_gamma",
    "choose_p",
    "conjugate_exponent",
    "minimal_image",
    "weight_eval",
    "box_integral",
    "node_cells",
    "cell_weight_matrix",
    "KernelConstants",
    "kernel_constants",
    "on_grid_numerator",
    "lattice_sum",
    "ScalingReport",
    "predicted_scale",
    "lattice_sum_bound_check",
    "nearest_offlattice_distance",
]

MAX_SITES = 2**31 - 1


@dataclass(frozen=True)
class LatticeConfig:
    """Hypercubic lattice ``[-N, N]^d``.

    Parameters
    ----------
    dim : int
        Spatial dimension ``d >= 1``.
    half_width : int
        ``N >= 0``.  ``N = 0`` is the single-site lattice at the origin
        (free boundary only).
    boundary : {"free", "periodic"}
    """

    dim: int
    half_width: int
    boundary: str = "free"

    def __post_init__(self):
        if self.dim < 1:
            raise ContractViolation("dimension must be at least 1")
        if self.half_width < 0:
            raise ContractViolation("half width must be nonnegative")
        if self.boundary not in ("free", "periodic"):
            raise ContractViolation(f"unknown boundary {self.boundary!r}")
        if self.boundary == "periodic" and self.half_width == 0:
            raise ContractViolation("periodic lattice needs N >= 1")
        if self.side ** self.dim > MAX_SITES:
            raise ConfigurationError(f"site count {self.side}**{self.dim} exceeds platform limits")

    @property
    def side(self):
        """Number of sites per axis."""
        n = self.half_width
        return 2 * n if self.boundary == "periodic" else 2 * n + 1

    @property
    def site_count(self):
        return self.side ** self.dim

    @property
    def periodic(self):
        return self.boundary == "periodic"

    def axis_indices(self):
        n = self.half_width
        return np.arange(-n, n) if self.periodic else np.arange(-n, n + 1)

    def describe(self):
        return {"dim": self.dim, "N": self.half_width, "boundary": self.boundary}


def positions(config):
    """Site indices and renormalised positions in lexicographic order.

    Returns
    -------
    indices : ndarray of int, shape (site_count, d)
    x : ndarray, shape (site_count, d)
        ``indices / (2N)``; the single site of ``N = 0`` sits at the origin.
    """
    axis = config.axis_indices()
    grids = np.meshgrid(*([axis] * config.dim), indexing="ij")
    idx = np.stack([g.ravel() for g in grids], axis=1)
    if config.half_width == 0:
        return idx, np.zeros(idx.shape, dtype=float)
    return idx, idx / (2.0 * config.half_width)


def minimal_image(u):
    """Wrap displacements to ``[-1/2, 1/2)`` componentwise."""
    u = np.asarray(u, dtype=float)
    return u - np.floor(u + 0.5)


# ---------------------------------------------------------------------------
# Exponents


def choose_gamma(alpha, dim, epsilon=0.01):
    """Hoelder exponent ``gamma`` paired with a power-law singularity.

    ``max(alpha, d/2 - epsilon)`` when ``alpha < d/2``, else ``d/2``.
    """
    if not 0 <= alpha < dim:
        raise ContractViolation("need 0 <= alpha < d")
    if not 0 < epsilon < dim / 2:
        raise ContractViolation("need 0 < epsilon < d/2")
    if alpha < dim / 2:
        return max(alpha, dim / 2 - epsilon)
    return dim / 2


def choose_p(alpha, dim):
    """Moment exponent of the power-law distance.

    2 when ``alpha < d/2``; otherwise the smallest integer strictly larger
    than ``d / (d - alpha)``.  The conjugate ``q`` then satisfies
    ``q alpha < d``.
    """
    if not 0 <= alpha < dim:
        raise ContractViolation("need 0 <= alpha < d")
    if alpha < dim / 2:
        return 2
    p = int(math.floor(dim / (dim - alpha))) + 1
    # rounding in the quotient can undershoot the floor near alpha = d
    while conjugate_exponent(p) * alpha >= dim:
        p += 1
    return p


def conjugate_exponent(p):
    return p / (p - 1.0)


# ---------------------------------------------------------------------------
# Kernels


@dataclass(frozen=True)
class WeightKernel:
    """Translation-invariant spatial weight ``Psi(x, y) = phi(x - y)``.

    Build instances with :func:`p_nearest` or :func:`power_law`.

    Attributes
    ----------
    kind : {"p_nearest", "power_law"}
    dim : int
    R : float or None
        Radius of the P-nearest box.
    alpha : float
        Singularity exponent; 0 for the P-nearest kernel.
    modifier : callable or None
        Bounded Lipschitz factor ``psi(u)`` of the displacement.
    modifier_sup : float
        Bound on ``|psi|`` (1 when absent).
    epsilon_gamma : float
        Gap used by :func:`choose_gamma`.
    """

    kind: str
    dim: int
    R: Optional[float] = None
    alpha: float = 0.0
    modifier: Optional[Callable] = None
    modifier_sup: float = 1.0
    epsilon_gamma: float = 0.01

    def __post_init__(self):
        if self.kind == "p_nearest":
            if self.R is None or not 0 < self.R <= 1:
                raise ContractViolation("P-nearest radius must lie in (0, 1]")
        elif self.kind == "power_law":
            if not 0 <= self.alpha < self.dim:
                raise ContractViolation("power-law exponent must satisfy 0 <= alpha < d")
        else:
            raise ContractViolation(f"unknown kernel kind {self.kind!r}")

    @property
    def gamma(self):
        if self.kind == "p_nearest":
            return None
        return choose_gamma(self.alpha, self.dim, self.epsilon_gamma)

    @property
    def p(self):
        return 2 if self.kind == "p_nearest" else choose_p(self.alpha, self.dim)

    @property
    def q(self):
        return conjugate_exponent(self.p)

    @property
    def singular(self):
        return self.kind == "power_law" and self.alpha > 0

    def profile(self, u):
        """``phi(u)`` on displacements of shape ``(..., d)``.

        The power law returns ``inf`` at ``u = 0`` when ``alpha > 0``.
        """
        u = np.asarray(u, dtype=float)
        if self.kind == "p_nearest":
            inside = np.all(np.abs(u) <= self.R, axis=-1)
            return inside / (2 * self.R) ** self.dim
        r = np.linalg.norm(u, axis=-1)
        with np.errstate(divide="ignore"):
            base = r ** (-self.alpha) if self.alpha > 0 else np.ones_like(r)
        return base * self.regular_factor(u)

    def regular_factor(self, u):
        """The bounded factor ``psi(u)`` (ones for the pure kernels)."""
        u = np.asarray(u, dtype=float)
        if self.modifier is None:
            return np.ones(u.shape[:-1])
        return np.asarray(self.modifier(u), dtype=float)

    def describe(self):
        out = {"kind": self.kind, "dim": self.dim}
        if self.kind == "p_nearest":
            out["R"] = self.R
        else:
            out.update(alpha=self.alpha, epsilon_gamma=self.epsilon_gamma,
                       modifier=None if self.modifier is None else getattr(self.modifier, "__name__", "custom"))
        return out


def p_nearest(R, dim=1):
    """P-nearest kernel ``chi_R``."""
    return WeightKernel("p_nearest", dim, R=float(R))


def power_law(alpha, dim=1, modifier=None, modifier_sup=1.0, epsilon_gamma=0.01):
    """Power-law kernel ``|u|^{-alpha} psi(u)``."""
    return WeightKernel("power_law", dim, alpha=float(alpha), modifier=modifier,
                        modifier_sup=float(modifier_sup), epsilon_gamma=float(epsilon_gamma))


def _displacement(x, y, boundary):
    u = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    return minimal_image(u) if boundary == "periodic" else u


def weight_eval(kernel, x, y, boundary="free"):
    """``Psi(x, y)``, with minimal-image displacement on the torus."""
    u = np.atleast_1d(_displacement(x, y, boundary))
    if u.shape[-1] != kernel.dim:
        raise ContractViolation("position dimension does not match the kernel")
    if kernel.kind == "power_law" and np.any(np.all(u == 0, axis=-1)):
        raise SingularityError("power-law weight evaluated at coinciding points")
    out = kernel.profile(u)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# Exact box integrals


def _primitive_1d(u, alpha):
    return np.sign(u) * np.abs(u) ** (1 - alpha) / (1 - alpha)


def _corner_2d(A, B, alpha):
    """``int_0^A int_0^B |u|^{-alpha} du`` with signed limits."""
    s = np.sign(A) * np.sign(B)
    A, B = np.abs(A), np.abs(B)
    out = np.zeros(np.broadcast(A, B).shape)
    ok = (A > 0) & (B > 0)
    a, b = np.broadcast_to(A, out.shape)[ok], np.broadcast_to(B, out.shape)[ok]

    def h(z):
        return z * special.hyp2f1(0.5, alpha / 2, 1.5, -z * z)

    # polar coordinates split along the diagonal of the rectangle
    out[ok] = (a ** (2 - alpha) * h(b / a) + b ** (2 - alpha) * h(a / b)) / (2 - alpha)
    return s * out


def _power_box(lo, hi, alpha):
    d = lo.shape[-1]
    if alpha == 0:
        return np.prod(hi - lo, axis=-1)
    if d == 1:
        return _primitive_1d(hi[..., 0], alpha) - _primitive_1d(lo[..., 0], alpha)
    if d == 2:
        x0, x1, y0, y1 = lo[..., 0], hi[..., 0], lo[..., 1], hi[..., 1]
        return (_corner_2d(x1, y1, alpha) - _corner_2d(x0, y1, alpha)
                - _corner_2d(x1, y0, alpha) + _corner_2d(x0, y0, alpha))
    raise UnsupportedConfiguration("exact power-law box integrals are available for d <= 2 only")


def _pnn_box(lo, hi, R):
    overlap = np.clip(np.minimum(hi, R) - np.maximum(lo, -R), 0.0, None)
    return np.prod(overlap / (2 * R), axis=-1)


def box_integral(kernel, lo, hi):
    """``int_{[lo, hi]} phi_0(u) du`` for the unmodified kernel profile.

    ``lo`` and ``hi`` have shape ``(..., d)`` and are displacement
    coordinates.  The integral is exact: products of interval overlaps for
    the P-nearest kernel, closed forms for the power law in one and two
    dimensions.  The bounded modifier is not included.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if kernel.kind == "p_nearest":
        return _pnn_box(lo, hi, kernel.R)
    return _power_box(lo, hi, kernel.alpha)


def _wrap_pieces(lo, hi):
    """Split one interval of displacements into pieces inside ``[-1/2, 1/2]``."""
    pieces = []
    for shift in (-1.0, 0.0, 1.0):
        a, b = max(lo + shift, -0.5), min(hi + shift, 0.5)
        if b > a:
            pieces.append((a, b))
    return pieces


def node_cells(K, dim, boundary="free"):
    """Nodes of the grid ``D_K`` with their quadrature cells.

    Free boundary: nodes ``j / (2K)`` for ``j`` in ``[-K, K]`` and cells
    ``[x - h/2, x + h/2]`` clipped to the unit cube (``h = 1/(2K)``).
    Periodic: nodes ``j`` in ``[-K, K-1]`` with full cells on the torus.

    Returns
    -------
    nodes, lo, hi : ndarray, shape (count, d)
    weights : ndarray, shape (count,)
        Cell volumes, summing to one.
    """
    axis = np.arange(-K, K) if boundary == "periodic" else np.arange(-K, K + 1)
    h = 1.0 / (2 * K)
    x = axis * h
    lo1, hi1 = x - h / 2, x + h / 2
    if boundary != "periodic":
        lo1, hi1 = np.maximum(lo1, -0.5), np.minimum(hi1, 0.5)
    grids = np.meshgrid(*([np.arange(axis.size)] * dim), indexing="ij")
    flat = np.stack([g.ravel() for g in grids], axis=1)
    nodes, lo, hi = x[flat], lo1[flat], hi1[flat]
    return nodes, lo, hi, np.prod(hi - lo, axis=1)


def cell_weight_matrix(kernel, targets, nodes, lo, hi, boundary="free"):
    """``W[t, c] = int_{cell c} Psi(x_t, y) dy`` with a singularity-aware rule.

    The singular part of the kernel is integrated exactly over each cell;
    the bounded modifier is evaluated at the cell node.  Row sums equal the
    exact integral ``int Psi(x_t, y) dy`` for the unmodified kernels.
    """
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    out = np.zeros((targets.shape[0], nodes.shape[0]))
    if boundary == "periodic":
        d = targets.shape[1]
        for t in range(targets.shape[0]):
            blo, bhi = lo - targets[t], hi - targets[t]
            total = np.zeros(nodes.shape[0])
            for c in range(nodes.shape[0]):
                per_axis = [_wrap_pieces(blo[c, k], bhi[c, k]) for k in range(d)]
                boxes = np.array(np.meshgrid(*[np.arange(len(p)) for p in per_axis], indexing="ij"))
                boxes = boxes.reshape(d, -1).T
                plo = np.array([[per_axis[k][i][0] for k, i in enumerate(row)] for row in boxes])
                phi = np.array([[per_axis[k][i][1] for k, i in enumerate(row)] for row in boxes])
                total[c] = box_integral(kernel, plo, phi).sum()
            factor = kernel.regular_factor(minimal_image(nodes - targets[t]))
            out[t] = total * factor
        return out
    for t in range(targets.shape[0]):
        singular = box_integral(kernel, lo - targets[t], hi - targets[t])
        out[t] = singular * kernel.regular_factor(nodes - targets[t])
    return out


# ---------------------------------------------------------------------------
# Kernel constants


@dataclass(frozen=True)
class KernelConstants:
    """Grid estimates of the kernel constants.

    ``s_psi`` is ``sup_x int Psi(x, y) dy``.  ``i1`` bounds
    ``|x - a|^alpha Psi(x, a)``, ``i2`` is the integrated Hoelder quotient
    of ``x -> Psi(x, .)`` with exponent ``(d - alpha) ^ 1`` and ``i3`` the
    Hoelder constant of ``|x - a|^{2 gamma} Psi(x, a)`` with exponent
    ``(2 gamma - alpha) ^ 1``.  Suprema over finite grids are lower bounds of
    the true suprema.  The discontinuous P-nearest kernel has no finite
    ``i3``; it is reported as ``inf``.
    """

    s_psi: float
    i1: float
    i2: float
    i3: float
    estimation_grid: int


def _cube_grid(res, dim, half=0.5):
    axis = np.linspace(-half, half, res + 1)
    grids = np.meshgrid(*([axis] * dim), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def _row_integrals(kernel, xs, fine):
    """``int_{[-1/2,1/2]^d} Psi(x, y) dy`` for each row of ``xs``."""
    d = kernel.dim
    if kernel.modifier is None:
        lo = np.full(d, -0.5) - xs
        hi = np.full(d, 0.5) - xs
        return box_integral(kernel, lo, hi)
    nodes, lo, hi, _ = node_cells(fine, d)
    return cell_weight_matrix(kernel, xs, nodes, lo, hi).sum(axis=1)


def _holder_sup(points, values, exponent, chunk=2048):
    best = 0.0
    for start in range(0, len(points), chunk):
        p = points[start:start + chunk]
        v = values[start:start + chunk]
        dist = np.linalg.norm(p[:, None, :] - points[None, :, :], axis=-1)
        diff = np.abs(v[:, None] - values[None, :])
        mask = dist > 0
        q = diff[mask] / dist[mask] ** exponent if exponent > 0 else diff[mask]
        if q.size:
            best = max(best, float(q.max()))
    return best


def _i2_power_1d(alpha, xs):
    """Closed form of ``int |Psi(x, z) - Psi(y, z)| dz`` for the pure 1-d power law."""
    x, y = np.meshgrid(xs, xs, indexing="ij")
    lo_pt, hi_pt = np.minimum(x, y), np.maximum(x, y)
    mid = (lo_pt + hi_pt) / 2

    def G(centre, a, b):
        return _primitive_1d(b - centre, alpha) - _primitive_1d(a - centre, alpha)

    left = G(lo_pt, -0.5, mid) - G(hi_pt, -0.5, mid)
    right = G(hi_pt, mid, 0.5) - G(lo_pt, mid, 0.5)
    return left + right, np.abs(x - y)


def kernel_constants(kernel, grid_resolution=None):
    """Estimate ``S(Psi)`` and the constants ``I_1, I_2, I_3`` on grids.

    Parameters
    ----------
    kernel : WeightKernel
    grid_resolution : int, optional
        Points per axis; defaults to 256 in one dimension and 64 otherwise.
    """
    d = kernel.dim
    res = grid_resolution or (256 if d == 1 else 64)
    if res < 8:
        raise ContractViolation("grid resolution must be at least 8")
    xs = _cube_grid(res, d)
    s_psi = float(_row_integrals(kernel, xs, 4 * res if d == 1 else res).max())

    us = _cube_grid(2 * res, d, half=1.0)
    us = us[np.linalg.norm(us, axis=1) > 0]
    if kernel.kind == "p_nearest":
        i1 = (2 * kernel.R) ** (-d)
    else:
        i1 = float(np.max(np.abs(kernel.regular_factor(us))))

    exponent = min(d - kernel.alpha, 1.0)
    if kernel.kind == "p_nearest":
        coarse = _cube_grid(min(res, 64 if d == 1 else 16), d)
        a_lo, a_hi = coarse - kernel.R, coarse + kernel.R
        vol_a = np.prod(np.clip(np.minimum(a_hi, 0.5) - np.maximum(a_lo, -0.5), 0, None), axis=1)
        lo = np.maximum(a_lo[:, None, :], a_lo[None, :, :])
        hi = np.minimum(a_hi[:, None, :], a_hi[None, :, :])
        inter = np.prod(np.clip(np.minimum(hi, 0.5) - np.maximum(lo, -0.5), 0, None), axis=-1)
        sym = (vol_a[:, None] + vol_a[None, :] - 2 * inter) / (2 * kernel.R) ** d
        dist = np.linalg.norm(coarse[:, None, :] - coarse[None, :, :], axis=-1)
        mask = dist > 0
        i2 = float(np.max(sym[mask] / dist[mask] ** exponent))
    elif d == 1 and kernel.modifier is None:
        num, dist = _i2_power_1d(kernel.alpha, xs[:, 0])
        mask = dist > 0
        i2 = float(np.max(np.abs(num[mask]) / dist[mask] ** exponent))
    else:
        coarse = _cube_grid(min(res, 32 if d == 1 else 8), d)
        zs = _cube_grid(4 * res if d == 1 else 2 * res, d)
        zs = zs[:-1] + 0.5 / (4 * res if d == 1 else 2 * res)  # offset midpoints
        zs = zs[np.all(zs <= 0.5, axis=1)]
        vol = 1.0 / len(zs)
        prof = np.array([kernel.profile(x - zs) for x in coarse])
        prof[~np.isfinite(prof)] = 0.0
        i2 = 0.0
        for a in range(len(coarse)):
            for b in range(a + 1, len(coarse)):
                dist = np.linalg.norm(coarse[a] - coarse[b])
                i2 = max(i2, float(np.sum(np.abs(prof[a] - prof[b])) * vol / dist**exponent))

    if kernel.kind == "p_nearest":
        i3 = math.inf
    else:
        s = max(2 * kernel.gamma - kernel.alpha, 0.0)
        sub = us if d == 1 else _cube_grid(min(2 * res, 32), d, half=1.0)
        pts = np.vstack([sub, np.zeros((1, d))])
        vals = np.linalg.norm(pts, axis=1) ** s * kernel.regular_factor(pts)
        i3 = _holder_sup(pts, vals, min(s, 1.0))
    return KernelConstants(s_psi=s_psi, i1=i1, i2=i2, i3=i3, estimation_grid=res)


# ---------------------------------------------------------------------------
# Discrete Riesz sums


def on_grid_numerator(a, K):
    """Integer numerators of a point of ``D_K``, or raise if it is off the grid."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    num = np.rint(a * 2 * K)
    if np.any(np.abs(num - a * 2 * K) > 1e-9) or np.any(np.abs(num) > K):
        raise ContractViolation(f"point {a.tolist()} is not on the grid D_{K}")
    return num.astype(np.int64)


def lattice_sum(beta, a, config, K):
    """``sum_{j : x_j != a} |x_j - a|^{-beta}`` by direct summation.

    ``a`` must lie on ``D_K``.  Coincidence ``x_j = a`` is tested in exact
    integer arithmetic (``j K == i_a N``); distances are formed from the
    exact integer offsets.  The reduction order is fixed, so the result is
    bit-reproducible.
    """
    if beta <= 0:
        raise ContractViolation("beta must be positive")
    num_a = on_grid_numerator(a, K)
    if num_a.size != config.dim:
        raise ContractViolation("anchor dimension does not match the lattice")
    N = config.half_width
    if N == 0:
        return 0.0
    idx, _ = positions(config)
    offset = idx.astype(np.int64) * K - num_a[None, :] * N  # in units of 1/(2KN)
    if config.periodic:
        period = 2 * K * N
        offset = offset - period * np.floor((offset + period // 2) / period).astype(np.int64)
    keep = np.any(offset != 0, axis=1)
    dist = np.linalg.norm(offset[keep].astype(float), axis=1) / (2.0 * K * N)
    return float(np.sum(dist ** (-beta)))


def nearest_offlattice_distance(N, K):
    """Distance ``gcd(K, N) / (2 K N)`` from off-lattice points of ``D_K`` to the lattice."""
    return math.gcd(K, N) / (2.0 * K * N)


def _regime(beta, dim):
    if math.isclose(beta, dim):
        return "critical"
    return "sub" if beta < dim else "super"


def predicted_scale(beta, dim, N, K, on_lattice):
    """Growth rate of the Riesz sum predicted by the lattice-sum lemma.

    ``N^d`` (times ``K^d`` off the lattice) for ``beta < d``, an extra
    ``ln N`` at ``beta = d``, and ``N^beta`` (times ``K^beta``) for
    ``beta > d``.
    """
    regime = _regime(beta, dim)
    if regime == "super":
        return N**beta * (1 if on_lattice else K**beta)
    scale = N**dim * (1 if on_lattice else K**dim)
    return scale * math.log(N) if regime == "critical" else scale


@dataclass(frozen=True)
class ScalingReport:
    """Ratios of Riesz sums to their predicted scale over a sweep of ``N``."""

    beta: float
    dim: int
    K: int
    anchor: tuple
    regime: str
    N: tuple
    sums: tuple
    predicted: tuple
    ratios: tuple
    spread: float
    threshold: float

    @property
    def passed(self):
        return bool(self.spread <= self.threshold)


def lattice_sum_bound_check(beta, dim, N_values, K, a, boundary="free", threshold=4.0):
    """Check that Riesz sums stay within a bounded factor of their predicted scale.

    The spread ``max(ratio) / min(ratio)`` over the sweep is compared with
    ``threshold``.
    """
    num_a = on_grid_numerator(a, K)
    sums, preds = [], []
    for N in N_values:
        cfg = LatticeConfig(dim, int(N), boundary)
        on_lattice = bool(np.all((num_a * N) % K == 0))
        sums.append(lattice_sum(beta, a, cfg, K))
        preds.append(float(predicted_scale(beta, dim, N, K, on_lattice)))
    ratios = np.array(sums) / np.array(preds)
    return ScalingReport(
        beta=float(beta), dim=dim, K=K, anchor=tuple(np.atleast_1d(a).tolist()),
        regime=_regime(beta, dim), N=tuple(int(n) for n in N_values), sums=tuple(sums),
        predicted=tuple(preds), ratios=tuple(ratios.tolist()),
        spread=float(ratios.max() / ratios.min()), threshold=float(threshold),
    )
