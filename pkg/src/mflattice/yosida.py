"""Yosida regularisation of the dissipative part of the drift.

With ``L`` the one-sided Lipschitz constant, ``c~(theta) = c(theta) - L theta``
is monotone (``<d theta, d c~> <= 0``), so ``F(y) = lam y - c~(y)`` is
strictly monotone and the resolvent ``R_lam = (lam - c~)^{-1}`` is well
defined.  The Yosida drift ``c~_lam(theta) = c~(R_lam(lam theta))`` is
globally Lipschitz, dominated pointwise by ``c~`` and converges to it as
``lam -> infinity``.
"""

from dataclasses import dataclass, replace

import numpy as np

from .errors import ContractViolation, SolverError
from .lattice import kernel_constants
from .simulate import simulate_replicas

__all__ = [
    "YosidaConfig",
    "shifted_drift",
    "resolvent",
    "yosida_drift",
    "YosidaStudy",
    "yosida_convergence_study",
]


@dataclass(frozen=True)
class YosidaConfig:
    """Schedule of regularisation parameters and Newton settings.

    ``newton_tol`` is relative to ``max(1, |target|)``: for large ``lam`` the
    equation is solved in units of the target.
    """

    lambda_schedule: tuple = (10.0, 100.0, 1000.0)
    newton_tol: float = 1e-12
    newton_max_iter: int = 100

    def __post_init__(self):
        lam = np.asarray(self.lambda_schedule, dtype=float)
        if lam.ndim != 1 or lam.size == 0 or np.any(lam <= 0) or np.any(np.diff(lam) <= 0):
            raise ContractViolation("lambda schedule must be positive and strictly increasing")
        object.__setattr__(self, "lambda_schedule", tuple(float(v) for v in lam))
        if self.newton_tol <= 0 or self.newton_max_iter < 1:
            raise ContractViolation("Newton tolerance and iteration cap must be positive")


def _need_L(model):
    if model.one_sided_L is None:
        raise ContractViolation("model has no one-sided Lipschitz constant")
    return float(model.one_sided_L)


def shifted_drift(model, theta, omega):
    """``c(theta, omega) - L theta``."""
    theta = np.asarray(theta, dtype=float)
    return model.drift(theta, np.asarray(omega, dtype=float)) - _need_L(model) * theta


def _shifted_jacobian(model, y, omega, L):
    m = model.state_dim
    if model.drift_jacobian is not None:
        J = np.asarray(model.drift_jacobian(y, omega), dtype=float)
        J = np.broadcast_to(J, y.shape[:-1] + (m, m))
    else:
        h = 1e-7 * np.maximum(1.0, np.abs(y))
        base = model.drift(y, omega)
        cols = []
        for i in range(m):
            e = np.zeros_like(y)
            e[..., i] = h[..., i]
            cols.append((model.drift(y + e, omega) - base) / h[..., i:i + 1])
        J = np.stack(cols, axis=-1)
    return J - L * np.eye(m)


def resolvent(model, lam, target, omega, config=None, return_residual=False, stats=None):
    """Solve ``lam y - c~(y, omega) = target`` by damped Newton.

    Works on batches: ``target`` has shape ``(..., m)``.  The initial guess
    is ``target / lam`` and each step is halved until the residual norm
    decreases.  When ``stats`` is a list, the number of Newton iterations
    of this call is appended to it.

    Raises
    ------
    SolverError
        When the residual is still above tolerance after the iteration cap.
    """
    if lam <= 0:
        raise ContractViolation("lambda must be positive")
    config = config or YosidaConfig((float(lam),))
    L = _need_L(model)
    target = np.asarray(target, dtype=float)
    omega = np.broadcast_to(np.asarray(omega, dtype=float), target.shape[:-1] + (model.disorder_dim,))
    eye = np.eye(model.state_dim)
    scale = np.maximum(1.0, np.linalg.norm(target, axis=-1))

    def F(y):
        return lam * y - (model.drift(y, omega) - L * y) - target

    y = target / lam
    r = F(y)
    res = np.linalg.norm(r, axis=-1)
    iterations = 0
    for _ in range(config.newton_max_iter):
        active = res > config.newton_tol * scale
        if not np.any(active):
            break
        iterations += 1
        JF = lam * eye - _shifted_jacobian(model, y, omega, L)
        step = -np.linalg.solve(JF, r[..., None])[..., 0]
        t = np.ones(res.shape)
        for _ in range(40):
            cand = y + t[..., None] * step
            rc = F(cand)
            nc = np.linalg.norm(rc, axis=-1)
            worse = active & ~(nc < res)
            if not np.any(worse):
                break
            t = np.where(worse, t / 2, t)
        keep = active & (nc < res)
        y = np.where(keep[..., None], cand, y)
        r = np.where(keep[..., None], rc, r)
        res = np.where(keep, nc, res)
        if not np.any(keep):
            break
    if stats is not None:
        stats.append(iterations)
    worst = float(np.max(res / scale)) if res.size else 0.0
    if worst > config.newton_tol:
        raise SolverError(f"resolvent Newton stalled with relative residual {worst:.3e}", worst)
    return (y, worst) if return_residual else y


def yosida_drift(model, lam, theta, omega, config=None, stats=None):
    """``c~_lam(theta, omega) = c~(R_lam(lam theta), omega)``."""
    theta = np.asarray(theta, dtype=float)
    y = resolvent(model, lam, lam * theta, omega, config, stats=stats)
    return shifted_drift(model, y, omega)


@dataclass(frozen=True)
class YosidaStudy:
    """Convergence diagnostics of the Yosida-regularised particle system.

    ``sup_errors[k]`` is the replica mean of the per-particle average of
    ``sup_t |theta_lam - theta|`` for ``lambdas[k]``; ``h_norms[k]`` is the
    replica mean of ``int_0^T exp(-2 C t) |c~_lam(theta_lam)|^2 dt``
    averaged over particles.  ``h_limit`` is the same integral for the
    unregularised run with ``c~`` in place of ``c~_lam``.  ``newton_iters``
    is the mean Newton iteration count per drift evaluation.
    """

    lambdas: tuple
    sup_errors: np.ndarray
    sup_stderr: np.ndarray
    h_norms: np.ndarray
    h_stderr: np.ndarray
    h_diff_stderr: np.ndarray
    h_limit: float
    constant: float
    newton_iters: np.ndarray = None

    @property
    def errors_decreasing(self):
        return bool(np.all(np.diff(self.sup_errors) < 0))

    def h_nondecreasing(self, tolerance_stderr=3.0):
        """Consecutive paired differences are ``>= -tolerance * stderr``."""
        diffs = np.diff(self.h_norms)
        return bool(np.all(diffs >= -tolerance_stderr * self.h_diff_stderr))


def _stderr(samples):
    samples = np.asarray(samples)
    if samples.shape[0] < 2:
        return np.zeros(samples.shape[1:])
    return samples.std(axis=0, ddof=1) / np.sqrt(samples.shape[0])


def _h_norm(times, drift_sq, C):
    weights = np.exp(-2 * C * times).reshape((-1,) + (1,) * (drift_sq.ndim - 1))
    return np.trapezoid(weights * drift_sq, times, axis=0)


def yosida_convergence_study(model, kernel, lattice, sim_config, yosida_config, initial_law,
                             disorder_law, replicas=8, seed=None, sample_every=10):
    """Compare regularised and exact particle dynamics under shared noise.

    Every run (one per ``lam`` plus the unregularised one) draws the same
    keyed initial conditions, disorder and noise.  The regularised drift is
    ``c~_lam(theta) + L theta``.  Sup errors are taken over the snapshots
    every ``sample_every`` steps.

    Parameters
    ----------
    kernel : WeightKernel or None
        Spatial weight of the interaction; ``None`` switches it off.
    """
    if lattice.site_count > (2 * 64 + 1) ** lattice.dim:
        raise ContractViolation("Yosida studies are limited to N <= 64")
    L = _need_L(model)
    if seed is not None:
        sim_config = replace(sim_config, seed=seed)
    if sim_config.scheme is None:
        sim_config = replace(sim_config, scheme="euler_maruyama")
    steps = np.arange(0, sim_config.n_steps + 1, sample_every)
    if steps[-1] != sim_config.n_steps:
        steps = np.append(steps, sim_config.n_steps)
    times = steps * sim_config.dt
    s_psi = 0.0 if kernel is None else kernel_constants(kernel).s_psi
    C = 2 * L + 3 * model.gamma_lip * s_psi

    def run(drift_fn):
        recs = simulate_replicas(model, lattice, kernel, initial_law, disorder_law, sim_config,
                                 replicas, sample_times=times, drift_fn=drift_fn)
        return np.stack([r.states for r in recs]), recs[0].omegas, [r.omegas for r in recs]

    exact, _, omegas = run(None)                                      # (R, S, n, m)
    om = np.stack(omegas)[:, None]                                    # (R, 1, n, k)
    drift_exact = shifted_drift(model, exact, om)
    h_limit_samples = _h_norm(times, np.sum(drift_exact**2, axis=-1).transpose(1, 0, 2), C).mean(axis=-1)

    sup_samples, h_samples, iters = [], [], []
    for lam in yosida_config.lambda_schedule:
        counts = []

        def drift_fn(theta, omega, lam=lam, counts=counts):
            return yosida_drift(model, lam, theta, omega, yosida_config, counts) + L * theta

        approx, _, _ = run(drift_fn)
        iters.append(float(np.mean(counts)) if counts else 0.0)
        err = np.linalg.norm(approx - exact, axis=-1).max(axis=1)    # (R, n)
        sup_samples.append(err.mean(axis=1))
        dl = yosida_drift(model, lam, approx, om, yosida_config)
        h = _h_norm(times, np.sum(dl**2, axis=-1).transpose(1, 0, 2), C)   # (R, n)
        h_samples.append(h.mean(axis=1))
    sup_samples = np.array(sup_samples)                               # (lambdas, R)
    h_samples = np.array(h_samples)
    return YosidaStudy(
        lambdas=yosida_config.lambda_schedule,
        sup_errors=sup_samples.mean(axis=1),
        sup_stderr=_stderr(sup_samples.T),
        h_norms=h_samples.mean(axis=1),
        h_stderr=_stderr(h_samples.T),
        h_diff_stderr=_stderr(np.diff(h_samples, axis=0).T),
        h_limit=float(h_limit_samples.mean()),
        constant=C,
        newton_iters=np.array(iters),
    )
