"""Non-Abelian thermal states and maximum-entropy fitting of their potentials.

The state is ``gamma_mu = exp(-sum_j mu_j Q_j) / Z`` with ``mu_0`` pairing
with the Hamiltonian, so the inverse temperature is ``beta = mu_0`` and the
usual chemical potentials are ``mu_j / mu_0``.

Potentials for prescribed charge values ``v`` are found by minimizing the
convex dual ``g(mu) = log Z(mu) + mu . v`` with a damped Newton method.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import DimensionMismatch, InfeasibleTarget, InvalidArgument, NoConvergence
from .qops import ChargeFamily, DensityMatrix, as_matrix, hermitian_eigh

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
MU_DIVERGENCE_CAP = 1e3


@dataclass(frozen=True)
class NatsParams:
    """Fitted potentials ``mu`` with ``log Z`` and moment residuals."""

    mu: np.ndarray
    log_partition: float
    residuals: np.ndarray
    iterations: int = 0
    targets: np.ndarray | None = field(default=None, repr=False)

    @property
    def beta(self) -> float:
        return float(self.mu[0])

    @property
    def chemical_potentials(self) -> np.ndarray:
        """``mu_j / mu_0`` for ``j >= 1`` (undefined when ``mu_0 == 0``)."""
        if self.mu[0] == 0:
            raise ZeroDivisionError("mu_0 = 0: no temperature scale")
        return self.mu[1:] / self.mu[0]

    @property
    def max_residual(self) -> float:
        return float(np.max(np.abs(self.residuals)))


@dataclass(frozen=True)
class TargetValues:
    """Prescribed charge values, one per charge, each inside that charge's spectrum."""

    v: np.ndarray

    @classmethod
    def for_family(cls, family: ChargeFamily, values) -> "TargetValues":
        v = np.asarray(values, dtype=float).ravel()
        if v.shape != (len(family),):
            raise DimensionMismatch(f"expected {len(family)} target values, got {v.size}")
        for j, (q, x) in enumerate(zip(family, v)):
            lo, hi = q.eigenvalues[0], q.eigenvalues[-1]
            slack = 1e-12 * max(1.0, hi - lo)
            if not lo - slack <= x <= hi + slack:
                raise InfeasibleTarget(
                    f"target {x} for charge {family.labels[j]} outside its spectrum [{lo}, {hi}]"
                )
        return cls(v)


def _mu_vector(family: ChargeFamily, mu) -> np.ndarray:
    mu = np.asarray(mu, dtype=float).ravel()
    if mu.shape != (len(family),):
        raise DimensionMismatch(f"expected {len(family)} potentials, got {mu.size}")
    return mu


def _exponent_spectrum(family: ChargeFamily, mu) -> tuple[np.ndarray, np.ndarray]:
    return hermitian_eigh(-family.combination(_mu_vector(family, mu)))


def log_partition(family: ChargeFamily, mu) -> float:
    """``log Tr exp(-sum_j mu_j Q_j)``, evaluated with a max-eigenvalue shift."""
    vals = np.linalg.eigvalsh(-family.combination(_mu_vector(family, mu)))
    return float(logsumexp(vals))


def _gibbs_from_spectrum(vals, vecs):
    logz = float(logsumexp(vals))
    p = np.exp(vals - logz)
    return (vecs * p) @ vecs.conj().T, p, logz


def build_nats(family: ChargeFamily, mu) -> DensityMatrix:
    """The thermal state ``exp(-sum_j mu_j Q_j) / Z``."""
    vals, vecs = _exponent_spectrum(family, mu)
    rho, _, _ = _gibbs_from_spectrum(vals, vecs)
    return DensityMatrix(rho, check=False)


def expectations(rho, family: ChargeFamily) -> np.ndarray:
    """Vector of ``Tr(rho Q_j)`` for every charge in the family."""
    m = as_matrix(rho)
    if m.shape != (family.site_dim, family.site_dim):
        raise DimensionMismatch(f"state of shape {m.shape} vs charges of dimension {family.site_dim}")
    return np.array([np.real(np.sum(m.T * q.matrix)) for q in family])


def kubo_mori_covariance(family: ChargeFamily, mu) -> np.ndarray:
    """Hessian of ``log Z`` at ``mu``.

    For noncommuting charges this is the Kubo-Mori (Bogoliubov) covariance,
    ``sum_kl (Q_i)_kl (Q_j)_lk [p_k, p_l] - <Q_i><Q_j>``, where ``[p_k, p_l]``
    is the divided difference of ``exp`` on the exponent spectrum.
    """
    vals, vecs = _exponent_spectrum(family, mu)
    _, p, _ = _gibbs_from_spectrum(vals, vecs)
    return _km_hessian(family, vals, vecs, p)


def _km_hessian(family, vals, vecs, p):
    da = vals[:, None] - vals[None, :]
    dp = p[:, None] - p[None, :]
    close = np.abs(da) < 1e-10
    with np.errstate(divide="ignore", invalid="ignore"):
        kernel = np.where(close, 0.5 * (p[:, None] + p[None, :]), dp / np.where(close, 1.0, da))
    qs = [vecs.conj().T @ q.matrix @ vecs for q in family]
    means = np.array([np.real(np.sum(np.diag(q) * p)) for q in qs])
    n = len(qs)
    hess = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            val = np.real(np.sum(qs[i] * qs[j].T * kernel))
            hess[i, j] = hess[j, i] = val - means[i] * means[j]
    return hess


def dual_objective(family: ChargeFamily, mu, targets) -> float:
    """``log Z(mu) + mu . v``; convex, minimized at the fitted potentials."""
    mu = _mu_vector(family, mu)
    return log_partition(family, mu) + float(mu @ np.asarray(targets, dtype=float))


def dual_gradient(family: ChargeFamily, mu, targets) -> np.ndarray:
    return np.asarray(targets, dtype=float) - expectations(build_nats(family, mu), family)


def fit_potentials(
    family: ChargeFamily,
    targets,
    tol: float = DEFAULT_TOL,
    *,
    max_iter: int = 500,
    mu_cap: float = MU_DIVERGENCE_CAP,
) -> NatsParams:
    """Potentials whose thermal state reproduces ``targets`` to within ``tol``.

    Damped Newton iteration on the dual starting at ``mu = 0``, with step
    halving until the dual decreases.  Singular Hessians are regularized by
    Tikhonov damping; if even the damped solve fails a gradient step is used.

    Raises
    ------
    InfeasibleTarget
        If a target lies outside the spectrum of its charge, or if ``|mu|``
        grows past ``mu_cap`` while the gradient fails to vanish (the target
        sits on or beyond the boundary of achievable moments).
    """
    if tol <= 0:
        raise InvalidArgument("tol must be positive")
    if not isinstance(targets, TargetValues):
        targets = TargetValues.for_family(family, targets)
    v = targets.v
    mu = np.zeros(len(family))
    vals, vecs = _exponent_spectrum(family, mu)
    rho, p, logz = _gibbs_from_spectrum(vals, vecs)
    g = logz + mu @ v

    for it in range(max_iter + 1):
        grad = v - expectations(rho, family)
        if np.max(np.abs(grad)) <= tol:
            mu, logz, grad = _polish(family, v, mu, vals, vecs, p, logz, grad)
            return NatsParams(mu=mu, log_partition=logz, residuals=-grad, iterations=it, targets=v)
        if np.linalg.norm(mu) > mu_cap:
            raise InfeasibleTarget(
                f"potentials diverged (|mu| = {np.linalg.norm(mu):.3g}) with residual "
                f"{np.max(np.abs(grad)):.3g}; targets are not in the interior of achievable moments"
            )
        if it == max_iter:
            break
        hess = _km_hessian(family, vals, vecs, p)
        step = _damped_newton_step(hess, grad)
        accepted = False
        t = 1.0
        for _ in range(60):
            trial = mu + t * step
            tv, tvec = _exponent_spectrum(family, trial)
            trho, tp, tlogz = _gibbs_from_spectrum(tv, tvec)
            tg = tlogz + trial @ v
            if tg < g or (tg <= g + 1e-15 * max(1.0, abs(g)) and t < 1):
                accepted = True
                break
            t *= 0.5
        if not accepted:
            # dual cannot decrease further at float resolution
            if np.max(np.abs(grad)) <= 100 * tol:
                return NatsParams(mu=mu.copy(), log_partition=logz, residuals=-grad, iterations=it, targets=v)
            raise InfeasibleTarget(
                f"line search stalled with residual {np.max(np.abs(grad)):.3g} at |mu| = "
                f"{np.linalg.norm(mu):.3g}"
            )
        mu, vals, vecs, rho, p, logz, g = trial, tv, tvec, trho, tp, tlogz, tg
        logger.debug("fit iter %d: dual %.16g, |grad| %.3g", it, g, np.max(np.abs(grad)))

    raise NoConvergence(f"no convergence after {max_iter} Newton iterations")


def _polish(family, v, mu, vals, vecs, p, logz, grad):
    # one extra full Newton step; kept only if it shrinks the residual
    step = _damped_newton_step(_km_hessian(family, vals, vecs, p), grad)
    trial = mu + step
    tv, tvec = _exponent_spectrum(family, trial)
    trho, _, tlogz = _gibbs_from_spectrum(tv, tvec)
    tgrad = v - expectations(trho, family)
    if np.max(np.abs(tgrad)) < np.max(np.abs(grad)):
        return trial, tlogz, tgrad
    return mu.copy(), logz, grad


def _damped_newton_step(hess: np.ndarray, grad: np.ndarray) -> np.ndarray:
    # descent direction for the dual: gradient of g is (v - <Q>) = grad
    scale = max(float(np.trace(hess)) / len(hess), 1e-300)
    damping = 1e-12 * scale
    for _ in range(12):
        try:
            chol = np.linalg.cholesky(hess + damping * np.eye(len(hess)))
            y = np.linalg.solve(chol, -grad)
            return np.linalg.solve(chol.conj().T, y)
        except np.linalg.LinAlgError:
            damping *= 100
    return -grad / scale


def nats_entropy_identity(params: NatsParams) -> float:
    """``log Z + sum_j mu_j v_j``, which equals ``S(gamma_v)`` at the fit."""
    return float(params.log_partition + params.mu @ params.targets)
