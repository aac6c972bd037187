"""Approximate microcanonical subspaces on N copies of a system.

Averaged charges ``Qbar_j = (1/N) sum_l Q_j^(l)`` are filtered through
spectral windows ``|q - v_j| <= eta * Sigma(Q_j)``.  For commuting charges
the subspace is the joint range of the window projectors.  For
noncommuting charges the averages are first replaced by exactly commuting
approximants obtained from a numerical joint diagonalization, and the
windows are applied to those.

Certification evaluates the two defining conditions:

* condition 1 - every state supported in M puts weight ``>= 1 - delta`` in
  each window of the true averages (``delta`` computed exactly);
* condition 2 - every state with weight ``>= 1 - delta'`` in all the
  ``eta'`` windows has weight ``>= 1 - epsilon`` in M (``epsilon`` bracketed
  between a primal search and a weak-duality eigenvalue bound).
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConvergenceWarning, EmptySubspace, InvalidArgument
from .nats import NatsParams, build_nats, fit_potentials
from .qops import (
    ChargeFamily,
    DensityMatrix,
    HermitianOperator,
    apply_spectral_function,
    as_matrix,
    check_dim,
    embed_site,
    hermitian_eigh,
    kron_all,
    operator_norm,
    ramp,
    reduced_site_states,
    relative_entropy,
    trace_distance,
    von_neumann_entropy,
)

logger = logging.getLogger(__name__)

WINDOW_SLACK = 1e-12
JAD_MAX_SWEEPS = 10_000
JAD_TOL = 1e-12


# --- averaged charges and windows ---------------------------------------------

def average_charge(q, n_copies: int) -> HermitianOperator:
    """``(1/N) sum_l I..Q..I`` on ``N`` copies."""
    q = q if isinstance(q, HermitianOperator) else HermitianOperator(q)
    check_dim(q.dim**n_copies)
    total = sum(embed_site(q, s, n_copies).matrix for s in range(n_copies))
    return HermitianOperator(total / n_copies, check=False)


class WindowProjector(NamedTuple):
    projector: HermitianOperator
    empty: bool


def window_mask(values, v: float, eta: float, sigma: float) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    return np.abs(values - v) <= eta * sigma + WINDOW_SLACK * sigma


def window_projector(qbar, v: float, eta: float, sigma: float) -> WindowProjector:
    """Projector onto eigenspaces of ``qbar`` with eigenvalues in ``[v - eta sigma, v + eta sigma]``.

    ``sigma`` is the spectral diameter of the single-copy charge.  When no
    eigenvalue falls in the window a zero projector is returned with
    ``empty=True``.
    """
    if eta < 0:
        raise InvalidArgument("eta must be non-negative")
    qbar = qbar if isinstance(qbar, HermitianOperator) else HermitianOperator(qbar)
    vals, vecs = qbar.eigh()
    mask = window_mask(vals, v, eta, sigma)
    sel = vecs[:, mask]
    proj = HermitianOperator(sel @ sel.conj().T, check=False)
    return WindowProjector(proj, not bool(mask.any()))


# --- commuting approximants ---------------------------------------------------

@dataclass(frozen=True)
class CommutingApproximants:
    """Exactly commuting ``Ybar_j``, all diagonal in ``basis``."""

    ybars: tuple[HermitianOperator, ...]
    basis: np.ndarray
    diagonals: np.ndarray  # shape (n_ops, dim): eigenvalue of Ybar_j on basis column k
    eps_num: float
    sweeps: int
    converged: bool

    def __iter__(self):
        # unpacks as (ybars, eps_num)
        return iter((self.ybars, self.eps_num))


def _offdiag_sq(mats: np.ndarray) -> float:
    diag = np.einsum("kii->ki", mats)
    return float(np.sum(np.abs(mats) ** 2) - np.sum(np.abs(diag) ** 2))


def joint_diagonalize(mats: Sequence, *, max_sweeps: int = JAD_MAX_SWEEPS, tol: float = JAD_TOL,
                      init: np.ndarray | None = None):
    """Unitary ``V`` minimizing the summed squared off-diagonal moduli of ``V^dagger A_k V``.

    Jacobi sweeps over index pairs; each pair gets the complex Givens
    rotation that is optimal for all matrices at once (closed form for
    Hermitian inputs via the top eigenvector of a 3x3 real matrix).
    Stops when a sweep lowers the objective by less than ``tol`` (relative
    to the initial total squared norm).  Returns ``(V, rotated, sweeps,
    converged)``.
    """
    a = np.array([as_matrix(m) for m in mats], dtype=complex)
    k, n, _ = a.shape
    v = np.eye(n, dtype=complex) if init is None else np.array(init, dtype=complex)
    if init is not None:
        a = np.einsum("ji,kjl,lm->kim", v.conj(), a, v)
    scale = max(float(np.sum(np.abs(a) ** 2)), 1e-300)
    b = np.array([[1, 0, 0], [0, 1, 1], [0, -1j, 1j]])
    obj = _offdiag_sq(a)
    converged = False
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        for p in range(n - 1):
            for q in range(p + 1, n):
                g = np.stack([a[:, p, p] - a[:, q, q], a[:, p, q], a[:, q, p]])
                gg = np.real(b @ (g @ g.conj().T) @ b.conj().T)
                w, vec = np.linalg.eigh(gg)
                ang = vec[:, -1]
                if ang[0] < 0:
                    ang = -ang
                c = math.sqrt(0.5 + ang[0] / 2)
                s = 0.5 * (ang[1] - 1j * ang[2]) / c
                if abs(s) < 1e-15:
                    continue
                rot = np.array([[c, -np.conj(s)], [s, c]])
                v[:, [p, q]] = v[:, [p, q]] @ rot
                a[:, [p, q], :] = np.einsum("ij,kjl->kil", rot.conj().T, a[:, [p, q], :])
                a[:, :, [p, q]] = np.einsum("kli,ij->klj", a[:, :, [p, q]], rot)
        new = _offdiag_sq(a)
        if obj - new < tol * scale:
            obj = new
            converged = True
            break
        obj = new
    return v, a, sweeps, converged


def permutation_blocks(dim: int, site_dim: int, seed: int = 0) -> list[np.ndarray]:
    """Orthonormal bases of the eigenspaces of a random element of the copy-permutation algebra.

    Operators symmetric under permuting the ``N`` copies (such as averaged
    charges) leave every one of these subspaces invariant, so joint
    diagonalization can run block by block.
    """
    n = round(math.log(dim) / math.log(site_dim))
    if site_dim**n != dim or n < 2:
        return [np.eye(dim, dtype=complex)]
    rng = np.random.default_rng(seed)
    idx = np.arange(dim).reshape((site_dim,) * n)
    k = np.zeros((dim, dim))
    for a in range(n):
        for b in range(a + 1, n):
            perm = np.swapaxes(idx, a, b).ravel()
            k[np.arange(dim), perm] += rng.uniform(1.0, 2.0)
    vals, vecs = hermitian_eigh(k)
    blocks, start = [], 0
    for i in range(1, dim + 1):
        if i == dim or vals[i] - vals[i - 1] > 1e-8:
            blocks.append(vecs[:, start:i])
            start = i
    return blocks


def _offdiag_norm(rotated: np.ndarray) -> float:
    return max(operator_norm(m - np.diag(np.diag(m))) for m in rotated)


def _polish_offdiag(mats: np.ndarray, power: int = 8, max_iter: int = 300) -> np.ndarray:
    """Unitary reducing ``max_j ||offdiag(U^dagger A_j U)||`` via a Schatten-``2 power`` surrogate."""
    from scipy.linalg import expm
    from scipy.optimize import minimize

    n = mats.shape[1]
    iu = np.triu_indices(n, 1)
    m = len(iu[0])

    def generator(x):
        h = np.zeros((n, n), dtype=complex)
        h[iu] = x[:m] + 1j * x[m:2 * m]
        h = h + h.conj().T
        h[np.diag_indices(n)] = x[2 * m:]
        return h

    def objective(x):
        u = expm(1j * generator(x))
        total = 0.0
        for a in mats:
            b = u.conj().T @ a @ u
            ev = np.linalg.eigvalsh(b - np.diag(np.diag(b)))
            total += float(np.sum(ev ** (2 * power)))
        return total ** (1.0 / (2 * power))

    res = minimize(objective, np.zeros(n * n), method="BFGS", options={"maxiter": max_iter})
    return expm(1j * generator(res.x))


def _block_basis(sub, n_ops, polish, restarts, max_sweeps, seed):
    """Joint-diagonalizing basis of one block; with ``polish`` the best of several starts."""
    _, init = hermitian_eigh(sub[:n_ops].sum(axis=0))
    v, rotated, sweeps, ok = joint_diagonalize(sub, max_sweeps=max_sweeps, init=init)
    if not polish or np.abs(rotated).max() == 0:
        return v, sweeps, ok
    rng = np.random.default_rng(seed)
    best_v, best = v, _offdiag_norm(rotated[:n_ops])
    for attempt in range(restarts):
        if attempt:
            _, init = hermitian_eigh(sum(w * m for w, m in zip(rng.normal(size=n_ops), sub[:n_ops])))
            v, rotated, s2, ok2 = joint_diagonalize(sub, max_sweeps=max_sweeps, init=init)
            sweeps, ok = max(sweeps, s2), ok and ok2
        u = _polish_offdiag(rotated[:n_ops])
        val = _offdiag_norm(np.einsum("ji,kjl,lm->kim", u.conj(), rotated[:n_ops], u))
        if val < best:
            best_v, best = v @ u, val
    return best_v, sweeps, ok


def commuting_approximants(qbars: Sequence, *, site_dim: int | None = None, anchors: Sequence = (),
                           max_sweeps: int = JAD_MAX_SWEEPS, polish: bool = True, polish_max_block: int = 12,
                           restarts: int = 4, seed: int = 0) -> CommutingApproximants:
    """Commuting stand-ins for the averaged charges.

    The operators are jointly diagonalized numerically and ``Ybar_j`` is
    the diagonal part of ``Qbar_j`` in the resulting basis, so all
    ``Ybar_j`` commute exactly.  ``eps_num = max_j ||Qbar_j - Ybar_j||``.

    With ``site_dim`` given, the space is first split into the invariant
    blocks of the copy-permutation algebra and each block is handled on its
    own.  Per block, Jacobi sweeps minimize the summed squared off-diagonal
    moduli (starting from the eigenbasis of ``sum_j Qbar_j``); that
    objective is flat along symmetry orbits, so a local descent on a smooth
    surrogate of the operator norm of the off-diagonal part follows and is
    kept only when it lowers that norm.  A ``ConvergenceWarning`` is
    emitted if the sweep cap is hit; the best basis found is returned.
    """
    n_ops = len(qbars)
    mats = np.array([as_matrix(q) for q in list(qbars) + list(anchors)], dtype=complex)
    anchors = anchors if len(anchors) else None
    if n_ops == 0:
        raise InvalidArgument("need at least one operator")
    dim = mats.shape[1]
    if mats.shape[1:] != (dim, dim):
        raise InvalidArgument("all operators must share one dimension")
    blocks = [np.eye(dim, dtype=complex)]
    if site_dim is not None and site_dim > 1:
        cand = permutation_blocks(dim, site_dim)
        leak = max(
            operator_norm(m @ b - b @ (b.conj().T @ m @ b)) for b in cand for m in mats
        )
        if leak <= 1e-10:
            blocks = cand
        else:
            logger.info("operators are not copy-symmetric (leak %.2e); using one block", leak)

    basis = np.zeros((dim, dim), dtype=complex)
    col = 0
    total_sweeps, converged = 0, True
    for b in blocks:
        sub = np.einsum("ji,kjl,lm->kim", b.conj(), mats, b)
        k = b.shape[1]
        if k == 1:
            basis[:, col] = b[:, 0]
            col += 1
            continue
        v, sweeps, ok = _block_basis(sub, n_ops, anchors is None and polish and k <= polish_max_block,
                                     restarts, max_sweeps, seed)
        total_sweeps = max(total_sweeps, sweeps)
        converged &= ok
        basis[:, col:col + k] = b @ v
        col += k
    if not converged:
        warnings.warn(f"joint diagonalization hit the {max_sweeps}-sweep cap", ConvergenceWarning, stacklevel=2)

    mats = mats[:n_ops]
    rotated = np.einsum("ji,kjl,lm->kim", basis.conj(), mats, basis)
    diags = np.real(np.einsum("kii->ki", rotated))
    ybars, eps = [], 0.0
    for m, dk in zip(mats, diags):
        y = (basis * dk) @ basis.conj().T
        ybars.append(HermitianOperator(y, check=False))
        eps = max(eps, operator_norm(m - y))
    return CommutingApproximants(tuple(ybars), basis, diags, eps, total_sweeps, converged)


# --- subspaces -------------------------------------------------------------------

@dataclass(frozen=True)
class Subspace:
    """Orthonormal basis of ``M`` inside ``(C^d)^{(x) N}`` plus certification data."""

    n_copies: int
    site_dim: int
    basis: np.ndarray
    eta: float
    provenance: str  # "commuting" | "approximated"
    targets: np.ndarray
    epsilon: float | None = None
    eta_prime: float | None = None
    delta: float | None = None
    delta_prime: float | None = None
    eps_num: float | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        b = self.basis
        if b.ndim != 2 or b.shape[1] < 1:
            raise EmptySubspace("a subspace needs at least one basis vector")
        gram = b.conj().T @ b
        if np.max(np.abs(gram - np.eye(b.shape[1]))) > 1e-10:
            raise InvalidArgument("basis columns are not orthonormal")

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def full_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    @property
    def certified(self) -> bool:
        return None not in (self.epsilon, self.delta, self.delta_prime, self.eta_prime)


def full_space(n_copies: int, site_dim: int, targets=None, eta: float = 1.0) -> Subspace:
    dim = site_dim**n_copies
    check_dim(dim)
    t = np.zeros(0) if targets is None else np.asarray(targets, dtype=float)
    return Subspace(n_copies, site_dim, np.eye(dim, dtype=complex), eta, "commuting", t)


def averaged_family(family: ChargeFamily, n_copies: int) -> list[HermitianOperator]:
    return [average_charge(q, n_copies) for q in family]


def _range_basis(proj: np.ndarray) -> np.ndarray:
    vals, vecs = hermitian_eigh(proj)
    return vecs[:, vals > 0.5]


def build_amc(family: ChargeFamily, targets, n_copies: int, eta: float, *, seed: int = 0) -> Subspace:
    """Approximate microcanonical subspace for ``targets`` on ``n_copies`` copies.

    Commuting families use the product of the window projectors of the
    averaged charges.  Otherwise the windows are imposed on the commuting
    approximants' joint eigenvalues (``provenance="approximated"``).  For
    the latter the window projectors themselves, weighted by the window
    half-width ``eta * Sigma(Q_j)``, join the joint diagonalization so the
    selected eigenvectors stay close to the true windows.
    """
    if eta <= 0:
        raise InvalidArgument("eta must be positive")
    v = np.asarray(targets.v if hasattr(targets, "v") else targets, dtype=float)
    if v.shape != (len(family),):
        raise InvalidArgument(f"expected {len(family)} targets, got {v.size}")
    check_dim(family.site_dim**n_copies)
    qbars = averaged_family(family, n_copies)
    sigmas = [q.spectral_diameter for q in family]
    if family.is_commuting():
        proj = np.eye(qbars[0].dim, dtype=complex)
        for qb, vj, sj in zip(qbars, v, sigmas):
            proj = proj @ window_projector(qb, vj, eta, sj).projector.matrix
        basis = _range_basis(0.5 * (proj + proj.conj().T))
        provenance, eps_num = "commuting", 0.0
    else:
        anchors = [
            eta * sj * window_projector(qb, vj, eta, sj).projector.matrix
            for qb, vj, sj in zip(qbars, v, sigmas)
        ]
        approx = commuting_approximants(qbars, site_dim=family.site_dim, anchors=anchors, seed=seed)
        mask = np.ones(qbars[0].dim, dtype=bool)
        for dk, vj, sj in zip(approx.diagonals, v, sigmas):
            mask &= window_mask(dk, vj, eta, sj)
        basis = approx.basis[:, mask]
        provenance, eps_num = "approximated", approx.eps_num
    if basis.shape[1] == 0:
        raise EmptySubspace(
            f"no joint window content for targets {v.tolist()} at eta={eta}, N={n_copies}"
        )
    return Subspace(n_copies, family.site_dim, basis, eta, provenance, v, eps_num=eps_num)


def _window_projectors(family: ChargeFamily, subspace: Subspace, eta: float, targets=None) -> list[np.ndarray]:
    v = subspace.targets if targets is None else np.asarray(targets, dtype=float)
    out = []
    for q, vj in zip(family, v):
        qb = average_charge(q, subspace.n_copies)
        out.append(window_projector(qb, vj, eta, q.spectral_diameter).projector.matrix)
    return out


def condition1_defect(subspace: Subspace, family: ChargeFamily, targets=None, eta: float | None = None) -> float:
    """Smallest ``delta`` with ``Tr(omega Pi_j^eta) >= 1 - delta`` for all states on ``M``.

    Equals ``max_j (1 - lambda_min(B^dagger Pi_j B))`` for an orthonormal basis ``B`` of ``M``.
    """
    eta = subspace.eta if eta is None else eta
    b = subspace.basis
    worst = 0.0
    for proj in _window_projectors(family, subspace, eta, targets):
        compressed = b.conj().T @ proj @ b
        lam = np.linalg.eigvalsh(0.5 * (compressed + compressed.conj().T))[0]
        worst = max(worst, 1.0 - float(lam))
    return float(min(max(worst, 0.0), 1.0))


class Condition2Bounds(NamedTuple):
    primal_lower: float
    dual_upper: float
    multipliers: np.ndarray


def _lambda_grid() -> np.ndarray:
    return np.concatenate([[0.0], np.logspace(-3, 3, 61)])


class _JointDiagonal:
    """Evaluates ``lambda_max`` of combinations of mutually commuting operators cheaply."""

    def __init__(self, ops: list[np.ndarray], seed: int = 0):
        rng = np.random.default_rng(seed)
        combo = sum(w * o for w, o in zip(rng.uniform(0.5, 1.5, size=len(ops)) * np.sqrt(2), ops))
        _, vecs = hermitian_eigh(combo)
        self.diags = []
        self.ok = True
        for o in ops:
            r = vecs.conj().T @ o @ vecs
            d = np.real(np.diag(r))
            if np.max(np.abs(r - np.diag(d))) > 1e-9:
                self.ok = False
                return
            self.diags.append(d)


def condition2_defect(
    subspace: Subspace,
    family: ChargeFamily,
    eta_prime: float,
    delta_prime: float,
    targets=None,
    *,
    n_random: int = 200,
    seed: int = 0,
) -> Condition2Bounds:
    """Bracket ``eps* = max {1 - Tr(omega P) : Tr(omega Pi_j^eta') >= 1 - delta' for all j}``.

    Upper bound by weak duality: for any ``lambda >= 0``,
    ``eps* <= lambda_max[(I - P) + sum_j lambda_j (Pi_j - (1 - delta') I)]``.
    The multipliers are searched on a log grid (a common value first, then
    coordinate descent with three refinement passes).  The lower bound is
    the best objective over explicitly feasible states: mixtures of a
    feasible base state with top eigenvectors of the dual operator, states
    orthogonal to ``M``, random pure states and their pinchings.
    """
    if not 0 <= delta_prime <= 1:
        raise InvalidArgument("delta_prime must lie in [0, 1]")
    p = subspace.projector
    dim = p.shape[0]
    eye = np.eye(dim)
    windows = _window_projectors(family, subspace, eta_prime, targets)
    comp = eye - p
    shifted = [w - (1.0 - delta_prime) * eye for w in windows]

    joint = _JointDiagonal([comp] + windows)
    if joint.ok:
        d_comp = joint.diags[0]
        d_shift = [d - (1.0 - delta_prime) for d in joint.diags[1:]]

        def top(lam):
            return float(np.max(d_comp + sum(l * s for l, s in zip(lam, d_shift))))
    else:
        def top(lam):
            x = comp + sum(l * s for l, s in zip(lam, shifted))
            return float(np.linalg.eigvalsh(0.5 * (x + x.conj().T))[-1])

    grid = _lambda_grid()
    k = len(windows)
    vals = [top(np.full(k, g)) for g in grid]
    lam = np.full(k, grid[int(np.argmin(vals))])
    best = min(vals)
    for rnd in range(3):
        for j in range(k):
            if rnd == 0:
                cand = grid
            else:
                centre = lam[j] if lam[j] > 0 else 1e-3
                span = 10.0 ** (1.0 / (2 * rnd))
                cand = np.concatenate([[0.0], centre * np.logspace(-math.log10(span), math.log10(span), 21)])
            for g in cand:
                trial = lam.copy()
                trial[j] = g
                val = top(trial)
                if val < best:
                    best, lam = val, trial
    # a negative value certifies that no state meets the constraints at all
    dual_upper = min(best, 1.0)

    x = comp + sum(l * s for l, s in zip(lam, shifted))
    primal = _primal_search(p, windows, delta_prime, x, n_random, seed)
    return Condition2Bounds(float(primal), float(dual_upper), lam)


def _primal_search(p, windows, delta_prime, dual_op, n_random, seed) -> float:
    """Best ``1 - Tr(rho P)`` over explicitly constructed feasible states (a lower bound).

    Candidates are pure states and their pinchings by ``{P, I - P}``; both
    are scored from state vectors, so no candidate density matrix is formed.
    """
    dim = p.shape[0]
    floor = 1.0 - delta_prime
    q = np.eye(dim) - p

    def expect(op, vecs):
        return np.real(np.sum(vecs.conj() * (op @ vecs), axis=0))

    def score_pure(vecs):
        # vecs: normalized columns; returns window weights (k, m) and objectives (m,)
        w = np.array([expect(win, vecs) for win in windows])
        return w, 1.0 - expect(p, vecs)

    _, vecs = np.linalg.eigh(0.5 * (dual_op + dual_op.conj().T))
    tops = vecs[:, ::-1][:, :min(4, dim)]
    rng = np.random.default_rng(seed)
    raw = rng.normal(size=(dim, n_random)) + 1j * rng.normal(size=(dim, n_random))
    raw /= np.linalg.norm(raw, axis=0)
    w_pure, o_pure = score_pure(np.hstack([tops, raw]))
    # pinched random states: mixtures of P psi and (I - P) psi with weights |P psi|^2, |(I - P) psi|^2
    w_pinch = np.array([expect(win, p @ raw) + expect(win, q @ raw) for win in windows])
    o_pinch = expect(q, raw)
    cand_w = np.hstack([w_pure, w_pinch])
    cand_o = np.concatenate([o_pure, o_pinch])

    # feasible anchors: the flat state on M and the top eigenvector of sum_j Pi_j
    wsum = sum(windows)
    _, wvec = np.linalg.eigh(0.5 * (wsum + wsum.conj().T))
    rank = max(float(np.real(np.trace(p))), 1e-300)
    anchor_w = [np.array([np.real(np.sum(win.T * p)) / rank for win in windows])]
    anchor_o = [0.0]
    tw, to = score_pure(wvec[:, -1:])
    anchor_w.append(tw[:, 0])
    anchor_o.append(float(to[0]))

    all_w = np.hstack([np.array(anchor_w).T, cand_w])
    all_o = np.concatenate([anchor_o, cand_o])
    ok = np.all(all_w >= floor, axis=0)
    if not np.any(ok):
        return 0.0
    best = float(np.max(all_o[ok]))
    # mix each candidate into a feasible state as far as the constraints allow
    feasible = np.flatnonzero(ok)[:2]
    for idx in feasible:
        base_w, base_o = all_w[:, idx], all_o[idx]
        gain = cand_o > base_o
        t = np.ones(cand_o.shape)
        for j in range(len(windows)):
            low = cand_w[j] < floor
            denom = np.where(low, base_w[j] - cand_w[j], 1.0)
            t = np.where(low, np.minimum(t, (base_w[j] - floor) / denom), t)
        t = np.clip(t * (1 - 1e-12), 0.0, 1.0)
        mixed = t * cand_o + (1 - t) * base_o
        if np.any(gain):
            best = max(best, float(np.max(mixed[gain])))
    return float(min(max(best, 0.0), 1.0))


def certify(subspace: Subspace, family: ChargeFamily, eta_prime: float, delta_prime: float, **kw) -> Subspace:
    """Return a copy of ``subspace`` carrying ``delta`` (condition 1) and ``epsilon`` (condition 2 bound)."""
    delta = condition1_defect(subspace, family)
    bounds = condition2_defect(subspace, family, eta_prime, delta_prime, **kw)
    return replace(subspace, delta=delta, epsilon=bounds.dual_upper, eta_prime=eta_prime,
                   delta_prime=delta_prime, meta={**subspace.meta, "epsilon_primal": bounds.primal_lower})


def amc_state(subspace: Subspace) -> DensityMatrix:
    """Flat state ``P / Tr P`` on the subspace."""
    if subspace.dim < 1:
        raise EmptySubspace("empty subspace")
    return DensityMatrix(subspace.projector / subspace.dim, check=False)


# --- site relative-entropy report ---------------------------------------------------

@dataclass(frozen=True)
class Theorem1Report:
    site_relative_entropies: np.ndarray
    site_trace_distances: np.ndarray
    average_relative_entropy: float
    w: np.ndarray
    xi: np.ndarray
    xi_bound: np.ndarray
    xi_bound_window: np.ndarray
    delta: float
    eta: float
    entropy_omega: float
    dim: int
    n_copies: int
    n_entropy_nats: float
    entropy_deficit: float
    theta_prime: float
    cross_term_average: float
    duality_rhs: float
    mu: np.ndarray
    log_partition: float

    def as_dict(self) -> dict:
        out = {}
        for k, val in self.__dict__.items():
            out[k] = val.tolist() if isinstance(val, np.ndarray) else val
        return out


def theorem1_report(subspace: Subspace, family: ChargeFamily, targets=None,
                    params: NatsParams | None = None, *, delta: float | None = None) -> Theorem1Report:
    """Relative entropies of the flat state's site reductions to the thermal state, with the bound chain.

    ``xi_bound`` is ``(eta + 2 delta) ||Q_j||``; ``xi_bound_window`` is the
    bound that follows directly from the window width,
    ``eta Sigma(Q_j) + 2 delta ||Q_j||``.  ``theta_prime`` is
    ``(c+1) max_j |mu_j| (eta + 2 delta) max_j ||Q_j||``.
    """
    v = subspace.targets if targets is None else np.asarray(targets.v if hasattr(targets, "v") else targets, dtype=float)
    if params is None:
        params = fit_potentials(family, v)
    gamma = build_nats(family, params.mu)
    if delta is None:
        delta = condition1_defect(subspace, family, v)
    n, d = subspace.n_copies, subspace.site_dim
    reduced = reduced_site_states(subspace.basis, d)
    rel = np.array([relative_entropy(r, gamma) for r in reduced])
    dist = np.array([trace_distance(r, gamma) for r in reduced])
    omega_bar = sum(reduced) / n
    w = np.array([q.expectation(omega_bar) for q in family])
    xi = np.abs(w - v)
    norms = np.array([q.norm for q in family])
    sigmas = np.array([q.spectral_diameter for q in family])
    eta = subspace.eta
    xi_bound = (eta + 2 * delta) * norms
    xi_window = eta * sigmas + 2 * delta * norms
    s_gamma = von_neumann_entropy(gamma)
    s_omega = math.log(subspace.dim)
    theta_prime = len(family) * float(np.max(np.abs(params.mu))) * (eta + 2 * delta) * float(norms.max())
    log_gamma = -family.combination(params.mu) - params.log_partition * np.eye(d)
    cross = -float(np.mean([np.real(np.sum(r.T * log_gamma)) for r in reduced]))
    duality_rhs = float(params.log_partition + params.mu @ w)
    return Theorem1Report(
        site_relative_entropies=rel,
        site_trace_distances=dist,
        average_relative_entropy=float(rel.mean()),
        w=w,
        xi=xi,
        xi_bound=xi_bound,
        xi_bound_window=xi_window,
        delta=float(delta),
        eta=float(eta),
        entropy_omega=s_omega,
        dim=subspace.dim,
        n_copies=n,
        n_entropy_nats=n * s_gamma,
        entropy_deficit=s_omega - n * s_gamma,
        theta_prime=theta_prime,
        cross_term_average=cross,
        duality_rhs=duality_rhs,
        mu=np.asarray(params.mu, dtype=float),
        log_partition=float(params.log_partition),
    )


# --- concentration and mollifier checks ------------------------------------------------

class HoeffdingCheck(NamedTuple):
    lhs: np.ndarray
    rhs: float


def hoeffding_check(family: ChargeFamily, targets, n_copies: int, eta: float,
                    params: NatsParams | None = None) -> HoeffdingCheck:
    """``1 - Tr(gamma^{(x)N} Pi_j^eta)`` per charge against ``2 exp(-2 eta^2 N)``.

    The left side is computed on the full ``d**N`` space by diagonalizing
    each averaged charge and weighting its window with the product state.
    """
    v = np.asarray(targets.v if hasattr(targets, "v") else targets, dtype=float)
    check_dim(family.site_dim**n_copies)
    if params is None:
        params = fit_potentials(family, v)
    gamma = build_nats(family, params.mu).matrix
    big = kron_all([gamma] * n_copies)
    lhs = []
    for q, vj in zip(family, v):
        qb = average_charge(q, n_copies)
        vals, vecs = qb.eigh()
        mask = window_mask(vals, vj, eta, q.spectral_diameter)
        sel = vecs[:, mask]
        inside = float(np.real(np.einsum("ik,ij,jk->", sel.conj(), big, sel)))
        lhs.append(max(0.0, 1.0 - inside))
    return HoeffdingCheck(np.array(lhs), 2.0 * math.exp(-2.0 * eta**2 * n_copies))


class MollifierGap(NamedTuple):
    gap: float
    lipschitz_bound: float


def mollifier_gap_check(qbar, ybar, v: float, eta0: float, eta1: float) -> MollifierGap:
    """``||f(Ybar - v) - f(Qbar - v)||`` for the plateau ramp ``f``, beside ``||Qbar - Ybar|| / (eta1 - eta0)``."""
    f = ramp(eta0, eta1)
    qm, ym = as_matrix(qbar), as_matrix(ybar)
    eye = np.eye(qm.shape[0])
    fq = apply_spectral_function(qm - v * eye, f).matrix
    fy = apply_spectral_function(ym - v * eye, f).matrix
    return MollifierGap(operator_norm(fy - fq), operator_norm(qm - ym) / (eta1 - eta0))


# --- serialization ----------------------------------------------------------------------

def subspace_to_dict(subspace: Subspace, family: ChargeFamily | None = None) -> dict:
    from .qops import operator_to_dict

    out = {
        "n_copies": subspace.n_copies,
        "site_dim": subspace.site_dim,
        "dim": subspace.dim,
        "provenance": subspace.provenance,
        "targets": subspace.targets.tolist(),
        "eta": subspace.eta,
        "epsilon": subspace.epsilon,
        "eta_prime": subspace.eta_prime,
        "delta": subspace.delta,
        "delta_prime": subspace.delta_prime,
        "eps_num": subspace.eps_num,
        "basis_re": np.real(subspace.basis).tolist(),
        "basis_im": np.imag(subspace.basis).tolist(),
    }
    if family is not None:
        out["charges"] = [operator_to_dict(q) for q in family]
        out["labels"] = list(family.labels)
    return out


def subspace_from_dict(data: dict) -> tuple[Subspace, ChargeFamily | None]:
    from .qops import operator_from_dict

    try:
        basis = np.asarray(data["basis_re"], dtype=float) + 1j * np.asarray(data["basis_im"], dtype=float)
        sub = Subspace(
            n_copies=int(data["n_copies"]),
            site_dim=int(data["site_dim"]),
            basis=basis,
            eta=float(data["eta"]),
            provenance=str(data["provenance"]),
            targets=np.asarray(data["targets"], dtype=float),
            epsilon=data.get("epsilon"),
            eta_prime=data.get("eta_prime"),
            delta=data.get("delta"),
            delta_prime=data.get("delta_prime"),
            eps_num=data.get("eps_num"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidArgument(f"malformed subspace file: {exc}") from exc
    family = None
    if "charges" in data:
        family = ChargeFamily([operator_from_dict(c) for c in data["charges"]], labels=data.get("labels"))
    return sub, family
