"""Resource-theory toolkit for thermal operations with noncommuting charges.

Free operations append thermal ancillas, apply a unitary that conserves
every total charge, and discard subsystems.  This module provides the
payoff operator ``W = sum_j mu_j Q_j``, work accounting, free-unitary
validation and sampling, reference-frame lifting, passivity tests, the
classical and quantum Renyi free energies, and second-law checks.

Temperature follows ``T = 1 / mu_0`` (``k_B = 1``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence

import numpy as np
from scipy.linalg import expm, null_space

from .errors import (
    AlphaOutOfRange,
    DimensionMismatch,
    DimensionOverflow,
    InvalidArgument,
    NotUnitary,
    RepresentationMismatch,
)
from .nats import build_nats, log_partition
from .qops import (
    ChargeFamily,
    DensityMatrix,
    HermitianOperator,
    as_matrix,
    commutator_norm,
    embed_site,
    hermitian_eigh,
    matrix_power_h,
    operator_norm,
    partial_trace,
    random_hermitian,
    relative_entropy,
    trace_distance,
)

DEGENERACY_TOL = 1e-9
PASSIVITY_TOL = 1e-9
UNITARY_TOL = 1e-10
PROB_ZERO_TOL = 1e-12
# commutants of noncommuting totals are found from a dim^2 x dim^2 superoperator
SUPEROPERATOR_DIM_LIMIT = 64


# --- payoff function and work --------------------------------------------------------

@dataclass(frozen=True)
class PayoffFunction:
    """``W = sum_j mu_j Q_j`` with its eigenvectors grouped by distinct eigenvalue."""

    operator: HermitianOperator
    mu: np.ndarray
    eigen_partition: tuple[np.ndarray, ...]
    group_values: np.ndarray

    @classmethod
    def from_operator(cls, op, mu=None) -> "PayoffFunction":
        op = op if isinstance(op, HermitianOperator) else HermitianOperator(op)
        vals = op.eigenvalues
        thresh = DEGENERACY_TOL * max(op.spectral_diameter, 1e-300)
        groups, start = [], 0
        for i in range(1, len(vals) + 1):
            if i == len(vals) or vals[i] - vals[start] > thresh:
                groups.append(np.arange(start, i))
                start = i
        group_values = np.array([vals[g].mean() for g in groups])
        mu = np.array([], dtype=float) if mu is None else np.asarray(mu, dtype=float)
        return cls(op, mu, tuple(groups), group_values)

    @property
    def dim(self) -> int:
        return self.operator.dim

    def group_projectors(self) -> list[np.ndarray]:
        _, vecs = self.operator.eigh()
        return [vecs[:, g] @ vecs[:, g].conj().T for g in self.eigen_partition]

    def group_bases(self) -> list[np.ndarray]:
        _, vecs = self.operator.eigh()
        return [vecs[:, g] for g in self.eigen_partition]

    def on_copies(self, n_copies: int) -> "PayoffFunction":
        """The total payoff ``sum_l W^{(l)}`` on ``n_copies`` copies."""
        total = sum(embed_site(self.operator, s, n_copies).matrix for s in range(n_copies))
        return PayoffFunction.from_operator(HermitianOperator(total, check=False), self.mu)


def payoff_operator(family: ChargeFamily, mu) -> PayoffFunction:
    mu = np.asarray(mu, dtype=float).ravel()
    if mu.shape != (len(family),):
        raise DimensionMismatch(f"expected {len(family)} weights, got {mu.size}")
    return PayoffFunction.from_operator(HermitianOperator(family.combination(mu), check=False), mu)


def _payoff_matrix(w) -> np.ndarray:
    return w.operator.matrix if isinstance(w, PayoffFunction) else as_matrix(w)


def average_work(rho_before, rho_after, w) -> float:
    """``Tr(rho_after W) - Tr(rho_before W)``: the payoff gained by the register holding these states."""
    a, b, m = as_matrix(rho_before), as_matrix(rho_after), _payoff_matrix(w)
    if not a.shape == b.shape == m.shape:
        raise DimensionMismatch(f"shapes {a.shape}, {b.shape} and payoff {m.shape} differ")
    return float(np.real(np.sum(b.T * m)) - np.real(np.sum(a.T * m)))


# --- free unitaries ------------------------------------------------------------------

def _check_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise NotUnitary(f"expected a square matrix, got shape {u.shape}")
    err = operator_norm(u.conj().T @ u - np.eye(u.shape[0]))
    if err > tol:
        raise NotUnitary(f"||U^dagger U - I|| = {err:.3g} exceeds {tol:g}")
    return u


class FreeUnitaryCheck(NamedTuple):
    ok: bool
    defects: np.ndarray


def is_free_unitary(u, totals: Sequence, tol: float = 1e-9) -> FreeUnitaryCheck:
    """Commutator norms ``||[U, Q_tot_j]||`` for every total charge (energy first)."""
    u = _check_unitary(as_matrix(u))
    defects = np.array([commutator_norm(u, q) for q in totals])
    for q in totals:
        if as_matrix(q).shape != u.shape:
            raise DimensionMismatch("total charge and unitary dimensions differ")
    return FreeUnitaryCheck(bool(np.all(defects <= tol)), defects)


def total_charges(family: ChargeFamily, n_copies: int) -> list[np.ndarray]:
    """``sum_l Q_j^{(l)}`` for every charge of the family on ``n_copies`` copies."""
    return [sum(embed_site(q, s, n_copies).matrix for s in range(n_copies)) for q in family]


class CommutantProjector:
    """Orthogonal (Hilbert-Schmidt) projection onto the operators commuting with ``totals``.

    Commuting totals are handled exactly by block-averaging over their joint
    eigenspaces.  Noncommuting totals use an orthonormal basis of the null
    space of ``G -> sum_j [Q_j, G]``, which limits the dimension to
    ``SUPEROPERATOR_DIM_LIMIT``.
    """

    def __init__(self, totals: Sequence, dim: int | None = None, seed: int = 0):
        mats = [as_matrix(q) for q in totals]
        if not mats:
            if dim is None:
                raise InvalidArgument("dim is required when no totals are given")
            self.dim, self.blocks, self.null_basis = dim, None, None
            return
        self.dim = mats[0].shape[0]
        commuting = all(commutator_norm(a, b) <= 1e-10 * max(1.0, operator_norm(a) * operator_norm(b))
                        for i, a in enumerate(mats) for b in mats[i + 1:])
        self.null_basis = None
        if commuting:
            self.blocks = _joint_blocks(mats)
        else:
            if self.dim > SUPEROPERATOR_DIM_LIMIT:
                raise DimensionOverflow(
                    f"commutant of noncommuting totals limited to dimension {SUPEROPERATOR_DIM_LIMIT}"
                )
            eye = np.eye(self.dim)
            # row-major vec: vec(QG - GQ) = (Q (x) I - I (x) Q^T) vec(G)
            stacked = np.vstack([np.kron(q, eye) - np.kron(eye, q.T) for q in mats])
            self.blocks = None
            self.null_basis = null_space(stacked, rcond=1e-10)

    def project(self, g: np.ndarray) -> np.ndarray:
        if self.blocks is None and self.null_basis is None:
            return g
        if self.blocks is not None:
            out = np.zeros_like(g, dtype=complex)
            for b in self.blocks:
                out += b @ (b.conj().T @ g @ b) @ b.conj().T
            return out
        nb = self.null_basis
        vec = nb @ (nb.conj().T @ g.reshape(-1))
        return vec.reshape(g.shape)


def _joint_blocks(mats: list[np.ndarray]) -> list[np.ndarray]:
    """Orthonormal bases of the joint eigenspaces of commuting Hermitian matrices."""
    dim = mats[0].shape[0]
    blocks = [np.eye(dim, dtype=complex)]
    for q in mats:
        refined = []
        for b in blocks:
            vals, vecs = hermitian_eigh(b.conj().T @ q @ b)
            scale = max(1.0, float(np.max(np.abs(vals), initial=0.0)))
            start = 0
            for i in range(1, len(vals) + 1):
                if i == len(vals) or vals[i] - vals[start] > 1e-9 * scale:
                    refined.append(b @ vecs[:, start:i])
                    start = i
        blocks = refined
    return blocks


def random_free_unitary(projector: CommutantProjector, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """``exp(i scale G)`` with ``G`` a random Hermitian matrix projected onto the commutant."""
    g = projector.project(random_hermitian(projector.dim, rng))
    g = 0.5 * (g + g.conj().T)
    return expm(1j * scale * g)


# --- reference frames ------------------------------------------------------------------

def reference_frame_unitary(u_s, group_elems: Sequence, reps: Sequence) -> np.ndarray:
    """``sum_k |k><k|_W (x) V_S(g_k) U V_S(g_k)^dagger`` on register (x) system.

    ``reps`` holds one system representation matrix per group element; an
    entry may also be a pair ``(V_W, V_S)`` whose register part is ignored
    here (the register basis is labelled by the elements themselves).
    """
    u = _check_unitary(as_matrix(u_s))
    if len(reps) != len(group_elems) or not group_elems:
        raise RepresentationMismatch("need exactly one representation matrix per group element")
    d, k = u.shape[0], len(group_elems)
    out = np.zeros((k * d, k * d), dtype=complex)
    for i, rep in enumerate(reps):
        v = rep[1] if isinstance(rep, (tuple, list)) and len(rep) == 2 else rep
        v = np.asarray(v, dtype=complex)
        if v.shape != u.shape:
            raise RepresentationMismatch(f"representation of shape {v.shape} for system of dimension {d}")
        if operator_norm(v.conj().T @ v - np.eye(d)) > 1e-9:
            raise RepresentationMismatch(f"representation matrix {i} is not unitary")
        out[i * d:(i + 1) * d, i * d:(i + 1) * d] = v @ u @ v.conj().T
    return out


def u1_covariance_defect(u_s, generator, k: int, n_offsets: int = 65) -> float:
    """Worst-case covariance defect of a ``k``-element discretized U(1) reference frame.

    With register states at phases ``2 pi m / k`` the lifted unitary is
    exactly covariant under the discrete subgroup.  A continuous rotation by
    ``phi`` is matched to the nearest register element, leaving a residual
    rotation ``|delta| <= pi / k`` on the system; the defect is
    ``max_delta ||V(delta) U V(delta)^dagger - U||`` with ``V = exp(-i delta generator)``.
    """
    if k < 1:
        raise InvalidArgument("k must be >= 1")
    u, gen = as_matrix(u_s), HermitianOperator(generator)
    vals, vecs = gen.eigh()
    worst = 0.0
    for delta in np.linspace(-math.pi / k, math.pi / k, n_offsets):
        v = (vecs * np.exp(-1j * delta * vals)) @ vecs.conj().T
        worst = max(worst, operator_norm(v @ u @ v.conj().T - u))
    return worst


# --- passivity -------------------------------------------------------------------------

class PassivityResult(NamedTuple):
    passive: bool
    witness: object  # (i, j) index pair, a commutator norm, or None


def passivity_check(rho, w: PayoffFunction) -> PassivityResult:
    """Passive iff ``[rho, W] = 0`` and populations do not increase with the payoff eigenvalue.

    A violating pair is reported as computational-basis indices ``(i, j)``
    of the dominant components of two joint eigenvectors, where ``i`` has
    the larger payoff eigenvalue yet the larger population.
    """
    r = as_matrix(rho)
    if r.shape != (w.dim, w.dim):
        raise DimensionMismatch("state and payoff dimensions differ")
    comm = commutator_norm(r, w.operator.matrix)
    if comm > PASSIVITY_TOL:
        return PassivityResult(False, comm)
    energies, pops, labels = [], [], []
    for value, basis in zip(w.group_values, w.group_bases()):
        p, vecs = hermitian_eigh(basis.conj().T @ r @ basis)
        full = basis @ vecs
        for col in range(full.shape[1]):
            energies.append(value)
            pops.append(p[col])
            labels.append(int(np.argmax(np.abs(full[:, col]))))
    energies, pops = np.array(energies), np.array(pops)
    best, witness = PASSIVITY_TOL, None
    for a in range(len(pops)):
        for b in range(len(pops)):
            if energies[a] > energies[b] and pops[a] - pops[b] > best:
                best, witness = pops[a] - pops[b], (labels[a], labels[b])
    return PassivityResult(witness is None, witness)


# --- Renyi divergences -----------------------------------------------------------------

def _classical_renyi_probs(p: np.ndarray, q: np.ndarray, alpha: float) -> float:
    if alpha < 0:
        raise AlphaOutOfRange("alpha must be non-negative")
    p = np.clip(p, 0.0, None)
    q = np.clip(q, 0.0, None)
    supp_p = p > PROB_ZERO_TOL
    if alpha == 1:
        if np.any(supp_p & (q <= PROB_ZERO_TOL)):
            return math.inf
        return float(np.sum(p[supp_p] * (np.log(p[supp_p]) - np.log(q[supp_p]))))
    if alpha == 0:
        mass = float(np.sum(q[supp_p]))
        return math.inf if mass <= 0 else -math.log(mass)
    if alpha > 1:
        if np.any(supp_p & (q <= PROB_ZERO_TOL)):
            return math.inf
        terms = p[supp_p] ** alpha * q[supp_p] ** (1 - alpha)
    else:
        both = supp_p & (q > PROB_ZERO_TOL)
        terms = p[both] ** alpha * q[both] ** (1 - alpha)
    total = float(np.sum(terms))
    if total <= 0:
        return math.inf
    return math.log(total) / (alpha - 1)


def pinched_probabilities(rho, w: PayoffFunction) -> np.ndarray:
    """Born probabilities of the payoff eigenvalue groups (pinching onto ``W`` eigenspaces)."""
    r = as_matrix(rho)
    return np.array([np.real(np.einsum("ik,ij,jk->", b.conj(), r, b)) for b in w.group_bases()])


def classical_renyi(rho, gamma, w: PayoffFunction, alpha: float) -> float:
    """Renyi divergence of the payoff-eigenvalue statistics of ``rho`` and ``gamma``.

    ``alpha = 1`` gives the relative entropy of the statistics, ``alpha = 0``
    gives ``-log sum_{p_k > 0} q_k``, and ``math.inf`` is returned where the
    divergence is infinite (for example ``q_k = 0 < p_k`` with ``alpha >= 1``).
    """
    return _classical_renyi_probs(pinched_probabilities(rho, w), pinched_probabilities(gamma, w), float(alpha))


PETZ_RANGE = (0.0, 2.0)
SANDWICHED_MIN = 0.5


def quantum_renyi(rho, gamma, alpha: float, variant: str = "petz") -> float:
    """Petz (``Tr rho^a gamma^(1-a)``) or sandwiched Renyi divergence; ``alpha = 1`` is the relative entropy."""
    alpha = float(alpha)
    r, g = as_matrix(rho), as_matrix(gamma)
    if r.shape != g.shape:
        raise DimensionMismatch("state shapes differ")
    if variant == "petz":
        if not PETZ_RANGE[0] <= alpha <= PETZ_RANGE[1]:
            raise AlphaOutOfRange(f"Petz variant requires alpha in [0, 2], got {alpha}")
    elif variant == "sandwiched":
        if alpha < SANDWICHED_MIN:
            raise AlphaOutOfRange(f"sandwiched variant requires alpha >= 1/2, got {alpha}")
    else:
        raise InvalidArgument(f"unknown variant {variant!r}")
    if alpha == 1:
        return relative_entropy(r, g)
    if variant == "petz":
        val = float(np.real(np.trace(matrix_power_h(r, alpha) @ matrix_power_h(g, 1 - alpha))))
    else:
        s = matrix_power_h(g, (1 - alpha) / (2 * alpha))
        val = float(np.real(np.trace(matrix_power_h(s @ r @ s, alpha))))
    if val <= 0:
        return math.inf
    return math.log(val) / (alpha - 1)


# --- free energies and second laws -----------------------------------------------------

VARIANTS = ("classical", "petz", "sandwiched")


def _temperature(mu) -> float:
    mu0 = float(np.asarray(mu, dtype=float)[0])
    if mu0 <= 0:
        raise InvalidArgument("a temperature needs mu_0 > 0")
    return 1.0 / mu0


def _valid(variant: str, alpha: float) -> bool:
    if variant == "petz":
        return PETZ_RANGE[0] <= alpha <= PETZ_RANGE[1]
    if variant == "sandwiched":
        return alpha >= SANDWICHED_MIN
    return alpha >= 0


@dataclass(frozen=True)
class FreeEnergyProfile:
    """``F_alpha = T D_alpha(rho || gamma) - T log Z`` per variant; ``nan`` outside a variant's range."""

    alpha_grid: np.ndarray
    values: dict
    temperature: float
    log_partition: float

    def __post_init__(self):
        a = self.alpha_grid
        if np.any(a < 0) or np.any(np.diff(a) <= 0):
            raise InvalidArgument("alpha grid must be ascending and non-negative")


def _divergence(variant, rho, gamma, w, alpha):
    if variant == "classical":
        return classical_renyi(rho, gamma, w, alpha)
    return quantum_renyi(rho, gamma, alpha, variant)


def free_energy_profile(rho, family: ChargeFamily, mu, alpha_grid) -> FreeEnergyProfile:
    grid = np.asarray(alpha_grid, dtype=float).ravel()
    temp = _temperature(mu)
    logz = log_partition(family, mu)
    gamma = build_nats(family, mu).matrix
    w = payoff_operator(family, mu)
    r = as_matrix(rho)
    values = {}
    for variant in VARIANTS:
        row = np.full(grid.shape, np.nan)
        for i, a in enumerate(grid):
            if _valid(variant, a):
                row[i] = temp * _divergence(variant, r, gamma, w, a) - temp * logz
        values[variant] = row
    return FreeEnergyProfile(grid, values, temp, logz)


def free_energy_decomposition(rho, family: ChargeFamily, mu) -> float:
    """``<H> - T S(rho) + sum_{j>=1} (mu_j / mu_0) <Q_j>``, the alpha = 1 free energy."""
    from .qops import von_neumann_entropy

    temp = _temperature(mu)
    mu = np.asarray(mu, dtype=float)
    r = as_matrix(rho)
    means = np.array([np.real(np.sum(r.T * q.matrix)) for q in family])
    return float(means[0] - temp * von_neumann_entropy(r) + np.sum(mu[1:] / mu[0] * means[1:]))


@dataclass(frozen=True)
class TransitionVerdict:
    """Outcome of comparing free energies before and after a proposed transition.

    ``margins[v]`` holds ``F_alpha(rho) - F_alpha(sigma)`` per grid point;
    a transition is ruled out where a margin is below ``-tol``.
    ``sufficient_per_theory`` is set when the classical conditions hold
    and ``sigma`` commutes with ``W``: the conditions are then also
    sufficient given a reference frame (a cited claim, not a constructed
    protocol).
    """

    allowed_necessary: bool
    violated_alphas: list
    margins: dict
    alpha_grid: np.ndarray
    quantum_violations: dict = field(default_factory=dict)
    sufficient_per_theory: bool = False

    def as_dict(self) -> dict:
        return {
            "allowed_necessary": self.allowed_necessary,
            "violated_alphas": list(self.violated_alphas),
            "quantum_violations": {k: list(v) for k, v in self.quantum_violations.items()},
            "sufficient_per_theory": self.sufficient_per_theory,
            "alpha_grid": self.alpha_grid.tolist(),
            "margins": {k: [None if not np.isfinite(x) else float(x) for x in v] for k, v in self.margins.items()},
        }


def _margin(a: float, b: float) -> float:
    if math.isinf(a) and math.isinf(b):
        return 0.0 if a == b else a - b
    return a - b


def second_laws_check(rho, sigma, family: ChargeFamily, mu, alpha_grid, *, tol: float = 1e-9) -> TransitionVerdict:
    """Necessary conditions ``F_alpha(rho) >= F_alpha(sigma)`` for a free transition ``rho -> sigma``.

    The classical monotones decide ``allowed_necessary``; Petz and
    sandwiched violations on their validity ranges are reported as extra
    necessary conditions.
    """
    grid = np.asarray(alpha_grid, dtype=float).ravel()
    before = free_energy_profile(rho, family, mu, grid)
    after = free_energy_profile(sigma, family, mu, grid)
    margins, violations = {}, {}
    for variant in VARIANTS:
        m = np.array([
            _margin(x, y) if not (np.isnan(x) or np.isnan(y)) else np.nan
            for x, y in zip(before.values[variant], after.values[variant])
        ])
        margins[variant] = m
        violations[variant] = [float(a) for a, x in zip(grid, m) if not np.isnan(x) and x < -tol]
    classical_violations = violations.pop("classical")
    w = payoff_operator(family, mu)
    commutes = commutator_norm(as_matrix(sigma), w.operator.matrix) <= PASSIVITY_TOL
    allowed = not classical_violations
    return TransitionVerdict(
        allowed_necessary=allowed,
        violated_alphas=classical_violations,
        margins=margins,
        alpha_grid=grid,
        quantum_violations=violations,
        sufficient_per_theory=allowed and commutes,
    )


def extractable_work_bound(rho, sigma, family: ChargeFamily, mu, alpha_grid) -> np.ndarray:
    """Classical ``F_alpha(rho) - F_alpha(sigma)`` per grid point: the most payoff a transition can deposit."""
    grid = np.asarray(alpha_grid, dtype=float).ravel()
    before = free_energy_profile(rho, family, mu, grid).values["classical"]
    after = free_energy_profile(sigma, family, mu, grid).values["classical"]
    return np.array([_margin(x, y) for x, y in zip(before, after)])


# --- searches and channel sampling -----------------------------------------------------

def work_extraction_search(
    rho,
    w_total: PayoffFunction,
    totals: Sequence = (),
    trials: int = 1000,
    seed: int = 0,
    *,
    scale: float = 1.0,
) -> float:
    """Best payoff ``Tr(rho W) - Tr(U rho U^dagger W)`` released by sampled unitaries.

    Unitaries are ``exp(i scale G)`` with random Hermitian ``G`` projected
    onto the commutant of ``totals`` (no restriction when ``totals`` is
    empty).  The result is a lower bound on the extractable payoff; the
    identity (zero work) is always among the candidates.
    """
    if trials < 1:
        raise InvalidArgument("trials must be >= 1")
    r = as_matrix(rho)
    m = _payoff_matrix(w_total)
    if r.shape != m.shape:
        raise DimensionMismatch("state and payoff dimensions differ")
    proj = CommutantProjector(totals, dim=r.shape[0], seed=seed)
    streams = [np.random.Generator(np.random.Philox(s)) for s in np.random.SeedSequence(seed).spawn(trials)]
    best = 0.0
    for rng in streams:
        u = random_free_unitary(proj, rng, scale)
        best = max(best, -average_work(r, u @ r @ u.conj().T, m))
    return float(best)


def apply_free_channel(rho, ancilla, u) -> np.ndarray:
    """``Tr_ancilla[U (rho (x) ancilla) U^dagger]`` with the system as the first factor."""
    r, a = as_matrix(rho), as_matrix(ancilla)
    joint = np.kron(r, a)
    out = u @ joint @ u.conj().T
    return partial_trace(out, [0], [r.shape[0], a.shape[0]])


class ChannelSampler:
    """Random free channels: append a thermal ancilla, apply a charge-conserving unitary, discard the ancilla."""

    def __init__(self, family: ChargeFamily, mu, seed: int = 0, scale: float = 1.0):
        self.family = family
        self.gamma = build_nats(family, mu).matrix
        self.projector = CommutantProjector(total_charges(family, 2))
        self.seed = seed
        self.scale = scale

    def unitaries(self, count: int) -> Iterator[np.ndarray]:
        children = np.random.SeedSequence(self.seed).spawn(count)
        for child in children:
            yield random_free_unitary(self.projector, np.random.Generator(np.random.Philox(child)), self.scale)

    def apply(self, rho, u) -> np.ndarray:
        return _as_array(apply_free_channel(rho, self.gamma, u))


def _as_array(x) -> np.ndarray:
    return x.matrix if hasattr(x, "matrix") else np.asarray(x)


def nats_preservation_check(family: ChargeFamily, mu, channel_samples: int = 200, seed: int = 0) -> float:
    """Largest trace distance between ``gamma`` and its image under sampled free channels."""
    if channel_samples < 1:
        raise InvalidArgument("channel_samples must be >= 1")
    sampler = ChannelSampler(family, mu, seed)
    worst = 0.0
    for u in sampler.unitaries(channel_samples):
        worst = max(worst, trace_distance(sampler.apply(sampler.gamma, u), sampler.gamma))
    return worst


def thermal_product(family: ChargeFamily, mu, n_copies: int) -> DensityMatrix:
    """``gamma^{(x) n}``."""
    from .qops import kron_all

    g = build_nats(family, mu).matrix
    return DensityMatrix(kron_all([g] * n_copies), check=False)
