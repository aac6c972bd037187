"""Dense Hermitian-operator kernel.

Operators live on small Hilbert spaces (at most ``dim_cap()`` dimensions) and
are stored as dense complex matrices.  The module provides the two value
types used everywhere else, :class:`HermitianOperator` and
:class:`DensityMatrix`, together with tensor embedding, partial traces,
spectral calculus, entropies and distances.  All logarithms are natural.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from functools import reduce
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    DimensionOverflow,
    IndexOutOfRange,
    InvalidArgument,
    InvalidState,
    NotHermitian,
)

DEFAULT_DIM_CAP = 4096

HERMITIAN_REJECT_TOL = 1e-8
TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-10
LOG_CLIP = 1e-300
SUPPORT_WEIGHT_TOL = 1e-9


def dim_cap() -> int:
    """Largest dense dimension allowed; ``NATSLAB_DIM_CAP`` overrides the default."""
    raw = os.environ.get("NATSLAB_DIM_CAP")
    if raw is None:
        return DEFAULT_DIM_CAP
    try:
        cap = int(raw)
    except ValueError as exc:
        raise InvalidArgument(f"NATSLAB_DIM_CAP must be an integer, got {raw!r}") from exc
    if cap < 1:
        raise InvalidArgument("NATSLAB_DIM_CAP must be positive")
    return cap


def check_dim(dim: int) -> None:
    cap = dim_cap()
    if dim > cap:
        raise DimensionOverflow(f"dimension {dim} exceeds cap {cap} (set NATSLAB_DIM_CAP to raise it)")


def _phase_fix(vecs: np.ndarray) -> np.ndarray:
    # first non-negligible component of each column made real positive
    out = np.array(vecs, dtype=complex)
    mags = np.abs(out)
    thresh = 1e-10 * mags.max(axis=0, initial=0.0)
    for k in range(out.shape[1]):
        idx = int(np.argmax(mags[:, k] > thresh[k]))
        c = out[idx, k]
        if abs(c) > 0:
            out[:, k] *= abs(c) / c
    return out


def hermitian_eigh(mat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and phase-fixed orthonormal eigenvectors."""
    vals, vecs = np.linalg.eigh(mat)
    return vals, _phase_fix(vecs)


class HermitianOperator:
    """Immutable dense self-adjoint matrix with lazily cached spectrum.

    Input is symmetrized as ``(A + A^dagger)/2``.  An anti-Hermitian part
    larger than ``HERMITIAN_REJECT_TOL`` (operator norm) is rejected.
    """

    __slots__ = ("_matrix", "_spectrum")

    def __init__(self, entries, *, check: bool = True):
        if isinstance(entries, HermitianOperator):
            entries = entries.matrix
        m = np.array(entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise InvalidArgument(f"expected a non-empty square matrix, got shape {m.shape}")
        if check:
            anti = 0.5 * (m - m.conj().T)
            if anti.size and np.linalg.norm(anti, 2) > HERMITIAN_REJECT_TOL * max(1.0, np.linalg.norm(m, 2)):
                raise NotHermitian("matrix has a significant anti-Hermitian part")
        m = 0.5 * (m + m.conj().T)
        m.setflags(write=False)
        self._matrix = m
        self._spectrum = None

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def dim(self) -> int:
        return self._matrix.shape[0]

    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        if self._spectrum is None:
            vals, vecs = hermitian_eigh(self._matrix)
            vals.setflags(write=False)
            vecs.setflags(write=False)
            self._spectrum = (vals, vecs)
        return self._spectrum

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.eigh()[0]

    @property
    def spectral_diameter(self) -> float:
        vals = self.eigenvalues
        return float(vals[-1] - vals[0])

    @property
    def norm(self) -> float:
        """Operator (spectral) norm."""
        vals = self.eigenvalues
        return float(max(abs(vals[0]), abs(vals[-1])))

    def expectation(self, rho) -> float:
        return float(np.real(np.trace(as_matrix(rho) @ self._matrix)))

    def __add__(self, other):
        return HermitianOperator(self._matrix + as_matrix(other), check=False)

    def __sub__(self, other):
        return HermitianOperator(self._matrix - as_matrix(other), check=False)

    def __mul__(self, scalar: float):
        if np.iscomplexobj(scalar) and np.imag(scalar) != 0:
            raise InvalidArgument("Hermitian operators only scale by real numbers")
        return HermitianOperator(float(np.real(scalar)) * self._matrix, check=False)

    __rmul__ = __mul__

    def __neg__(self):
        return HermitianOperator(-self._matrix, check=False)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self._matrix, dtype=dtype)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(dim={self.dim})"


class DensityMatrix(HermitianOperator):
    """Positive semidefinite, unit-trace Hermitian operator."""

    __slots__ = ()

    def __init__(self, entries, *, check: bool = True):
        super().__init__(entries, check=check)
        if check:
            tr = float(np.real(np.trace(self._matrix)))
            if abs(tr - 1.0) > TRACE_TOL:
                raise InvalidState(f"trace {tr!r} differs from 1")
            if self.eigenvalues[0] < -POSITIVITY_TOL:
                raise InvalidState(f"negative eigenvalue {self.eigenvalues[0]:.3e}")

    @classmethod
    def from_vector(cls, psi) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex).ravel()
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim) / dim)

    @property
    def probabilities(self) -> np.ndarray:
        return np.clip(self.eigenvalues, 0.0, 1.0)


def as_matrix(x) -> np.ndarray:
    if isinstance(x, HermitianOperator):
        return x.matrix
    return np.asarray(x, dtype=complex)


def _as_herm(x) -> HermitianOperator:
    return x if isinstance(x, HermitianOperator) else HermitianOperator(x)


def _as_state(x) -> DensityMatrix:
    return x if isinstance(x, DensityMatrix) else DensityMatrix(x)


@dataclass(frozen=True)
class SpectralWindow:
    """Closed interval ``[center - half_width, center + half_width]``."""

    center: float
    half_width: float

    def __post_init__(self):
        if not self.half_width >= 0:
            raise InvalidArgument("window half_width must be non-negative")

    def contains(self, values, slack: float = 0.0) -> np.ndarray:
        return np.abs(np.asarray(values) - self.center) <= self.half_width + slack


class ChargeFamily:
    """Ordered conserved charges on one site; index 0 is the Hamiltonian.

    The charges together with the identity must be linearly independent:
    the Hilbert-Schmidt Gram matrix of their traceless parts needs a
    smallest singular value above ``1e-9``.
    """

    def __init__(self, charges: Sequence, labels: Sequence[str] | None = None):
        ops = [_as_herm(q) for q in charges]
        if not ops:
            raise InvalidArgument("a charge family needs at least one charge")
        d = ops[0].dim
        if any(q.dim != d for q in ops):
            raise DimensionMismatch("all charges must act on the same site dimension")
        if labels is None:
            labels = [f"Q{j}" for j in range(len(ops))]
        labels = [str(s) for s in labels]
        if len(labels) != len(ops):
            raise InvalidArgument("one label per charge is required")
        traceless = [q.matrix - np.trace(q.matrix) / d * np.eye(d) for q in ops]
        gram = np.array([[np.real(np.trace(a @ b)) for b in traceless] for a in traceless])
        smin = np.linalg.svd(gram, compute_uv=False)[-1]
        if smin <= 1e-9:
            raise InvalidArgument(
                f"charges plus identity are linearly dependent (Gram singular value {smin:.2e})"
            )
        self.charges: tuple[HermitianOperator, ...] = tuple(ops)
        self.labels: tuple[str, ...] = tuple(labels)
        self.site_dim = d

    def __len__(self) -> int:
        return len(self.charges)

    def __iter__(self):
        return iter(self.charges)

    def __getitem__(self, j):
        return self.charges[j]

    @property
    def c(self) -> int:
        """Number of charges besides the Hamiltonian."""
        return len(self.charges) - 1

    def combination(self, weights) -> np.ndarray:
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (len(self),):
            raise DimensionMismatch(f"expected {len(self)} coefficients, got {weights.shape}")
        return sum(w * q.matrix for w, q in zip(weights, self.charges))

    def is_commuting(self, tol: float = 1e-10) -> bool:
        return all(
            commutator_norm(a, b) <= tol
            for i, a in enumerate(self.charges)
            for b in self.charges[i + 1:]
        )

    def total(self, n: int) -> "ChargeFamily":
        """Family of total charges ``sum_l Q_j^(l)`` on ``n`` copies."""
        return ChargeFamily(
            [sum(embed_site(q, s, n).matrix for s in range(n)) for q in self.charges],
            labels=[f"{lab}_tot" for lab in self.labels],
        )


# --- standard single-site operators -----------------------------------------

def spin_operators(spin: float = 0.5) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Spin matrices ``(J_x, J_y, J_z)`` for spin quantum number ``spin`` (hbar = 1).

    The basis is ordered by decreasing ``m``, so ``J_z = diag(s, ..., -s)``.
    """
    two_s = round(2 * spin)
    if two_s < 1 or abs(two_s - 2 * spin) > 1e-12:
        raise InvalidArgument("spin must be a positive half-integer")
    m = spin - np.arange(two_s + 1)
    jp = np.zeros((two_s + 1, two_s + 1), dtype=complex)
    for k in range(1, two_s + 1):
        jp[k - 1, k] = math.sqrt(spin * (spin + 1) - m[k] * (m[k] + 1))
    jx = 0.5 * (jp + jp.conj().T)
    jy = -0.5j * (jp - jp.conj().T)
    jz = np.diag(m).astype(complex)
    return jx, jy, jz


def spin_family(spin: float = 0.5) -> ChargeFamily:
    jx, jy, jz = spin_operators(spin)
    return ChargeFamily([jx, jy, jz], labels=["Jx", "Jy", "Jz"])


def kron_all(mats: Iterable) -> np.ndarray:
    return reduce(np.kron, [as_matrix(m) for m in mats])


# --- composition across tensor factors --------------------------------------

def embed_site(q, site: int, n_copies: int) -> HermitianOperator:
    """``I^{(site)} (x) Q (x) I^{(n_copies - 1 - site)}``."""
    q = _as_herm(q)
    if n_copies < 1:
        raise InvalidArgument("n_copies must be at least 1")
    if not 0 <= site < n_copies:
        raise IndexOutOfRange(f"site {site} outside 0..{n_copies - 1}")
    d = q.dim
    check_dim(d**n_copies)
    left = np.eye(d**site)
    right = np.eye(d ** (n_copies - 1 - site))
    return HermitianOperator(np.kron(np.kron(left, q.matrix), right), check=False)


def _normalize_dims(total: int, dims) -> tuple[int, ...]:
    if np.isscalar(dims):
        d = int(dims)
        n = round(math.log(total) / math.log(d)) if d > 1 else 0
        if d < 2 or d**n != total:
            raise DimensionMismatch(f"dimension {total} is not a power of site dimension {d}")
        return (d,) * n
    dims = tuple(int(x) for x in dims)
    if math.prod(dims) != total:
        raise DimensionMismatch(f"subsystem dimensions {dims} do not multiply to {total}")
    return dims


def partial_trace(rho, keep, dims) -> np.ndarray | DensityMatrix:
    """Reduced operator on the subsystems listed in ``keep``.

    ``dims`` is either the common site dimension or a sequence of subsystem
    dimensions.  A :class:`DensityMatrix` input yields a :class:`DensityMatrix`;
    raw arrays are returned as arrays.
    """
    m = as_matrix(rho)
    dims = _normalize_dims(m.shape[0], dims)
    n = len(dims)
    keep_list = [keep] if np.isscalar(keep) else list(keep)
    for k in keep_list:
        if not 0 <= int(k) < n:
            raise IndexOutOfRange(f"subsystem {k} outside 0..{n - 1}")
    keep_list = sorted(int(k) for k in keep_list)
    drop = [i for i in range(n) if i not in keep_list]
    t = m.reshape(dims + dims)
    perm = keep_list + drop
    t = t.transpose(perm + [n + i for i in perm])
    dk = math.prod(dims[i] for i in keep_list)
    dd = math.prod(dims[i] for i in drop)
    out = np.einsum("aibi->ab", t.reshape(dk, dd, dk, dd))
    if isinstance(rho, DensityMatrix):
        return DensityMatrix(out, check=False)
    return out


def reduced_site_states(vectors: np.ndarray, site_dim: int, weights=None) -> list[np.ndarray]:
    """Single-site reductions of ``sum_k w_k |v_k><v_k|`` for every site.

    ``vectors`` holds states as columns (shape ``(d**N, m)``).  Uniform
    weights ``1/m`` are used when ``weights`` is None, which gives the
    reductions of the flat state on the span of orthonormal columns.
    """
    v = np.asarray(vectors, dtype=complex)
    if v.ndim == 1:
        v = v[:, None]
    dims = _normalize_dims(v.shape[0], site_dim)
    n, m = len(dims), v.shape[1]
    w = np.full(m, 1.0 / m) if weights is None else np.asarray(weights, dtype=float)
    v = v * np.sqrt(w)[None, :]
    out = []
    for site in range(n):
        t = v.reshape(site_dim**site, site_dim, site_dim ** (n - site - 1), m)
        out.append(np.einsum("aibk,ajbk->ij", t, t.conj()))
    return out


# --- spectral calculus --------------------------------------------------------

def apply_spectral_function(h, f: Callable[[np.ndarray], np.ndarray]) -> HermitianOperator:
    """``f`` applied to the eigenvalues of ``h`` in its own eigenbasis."""
    h = _as_herm(h)
    vals, vecs = h.eigh()
    fv = np.asarray(f(vals), dtype=float)
    return HermitianOperator((vecs * fv) @ vecs.conj().T, check=False)


def ramp(eta0: float, eta1: float) -> Callable[[np.ndarray], np.ndarray]:
    """Piecewise-linear plateau: 1 on ``[-eta0, eta0]``, 0 outside ``[-eta1, eta1]``."""
    if not eta1 > eta0 >= 0:
        raise InvalidArgument("ramp requires eta1 > eta0 >= 0")

    def f(x):
        return np.clip((eta1 - np.abs(x)) / (eta1 - eta0), 0.0, 1.0)

    return f


def expm_h(h) -> np.ndarray:
    return apply_spectral_function(h, np.exp).matrix


def logm_h(h) -> np.ndarray:
    """Matrix logarithm of a positive operator with spectrum clipped at ``LOG_CLIP``."""
    return apply_spectral_function(h, lambda x: np.log(np.clip(x, LOG_CLIP, None))).matrix


def matrix_power_h(h, p: float) -> np.ndarray:
    """``h**p`` for positive semidefinite ``h``; zero eigenvalues map to zero for ``p > 0``."""
    def f(x):
        x = np.clip(x, 0.0, None)
        if p == 0:
            return (x > _support_tol(x)).astype(float)
        with np.errstate(divide="ignore"):
            return np.where(x > _support_tol(x), x**p, 0.0)

    return apply_spectral_function(h, f).matrix


def _support_tol(vals: np.ndarray) -> float:
    top = float(np.max(np.abs(vals), initial=0.0))
    return max(len(vals), 1) * np.finfo(float).eps * max(top, 1.0)


def operator_norm(a) -> float:
    return float(np.linalg.norm(as_matrix(a), 2))


def commutator_norm(a, b) -> float:
    a, b = as_matrix(a), as_matrix(b)
    return operator_norm(a @ b - b @ a)


# --- entropies and distances --------------------------------------------------

def _same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionMismatch(f"operator shapes differ: {a.shape} vs {b.shape}")


def shannon_entropy(p) -> float:
    p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


def von_neumann_entropy(rho) -> float:
    """``-Tr rho log rho`` in nats, with ``0 log 0 = 0``."""
    vals = _as_herm(rho).eigenvalues
    return shannon_entropy(vals)


def relative_entropy(rho, gamma) -> float:
    """``Tr rho log rho - Tr rho log gamma``; ``math.inf`` if supp(rho) is not in supp(gamma)."""
    r, g = _as_herm(rho), _as_herm(gamma)
    _same_dim(r.matrix, g.matrix)
    gvals, gvecs = g.eigh()
    null = gvals <= _support_tol(gvals)
    if np.any(null):
        proj = gvecs[:, null]
        weight = float(np.real(np.einsum("ik,ij,jk->", proj.conj(), r.matrix, proj)))
        if weight > SUPPORT_WEIGHT_TOL:
            return math.inf
    rvals = np.clip(r.eigenvalues, 0.0, 1.0)
    nz = rvals[rvals > 0]
    neg_entropy = float(np.sum(nz * np.log(nz)))
    # Tr(rho log gamma) evaluated in gamma's eigenbasis
    diag = np.real(np.einsum("ik,ij,jk->k", gvecs.conj(), r.matrix, gvecs))
    cross = float(np.sum(diag * np.log(np.clip(gvals, LOG_CLIP, None))))
    return neg_entropy - cross


def trace_distance(rho, sigma) -> float:
    """Trace norm ``||rho - sigma||_1`` (no factor 1/2), in ``[0, 2]`` for states."""
    a, b = as_matrix(rho), as_matrix(sigma)
    _same_dim(a, b)
    diff = a - b
    return float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T)))))


def fidelity_overlap(psi, phi) -> float:
    return float(abs(np.vdot(psi, phi)) ** 2)


# --- random instances ---------------------------------------------------------

def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * 0.5 * (a + a.conj().T)


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    """Hilbert-Schmidt (``rank=None``) or induced-measure random state."""
    k = dim if rank is None else rank
    g = rng.normal(size=(dim, k)) + 1j * rng.normal(size=(dim, k))
    m = g @ g.conj().T
    return DensityMatrix(m / np.real(np.trace(m)))


def random_pure_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


# --- JSON operator files ------------------------------------------------------

def operator_to_dict(op) -> dict:
    """Upper-triangle listing ``{"dim": d, "entries": [[row, col, re, im], ...]}``."""
    m = as_matrix(op)
    d = m.shape[0]
    entries = []
    for i in range(d):
        for j in range(i, d):
            z = m[i, j]
            if z != 0:
                entries.append([i, j, float(z.real), float(z.imag)])
    return {"dim": d, "entries": entries}


def operator_from_dict(data: dict, cls=HermitianOperator):
    try:
        d = int(data["dim"])
        rows = data["entries"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidArgument("operator file needs integer 'dim' and list 'entries'") from exc
    if d < 1:
        raise InvalidArgument("operator dimension must be positive")
    m = np.zeros((d, d), dtype=complex)
    for item in rows:
        if len(item) != 4:
            raise InvalidArgument(f"entry {item!r} is not [row, col, re, im]")
        i, j, re, im = int(item[0]), int(item[1]), float(item[2]), float(item[3])
        if not (0 <= i < d and 0 <= j < d):
            raise InvalidArgument(f"entry index ({i}, {j}) outside dimension {d}")
        if i > j:
            raise InvalidArgument(f"entry ({i}, {j}) is below the diagonal; list the upper triangle only")
        if i == j and abs(im) > HERMITIAN_REJECT_TOL:
            raise NotHermitian(f"diagonal entry ({i}, {i}) has imaginary part {im}")
        m[i, j] = complex(re, 0.0 if i == j else im)
        m[j, i] = np.conj(m[i, j])
    return cls(m)


def load_operator(path, cls=HermitianOperator):
    with open(path, encoding="utf-8") as fh:
        return operator_from_dict(json.load(fh), cls=cls)


def save_operator(op, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(operator_to_dict(op), fh, indent=1)
        fh.write("\n")
