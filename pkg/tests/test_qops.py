import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from natslab.errors import (
    DimensionMismatch,
    DimensionOverflow,
    IndexOutOfRange,
    InvalidArgument,
    InvalidState,
    NotHermitian,
)
from natslab.qops import (
    ChargeFamily,
    DensityMatrix,
    HermitianOperator,
    SpectralWindow,
    apply_spectral_function,
    dim_cap,
    embed_site,
    expm_h,
    kron_all,
    load_operator,
    logm_h,
    operator_from_dict,
    operator_to_dict,
    partial_trace,
    ramp,
    random_density_matrix,
    random_hermitian,
    reduced_site_states,
    relative_entropy,
    save_operator,
    spin_operators,
    trace_distance,
    von_neumann_entropy,
)


def brute_partial_trace(rho, dims, keep):
    """Explicit index contraction, one matrix element at a time."""
    n = len(dims)
    d_keep = dims[keep]
    out = np.zeros((d_keep, d_keep), dtype=complex)
    others = [range(dims[k]) for k in range(n) if k != keep]

    def flat(idx):
        f = 0
        for k in range(n):
            f = f * dims[k] + idx[k]
        return f

    for a in range(d_keep):
        for b in range(d_keep):
            total = 0
            for rest in itertools.product(*others):
                ia = list(rest)
                ib = list(rest)
                ia.insert(keep, a)
                ib.insert(keep, b)
                total += rho[flat(ia), flat(ib)]
            out[a, b] = total
    return out


class TestHermitianOperator:
    def test_symmetrizes_small_noise(self):
        m = np.array([[1.0, 2.0 + 1e-12j], [2.0, -1.0]])
        op = HermitianOperator(m)
        assert np.allclose(op.matrix, op.matrix.conj().T, atol=0)

    def test_rejects_non_hermitian(self):
        with pytest.raises(NotHermitian):
            HermitianOperator(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_rejects_non_square(self):
        with pytest.raises(InvalidArgument):
            HermitianOperator(np.zeros((2, 3)))

    def test_spectrum_reconstructs(self, rng):
        op = HermitianOperator(random_hermitian(6, rng))
        vals, vecs = op.eigh()
        assert np.all(np.diff(vals) >= 0)
        assert np.linalg.norm((vecs * vals) @ vecs.conj().T - op.matrix) <= 1e-10

    def test_eigenvectors_phase_fixed(self, rng):
        op = HermitianOperator(random_hermitian(5, rng))
        _, vecs = op.eigh()
        for k in range(5):
            first = vecs[np.argmax(np.abs(vecs[:, k]) > 1e-10 * np.abs(vecs[:, k]).max()), k]
            assert abs(first.imag) < 1e-14 and first.real > 0

    def test_matrix_is_read_only(self):
        op = HermitianOperator(np.eye(2))
        with pytest.raises(ValueError):
            op.matrix[0, 0] = 5

    def test_norm_and_diameter(self):
        op = HermitianOperator(np.diag([-3.0, 1.0, 2.0]))
        assert op.norm == 3.0
        assert op.spectral_diameter == 5.0


class TestDensityMatrix:
    def test_trace_checked(self):
        with pytest.raises(InvalidState):
            DensityMatrix(np.diag([0.5, 0.6]))

    def test_positivity_checked(self):
        with pytest.raises(InvalidState):
            DensityMatrix(np.diag([1.2, -0.2]))

    def test_from_vector_normalizes(self):
        rho = DensityMatrix.from_vector([3.0, 4.0j])
        assert np.allclose(rho.matrix, np.array([[9, -12j], [12j, 16]]) / 25)


class TestChargeFamily:
    def test_linear_dependence_rejected(self):
        z = np.diag([0.5, -0.5])
        with pytest.raises(InvalidArgument):
            ChargeFamily([z, 2 * z + np.eye(2)])

    def test_identity_rejected(self):
        with pytest.raises(InvalidArgument):
            ChargeFamily([np.eye(2)])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            ChargeFamily([np.diag([1.0, 0.0]), np.diag([1.0, 0.0, 0.0])])

    def test_spin_family_commutation(self):
        jx, jy, jz = spin_operators(1.0)
        assert np.allclose(jx @ jy - jy @ jx, 1j * jz)
        assert np.allclose(jx @ jx + jy @ jy + jz @ jz, 2 * np.eye(3))


class TestEmbedAndTrace:
    def test_embed_identity_embedding(self):
        q = np.diag([1.0, -2.0])
        assert np.allclose(embed_site(q, 0, 1).matrix, q)

    def test_embed_second_site(self):
        out = embed_site(np.diag([0.5, -0.5]), 1, 2).matrix
        assert np.allclose(out, 0.5 * np.diag([1, -1, 1, -1]))

    def test_embed_site_out_of_range(self):
        with pytest.raises(IndexOutOfRange):
            embed_site(np.eye(2), 2, 2)

    def test_embed_overflow(self, monkeypatch):
        monkeypatch.setenv("NATSLAB_DIM_CAP", "16")
        assert dim_cap() == 16
        with pytest.raises(DimensionOverflow):
            embed_site(np.diag([1.0, 0.0]), 0, 5)

    def test_partial_trace_of_product(self, rng):
        a = random_density_matrix(2, rng).matrix
        b = random_density_matrix(3, rng).matrix
        assert np.allclose(partial_trace(np.kron(a, b), 0, [2, 3]), a)
        assert np.allclose(partial_trace(np.kron(a, b), 1, [2, 3]), b)

    def test_partial_trace_bell(self):
        psi = np.array([1, 0, 0, 1]) / math.sqrt(2)
        assert np.allclose(partial_trace(np.outer(psi, psi), 0, 2), np.eye(2) / 2)

    @pytest.mark.parametrize("keep", [0, 1, 2])
    def test_partial_trace_matches_index_contraction(self, rng, keep):
        rho = random_density_matrix(8, rng).matrix
        assert np.allclose(partial_trace(rho, keep, 2), brute_partial_trace(rho, [2, 2, 2], keep), atol=1e-14)

    def test_partial_trace_bad_index(self):
        with pytest.raises(IndexOutOfRange):
            partial_trace(np.eye(4) / 4, 2, 2)

    def test_partial_trace_preserves_state(self, rng):
        for _ in range(1000):
            rho = random_density_matrix(8, rng, rank=int(rng.integers(1, 9))).matrix
            red = partial_trace(rho, int(rng.integers(0, 3)), 2)
            assert abs(np.trace(red) - 1) < 1e-12
            assert np.linalg.eigvalsh(red)[0] >= -1e-10

    def test_reduced_site_states_match_partial_trace(self, rng):
        vecs = np.linalg.qr(rng.normal(size=(8, 3)) + 1j * rng.normal(size=(8, 3)))[0]
        flat = vecs @ vecs.conj().T / 3
        for site, red in enumerate(reduced_site_states(vecs, 2)):
            assert np.allclose(red, partial_trace(flat, site, 2))


class TestSpectralCalculus:
    def test_identity_function(self, rng):
        h = random_hermitian(4, rng)
        assert np.allclose(apply_spectral_function(h, lambda x: x).matrix, h)

    def test_exp_diag(self):
        out = apply_spectral_function(np.diag([0.0, math.log(2)]), np.exp).matrix
        assert np.allclose(out, np.diag([1.0, 2.0]))

    def test_ramp_on_diagonal(self):
        vals = np.array([-0.5, -0.25, -0.15, 0.0, 0.1, 0.2, 0.3])
        f = ramp(0.1, 0.3)
        out = apply_spectral_function(np.diag(vals), f).matrix
        expected = [0.0, 0.25, 0.75, 1.0, 1.0, 0.5, 0.0]
        assert np.allclose(np.diag(out).real, expected)

    def test_ramp_requires_order(self):
        with pytest.raises(InvalidArgument):
            ramp(0.3, 0.1)

    def test_log_inverts_exp(self, rng):
        for _ in range(20):
            h = random_hermitian(5, rng, scale=0.5)
            assert np.linalg.norm(logm_h(expm_h(h)) - h, 2) <= 1e-9


class TestEntropies:
    def test_pure_state_entropy(self):
        assert von_neumann_entropy(DensityMatrix.from_vector([1, 1j])) == pytest.approx(0, abs=1e-15)

    def test_maximally_mixed_entropy(self):
        assert von_neumann_entropy(np.eye(5) / 5) == pytest.approx(math.log(5), abs=1e-14)

    def test_diagonal_entropy(self):
        expected = -0.25 * math.log(0.25) - 0.75 * math.log(0.75)
        assert von_neumann_entropy(np.diag([0.25, 0.75])) == pytest.approx(expected, abs=1e-15)

    def test_relative_entropy_self(self, rng):
        rho = random_density_matrix(3, rng)
        assert relative_entropy(rho, rho) == pytest.approx(0, abs=1e-12)

    def test_relative_entropy_pure_vs_mixed(self):
        assert relative_entropy(np.diag([1.0, 0.0]), np.eye(2) / 2) == pytest.approx(math.log(2), abs=1e-14)

    def test_relative_entropy_disjoint(self):
        assert relative_entropy(np.diag([1.0, 0.0]), np.diag([0.0, 1.0])) == math.inf

    def test_relative_entropy_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            relative_entropy(np.eye(2) / 2, np.eye(3) / 3)

    def test_trace_distance_values(self):
        assert trace_distance(np.diag([0.6, 0.4]), np.eye(2) / 2) == pytest.approx(0.2, abs=1e-15)
        assert trace_distance(np.diag([1.0, 0.0]), np.diag([0.0, 1.0])) == pytest.approx(2.0)

    def test_subadditivity(self, rng):
        for _ in range(200):
            rho = random_density_matrix(6, rng, rank=int(rng.integers(1, 7))).matrix
            s_ab = von_neumann_entropy(rho)
            s_a = von_neumann_entropy(partial_trace(rho, 0, [2, 3]))
            s_b = von_neumann_entropy(partial_trace(rho, 1, [2, 3]))
            assert s_ab <= s_a + s_b + 1e-9

    def test_data_processing_under_partial_trace(self, rng):
        for _ in range(200):
            rho = random_density_matrix(4, rng).matrix
            sig = random_density_matrix(4, rng).matrix
            lhs = relative_entropy(rho, sig)
            rhs = relative_entropy(partial_trace(rho, 0, 2), partial_trace(sig, 0, 2))
            assert lhs >= rhs - 1e-9


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=2, max_value=5), st.integers(min_value=0, max_value=2**32 - 1))
def test_pinsker_property(dim, seed):
    rng = np.random.default_rng(seed)
    rho = random_density_matrix(dim, rng)
    sig = random_density_matrix(dim, rng)
    assert relative_entropy(rho, sig) >= 0.5 * trace_distance(rho, sig) ** 2 - 1e-10


class TestSpectralWindow:
    def test_contains_closed(self):
        w = SpectralWindow(0.0, 0.5)
        assert list(w.contains([-0.5, 0.5, 0.6])) == [True, True, False]

    def test_negative_width(self):
        with pytest.raises(InvalidArgument):
            SpectralWindow(0.0, -1.0)


class TestOperatorFiles:
    def test_round_trip(self, rng, tmp_path):
        op = HermitianOperator(random_hermitian(4, rng))
        path = tmp_path / "q.json"
        save_operator(op, path)
        assert np.allclose(load_operator(path).matrix, op.matrix)

    def test_lower_triangle_rejected(self):
        with pytest.raises(InvalidArgument):
            operator_from_dict({"dim": 2, "entries": [[1, 0, 1.0, 0.0]]})

    def test_complex_diagonal_rejected(self):
        with pytest.raises(NotHermitian):
            operator_from_dict({"dim": 2, "entries": [[0, 0, 1.0, 0.5]]})

    def test_upper_triangle_listing(self):
        data = operator_to_dict(np.array([[1, 2 - 1j], [2 + 1j, 0]]))
        assert data == {"dim": 2, "entries": [[0, 0, 1.0, 0.0], [0, 1, 2.0, -1.0]]}

    def test_density_loader_validates(self, tmp_path):
        path = tmp_path / "rho.json"
        save_operator(np.diag([0.7, 0.7]), path)
        with pytest.raises(InvalidState):
            load_operator(path, cls=DensityMatrix)


def test_kron_all_matches_numpy():
    a, b, c = np.diag([1, 2]), np.array([[0, 1], [1, 0]]), np.eye(2)
    assert np.allclose(kron_all([a, b, c]), np.kron(np.kron(a, b), c))
