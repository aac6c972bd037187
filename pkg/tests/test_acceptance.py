"""End-to-end acceptance criteria 1-10.

Each test prints one ``ACCEPTANCE <n>: PASS|FAIL ...`` line (also visible
under pytest's output capture) and then asserts the criterion.
"""

import math
import time
import warnings

import numpy as np
import pytest
from scipy.stats import binom

from natslab.microcanonical import (
    averaged_family,
    build_amc,
    commuting_approximants,
    condition1_defect,
    condition2_defect,
    hoeffding_check,
    theorem1_report,
)
from natslab.nats import build_nats, expectations, fit_potentials
from natslab.qops import (
    ChargeFamily,
    HermitianOperator,
    commutator_norm,
    random_density_matrix,
    random_hermitian,
    relative_entropy,
    spin_family,
    trace_distance,
)
from natslab.resource import (
    ChannelSampler,
    classical_renyi,
    free_energy_decomposition,
    free_energy_profile,
    payoff_operator,
    quantum_renyi,
    thermal_product,
    work_extraction_search,
)
from natslab.typicality import typicality_trial

pytestmark = pytest.mark.acceptance


@pytest.fixture
def report(capsys):
    def _report(number: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\nACCEPTANCE {number}: {'PASS' if ok else 'FAIL'} - {detail}")

    return _report


def qubit_number():
    return ChargeFamily([HermitianOperator(np.diag([0.0, 1.0]))], labels=["n"])


def qutrit_projectors():
    return ChargeFamily(
        [HermitianOperator(np.diag([1.0, 0.0, 0.0])), HermitianOperator(np.diag([0.0, 1.0, 0.0]))],
        labels=["P0", "P1"],
    )


def qutrit_energy():
    return ChargeFamily(
        [HermitianOperator(np.diag([0.0, 1.0, 2.0])), HermitianOperator(np.diag([1.0, 0.0, 0.0]))],
        labels=["H", "N"],
    )


# 1 ----------------------------------------------------------------------------------

def test_criterion_01_nats_fit(report):
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    worst_res, worst_dist = 0.0, 0.0
    for _ in range(50):
        d = int(rng.integers(2, 9))
        count = int(rng.integers(1, min(4, d * d - 1) + 1))
        fam = ChargeFamily([random_hermitian(d, rng) for _ in range(count)])
        mu = rng.normal(size=count)
        mu *= rng.uniform(0.1, 3.0) / np.linalg.norm(mu)
        gamma = build_nats(fam, mu)
        fit = fit_potentials(fam, expectations(gamma, fam))
        worst_res = max(worst_res, fit.max_residual)
        worst_dist = max(worst_dist, trace_distance(build_nats(fam, fit.mu), gamma))
    elapsed = time.perf_counter() - start
    ok = worst_res <= 1e-8 and worst_dist <= 1e-7 and elapsed < 30
    report(1, ok, f"max residual {worst_res:.2e}, max trace distance {worst_dist:.2e}, {elapsed:.1f} s")
    assert ok


# 2 ----------------------------------------------------------------------------------

def test_criterion_02_hoeffding(report):
    rng = np.random.default_rng(202)
    sz = ChargeFamily([HermitianOperator(np.diag([0.5, -0.5]))])
    families = {"number": (qubit_number(), [0.3]), "sz": (sz, [-0.2])}
    spin = spin_family(0.5)
    mu = rng.normal(size=3)
    families["spin"] = (spin, expectations(build_nats(spin, mu), spin))
    violations, worst_oracle = 0, 0.0
    for name, (fam, v) in families.items():
        params = fit_potentials(fam, v)
        gamma = build_nats(fam, params.mu)
        for n in (4, 6, 8):
            for eta in (0.15, 0.25):
                chk = hoeffding_check(fam, v, n, eta, params)
                violations += int(np.sum(chk.lhs > chk.rhs))
                # each copy's outcome is independent under gamma^{(x)N}: a binomial tail in every charge's eigenbasis
                for q, vj, lhs in zip(fam, v, chk.lhs):
                    vals, vecs = q.eigh()
                    p_top = float(np.real(vecs[:, 1].conj() @ gamma.matrix @ vecs[:, 1]))
                    sigma = vals[1] - vals[0]
                    inside = math.fsum(
                        binom.pmf(k, n, p_top) for k in range(n + 1)
                        if abs(vals[0] + sigma * k / n - vj) <= eta * sigma + 1e-12 * sigma
                    )
                    worst_oracle = max(worst_oracle, abs(lhs - max(0.0, 1.0 - inside)))
    ok = violations == 0 and worst_oracle <= 1e-12
    report(2, ok, f"{violations} violations, binomial oracle gap {worst_oracle:.1e}")
    assert ok


# 3 ----------------------------------------------------------------------------------

def test_criterion_03_commuting_certification(report):
    cases = [(qubit_number(), [0.3], 0.2, n) for n in range(2, 11)]
    cases += [(qutrit_projectors(), [0.34, 0.33], 0.2, n) for n in range(2, 7)]
    worst_c1, worst_gap, lines = 0.0, -math.inf, []
    for fam, v, eta, n in cases:
        sub = build_amc(fam, v, n, eta)
        c1 = condition1_defect(sub, fam)
        worst_c1 = max(worst_c1, c1)
        for dp in (0.01, 0.05):
            b = condition2_defect(sub, fam, eta, dp)
            worst_gap = max(worst_gap, b.dual_upper - len(fam) * dp)
            lines.append(b.primal_lower <= b.dual_upper + 1e-12)
    ok = worst_c1 <= 1e-10 and worst_gap <= 1e-8 and all(lines)
    report(3, ok, f"max condition1 {worst_c1:.1e}, max dual - (c+1)delta' = {worst_gap:.1e}, {len(cases)} subspaces")
    assert ok


# 4 ----------------------------------------------------------------------------------

def test_criterion_04_site_relative_entropy_trend(report):
    fam, v, eta = qubit_number(), [0.08], 0.1
    start = time.perf_counter()
    params = fit_potentials(fam, v)
    series, xi_ok, pinsker_ok = [], True, True
    for n in range(2, 11):
        rep = theorem1_report(build_amc(fam, v, n, eta), fam, v, params)
        series.append(rep.average_relative_entropy)
        xi_ok &= bool(np.all(rep.xi <= rep.xi_bound))
        pinsker_ok &= bool(np.all(rep.site_relative_entropies >= rep.site_trace_distances**2 / 2 - 1e-12))
    elapsed = time.perf_counter() - start
    monotone = all(b <= a + 1e-12 for a, b in zip(series, series[1:]))
    ok = monotone and xi_ok and pinsker_ok and elapsed < 120
    report(4, ok, f"averages {[round(x, 5) for x in series]}, xi {xi_ok}, Pinsker {pinsker_ok}, {elapsed:.1f} s")
    assert ok


# 5 ----------------------------------------------------------------------------------

def test_criterion_05_noncommuting_pipeline(report):
    fam = spin_family(0.5)
    eps, comm, dims, c1 = [], 0.0, [], []
    for n in range(2, 7):
        approx = commuting_approximants(averaged_family(fam, n), site_dim=2)
        eps.append(approx.eps_num)
        ys = [y.matrix for y in approx.ybars]
        comm = max(comm, max(commutator_norm(a, b) for a in ys for b in ys))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            sub = build_amc(fam, [0.0, 0.0, -0.2], n, 0.2)
        dims.append(sub.dim)
        c1.append(condition1_defect(sub, fam))
    monotone = all(b <= a + 1e-12 for a, b in zip(eps, eps[1:]))
    ok = monotone and comm <= 1e-10 and min(dims) > 0 and max(c1) < 0.5
    report(5, ok, f"eps_num {[round(x, 4) for x in eps]}, max commutator {comm:.1e}, "
                  f"dims {dims}, condition1 {[round(x, 4) for x in c1]}")
    assert ok


# 6 ----------------------------------------------------------------------------------

def test_criterion_06_canonical_typicality(report):
    fam = qubit_number()
    start = time.perf_counter()
    sub = build_amc(fam, [0.5], 6, 0.1)
    est = typicality_trial(sub, fam, samples=500, seed=6)
    elapsed = time.perf_counter() - start
    ok = sub.dim >= 16 and est.within_canonical_bound and est.triangle_violations == 0 and elapsed < 120
    report(6, ok, f"dim {sub.dim}, mean {est.mean_trace_distance_to_reduced:.4f} +- {est.std_error_reduced:.4f} "
                  f"vs bound {est.bound_canonical:.4f}, triangle violations {est.triangle_violations}, {elapsed:.1f} s")
    assert ok


# 7 ----------------------------------------------------------------------------------

def test_criterion_07_complete_passivity(report):
    cases = [(spin_family(0.5), [0.4, -0.3, 0.9]), (qutrit_energy(), [1.0, 0.5])]
    worst = 0.0
    for fam, mu in cases:
        w = payoff_operator(fam, mu)
        for n in (1, 2, 3):
            if fam.site_dim ** n > 27:
                continue
            rho = thermal_product(fam, mu, n)
            for seed in (1, 2, 3):
                worst = max(worst, work_extraction_search(rho, w.on_copies(n), trials=1000, seed=seed))
    inverted = np.diag([0.1, 0.2, 0.7])
    gain = work_extraction_search(inverted, payoff_operator(qutrit_energy(), [1.0, 0.5]), trials=100, seed=0)
    ok = worst <= 1e-9 and gain > 0
    report(7, ok, f"max work from thermal copies {worst:.1e}, inverted-state work {gain:.4f}")
    assert ok


# 8 ----------------------------------------------------------------------------------

def test_criterion_08_nats_preservation(report):
    worst = 0.0
    for fam, mu in [(spin_family(0.5), [0.4, -0.3, 0.9]), (qutrit_energy(), [1.0, 0.5])]:
        sampler = ChannelSampler(fam, mu, seed=8)
        for u in sampler.unitaries(200):
            worst = max(worst, trace_distance(sampler.apply(sampler.gamma, u), sampler.gamma))
    ok = worst <= 1e-8
    report(8, ok, f"max trace distance {worst:.1e} over 2 x 200 channels")
    assert ok


# 9 ----------------------------------------------------------------------------------

def test_criterion_09_second_laws(report):
    rng = np.random.default_rng(909)
    alphas = [0.0, 0.5, 1.0, 2.0]
    worst, count = -math.inf, 0
    for fam, mu in [(spin_family(0.5), [0.4, -0.3, 0.9]), (qutrit_energy(), [1.0, 0.5])]:
        # the profile needs mu_0 > 0; for the spin family Jx plays the role of the first charge
        sampler = ChannelSampler(fam, mu, seed=9)
        for u in sampler.unitaries(200):
            rho = random_density_matrix(fam.site_dim, rng).matrix
            before = free_energy_profile(rho, fam, mu, alphas).values
            after = free_energy_profile(sampler.apply(rho, u), fam, mu, alphas).values
            for variant in before:
                diff = after[variant] - before[variant]
                diff = diff[~np.isnan(diff)]
                worst = max(worst, float(np.max(diff)))
                count += diff.size
    fam, mu = qutrit_energy(), [1.3, -0.4]
    decomposition_gap = 0.0
    for _ in range(100):
        rho = random_density_matrix(3, rng)
        quantum = free_energy_profile(rho, fam, mu, [1.0]).values["petz"][0]
        decomposition_gap = max(decomposition_gap, abs(free_energy_decomposition(rho, fam, mu) - quantum))
    ok = worst <= 1e-9 and decomposition_gap <= 1e-9
    report(9, ok, f"max F_alpha increase {worst:.1e} over {count} comparisons, F_1 identity gap {decomposition_gap:.1e}")
    assert ok


# 10 ---------------------------------------------------------------------------------

def test_criterion_10_divergence_kernel(report):
    rng = np.random.default_rng(1010)
    grid = np.linspace(0, 4, 17)
    pinsker_bad, order_bad = 0, 0
    for _ in range(1000):
        d = int(rng.integers(2, 5))
        rho = random_density_matrix(d, rng).matrix
        sigma = random_density_matrix(d, rng).matrix
        if relative_entropy(rho, sigma) < trace_distance(rho, sigma) ** 2 / 2 - 1e-10:
            pinsker_bad += 1
        w = payoff_operator(ChargeFamily([random_hermitian(d, rng)]), [1.0])
        classical = [classical_renyi(rho, sigma, w, a) for a in grid]
        petz = [quantum_renyi(rho, sigma, a, "petz") for a in grid if a <= 2]
        sandwiched = [quantum_renyi(rho, sigma, a, "sandwiched") for a in grid if a >= 0.5]
        for series in (classical, petz, sandwiched):
            order_bad += sum(b < a - 1e-10 for a, b in zip(series, series[1:]))
    ok = pinsker_bad == 0 and order_bad == 0
    report(10, ok, f"Pinsker violations {pinsker_bad}, alpha-order violations {order_bad} on 1000 pairs")
    assert ok
