import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from discordkit.discord import (
    DecompositionError,
    Grid,
    Hybrid,
    MultiStart,
    ProjectiveMeasurement,
    classical_correlation,
    cq_commutator_residual,
    cq_decompose,
    discord,
    is_cq_exact,
    measure_and_condition,
    mutual_information,
)
from discordkit.states import (
    BipartiteState,
    DensityOperator,
    bell_state,
    partial_trace,
    product_state,
    random_bipartite,
    random_density,
    random_unitary,
)


def classically_correlated():
    m = np.zeros((4, 4), dtype=complex)
    m[0, 0] = m[3, 3] = 0.5
    return BipartiteState.from_matrix(m, 2, 2)


def cq_state(seed, dim_a=2, dim_b=2):
    """Random state of the classical-quantum form, built directly."""
    rng = np.random.default_rng(seed)
    basis = random_unitary(dim_a, rng)
    probs = rng.dirichlet(np.ones(dim_a))
    m = np.zeros((dim_a * dim_b,) * 2, dtype=complex)
    for k in range(dim_a):
        proj = np.outer(basis[:, k], basis[:, k].conj())
        cond = random_density(dim_b, "hilbert-schmidt", rng).matrix
        m += probs[k] * np.kron(proj, cond)
    return BipartiteState.from_matrix(m, dim_a, dim_b)


def zero_plus_mixture():
    """1/2 |0><0| (x) |0><0| + 1/2 |+><+| (x) |1><1|; discordant, nondegenerate."""
    zero = np.array([1, 0], dtype=complex)
    plus = np.array([1, 1], dtype=complex) / np.sqrt(2)
    m = 0.5 * np.kron(np.outer(zero, zero), np.diag([1.0, 0.0])) + 0.5 * np.kron(
        np.outer(plus, plus), np.diag([0.0, 1.0])
    )
    return BipartiteState.from_matrix(m, 2, 2)


def dense_grid_oracle(rho, n_theta=128, n_phi=256):
    """Independent exhaustive evaluation of the classical correlation.

    Builds the projectors explicitly per angle and conditions through
    tensordot; shares no code with the library's optimiser path.
    """
    thetas = np.linspace(0.0, np.pi, n_theta + 1)
    phis = np.linspace(0.0, 2 * np.pi, n_phi, endpoint=False)
    r4 = rho.matrix.reshape(2, rho.dim_b, 2, rho.dim_b)
    s_b = _entropy_oracle(np.trace(r4, axis1=0, axis2=2))
    best = -np.inf
    for theta in thetas:
        for phi in phis:
            v0 = np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])
            v1 = np.array([-np.exp(-1j * phi) * np.sin(theta / 2), np.cos(theta / 2)])
            avg = 0.0
            for v in (v0, v1):
                block = np.einsum("a,abcd,c->bd", v.conj(), r4, v)
                p = np.trace(block).real
                if p > 1e-12:
                    avg += p * _entropy_oracle(block / p)
            best = max(best, s_b - avg)
    return best


def _entropy_oracle(m):
    w = np.linalg.eigvalsh(m)
    w = w[w > 1e-12]
    return float(-np.sum(w * np.log2(w))) if w.size else 0.0


class TestMutualInformation:
    def test_product_state(self):
        rho = product_state(
            random_density(2, "hilbert-schmidt", 0), random_density(2, "hilbert-schmidt", 1)
        )
        assert abs(mutual_information(rho)) <= 1e-9

    def test_bell(self):
        assert mutual_information(bell_state(0)) == pytest.approx(2.0, abs=1e-12)

    def test_classically_correlated(self):
        assert mutual_information(classically_correlated()) == pytest.approx(1.0, abs=1e-12)


class TestMeasureAndCondition:
    def test_product_state_conditionals(self):
        sigma = random_density(2, "hilbert-schmidt", 2)
        rho = product_state(random_density(2, "hilbert-schmidt", 3), sigma)
        meas = ProjectiveMeasurement.from_bloch(0.7, 1.2)
        for _, cond in measure_and_condition(rho, meas):
            assert np.linalg.norm(cond.matrix - sigma.matrix) <= 1e-10

    def test_bell_in_z(self):
        meas = ProjectiveMeasurement.from_bloch(0.0, 0.0)
        outcomes = measure_and_condition(bell_state(0), meas)
        assert len(outcomes) == 2
        for p, cond in outcomes:
            assert p == pytest.approx(0.5, abs=1e-12)
            assert cond.purity() == pytest.approx(1.0, abs=1e-10)

    def test_no_signalling(self):
        rho = random_bipartite(2, 3, 4)
        meas = ProjectiveMeasurement.from_bloch(1.1, 0.3)
        total = sum(p * cond.matrix for p, cond in measure_and_condition(rho, meas))
        assert np.linalg.norm(total - partial_trace(rho, "B").matrix) <= 1e-10

    def test_dim_mismatch(self):
        with pytest.raises(ValueError, match="dim"):
            measure_and_condition(random_bipartite(3, 2, 0), ProjectiveMeasurement.from_bloch(0, 0))


class TestClassicalCorrelation:
    def test_product_state_zero(self):
        rho = product_state(
            random_density(2, "hilbert-schmidt", 5), random_density(2, "hilbert-schmidt", 6)
        )
        j, _ = classical_correlation(rho, Hybrid())
        assert abs(j) <= 1e-9

    def test_bell_against_dense_grid(self):
        j, _ = classical_correlation(bell_state(0), Hybrid())
        assert j == pytest.approx(1.0, abs=1e-3)
        assert j == pytest.approx(dense_grid_oracle(bell_state(0)), abs=1e-3)

    def test_z_correlated_measurement_direction(self):
        _, meas = classical_correlation(classically_correlated(), Hybrid())
        assert abs(meas.bloch_vector()[2]) >= 1.0 - 1e-3

    def test_grid_requires_qubit(self):
        with pytest.raises(ValueError, match="dim_a"):
            classical_correlation(random_bipartite(3, 2, 7), Grid())

    def test_grid_refinement_monotone(self):
        rho = random_bipartite(2, 2, 8)
        coarse, _ = classical_correlation(rho, Grid(8, 8))
        fine, _ = classical_correlation(rho, Grid(16, 16))
        assert fine >= coarse - 1e-12

    def test_multistart_matches_hybrid_on_qubit(self):
        rho = random_bipartite(2, 2, 9)
        j_hybrid, _ = classical_correlation(rho, Hybrid())
        j_multi, _ = classical_correlation(rho, MultiStart(restarts=8), seed=1)
        assert j_multi == pytest.approx(j_hybrid, abs=2e-3)


class TestDiscord:
    def test_product_state(self):
        rho = product_state(
            random_density(2, "hilbert-schmidt", 10), random_density(2, "hilbert-schmidt", 11)
        )
        assert abs(discord(rho).value) <= 1e-6

    def test_bell(self):
        assert discord(bell_state(0)).value == pytest.approx(1.0, abs=1e-3)

    def test_cq_states_near_zero(self):
        for seed in range(5):
            rho = cq_state(seed)
            assert discord(rho).value <= 5e-3

    def test_identity_decomposition(self):
        result = discord(random_bipartite(2, 2, 12))
        assert result.value == pytest.approx(
            result.mutual_information - result.classical_correlation, abs=1e-12
        )

    @settings(max_examples=10, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_nonnegative(self, seed):
        rho = random_bipartite(2, 2, seed)
        assert discord(rho).value >= -1e-9

    def test_local_unitary_covariance(self):
        rho = random_bipartite(2, 2, 13)
        rng = np.random.default_rng(14)
        u = np.kron(random_unitary(2, rng), random_unitary(2, rng))
        rotated = BipartiteState.from_matrix(u @ rho.matrix @ u.conj().T, 2, 2)
        assert discord(rotated).value == pytest.approx(discord(rho).value, abs=2e-3)
        assert bool(is_cq_exact(rotated)) == bool(is_cq_exact(rho))

    def test_multistart_on_qutrit_a(self):
        rho = product_state(
            random_density(3, "hilbert-schmidt", 15), random_density(2, "hilbert-schmidt", 16)
        )
        result = discord(rho, MultiStart(restarts=5), seed=0)
        assert result.value <= 1e-6

    def test_cq_state_on_qutrit_a(self):
        rho = cq_state(17, dim_a=3, dim_b=2)
        result = discord(rho, MultiStart(restarts=8), seed=0)
        assert result.value <= 5e-3


class TestCommutatorResidual:
    def test_cq_state(self):
        assert cq_commutator_residual(cq_state(20)) <= 1e-10

    def test_discordant_mixture(self):
        assert cq_commutator_residual(zero_plus_mixture()) > 1e-2

    def test_bell_state_blind_spot(self):
        # Degenerate A marginal: residual vanishes although the state is
        # discordant, which is why this is only a pre-filter.
        assert cq_commutator_residual(bell_state(0)) <= 1e-10
        assert not is_cq_exact(bell_state(0))


class TestIsCQExact:
    def test_cq_form_accepted(self):
        for seed in range(5):
            assert is_cq_exact(cq_state(seed))

    def test_bell_rejected_with_witness(self):
        check = is_cq_exact(bell_state(0))
        assert not check
        assert check.worst is not None
        assert check.residual > 1e-2

    def test_mixture_of_incompatible_cq_states(self):
        conds = [random_density(2, "hilbert-schmidt", 40 + k).matrix for k in range(4)]
        z_cq = 0.5 * np.kron(np.diag([1.0, 0.0]), conds[0]) + 0.5 * np.kron(
            np.diag([0.0, 1.0]), conds[1]
        )
        plus = np.ones((2, 2)) / 2
        minus = np.array([[0.5, -0.5], [-0.5, 0.5]])
        x_cq = 0.5 * np.kron(plus, conds[2]) + 0.5 * np.kron(minus, conds[3])
        mixed = BipartiteState.from_matrix(0.5 * z_cq + 0.5 * x_cq, 2, 2)
        assert not is_cq_exact(mixed)

    def test_trivial_b(self):
        rho = BipartiteState(2, 1, random_density(2, "hilbert-schmidt", 21))
        assert is_cq_exact(rho)


class TestCQDecompose:
    def test_z_basis_recovery(self):
        sigma1 = random_density(2, "hilbert-schmidt", 30)
        sigma2 = random_density(2, "hilbert-schmidt", 31)
        m = 0.5 * np.kron(np.diag([1.0, 0.0]), sigma1.matrix) + 0.5 * np.kron(
            np.diag([0.0, 1.0]), sigma2.matrix
        )
        rho = BipartiteState.from_matrix(m, 2, 2)
        decomp = cq_decompose(rho)
        np.testing.assert_allclose(sorted(decomp.probs), [0.5, 0.5], atol=1e-10)
        overlap = np.abs(decomp.basis.conj().T @ np.eye(2)) ** 2
        assert np.allclose(np.sort(overlap.ravel()), [0, 0, 1, 1], atol=1e-10)
        assert (
            np.linalg.norm(decomp.reconstruct().matrix - rho.matrix) <= 1e-8
        )

    def test_rotated_basis_recovery(self):
        rng = np.random.default_rng(32)
        u = random_unitary(2, rng)
        sigma1 = random_density(2, "hilbert-schmidt", rng)
        sigma2 = random_density(2, "hilbert-schmidt", rng)
        m = 0.6 * np.kron(np.outer(u[:, 0], u[:, 0].conj()), sigma1.matrix) + 0.4 * np.kron(
            np.outer(u[:, 1], u[:, 1].conj()), sigma2.matrix
        )
        rho = BipartiteState.from_matrix(m, 2, 2)
        decomp = cq_decompose(rho)
        overlaps = np.abs(decomp.basis.conj().T @ u) ** 2
        assert np.max(overlaps, axis=0).min() >= 1.0 - 1e-8

    def test_product_with_nondegenerate_marginal(self):
        rho_a = DensityOperator.diagonal([0.8, 0.2])
        rho = product_state(rho_a, random_density(2, "hilbert-schmidt", 33))
        decomp = cq_decompose(rho)
        overlap = np.abs(decomp.basis.conj().T @ np.eye(2)) ** 2
        assert np.allclose(np.sort(overlap.ravel()), [0, 0, 1, 1], atol=1e-8)

    def test_rejects_non_cq(self):
        with pytest.raises(DecompositionError, match="not classical-quantum"):
            cq_decompose(bell_state(0))

    def test_degenerate_weights_still_decompose(self):
        # Equal probabilities and equal conditionals: every basis works.
        rho = product_state(
            DensityOperator.maximally_mixed(2), random_density(2, "hilbert-schmidt", 34)
        )
        decomp = cq_decompose(rho)
        assert np.linalg.norm(decomp.reconstruct().matrix - rho.matrix) <= 1e-8


class TestHybridAgainstOracle:
    def test_random_states(self):
        for seed in range(6):
            rho = random_bipartite(2, 2, 100 + seed)
            j_hybrid, _ = classical_correlation(rho, Hybrid())
            j_oracle = dense_grid_oracle(rho, 64, 128)
            assert j_hybrid == pytest.approx(j_oracle, abs=1e-3)
