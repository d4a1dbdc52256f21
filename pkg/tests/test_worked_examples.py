"""Small worked examples with hand-derived values."""
import numpy as np
import pytest

from qrestrict.chain import (
    EnvironmentSpec,
    PointerSystem,
    SpinState,
    extend_with_environment,
    make_test_mixture,
    measurement_state,
    mixed_measurement_ensemble,
    pointer_observable,
    pointer_projectors,
    premeasure,
    ready_state,
    spin_basis,
)
from qrestrict.decohere import branch_coherence, decohere_pointer, suppression_study
from qrestrict.itobs import discrimination_test, make_interference_observable, outcome_distribution
from qrestrict.nogo import boolean_difference_possible, projector_completeness_check
from qrestrict.qcore import (
    CompositeLayout,
    DensityMatrix,
    HermitianObservable,
    Ket,
    expectation_power,
    is_eigenstate,
    partial_trace,
    random_density,
    spectral_decompose,
    tensor,
    trace_distance,
)
from qrestrict.restrict import (
    analytic_moments,
    collapse_log,
    gemenge_sample_many,
    information_pattern,
    partial_trace_restriction,
    restriction_gemenge,
    stochastic_restriction,
)
from qrestrict.rng import CounterRNG

R = 2**-0.5
SYM = SpinState.symmetric()
O = CompositeLayout.of(("O", 2))
Q = pointer_observable(PointerSystem("O"))


class TestCore:
    def test_basis_tensor(self):
        a = Ket([1, 0], CompositeLayout.of(("A", 2)))
        b = Ket([0, 1], CompositeLayout.of(("B", 2)))
        np.testing.assert_array_equal(tensor(a, b).amplitudes, [0, 1, 0, 0])

    def test_spin_times_ready_pointer(self):
        psi = tensor(SpinState(0.6, 0.8).ket(), ready_state("D"))
        np.testing.assert_allclose(psi.amplitudes, np.array([0.6, 0.6, 0.8, 0.8]) * R, atol=1e-15)

    def test_tensor_trace(self, gen):
        r = tensor(random_density(CompositeLayout.of(("A", 2)), gen),
                   random_density(CompositeLayout.of(("B", 3)), gen))
        assert np.trace(r.matrix).real == pytest.approx(1.0)

    @pytest.mark.parametrize("s,diag", [(SYM, (0.5, 0.5)), (SpinState(0.6, 0.8), (0.36, 0.64)),
                                        (SpinState(1.0, 0.0), (1.0, 0.0))])
    def test_reduced_observer_state(self, s, diag):
        rho = partial_trace(measurement_state(s), ["O"])
        np.testing.assert_allclose(rho.matrix, np.diag(diag), atol=1e-15)
        np.testing.assert_allclose(partial_trace_restriction(measurement_state(s)).matrix, np.diag(diag),
                                   atol=1e-15)

    @pytest.mark.parametrize("l,expected", [(1, -0.28), (2, 1.0), (3, -0.28)])
    def test_pointer_moments(self, l, expected):
        assert expectation_power(measurement_state(SpinState(0.6, 0.8)), Q, l) == pytest.approx(expected)

    def test_spectra(self):
        spec = spectral_decompose(HermitianObservable(np.diag([1.0, -1.0]), O))
        assert spec.eigenvalues == (1.0, -1.0)
        np.testing.assert_allclose(spec.projectors[0].matrix, np.diag([1.0, 0.0]))
        ident = spectral_decompose(HermitianObservable.identity(O))
        assert ident.eigenvalues == pytest.approx((1.0,))
        np.testing.assert_allclose(ident.projectors[0].matrix, np.eye(2))

    def test_trace_distances(self):
        a, b = Ket([1, 0], O), Ket([0, 1], O)
        assert trace_distance(a, a) == pytest.approx(0.0, abs=1e-15)
        assert trace_distance(a, b) == pytest.approx(1.0)
        pure = measurement_state(SYM)
        assert trace_distance(pure, mixed_measurement_ensemble(SYM).density()) == pytest.approx(0.5)

    def test_eigenstate_examples(self):
        assert is_eigenstate(Ket([1, 0], O), Q) == pytest.approx(1.0)
        assert is_eigenstate(DensityMatrix(np.eye(2) / 2, O), Q) is None


class TestChain:
    @pytest.mark.parametrize("s,probs", [(SYM, (0.5, 0.5)), (SpinState(1, 0), (1.0,)),
                                         (SpinState(0.6, 0.8j), (0.36, 0.64))])
    def test_test_mixture(self, s, probs):
        np.testing.assert_allclose(make_test_mixture(s).probabilities, probs)

    def test_basis_spin_premeasured(self):
        out = premeasure(spin_basis(0), PointerSystem("D"))
        np.testing.assert_allclose(out.amplitudes, [1, 0, 0, 0], atol=1e-15)

    def test_symmetric_ms_state(self):
        np.testing.assert_allclose(measurement_state(SYM).amplitudes, [R, 0, 0, R], atol=1e-15)

    def test_pointer_observables(self):
        p = PointerSystem("D", 0.0, 1.0)
        np.testing.assert_allclose(pointer_observable(p).matrix, np.diag([0.0, 1.0]))
        assert is_eigenstate(p.basis(0), pointer_observable(p)) == pytest.approx(0.0)

    def test_perfect_record(self):
        psi = measurement_state(SYM)
        rho = decohere_pointer(psi, EnvironmentSpec.fixed_overlap(1, 0.0))
        block = rho.matrix[np.ix_([0, 3], [0, 3])]
        np.testing.assert_allclose(block, np.eye(2) / 2, atol=1e-15)

    def test_two_half_overlaps(self):
        psi = measurement_state(SYM)
        ext = extend_with_environment(psi, EnvironmentSpec.fixed_overlap(2, 0.5))
        rho = partial_trace(ext, ["S", "O"])
        assert abs(branch_coherence(rho, psi)) == pytest.approx(0.125)


class TestRestrictions:
    def test_certain_sampling(self):
        g = make_test_mixture(SpinState(1.0, 0.0))
        assert np.all(gemenge_sample_many(g, CounterRNG(0), 100) == 0)
        q, xi = stochastic_restriction(measurement_state(SpinState(1.0, 0.0)), CounterRNG(0))
        assert q == 1.0
        np.testing.assert_allclose(xi.matrix, np.diag([1.0, 0.0]))

    def test_symmetric_collapse_frequencies(self):
        idx = collapse_log(measurement_state(SYM), CounterRNG(1), 100_000)
        assert abs(idx.mean() - 0.5) <= 4 * np.sqrt(0.25 / 1e5)

    def test_information_patterns(self):
        xi1 = restriction_gemenge(measurement_state(SpinState(0.6, 0.8))).states[0]
        assert information_pattern(xi1, [Q]).entries == {"Q_O": 1.0}
        p1 = pointer_projectors(PointerSystem("O"))[0].with_label("L_g")
        assert information_pattern(xi1, [p1]).entries == {"L_g": 1.0}
        rb = partial_trace(measurement_state(SpinState(0.6, 0.8)), ["O"])
        ip = information_pattern(rb, [Q])
        assert ip.entries == {} and ip.uncertain == ("Q_O",)

    def test_analytic_moment_examples(self):
        np.testing.assert_allclose(analytic_moments(measurement_state(SYM), Q, 2), [0.0, 1.0], atol=1e-15)
        w = mixed_measurement_ensemble(SpinState(0.6, 0.8))
        np.testing.assert_allclose(analytic_moments(w, Q, 3), [-0.28, 1.0, -0.28], atol=1e-15)


class TestNoGo:
    def test_candidate_equal_to_pointer_projector(self):
        projs = pointer_projectors(PointerSystem("O"))
        chk = projector_completeness_check(projs, projs[0])
        assert not chk.orthogonal_to_all and not chk.forced_zero

    def test_candidate_plus_state(self):
        projs = pointer_projectors(PointerSystem("O"))
        plus = HermitianObservable(np.full((2, 2), 0.5), O)
        chk = projector_completeness_check(projs, plus)
        np.testing.assert_allclose(chk.total, plus.matrix, atol=1e-15)
        assert chk.norm == pytest.approx(1.0)

    def test_bd_examples(self):
        xi = [Ket([1, 0], O), Ket([0, 1], O)]
        bd = boolean_difference_possible(xi)
        assert bd.possible
        np.testing.assert_allclose(bd.witness.matrix, Q.matrix, atol=1e-12)
        plus = boolean_difference_possible([Ket([1, 0], O), Ket([R, R], O)])
        assert not plus.possible and plus.overlap == pytest.approx(0.5)
        rb = partial_trace(measurement_state(SpinState(0.6, 0.8)), ["O"])
        assert not boolean_difference_possible(xi + [rb]).possible


class TestInterference:
    def test_b_spectrum_and_square(self):
        b = make_interference_observable(CompositeLayout.of(("S", 2), ("O", 2)))
        assert sorted(np.linalg.eigvalsh(b.matrix)) == pytest.approx([-1, 0, 0, 1])
        assert np.trace(b.matrix) == 0
        b2 = b.matrix @ b.matrix
        np.testing.assert_allclose(b2 @ b2, b2, atol=1e-12)
        np.testing.assert_allclose(b2, np.diag([1, 0, 0, 1]), atol=1e-12)

    def test_distributions(self):
        b = make_interference_observable(CompositeLayout.of(("S", 2), ("O", 2)))
        mix = outcome_distribution(mixed_measurement_ensemble(SYM), b)
        assert dict(mix.items()) == pytest.approx({1.0: 0.5, 0.0: 0.0, -1.0: 0.5})
        assert outcome_distribution(measurement_state(SYM), b).prob(1.0) == pytest.approx(1.0)
        for s in (SpinState(0.6, 0.8j), SpinState(1.0, 0.0)):
            assert outcome_distribution(mixed_measurement_ensemble(s), b).mean() == pytest.approx(0, abs=1e-15)

    def test_pointer_observable_undecidable(self):
        res = discrimination_test(measurement_state(SYM), mixed_measurement_ensemble(SYM), Q, 0.05, 20,
                                  CounterRNG(0))
        assert res.decision == "undecidable"


class TestDecoherence:
    def test_fixed_half_overlap_medians(self):
        reps = suppression_study(SYM, range(1, 5), "fixed", 0.5, trials=2)
        np.testing.assert_allclose([r.median for r in reps], [0.25, 0.125, 0.0625, 0.03125], atol=1e-14)

    def test_three_half_overlaps(self):
        psi = measurement_state(SYM)
        rho = decohere_pointer(psi, EnvironmentSpec.fixed_overlap(3, 0.5))
        assert abs(branch_coherence(rho, psi)) == pytest.approx(0.0625)

    def test_identical_records_no_suppression(self):
        reps = suppression_study(SYM, range(0, 4), "fixed", 1.0, trials=2)
        np.testing.assert_allclose([r.median for r in reps], 0.5, atol=1e-14)

    def test_haar_below_quarter_of_bare(self):
        rep = suppression_study(SYM, [4], "haar", trials=1000, rng=CounterRNG(0))[0]
        assert rep.median < 0.125
