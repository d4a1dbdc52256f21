import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qrestrict.chain import EnvironmentSpec, SpinState, measurement_state
from qrestrict.decohere import (
    branch_coherence,
    decohere_pointer,
    predicted_coherence,
    suppression_study,
    write_suppression_csv,
)
from qrestrict.qcore import partial_trace

S = SpinState.symmetric()


def brute_force_coherence(a1, a2, env):
    """Build the S-O-E state by explicit sums and read <s1 O1|rho_SO|s2 O2>."""
    n = env.count
    dim = 4 * 2**n
    psi = np.zeros(dim, dtype=complex)
    for branch, amp in ((0, a1), (1, a2)):
        rec = np.array([1.0 + 0j])
        for pair in env.branches:
            rec = np.kron(rec, pair[branch])
        so = np.zeros(4)
        so[3 * branch] = 1.0
        psi += amp * np.kron(so, rec)
    m = psi.reshape(4, 2**n)
    rho = m @ m.conj().T
    return rho[0, 3]


class TestProductLaw:
    def test_fixed_overlap_example(self):
        env = EnvironmentSpec.fixed_overlap(2, 0.5)
        psi = measurement_state(S)
        rho = decohere_pointer(psi, env)
        assert rho.layout.labels == ("S", "O")
        assert abs(branch_coherence(rho, psi)) == pytest.approx(0.125, abs=1e-12)

    def test_no_environment(self):
        psi = measurement_state(S)
        rho = decohere_pointer(psi, EnvironmentSpec())
        assert branch_coherence(rho, psi) == pytest.approx(0.5)

    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(0, 6),
           theta=st.floats(0.0, np.pi / 2), phi=st.floats(0, 2 * np.pi))
    @settings(max_examples=40, deadline=None)
    def test_matches_brute_force(self, seed, n, theta, phi):
        s = SpinState(np.cos(theta), np.sin(theta) * np.exp(1j * phi))
        env = EnvironmentSpec.haar_random(n, np.random.default_rng(seed))
        psi = measurement_state(s)
        got = branch_coherence(decohere_pointer(psi, env), psi)
        assert got == pytest.approx(brute_force_coherence(s.a1, s.a2, env), abs=1e-12)
        assert got == pytest.approx(predicted_coherence(psi, env), abs=1e-12)

    def test_weights_untouched(self, gen):
        s = SpinState(0.6, 0.8)
        env = EnvironmentSpec.haar_random(3, gen)
        rho = decohere_pointer(measurement_state(s), env)
        np.testing.assert_allclose(np.diag(partial_trace(rho, ["O"]).matrix).real, [0.36, 0.64], atol=1e-14)

    def test_orthogonal_records_kill_coherence(self):
        psi = measurement_state(S)
        rho = decohere_pointer(psi, EnvironmentSpec.fixed_overlap(1, 0.0))
        assert abs(branch_coherence(rho, psi)) < 1e-15


class TestStudy:
    def test_fixed_monotone(self):
        reps = suppression_study(S, range(0, 6), model="fixed", overlap=0.8, trials=3)
        med = [r.median for r in reps]
        np.testing.assert_allclose(med, 0.5 * 0.8 ** np.arange(6), atol=1e-12)
        assert all(r.max_law_error < 1e-12 for r in reps)

    def test_haar_reproducible_and_trial_addressable(self):
        a = suppression_study(S, [3], trials=20, rng=4)[0]
        b = suppression_study(S, [3], trials=20, rng=4)[0]
        np.testing.assert_array_equal(a.offdiag, b.offdiag)
        short = suppression_study(S, [3], trials=5, rng=4)[0]
        np.testing.assert_array_equal(short.offdiag, a.offdiag[:5])

    def test_haar_suppression_grows(self):
        reps = suppression_study(S, [0, 2, 4, 6], trials=300, rng=0)
        med = [r.median_suppression for r in reps]
        assert med[0] == pytest.approx(1.0)
        assert med[1] > med[2] > med[3]
        assert reps[2].median_suppression <= 0.25
        assert reps[3].basis_selected()

    def test_summary_and_csv(self, tmp_path):
        reps = suppression_study(S, [0, 1], trials=4, rng=0)
        summ = reps[1].summary()
        assert summ["N_E"] == 1 and summ["trials"] == 4
        assert summ["q1"] <= summ["median"] <= summ["q3"]
        path = tmp_path / "s.csv"
        write_suppression_csv(path, reps)
        lines = path.read_text().splitlines()
        assert lines[0] == "N_E,trial,offdiag,prediction" and len(lines) == 9

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            suppression_study(S, [1], trials=0)
        with pytest.raises(ValueError):
            suppression_study(S, [1], model="gaussian", trials=1)
