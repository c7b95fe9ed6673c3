import numpy as np
import pytest

from conftest import random_factorizable_scenario

from qmeasure import (
    CorrelationTable,
    JointMeasure,
    check_no_signalling,
    chsh_value,
    classical_factorizability_residual,
    classical_patch,
    converse_model,
    gen_pr_box,
    joint_feasibility,
    marginalize_measure,
    patch_marginal_residual,
    quantum_patch,
)
from qmeasure.patching import SETTING_KEYS, classical_marginal_residual


class TestClassicalFactorizability:
    def test_product_scenarios_factorize(self):
        rng = np.random.default_rng(1)
        sc = random_factorizable_scenario(rng)
        assert classical_factorizability_residual(sc) < 1e-12

    def test_correlated_measure_fails_screening_off(self):
        # single past event, perfectly correlated wings: mu(ab|k) does not
        # factor into mu(a|k) mu(b|k)
        rng = np.random.default_rng(2)
        sc = random_factorizable_scenario(rng, nk=1)
        t = sc.theory(0, 0)
        diag = np.zeros(4)
        diag[0] = diag[3] = 0.5  # uu and dd only
        m = np.diag(diag).astype(complex)
        from qmeasure import DecoherenceFunctional, SettingScenario, SettingTheory

        bad = SettingTheory(
            t.space, t.order,
            DecoherenceFunctional(t.space, matrix=m),
            t.beam_a, t.beam_b,
        )
        sc2 = SettingScenario(
            {**dict(sc.theories), (0, 0): bad}, sc.z_points, sc.a_points, sc.b_points
        )
        assert classical_factorizability_residual(sc2) > 0.1

    def test_quantum_theory_rejected(self, eprb_scenario):
        with pytest.raises(ValueError):
            classical_factorizability_residual(eprb_scenario)


class TestClassicalPatch:
    def test_deterministic_pushforward(self):
        # each past event fixes all four outcomes: the joint is supported
        # on consistent tuples with the past masses
        rng = np.random.default_rng(3)
        sc = random_factorizable_scenario(rng, nk=2)
        jm = classical_patch(sc)
        assert jm.total() == pytest.approx(1.0, abs=1e-12)

    def test_marginals_match_theories(self):
        rng = np.random.default_rng(5)
        for _ in range(5):
            sc = random_factorizable_scenario(rng, nk=int(rng.integers(1, 5)))
            jm = classical_patch(sc)
            assert classical_marginal_residual(jm, sc) < 1e-12

    def test_zero_mass_rule(self):
        rng = np.random.default_rng(7)
        sc = random_factorizable_scenario(rng, nk=3, zero_mass_k=True)
        jm = classical_patch(sc)
        assert np.abs(jm.values[..., 0]).max() == 0.0
        assert classical_marginal_residual(jm, sc) < 1e-12

    def test_nonnegative(self):
        rng = np.random.default_rng(9)
        sc = random_factorizable_scenario(rng)
        jm = classical_patch(sc)
        assert jm.values.min() >= 0.0

    def test_beam_marginal_respects_chsh_bound(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            sc = random_factorizable_scenario(rng, nk=int(rng.integers(1, 4)))
            jm = classical_patch(sc)
            assert chsh_value(jm.correlation_table()) <= 2.0 + 1e-9

    def test_non_factorizable_refused(self, eprb_scenario):
        with pytest.raises(ValueError):
            classical_patch(eprb_scenario)


class TestMarginalize:
    def test_sum_over_everything(self):
        rng = np.random.default_rng(13)
        sc = random_factorizable_scenario(rng)
        jm = classical_patch(sc)
        assert float(marginalize_measure(jm, ())) == pytest.approx(1.0, abs=1e-12)

    def test_keep_all_is_identity(self):
        rng = np.random.default_rng(13)
        sc = random_factorizable_scenario(rng)
        jm = classical_patch(sc)
        kept = marginalize_measure(jm, ("i", "ip", "j", "jp", "k"))
        assert np.array_equal(kept, jm.values)

    def test_unknown_slot_rejected(self):
        rng = np.random.default_rng(13)
        jm = classical_patch(random_factorizable_scenario(rng))
        with pytest.raises(ValueError):
            marginalize_measure(jm, ("q",))


class TestChsh:
    def test_pr_box_reaches_four(self):
        _, table = gen_pr_box()
        assert chsh_value(table) == 4.0

    def test_quantum_scenario_reaches_tsirelson(self, eprb_scenario):
        value = chsh_value(eprb_scenario.correlation_table())
        assert value == pytest.approx(2 * np.sqrt(2), abs=1e-6)

    def test_malformed_table_rejected(self):
        with pytest.raises(ValueError):
            CorrelationTable({k: np.full((2, 2), 0.3) for k in SETTING_KEYS})


class TestQuantumPatch:
    def test_hermitian_and_psd(self, eprb_scenario):
        jd = quantum_patch(eprb_scenario)
        assert jd.hermiticity_residual() < 1e-12
        assert jd.min_eigenvalue() >= -1e-9
        assert jd.normalization_residual() < 1e-9

    def test_setting_marginals(self, eprb_scenario):
        jd = quantum_patch(eprb_scenario)
        for key in SETTING_KEYS:
            assert patch_marginal_residual(jd, eprb_scenario, *key) < 1e-9

    def test_ordering_changes_array_but_not_marginals(self, eprb_scenario):
        jd1 = quantum_patch(eprb_scenario)
        jd2 = quantum_patch(
            eprb_scenario, ordering=("ap", "a", "bp", "b"), validate=False
        )
        assert np.abs(jd1.values - jd2.values).max() > 1e-6
        for key in SETTING_KEYS:
            assert patch_marginal_residual(jd2, eprb_scenario, *key) < 1e-9

    def test_beam_joint_marginals(self, eprb_scenario):
        jd = quantum_patch(eprb_scenario)
        beam = jd.beam_joint()
        dcfs = eprb_scenario.beam_dcfs()
        # eg setting ab: sum over primed labels on both sides
        got = beam.sum(axis=(1, 3, 5, 7))
        assert np.abs(got - dcfs[(0, 0)]).max() < 1e-9

    def test_lon_failure_refused(self):
        from qmeasure import eprb_computational_basis_fixture

        with pytest.raises(ValueError):
            quantum_patch(eprb_computational_basis_fixture())


class TestConverse:
    def test_round_trip_marginals_exact(self, eprb_scenario):
        jd = quantum_patch(eprb_scenario)
        conv = converse_model(jd.beam_joint())
        got = conv.beam_dcfs()
        want = {k: jd.setting_marginal(*k).sum(axis=(2, 5)) for k in SETTING_KEYS}
        for key in SETTING_KEYS:
            assert np.abs(got[key] - want[key]).max() < 1e-12

    def test_output_is_factorizable_exactly(self, eprb_scenario):
        from qmeasure import check_quantum_factorizability

        jd = quantum_patch(eprb_scenario)
        conv = converse_model(jd.beam_joint())
        t = conv.theory(0, 0)
        rep = check_quantum_factorizability(
            t.dcf,
            t.order,
            t.order.region(["z"]),
            t.order.region(["wa"]),
            t.order.region(["wb"]),
        )
        assert rep.exhaustive and rep.max_residual < 1e-12

    def test_output_clauses(self, eprb_scenario):
        from qmeasure import check_lon

        jd = quantum_patch(eprb_scenario)
        conv = converse_model(jd.beam_joint())
        assert conv.validate().passed
        for key, t in conv.theories.items():
            assert check_lon(t.dcf, t.order).passed

    def test_product_joint_gives_product_model(self):
        da = np.diag([0.6, 0.4]).astype(complex)
        db = np.diag([0.5, 0.5]).astype(complex)
        joint = np.einsum("iI,xX,jJ,yY->ixjyIXJY", da, da, db, db)
        joint /= joint.reshape(16, 16).sum()
        conv = converse_model(joint)
        assert classical_factorizability_residual(conv) < 1e-12

    def test_diagonal_joint_is_classical(self, eprb_scenario):
        rng = np.random.default_rng(17)
        diag = rng.dirichlet(np.ones(16))
        joint = np.diag(diag).astype(complex).reshape((2,) * 8)
        conv = converse_model(joint)
        for key, t in conv.theories.items():
            assert t.dcf.is_classical()

    def test_non_psd_rejected(self):
        m = np.diag([0.7, 0.5, -0.1, -0.1] + [0.0] * 12).astype(complex)
        with pytest.raises(ValueError):
            converse_model(m.reshape((2,) * 8))


class TestNoSignalling:
    def test_pr_box_exact(self):
        _, table = gen_pr_box()
        assert check_no_signalling(table) == 0.0

    def test_eprb_tiny(self, eprb_scenario):
        assert check_no_signalling(eprb_scenario) < 1e-9

    def test_signalling_table_flagged(self):
        tables = {k: np.full((2, 2), 0.25) for k in SETTING_KEYS}
        # wing A outcome distribution depends on wing B's setting
        tables[(0, 1)] = np.array([[0.5, 0.25], [0.0, 0.25]])
        resid = check_no_signalling(CorrelationTable(tables))
        assert resid == pytest.approx(0.25, abs=1e-12)


class TestFeasibility:
    def test_quantum_joint_feasible(self, eprb_scenario):
        report = joint_feasibility(eprb_scenario.beam_dcfs())
        assert report.feasible
        assert report.gap < 1e-6
        assert report.iterations < 20000

    def test_box_undecided_at_budget(self):
        model, _ = gen_pr_box()
        report = joint_feasibility(model.beam_dcfs, budget=2000)
        assert report.verdict == "undecided-infeasible"
        assert report.gap > 1e-3

    def test_deterministic(self, eprb_scenario):
        r1 = joint_feasibility(eprb_scenario.beam_dcfs(), seed=0)
        r2 = joint_feasibility(eprb_scenario.beam_dcfs(), seed=0)
        assert r1.gap == r2.gap and r1.iterations == r2.iterations

    def test_signalling_input_rejected(self):
        model, _ = gen_pr_box()
        beam = {k: v.copy() for k, v in model.beam_dcfs.items()}
        beam[(0, 0)][0, 0, 0, 0] += 0.2
        with pytest.raises(ValueError):
            joint_feasibility(beam)


class TestJointMeasureValidation:
    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            JointMeasure(-np.ones((2, 2, 2, 2, 1)))

    def test_wrong_rank_rejected(self):
        with pytest.raises(ValueError):
            JointMeasure(np.ones((2, 2, 2, 2)))


class TestDegenerateScenario:
    def test_duplicated_settings_collapse(self):
        # both wing settings equal: the patched joint must reproduce one
        # single-setting functional in every setting marginal
        from qmeasure import EprbConfig, gen_eprb

        sc = gen_eprb(EprbConfig(angles=(0.4, 0.4, 1.1, 1.1)))
        jd = quantum_patch(sc)
        margs = [jd.setting_marginal(*k) for k in SETTING_KEYS]
        for m in margs[1:]:
            assert np.abs(m - margs[0]).max() < 1e-9
        for key in SETTING_KEYS:
            assert patch_marginal_residual(jd, sc, *key) < 1e-9


class TestRandomStateScenarios:
    @pytest.mark.parametrize("seed", [2, 5, 11])
    def test_pipeline_for_generic_states(self, seed):
        # the machinery is state-agnostic: any pure state with a
        # non-degenerate resolution basis must clear every clause and patch
        from qmeasure import EprbConfig, check_lon, check_poz, gen_eprb

        rng = np.random.default_rng(seed)
        state = rng.normal(size=4) + 1j * rng.normal(size=4)
        state /= np.linalg.norm(state)
        basis, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
        overlaps = np.abs(basis.conj().T @ state)
        if overlaps.min() < 1e-3:
            pytest.skip("degenerate draw")
        angles = tuple(rng.uniform(0, np.pi, size=4))
        sc = gen_eprb(
            EprbConfig(angles=angles, resolution_basis=basis, initial_state=state)
        )
        assert sc.validate().passed
        for key, t in sc.theories.items():
            assert t.dcf.validate_axioms().passed
            assert check_poz(t.dcf, t.order).passed
            assert check_lon(t.dcf, t.order).passed
        jd = quantum_patch(sc)
        assert jd.min_eigenvalue() >= -1e-9
        for key in SETTING_KEYS:
            assert patch_marginal_residual(jd, sc, *key) < 1e-9
        assert chsh_value(sc.correlation_table()) <= 2 * np.sqrt(2) + 1e-9

    def test_flipped_labels_patch_identically_well(self):
        from qmeasure import EprbConfig, gen_eprb

        sc = gen_eprb(EprbConfig(flip_b=True))
        jd = quantum_patch(sc)
        for key in SETTING_KEYS:
            assert patch_marginal_residual(jd, sc, *key) < 1e-9
        assert chsh_value(sc.correlation_table()) == pytest.approx(
            2 * np.sqrt(2), abs=1e-6
        )
