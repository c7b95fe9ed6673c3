import numpy as np
import pytest

from qmeasure import (
    SkCircuitConfig,
    SkGate,
    check_lon,
    check_poz,
    check_spacelike_commutation,
    check_truncation_independence,
    cylinder_event,
    decoupled_demo_config,
    gen_sk_circuit,
    sk_factorizability_demo,
    subspace_dim,
)
from qmeasure.sk_model import CNOT, HADAMARD, bell_pair_gate


def ry(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=complex)


class TestGeneration:
    def test_hadamard_splits_evenly(self):
        cfg = SkCircuitConfig(sites=1, steps=1, gates=(SkGate(1, (0,), HADAMARD),))
        model = gen_sk_circuit(cfg)
        for v in (0, 1):
            ev = cylinder_event(model.space, ("0,1",), (v,))
            assert model.dcf.measure(ev) == pytest.approx(0.5, abs=1e-12)

    def test_identity_wires_propagate_point_mass(self):
        cfg = SkCircuitConfig(sites=2, steps=2)
        model = gen_sk_circuit(cfg)
        ev = model.space.full_event()
        for t in range(3):
            ev = ev & cylinder_event(model.space, (f"0,{t}", f"1,{t}"), (0, 0))
        assert model.dcf.measure(ev) == pytest.approx(1.0, abs=1e-12)

    def test_axioms_sampled(self):
        cfg = decoupled_demo_config(steps=2)
        model = gen_sk_circuit(cfg)
        rep = model.dcf.validate_axioms()
        assert rep.sampled and rep.passed

    def test_induced_order_follows_gates(self):
        cfg = SkCircuitConfig(
            sites=2, steps=1, gates=(SkGate(1, (0, 1), bell_pair_gate()),)
        )
        model = gen_sk_circuit(cfg)
        o = model.order
        assert o.leq[o.point_index("1,0"), o.point_index("0,1")]
        cfg2 = SkCircuitConfig(sites=2, steps=1)
        o2 = gen_sk_circuit(cfg2).order
        assert not o2.leq[o2.point_index("1,0"), o2.point_index("0,1")]

    def test_cap_enforced(self):
        with pytest.raises(ValueError):
            gen_sk_circuit(SkCircuitConfig(sites=5, steps=3))

    def test_overlapping_gates_rejected(self):
        with pytest.raises(ValueError):
            SkCircuitConfig(
                sites=2,
                steps=1,
                gates=(
                    SkGate(1, (0,), HADAMARD),
                    SkGate(1, (0, 1), bell_pair_gate()),
                ),
            )

    def test_unnormalized_state_rejected(self):
        with pytest.raises(ValueError):
            SkCircuitConfig(sites=1, steps=1, psi=np.array([1.0, 1.0]))


class TestTruncation:
    def test_unitary_circuit_independent(self):
        cfg = decoupled_demo_config(steps=2)
        rep = check_truncation_independence(cfg, 1, 2)
        assert rep.passed
        assert rep.max_residual < 1e-12

    def test_broken_unitarity_detected(self):
        cfg = decoupled_demo_config(steps=2)
        gates = list(cfg.gates)
        last = gates[-1]
        gates[-1] = SkGate(last.layer, last.sites, last.matrix * 1.05)
        bad = SkCircuitConfig(
            sites=4, steps=2, gates=tuple(gates), regions=cfg.regions
        )
        rep = check_truncation_independence(bad, 1, 2)
        assert not rep.passed
        assert rep.max_residual > 1e-3

    def test_events_fixed_at_start_unaffected(self):
        cfg = SkCircuitConfig(
            sites=1, steps=2,
            gates=(SkGate(1, (0,), HADAMARD), SkGate(2, (0,), ry(0.4))),
        )
        rep = check_truncation_independence(cfg, 0, 2, regions=[("0,0",)])
        assert rep.max_residual < 1e-12

    def test_late_events_rejected(self):
        cfg = decoupled_demo_config(steps=2)
        with pytest.raises(ValueError):
            check_truncation_independence(cfg, 1, 2, regions=[("0,2",)])


class TestFactorizabilityDemo:
    def test_small_fixture_exact(self):
        rep = sk_factorizability_demo(decoupled_demo_config(steps=2))
        assert rep.exhaustive
        assert rep.max_residual < 1e-9

    def test_coupling_gate_refused(self):
        regions = decoupled_demo_config(steps=2).regions
        gates = (
            SkGate(1, (1, 2), bell_pair_gate()),
            SkGate(2, (1, 2), bell_pair_gate()),  # straddles the wing split
        )
        with pytest.raises(ValueError, match="couples the wings"):
            sk_factorizability_demo(
                SkCircuitConfig(sites=4, steps=2, gates=gates, regions=regions)
            )

    def test_missing_regions_rejected(self):
        cfg = SkCircuitConfig(sites=2, steps=1)
        with pytest.raises(ValueError):
            sk_factorizability_demo(cfg)


class TestCausalChecks:
    def test_exhaustive_poz_small_circuit(self):
        cfg = SkCircuitConfig(
            sites=2, steps=2,
            gates=(
                SkGate(1, (0, 1), bell_pair_gate()),
                SkGate(2, (0, 1), CNOT @ np.kron(HADAMARD, ry(0.3))),
            ),
        )
        model = gen_sk_circuit(cfg)
        rep = check_poz(model.dcf, model.order, regions="exhaustive")
        assert rep.passed
        assert rep.max_violation < 1e-12

    def test_down_set_poz_on_demo(self):
        model = gen_sk_circuit(decoupled_demo_config(steps=2))
        from qmeasure import down_sets

        regions = down_sets(model.order)[::4]  # sampled, still dozens
        rep = check_poz(model.dcf, model.order, regions=regions)
        assert rep.passed

    def test_mixed_state_satisfies_novelty_and_commutation(self):
        # a full-rank initial condition makes the early slices span the
        # whole event Hilbert space, unlike a point-mass start
        rho = np.eye(4, dtype=complex) / 2.0
        cfg = SkCircuitConfig(
            sites=2, steps=2, psi=rho,
            gates=(
                SkGate(1, (0, 1), bell_pair_gate()),
                SkGate(2, (0,), HADAMARD),
                SkGate(2, (1,), ry(0.37)),
            ),
        )
        model = gen_sk_circuit(cfg)
        assert check_lon(model.dcf, model.order).passed
        z = model.order.region(
            ["rho"] + [f"{s},{t}" for t in (0, 1) for s in (0, 1)]
        )
        a = model.order.region(["0,2"])
        b = model.order.region(["1,2"])
        ea = cylinder_event(model.space, ("0,2",), (0,))
        eb = cylinder_event(model.space, ("1,2",), (1,))
        rep = check_spacelike_commutation(model.dcf, model.order, z, a, b, ea, eb)
        assert rep.commutator_norm < 1e-9
        assert rep.action_residual < 1e-9

    def test_pure_point_mass_breaks_novelty(self):
        cfg = SkCircuitConfig(
            sites=2, steps=1, gates=(SkGate(1, (0, 1), bell_pair_gate()),)
        )
        model = gen_sk_circuit(cfg)
        assert not check_lon(model.dcf, model.order).passed


class TestRankBounds:
    def test_pure_state_rank_at_most_qL(self):
        cfg = decoupled_demo_config(steps=2)
        model = gen_sk_circuit(cfg)
        assert subspace_dim(model.dcf, model.space.points) <= 2 ** 4

    def test_mixed_state_rank_bound(self):
        rho = np.eye(4, dtype=complex) / 2.0
        cfg = SkCircuitConfig(sites=2, steps=1, psi=rho,
                              gates=(SkGate(1, (0, 1), bell_pair_gate()),))
        model = gen_sk_circuit(cfg)
        assert subspace_dim(model.dcf, model.space.points) <= 4


class TestMixedState:
    def test_purification_point_added(self):
        rho = np.zeros((2, 4), dtype=complex)
        rho[0, 0] = np.sqrt(0.7)
        rho[1, 3] = np.sqrt(0.3)
        model = gen_sk_circuit(SkCircuitConfig(sites=2, steps=1, psi=rho))
        assert model.space.points[0] == "rho"
        assert model.dcf.validate_axioms().passed

    def test_branch_weights_add(self):
        rho = np.zeros((2, 4), dtype=complex)
        rho[0, 0] = np.sqrt(0.7)
        rho[1, 3] = np.sqrt(0.3)
        model = gen_sk_circuit(SkCircuitConfig(sites=2, steps=1, psi=rho))
        ev = cylinder_event(model.space, ("0,0", "1,0"), (0, 0))
        assert model.dcf.measure(ev) == pytest.approx(0.7, abs=1e-12)


class TestCaps:
    def test_restriction_above_dense_cap_rejected(self):
        model = gen_sk_circuit(decoupled_demo_config(steps=3))
        wide = [f"{s},{t}" for t in (0, 1, 2) for s in range(4)][:11]
        with pytest.raises(ValueError, match="dense cap"):
            model.dcf.restrict(tuple(wide))

    def test_event_space_needs_region_for_large_lazy(self):
        from qmeasure import build_event_space

        model = gen_sk_circuit(decoupled_demo_config(steps=3))
        with pytest.raises(ValueError):
            build_event_space(model.dcf)
        es = build_event_space(model.dcf, ("0,3", "1,3"))
        assert es.rank >= 1


class TestDeltaPathCrossCheck:
    def _paths(self, dcf, order, z, a, b):
        import qmeasure.causality as qc

        fast = qc.check_quantum_factorizability(dcf, order, z, a, b)
        orig = qc._separable_final
        qc._separable_final = lambda m: None  # force the general route
        try:
            slow = qc.check_quantum_factorizability(
                dcf, order, z, a, b, budget=10 ** 9
            )
        finally:
            qc._separable_final = orig
        return fast, slow

    def test_decoupled_amplitudes_exact_both_routes(self):
        model = gen_sk_circuit(decoupled_demo_config(steps=2))
        fast, slow = self._paths(
            model.dcf, model.order,
            model.region("Z"), model.region("A"), model.region("B"),
        )
        assert fast.exhaustive and slow.exhaustive
        assert fast.max_residual < 1e-12
        assert fast.max_residual == slow.max_residual

    def test_generic_amplitudes_fail_identically_on_both_routes(self):
        # same lattice and causal order, but amplitudes with no product
        # structure: the identity must fail, and the collapsed and general
        # routes must report the same worst residual
        from qmeasure import DecoherenceFunctional

        model = gen_sk_circuit(decoupled_demo_config(steps=2))
        rng = np.random.default_rng(71)
        n = model.space.size
        amps = rng.normal(size=n) + 1j * rng.normal(size=n)
        fin = model.dcf.branch.final_index
        dim = model.dcf.branch.dim
        norm = np.zeros(dim, dtype=complex)
        np.add.at(norm, fin, amps)
        amps /= np.sqrt(np.vdot(norm, norm).real)
        dcf = DecoherenceFunctional.from_amplitudes(model.space, amps, fin, dim)
        fast, slow = self._paths(
            dcf, model.order,
            model.region("Z"), model.region("A"), model.region("B"),
        )
        assert fast.max_residual > 1e-6
        assert fast.max_residual == pytest.approx(slow.max_residual, rel=1e-9)
