import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qmeasure import (
    CausalOrder,
    are_spacelike,
    down_sets,
    future_domain,
    future_set,
    is_past_set,
    shadow,
    validate_scenario_geometry,
)
from qmeasure.causal_order import all_regions, past_set_of


@pytest.fixture
def chain():
    return CausalOrder.from_covers(("s", "p"), [("s", "p")])


@pytest.fixture
def diamond():
    return CausalOrder.from_covers(
        ("bottom", "left", "right", "top"),
        [("bottom", "left"), ("bottom", "right"), ("left", "top"), ("right", "top")],
    )


class TestConstruction:
    def test_transitive_closure_from_covers(self):
        o = CausalOrder.from_covers(("a", "b", "c"), [("a", "b"), ("b", "c")])
        assert o.leq[o.point_index("a"), o.point_index("c")]

    def test_cycle_rejected(self):
        with pytest.raises(ValueError):
            CausalOrder.from_covers(("a", "b"), [("a", "b"), ("b", "a")])

    def test_non_transitive_matrix_rejected(self):
        m = np.eye(3, dtype=bool)
        m[0, 1] = m[1, 2] = True
        with pytest.raises(ValueError):
            CausalOrder(("a", "b", "c"), m)


class TestFutureSet:
    def test_chain(self, chain):
        assert future_set(chain, chain.region(["s"])).point_names() == ("s", "p")

    def test_empty(self, chain):
        assert future_set(chain, chain.empty_region()).is_empty()

    def test_diamond_left(self, diamond):
        r = future_set(diamond, diamond.region(["left"]))
        assert r.point_names() == ("left", "top")


class TestShadow:
    def test_chain_bottom(self, chain):
        assert shadow(chain, chain.region(["s"])).is_empty()

    def test_chain_top(self, chain):
        assert shadow(chain, chain.region(["p"])).point_names() == ("s",)

    def test_diamond_left(self, diamond):
        assert shadow(diamond, diamond.region(["left"])).point_names() == (
            "bottom",
            "right",
        )


class TestPastSet:
    def test_empty_is_past_set(self, chain):
        assert is_past_set(chain, chain.empty_region())

    def test_top_alone_is_not(self, chain):
        assert not is_past_set(chain, chain.region(["p"]))

    def test_diamond_lower_wedge(self, diamond):
        assert is_past_set(diamond, diamond.region(["bottom", "left"]))


class TestFutureDomain:
    def test_chain(self, chain):
        assert future_domain(chain, chain.region(["s"])).point_names() == ("s", "p")

    def test_diamond_bottom_controls_all(self, diamond):
        assert len(future_domain(diamond, diamond.region(["bottom"]))) == 4

    def test_antichain_stays_put(self):
        o = CausalOrder.antichain(("x", "y"))
        assert future_domain(o, o.region(["x"])).point_names() == ("x",)

    def test_requires_past_set(self, chain):
        with pytest.raises(ValueError):
            future_domain(chain, chain.region(["p"]))


class TestSpacelike:
    def test_antichain(self):
        o = CausalOrder.antichain(("x", "y"))
        assert are_spacelike(o, o.region(["x"]), o.region(["y"]))

    def test_chain_related(self, chain):
        assert not are_spacelike(chain, chain.region(["s"]), chain.region(["p"]))

    def test_overlap_not_spacelike(self, diamond):
        r = diamond.region(["left"])
        assert not are_spacelike(diamond, r, r)

    def test_symmetry(self, diamond):
        r1 = diamond.region(["left"])
        r2 = diamond.region(["right"])
        assert are_spacelike(diamond, r1, r2) == are_spacelike(diamond, r2, r1)


class TestGeometry:
    def test_wing_arrangement_passes(self):
        o = CausalOrder.from_covers(
            ("z", "wa", "wb"), [("z", "wa"), ("z", "wb")]
        )
        rep = validate_scenario_geometry(
            o, o.region(["z"]), o.region(["wa"]), o.region(["wb"])
        )
        assert rep.passed

    def test_wing_intersecting_past_fails_that_clause(self):
        o = CausalOrder.from_covers(
            ("z", "wa", "wb"), [("z", "wa"), ("z", "wb")]
        )
        rep = validate_scenario_geometry(
            o, o.region(["z"]), o.region(["z", "wa"]), o.region(["wb"])
        )
        assert not rep.a_disjoint_from_z
        assert rep.b_disjoint_from_z

    def test_related_wings_fail_spacelike_clause(self, diamond):
        rep = validate_scenario_geometry(
            diamond,
            diamond.region(["bottom"]),
            diamond.region(["left"]),
            diamond.region(["top"]),
        )
        assert not rep.wings_spacelike


class TestEnumeration:
    def test_all_regions_count(self, chain):
        assert len(all_regions(chain)) == 4

    def test_down_sets_diamond(self, diamond):
        names = [r.point_names() for r in down_sets(diamond)]
        assert ("bottom",) in names
        assert ("left",) not in names
        assert len(names) == 6

    def test_all_down_sets_are_past_sets(self, diamond):
        assert all(is_past_set(diamond, r) for r in down_sets(diamond))


@st.composite
def random_orders(draw):
    n = draw(st.integers(min_value=1, max_value=6))
    points = tuple(f"q{i}" for i in range(n))
    covers = []
    for i in range(n):
        for j in range(i + 1, n):
            if draw(st.booleans()):
                covers.append((points[i], points[j]))
    return CausalOrder.from_covers(points, covers), draw(
        st.integers(min_value=0, max_value=2 ** n - 1)
    )


class TestOrderProperties:
    @given(random_orders())
    @settings(max_examples=60, deadline=None)
    def test_shadow_partitions_against_future(self, case):
        order, mask = case
        from qmeasure.causal_order import Region

        r = Region(order, mask)
        sh = shadow(order, r)
        fu = future_set(order, r)
        assert (sh & fu).is_empty()
        assert (sh | fu) == order.full_region()

    @given(random_orders())
    @settings(max_examples=60, deadline=None)
    def test_past_sets_sit_inside_future_domain(self, case):
        order, mask = case
        from qmeasure.causal_order import Region

        z = Region(order, mask)
        pz = past_set_of(order, z)
        assert is_past_set(order, pz | z)
        if is_past_set(order, z):
            assert z <= future_domain(order, z)


class TestEnumerationCaps:
    def test_all_regions_capped(self):
        big = CausalOrder.antichain(tuple(f"n{i}" for i in range(13)))
        with pytest.raises(ValueError):
            all_regions(big)

    def test_down_sets_capped(self):
        big = CausalOrder.antichain(tuple(f"n{i}" for i in range(13)))
        with pytest.raises(ValueError):
            down_sets(big, limit=100)


class TestGeometryClauseFalsifiability:
    def _order(self):
        return CausalOrder.from_covers(
            ("z0", "z1", "wa", "wb"),
            [("z0", "z1"), ("z1", "wa"), ("z1", "wb")],
        )

    def test_non_past_set_z_fails_that_clause(self):
        o = self._order()
        rep = validate_scenario_geometry(
            o, o.region(["z1"]), o.region(["wa"]), o.region(["wb"])
        )
        assert not rep.z_is_past_set
        assert not rep.passed

    def test_wing_outside_future_domain_fails_that_clause(self):
        o = CausalOrder.from_covers(
            ("z", "wa", "loose", "wb"), [("z", "wa"), ("loose", "wb")]
        )
        rep = validate_scenario_geometry(
            o, o.region(["z"]), o.region(["wa"]), o.region(["wb"])
        )
        assert rep.z_is_past_set
        assert rep.a_in_future_domain
        assert not rep.b_in_future_domain

    def test_union_not_past_set_fails_that_clause(self):
        o = CausalOrder.from_covers(
            ("bot", "mid", "wa", "wb"),
            [("bot", "mid"), ("mid", "wa"), ("bot", "wb")],
        )
        rep = validate_scenario_geometry(
            o, o.region(["bot"]), o.region(["wa"]), o.region(["wb"])
        )
        assert not rep.passed
        assert not (rep.union_is_past_set and rep.a_in_future_domain)
