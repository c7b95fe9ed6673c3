"""Shared test fixtures: random spaces, random strongly positive
functionals, and random factorizable classical scenarios."""

import numpy as np
import pytest

from qmeasure import (
    CausalOrder,
    DecoherenceFunctional,
    HistorySpace,
    SettingScenario,
    SettingTheory,
)


def random_space(rng, n_points=3, max_alpha=3):
    alphas = rng.integers(2, max_alpha + 1, size=n_points)
    points = tuple(f"p{i}" for i in range(n_points))
    grid = [tuple(int(v) for v in idx) for idx in np.ndindex(*alphas)]
    keep = sorted(
        rng.choice(len(grid), size=max(2, int(0.7 * len(grid))), replace=False)
    )
    histories = tuple(grid[i] for i in keep)
    return HistorySpace(
        points=points,
        histories=histories,
        alphabets={p: int(a) for p, a in zip(points, alphas)},
    )


def random_psd_dcf(rng, space, dim=None):
    """Normalized Gram-form functional from random history vectors."""
    n = space.size
    dim = dim or max(2, n // 2)
    for _ in range(50):
        vecs = rng.normal(size=(n, dim)) + 1j * rng.normal(size=(n, dim))
        total = np.abs(vecs.sum(axis=0)) ** 2
        scale = total.sum()
        if scale > 1e-3:
            vecs /= np.sqrt(scale)
            return DecoherenceFunctional.from_history_vectors(space, vecs)
    raise RuntimeError("failed to draw a normalizable vector family")


def random_events(rng, space, count=3, disjoint=False):
    n = space.size
    if disjoint:
        group = rng.integers(0, count + 1, size=n)
        return [
            space.event_from_indices(np.nonzero(group == g)[0]) for g in range(count)
        ]
    return [
        space.event_from_indices(np.nonzero(rng.random(n) < 0.5)[0])
        for _ in range(count)
    ]


SCENARIO_POINTS = ("z", "wa", "wb")


def random_factorizable_scenario(rng, nk=3, zero_mass_k=False):
    """Four classical diagonal theories sharing past masses and per-wing
    conditionals, hence factorizable and agreeing by construction."""
    order = CausalOrder.from_covers(SCENARIO_POINTS, [("z", "wa"), ("z", "wb")])
    p = rng.dirichlet(np.ones(nk))
    if zero_mass_k and nk > 1:
        p[0] = 0.0
        p /= p.sum()
    cond_a = rng.dirichlet(np.ones(2), size=(2, nk))  # [setting, k, outcome]
    cond_b = rng.dirichlet(np.ones(2), size=(2, nk))
    theories = {}
    for sa in (0, 1):
        for sb in (0, 1):
            histories = tuple(
                (k, 2 * sa + i, 2 * sb + j)
                for k in range(nk)
                for i in range(2)
                for j in range(2)
            )
            space = HistorySpace(
                points=SCENARIO_POINTS,
                histories=histories,
                alphabets={"z": nk, "wa": 4, "wb": 4},
            )
            diag = np.array(
                [
                    p[k] * cond_a[sa, k, i] * cond_b[sb, k, j]
                    for k in range(nk)
                    for i in range(2)
                    for j in range(2)
                ]
            )
            dcf = DecoherenceFunctional(
                space, matrix=np.diag(diag).astype(complex)
            )
            beam_a = tuple(space.value_event("wa", 2 * sa + i) for i in range(2))
            beam_b = tuple(space.value_event("wb", 2 * sb + j) for j in range(2))
            theories[(sa, sb)] = SettingTheory(space, order, dcf, beam_a, beam_b)
    return SettingScenario(theories, ("z",), ("wa",), ("wb",))


@pytest.fixture(scope="session")
def eprb_scenario():
    from qmeasure import gen_eprb

    return gen_eprb()


@pytest.fixture(scope="session")
def double_slit():
    from qmeasure import gen_double_slit

    return gen_double_slit()
