import math
import random

import numpy as np
import pytest

from gridplan.grid import Cell, load_map, manhattan
from gridplan.values import (
    DuplicateCell,
    NonFiniteReward,
    ObservationMask,
    RewardSeed,
    ShapeMismatch,
    ValueTable,
    effective_heuristic,
    pcat_reward,
    td_update,
    value_loss,
)

from oracles import random_grid, reveal_count_brute


@pytest.fixture
def grid24():
    rng = random.Random(3)
    return random_grid(rng, 24, 24, density=0.2)


def test_effective_heuristic_reduces_to_manhattan(grid24):
    vt = ValueTable(grid24, lam=0.5)
    s, goal = Cell(0, 0), Cell(3, 4)
    assert effective_heuristic(s, goal, None) == 7.0
    assert effective_heuristic(s, goal, vt) == 7.0  # V is all zeros


def test_effective_heuristic_arithmetic(grid24):
    vt = ValueTable(grid24, lam=0.5)
    vt.values[0, 0] = 4.0
    assert effective_heuristic(Cell(0, 0), Cell(3, 4), vt) == 5.0


def test_effective_heuristic_clamps_at_zero(grid24):
    vt = ValueTable(grid24, lam=1.0)
    # bypass the td clamp to probe the formula's own floor
    vt.values[0, 0] = 100.0
    assert effective_heuristic(Cell(0, 0), Cell(3, 4), vt) == 0.0


def test_effective_heuristic_never_exceeds_manhattan():
    rng = random.Random(5)
    for _ in range(5):
        g = random_grid(rng, 10, 10)
        vt = ValueTable(g, lam=rng.random() * 2)
        vt.values[:] = rng.random() * vt.v_max
        for s in g.free_cells():
            assert effective_heuristic(s, g.goal, vt) <= manhattan(s, g.goal)


def test_param_validation(grid24):
    with pytest.raises(ValueError):
        ValueTable(grid24, alpha=0.0)
    with pytest.raises(ValueError):
        ValueTable(grid24, alpha=1.5)
    with pytest.raises(ValueError):
        ValueTable(grid24, gamma=1.0)
    with pytest.raises(ValueError):
        ValueTable(grid24, lam=-0.1)


def test_mask_monotone_and_radius_zero():
    mask = ObservationMask(8, 8)
    assert mask.preview_reveal(Cell(3, 3), 0) == 1
    assert mask.advance(Cell(3, 3), 0) == 1
    assert mask.advance(Cell(3, 3), 0) == 0
    before = mask.seen_count()
    mask.advance(Cell(0, 0), 2)
    assert mask.seen_count() >= before


def test_mask_reveal_matches_brute_force():
    rng = random.Random(9)
    for _ in range(20):
        w, h = rng.randint(4, 12), rng.randint(4, 12)
        mask = ObservationMask(w, h)
        seen = set()
        for _ in range(6):
            cell = Cell(rng.randrange(w), rng.randrange(h))
            radius = rng.randint(0, 3)
            expected = reveal_count_brute(seen, cell, radius, w, h)
            assert mask.preview_reveal(cell, radius) == expected
            assert mask.advance(cell, radius) == expected
            for y in range(h):
                for x in range(w):
                    if max(abs(x - cell.x), abs(y - cell.y)) <= radius:
                        seen.add((x, y))


def test_pcat_reward_zero_when_fully_seen(grid24):
    vt = ValueTable(grid24)
    mask = ObservationMask(grid24.width, grid24.height)
    mask.seen[:] = True
    s, s_next = Cell(1, 1), Cell(2, 1)
    assert pcat_reward(s, s_next, mask, RewardSeed(), vt) == 0.0


def test_pcat_reward_first_step_brute_force():
    # oracle value: fresh 24x24 mask, first advance at (1,2) with rho=2
    # covers x in [0,3] x y in [0,4] = 4*5 = 20 cells
    m = load_map("\n".join(["S" + "." * 22 + "G"] + ["." * 24] * 23))
    vt = ValueTable(m, reveal_radius=2, beta=0.1)
    mask = ObservationMask(24, 24)
    expected = reveal_count_brute(set(), Cell(1, 2), 2, 24, 24)
    assert expected == 20
    r = pcat_reward(Cell(0, 2), Cell(1, 2), mask, RewardSeed(), vt)
    assert r == pytest.approx(0.1 * 20)
    assert mask.seen_count() == 0  # preview must not mutate


def test_pcat_seed_additivity(grid24):
    vt = ValueTable(grid24, beta=0.1)
    mask = ObservationMask(grid24.width, grid24.height)
    mask.seen[:] = True
    seeded = RewardSeed({Cell(*grid24.goal): 1.0})
    base = pcat_reward(Cell(1, 1), Cell(2, 1), mask, RewardSeed(), vt)
    at_goal = pcat_reward(Cell(1, 1), Cell(*grid24.goal), mask, seeded, vt)
    assert at_goal - base == pytest.approx(1.0)


def test_reward_seed_validation():
    with pytest.raises(ValueError):
        RewardSeed({Cell(0, 0): 1.5})
    with pytest.raises(DuplicateCell):
        RewardSeed.from_json(
            [{"cell": [0, 0], "reward": 0.5}, {"cell": [0, 0], "reward": 0.2}]
        )
    seed = RewardSeed({Cell(1, 2): -0.5, Cell(3, 4): 1.0})
    assert RewardSeed.from_json(seed.to_json()) == seed


def test_apply_reward_seed_stores_without_touching_values(grid24):
    vt = ValueTable(grid24)
    seed = RewardSeed({Cell(0, 0): 0.5})
    vt.apply_reward_seed(seed)
    assert vt.active_seed is seed
    assert not vt.values.any()


def test_td_fixed_point_stays_zero(grid24):
    vt = ValueTable(grid24)
    td_update(vt, Cell(1, 1), Cell(2, 1), 0.0)
    assert not vt.values.any()


def test_td_forced_arithmetic(grid24):
    vt = ValueTable(grid24, alpha=1.0, gamma=0.0)
    td_update(vt, Cell(1, 1), Cell(2, 1), 2.0)
    assert vt.v(Cell(1, 1)) == 2.0
    # only V(s) changed
    assert np.count_nonzero(vt.values) == 1


def test_td_rejects_non_finite(grid24):
    vt = ValueTable(grid24)
    with pytest.raises(NonFiniteReward):
        td_update(vt, Cell(1, 1), Cell(2, 1), math.nan)


def test_td_two_cycle_converges_to_bellman_fixed_point():
    # iterate V(a) <- V(a) + alpha*(1 + 0.9 V(b) - V(a)) alternating a,b;
    # closed-form fixed point of the symmetric backup is r/(1-gamma) = 10
    m = load_map("SG")
    vt = ValueTable(m, alpha=0.5, gamma=0.9, lam=0.0)
    vt.v_max = 100.0  # wide clamp so convergence is driven by the recurrence
    a, b = Cell(0, 0), Cell(1, 0)
    for _ in range(2000):
        td_update(vt, a, b, 1.0)
        td_update(vt, b, a, 1.0)
    assert vt.v(a) == pytest.approx(10.0, abs=1e-6)
    assert vt.v(b) == pytest.approx(10.0, abs=1e-6)


def test_td_clamps_to_v_max(grid24):
    vt = ValueTable(grid24, alpha=1.0, gamma=0.0)
    vmax = vt.v_max
    td_update(vt, Cell(1, 1), Cell(2, 1), vmax + 50)
    assert vt.v(Cell(1, 1)) == vmax
    td_update(vt, Cell(1, 1), Cell(2, 1), -100.0)
    assert vt.v(Cell(1, 1)) == 0.0


def test_td_scalar_contraction():
    rng = random.Random(1234)
    m = load_map("SG")
    for _ in range(200):
        alpha = rng.uniform(0.05, 1.0)
        gamma = rng.uniform(0.0, 0.95)
        vt = ValueTable(m, alpha=alpha, gamma=gamma)
        vt.v_max = 1e9
        v0 = rng.uniform(0, 50)
        vnext = rng.uniform(0, 50)
        r = rng.uniform(-10, 10)
        vt.values[0, 0] = v0
        vt.values[0, 1] = vnext
        target = r + gamma * vnext
        unclamped = v0 + alpha * (target - v0)
        td_update(vt, Cell(0, 0), Cell(1, 0), r)
        if 0.0 <= unclamped <= vt.v_max:
            lhs = abs(vt.v(Cell(0, 0)) - target)
            rhs = (1 - alpha) * abs(v0 - target)
            assert lhs == pytest.approx(rhs, abs=1e-12)
        else:
            assert vt.v(Cell(0, 0)) in (0.0, vt.v_max)


def test_value_loss():
    m = load_map("S...G")
    a, b = ValueTable(m), ValueTable(m)
    assert value_loss(a, b) == 0.0
    b.values[0, 2] = 2.0
    assert value_loss(a, b) == 2.0  # half of 2 squared
    rng = np.random.default_rng(5)
    a.values[:] = rng.random(a.values.shape)
    b.values[:] = rng.random(b.values.shape)
    direct = 0.5 * sum(
        (a.values[y, x] - b.values[y, x]) ** 2
        for y in range(a.values.shape[0])
        for x in range(a.values.shape[1])
    )
    assert value_loss(a, b) == pytest.approx(direct, rel=1e-12)


def test_value_loss_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        value_loss(ValueTable(load_map("S...G")), ValueTable(load_map("S.\n.G")))
