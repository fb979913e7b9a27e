import math

import numpy as np
import pytest

from ringnet.core import RELAY, SENSING, NetworkConfig, PlanningError, RadioParams
from ringnet.planner import (assign_roles, build_nodes, build_plan, build_slots,
                             expected_hop_distance, influence_widths,
                             max_forward_angle, relay_counts, sensing_count)

RADIO = RadioParams()

# published per-ring hop expectations (R=100)
HOPS_K4 = [12.5, 29.8094, 29.5595, 29.5309]
HOPS_K5 = [10.0, 23.8475, 23.6476, 23.6247, 23.6171]
HOPS_K6 = [8.3333, 19.8729, 19.7063, 19.6873, 19.6810, 19.6781]


def test_sensing_counts_published():
    assert [sensing_count(m) for m in range(4)] == [1, 4, 7, 9]
    assert [sensing_count(m) for m in range(5)] == [1, 4, 7, 9, 11]
    assert [sensing_count(m) for m in range(6)] == [1, 4, 7, 9, 11, 13]


def test_sensing_count_argument_m1():
    # cosine-rule argument at the first ring is 4/6
    assert (2 + 3 - 1) / (2 + 3 + 1) == pytest.approx(4 / 6)
    assert sensing_count(1) == math.ceil(math.pi / math.acos(4 / 6))


def test_max_forward_angle_values():
    assert max_forward_angle(1) == pytest.approx(math.acos(1 / 6), rel=1e-12)
    assert max_forward_angle(1) == pytest.approx(1.4033482475752073, rel=1e-12)
    assert max_forward_angle(2) == pytest.approx(math.acos(6.25 / 7.5), rel=1e-12)


def test_max_forward_angle_decreases_to_zero():
    angles = [max_forward_angle(m) for m in range(1, 40)]
    assert all(a > b for a, b in zip(angles, angles[1:]))
    assert angles[-1] < 0.06


def test_expected_hop_innermost_is_half_width():
    assert expected_hop_distance(0, 25.0) == 12.5
    assert expected_hop_distance(0, 20.0) == 10.0


@pytest.mark.parametrize("k,table", [(4, HOPS_K4), (5, HOPS_K5), (6, HOPS_K6)])
def test_expected_hops_match_published(k, table):
    d_w = 100.0 / k
    for m, expected in enumerate(table):
        got = expected_hop_distance(m, d_w)
        assert got == pytest.approx(expected, rel=5e-3)


def test_expected_hop_quadrature_frozen():
    assert expected_hop_distance(1, 25.0) == pytest.approx(29.809393611493284, rel=1e-12)


def test_expected_hop_scale_invariance():
    for m in (1, 3, 6):
        r1 = expected_hop_distance(m, 25.0) / 25.0
        r2 = expected_hop_distance(m, 7.3) / 7.3
        assert r1 == pytest.approx(r2, rel=1e-12)


def test_expected_hop_monte_carlo_agreement():
    rng = np.random.default_rng(11)
    for m in (1, 2, 5, 8):
        theta = max_forward_angle(m)
        a, b = (m + 0.5) * 25.0, (m - 0.5) * 25.0
        x = rng.uniform(0.0, theta, 1_000_000)
        mc = float(np.sqrt(a * a + b * b - 2 * a * b * np.cos(x)).mean())
        quad = expected_hop_distance(m, 25.0)
        assert quad == pytest.approx(mc, rel=2e-3)


def test_expected_hop_range():
    for m in range(1, 9):
        h = expected_hop_distance(m, 25.0)
        assert 25.0 <= h <= 37.5


def _plan_counts(node_count, k):
    d_w = 100.0 / k
    sensing = [sensing_count(m) for m in range(k)]
    hops = [expected_hop_distance(m, d_w) for m in range(k)]
    return relay_counts(k, d_w, RADIO, 1000, node_count, sensing, hops)


def test_relay_counts_published_k4():
    counts, inner = _plan_counts(103, 4)
    assert counts == [35, 30, 17, 0]
    assert inner == 40


def test_relay_counts_published_k5():
    counts, inner = _plan_counts(200, 5)
    assert counts == [57, 52, 38, 21, 0]
    assert inner == 62


def test_relay_counts_published_k6_totals():
    # the 6-ring 343-node column: totals 84/82/71/56/37/13
    counts, _ = _plan_counts(343, 6)
    sensing = [sensing_count(m) for m in range(6)]
    assert [s + r for s, r in zip(sensing, counts)] == [84, 82, 71, 56, 37, 13]


def test_relay_counts_outermost_zero():
    for n, k in ((103, 4), (200, 5), (343, 6)):
        counts, _ = _plan_counts(n, k)
        assert counts[-1] == 0


def test_relay_counts_infeasible_budget():
    with pytest.raises(PlanningError) as err:
        _plan_counts(60, 4)
    assert "68" in str(err.value)  # minimum feasible N for k=4


def test_relay_counts_tight_budget_warns():
    with pytest.warns(UserWarning):
        _plan_counts(75, 4)


def test_influence_widths_published_k4():
    counts, _ = _plan_counts(103, 4)
    totals = [s + r for s, r in zip([1, 4, 7, 9], counts)]
    widths, cum = influence_widths(totals, 103, 100.0)
    assert cum[0] == pytest.approx(59.11975668985759, rel=1e-12)
    assert widths[1] == pytest.approx(82.43856200137391 - 59.11975668985759, rel=1e-9)
    assert cum[-1] == pytest.approx(100.0, rel=1e-9)
    assert all(w > 0 for w in widths)
    assert sum(widths) == pytest.approx(100.0, rel=1e-9)


def test_build_slots_pitch_and_phase():
    sensing_angles, relay_angles, radii = build_slots([1, 4], [3, 30], 25.0)
    assert radii == [12.5, 37.5]
    assert np.allclose(sorted(sensing_angles[1]), [0.0, math.pi / 2, math.pi, 3 * math.pi / 2])


def test_build_slots_no_collocation():
    # 4 sensing + 30 relays shares divisors; the phase offset must still separate them
    for ns, nr in ((4, 30), (1, 35), (7, 17), (9, 21)):
        sensing_angles, relay_angles, _ = build_slots([ns], [nr], 25.0)
        angles = np.concatenate([sensing_angles[0], relay_angles[0]])
        angles.sort()
        gaps = np.diff(np.append(angles, angles[0] + 2 * math.pi))
        assert gaps.min() > 1e-6


def _default_plan(node_count=103, k=4):
    cfg = NetworkConfig(node_count=node_count, annulus_count=k)
    return cfg, build_plan(cfg)


def test_build_plan_published_structure():
    _, plan = _default_plan()
    assert plan.sensing_counts == [1, 4, 7, 9]
    assert plan.relay_counts == [35, 30, 17, 0]
    assert plan.totals == [36, 34, 24, 9]
    assert plan.reachable
    _, plan5 = _default_plan(200, 5)
    assert plan5.totals == [58, 56, 45, 30, 11]
    assert plan5.reachable


def test_plan_counts_monotone():
    for n, k in ((103, 4), (200, 5)):
        _, plan = _default_plan(n, k)
        s = plan.sensing_counts
        r = plan.relay_counts
        assert all(s[m] < s[m + 1] for m in range(1, k - 1))
        assert all(r[m] > r[m + 1] for m in range(k - 1))


def test_plan_coverage_of_disk():
    # every point of the disk within sensing radius 1.5*d_w of a sensing slot
    cfg, plan = _default_plan()
    slots = []
    for m in range(plan.k):
        for a in plan.sensing_angles[m]:
            slots.append((plan.ring_radii[m] * math.cos(a), plan.ring_radii[m] * math.sin(a)))
    slots = np.array(slots)
    xs = np.arange(-100.0, 100.5, 1.0)
    gx, gy = np.meshgrid(xs, xs)
    inside = gx ** 2 + gy ** 2 <= 100.0 ** 2
    pts = np.column_stack([gx[inside], gy[inside]])
    d2 = ((pts[:, None, :] - slots[None, :, :]) ** 2).sum(-1)
    assert np.sqrt(d2.min(axis=1)).max() <= 1.5 * plan.annulus_width + 1e-9


def test_assign_roles_fixed_point():
    cfg, plan = _default_plan()
    positions = []
    for m in range(plan.k):
        for a in plan.sensing_angles[m]:
            positions.append([plan.ring_radii[m] * math.cos(a), plan.ring_radii[m] * math.sin(a)])
        for a in plan.relay_angles[m]:
            positions.append([plan.ring_radii[m] * math.cos(a), plan.ring_radii[m] * math.sin(a)])
    assignment = assign_roles(np.array(positions), plan)
    assert assignment.max_displacement < 1e-9
    assert assignment.band_population == plan.totals


def test_assign_roles_conservation_and_slot_radii():
    cfg, plan = _default_plan()
    rng = np.random.default_rng(5)
    from ringnet.core import uniform_disk
    positions = uniform_disk(rng, 103, 100.0)
    assignment = assign_roles(positions, plan)
    assert len(assignment.entries) == 103
    nodes = build_nodes(assignment, plan, cfg)
    for m in range(plan.k):
        ring = [n for n in nodes[1:] if n.annulus == m]
        assert len(ring) == plan.totals[m]
        assert len([n for n in ring if n.role == SENSING]) == plan.sensing_counts[m]
        assert len([n for n in ring if n.role == RELAY]) == plan.relay_counts[m]
        for n in ring:
            assert n.radius == pytest.approx(plan.ring_radii[m], rel=1e-12)


def test_assign_roles_wrong_population():
    _, plan = _default_plan()
    with pytest.raises(PlanningError):
        assign_roles(np.zeros((10, 2)), plan)
