"""Annulus planning: per-ring node quotas, hop expectations, influence bands and slot layout."""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import BASE, RELAY, SENSING, Node, PlanningError, ang_dist, energy_receive, energy_send


def sensing_count(m):
    """Sensing nodes needed on the mid-curve of annulus m for gap-free coverage."""
    if m < 0:
        raise PlanningError(f"annulus index must be >= 0, got {m}")
    if m == 0:
        return 1
    return math.ceil(math.pi / math.acos((2 * m * m + 3 * m - 1) / (2 * m * m + 3 * m + 1)))


def max_forward_angle(m):
    """Half-angle of the sector a node in annulus m can forward into.

    Law of cosines on the triangle with sides (m+0.5)d_w, (m-0.5)d_w and the
    communication radius 1.5*d_w; independent of d_w.
    """
    if m < 1:
        raise PlanningError(f"forward angle defined for m >= 1, got {m}")
    return math.acos((2 * m * m - 1.75) / (2 * m * m - 0.5))


def expected_hop_distance(m, annulus_width, n_samples=256):
    """Mean hop length from the mid-curve of annulus m to the mid-curve of m-1.

    Averages the chord length over a uniformly distributed forwarding angle in
    [0, max_forward_angle(m)] with composite Simpson quadrature on n_samples
    panels. Annulus 0 sends straight to the base over half its width.
    """
    if n_samples < 1:
        raise PlanningError("n_samples must be >= 1")
    if m == 0:
        return annulus_width / 2.0
    theta = max_forward_angle(m)
    a = (m + 0.5) * annulus_width
    b = (m - 0.5) * annulus_width
    n = n_samples + (n_samples % 2)  # Simpson needs an even panel count
    x = np.linspace(0.0, theta, n + 1)
    fx = np.sqrt(a * a + b * b - 2.0 * a * b * np.cos(x))
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    integral = (theta / n) / 3.0 * float(np.dot(w, fx))
    return integral / theta


def relay_counts(k, annulus_width, radio, bits, node_count, sensing, hops):
    """Relay quotas per annulus from the equal-drain-rate balance.

    Rings 1..k-2 get ceil((1 + e_r/e_t(m)) * upstream sensing count); the
    outermost ring gets none. The innermost ring absorbs the leftover budget,
    which reproduces the published plans; the closed-form innermost value is
    returned alongside for reference.
    """
    e_r = energy_receive(bits, radio)
    counts = [0] * k
    for m in range(1, k - 1):
        e_t = energy_send(bits, hops[m], radio)
        counts[m] = math.ceil((1.0 + e_r / e_t) * sum(sensing[m + 1:]))
    e_t0 = energy_send(bits, annulus_width / 2.0, radio)
    inner_formula = math.ceil((1.0 + e_r / e_t0) * sum(sensing[1:]))
    leftover = node_count - sum(sensing) - sum(counts[1:])
    if leftover < 0:
        raise PlanningError(
            f"node budget too small: need at least {sum(sensing) + sum(counts[1:])} "
            f"nodes for k={k}, got {node_count}")
    counts[0] = leftover
    if counts[0] < sum(sensing[1:]):
        warnings.warn(
            f"innermost relay count {counts[0]} is below the upstream sensing total "
            f"{sum(sensing[1:])}; relay capacity may be tight", stacklevel=2)
    return counts, inner_formula


def influence_widths(totals, node_count, radius):
    """Radial band widths whose populations match the planned per-ring totals.

    The cumulative band edge for ring m is sqrt((R^2/N) * sum of totals
    through m); widths are successive differences and telescope to R.
    """
    cum = [math.sqrt((radius * radius / node_count) * sum(totals[:m + 1]))
           for m in range(len(totals))]
    widths = [cum[0]] + [cum[m] - cum[m - 1] for m in range(1, len(totals))]
    return widths, cum


def _slot_angles(count, phase):
    if count == 0:
        return np.empty(0)
    return (phase + 2.0 * math.pi * np.arange(count) / count) % (2.0 * math.pi)


def build_slots(sensing, relays, annulus_width, phase=0.0):
    """Evenly pitched sensing and relay slot angles on each mid-curve.

    Relay slots are phase-shifted by half the common angular grid
    (pi / lcm(n_sensing, n_relay)) so no two slots in a ring coincide.
    """
    sensing_angles, relay_angles, radii = [], [], []
    for m, (ns, nr) in enumerate(zip(sensing, relays)):
        radii.append((m + 0.5) * annulus_width)
        sensing_angles.append(_slot_angles(ns, phase))
        offset = phase + (math.pi / math.lcm(ns, nr) if nr else 0.0)
        relay_angles.append(_slot_angles(nr, offset))
    return sensing_angles, relay_angles, radii


@dataclass
class AnnulusPlan:
    """Planned ring structure: quotas, hop expectations, bands and slots."""
    k: int
    radius: float
    node_count: int
    annulus_width: float
    sensing_counts: list
    relay_counts: list
    relay_inner_formula: int
    expected_hops: list
    influence_widths: list
    influence_edges: list
    sensing_angles: list
    relay_angles: list
    ring_radii: list
    reachable: bool
    slot_phase: float = 0.0

    @property
    def totals(self):
        return [s + r for s, r in zip(self.sensing_counts, self.relay_counts)]

    def forward_angle(self, m):
        return max_forward_angle(m)

    def to_dict(self):
        return {
            "k": self.k,
            "radius": self.radius,
            "node_count": self.node_count,
            "annulus_width": self.annulus_width,
            "sensing_counts": self.sensing_counts,
            "relay_counts": self.relay_counts,
            "relay_inner_formula": self.relay_inner_formula,
            "expected_hops": self.expected_hops,
            "influence_widths": self.influence_widths,
            "influence_edges": self.influence_edges,
            "ring_radii": self.ring_radii,
            "sensing_angles": [a.tolist() for a in self.sensing_angles],
            "relay_angles": [a.tolist() for a in self.relay_angles],
            "reachable": self.reachable,
            "slot_phase": self.slot_phase,
        }


def build_plan(config, n_samples=256, slot_phase=0.0):
    """Derive the full annulus plan for a config."""
    k = config.annulus_count
    d_w = config.annulus_width
    sensing = [sensing_count(m) for m in range(k)]
    hops = [expected_hop_distance(m, d_w, n_samples) for m in range(k)]
    relays, inner_formula = relay_counts(
        k, d_w, config.radio, config.bits_per_round, config.node_count, sensing, hops)
    totals = [s + r for s, r in zip(sensing, relays)]
    widths, edges = influence_widths(totals, config.node_count, config.radius)
    sensing_angles, relay_angles, radii = build_slots(sensing, relays, d_w, slot_phase)
    # every node in ring m must see at least one relay of ring m-1 in its sector
    reachable = all(
        relays[m - 1] > 0 and 2.0 * math.pi / relays[m - 1] < 2.0 * max_forward_angle(m)
        for m in range(1, k))
    if not reachable:
        warnings.warn("relay pitch exceeds the forwarding sector for some ring; "
                      "sensing nodes may start out disconnected", stacklevel=2)
    return AnnulusPlan(
        k=k, radius=config.radius, node_count=config.node_count, annulus_width=d_w,
        sensing_counts=sensing, relay_counts=relays, relay_inner_formula=inner_formula,
        expected_hops=hops, influence_widths=widths, influence_edges=edges,
        sensing_angles=sensing_angles, relay_angles=relay_angles, ring_radii=radii,
        reachable=reachable, slot_phase=slot_phase)


@dataclass
class RoleAssignment:
    """Mapping of relaxed nodes onto plan slots plus displacement statistics."""
    entries: list            # (node_id, annulus, role, slot_angle)
    band_population: list
    mean_displacement: float
    max_displacement: float


def assign_roles(positions, plan):
    """Project relaxed positions onto the planned slots.

    Nodes are bucketed into influence bands by radius (surplus rebalanced to
    adjacent bands by moving the radially nearest nodes, realized as a sorted
    partition), then matched within each band to that ring's slots greedily by
    ascending angular distance.
    """
    positions = np.asarray(positions, float)
    totals = plan.totals
    if len(positions) != sum(totals):
        raise PlanningError(
            f"expected {sum(totals)} positions to fill the plan, got {len(positions)}")
    radii = np.hypot(positions[:, 0], positions[:, 1])
    angles = np.arctan2(positions[:, 1], positions[:, 0]) % (2.0 * math.pi)
    order = np.argsort(radii, kind="stable")
    entries = []
    displacements = []
    start = 0
    for m in range(plan.k):
        band = order[start:start + totals[m]]
        start += totals[m]
        slots = ([(a, SENSING) for a in plan.sensing_angles[m]]
                 + [(a, RELAY) for a in plan.relay_angles[m]])
        pairs = sorted(
            ((float(ang_dist(angles[i], slot[0])), int(i), si)
             for i in band for si, slot in enumerate(slots)),
            key=lambda t: (t[0], t[1], t[2]))
        used_nodes, used_slots = set(), set()
        for dist, i, si in pairs:
            if i in used_nodes or si in used_slots:
                continue
            used_nodes.add(i)
            used_slots.add(si)
            angle, role = slots[si]
            entries.append((i, m, role, float(angle)))
            target = plan.ring_radii[m] * np.array([math.cos(angle), math.sin(angle)])
            displacements.append(float(np.hypot(*(positions[i] - target))))
    entries.sort(key=lambda e: e[0])
    return RoleAssignment(
        entries=entries,
        band_population=list(totals),
        mean_displacement=float(np.mean(displacements)),
        max_displacement=float(np.max(displacements)),
    )


def build_nodes(assignment, plan, config):
    """Materialize Node objects (base id 0 at origin, then one per assignment entry)."""
    nodes = [Node(0, np.zeros(2), BASE, -1, 0.0, True)]
    for i, m, role, angle in assignment.entries:
        pos = plan.ring_radii[m] * np.array([math.cos(angle), math.sin(angle)])
        nodes.append(Node(i + 1, pos, role, m, config.initial_energy, True))
    return nodes
