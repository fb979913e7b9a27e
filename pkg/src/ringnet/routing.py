"""Forwarding-area construction, path enumeration and residual-energy-weighted selection."""

import math
from dataclasses import dataclass, field

import numpy as np

from .core import SENSING, RELAY, ang_dist
from .planner import max_forward_angle

# hops may equal the communication radius exactly; tolerate rounding
_HOP_TOL = 1.0 + 1e-9


@dataclass
class ForwardingArea:
    """Per-owner sector of candidate relays, one id list per inner annulus (m-1 .. 0)."""
    owner_id: int
    half_angle: float
    candidates: list

    def all_relays(self):
        return [i for level in self.candidates for i in level]


@dataclass
class RoutingState:
    """Selected uploading chains per sensing node; empty chain = direct to base."""
    paths: dict = field(default_factory=dict)
    areas: dict = field(default_factory=dict)
    unroutable: set = field(default_factory=set)

    def to_dict(self):
        return {
            "paths": {str(k): list(v) for k, v in sorted(self.paths.items())},
            "unroutable": sorted(self.unroutable),
        }


def forwarding_area(owner, nodes, plan):
    """Alive relays of each inner annulus whose slot angle falls in the owner's sector."""
    m = owner.annulus
    if m < 1:
        return ForwardingArea(owner.id, 0.0, [])
    half = max_forward_angle(m)
    theta = owner.angle
    levels = []
    for level in range(m - 1, -1, -1):
        ids = [n.id for n in nodes
               if n.alive and n.role == RELAY and n.annulus == level
               and ang_dist(n.angle, theta) <= half + 1e-12]
        levels.append(sorted(ids))
    return ForwardingArea(owner.id, half, levels)


def _hop_limit(plan):
    return 1.5 * plan.annulus_width * _HOP_TOL


def enumerate_paths(area, nodes, plan):
    """All relay chains from the owner down to annulus 0, one relay per ring.

    Depth-first product over the per-ring candidate lists, pruning any hop
    longer than the communication radius 1.5*d_w. Chains come out in
    ascending-id order level by level.
    """
    if not area.candidates:
        return []
    owner = nodes[area.owner_id]
    limit = _hop_limit(plan)
    chains = []

    def extend(level, prev_pos, chain):
        if level == len(area.candidates):
            chains.append(tuple(chain))
            return
        for i in area.candidates[level]:
            hop = float(np.hypot(*(nodes[i].position - prev_pos)))
            if hop <= limit:
                chain.append(i)
                extend(level + 1, nodes[i].position, chain)
                chain.pop()

    extend(0, owner.position, [])
    return chains


def path_weight(chain, nodes):
    """Residual-over-squared-distance weight of a relay chain.

    Sums E_residual(sender)/d^2 over every relay-to-relay hop plus the final
    relay-to-base hop; the owner's own first hop is not part of the weight.
    """
    total = 0.0
    for a, b in zip(chain, chain[1:]):
        d2 = float(((nodes[a].position - nodes[b].position) ** 2).sum())
        if d2 == 0.0:
            raise ValueError(f"zero-length hop between nodes {a} and {b}")
        total += nodes[a].residual_energy / d2
    last = chain[-1]
    d2 = float((nodes[last].position ** 2).sum())
    if d2 == 0.0:
        raise ValueError(f"relay {last} sits on the base station")
    return total + nodes[last].residual_energy / d2


def _chain_length(owner, chain, nodes):
    """Total geometric length of the full upload route (tie-break key)."""
    length = 0.0
    prev = owner.position
    for i in chain:
        length += float(np.hypot(*(nodes[i].position - prev)))
        prev = nodes[i].position
    return length + float(np.hypot(prev[0], prev[1]))


def select_paths(nodes, plan, previous=None, owners=None, exclude_current=False):
    """Pick the maximum-weight chain for every (or the given) alive sensing node.

    Ties break on shorter total route length, then on the lexicographically
    smaller id chain. Annulus-0 sensing nodes upload directly (empty chain).
    Sensing nodes with no feasible chain are recorded as unroutable. With
    exclude_current a re-selected node must switch to another chain when one
    exists (load rotation on the variance trigger).
    """
    state = RoutingState()
    if previous is not None:
        state.paths = dict(previous.paths)
        state.areas = dict(previous.areas)
        state.unroutable = set(previous.unroutable)
    targets = [n for n in nodes if n.role == SENSING and n.alive
               and (owners is None or n.id in owners)]
    for node in targets:
        current = state.paths.pop(node.id, None)
        state.unroutable.discard(node.id)
        if node.annulus == 0:
            state.paths[node.id] = ()
            state.areas[node.id] = ForwardingArea(node.id, 0.0, [])
            continue
        area = forwarding_area(node, nodes, plan)
        state.areas[node.id] = area
        chains = enumerate_paths(area, nodes, plan)
        if not chains:
            state.unroutable.add(node.id)
            continue
        if exclude_current and current is not None and len(chains) > 1:
            chains = [c for c in chains if c != current]
        best = max(chains, key=lambda c: (path_weight(c, nodes),
                                          -_chain_length(node, c, nodes),
                                          [-i for i in c]))
        state.paths[node.id] = best
    return state


def reselect_triggers(state, nodes, config, residual=None, alive=None):
    """Sensing nodes that must re-run selection after this round.

    Fires when a relay on the current chain fell below the death threshold (or
    died), or when the population variance of the residual energies across the
    owner's forwarding area exceeds the variance threshold. Optional residual
    and alive arrays (indexed by node id) short-cut the per-node attributes.
    """
    if residual is None:
        residual = np.array([n.residual_energy for n in nodes])
    if alive is None:
        alive = np.array([n.alive for n in nodes])
    triggered = set()
    for owner_id, chain in state.paths.items():
        if not alive[owner_id]:
            continue
        if any(not alive[i] or residual[i] < config.death_threshold for i in chain):
            triggered.add(owner_id)
            continue
        area = state.areas.get(owner_id)
        if area is None or not area.candidates:
            continue
        ids = [i for i in area.all_relays() if alive[i]]
        if len(ids) > 1:
            vals = residual[np.asarray(ids)]
            variance = float((vals * vals).sum() / len(vals) - (vals.sum() / len(vals)) ** 2)
            if variance > config.variance_threshold:
                triggered.add(owner_id)
    return triggered
