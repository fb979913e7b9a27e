"""Stage-one placement: pairwise virtual forces with boundary repulsion,
relaxed by friction-gated explicit steps until the layout stops moving."""

import math
from dataclasses import dataclass, field

import numpy as np

from .core import ConfigError


@dataclass
class RelaxationReport:
    iterations_used: int
    final_max_displacement: float
    converged: bool
    trace: list = field(default_factory=list)


def pairwise_force_magnitude(d_ij, spacing, params):
    """Signed pair force at distance d_ij (negative = repulsion, positive = gravitation).

    Repulsion eta/d^beta below sqrt(3)*l - d0, gravitation lam*d^beta between
    sqrt(3)*l and 2*sqrt(3)*l - d0, zero elsewhere (the dead band and beyond).
    """
    if d_ij <= 0:
        raise ConfigError(f"pair distance must be > 0, got {d_ij}")
    s3l = math.sqrt(3.0) * spacing
    if d_ij < s3l - params.d0:
        return -params.eta / d_ij ** params.beta
    if s3l < d_ij < 2.0 * s3l - params.d0:
        return params.lam * d_ij ** params.beta
    return 0.0


def boundary_force(position, radius, params, depth_clamp=None):
    """Inward force from the network boundary on a node within delta_l of it.

    A node exactly on the boundary is treated as sitting depth_clamp
    (default: convergence_eps) inside it, avoiding the singularity.
    """
    position = np.asarray(position, float)
    r = float(np.hypot(position[0], position[1]))
    depth = radius - r
    if depth > params.delta_l:
        return np.zeros(2)
    depth = max(depth, depth_clamp if depth_clamp is not None else params.convergence_eps)
    magnitude = params.eta / depth ** params.tau
    return -(magnitude / max(r, 1e-12)) * position


def _force_field(positions, radius, spacing, params):
    """Resultant Eq.-style force on every node from one position snapshot."""
    s3l = math.sqrt(3.0) * spacing
    diff = positions[None, :, :] - positions[:, None, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    np.fill_diagonal(dist, np.inf)
    signed = np.zeros_like(dist)
    rep = dist < s3l - params.d0
    grav = (dist > s3l) & (dist < 2.0 * s3l - params.d0)
    signed[rep] = -params.eta / dist[rep] ** params.beta
    signed[grav] = params.lam * dist[grav] ** params.beta
    unit = np.where(np.isfinite(dist)[..., None], diff / dist[..., None], 0.0)
    force = (signed[..., None] * unit).sum(axis=1)
    r = np.hypot(positions[:, 0], positions[:, 1])
    depth = radius - r
    near = depth <= params.delta_l
    if near.any():
        mag = params.eta / np.maximum(depth[near], params.convergence_eps) ** params.tau
        force[near] -= (mag / np.maximum(r[near], 1e-12))[:, None] * positions[near]
    return force


def resultant_force(i, positions, radius, spacing, params):
    """Vector sum of all pair forces plus the boundary force acting on node i."""
    positions = np.asarray(positions, float)
    return _force_field(positions, radius, spacing, params)[i]


def min_separation(params, spacing):
    """Distance below which approaching moves are not integrated.

    The repulsion onset sqrt(3)*l - d0, tightened to the distance where the
    pair repulsion stops dominating the pair gravitation when the coefficients
    make gravitation the stronger influence (the clustering regime).
    """
    onset = math.sqrt(3.0) * spacing - params.d0
    balance = (params.eta / params.lam) ** (1.0 / (2.0 * params.beta))
    return min(onset, balance)


def _jitter_coincident(positions):
    """Deterministically separate exactly coincident nodes by 1e-6 m."""
    diff = positions[None, :, :] - positions[:, None, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    np.fill_diagonal(dist, np.inf)
    ii, jj = np.where(dist < 1e-12)
    for a, b in zip(ii, jj):
        if a < b:
            t = 2.0 * math.pi * ((a * 2654435761 + b * 40503) % 1000) / 1000.0
            positions[b] += 1e-6 * np.array([math.cos(t), math.sin(t)])


def _clamp_disk(positions, radius):
    r = np.hypot(positions[:, 0], positions[:, 1])
    out = r > radius
    if out.any():
        positions[out] *= (radius / r[out])[:, None]


def _separate(positions, floor, radius, passes=16):
    """Jacobi push-apart passes restoring the minimum pair separation."""
    for _ in range(passes):
        diff = positions[None, :, :] - positions[:, None, :]
        dist = np.hypot(diff[..., 0], diff[..., 1])
        np.fill_diagonal(dist, np.inf)
        viol = dist < floor * (1.0 - 1e-9)
        if not viol.any():
            break
        push = np.zeros_like(positions)
        ii, jj = np.where(viol)
        gap = (floor - dist[ii, jj]) * 0.5
        direction = -diff[ii, jj] / np.maximum(dist[ii, jj], 1e-9)[:, None]
        np.add.at(push, ii, direction * gap[:, None])
        push[0] = 0.0  # base never moves
        positions += push
        _clamp_disk(positions, radius)


def relax(positions, config, max_iters=None):
    """Iterate the virtual-force law until the layout stops moving.

    Synchronous update: all forces are computed from one snapshot, then every
    non-base node whose resultant exceeds the friction moves along it by
    step_scale * (|F| - f), capped at l/2 and scaled by a per-node damping
    factor that cools nodes whose successive moves reverse direction. A
    minimum pair separation is enforced after each step (see min_separation);
    without it the cooperative gravitation of several in-band neighbours
    overwhelms the pair repulsion and crushes nodes together. Positions stay
    inside the disk; node 0 (the base) never moves. Converged when the
    largest net per-iteration displacement falls below convergence_eps.
    """
    params = config.force
    spacing = config.lattice_spacing
    radius = config.radius
    floor = min_separation(params, spacing)
    pos = np.array(positions, float)
    if np.hypot(pos[:, 0], pos[:, 1]).max() > radius * (1 + 1e-9):
        raise ConfigError("initial positions must lie within the network disk")
    iters = max_iters if max_iters is not None else params.max_iters
    temperature = np.ones(len(pos))
    prev_move = np.zeros_like(pos)
    trace = []
    displacement = 0.0
    for it in range(iters):
        old = pos.copy()
        _jitter_coincident(pos)
        force = _force_field(pos, radius, spacing, params)
        force[0] = 0.0
        mag = np.hypot(force[:, 0], force[:, 1])
        surplus = mag - params.friction
        movers = np.where(surplus > 0)[0]
        if len(movers):
            step = np.minimum(params.step_scale * surplus[movers], spacing / 2.0)
            step *= temperature[movers]
            pos[movers] += (force[movers] / mag[movers, None]) * step[:, None]
        _separate(pos, floor, radius)
        _clamp_disk(pos, radius)
        move = pos - old
        reversed_ = (move * prev_move).sum(axis=1) < 0
        temperature = np.where(reversed_,
                               np.maximum(temperature * 0.3, 1.0 / 4096),
                               np.minimum(temperature * 1.1, 1.0))
        prev_move = move
        displacement = float(np.hypot(move[:, 0], move[:, 1]).max())
        trace.append(displacement)
        if displacement < params.convergence_eps:
            return pos, RelaxationReport(it + 1, displacement, True, trace)
    return pos, RelaxationReport(iters, displacement, False, trace)
