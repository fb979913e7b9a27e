"""Shared domain types, radio energy model and lattice geometry."""

import math
from dataclasses import dataclass, field, replace

import numpy as np

# Default parameter set used throughout (SI units: m, J, bit).
DEFAULT_RADIUS = 100.0
DEFAULT_NODE_COUNT = 103
DEFAULT_ANNULUS_COUNT = 4
DEFAULT_BITS_PER_ROUND = 1000
DEFAULT_INITIAL_ENERGY = 2.0
DEFAULT_DEATH_THRESHOLD = 0.2
DEFAULT_E_ELEC = 50e-9          # J/bit
DEFAULT_EPS_FS = 10e-12         # J/(bit*m^2)
DEFAULT_EPS_AMP = 0.0013e-12    # J/(bit*m^4)
DEFAULT_ETA = 5400.0
DEFAULT_LAMBDA = 0.23
DEFAULT_BETA = 2.0
DEFAULT_TAU = 1.7
DEFAULT_FRICTION = 30.0
DEFAULT_VARIANCE_THRESHOLD = 0.01   # J^2
DEFAULT_SEED = 1

SENSING = "sensing"
RELAY = "relay"
BASE = "base"


class ConfigError(ValueError):
    """Invalid configuration value or combination."""


class PlanningError(ValueError):
    """Annulus planning cannot satisfy the requested node budget."""


def lattice_spacing(radius, node_count):
    """Hexagon side length l such that node_count+1 hexagons tile the disk.

    Solves (N+1) * (3*sqrt(3)/2) * l^2 == pi * R^2, the full-coverage tiling
    at node density 2 / (3*sqrt(3)*l^2).
    """
    if radius <= 0 or node_count < 1:
        raise ConfigError(f"need radius > 0 and node_count >= 1, got {radius}, {node_count}")
    return radius * math.sqrt(2.0 * math.pi / (3.0 * math.sqrt(3.0) * (node_count + 1)))


@dataclass(frozen=True)
class RadioParams:
    """First-order radio dissipation constants (free-space / multipath)."""
    e_elec: float = DEFAULT_E_ELEC
    eps_fs: float = DEFAULT_EPS_FS
    eps_amp: float = DEFAULT_EPS_AMP
    d_threshold: float = field(init=False)

    def __post_init__(self):
        if self.e_elec <= 0 or self.eps_fs <= 0 or self.eps_amp <= 0:
            raise ConfigError("radio coefficients must be strictly positive")
        object.__setattr__(self, "d_threshold", math.sqrt(self.eps_fs / self.eps_amp))


def energy_send(bits, distance, radio):
    """Energy to transmit `bits` over `distance`; amplifier model switches at d_threshold."""
    if bits < 0 or distance < 0:
        raise ConfigError("bits and distance must be non-negative")
    if distance < radio.d_threshold:
        return bits * radio.e_elec + bits * radio.eps_fs * distance * distance
    return bits * radio.e_elec + bits * radio.eps_amp * distance ** 4


def energy_receive(bits, radio):
    """Energy to receive `bits`; independent of distance."""
    if bits < 0:
        raise ConfigError("bits must be non-negative")
    return bits * radio.e_elec


@dataclass(frozen=True)
class ForceParams:
    """Virtual-force law coefficients and relaxation settings.

    d0 (buffering distance) and delta_l (boundary influence depth) default to
    None and are resolved against the lattice spacing when a NetworkConfig is
    built: d0 = sqrt(3)*l/3, delta_l = 0.1*l.
    """
    eta: float = DEFAULT_ETA
    lam: float = DEFAULT_LAMBDA
    beta: float = DEFAULT_BETA
    tau: float = DEFAULT_TAU
    friction: float = DEFAULT_FRICTION
    d0: float | None = None
    delta_l: float | None = None
    step_scale: float = 1e-3
    max_iters: int = 5000
    convergence_eps: float = 0.01

    def __post_init__(self):
        if self.eta <= 0 or self.lam <= 0:
            raise ConfigError("eta and lam must be strictly positive")
        if self.friction <= 0:
            raise ConfigError("friction must be strictly positive")
        if self.step_scale <= 0 or self.max_iters < 1 or self.convergence_eps <= 0:
            raise ConfigError("invalid relaxation settings")

    def resolved(self, spacing):
        """Return a copy with d0/delta_l filled in for the given lattice spacing."""
        d0 = self.d0 if self.d0 is not None else math.sqrt(3.0) * spacing / 3.0
        delta_l = self.delta_l if self.delta_l is not None else 0.1 * spacing
        return replace(self, d0=d0, delta_l=delta_l)

    def friction_bound(self, spacing):
        """Largest admissible friction: min of the weakest pair and boundary forces."""
        s3l = math.sqrt(3.0) * spacing
        return min(self.lam * s3l ** self.beta,
                   self.eta / (s3l - self.d0) ** self.beta,
                   self.eta / self.delta_l ** self.tau)


@dataclass(frozen=True)
class NetworkConfig:
    """Single source of truth for one run; validates cross-field constraints."""
    radius: float = DEFAULT_RADIUS
    node_count: int = DEFAULT_NODE_COUNT
    annulus_count: int = DEFAULT_ANNULUS_COUNT
    bits_per_round: int = DEFAULT_BITS_PER_ROUND
    initial_energy: float = DEFAULT_INITIAL_ENERGY
    death_threshold: float = DEFAULT_DEATH_THRESHOLD
    radio: RadioParams = field(default_factory=RadioParams)
    force: ForceParams = field(default_factory=ForceParams)
    variance_threshold: float = DEFAULT_VARIANCE_THRESHOLD
    rng_seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.radius <= 0:
            raise ConfigError(f"radius must be > 0, got {self.radius}")
        if self.node_count < 2:
            raise ConfigError(f"node_count must be >= 2, got {self.node_count}")
        if self.annulus_count < 2:
            raise ConfigError(f"annulus_count must be >= 2, got {self.annulus_count}")
        if self.bits_per_round <= 0:
            raise ConfigError("bits_per_round must be > 0")
        if self.initial_energy <= 0:
            raise ConfigError("initial_energy must be > 0")
        if not 0 <= self.death_threshold < self.initial_energy:
            raise ConfigError("death_threshold must lie in [0, initial_energy)")
        if self.variance_threshold <= 0:
            raise ConfigError("variance_threshold must be > 0")
        spacing = self.lattice_spacing
        object.__setattr__(self, "force", self.force.resolved(spacing))
        s3l = math.sqrt(3.0) * spacing
        if not 0 < self.force.d0 < s3l / 2:
            raise ConfigError(
                f"d0 must lie in (0, sqrt(3)*l/2) = (0, {s3l / 2:.4f}), got {self.force.d0:.4f}")
        bound = self.force.friction_bound(spacing)
        if self.force.friction >= bound:
            raise ConfigError(
                f"friction {self.force.friction} violates the minimum-force bound "
                f"{bound:.4f} (eta={self.force.eta}, lam={self.force.lam})")

    @property
    def annulus_width(self):
        return self.radius / self.annulus_count

    @property
    def lattice_spacing(self):
        return lattice_spacing(self.radius, self.node_count)


@dataclass
class Node:
    """One network node; the base station is id 0 at the origin."""
    id: int
    position: np.ndarray
    role: str
    annulus: int
    residual_energy: float
    alive: bool = True

    @property
    def radius(self):
        return float(np.hypot(self.position[0], self.position[1]))

    @property
    def angle(self):
        return float(np.arctan2(self.position[1], self.position[0])) % (2.0 * math.pi)


def ang_dist(a, b):
    """Smallest absolute angular separation between two angles (radians)."""
    d = (a - b) % (2.0 * math.pi)
    return np.minimum(d, 2.0 * math.pi - d)


def uniform_disk(rng, count, radius):
    """Sample `count` points uniformly over the disk of the given radius."""
    r = radius * np.sqrt(rng.random(count))
    theta = 2.0 * math.pi * rng.random(count)
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])
