"""Deployment, planning, routing and lifetime simulation for ring-structured
wireless sensor networks."""

__version__ = "0.1.0"

from .core import (BASE, RELAY, SENSING, ConfigError, ForceParams, NetworkConfig,
                   Node, PlanningError, RadioParams, energy_receive, energy_send,
                   lattice_spacing)
from .forces import RelaxationReport, boundary_force, pairwise_force_magnitude, relax, resultant_force
from .planner import (AnnulusPlan, RoleAssignment, assign_roles, build_nodes,
                      build_plan, build_slots, expected_hop_distance,
                      influence_widths, max_forward_angle, relay_counts,
                      sensing_count)
from .routing import (ForwardingArea, RoutingState, enumerate_paths,
                      forwarding_area, path_weight, reselect_triggers, select_paths)
from .sim import (BaselineSimulation, LifetimeSummary, RoundMetrics, Simulation,
                  deploy, geometric_counts, run_baseline, run_vfem)
