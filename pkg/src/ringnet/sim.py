"""Round-based lifetime engine for the planned deployment and the two baselines."""

import math
from dataclasses import dataclass, field

import numpy as np

from .core import BASE, RELAY, SENSING, Node, energy_receive, energy_send, uniform_disk
from .forces import relax
from .planner import assign_roles, build_nodes, build_plan
from .routing import RoutingState, enumerate_paths, forwarding_area, select_paths

UNIFORM_DIRECT = "uniform"
WU_GEOMETRIC = "wu"

# Table-style per-annulus populations reported for the k=6 geometric baseline
WU_PUBLISHED_K6 = (648, 216, 72, 24, 8, 4)

DEFAULT_ROUNDS_CAP = 1_000_000


@dataclass
class RoundMetrics:
    round_index: int
    residual_by_annulus: list
    pct_by_annulus: list
    total_residual: float
    alive_sensing: int
    alive_relay: int
    delivered: int
    deaths: list


@dataclass
class LifetimeSummary:
    strategy: str
    planned_streams: int
    first_death_round: int | None
    lifetime_round: int | None
    rounds_run: int
    truncated: bool
    final_pct_by_annulus: list
    final_mean_residual_by_annulus: list
    annulus_counts: list


@dataclass
class DeploymentResult:
    initial_positions: np.ndarray
    relaxed_positions: np.ndarray
    relaxation: object
    plan: object
    assignment: object
    nodes: list


def seed_streams(master_seed):
    """Fixed seed-splitting rule: one master seed expands to per-stage generators
    in the order (deployment, uniform baseline, geometric baseline)."""
    children = np.random.SeedSequence(master_seed).spawn(3)
    return {
        "deploy": np.random.default_rng(children[0]),
        UNIFORM_DIRECT: np.random.default_rng(children[1]),
        WU_GEOMETRIC: np.random.default_rng(children[2]),
    }


def deploy(config, seed=None, max_iters=None):
    """Run the placement pipeline: random drop, force relaxation, slot assignment."""
    rng = seed_streams(config.rng_seed if seed is None else seed)["deploy"]
    initial = np.vstack([np.zeros(2), uniform_disk(rng, config.node_count, config.radius)])
    relaxed, report = relax(initial, config, max_iters=max_iters)
    plan = build_plan(config)
    assignment = assign_roles(relaxed[1:], plan)
    nodes = build_nodes(assignment, plan, config)
    return DeploymentResult(initial, relaxed, report, plan, assignment, nodes)


class Simulation:
    """Drives rounds over a planned deployment with weight-based path selection.

    Residual energies live in one array indexed by node id; per-round traffic
    is a precomputed drain vector that changes only when routing changes, so a
    31000-round lifetime stays cheap. Node objects are synced on deaths and on
    demand via sync_nodes().
    """

    def __init__(self, config, nodes, plan, cross_check_triggers=False):
        self.config = config
        self.nodes = nodes
        self.plan = plan
        self.cross_check = cross_check_triggers
        n = len(nodes)
        self.residual = np.array([nd.residual_energy for nd in nodes])
        self.alive = np.array([nd.alive for nd in nodes])
        self.round_index = 0
        self.charged_total = 0.0
        self.initial_total = float(self.residual.sum())
        self.annulus_of = np.array([max(nd.annulus, 0) for nd in nodes])
        self.k = plan.k
        self.annulus_counts = [0] * self.k
        for nd in nodes[1:]:
            self.annulus_counts[nd.annulus] += 1
        self.initial_by_annulus = np.array(
            [c * config.initial_energy for c in self.annulus_counts])
        self.alive_sensing = sum(1 for nd in nodes if nd.role == SENSING)
        self.alive_relay = sum(1 for nd in nodes if nd.role == RELAY)
        self.planned_streams = self.alive_sensing
        # sentinel row so padded index matrices stay harmless
        self._ext_res = np.append(self.residual, np.inf)
        self._ext_alive = np.append(self.alive, True)
        self._dummy = n
        self.state = select_paths(nodes, plan)
        self._owner_rows = sorted(self.state.paths)
        self._build_caches()
        self._rebuild_traffic()

    # ---------------- routing caches ----------------

    def _build_caches(self):
        """Refresh forwarding areas and candidate-chain caches for every owner
        against the current alive set."""
        self._chain_cache = {}
        for oid in self._owner_rows:
            owner = self.nodes[oid]
            if owner.annulus == 0 or not self.alive[oid]:
                continue
            area = forwarding_area(owner, self.nodes, self.plan)
            self.state.areas[oid] = area
            chains = enumerate_paths(area, self.nodes, self.plan)
            if chains:
                self._cache_owner(oid, chains)

    def _select_cached(self, oid, exclude=None):
        """Argmax-weight chain for one owner from its cache (ties by rank).

        With `exclude` the current chain is barred whenever an alternative
        exists, forcing rotation onto another path.
        """
        cached = self._chain_cache.get(oid)
        if cached is None:
            return None
        chains, ids, inv, rank = cached
        w = (self._ext_res[ids] * inv).sum(axis=1)
        if exclude is not None and len(chains) > 1:
            try:
                w = w.copy()
                w[chains.index(exclude)] = -np.inf
            except ValueError:
                pass
        best = w.max()
        tied = np.flatnonzero(w == best)
        return chains[tied[np.argmin(rank[tied])]]

    def _refresh_trigger_matrices(self):
        owners = [oid for oid in self._owner_rows
                  if self.alive[oid] and oid in self.state.paths]
        self._trig_owners = owners
        width = max((len(self.state.paths[o]) for o in owners), default=1)
        self._path_mat = np.full((len(owners), max(width, 1)), self._dummy)
        for r, oid in enumerate(owners):
            chain = self.state.paths[oid]
            self._path_mat[r, :len(chain)] = chain
        awidth = max((len(self.state.areas[o].all_relays())
                      for o in owners if o in self.state.areas), default=1)
        self._area_mat = np.full((len(owners), max(awidth, 1)), self._dummy)
        for r, oid in enumerate(owners):
            area = self.state.areas.get(oid)
            if area is not None:
                flat = area.all_relays()
                self._area_mat[r, :len(flat)] = flat

    def _rebuild_traffic(self):
        """Recompute the constant per-round drain vector from current paths."""
        radio = self.config.radio
        bits = self.config.bits_per_round
        drain = np.zeros(len(self.nodes) + 1)
        delivered = 0
        for oid in self._owner_rows:
            if not self.alive[oid] or oid not in self.state.paths:
                continue
            owner = self.nodes[oid]
            chain = self.state.paths[oid]
            delivered += 1
            prev = owner.position
            first = self.nodes[chain[0]].position if chain else np.zeros(2)
            drain[oid] += energy_send(bits, float(np.hypot(*(first - prev))), radio)
            for j, i in enumerate(chain):
                nxt = (self.nodes[chain[j + 1]].position
                       if j + 1 < len(chain) else np.zeros(2))
                hop = float(np.hypot(*(self.nodes[i].position - nxt)))
                drain[i] += energy_receive(bits, radio) + energy_send(bits, hop, radio)
        self._drain = drain[:-1]
        self._drain_sum = float(self._drain.sum())
        self.delivered = delivered
        self._refresh_trigger_matrices()

    # ---------------- rounds ----------------

    def _settle_deaths(self):
        dead = np.flatnonzero(self.alive & (self.residual < self.config.death_threshold))
        dead = dead[dead != 0]
        if len(dead) == 0:
            return []
        for i in dead:
            self.alive[i] = False
            self._ext_alive[i] = False
            self.nodes[i].alive = False
            self.nodes[i].residual_energy = float(self.residual[i])
            if self.nodes[i].role == SENSING:
                self.alive_sensing -= 1
            else:
                self.alive_relay -= 1
        return [int(i) for i in dead]

    def _reselect(self, owners, rotate=frozenset()):
        """Re-run selection for the triggered owners; report if any chain changed.

        Owners in `rotate` were triggered by the variance condition and must
        move to another chain when one exists. Caches are assumed fresh for
        the current alive set (rebuilt on deaths).
        """
        changed = False
        for oid in sorted(owners):
            if not self.alive[oid]:
                changed = True
                self.state.paths.pop(oid, None)
                continue
            if self.nodes[oid].annulus == 0:
                continue
            current = self.state.paths.get(oid)
            best = self._select_cached(oid, exclude=current if oid in rotate else None)
            if best is None:
                self.state.paths.pop(oid, None)
                self.state.unroutable.add(oid)
                changed = True
            elif best != current:
                self.state.paths[oid] = best
                changed = True
        return changed

    def _cache_owner(self, oid, chains):
        owner = self.nodes[oid]
        width = max(len(c) for c in chains)
        ids = np.full((len(chains), width), self._dummy)
        inv = np.zeros((len(chains), width))
        lengths = []
        for p, chain in enumerate(chains):
            total = float(np.hypot(*(self.nodes[chain[0]].position - owner.position)))
            for j, i in enumerate(chain):
                ids[p, j] = i
                nxt = (self.nodes[chain[j + 1]].position
                       if j + 1 < len(chain) else np.zeros(2))
                d2 = float(((self.nodes[i].position - nxt) ** 2).sum())
                inv[p, j] = 1.0 / d2
                if j + 1 < len(chain):
                    total += math.sqrt(d2)
            total += float(np.hypot(*self.nodes[chain[-1]].position))
            lengths.append(total)
        order = sorted(range(len(chains)), key=lambda p: (lengths[p], chains[p]))
        rank = np.empty(len(chains), int)
        rank[order] = np.arange(len(chains))
        self._chain_cache[oid] = (chains, ids, inv, rank)

    def _triggered(self):
        """Vectorized equivalent of routing.reselect_triggers.

        Returns (broken, noisy): owners whose chain lost a relay, and owners
        whose forwarding-area residual variance exceeds the threshold.
        """
        if not self._trig_owners:
            return set(), set()
        thr = self.config.death_threshold
        res = self._ext_res
        alive = self._ext_alive
        broken = ((res[self._path_mat] < thr) | ~alive[self._path_mat]).any(axis=1)
        am = self._area_mat
        mask = alive[am] & (am != self._dummy)
        counts = mask.sum(axis=1)
        vals = np.where(mask, res[am], 0.0)
        safe = np.maximum(counts, 1)
        mean = vals.sum(axis=1) / safe
        var = (vals * vals).sum(axis=1) / safe - mean * mean
        noisy = (counts > 1) & (var > self.config.variance_threshold)
        return ({self._trig_owners[r] for r in np.flatnonzero(broken)},
                {self._trig_owners[r] for r in np.flatnonzero(noisy)})

    def run_round(self):
        """One data-gathering round: traffic, deaths, re-routing, metrics."""
        self.round_index += 1
        self.residual -= self._drain
        self._ext_res[:-1] = self.residual
        self.charged_total += self._drain_sum
        delivered = self.delivered
        deaths = self._settle_deaths()
        broken, noisy = self._triggered()
        if self.cross_check:
            from .routing import reselect_triggers
            ref = reselect_triggers(self.state, self.nodes, self.config,
                                    residual=self.residual, alive=self.alive)
            assert broken | noisy == ref, f"trigger mismatch round {self.round_index}"
        if deaths:
            self.sync_nodes()
            self._build_caches()
        if broken or noisy or deaths:
            changed = self._reselect(broken | noisy, rotate=noisy - broken)
            if changed or deaths:
                self._rebuild_traffic()
        total = float(self.residual.sum())
        if abs(self.initial_total - (total + self.charged_total)) > 1e-9 * self.initial_total:
            raise AssertionError("energy ledger out of balance")
        return self._metrics(delivered, deaths)

    def _metrics(self, delivered, deaths):
        by_ann = np.bincount(self.annulus_of[1:], weights=self.residual[1:],
                             minlength=self.k)
        pct = 100.0 * by_ann / self.initial_by_annulus
        return RoundMetrics(
            round_index=self.round_index,
            residual_by_annulus=[float(x) for x in by_ann],
            pct_by_annulus=[float(x) for x in pct],
            total_residual=float(self.residual.sum()),
            alive_sensing=self.alive_sensing,
            alive_relay=self.alive_relay,
            delivered=delivered,
            deaths=deaths,
        )

    def sync_nodes(self):
        for nd in self.nodes[1:]:
            nd.residual_energy = float(self.residual[nd.id])
            nd.alive = bool(self.alive[nd.id])

    def run_to_completion(self, rounds_cap=DEFAULT_ROUNDS_CAP, emit_every=1,
                          strategy="vfem"):
        """Iterate rounds until a planned sensing stream is lost or the cap hits."""
        metrics = []
        first_death = None
        lifetime = None
        truncated = False
        while True:
            store = (self.round_index + 1) % emit_every == 0 or self.round_index == 0
            out = self.run_round()
            if out.deaths and first_death is None:
                first_death = self.round_index
            ended = out.delivered < self.planned_streams
            if ended:
                lifetime = self.round_index
            if store or out.deaths or ended:
                metrics.append(out)
            if ended:
                break
            if self.round_index >= rounds_cap:
                truncated = True
                break
        self.sync_nodes()
        by_ann = np.bincount(self.annulus_of[1:], weights=self.residual[1:],
                             minlength=self.k)
        counts = np.maximum(self.annulus_counts, 1)
        summary = LifetimeSummary(
            strategy=strategy,
            planned_streams=self.planned_streams,
            first_death_round=first_death,
            lifetime_round=lifetime,
            rounds_run=self.round_index,
            truncated=truncated,
            final_pct_by_annulus=[float(x) for x in 100.0 * by_ann / self.initial_by_annulus],
            final_mean_residual_by_annulus=[float(x) for x in by_ann / counts],
            annulus_counts=list(self.annulus_counts),
        )
        return summary, metrics


def run_vfem(config, rounds_cap=DEFAULT_ROUNDS_CAP, emit_every=1, seed=None,
             deployment=None):
    """Full pipeline run: deploy (unless given), then simulate to end of life."""
    dep = deployment if deployment is not None else deploy(config, seed=seed)
    sim = Simulation(config, dep.nodes, dep.plan)
    summary, metrics = sim.run_to_completion(rounds_cap, emit_every, strategy="vfem")
    return summary, metrics, dep, sim


# ---------------- baselines ----------------

def geometric_counts(node_count, k, ratio=3.0):
    """Per-annulus populations in an exact inward geometric progression,
    normalized to node_count by largest remainder."""
    weights = [ratio ** (k - 1 - m) for m in range(k)]
    total = sum(weights)
    exact = [node_count * w / total for w in weights]
    counts = [math.floor(e) for e in exact]
    remainder = sorted(range(k), key=lambda m: (counts[m] - exact[m], m))
    for m in remainder[:node_count - sum(counts)]:
        counts[m] += 1
    return counts


def _baseline_nodes(kind, config, rng):
    d_w = config.annulus_width
    k = config.annulus_count
    if kind == UNIFORM_DIRECT:
        pts = uniform_disk(rng, config.node_count, config.radius)
    elif kind == WU_GEOMETRIC:
        counts = geometric_counts(config.node_count, k)
        chunks = []
        for m, c in enumerate(counts):
            r_in, r_out = m * d_w, (m + 1) * d_w
            r = np.sqrt(rng.random(c) * (r_out ** 2 - r_in ** 2) + r_in ** 2)
            theta = 2.0 * math.pi * rng.random(c)
            chunks.append(np.column_stack([r * np.cos(theta), r * np.sin(theta)]))
        pts = np.vstack(chunks)
    else:
        raise ValueError(f"unknown baseline {kind!r}")
    nodes = [Node(0, np.zeros(2), BASE, -1, 0.0, True)]
    for i, p in enumerate(pts):
        ann = min(int(np.hypot(*p) / d_w), k - 1)
        nodes.append(Node(i + 1, p, SENSING, ann, config.initial_energy, True))
    return nodes


class BaselineSimulation:
    """Every node senses and relays; greedy next hop is the in-range alive
    neighbour nearest the base that makes strict progress toward it."""

    def __init__(self, kind, config, rng=None):
        self.kind = kind
        self.config = config
        rng = rng if rng is not None else seed_streams(config.rng_seed)[kind]
        self.nodes = _baseline_nodes(kind, config, rng)
        self.k = config.annulus_count
        self.comm = 1.5 * config.annulus_width * (1.0 + 1e-9)
        self.positions = np.array([nd.position for nd in self.nodes])
        self.base_dist = np.hypot(self.positions[:, 0], self.positions[:, 1])
        self.residual = np.array([nd.residual_energy for nd in self.nodes])
        self.alive = np.array([nd.alive for nd in self.nodes])
        self.round_index = 0
        self.charged_total = 0.0
        self.initial_total = float(self.residual.sum())
        self.annulus_of = np.array([max(nd.annulus, 0) for nd in self.nodes])
        self.annulus_counts = [0] * self.k
        for nd in self.nodes[1:]:
            self.annulus_counts[nd.annulus] += 1
        self.initial_by_annulus = np.array(
            [c * config.initial_energy for c in self.annulus_counts])
        self._rebuild_routes()
        self.planned_streams = self.delivered

    def _next_hop(self, i):
        if self.base_dist[i] <= self.comm:
            return 0
        d = np.hypot(*(self.positions - self.positions[i]).T)
        ok = self.alive & (d <= self.comm) & (self.base_dist < self.base_dist[i] - 1e-12)
        ok[i] = False
        ok[0] = False
        cand = np.flatnonzero(ok)
        if len(cand) == 0:
            return None
        return int(cand[np.argmin(self.base_dist[cand])])

    def _rebuild_routes(self):
        radio = self.config.radio
        bits = self.config.bits_per_round
        drain = np.zeros(len(self.nodes))
        delivered = 0
        hops = {}  # memoized greedy next hop per alive node (None = stuck)
        for i in range(1, len(self.nodes)):
            if not self.alive[i]:
                continue
            chain = []
            cur = i
            while cur != 0:
                if cur not in hops:
                    hops[cur] = self._next_hop(cur)
                nxt = hops[cur]
                if nxt is None:
                    chain = None
                    break
                chain.append((cur, nxt))
                cur = nxt
            if chain is None:
                continue
            delivered += 1
            for sender, receiver in chain:
                hop = float(np.hypot(*(self.positions[sender] - self.positions[receiver])))
                drain[sender] += energy_send(bits, hop, radio)
                if receiver != 0:
                    drain[receiver] += energy_receive(bits, radio)
        self._drain = drain
        self._drain_sum = float(drain.sum())
        self.delivered = delivered

    def run_round(self):
        self.round_index += 1
        self.residual -= self._drain
        self.charged_total += self._drain_sum
        delivered = self.delivered
        dead = np.flatnonzero(self.alive & (self.residual < self.config.death_threshold))
        dead = dead[dead != 0]
        deaths = [int(i) for i in dead]
        if deaths:
            self.alive[dead] = False
            for i in deaths:
                self.nodes[i].alive = False
            self._rebuild_routes()
        total = float(self.residual.sum())
        if abs(self.initial_total - (total + self.charged_total)) > 1e-9 * self.initial_total:
            raise AssertionError("energy ledger out of balance")
        by_ann = np.bincount(self.annulus_of[1:], weights=self.residual[1:],
                             minlength=self.k)
        return RoundMetrics(
            round_index=self.round_index,
            residual_by_annulus=[float(x) for x in by_ann],
            pct_by_annulus=[float(x) for x in 100.0 * by_ann / self.initial_by_annulus],
            total_residual=total,
            alive_sensing=int(self.alive[1:].sum()),
            alive_relay=0,
            delivered=delivered,
            deaths=deaths,
        )

    def run_to_completion(self, rounds_cap=DEFAULT_ROUNDS_CAP, emit_every=1):
        metrics = []
        first_death = None
        lifetime = None
        truncated = False
        while True:
            store = (self.round_index + 1) % emit_every == 0 or self.round_index == 0
            out = self.run_round()
            if out.deaths and first_death is None:
                first_death = self.round_index
            ended = out.delivered < self.planned_streams
            if ended:
                lifetime = self.round_index
            if store or out.deaths or ended:
                metrics.append(out)
            if ended:
                break
            if self.round_index >= rounds_cap:
                truncated = True
                break
        for nd in self.nodes[1:]:
            nd.residual_energy = float(self.residual[nd.id])
        by_ann = np.bincount(self.annulus_of[1:], weights=self.residual[1:],
                             minlength=self.k)
        counts = np.maximum(self.annulus_counts, 1)
        summary = LifetimeSummary(
            strategy=self.kind,
            planned_streams=self.planned_streams,
            first_death_round=first_death,
            lifetime_round=lifetime,
            rounds_run=self.round_index,
            truncated=truncated,
            final_pct_by_annulus=[float(x) for x in 100.0 * by_ann / self.initial_by_annulus],
            final_mean_residual_by_annulus=[float(x) for x in by_ann / counts],
            annulus_counts=list(self.annulus_counts),
        )
        return summary, metrics


def run_baseline(kind, config, rounds_cap=DEFAULT_ROUNDS_CAP, emit_every=1, seed=None):
    """Simulate one baseline strategy with the shared energy model and metrics."""
    rng = seed_streams(config.rng_seed if seed is None else seed)[kind]
    sim = BaselineSimulation(kind, config, rng=rng)
    return sim.run_to_completion(rounds_cap, emit_every)
