"""Minimum load shedding under DC power flow after corridor outages.

For each island of the surviving network the LP

    minimise    sum(shed)
    subject to  base * B' theta = g - (d - shed)           (nodal balance)
                |base * (theta_i - theta_j) / x_l| <= limit_l
                pmin <= g <= pmax,  0 <= shed <= d,  theta_ref = 0

is solved, with the lowest-id bus of the island as angle reference.
Islands without generation shed all their load.
"""

import json
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .grid_case import components

log = logging.getLogger(__name__)

BASE_MVA = 100.0


class LoadShedFailure(RuntimeError):
    def __init__(self, failed, message):
        self.failed = tuple(sorted(failed))
        super().__init__(f"load shedding LP failed for outage set {self.failed}: {message}")


@dataclass
class SheddingSolution:
    total: float
    shed: dict           # bus -> MW
    dispatch: list       # MW per generator, case order
    flows: dict          # surviving corridor id -> MW (from -> to positive)
    islands: list
    status: str = "optimal"
    failed: tuple = ()
    binding: list = field(default_factory=list)


class LoadShedModel:
    """Reusable LP builder for one network case."""

    def __init__(self, case):
        self.case = case
        self.bus_ids = case.bus_ids
        self.load = {b: case.buses[b] for b in self.bus_ids}

    def islands(self, failed=()):
        return components(self.case, failed)

    def solve(self, failed=()):
        failed = frozenset(failed)
        unknown = failed - set(self.case.corridor_ids)
        if unknown:
            raise KeyError(f"unknown corridor ids {sorted(unknown)}")
        islands = self.islands(failed)
        shed = {}
        dispatch = np.zeros(len(self.case.generators))
        flows = {}
        binding = []
        for island in islands:
            self._solve_island(island, failed, shed, dispatch, flows, binding)
        total = float(sum(shed.values()))
        return SheddingSolution(total=total, shed=shed, dispatch=dispatch.tolist(), flows=flows,
                                islands=islands, failed=tuple(sorted(failed)), binding=binding)

    def _solve_island(self, island, failed, shed, dispatch, flows, binding):
        buses = list(island)
        members = set(buses)
        gens = [i for i, g in enumerate(self.case.generators) if g.bus in members]
        lines = [c for c in self.case.corridors
                 if c.id not in failed and c.from_bus in members and c.to_bus in members]
        load = np.array([self.load[b] for b in buses])
        if not gens:
            for b, d in zip(buses, load):
                shed[b] = float(d)
            return
        pos = {b: i for i, b in enumerate(buses)}
        nb, ng, nl = len(buses), len(gens), len(lines)

        # flow_l = base * (theta_from - theta_to) / x_l  ->  F @ theta
        F = np.zeros((nl, nb))
        for k, c in enumerate(lines):
            F[k, pos[c.from_bus]] = BASE_MVA / c.x
            F[k, pos[c.to_bus]] = -BASE_MVA / c.x
        incidence = np.zeros((nl, nb))
        for k, c in enumerate(lines):
            incidence[k, pos[c.from_bus]] = 1.0
            incidence[k, pos[c.to_bus]] = -1.0
        Bp = incidence.T @ F  # net injection leaving each bus
        Cg = np.zeros((nb, ng))
        for j, gi in enumerate(gens):
            Cg[pos[self.case.generators[gi].bus], j] = 1.0

        A_eq = np.hstack([Bp, -Cg, -np.eye(nb)])
        b_eq = -load
        limits = np.array([c.limit for c in lines])
        A_ub = np.vstack([np.hstack([F, np.zeros((nl, ng + nb))]),
                          np.hstack([-F, np.zeros((nl, ng + nb))])]) if nl else None
        b_ub = np.concatenate([limits, limits]) if nl else None
        cost = np.concatenate([np.zeros(nb + ng), np.ones(nb)])
        gen_bounds = [(self.case.generators[gi].pmin, self.case.generators[gi].pmax) for gi in gens]
        shed_bounds = [(0.0, d) for d in load]

        res = None
        for ref in range(nb):
            theta_bounds = [(0.0, 0.0) if i == ref else (None, None) for i in range(nb)]
            res = linprog(cost, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                          bounds=theta_bounds + gen_bounds + shed_bounds, method="highs")
            if res.status == 0:
                break
            log.warning("LP status %s for outage %s with reference bus %s; retrying",
                        res.status, sorted(failed), buses[ref])
            if ref >= 1:
                break
        if res is None or res.status != 0:
            raise LoadShedFailure(failed, res.message if res is not None else "no solve")

        theta = res.x[:nb]
        g = res.x[nb:nb + ng]
        s = np.clip(res.x[nb + ng:], 0.0, load)
        for b, v in zip(buses, s):
            shed[b] = float(v)
        for j, gi in enumerate(gens):
            dispatch[gi] = float(g[j])
            if g[j] >= self.case.generators[gi].pmax - 1e-6:
                binding.append(f"gen@{self.case.generators[gi].bus}:pmax")
        f = F @ theta
        for k, c in enumerate(lines):
            flows[c.id] = float(f[k])
            if abs(f[k]) >= c.limit - 1e-6:
                binding.append(f"corridor {c.id}:limit")


def islands(case, failed=()):
    return components(case, failed)


def min_load_shed(case, failed=()):
    return LoadShedModel(case).solve(failed)


def check_solution(case, sol, tol=1e-6):
    """Return a list of constraint violations (empty when feasible)."""
    problems = []
    failed = set(sol.failed)
    for b in case.bus_ids:
        s = sol.shed.get(b, 0.0)
        if s < -tol or s > case.buses[b] + tol:
            problems.append(f"shed at bus {b} = {s} outside [0, {case.buses[b]}]")
    for g, p in zip(case.generators, sol.dispatch):
        if p < g.pmin - tol or p > g.pmax + tol:
            problems.append(f"generator at bus {g.bus} dispatch {p} outside limits")
    for c in case.corridors:
        if c.id in failed:
            continue
        f = sol.flows.get(c.id, 0.0)
        if abs(f) > c.limit + tol:
            problems.append(f"corridor {c.id} flow {f} exceeds {c.limit}")
    net = {b: -(case.buses[b] - sol.shed.get(b, 0.0)) for b in case.bus_ids}
    for g, p in zip(case.generators, sol.dispatch):
        net[g.bus] += p
    for c in case.corridors:
        if c.id in failed:
            continue
        f = sol.flows.get(c.id, 0.0)
        net[c.from_bus] -= f
        net[c.to_bus] += f
    for island in sol.islands:
        for b in island:
            if abs(net[b]) > tol:
                problems.append(f"bus {b} imbalance {net[b]:.3g} MW")
    return problems


def dump_state(sol, state_id):
    """One JSON line describing a solved outage state."""
    return json.dumps({
        "state": state_id, "failed": list(sol.failed), "islands": sol.islands,
        "objective": round(sol.total, 9), "binding": sol.binding,
    }, sort_keys=True)
