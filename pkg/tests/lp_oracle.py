"""Exhaustive-search reference for minimum load shedding on tiny cases.

Served load at each load bus is swept over a 0.1 MW grid.  With one
generator its output is fixed by balance; with two, the first generator's
output is a free scalar and every flow limit is an interval on it, so
feasibility is exact.  Flows come from a PTDF built with a dense solve.
"""

import itertools

import networkx as nx
import numpy as np

STEP = 0.1


def _ptdf(buses, lines):
    pos = {b: i for i, b in enumerate(buses)}
    n = len(buses)
    A = np.zeros((len(lines), n))
    for k, c in enumerate(lines):
        A[k, pos[c.from_bus]] = 1.0
        A[k, pos[c.to_bus]] = -1.0
    D = np.diag([1.0 / c.x for c in lines])
    B = A.T @ D @ A
    ptdf = np.zeros((len(lines), n))
    if n > 1:
        ptdf[:, 1:] = D @ A[:, 1:] @ np.linalg.inv(B[1:, 1:])
    return ptdf, pos


def island_min_shed(case, buses, failed):
    members = set(buses)
    lines = [c for c in case.corridors if c.id not in failed and c.from_bus in members and c.to_bus in members]
    gens = [g for g in case.generators if g.bus in members]
    loads = [(b, case.buses[b]) for b in buses if case.buses[b] > 0]
    total = sum(d for _, d in loads)
    if not gens:
        return total
    if len(gens) > 2:
        raise NotImplementedError("oracle handles at most two generators per island")
    ptdf, pos = _ptdf(list(buses), lines)
    limits = np.array([c.limit for c in lines])
    grids = [np.round(np.arange(0.0, d + STEP / 2, STEP), 10) for _, d in loads]
    mesh = np.meshgrid(*grids, indexing="ij") if grids else []
    S = np.stack([m.ravel() for m in mesh], axis=1) if grids else np.zeros((1, 0))
    served = S.sum(axis=1)
    # injections from loads only (negative), shape (combos, buses)
    P = np.zeros((len(S), len(buses)))
    for j, (b, _) in enumerate(loads):
        P[:, pos[b]] -= S[:, j]
    ok = np.ones(len(S), dtype=bool)
    if len(gens) == 1:
        g = gens[0]
        P[:, pos[g.bus]] += served
        ok &= (served <= g.pmax + 1e-9) & (served >= g.pmin - 1e-9)
        if len(lines):
            f = P @ ptdf.T
            ok &= np.all(np.abs(f) <= limits + 1e-9, axis=1)
    else:
        g1, g2 = gens
        # g2 = served - g1; flows f = f0 + g1 * (col1 - col2) with f0 from loads + served at g2
        P[:, pos[g2.bus]] += served
        f0 = P @ ptdf.T if len(lines) else np.zeros((len(S), 0))
        slope = ptdf[:, pos[g1.bus]] - ptdf[:, pos[g2.bus]] if len(lines) else np.zeros(0)
        lo = np.maximum(g1.pmin, served - g2.pmax)
        hi = np.minimum(g1.pmax, served - g2.pmin)
        for k in range(len(lines)):
            a = slope[k]
            if abs(a) < 1e-12:
                ok &= np.abs(f0[:, k]) <= limits[k] + 1e-9
                continue
            l1 = (-limits[k] - f0[:, k]) / a
            l2 = (limits[k] - f0[:, k]) / a
            lo = np.maximum(lo, np.minimum(l1, l2))
            hi = np.minimum(hi, np.maximum(l1, l2))
        ok &= lo <= hi + 1e-9
    best = served[ok].max() if np.any(ok) else 0.0
    return total - best


def exhaustive_min_shed(case, failed=()):
    failed = set(failed)
    g = nx.Graph()
    g.add_nodes_from(case.bus_ids)
    g.add_edges_from((c.from_bus, c.to_bus) for c in case.corridors if c.id not in failed)
    return sum(island_min_shed(case, sorted(comp), failed) for comp in nx.connected_components(g))


def all_contingencies(case):
    ids = case.corridor_ids
    for j in range(len(ids) + 1):
        yield from itertools.combinations(ids, j)
