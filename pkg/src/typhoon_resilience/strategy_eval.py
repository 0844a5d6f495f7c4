"""Cost and effect of corridor hardening strategies.

For a strategy reinforcing corridor set ``S``:

* ``C``        = total length of S (km) x unit cost ($/km)
* ``RE``       = R_sys - R_sys with S hardened (MW)
* ``dRE``      = 100 * RE / R_sys (%)
* ``C/dRE``    = cost per percent of index reduction
* meets target when ``R_sys - RE <= R_set``.

Strategies rank by ascending ``C/dRE``, then lower cost, then name.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from .resilience_iise import resilience_gain

DEFAULT_COST_PER_KM = 1.0e6


class UnknownCorridor(KeyError):
    pass


@dataclass(frozen=True)
class Strategy:
    name: str
    corridors: tuple
    cost_per_km: float = DEFAULT_COST_PER_KM

    def __post_init__(self):
        if not self.corridors:
            raise ValueError(f"strategy {self.name!r} reinforces no corridor")


@dataclass(frozen=True)
class StrategyResult:
    name: str
    C: float
    RE: float
    dRE: float
    C_per_dRE: float
    post_index: float
    meets_target: object   # bool, or None without a target


def result_from_values(name, C, RE, R_sys, R_set=None):
    """Assemble a StrategyResult from cost, improvement and the baseline index."""
    dRE = 100.0 * RE / R_sys if R_sys > 0 else 0.0
    per = C / dRE if dRE > 0 else math.inf
    post = R_sys - RE
    meets = None if R_set is None else bool(post <= R_set)
    return StrategyResult(name, float(C), float(RE), dRE, per, post, meets)


def strategy_cost(case, strategy):
    total = 0.0
    for cid in strategy.corridors:
        try:
            total += case.corridor(cid).length_km
        except KeyError:
            raise UnknownCorridor(cid) from None
    return total * strategy.cost_per_km


def evaluate_strategy(strategy, case, enum, P, Pw, R_sys, R_set=None, mode="zero"):
    """Evaluate one strategy against an enumeration and its probability matrix."""
    ids = case.corridor_ids
    cols = []
    for cid in strategy.corridors:
        if cid not in ids:
            raise UnknownCorridor(cid)
        cols.append(ids.index(cid))
    RE = resilience_gain(enum, P, Pw, cols, mode)
    return result_from_values(strategy.name, strategy_cost(case, strategy), RE, R_sys, R_set)


def rank_strategies(results):
    return sorted(results, key=lambda r: (r.C_per_dRE, r.C, r.name))


def normalized_metrics(results):
    """Each of C, RE, dRE and C/dRE divided by its maximum over the strategies."""
    cols = {
        "C": np.array([r.C for r in results]),
        "RE": np.array([r.RE for r in results]),
        "dRE": np.array([r.dRE for r in results]),
        "C_per_dRE": np.array([r.C_per_dRE for r in results]),
    }
    out = []
    for i, r in enumerate(results):
        row = {"name": r.name}
        for k, v in cols.items():
            finite = v[np.isfinite(v)]
            top = finite.max() if finite.size else 0.0
            row[k] = float(v[i] / top) if top > 0 and np.isfinite(v[i]) else 0.0
        out.append(row)
    return out


def load_strategies(path, cost_per_km=DEFAULT_COST_PER_KM):
    """Read ``name,corridors`` rows; corridors is a comma-separated id list (quoted)."""
    out = []
    with open(path, newline="") as fh:
        for r in csv.DictReader(ln for ln in fh if ln.strip() and not ln.startswith("#")):
            ids = tuple(int(x) for x in r["corridors"].replace(";", ",").split(",") if x.strip())
            out.append(Strategy(r["name"].strip(), ids, cost_per_km))
    return out


def format_table(ranked):
    lines = ["priority,strategy,C_usd,RE_MW,dRE_pct,C_per_dRE_usd,post_index_MW,meets_target"]
    for i, r in enumerate(ranked, start=1):
        lines.append(f"{i},{r.name},{r.C:.2f},{r.RE:.9e},{r.dRE:.4f},{r.C_per_dRE:.2f},"
                     f"{r.post_index:.9e},{'NA' if r.meets_target is None else int(r.meets_target)}")
    return "\n".join(lines) + "\n"


def format_normalized(results):
    lines = ["strategy,C,RE,dRE,C_per_dRE"]
    for row in normalized_metrics(results):
        lines.append(f"{row['name']},{row['C']:.6f},{row['RE']:.6f},{row['dRE']:.6f},{row['C_per_dRE']:.6f}")
    return "\n".join(lines) + "\n"
