"""Resilience indices and hardening strategies for the bundled case.

Uses the packaged run configuration (27 storm scenarios, outage states up
to order 2, hybrid failure probabilities).  Takes a few seconds.

    python demos/resilience_and_strategies.py
"""

from typhoon_resilience.grid_case import bundled_path
from typhoon_resilience.pipeline import RunConfig, run_assessment
from typhoon_resilience.strategy_eval import evaluate_strategy, load_strategies, rank_strategies

cfg = RunConfig.from_file(bundled_path("run.toml"))
a = run_assessment(cfg)
print(f"R_sys model-driven {a.model.R_sys:.3f} MW, hybrid {a.hybrid.R_sys:.3f} MW, target {cfg.R_set} MW")
print("cumulative by order:", ", ".join(f"{r:.3f}" for r in a.hybrid.by_order))

print("\nmost critical corridors (hybrid):")
for cid, v in a.hybrid.ranking()[:8]:
    print(f"  corridor {cid:2d}: {v:.4f} MW")

results = [evaluate_strategy(s, a.inputs.case, a.enum, a.P_hybrid, a.Pw, a.hybrid.R_sys, cfg.R_set)
           for s in load_strategies(bundled_path("strategies.csv"))]
print("\npriority  strategy    cost $M   gain %   $/pct      post MW  meets")
for i, r in enumerate(rank_strategies(results), start=1):
    print(f"{i:8d}  {r.name:10s} {r.C / 1e6:8.1f} {r.dRE:8.2f} {r.C_per_dRE:10.3g} {r.post_index:8.3f}  "
          f"{r.meets_target}")
