"""Run configuration and the end-to-end assessment pipeline.

A run is described by one TOML file with a ``[paths]`` table and a
``[run]`` table of numeric knobs.  Relative paths resolve against the
config file's directory; ``bundled:<name>`` points into the package data.
Command-line flags override config values, which override defaults.

Every subcommand writes its artifacts plus ``manifest.json`` (config
digest, input file digests, seed, library versions, output digests) into
the output directory.  Nothing in the artifacts depends on wall-clock time
or on the output location, so identical inputs give identical bytes.
"""

import contextlib
import hashlib
import json
import logging
import math
import platform
import shutil
import tempfile
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np
import scipy

from . import __version__, ahp_decision, feature_engine, importance, typhoon_field
from ._toml import load_toml
from .failure_model import UnitTable, scenario_failure_profile, scenario_profiles
from .grid_case import CaseError, TerrainGrid, bundled_path, load_case
from .load_shed import LoadShedFailure
from .resilience_iise import ImpactOracle, assess, build_enumeration, format_report
from .strategy_eval import (UnknownCorridor, evaluate_strategy, format_normalized, format_table,
                            load_strategies, rank_strategies)

log = logging.getLogger(__name__)

MODES = ("model-driven", "hybrid")
PATH_KEYS = ("case", "geography", "terrain", "typhoon", "scenarios", "dataset", "weights", "pairwise",
             "strategies")
EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC, EXIT_TARGET = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


class StageError(RuntimeError):
    """A pipeline stage failed; ``code`` is the process exit status."""

    def __init__(self, stage, cause, code):
        self.stage, self.cause, self.code = stage, cause, code
        super().__init__(f"stage '{stage}' failed: {type(cause).__name__}: {cause}")


VALIDATION_ERRORS = (ConfigError, CaseError, OSError, KeyError, ahp_decision.NonReciprocalMatrix,
                     ahp_decision.DimensionMismatch, typhoon_field.DegenerateMarginal, UnknownCorridor,
                     importance.SingleClassDataset, importance.AllColumnsConstant,
                     feature_engine.NondegenerateRangeRequired)
# stages whose errors all come from malformed inputs
INPUT_STAGES = {"config", "load-case", "load-terrain", "load-typhoon", "load-scenarios", "load-dataset",
                "load-pairwise", "load-strategies"}


@contextlib.contextmanager
def stage(name):
    log.info("stage %s", name)
    try:
        yield
    except StageError:
        raise
    except Exception as exc:  # noqa: BLE001 - re-raised with the stage name
        if isinstance(exc, LoadShedFailure):
            code = EXIT_NUMERIC
        elif isinstance(exc, VALIDATION_ERRORS) or name in INPUT_STAGES:
            code = EXIT_VALIDATION
        else:
            code = EXIT_NUMERIC
        raise StageError(name, exc, code) from exc


@dataclass
class RunConfig:
    base_dir: str = "."
    # paths
    case: str = "bundled:rts79"
    geography: str = None
    terrain: str = None
    typhoon: str = None
    scenarios: str = None
    dataset: str = None          # a CSV file or "synthetic"
    weights: str = None          # precomputed (scheme, feature, weight) table
    pairwise: str = None
    strategies: str = None
    # knobs
    mode: str = "model-driven"
    dt_min: float = None
    spacing_m: float = 500.0
    J: int = 2
    R_set: float = None
    trees: int = 100
    max_depth: int = None
    min_leaf: int = 1
    seed: int = 0
    synthetic_size: int = 640
    cost_per_km: float = 1.0e6
    method: str = "geometric"
    hardening: str = "zero"
    oob_mode: str = "permute"
    op_time_sign: str = "-"
    workers: int = 1
    force_k: float = None

    @classmethod
    def from_file(cls, path):
        path = Path(path)
        try:
            raw = load_toml(path)
        except Exception as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
        flat = {}
        for table in ("paths", "run"):
            flat.update(raw.pop(table, {}))
        flat.update(raw)
        return cls.from_mapping(flat, base_dir=str(path.resolve().parent))

    @classmethod
    def from_mapping(cls, values, base_dir="."):
        known = {f.name for f in fields(cls)} - {"base_dir"}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        return cls(base_dir=base_dir, **values)

    def override(self, **values):
        """Copy with non-None values replaced (flag precedence)."""
        data = asdict(self)
        data.update({k: v for k, v in values.items() if v is not None})
        return RunConfig(**data)

    def resolve(self, key):
        value = getattr(self, key)
        if value is None:
            return None
        if key == "dataset" and value == "synthetic":
            return value
        if value.startswith("bundled:"):
            return bundled_path(value[len("bundled:"):])
        p = Path(value)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def validate(self, needs=()):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if int(self.J) != self.J or self.J < 1:
            raise ConfigError(f"J must be an integer >= 1, got {self.J}")
        if self.trees < 1:
            raise ConfigError("trees must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.spacing_m <= 0:
            raise ConfigError("spacing_m must be > 0")
        if self.dt_min is not None and self.dt_min <= 0:
            raise ConfigError("dt_min must be > 0")
        if self.cost_per_km <= 0:
            raise ConfigError("cost_per_km must be > 0")
        if self.R_set is not None and self.R_set < 0:
            raise ConfigError("R_set must be >= 0")
        if self.hardening not in ("zero", "redundant"):
            raise ConfigError(f"hardening must be 'zero' or 'redundant', got {self.hardening!r}")
        if self.method not in ("geometric", "column"):
            raise ConfigError(f"method must be 'geometric' or 'column', got {self.method!r}")
        if self.op_time_sign not in ("+", "-"):
            raise ConfigError("op_time_sign must be '+' or '-'")
        k_hi = feature_engine.K_MIN + feature_engine.K_SPAN
        if self.force_k is not None and not feature_engine.K_MIN <= self.force_k <= k_hi:
            raise ConfigError(f"force_k must lie in [{feature_engine.K_MIN}, {k_hi}]")
        for key in needs:
            if getattr(self, key) is None:
                raise ConfigError(f"this subcommand needs the '{key}' path")
        for f in self.case_files():
            if not f.exists():
                raise ConfigError(f"case file does not exist: {f}")
        for key in PATH_KEYS[1:]:
            p = self.resolve(key)
            if p is None or p == "synthetic":
                continue
            if not Path(p).exists():
                raise ConfigError(f"{key} path does not exist: {p}")
        return self

    def case_files(self):
        """(buses, generators, corridors) CSV paths of the configured case."""
        if self.case == "bundled:rts79":
            return tuple(bundled_path(f"rts79_{n}.csv") for n in ("buses", "generators", "corridors"))
        d = Path(self.resolve("case"))
        return d / "buses.csv", d / "generators.csv", d / "corridors.csv"

    def validate_hybrid(self):
        if self.dataset is None and self.weights is None:
            raise ConfigError("hybrid mode needs a dataset (or a precomputed weights table)")
        if self.pairwise is None:
            raise ConfigError("hybrid mode needs a pairwise matrix")

    def canonical(self):
        """Config values that determine the results (no base_dir, sorted keys)."""
        data = asdict(self)
        data.pop("base_dir")
        data.pop("workers")  # parallelism never changes results
        return data

    def digest(self):
        h = hashlib.sha256(json.dumps(self.canonical(), sort_keys=True).encode())
        for key, info in sorted(self.input_digests().items()):
            h.update(f"{key}={info}".encode())
        return h.hexdigest()

    def input_digests(self):
        out = {}
        for key in PATH_KEYS:
            p = self.resolve(key)
            if p is None or p == "synthetic":
                continue
            files = self.case_files() if key == "case" else [Path(p)]
            h = hashlib.sha256()
            for f in files:
                h.update(Path(f).read_bytes())
            out[key] = h.hexdigest()
        return out


# --------------------------------------------------------------------------
# inputs

def load_network(cfg):
    return load_case(*cfg.case_files(), geography_path=cfg.resolve("geography"))


def load_storm(cfg):
    base = typhoon_field.load_typhoon(cfg.resolve("typhoon"))
    if cfg.dt_min is not None:
        base = replace(base, dt=float(cfg.dt_min))
    return base


def load_scenario_set(cfg, base):
    if cfg.scenarios is None:
        return typhoon_field.single_scenario(base)
    marginals, bins = typhoon_field.load_marginals(cfg.resolve("scenarios"))
    return typhoon_field.enumerate_scenarios(marginals, bins, base)


def feature_ranges(cfg):
    return feature_engine.FeatureRanges.default(op_time_sign=cfg.op_time_sign)


@dataclass
class WeightOutcome:
    schemes: list
    decision: object
    selected: np.ndarray      # normalised weights of the chosen scheme
    source: str
    method: str = "geometric"
    dataset: object = None


def derive_weights(cfg):
    """Weight schemes from the dataset (or a precomputed table) and the AHP choice."""
    ranges = feature_ranges(cfg)
    data = None
    if cfg.dataset is not None:
        with stage("load-dataset"):
            if cfg.dataset == "synthetic":
                data = importance.synthesize_dataset(cfg.seed, cfg.synthetic_size, ranges=ranges)
            else:
                data = importance.load_dataset(cfg.resolve("dataset"))
        with stage("importance"):
            schemes, _ = importance.all_schemes(data, cfg.trees, cfg.max_depth, cfg.min_leaf, cfg.seed,
                                                cfg.oob_mode, ranges)
        source = data.provenance if cfg.dataset == "synthetic" else f"dataset:{cfg.dataset}"
    else:
        with stage("load-dataset"):
            schemes = importance.load_schemes(cfg.resolve("weights"))
        source = f"weights:{cfg.weights}"
    with stage("load-pairwise"):
        A = ahp_decision.load_pairwise(cfg.resolve("pairwise"))
    with stage("ahp"):
        decision = ahp_decision.decide(schemes, A, cfg.method)
        w = np.asarray(schemes[decision.selected].weights, dtype=float)
        selected = w / w.sum()
    return WeightOutcome(schemes, decision, selected, source, cfg.method, data)


@dataclass
class Inputs:
    case: object
    terrain: object
    base: object
    scenarios: object
    table: object


def load_inputs(cfg, with_scenarios=True):
    with stage("load-case"):
        case = load_network(cfg)
    with stage("load-terrain"):
        terrain = TerrainGrid.load(cfg.resolve("terrain")) if cfg.terrain else None
    with stage("load-typhoon"):
        if cfg.typhoon is None:
            raise ConfigError("a typhoon file is required")
        base = load_storm(cfg)
    scen = None
    if with_scenarios:
        with stage("load-scenarios"):
            scen = load_scenario_set(cfg, base)
    with stage("discretize"):
        table = UnitTable.build(case, cfg.spacing_m, terrain)
    return Inputs(case, terrain, base, scen, table)


def probability_matrices(cfg, inputs, weights=None):
    """(P_model, P_hybrid, Pw, profiles) over the scenario set."""
    with stage("failure-model"):
        profiles = scenario_profiles(inputs.case, inputs.table, inputs.scenarios, weights,
                                     feature_ranges(cfg), force_k=cfg.force_k)
        P_model = np.array([p.P_model for p in profiles])
        P_mc = np.array([p.P_mc for p in profiles])
        Pw = inputs.scenarios.probabilities
        if not np.all(np.isfinite(P_mc)):
            raise FloatingPointError("non-finite corridor failure probability")
    return P_model, P_mc, Pw, profiles


# --------------------------------------------------------------------------
# subcommands; each returns (artifacts dict name -> text, exit code)

def _fmt(x):
    return f"{x:.9e}"


def cmd_simulate_wind(cfg):
    inputs = load_inputs(cfg, with_scenarios=False)
    with stage("wind-field"):
        case, params = inputs.case, inputs.base
        times = typhoon_field.simulation_times(params, case.bbox())
        mids = np.array([c.midpoint for c in case.corridors])
        speed, _ = (typhoon_field.wind_series(params, times, mids[:, 0], mids[:, 1]) if len(times)
                    else (np.zeros((0, len(mids))), None))
    lines = ["time_h,corridor_id,wind_ms"]
    for i, t in enumerate(times):
        for j, c in enumerate(case.corridors):
            lines.append(f"{t:.4f},{c.id},{speed[i, j]:.6f}")
    return {"wind.csv": "\n".join(lines) + "\n"}, EXIT_OK


def cmd_failure_rates(cfg):
    weights = None
    if cfg.mode == "hybrid":
        weights = derive_weights(cfg).selected
    inputs = load_inputs(cfg, with_scenarios=False)
    with stage("failure-model"):
        prof = scenario_failure_profile(inputs.case, inputs.table, inputs.base, 1.0, weights,
                                        feature_ranges(cfg), force_k=cfg.force_k)
    lines = ["time_h,corridor_id,p_model,p_comprehensive"]
    for i, t in enumerate(prof.times):
        for j, cid in enumerate(prof.corridor_ids):
            lines.append(f"{t:.4f},{cid},{_fmt(prof.curve_model[i, j])},{_fmt(prof.curve_mc[i, j])}")
    summary = ["corridor_id,P_model,P_comprehensive,k_min,k_max,n_units"]
    off = list(inputs.table.offsets) + [len(inputs.table)]
    for j, cid in enumerate(prof.corridor_ids):
        k = prof.k[off[j]:off[j + 1]]
        summary.append(f"{cid},{_fmt(prof.P_model[j])},{_fmt(prof.P_mc[j])},{k.min():.6f},{k.max():.6f},"
                       f"{len(k)}")
    return {"failure_rates.csv": "\n".join(lines) + "\n",
            "corridor_probabilities.csv": "\n".join(summary) + "\n"}, EXIT_OK


def format_weights_report(outcome):
    d = outcome.decision
    pr = d.priority
    lines = [f"source = {outcome.source}", f"method = {outcome.method}",
             f"lambda_max = {pr.lambda_max:.6f}", f"CR = {pr.cr:.6f}", "",
             "feature,q"]
    lines += [f"{f},{v:.6f}" for f, v in zip(feature_engine.FEATURES, pr.q)]
    lines += ["", "scheme,score,selected"]
    lines += [f"{n},{s:.6f},{int(i == d.selected)}" for i, (n, s) in enumerate(zip(d.names, d.scores))]
    if d.tie:
        lines.append("# scores tied; the first scheme in file order was kept")
    lines += ["", "feature,selected_weight"]
    lines += [f"{f},{v:.6f}" for f, v in zip(feature_engine.FEATURES, outcome.selected)]
    return "\n".join(lines) + "\n"


def _schemes_csv(schemes):
    lines = ["scheme,feature,weight"]
    for s in schemes:
        lines += [f"{s.name},{f},{v:.6f}" for f, v in zip(s.features, s.weights)]
    return "\n".join(lines) + "\n"


def cmd_weights(cfg):
    outcome = derive_weights(cfg)
    return {"schemes.csv": _schemes_csv(outcome.schemes),
            "weights_report.txt": format_weights_report(outcome)}, EXIT_OK


@dataclass
class Assessment:
    enum: object
    P_model: np.ndarray
    P_hybrid: np.ndarray
    Pw: np.ndarray
    model: object
    hybrid: object
    weights: object
    inputs: object

    @property
    def active(self):
        return self.hybrid if self.hybrid is not None else self.model

    @property
    def P_active(self):
        return self.P_hybrid if self.hybrid is not None else self.P_model


def run_assessment(cfg):
    outcome = None
    if cfg.mode == "hybrid":
        outcome = derive_weights(cfg)
    inputs = load_inputs(cfg)
    P_model, P_mc, Pw, _ = probability_matrices(cfg, inputs, None if outcome is None else outcome.selected)
    with stage("enumerate"):
        oracle = ImpactOracle(inputs.case, cfg.workers)
        enum = build_enumeration(oracle, len(inputs.case.corridors), int(cfg.J))
    with stage("resilience"):
        ids = inputs.case.corridor_ids
        model = assess(enum, P_model, Pw, ids, label="model-driven")
        hybrid = assess(enum, P_mc, Pw, ids, label="hybrid") if outcome is not None else None
    return Assessment(enum, P_model, P_mc if outcome else None, Pw, model, hybrid, outcome, inputs)


def format_comparison(model, hybrid):
    """Side-by-side ranked indices (R_sys first, then corridors)."""
    lines = ["rank,model_indicator,model_MW,hybrid_indicator,hybrid_MW",
             f"0,R_sys,{_fmt(model.R_sys)},R_sys,{_fmt(hybrid.R_sys)}"]
    for i, ((cm, vm), (ch, vh)) in enumerate(zip(model.ranking(), hybrid.ranking()), start=1):
        lines.append(f"{i},R_{cm},{_fmt(vm)},R_{ch},{_fmt(vh)}")
    return "\n".join(lines) + "\n"


def _probability_table(a):
    ids = a.inputs.case.corridor_ids
    lines = ["scenario,deltaP0_hPa,vT_kmh,heading_deg,P_w,corridor_id,p_model,p_hybrid"]
    for w, (params, pw) in enumerate(a.inputs.scenarios):
        for j, cid in enumerate(ids):
            ph = a.P_hybrid[w, j] if a.P_hybrid is not None else a.P_model[w, j]
            lines.append(f"{w},{params.deltaP0:.6f},{params.vT:.6f},{params.heading:.6f},{_fmt(pw)},{cid},"
                         f"{_fmt(a.P_model[w, j])},{_fmt(ph)}")
    return "\n".join(lines) + "\n"


def cmd_assess(cfg, strict=False):
    a = run_assessment(cfg)
    ids = a.inputs.case.corridor_ids
    out = {"assess_report.txt": format_report(a.active, ids, cfg.R_set),
           "probabilities.csv": _probability_table(a)}
    if a.hybrid is not None:
        out["assess_model_driven.txt"] = format_report(a.model, ids, cfg.R_set)
        out["comparison.csv"] = format_comparison(a.model, a.hybrid)
        out["weights_report.txt"] = format_weights_report(a.weights)
    code = EXIT_OK
    if strict and cfg.R_set is not None and a.active.R_sys > cfg.R_set:
        code = EXIT_TARGET
    return out, code


def cmd_strategies(cfg):
    with stage("load-strategies"):
        strategies = load_strategies(cfg.resolve("strategies"), cfg.cost_per_km)
    a = run_assessment(cfg)
    with stage("strategies"):
        R = a.active.R_sys
        results = [evaluate_strategy(s, a.inputs.case, a.enum, a.P_active, a.Pw, R, cfg.R_set, cfg.hardening)
                   for s in strategies]
        ranked = rank_strategies(results)
    head = f"# R_sys_MW = {_fmt(R)}; mode = {cfg.mode}; hardening = {cfg.hardening}"
    if cfg.R_set is not None:
        head += f"; R_set_MW = {_fmt(cfg.R_set)}"
    return {"strategies.csv": head + "\n" + format_table(ranked),
            "strategies_normalized.csv": format_normalized(results)}, EXIT_OK


COMMANDS = {
    "simulate-wind": (cmd_simulate_wind, ("typhoon",)),
    "failure-rates": (cmd_failure_rates, ("typhoon",)),
    "weights": (cmd_weights, ()),
    "assess": (cmd_assess, ("typhoon",)),
    "strategies": (cmd_strategies, ("typhoon", "strategies")),
}


def manifest(cfg, subcommand, artifacts):
    data = {
        "subcommand": subcommand,
        "config": cfg.canonical(),
        "config_digest": cfg.digest(),
        "inputs": cfg.input_digests(),
        "seed": cfg.seed,
        "versions": {"python": platform.python_version(), "numpy": np.__version__,
                     "scipy": scipy.__version__, "typhoon_resilience": __version__},
        "outputs": {name: hashlib.sha256(text.encode()).hexdigest() for name, text in sorted(artifacts.items())},
    }
    return json.dumps(data, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(x):
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    raise TypeError(type(x).__name__)


def run(subcommand, cfg, out_dir, strict=False):
    """Run one subcommand and write its artifacts; returns the exit code.

    Artifacts are staged in a scratch directory and only moved into
    ``out_dir`` when the subcommand completes, so a failed run leaves no
    partial files behind.  Raises StageError on failure.
    """
    try:
        fn, needs = COMMANDS[subcommand]
    except KeyError:
        raise StageError("config", ConfigError(f"unknown subcommand {subcommand!r}"), EXIT_VALIDATION) from None
    with stage("config"):
        cfg.validate(needs)
        if cfg.mode == "hybrid" or subcommand == "weights":
            cfg.validate_hybrid()
    if subcommand == "assess":
        artifacts, code = fn(cfg, strict)
    else:
        artifacts, code = fn(cfg)
    artifacts["manifest.json"] = manifest(cfg, subcommand, artifacts)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    scratch = Path(tempfile.mkdtemp(prefix=".partial-", dir=out_dir))
    try:
        for name, text in artifacts.items():
            with open(scratch / name, "w", newline="\n") as fh:
                fh.write(text)
        for name in artifacts:
            (scratch / name).replace(out_dir / name)
    finally:
        shutil.rmtree(scratch, ignore_errors=True)
    return code
