"""Batch front end: run experiment configs, print kernel condition
verdicts, and export level-set CSVs for plotting.

Exit codes are a stable contract: 0 success, 1 runtime probe failure,
2 config or schema error. Every output byte is a function of the config
plus the seed; there is no entropy default anywhere, so a run without a
seed (in the config or via --seed) is a config error.
"""

import argparse
import hashlib
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .errors import ConfigError
from .analysis import (
    ProbeReport,
    canopy_distinguishability_demo,
    cluster_frequency,
    component_statistic_survey,
    connectivity_decay_probe,
    count_components_probe,
    in_degree_profile,
    nested_level_average,
    one_endedness_probe,
    probe_csv,
    probe_json,
)
from .lattice import (
    JumpDistribution,
    check_model_conditions,
    even_sublattice,
    integer_lattice,
    sample_lattice_cmt,
    uniform_jumps,
)
from .models import (
    canopy_cmt,
    nguyen_atoms,
    nguyen_model,
    nguyen_variant,
    renewal_model,
    variant_atoms,
)
from .points import StripConfig, discrete_strip, howard_model, level_csv, sample_poisson, strip_point_map
from .seeds import derive_seed

_ROLE_MODEL = 0xC10
_ROLE_PROBE = 0xC11

_KERNEL_MODELS = {"nguyen", "variant", "renewal", "lattice"}
_CHAIN_PROBES = {"connectivity-decay", "count-components", "one-endedness"}
_FOREST_PROBES = {
    "in-degree-profile",
    "component-survey",
    "cluster-frequency",
    "nested-parity",
}


class SchemaViolation(Exception):
    pass


class ProbeFailure(Exception):
    def __init__(self, probe, cause):
        super().__init__(f"probe '{probe}' failed: {type(cause).__name__}: {cause}")
        self.probe = probe


def _need(block, field, kind, where=""):
    label = f"{where}{field}"
    if field not in block:
        raise SchemaViolation(f"missing field '{label}'")
    value = block[field]
    if kind is int and (not isinstance(value, int) or isinstance(value, bool)):
        raise SchemaViolation(f"field '{label}' must be an integer")
    if kind is float and not isinstance(value, (int, float)):
        raise SchemaViolation(f"field '{label}' must be a number")
    if kind is str and not isinstance(value, str):
        raise SchemaViolation(f"field '{label}' must be a string")
    if kind is list and not isinstance(value, list):
        raise SchemaViolation(f"field '{label}' must be a list")
    if kind is dict and not isinstance(value, dict):
        raise SchemaViolation(f"field '{label}' must be an object")
    return value


def _box(block, field, where):
    raw = _need(block, field, list, where)
    try:
        return [(lo, hi) for lo, hi in raw]
    except (TypeError, ValueError):
        raise SchemaViolation(f"field '{where}{field}' must be a list of [lo, hi] pairs")


def _jumps_from_block(block, where):
    support = _need(block, "support", list, where)
    atoms = []
    for a in support:
        atoms.append(tuple(a) if isinstance(a, list) else (a,))
    if "weights" in block:
        weights = _need(block, "weights", list, where)
        return JumpDistribution(tuple(atoms), tuple(str(w) for w in weights))
    return uniform_jumps(atoms)


def _validate_config(raw, seed_override):
    if not isinstance(raw, dict):
        raise SchemaViolation("config must be a JSON object")
    model = _need(raw, "model", dict)
    name = _need(model, "model", str, "model.")
    known = _KERNEL_MODELS | {"strip", "discrete-strip", "howard", "canopy"}
    if name not in known:
        raise SchemaViolation(f"unknown model '{name}'")
    if name == "nguyen":
        _need(model, "dimension", int, "model.")
        _box(model, "box", "model.")
    elif name == "variant":
        _box(model, "box", "model.")
    elif name == "renewal":
        _need(model, "support", list, "model.")
        _box(model, "box", "model.")
    elif name == "lattice":
        _need(model, "support", list, "model.")
        _box(model, "box", "model.")
    elif name == "strip":
        _need(model, "intensity", float, "model.")
        _need(model, "half_width", float, "model.")
        _box(model, "box", "model.")
    elif name in ("discrete-strip", "howard"):
        _need(model, "p", float, "model.")
        _box(model, "box", "model.")
    elif name == "canopy":
        _need(model, "depth", int, "model.")

    probes = _need(raw, "probes", list)
    for i, spec in enumerate(probes):
        if not isinstance(spec, dict):
            raise SchemaViolation(f"field 'probes[{i}]' must be an object")
        pname = _need(spec, "probe", str, f"probes[{i}].")
        if pname not in _CHAIN_PROBES | _FOREST_PROBES | {"canopy-demo"}:
            raise SchemaViolation(f"unknown probe '{pname}'")
        if pname in _CHAIN_PROBES and name not in _KERNEL_MODELS:
            raise SchemaViolation(
                f"probe '{pname}' needs a lattice kernel model, not '{name}'"
            )
        if pname == "canopy-demo" and name != "canopy":
            raise SchemaViolation("probe 'canopy-demo' needs the canopy model")

    seed = seed_override if seed_override is not None else raw.get("seed")
    if seed is None:
        raise SchemaViolation(
            "missing field 'seed' (no entropy defaults; set it in the config or pass --seed)"
        )
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise SchemaViolation("field 'seed' must be an integer")

    replicates = raw.get("replicates", 1)
    if not isinstance(replicates, int) or isinstance(replicates, bool) or replicates < 1:
        raise SchemaViolation("field 'replicates' must be a positive integer")

    out = dict(raw)
    out["seed"] = seed
    out["replicates"] = replicates
    return out


def _build_window(model, seed):
    """Sample the configured window; returns (forest, cloud-or-None)."""
    name = model["model"]
    if name == "nguyen":
        return nguyen_model(model["dimension"], _box(model, "box", "model."), seed), None
    if name == "variant":
        return nguyen_variant(_box(model, "box", "model."), seed), None
    if name == "renewal":
        jumps = _jumps_from_block(model, "model.")
        (interval,) = _box(model, "box", "model.")
        return renewal_model(jumps, interval, seed), None
    if name == "lattice":
        jumps = _jumps_from_block(model, "model.")
        spec = model.get("lattice", "integer")
        if spec == "integer":
            lattice = integer_lattice(jumps.dimension)
        elif spec == "even":
            lattice = even_sublattice(jumps.dimension)
        else:
            raise SchemaViolation(f"unknown lattice '{spec}'")
        wrap = model.get("wrap")
        if wrap is not None:
            wrap = tuple(wrap)
        return (
            sample_lattice_cmt(lattice, jumps, _box(model, "box", "model."), seed, wrap=wrap),
            None,
        )
    if name == "strip":
        cloud = sample_poisson(model["intensity"], _box(model, "box", "model."), seed)
        config = StripConfig(model["half_width"], model.get("time_axis", 0))
        return strip_point_map(cloud, config), cloud
    if name == "discrete-strip":
        return discrete_strip(model["p"], _box(model, "box", "model."), seed), None
    if name == "howard":
        return howard_model(model["p"], _box(model, "box", "model."), seed), None
    if name == "canopy":
        forest, _ = canopy_cmt(model["depth"], seed)
        return forest, None
    raise SchemaViolation(f"unknown model '{name}'")


def _model_jumps(model):
    name = model["model"]
    if name == "nguyen":
        return uniform_jumps(nguyen_atoms(model["dimension"]))
    if name == "variant":
        return uniform_jumps(variant_atoms())
    return _jumps_from_block(model, "model.")


def _parity(v):
    return (v[0] if isinstance(v, tuple) else v) % 2


def _run_probe(spec, model, forest, seed):
    name = spec["probe"]
    if name == "in-degree-profile":
        prof = in_degree_profile(forest)
        units = tuple(sorted(prof.histogram))
        return ProbeReport(
            probe="in-degree-profile",
            units=units,
            values=tuple(float(prof.histogram[k]) for k in units),
            half_widths=(0.0,) * len(units),
            trials=(prof.region_size,) * len(units),
            truncation_fraction=0.0,
            details={"mean": str(prof.mean), "region_size": prof.region_size},
        )
    if name == "component-survey":
        return component_statistic_survey(
            forest, spec.get("statistic", "leaf-fraction"), spec.get("min_size", 1)
        )
    if name == "cluster-frequency":
        return cluster_frequency(
            forest, spec.get("component_id", 0), spec.get("walk_steps", 10000), seed
        )
    if name == "nested-parity":
        start = spec.get("start")
        if start is None:
            start = min(forest.interior or forest.vertices)
        elif isinstance(start, list):
            start = tuple(start) if forest.dimension > 1 else start[0]
        out = nested_level_average(forest, _parity, start, spec.get("n_max", 8))
        return ProbeReport(
            probe="nested-parity",
            units=tuple(a.n for a in out),
            values=tuple(a.value for a in out),
            half_widths=tuple(4 * 0.5 / math.sqrt(a.count) for a in out),
            trials=tuple(a.count for a in out),
            truncation_fraction=sum(a.truncated for a in out) / len(out) if out else 0.0,
            details={"start": str(start), "n_max": spec.get("n_max", 8)},
        )
    if name == "connectivity-decay":
        jumps = _model_jumps(model)
        origin = tuple(spec.get("origin", (0,) * jumps.dimension))
        return connectivity_decay_probe(
            jumps,
            origin,
            spec.get("distances", [1, 2, 3]),
            spec.get("trials", 200),
            spec.get("budget", 2000),
            seed,
        )
    if name == "count-components":
        return count_components_probe(
            _model_jumps(model),
            spec.get("k", 2),
            spec.get("budget", 2000),
            spec.get("trials", 200),
            seed,
        )
    if name == "one-endedness":
        return one_endedness_probe(
            _model_jumps(model),
            spec.get("n_list", [10, 50]),
            spec.get("trials", 400),
            seed,
        )
    if name == "canopy-demo":
        return canopy_distinguishability_demo(model["depth"], seed)
    raise SchemaViolation(f"unknown probe '{name}'")


def _config_digest(config):
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _load_json(path):
    text = Path(path).read_text()
    if not text.strip():
        return {}
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaViolation(f"invalid JSON: {e}")


def _replicate_artifacts(config, rep):
    """All (filename, text) artifacts of one replicate."""
    model = config["model"]
    seed = config["seed"]
    model_seed = derive_seed(seed, _ROLE_MODEL, rep)
    needs_forest = any(s["probe"] in _FOREST_PROBES for s in config["probes"])
    forest = _build_window(model, model_seed)[0] if needs_forest else None
    files = []
    for i, spec in enumerate(config["probes"]):
        probe_seed = derive_seed(seed, _ROLE_PROBE, rep, i)
        try:
            report = _run_probe(spec, model, forest, probe_seed)
        except (SchemaViolation, ConfigError):
            raise
        except Exception as e:
            raise ProbeFailure(spec["probe"], e)
        stem = f"{i:02d}-{spec['probe']}-r{rep:03d}"
        files.append((f"{stem}.csv", probe_csv(report)))
        files.append((f"{stem}.json", probe_json(report) + "\n"))
    return files


def _cmd_run(args):
    config = _validate_config(_load_json(args.config), args.seed)
    out_dir = Path(args.out_dir or config.get("out_dir", "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    workers = max(1, args.threads)

    reps = range(config["replicates"])
    try:
        if workers == 1:
            batches = [_replicate_artifacts(config, r) for r in reps]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                batches = list(pool.map(lambda r: _replicate_artifacts(config, r), reps))
    except (SchemaViolation, ConfigError):
        raise
    except ProbeFailure as e:
        print(e, file=sys.stderr)
        return 1
    except Exception as e:
        print(f"model build failed: {type(e).__name__}: {e}", file=sys.stderr)
        return 1

    files = [f for batch in batches for f in batch]
    digest = _config_digest(config)
    manifest = [f"config-hash: {digest}"]
    for fname, text in sorted(files):
        (out_dir / fname).write_text(text)
        sha = hashlib.sha256(text.encode()).hexdigest()
        manifest.append(f"{sha}  {fname}")
    (out_dir / "manifest.txt").write_text("\n".join(manifest) + "\n")
    print(f"manifest {out_dir / 'manifest.txt'}")
    return 0


def _parse_support(text):
    atoms = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        try:
            atoms.append(tuple(int(c) for c in part.split(",")))
        except ValueError:
            raise SchemaViolation(f"bad atom '{part}' in --support")
    if not atoms:
        raise SchemaViolation("--support lists no atoms")
    return atoms


def _cmd_check_kernel(args):
    atoms = _parse_support(args.support)
    if args.weights:
        try:
            weights = tuple(w.strip() for w in args.weights.split(","))
            jumps = JumpDistribution(tuple(atoms), weights)
        except ValueError as e:
            raise SchemaViolation(f"bad --weights: {e}")
    else:
        jumps = uniform_jumps(atoms)
    if args.lattice == "integer":
        lattice = integer_lattice(jumps.dimension)
    elif args.lattice == "even":
        lattice = even_sublattice(jumps.dimension)
    else:
        raise SchemaViolation(f"unknown lattice '{args.lattice}'")
    report = check_model_conditions(jumps, lattice)
    for cond in ("cycle_free", "weakly_irreducible", "weakly_aperiodic"):
        print(f"{cond}: {str(getattr(report, cond)).lower()}")
    for cond, witness in sorted(report.witnesses.items()):
        if witness is not None:
            print(f"witness {cond}: {witness}")
    return 0


def _cmd_export_levels(args):
    raw = _load_json(args.config)
    if not isinstance(raw, dict):
        raise SchemaViolation("config must be a JSON object")
    model = _need(raw, "model", dict)
    if _need(model, "model", str, "model.") != "strip":
        raise SchemaViolation("export-levels needs the strip model (point-id forest)")
    seed = args.seed if args.seed is not None else raw.get("seed")
    if seed is None:
        raise SchemaViolation(
            "missing field 'seed' (no entropy defaults; set it in the config or pass --seed)"
        )
    _need(model, "intensity", float, "model.")
    _need(model, "half_width", float, "model.")
    _box(model, "box", "model.")
    forest, cloud = _build_window(model, seed)
    text = level_csv(cloud, forest)
    levels = raw.get("levels")
    if levels is not None:
        if not isinstance(levels, int) or isinstance(levels, bool) or levels < 1:
            raise SchemaViolation("field 'levels' must be a positive integer")
        lines = text.strip().split("\n")
        kept = [lines[0]]
        kept.extend(
            line for line in lines[1:] if int(line.split(",")[3]) < levels
        )
        text = "\n".join(kept) + "\n"
    out_dir = Path(args.out_dir or raw.get("out_dir", "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "levels.csv"
    path.write_text(text)
    print(f"wrote {path}")
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="cmtforest",
        description="Sample coalescing-trajectory forests and run statistical probes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute an experiment config")
    run.add_argument("config")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--out-dir", default=None)
    run.add_argument("--threads", type=int, default=1)
    run.set_defaults(func=_cmd_run)

    ck = sub.add_parser("check-kernel", help="print kernel condition verdicts")
    ck.add_argument("--support", required=True, help="atoms, e.g. '1,-1;-1,-1'")
    ck.add_argument("--weights", default=None, help="comma-separated weights")
    ck.add_argument("--lattice", default="integer", choices=("integer", "even"))
    ck.set_defaults(func=_cmd_check_kernel)

    ex = sub.add_parser("export-levels", help="CSV of point, level index, component")
    ex.add_argument("config")
    ex.add_argument("--seed", type=int, default=None)
    ex.add_argument("--out-dir", default=None)
    ex.set_defaults(func=_cmd_export_levels)
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SchemaViolation, ConfigError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
