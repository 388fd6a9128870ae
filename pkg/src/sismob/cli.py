"""Command-line entry point.

Subcommands: ``run`` (deterministic trajectory, optional stochastic
replicas, analysis, manifest), ``analyze`` (equilibrium/condition report
only), ``sweep`` (classification table over a scalar parameter grid),
and ``validate``.  All outputs land under ``--out`` and are
byte-reproducible for a fixed scenario and seed list.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import integrate, write_trajectory_csv
from .equilibria import (DFE_STABLE, DFE_UNSTABLE, MU_TIE_TOL, classify,
                         equilibrium_matrices)
from .errors import ScenarioError
from .scenario import Scenario, initial_state, load_scenario, parse_scenario
from .spectral import spectral_abscissa, spectral_radius
from .stochastic import seed_infections, simulate, stationary_counts, write_stochastic_csv


def _write_json(path: Path, payload: dict):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _analysis_payload(scenario: Scenario) -> dict:
    report = classify(scenario.spec)
    return {"scenario": scenario.name, "version": __version__, **report.to_dict()}


def _manifest(scenario: Scenario, command: str, outputs: list) -> dict:
    # file names only: manifests must be byte-identical across output dirs
    return {
        "tool": "sismob",
        "version": __version__,
        "command": command,
        "scenario": scenario.resolved,
        "outputs": sorted(Path(p).name for p in outputs),
    }


def _apply_overrides(scenario: Scenario, args) -> Scenario:
    doc = dict(scenario.resolved)
    changed = False
    if args.dt is not None:
        doc["dt"] = args.dt
        changed = True
    if getattr(args, "t_end", None) is not None:
        doc["t_end"] = args.t_end
        changed = True
    if getattr(args, "seed", None):
        doc["stochastic"] = {**doc["stochastic"], "seeds": args.seed, "enabled": True}
        changed = True
    if not changed:
        return scenario
    rule_info = doc.pop("delta_rule", None)  # delta already resolved to explicit values
    scenario = parse_scenario(doc)
    if rule_info is not None:
        scenario.resolved["delta_rule"] = rule_info
    return scenario


def _cmd_validate(args) -> int:
    scenario = load_scenario(args.scenario)
    print(f"scenario {scenario.name!r} is valid "
          f"(n={scenario.spec.n}, m={scenario.spec.m})")
    return 0


def _cmd_analyze(args) -> int:
    scenario = _apply_overrides(load_scenario(args.scenario), args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    analysis_path = out / f"{scenario.name}_analysis.json"
    _write_json(analysis_path, _analysis_payload(scenario))
    manifest_path = out / f"{scenario.name}_manifest.json"
    _write_json(manifest_path, _manifest(scenario, "analyze", [analysis_path]))
    print(f"wrote {analysis_path}")
    return 0


def _cmd_run(args) -> int:
    scenario = _apply_overrides(load_scenario(args.scenario), args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    outputs = []

    traj = integrate(scenario.spec, initial_state(scenario), scenario.t_end,
                     dt=scenario.dt, record_every=scenario.sample_every)
    det_path = out / f"{scenario.name}_deterministic.csv"
    write_trajectory_csv(traj, det_path, scenario.spec.n, scenario.spec.m)
    outputs.append(det_path)

    if scenario.stochastic_enabled:
        populations = stationary_counts(scenario.spec)
        initial_counts = seed_infections(populations, scenario.p0,
                                         scenario.spec.n, scenario.spec.m)
        for seed in scenario.seeds:
            run = simulate(scenario.spec, initial_counts, scenario.t_end,
                           h=scenario.h, seed=seed)
            sto_path = out / f"{scenario.name}_stochastic_seed{seed}.csv"
            write_stochastic_csv(run, sto_path, scenario.spec.n, scenario.spec.m,
                                 stride=scenario.sample_every)
            sidecar = out / f"{scenario.name}_stochastic_seed{seed}.json"
            _write_json(sidecar, {"seed": seed, "h": scenario.h,
                                  "t_end": scenario.t_end,
                                  "scenario": scenario.name,
                                  "version": __version__})
            outputs += [sto_path, sidecar]

    analysis_path = out / f"{scenario.name}_analysis.json"
    _write_json(analysis_path, _analysis_payload(scenario))
    outputs.append(analysis_path)

    manifest_path = out / f"{scenario.name}_manifest.json"
    _write_json(manifest_path, _manifest(scenario, "run", outputs))
    print(f"wrote {len(outputs) + 1} files under {out}")
    return 0


def _parse_grid(text: str):
    """Grid syntax: field=start:stop:count (inclusive linspace)."""
    try:
        field, rng = text.split("=", 1)
        start_s, stop_s, count_s = rng.split(":")
        start, stop, count = float(start_s), float(stop_s), int(count_s)
    except ValueError:
        raise ScenarioError(
            f"--grid: expected field=start:stop:count, got {text!r}") from None
    if count < 0:
        raise ScenarioError(f"--grid: count must be nonnegative, got {count}")
    field = field.strip()
    if field not in ("beta", "delta", "rate_scale"):
        raise ScenarioError(
            f"--grid: can only sweep 'beta', 'delta' or 'rate_scale', got {field!r}")
    return field, np.linspace(start, stop, count) if count else np.array([])


def _grid_point_doc(doc: dict, field: str, value: float) -> dict:
    point = json.loads(json.dumps(doc))  # deep copy of the raw document
    if field == "rate_scale":
        hits = 0
        for layer in point.get("layers", []):
            if "preset" in layer:
                layer["rate_scale"] = value
                hits += 1
            elif "mh" in layer:
                layer["mh"]["rate_scale"] = value
                hits += 1
        if not hits:
            raise ScenarioError(
                "layers: rate_scale sweeps need preset or mh layer specs")
    else:
        point[field] = value
    return point


def _sweep_point(spec):
    """mu, R0 and the classification without the endemic fixed point
    (sweeps only tabulate the threshold quantities)."""
    mats = equilibrium_matrices(spec)
    mu = float(spectral_abscissa(mats.G).mu)
    r0 = None if mats.A is None else float(spectral_radius(mats.A @ mats.F).rho)
    classification = DFE_UNSTABLE if mu > MU_TIE_TOL else DFE_STABLE
    return mu, r0, classification


def _cmd_sweep(args) -> int:
    with open(args.scenario, "r", encoding="utf-8") as fh:
        try:
            raw_doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"scenario file: invalid JSON ({exc})") from exc
    scenario = _apply_overrides(parse_scenario(raw_doc), args)
    if args.dt is not None:
        raw_doc["dt"] = args.dt
    if args.t_end is not None:
        raw_doc["t_end"] = args.t_end
    field, values = _parse_grid(args.grid)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    rows = []
    for idx, value in enumerate(values):
        try:
            point = parse_scenario(_grid_point_doc(raw_doc, field, float(value)))
            mu, r0, classification = _sweep_point(point.spec)
            rows.append([idx, value, mu, "" if r0 is None else r0,
                         classification, ""])
        except Exception as exc:  # per-point failure: record and continue
            rows.append([idx, value, "", "", "", f"{type(exc).__name__}: {exc}"])

    sweep_path = out / f"{scenario.name}_sweep.csv"
    with open(sweep_path, "w", encoding="utf-8") as fh:
        fh.write(f"index,{field},mu,R0,classification,error\n")
        for idx, value, mu, r0, cls, err in rows:
            mu_s = "" if mu == "" else format(mu, ".17g")
            r0_s = "" if r0 == "" else format(r0, ".17g")
            err_s = f"\"{err}\"" if err else ""
            fh.write(f"{idx},{format(value, '.17g')},{mu_s},{r0_s},{cls},{err_s}\n")

    manifest_path = out / f"{scenario.name}_manifest.json"
    _write_json(manifest_path, {**_manifest(scenario, "sweep", [sweep_path]),
                                "grid": {"field": field,
                                         "values": [float(v) for v in values]}})
    print(f"wrote {sweep_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sismob",
        description="SIS epidemics under multi-layer Markovian mobility")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_out=True):
        p.add_argument("--scenario", required=True, help="path to a scenario JSON file")
        if with_out:
            p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--dt", type=float, default=None, help="override scenario dt")
        p.add_argument("--t-end", dest="t_end", type=float, default=None,
                       help="override scenario t_end")
        p.add_argument("--seed", type=int, nargs="*", default=None,
                       help="override stochastic seeds (enables stochastic runs)")

    p_run = sub.add_parser("run", help="deterministic + stochastic runs with analysis")
    common(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_an = sub.add_parser("analyze", help="equilibrium and condition report only")
    common(p_an)
    p_an.set_defaults(func=_cmd_analyze)

    p_sw = sub.add_parser("sweep", help="classification table over a parameter grid")
    common(p_sw)
    p_sw.add_argument("--grid", required=True,
                      help="scalar grid, e.g. delta=0.05:0.5:10")
    p_sw.set_defaults(func=_cmd_sweep)

    p_val = sub.add_parser("validate", help="check a scenario file")
    common(p_val, with_out=False)
    p_val.set_defaults(func=_cmd_validate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
