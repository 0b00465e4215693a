"""Command-line interface.

Subcommands: ``responses``, ``simulate``, ``ode`` and ``study``.  Settings
come from ``--config`` (JSON) and are overridden by flags.  Exit status is
0 on success, 1 on configuration errors and 2 when a run aborts.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import harness, ibm, ode, responses
from .config import COMMANDS, ExperimentConfig, parse_config
from .errors import ConfigurationError, DomainError, SimulationAbort
from .io import write_csv, write_json


def _parser():
    p = argparse.ArgumentParser(prog="predation-ibm", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON experiment config")
        s.add_argument("--preset", help="built-in model name")
        s.add_argument("--out", help="output directory")
        s.add_argument("--dump-config", action="store_true", help="print the validated config and exit")
        s.add_argument("--json-errors", action="store_true", help="report errors as JSON on stderr")
        if name == "responses":
            s.add_argument("--grid", help="comma-separated prey densities")
            s.add_argument("--method", choices=responses.METHODS)
        if name in ("simulate", "ode", "study"):
            s.add_argument("--T", type=float)
            s.add_argument("--x0", type=float)
            s.add_argument("--y0", type=float)
        if name == "simulate":
            s.add_argument("--K1", type=float)
            s.add_argument("--K2", type=float)
            s.add_argument("--seed", type=int)
            s.add_argument("--mode", choices=ibm.MODES)
        if name == "ode":
            s.add_argument("--rtol", type=float)
        if name == "study":
            s.add_argument("--seed-root", type=int)
            s.add_argument("--replicas", type=int)
            s.add_argument("--threads", type=int, default=1)
            s.add_argument("--timing", action="store_true", help="include wall-clock times in the report")
    return p


def _load_document(path):
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigurationError(f"cannot read config: {exc}", "--config") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"invalid JSON: {exc}", "--config") from None
    if not isinstance(doc, dict):
        raise ConfigurationError("the config must be a JSON object", "--config")
    return doc


def build_config(args) -> ExperimentConfig:
    doc = _load_document(args.config) if args.config else {}
    if doc.get("command", args.command) != args.command:
        raise ConfigurationError(f"config is for command {doc['command']!r}, not {args.command!r}", ".command")
    doc["command"] = args.command
    if args.preset:
        doc["model"] = {"preset": args.preset}
    if args.out:
        doc["out"] = args.out
    section = dict(doc.get(args.command, {}))
    flags = {
        "grid": "grid", "method": "method", "T": "T", "x0": "x0", "y0": "y0", "K1": "K1", "K2": "K2",
        "seed": "seed", "mode": "mode", "rtol": "rtol", "seed_root": "seed_root", "replicas": "replicas",
    }
    for attr, key in flags.items():
        v = getattr(args, attr, None)
        if v is not None:
            section[key] = v
    if getattr(args, "timing", False):
        section["timing"] = True
    if section or args.command in doc:
        doc[args.command] = section
    return parse_config(doc)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def run_responses(cfg: ExperimentConfig):
    model = cfg.build_model()
    rows = responses.response_table(model, cfg.options["grid"], cfg.options["method"])
    out = Path(cfg.out)
    has_err = any(r.error for r in rows)
    header = ["x", "phi", "psi"] + (["error"] if has_err else [])
    write_csv(out / "responses.csv", header,
              [[r.x, r.phi, r.psi] + ([r.error or ""] if has_err else []) for r in rows])
    write_json(out / "assumptions.json", responses.check_assumptions(model).to_dict())


def _sim_config(o) -> ibm.SimConfig:
    return ibm.SimConfig(
        K1=o["K1"], K2=o["K2"], T=o["T"], x0=o["x0"], y0=o["y0"], seed=o["seed"], n_samples=o["n_samples"],
        t_bins=o["t_bins"], n_age_bins=o["n_age_bins"], a_cap=o["a_cap"], initial_status=o["initial_status"],
        initial_age_max=o["initial_age_max"], population_cap=o["population_cap"], mode=o["mode"],
        record_events=o["record_events"],
    )


def write_simulation(out, result: ibm.SimResult):
    tr = result.trajectory
    write_csv(out / "trajectory.csv", ["t", "xi", "y_total", "y_search", "y_manipulate"],
              zip(tr.t.tolist(), tr.xi.tolist(), tr.y_total.tolist(), tr.y_search.tolist(),
                  tr.y_manipulate.tolist()))
    write_json(out / "occupation.json", result.occupation.to_dict())
    summary = result.summary()
    if result.events is not None:
        summary["events"] = [[t, k] for t, k in result.events]
    write_json(out / "events.json", summary)


def run_simulate(cfg: ExperimentConfig):
    model = cfg.build_model()
    out = Path(cfg.out)
    try:
        res = ibm.simulate(model, _sim_config(cfg.options))
    except SimulationAbort as exc:
        if exc.partial is not None:
            write_simulation(out, exc.partial)
        raise
    write_simulation(out, res)


def run_ode(cfg: ExperimentConfig):
    o = cfg.options
    system = ode.LimitSystem(cfg.build_model())
    grid = np.linspace(0.0, o["T"], o["n_samples"] + 1)
    out = Path(cfg.out)
    try:
        sol = ode.integrate(system, o["x0"], o["y0"], o["T"], t_eval=grid, rtol=o["rtol"])
    except SimulationAbort as exc:
        if exc.partial is not None:
            _write_ode(out, exc.partial, None)
        raise
    _write_ode(out, sol, ode.equilibrium_report(system, o["bracket"]))


def _write_ode(out, sol, eq):
    cols = [sol.t.tolist(), sol.x.tolist(), sol.y.tolist()]
    header = ["t", "x", "y"]
    if sol.conservation is not None:
        header.append("conservation")
        cols.append(sol.conservation.tolist())
    write_csv(out / "ode.csv", header, zip(*cols))
    report = {
        "status": sol.status,
        "steps": len(sol.steps),
        "rejected_steps": sol.n_rejected,
        "max_step_error": float(np.max(sol.error_estimates)) if sol.steps else 0.0,
    }
    if sol.conservation is not None:
        report["conservation_initial"] = float(sol.conservation[0])
        report["conservation_drift"] = sol.conservation_drift()
    if eq is not None:
        report["equilibrium"] = eq
    write_json(out / "ode.json", report)


def run_study(cfg: ExperimentConfig, threads=1):
    o = cfg.options
    study = harness.ConvergenceStudy(
        cfg.build_model(), o["x0"], o["y0"], tuple(tuple(r) for r in o["ladder"]), o["T"], o["replicas"],
        o["seed_root"], o["n_samples"], o["t_bins"], o["n_age_bins"], o["a_cap"], o["timing"], threads,
    )
    rep = harness.run_study(study)
    out = Path(cfg.out)
    write_json(out / "study.json", rep.to_dict())
    keys = ["K1", "K2", "replica", "sup_err_x", "sup_err_y", "tv_S", "tv_M", "seconds"]
    write_csv(out / "study.csv", keys, ([row.get(k) for k in keys] for row in rep.rows))


_RUNNERS = {"responses": run_responses, "simulate": run_simulate, "ode": run_ode}


def _report_error(kind, exc, as_json):
    if as_json:
        payload = {"error": kind, "message": getattr(exc, "message", str(exc))}
        if getattr(exc, "path", ""):
            payload["path"] = exc.path
        print(json.dumps(payload), file=sys.stderr)
    else:
        print(f"error ({kind}): {exc}", file=sys.stderr)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = build_config(args)
        if args.dump_config:
            print(cfg.dumps())
            return 0
        if cfg.command == "study":
            run_study(cfg, threads=max(1, args.threads))
        else:
            _RUNNERS[cfg.command](cfg)
    except ConfigurationError as exc:
        _report_error("configuration", exc, args.json_errors)
        return 1
    except (SimulationAbort, DomainError) as exc:
        _report_error("runtime", exc, args.json_errors)
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
