"""Command-line front end.

Verbs: simulate | average | converge | compare | npiston | audit.  Each
reads a JSON config, applies key=value overrides (dotted paths), and writes
CSV/JSON artifacts plus a manifest under the output directory.
"""

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import __version__
from .config import ConfigError, SystemConfig, default_compact_set
from .state import SlowState, side_energies
from . import harness, hardcore, softcore
from .averaged import (NPistonState, effective_hamiltonian, solve_averaged,
                       npiston_hamiltonian, solve_npiston)
from .harness import EnsembleSpec

_SYSTEM_KEYS = {"n1", "n2", "masses_left", "masses_right", "epsilon",
                "delta", "potential", "horizon_T", "seed"}


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(doc, overrides):
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, _, val = item.partition("=")
        path = key.split(".")
        if len(path) == 1 and path[0] in _SYSTEM_KEYS:
            path = ["system", path[0]]
        node = doc
        for part in path[:-1]:
            node = node.setdefault(part, {})
        node[path[-1]] = _parse_value(val)
    return doc


def load_config(path, overrides=()):
    with open(path) as f:
        doc = json.load(f)
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    apply_overrides(doc, overrides)
    cfg = SystemConfig.from_dict(doc.get("system", {}))
    return doc, cfg


def scenario_state(doc, cfg):
    sc = doc.get("scenario")
    if sc is None:
        if cfg.delta > 0:
            return harness.default_soft_scenario()
        return harness.default_scenario()
    mode = sc.get("mode", "soft-energies" if cfg.delta > 0 else "hard-speeds")
    return SlowState(sc["X"], sc.get("W", 0.0), sc["left"], sc["right"], mode)


def ensemble_spec(doc, cfg):
    en = doc.get("ensemble", {})
    delta_list = tuple(en.get("delta_list",
                              (cfg.delta,) if cfg.delta > 0 else (0.0,)))
    if doc.get("scenario") is None and any(d > 0 for d in delta_list):
        h0 = harness.default_soft_scenario()
    else:
        h0 = scenario_state(doc, cfg)
    return EnsembleSpec(
        h0=h0,
        n_phases=en.get("n_phases", 16),
        seed=en.get("seed", cfg.seed),
        epsilon_list=tuple(en.get("epsilon_list",
                                  (0.1, 0.05, 0.02, 0.01, 0.005))),
        delta_list=delta_list,
        T=en.get("T", cfg.horizon_T),
    )


def write_manifest(out_dir, doc, cfg, extra=None):
    manifest = {"version": __version__, "seed": cfg.seed, "config": doc}
    if extra:
        manifest.update(extra)
    with open(os.path.join(out_dir, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=2, default=str)


def _write_traj_csv(path, header, times, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for t, row in zip(times, rows):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in row])


def cmd_simulate(doc, cfg, out_dir, args):
    h0 = scenario_state(doc, cfg)
    rng = np.random.default_rng(args.seed if args.seed is not None else cfg.seed)
    phases = harness.sample_phases(h0, cfg.n1, cfg.n2, rng)
    T = doc.get("ensemble", {}).get("T", cfg.horizon_T)
    if cfg.delta > 0:
        full0 = harness.build_soft_state(h0, cfg, phases)
        ts, rows, final, drift = harness.slow_samples_soft(full0, cfg, T)
        extra = {"hamiltonian_drift": drift}
        names = [f"E_{k}" for k in range(cfg.n1 + cfg.n2)]
    else:
        full0 = harness.build_hard_state(h0, cfg, phases)
        ts, rows, final, counts = harness.slow_samples_hard(full0, cfg, T)
        extra = {"piston_collisions": {s: c.tolist() for s, c in counts.items()}}
        names = [f"s_{k}" for k in range(cfg.n1 + cfg.n2)]
    _write_traj_csv(os.path.join(out_dir, "trajectory.csv"),
                    ["t", "X", "W"] + names, ts, rows)
    write_manifest(out_dir, doc, cfg, {"final_X": final.X, **extra})
    print(f"simulate: {len(ts)} samples to t={ts[-1]:.6g}, final X={final.X:.6f}")
    return 0


def cmd_average(doc, cfg, out_dir, args):
    h0 = scenario_state(doc, cfg)
    T = doc.get("ensemble", {}).get("T", cfg.horizon_T)
    taus = np.linspace(0.0, T, 2049)
    traj = solve_averaged(h0, T, cfg.masses_left, cfg.masses_right,
                          delta=cfg.delta, profile=cfg.potential, t_eval=taus)
    rows = traj.states
    Hs = np.array([effective_hamiltonian(traj.slow_state(t), h0,
                                         cfg.masses_left, cfg.masses_right)
                   for t in taus]) if h0.mode == "hard-speeds" else \
        np.full(len(taus), np.nan)
    names = ([f"s_{k}" for k in range(cfg.n1 + cfg.n2)]
             if h0.mode == "hard-speeds"
             else [f"E_{k}" for k in range(cfg.n1 + cfg.n2)])
    out = np.column_stack([rows, Hs])
    _write_traj_csv(os.path.join(out_dir, "averaged.csv"),
                    ["tau", "X", "W"] + names + ["effective_H"], taus, out)
    spread = (np.nanmax(Hs) - np.nanmin(Hs)) / abs(np.nanmean(Hs)) \
        if np.isfinite(Hs).any() else float("nan")
    write_manifest(out_dir, doc, cfg, {"effective_H_rel_spread": spread})
    print(f"average: {len(taus)} samples, effective-H spread {spread:.3e}")
    return 0


def cmd_converge(doc, cfg, out_dir, args):
    spec = ensemble_spec(doc, cfg)
    rows, fits = harness.convergence_study(spec, cfg, jobs=args.jobs)
    harness.write_errors_csv(rows, os.path.join(out_dir, "errors.csv"))
    harness.write_fit_json(fits, os.path.join(out_dir, "fit.json"))
    write_manifest(out_dir, doc, cfg)
    _emit_gnuplot(out_dir)
    for delta, fit in fits.items():
        print(f"converge: delta={delta} slope={fit['slope']:.3f}")
    return 0


def cmd_compare(doc, cfg, out_dir, args):
    spec = ensemble_spec(doc, cfg)
    rows, fit = harness.hard_soft_comparison(spec, cfg)
    harness.write_errors_csv(rows, os.path.join(out_dir, "errors.csv"))
    with open(os.path.join(out_dir, "fit.json"), "w") as f:
        json.dump(fit, f, indent=2)
    write_manifest(out_dir, doc, cfg)
    print(f"compare: C_epsilon={fit['C_epsilon']:.4g} "
          f"C_delta={fit['C_delta']:.4g}")
    return 0


def cmd_npiston(doc, cfg, out_dir, args):
    np_doc = doc.get("npiston")
    if np_doc is None:
        raise ConfigError("npiston verb needs an 'npiston' config section")
    state0 = NPistonState(np_doc["X"], np_doc.get("W", [0.0] * len(np_doc["X"])),
                          np_doc.get("Mhat", [1.0] * len(np_doc["X"])),
                          tuple(np_doc["speeds"]),
                          tuple(np_doc.get("masses",
                                           [[1.0] * len(s)
                                            for s in np_doc["speeds"]])))
    T = np_doc.get("T", cfg.horizon_T)
    taus = np.linspace(0.0, T, 1025)
    _, states = solve_npiston(state0, T, t_eval=taus)
    Hs = [npiston_hamiltonian(s, state0) for s in states]
    rows = [np.concatenate([s.X, s.W, [H]]) for s, H in zip(states, Hs)]
    k = len(state0.X)
    header = (["tau"] + [f"X_{i+1}" for i in range(k)]
              + [f"W_{i+1}" for i in range(k)] + ["effective_H"])
    _write_traj_csv(os.path.join(out_dir, "npiston.csv"), header, taus, rows)
    spread = (max(Hs) - min(Hs)) / abs(Hs[0])
    write_manifest(out_dir, doc, cfg, {"effective_H_rel_spread": spread})
    print(f"npiston: effective-H spread {spread:.3e}")
    return 0


def cmd_audit(doc, cfg, out_dir, args):
    h0 = scenario_state(doc, cfg)
    duration = doc.get("audit", {}).get("duration", 200.0)
    out = harness.collision_rate_audit(cfg, h0, duration,
                                       seed=args.seed)
    with open(os.path.join(out_dir, "rates.json"), "w") as f:
        json.dump(out, f, indent=2)
    write_manifest(out_dir, doc, cfg)
    worst = max(r["rel_error"] for r in out)
    print(f"audit: worst rate mismatch {worst:.3%}")
    return 0


def _emit_gnuplot(out_dir):
    script = (
        "set logscale xy\n"
        "set xlabel 'epsilon'\n"
        "set ylabel 'worst sup deviation'\n"
        "set datafile separator ','\n"
        "plot 'errors.csv' using 1:4 with points title 'sup error'\n")
    with open(os.path.join(out_dir, "loglog.gp"), "w") as f:
        f.write(script)


_COMMANDS = {"simulate": cmd_simulate, "average": cmd_average,
             "converge": cmd_converge, "compare": cmd_compare,
             "npiston": cmd_npiston, "audit": cmd_audit}


def build_parser():
    p = argparse.ArgumentParser(
        prog="piston1d",
        description="Piston slow-fast dynamics simulator and averaging lab")
    p.add_argument("verb", choices=sorted(_COMMANDS))
    p.add_argument("--config", required=True, help="JSON config path")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("overrides", nargs="*", metavar="key=value",
                   help="dotted-path config overrides")
    return p


def run(argv=None):
    args = build_parser().parse_args(argv)
    try:
        doc, cfg = load_config(args.config, args.overrides)
        if args.seed is not None:
            cfg = cfg.replace(seed=args.seed)
            doc.setdefault("system", {})["seed"] = args.seed
    except (ConfigError, OSError, json.JSONDecodeError, KeyError,
            TypeError) as e:
        print(f"error: config: {e}", file=sys.stderr)
        return 2
    os.makedirs(args.out, exist_ok=True)
    try:
        return _COMMANDS[args.verb](doc, cfg, args.out, args)
    except ConfigError as e:
        print(f"error: config: {e}", file=sys.stderr)
        return 2
    except Exception as e:
        print(f"error: runtime: {e}", file=sys.stderr)
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
