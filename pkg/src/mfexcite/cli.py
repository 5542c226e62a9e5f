"""Command line front end.

    mfexcite run      --preset fig_u02 --override run.N=2000 --out out/u02
    mfexcite sweep    --preset sweep_fhn_hopf
    mfexcite validate --config my.ini
    mfexcite presets  [--show NAME]

Exit status: 0 ok, 2 configuration error, 3 numerical failure (blow-up,
bracket), 4 I/O error. Errors are printed to stdout as one JSON object.
"""

import argparse
import json
import os
import sys
import time
from dataclasses import replace

import numpy as np

from . import bifurcation as bif
from .config import ScenarioError, format_config, parse_config, with_seed
from .errors import BlowUpError, BracketError, ConfigError, NumericError
from .hermite import coeffs_to_csv, l2_distance_to_q0, phase_residual_scaling
from .models import CouplingSpec, make_model
from .particles import InitLaw, SimConfig, run as run_particles
from .presets import load_preset, preset_names, preset_text
from .reduced import ReducedConfig, integrate

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


def build_model(cfg):
    return make_model(cfg.model.name, cfg.model.param_dict, d=cfg.model.d)


def build_coupling(cfg, delta=None):
    c = cfg.coupling
    delta = c.delta if delta is None else delta
    if c.noise_key == "sigma":
        return CouplingSpec(c.k, c.noise, delta, allow_zero_sigma=any(v == 0 for v in c.noise))
    return CouplingSpec.from_sigma2(c.k, c.noise, delta)


def _sim_config(cfg, model, coupling):
    r = cfg.run
    hermite = None
    if cfg.analysis is not None and cfg.analysis.hermite_degree is not None:
        hermite = (cfg.analysis.hermite_theta, cfg.analysis.hermite_degree)
    return SimConfig(model, coupling, r.N, r.dt, r.t_end, record_every=r.record_every,
                     init=InitLaw(r.init, r.m0 or ()), seed=r.seed, record_cov=True,
                     hermite=hermite, workers=r.workers)


def _reduced_config(cfg, model, coupling):
    r = cfg.run
    m0 = r.m0 if r.m0 is not None else (0.0,) * model.d
    return ReducedConfig(model, coupling, m0, r.dt, r.t_end,
                         use_closed_avg=model.closed_avg is not None, record_every=r.record_every)


def _cycle_center(cfg, model, coupling, tr):
    if cfg.analysis.cycle_center is not None:
        return np.array(cfg.analysis.cycle_center)
    late = tr.window(0.5 * tr.times[-1]).means.mean(axis=0)
    box = [[v - 3, v + 3] for v in late]
    fps = bif.solve_fixed_points(model, coupling, box, grid=7)
    if not fps:
        return late
    return min(fps, key=lambda f: np.linalg.norm(f.location - late)).location


def _cycles(cfg, model, coupling, source, tr):
    if model.d < 2:
        return []
    spread = cfg.analysis.cycle_spread
    if source == "particles":
        spread = 0.05 if spread is None else spread
        cyc, center, wind = bif.detect_noisy_cycle(tr, spread, center=cfg.analysis.cycle_center)
        if cyc is None:
            return []
        return [{"source": source, "period": cyc.period, "amplitude": cyc.amplitude,
                 "winding": wind, "center": [float(v) for v in center]}]
    spread = 1e-2 if spread is None else spread
    center = _cycle_center(cfg, model, coupling, tr)
    late = tr.window(0.5 * tr.times[-1])
    cyc = bif.detect_limit_cycle(late, center, rel_spread=spread)
    if cyc is None:
        return []
    return [{"source": source, "period": cyc.period, "amplitude": cyc.amplitude,
             "winding": float(abs(late.winding_number(center))),
             "center": [float(v) for v in center]}]


# ------------------------------------------------------------ sweeps

def run_sweep(cfg):
    """Bifurcation points (list of BifurcationPoint) and cycle-presence rows."""
    sw = cfg.sweep
    model = build_model(cfg)
    coupling = build_coupling(cfg)
    points, rows = [], []
    w1 = float(coupling.varpi[0]) if model.name == "fhn" else 0.0
    p = model.params
    if sw.detector in ("hopf", "pitchfork") and model.name != "fhn":
        raise ConfigError(f"detector {sw.detector} is implemented for fhn only")
    if sw.detector == "hopf":
        # the averaged FHN field is FHN with u - varpi_1
        if sw.parameter == "u":
            lo, hi = sw.bracket
            pt = bif.hopf_locus_fhn(p["a"], p["b"], p["tau"], (lo - w1, hi - w1), "u", sw.branch)
            pt = replace(pt, value=pt.value + w1)
        elif sw.parameter == "a":
            u = (sw.fixed if sw.fixed is not None else p["u"]) - w1
            pt = bif.hopf_locus_fhn(p["a"], p["b"], p["tau"], sw.bracket, "a", sw.branch, fixed=u)
        else:
            raise ConfigError("hopf sweeps take parameter u or a")
        points.append(pt)
    elif sw.detector == "pitchfork":
        if p["a"] != 0:
            raise ConfigError("pitchfork detector needs a = 0")
        pt = bif.pitchfork_locus_fhn(p["b"])
        points.append(replace(pt, value=pt.value + w1))
    elif sw.detector in ("snc", "homoclinic"):
        fn = bif.snc_bisection if sw.detector == "snc" else bif.homoclinic_bisection
        points.append(fn(model, coupling.with_delta(1.0), sw.bracket, sw.probe,
                         parameter=sw.parameter, dt=sw.dt, t_end=sw.t_end))
    else:
        probe = sw.probe or (cfg.run.m0 if cfg.run and cfg.run.m0 else (1.0,) * model.d)
        for v in sorted(sw.values):
            m, c = bif.family_member(model, coupling.with_delta(1.0), sw.parameter, v)
            cyc, center, final = bif.probe_cycle(m, c, probe, dt=sw.dt, t_end=sw.t_end)
            rows.append({"value": v, "present": cyc is not None,
                         "period": None if cyc is None else cyc.period,
                         "final": [float(x) for x in final]})
    return points, rows


# ------------------------------------------------------------ scenario

class _Writer:
    def __init__(self, out_dir, prefix):
        self.dir = out_dir
        self.prefix = prefix
        self.files = []
        os.makedirs(out_dir, exist_ok=True)

    def path(self, suffix):
        name = f"{self.prefix}_{suffix}"
        self.files.append(name)
        return os.path.join(self.dir, name)

    def json(self, suffix, obj):
        with open(self.path(suffix), "w") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True)
            fh.write("\n")


def run_scenario(cfg, out_dir=None, do_run=True, do_sweep=True):
    """Run a parsed scenario, write artifacts; returns (exit status, manifest)."""
    out_dir = out_dir or cfg.output.dir
    w = _Writer(out_dir, cfg.output.prefix)
    t0 = time.perf_counter()
    timing, diag, cycles, bifs = {}, {}, [], []
    model = build_model(cfg)
    coupling = build_coupling(cfg)
    with open(w.path("config.ini"), "w") as fh:
        fh.write(format_config(cfg))

    if do_run and cfg.run is not None:
        r = cfg.run
        trajs = {}
        if r.mode in ("particles", "both"):
            t = time.perf_counter()
            tr = run_particles(_sim_config(cfg, model, coupling))
            timing["particles"] = time.perf_counter() - t
            tr.to_csv(w.path("particles.csv"))
            trajs["particles"] = tr
            if tr.coeffs is not None:
                coeffs_to_csv(tr.coeffs, w.path("coeffs.csv"))
                dist = [l2_distance_to_q0(c) for c in tr.coeffs]
                diag["hermite_distance_final"] = dist[-1]
                diag["hermite_distance_mean_late"] = float(np.mean(dist[len(dist) // 2:]))
        if r.mode in ("reduced", "both"):
            t = time.perf_counter()
            tr = integrate(_reduced_config(cfg, model, coupling))
            timing["reduced"] = time.perf_counter() - t
            tr.to_csv(w.path("reduced.csv"))
            trajs["reduced"] = tr
        for src, tr in trajs.items():
            diag[f"{src}_terminal_mean"] = [float(v) for v in tr.means[-1]]
            diag[f"{src}_terminal_norm"] = float(np.linalg.norm(tr.means[-1]))
        if len(trajs) == 2:
            a, b = trajs["particles"], trajs["reduced"]
            n = min(len(a), len(b))
            diag["sup_gap_particles_reduced"] = float(
                np.max(np.linalg.norm(a.means[:n] - b.means[:n], axis=1)))
        if cfg.analysis is not None and cfg.analysis.cycles:
            for src, tr in trajs.items():
                cycles += _cycles(cfg, model, coupling, src, tr)
        if cfg.analysis is not None and cfg.analysis.residual_deltas and r.mode != "reduced":
            t = time.perf_counter()
            runs = []
            # same slow-time span and slow-time record spacing for every delta
            for d in cfg.analysis.residual_deltas:
                c = build_coupling(cfg, delta=d)
                scale = coupling.delta / d
                sc = replace(_sim_config(cfg, model, c), hermite=None, record_cov=False,
                             record_drift=True, t_end=r.t_end * scale,
                             record_every=max(1, int(round(r.record_every * scale))))
                runs.append((c, run_particles(sc)))
            settle = [0.2 * tr.times[-1] for _, tr in runs]
            rep = phase_residual_scaling(runs, model, t_settle=settle)
            diag["residual_scaling"] = rep.to_dict()
            timing["residual_scaling"] = time.perf_counter() - t

    sweep_rows = []
    if do_sweep and cfg.sweep is not None:
        t = time.perf_counter()
        points, sweep_rows = run_sweep(cfg)
        timing["sweep"] = time.perf_counter() - t
        for i, pt in enumerate(points):
            w.json(f"bifurcation_{i:02d}.json", pt.to_dict())
            bifs.append(pt.to_dict())
        if sweep_rows:
            diag["cycle_presence"] = sweep_rows

    timing["total"] = time.perf_counter() - t0
    summary = {"scenario": cfg.name, "seed": cfg.run.seed if cfg.run else None,
               "cycles": cycles, "bifurcations": bifs, "diagnostics": diag, "timing": timing}
    w.json("summary.json", summary)
    manifest_name = f"{w.prefix}_manifest.json"
    files = w.files + [manifest_name]
    manifest = {"scenario": cfg.name, "directory": out_dir, "files": files}
    with open(os.path.join(out_dir, manifest_name), "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return EXIT_OK, manifest


# ------------------------------------------------------------ main

def _load(args):
    overrides = tuple(args.override or ())
    if args.config and args.preset:
        raise ScenarioError([(0, "give either --config or --preset, not both")])
    if args.config:
        with open(args.config) as fh:
            cfg = parse_config(fh.read(), overrides)
    elif args.preset:
        try:
            cfg = load_preset(args.preset, overrides)
        except KeyError as e:
            raise ScenarioError([(0, str(e.args[0]))])
    else:
        raise ScenarioError([(0, "one of --config or --preset is required")])
    if args.seed is not None:
        cfg = with_seed(cfg, args.seed)
    return cfg


def _fail(code, kind, message, **extra):
    print(json.dumps({"status": "error", "kind": kind, "message": message, **extra}))
    return code


def build_parser():
    ap = argparse.ArgumentParser(prog="mfexcite", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("run", "sweep", "validate"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", metavar="PATH")
        sp.add_argument("--preset", metavar="NAME")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", metavar="DIR")
        sp.add_argument("--override", action="append", metavar="SECTION.KEY=VALUE")
    sp = sub.add_parser("presets")
    sp.add_argument("--show", metavar="NAME")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "presets":
        if args.show:
            try:
                sys.stdout.write(preset_text(args.show))
            except KeyError as e:
                return _fail(EXIT_CONFIG, "config", str(e.args[0]))
        else:
            print("\n".join(preset_names()))
        return EXIT_OK
    try:
        cfg = _load(args)
    except ScenarioError as e:
        print(json.dumps(e.to_dict()))
        return EXIT_CONFIG
    except OSError as e:
        return _fail(EXIT_IO, "io", str(e))
    if args.command == "validate":
        print(json.dumps({"status": "ok", "scenario": cfg.name}))
        return EXIT_OK
    if args.command == "sweep" and cfg.sweep is None:
        return _fail(EXIT_CONFIG, "config", "scenario has no [sweep] section")
    try:
        code, manifest = run_scenario(cfg, out_dir=args.out,
                                      do_run=args.command == "run",
                                      do_sweep=True)
    except BlowUpError as e:
        return _fail(EXIT_NUMERIC, "blowup", str(e), t=e.t, index=e.index)
    except (BracketError, NumericError) as e:
        return _fail(EXIT_NUMERIC, "numeric", str(e))
    except ConfigError as e:
        return _fail(EXIT_CONFIG, "config", str(e))
    except OSError as e:
        return _fail(EXIT_IO, "io", str(e))
    print(json.dumps({"status": "ok", **manifest}))
    return code


if __name__ == "__main__":
    sys.exit(main())
