"""Command-line entry point: scenario orchestration and artifact emission.

Exit codes: 0 success (all asserted suites pass), 2 suite failure
(verdicts still written), 1 execution error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import sys
from pathlib import Path

import numpy as np

from . import analysis, dynamics, energy, output
from .config import SCENARIOS, ConfigError, RunConfig, canonical_text, parse_config
from .dynamics import LinearizedState, evolve, evolve_pair, hamiltonian
from .energy import modified_energy
from .nonlinearity import (
    NonlinearitySpec,
    delta_gate,
    nonlinearity_from_config,
)
from .spectral import (
    SpectralState,
    build_random_decay,
    build_two_mode,
    pair_norm,
    rescale_to,
    sobolev_norm_sq,
)

__all__ = ["main", "run", "build_state"]


def build_state(config: RunConfig, seed_override: int | None = None) -> SpectralState:
    d = config.data
    if d["builder"] == "random-decay":
        seed = d["seed"] if seed_override is None else seed_override
        st = build_random_decay(
            d["M"], d["lambda_min"], d["lambda_max"], d["regularity"], d["margin"], seed
        )
    else:
        cp = [complex(re, im) for re, im in d["c_plus"]]
        cm = [complex(re, im) for re, im in d["c_minus"]]
        st = build_two_mode(d["lambda1"], d["lambda2"], cp, cm)
    if "rescale" in d:
        st = rescale_to(st, d["rescale"]["target"], d["rescale"]["s"])
    return st


def _gate_check(state, N, config):
    gate = delta_gate(N, 0.25)
    size = pair_norm(state, 0.0).combined
    if size > gate:
        if not config.allow_gate_violation:
            raise RuntimeError(
                f"initial data size {size:.6g} exceeds the smallness gate {gate:.6g} "
                "(set allow_gate_violation to proceed)"
            )
        return {"gate": gate, "size": size, "violated": True}
    return {"gate": gate, "size": size, "violated": False}


def _traj_rows(traj, N, s_list):
    header = ["t", "hamiltonian", "h1_norm", "l2_vel"]
    for s in s_list:
        tag = output.fmt(float(s))
        header += [
            f"pos[{tag}]",
            f"vel[{tag}]",
            f"e_unmodified[{tag}]",
            f"e_second_order[{tag}]",
            f"e_normal_form[{tag}]",
            f"e_asym[{tag}]",
            f"e_total[{tag}]",
        ]
    rows = []
    for t, st in zip(traj.times, traj.states):
        row = [
            float(t),
            hamiltonian(st, N),
            float(np.sqrt(sobolev_norm_sq(st, 1.0))),
            pair_norm(st, 0.0).vel,
        ]
        for s in s_list:
            nrm = pair_norm(st, s)
            bd = modified_energy(st, N, s)
            row += [
                nrm.pos,
                nrm.vel,
                bd.e_unmodified,
                bd.e_second_order,
                bd.e_normal_form,
                bd.e_asym,
                bd.e_total,
            ]
        rows.append(row)
    return header, rows


def _emit(out_dir, name, header, rows, fmt, plots=False, plot_series=None, plot_title=""):
    paths = []
    if fmt in ("csv", "both"):
        paths.append(str(output.write_csv(out_dir / f"{name}.csv", header, rows)))
    if fmt in ("json", "both"):
        doc = [dict(zip(header, row)) for row in rows]
        paths.append(str(output.write_json(out_dir / f"{name}.json", doc)))
    if plots and plot_series:
        paths.append(str(output.write_svg_lines(out_dir / f"{name}.svg", plot_series, plot_title)))
    return paths


def _scenario_simulate(config, N, state, out_dir, threads):
    integ = config.integrator
    traj = evolve(state, N, integ["T"], integ["dt"], stride=integ["stride"], method=integ["method"])
    header, rows = _traj_rows(traj, N, config.s_list)
    times = [r[0] for r in rows]
    series = {"hamiltonian": (times, [r[1] for r in rows]), "h1_norm": (times, [r[2] for r in rows])}
    artifacts = _emit(
        out_dir, "trajectory", header, rows, config.output["format"],
        config.output["plots"], series, "trajectory diagnostics",
    )
    return {"pass": True, "artifacts": artifacts, "samples": len(traj)}


def _scenario_energies(config, N, state, out_dir, threads):
    header = ["t", "s", "e_unmodified", "e_second_order", "e_normal_form", "e_asym", "e_total"]
    rows = []
    for s in config.s_list:
        bd = modified_energy(state, N, s)
        rows.append([float(state.time), float(s), bd.e_unmodified, bd.e_second_order,
                     bd.e_normal_form, bd.e_asym, bd.e_total])
    artifacts = _emit(out_dir, "energies", header, rows, config.output["format"])
    return {"pass": True, "artifacts": artifacts}


def _scenario_verify(config, N, state, out_dir, threads):
    p = config.params
    seed = config.data.get("seed", 0)
    verdicts = []

    kern = analysis.kernel_bounds_suite(int(p.get("kernel_samples", 20000)), seed)
    verdicts.append({"suite": "kernel-bounds", "pass": bool(kern["pass"]),
                     "worst_case": {"ratio": kern["worst_ratio"], "violations": kern["violations"]}})

    rng = np.random.default_rng(seed + 1)
    n_obs = int(p.get("obstruction_samples", 50))
    obs_ok = True
    worst = None
    for _ in range(n_obs):
        x, y = np.exp(rng.uniform(-3, 3, size=2))
        sigma = rng.uniform(0.0, 1.0)
        cert = analysis.obstruction_certificate(float(x), float(y), float(sigma))
        agree = (cert.residual > 0) == (cert.lstsq_residual > 1e-10 * max(1.0, cert.residual))
        if cert.feasible or not agree:
            obs_ok = False
            worst = cert.__dict__
    verdicts.append({"suite": "obstruction-infeasibility", "pass": obs_ok, "worst_case": worst})

    gate = delta_gate(N, 0.25)
    n_states = int(p.get("comparability_states", 20))
    d = config.data
    states = [
        rescale_to(
            build_random_decay(d.get("M", 64), d.get("lambda_min", 1.0),
                               d.get("lambda_max", 16.0), d.get("regularity", 0.25),
                               d.get("margin", 0.55), seed + 100 + i),
            gate / 10.0, 0.0,
        )
        for i in range(n_states)
    ]
    comp = analysis.comparability_sweep(states, N, config.s_list)
    comp_ok = all(0.4 <= v["min"] and v["max"] <= 0.6 for v in comp["per_s"].values())
    verdicts.append({"suite": "comparability", "pass": comp_ok, "worst_case": comp["per_s"]})

    if N.name == "model":
        A = float(N.d1(0.0))
        st30 = rescale_to(
            build_random_decay(30, 1.0, 8.0, 0.25, 0.4, seed + 500), 0.05, 0.0
        )
        dt = float(p.get("identity_dt", 1e-4))
        traj = evolve(st30, N, 20 * dt, dt, stride=1)
        resid = analysis.second_order_identity_check(traj, A, 0.25)
        scale = abs(energy.second_order_model(st30, A, 0.25))
        rel = resid / max(scale, 1e-300)
        verdicts.append({"suite": "second-order-identity", "pass": bool(rel <= 1e-7),
                         "worst_case": {"relative_residual": rel}})

    fb_state = rescale_to(build_random_decay(32, 1.0, 8.0, 0.25, 0.55, seed + 900), gate / 10, 0.0)
    fb_traj = evolve(fb_state, N, 0.05, 1e-3, stride=5)
    fb = analysis.f_bounds_suite(fb_traj, N)
    verdicts.append({"suite": "correction-function-bounds", "pass": bool(fb["pass"]),
                     "worst_case": {k: v for k, v in fb.items() if k != "pass"}})

    doc = {"scenario": "verify", "params": dict(p), "verdicts": verdicts,
           "pass": all(v["pass"] for v in verdicts)}
    artifacts = [str(output.write_json(out_dir / "verify.json", doc))]
    return {"pass": doc["pass"], "artifacts": artifacts, "verdicts": verdicts}


def _scenario_sweep(config, N, state, out_dir, threads):
    p = config.params
    s = float(p.get("s", 0.25))
    eps = sorted(config.epsilons) or [2e-1, 6e-2, 2e-2, 6e-3, 2e-3]
    eps = sorted(float(e) for e in eps)
    dt = config.integrator["dt"]
    stride = int(p.get("fd_stride", 10))
    method = config.integrator["method"]

    def point(e):
        return e, analysis.scaling_point(state, N, s, e, dt, stride, method)

    if threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(point, eps))
    else:
        results = [point(e) for e in eps]
    results.sort(key=lambda r: r[0])
    fit_u = analysis._fit_loglog([r[0] for r in results], [r[1][0] for r in results])
    fit_m = analysis._fit_loglog([r[0] for r in results], [r[1][1] for r in results])
    header = ["epsilon", "y_unmodified", "y_modified"]
    rows = [[r[0], r[1][0], r[1][1]] for r in results]
    artifacts = _emit(out_dir, "sweep", header, rows, config.output["format"],
                      config.output["plots"],
                      {"unmodified": ([np.log10(r[0]) for r in results],
                                      [np.log10(max(r[1][0], 1e-300)) for r in results]),
                       "modified": ([np.log10(r[0]) for r in results],
                                    [np.log10(max(r[1][1], 1e-300)) for r in results])},
                      "derivative scaling (log10-log10)")
    doc = {
        "unmodified": {"slope": fit_u.slope, "degenerate": fit_u.degenerate},
        "modified": {"slope": fit_m.slope, "degenerate": fit_m.degenerate},
        "slope_difference": fit_m.slope - fit_u.slope,
    }
    artifacts.append(str(output.write_json(out_dir / "sweep_fit.json", doc)))
    return {"pass": True, "artifacts": artifacts, "fit": doc}


def _scenario_linearized(config, N, state, out_dir, threads):
    if N.name != "model":
        raise RuntimeError("linearized scenario requires the model nonlinearity")
    p = config.params
    seed = config.data.get("seed", 0)
    d = config.data
    wdir = build_random_decay(len(state.grid), d.get("lambda_min", 1.0),
                              d.get("lambda_max", 16.0), d.get("regularity", 0.25),
                              d.get("margin", 0.55), seed + 1)
    w0 = LinearizedState(wdir.u_hat, wdir.v_hat)
    T = config.integrator["T"]
    dt = config.integrator["dt"]
    traj = evolve_pair(state, w0, N, T, dt, stride=config.integrator["stride"])
    errs = []
    for e in (1e-3, 1e-4):
        pert = state.replace_amplitudes(state.u_hat + e * w0.w_hat, state.v_hat + e * w0.w_vel)
        tp = evolve(pert, N, T, dt, stride=max(1, traj.steps))
        du = (tp.states[-1].u_hat - traj.states[-1].u_hat) / e
        dv = (tp.states[-1].v_hat - traj.states[-1].v_hat) / e
        wT = traj.companions[-1]
        errs.append(float(np.sqrt(np.max(np.abs(du - wT.w_hat)) ** 2
                                  + np.max(np.abs(dv - wT.w_vel)) ** 2)))
    ratio = errs[0] / errs[1] if errs[1] > 0 else float("inf")
    doc = {"fd_errors": errs, "fd_ratio": ratio, "T": T, "dt": dt,
           "pass": bool(8.0 <= ratio <= 12.0)}
    artifacts = [str(output.write_json(out_dir / "linearized.json", doc))]
    return {"pass": doc["pass"], "artifacts": artifacts, "fd_ratio": ratio}


def _scenario_resonance(config, N, state, out_dir, threads):
    if N.name != "model":
        raise RuntimeError("resonance scenario requires the model nonlinearity")
    p = config.params
    sigma = float(p.get("sigma", 0.25))
    seed = config.data.get("seed", 0)
    d = config.data
    wdir = build_random_decay(len(state.grid), d.get("lambda_min", 1.0),
                              d.get("lambda_max", 16.0), d.get("regularity", 0.25),
                              d.get("margin", 0.55), seed + 1)
    w0 = LinearizedState(wdir.u_hat, wdir.v_hat)
    rep = analysis.resonance_report(state, w0, N, sigma, config.integrator["T"],
                                    config.integrator["dt"], stride=config.integrator["stride"])
    header = ["t", "sep", "mixed", "sep_running_mean", "mixed_running_mean", "lin_energy"]
    rows = [
        [float(t), float(a), float(b), float(c), float(e), float(g)]
        for t, a, b, c, e, g in zip(rep["times"], rep["sep"], rep["mixed"],
                                    rep["sep_running_mean"], rep["mixed_running_mean"],
                                    rep["energy"])
    ]
    artifacts = _emit(out_dir, "resonance", header, rows, config.output["format"],
                      config.output["plots"],
                      {"sep_mean": (list(rep["times"]), list(rep["sep_running_mean"])),
                       "mixed_mean": (list(rep["times"]), list(rep["mixed_running_mean"]))},
                      "resonant vs oscillatory running means")
    summary = {"final_sep_mean": float(rep["sep_running_mean"][-1]),
               "final_mixed_mean": float(rep["mixed_running_mean"][-1])}
    artifacts.append(str(output.write_json(out_dir / "resonance_summary.json", summary)))
    return {"pass": True, "artifacts": artifacts, **summary}


def _scenario_obstruction(config, N, state, out_dir, threads):
    p = config.params
    x = float(p.get("x", 1.0))
    y = float(p.get("y", 1.0))
    sigma = float(p.get("sigma", 0.0))
    cert = analysis.obstruction_certificate(x, y, sigma)
    doc = {"x": cert.x, "y": cert.y, "sigma": cert.sigma, "feasible": cert.feasible,
           "residual": cert.residual, "lstsq_residual": cert.lstsq_residual,
           "derived_identity": cert.derived_identity}
    artifacts = [str(output.write_json(out_dir / "obstruction.json", doc))]
    return {"pass": True, "artifacts": artifacts, "feasible": cert.feasible}


def _scenario_truncation(config, N, state, out_dir, threads):
    p = config.params
    lam_max = float(state.grid.lambdas[-1])
    cutoffs = p.get("cutoffs") or [lam_max / 2**k for k in range(3, -1, -1)]
    tab = analysis.truncation_convergence(
        state, cutoffs, N, config.integrator["T"], float(p.get("s_low", 0.25)),
        config.integrator["dt"], stride=int(p.get("fd_stride", 10)),
    )
    header = ["cutoff", "diff_from_previous", "energy_sup"]
    rows = []
    for i, c in enumerate(tab["cutoffs"]):
        diff = tab["consecutive_diffs"][i - 1] if i > 0 else float("nan")
        rows.append([float(c), float(diff), float(tab["energy_sup"][i])])
    decreasing = all(
        b < a or (a == 0.0 and b == 0.0)
        for a, b in zip(tab["consecutive_diffs"], tab["consecutive_diffs"][1:])
    )
    artifacts = _emit(out_dir, "truncation", header, rows, config.output["format"])
    doc = {"decreasing": decreasing, "diffs": tab["consecutive_diffs"],
           "energy_sup": tab["energy_sup"]}
    artifacts.append(str(output.write_json(out_dir / "truncation_summary.json", doc)))
    return {"pass": decreasing, "artifacts": artifacts}


_SCENARIO_IMPL = {
    "simulate": _scenario_simulate,
    "energies": _scenario_energies,
    "verify": _scenario_verify,
    "sweep": _scenario_sweep,
    "linearized": _scenario_linearized,
    "resonance": _scenario_resonance,
    "obstruction": _scenario_obstruction,
    "truncation": _scenario_truncation,
}


def run(config: RunConfig, out_dir, threads: int = 1, seed_override: int | None = None) -> int:
    """Execute one scenario; returns the process exit code."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        N = nonlinearity_from_config(config.nonlinearity)
        state = build_state(config, seed_override)
        gate_info = None
        if config.scenario not in ("obstruction",):
            gate_info = _gate_check(state, N, config)
        result = _SCENARIO_IMPL[config.scenario](config, N, state, out_dir, threads)
    except (ConfigError,) as exc:
        output.write_json(out_dir / "error.json", {"errors": exc.errors})
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        output.write_json(out_dir / "error.json", {"error": str(exc)})
        print(f"error: {exc}", file=sys.stderr)
        return 1
    doc = {"scenario": config.scenario, "pass": bool(result["pass"]),
           "gate": gate_info, "artifacts": result.get("artifacts", []),
           "config": config.as_dict()}
    output.write_json(out_dir / "run.json", doc)
    return 0 if result["pass"] else 2


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="kirchlab",
        description="Spectral laboratory for Kirchhoff-type quasilinear waves",
    )
    parser.add_argument("--config", type=Path, help="JSON config file")
    parser.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override the data seed")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    parser.add_argument("--format", choices=("csv", "json", "both"), default=None)
    parser.add_argument("--plots", action="store_true", help="emit diagnostic SVG plots")
    sub = parser.add_subparsers(dest="scenario")
    for name in SCENARIOS:
        sub.add_parser(name)
    args = parser.parse_args(argv)

    try:
        if args.config is not None:
            cfg = parse_config(args.config.read_text())
        else:
            scenario = args.scenario or "simulate"
            # built-in default: generic decaying data scaled safely below
            # the smallness gate
            cfg = parse_config(json.dumps({
                "scenario": scenario,
                "data": {"builder": "random-decay",
                         "rescale": {"target": 0.03, "s": 0.0}},
            }))
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 1
    overrides = {}
    if args.scenario is not None and args.scenario != cfg.scenario:
        overrides["scenario"] = args.scenario
    if args.format is not None or args.plots:
        out = dict(cfg.output)
        if args.format is not None:
            out["format"] = args.format
        if args.plots:
            out["plots"] = True
        overrides["output"] = out
    if overrides:
        doc = cfg.as_dict()
        doc.update(overrides)
        cfg = parse_config(json.dumps(doc))
    return run(cfg, args.out, max(1, args.threads), args.seed)


if __name__ == "__main__":
    sys.exit(main())
