"""Deterministic ensemble execution and artifact writing.

Replica i always draws from the stream (master_seed, "replica", i), and
aggregation folds over replica index order, so artifact bytes are
identical no matter how many workers executed the runs.  The manifest
echoes the science configuration and the derived per-replica seeds, and
deliberately omits operational settings (worker count, output paths).
"""
from __future__ import annotations

import glob
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__, analysis, branching, figures, stats
from .box_engine import BoxConfig, run_box
from .config import ExperimentConfig
from .exact_engine import ExactConfig, choose_sim_radius, run_exact
from .field import Annulus
from .streams import RngStream
from .trajectory import (
    Trajectory,
    read_trajectory_csv,
    write_trajectory_csv,
    write_trajectory_jsonl,
)

__all__ = ["run_experiment", "run_ensemble"]


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _write_quantiles_csv(table, path) -> None:
    cols = ("time", "q10", "q50", "q90", "min", "max")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        for i in range(table["time"].size):
            fh.write(",".join(_fmt(table[c][i]) for c in cols) + "\n")


def _ensure_writable(output_dir: str) -> None:
    try:
        os.makedirs(output_dir, exist_ok=True)
        probe = os.path.join(output_dir, ".write-probe")
        with open(probe, "w") as fh:
            fh.write("")
        os.remove(probe)
    except OSError as exc:
        raise OSError(f"output directory {output_dir!r} is not writable: {exc}") from exc


def _resolve_simulation_params(cfg: ExperimentConfig) -> dict:
    params = dict(cfg.parameters)
    if cfg.command == "simulate-exact" and params.get("sim_radius") == "auto":
        params["sim_radius"] = choose_sim_radius(
            params["lambda"],
            params["horizon"],
            params["target_radius_hint"],
            params["truncation_tol"],
        )
    return params


def _replica_trajectory(command: str, params: dict, master_seed: int, replica: int) -> Trajectory:
    seed = RngStream(master_seed).replica(replica)
    if command == "simulate-exact":
        cfg = ExactConfig(
            lam=params["lambda"],
            horizon=params["horizon"],
            sim_radius=params["sim_radius"],
            cap=params["cap"],
            seed=seed,
            target_radius_hint=params["target_radius_hint"],
        )
        return run_exact(cfg)
    cfg = BoxConfig(
        lam=params["lambda"],
        box_side=params["box_side"],
        dt=params["dt"],
        horizon=params["horizon"],
        kinematics=params["kinematics"],
        cap=params["cap"],
        seed=seed,
    )
    return run_box(cfg)


def run_ensemble(cfg: ExperimentConfig, output_dir: str, workers: int | None = None) -> int:
    """Run the replicas of a simulate-* experiment and write all artifacts.
    Returns the process exit status (0 ok, 1 any audit failure)."""
    workers = workers or cfg.workers
    _ensure_writable(output_dir)
    params = _resolve_simulation_params(cfg)

    args = [(cfg.command, params, cfg.master_seed, i) for i in range(cfg.replicas)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            trajs = list(pool.map(_replica_trajectory_star, args))
    else:
        trajs = [_replica_trajectory_star(a) for a in args]

    for i, traj in enumerate(trajs):
        write_trajectory_csv(traj, os.path.join(output_dir, f"traj_{i:03d}.csv"))
        write_trajectory_jsonl(traj, os.path.join(output_dir, f"traj_{i:03d}.jsonl"))

    horizon = params["horizon"]
    grid = np.linspace(0.0, horizon, 101)
    table = analysis.ensemble_quantiles(trajs, grid)
    _write_quantiles_csv(table, os.path.join(output_dir, "quantiles.csv"))
    figures.save_trajectory_figure(
        trajs, os.path.join(output_dir, "trajectories.png"), title=f"{cfg.command} ensemble"
    )
    figures.save_quantile_figure(table, os.path.join(output_dir, "quantiles.png"))

    audits = [analysis.mass_audit(t) for t in trajs]
    reports = {
        "audits": [a.to_dict() for a in audits],
        "exploded_fraction": sum(t.exploded for t in trajs) / len(trajs),
        "final_masses": [t.final_mass for t in trajs],
    }
    _write_json(reports, os.path.join(output_dir, "reports.json"))

    manifest = {
        "command": cfg.command,
        "package_version": __version__,
        "parameters": params,
        "replicas": cfg.replicas,
        "master_seed": cfg.master_seed,
        "replica_streams": [
            {
                "replica": i,
                "kernel_seed": RngStream(cfg.master_seed).replica(i).substream("engine").kernel_seed(),
            }
            for i in range(cfg.replicas)
        ],
    }
    if cfg.command == "simulate-exact":
        manifest["truncation_bounds"] = [t.metadata["truncation_bound"] for t in trajs]
    _write_json(manifest, os.path.join(output_dir, "manifest.json"))

    return 0 if all(a.passed for a in audits) else 1


def _replica_trajectory_star(args):
    return _replica_trajectory(*args)


def _run_branching(cfg: ExperimentConfig, output_dir: str) -> int:
    p = cfg.parameters
    rng = RngStream(cfg.master_seed)
    lams = p["lambdas"]
    rows = []
    for lam in lams:
        q = branching.extinction_prob(lam)
        p0 = 1.0 - q
        bound = branching.survival_lower_bound(lam) if lam > 1 else 0.0
        rows.append((lam, q, p0, bound))
    with open(os.path.join(output_dir, "extinction.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("lambda,q,p0,bound\n")
        for lam, q, p0, bound in rows:
            fh.write(f"{_fmt(lam)},{_fmt(q)},{_fmt(p0)},{_fmt(bound)}\n")
    figures.save_extinction_figure(
        [r[0] for r in rows], [r[1] for r in rows], [r[3] for r in rows],
        os.path.join(output_dir, "extinction.png"),
    )

    params = branching.GwParams(p["offspring_mean"], p["root_mean"])
    totals, capped = branching.sample_total_progeny_batch(
        params, p["progeny_cap"], p["progeny_samples"], rng.substream("progeny")
    )
    values, counts = np.unique(totals, return_counts=True)
    with open(os.path.join(output_dir, "progeny_hist.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("total,count\n")
        for v, c in zip(values, counts):
            fh.write(f"{int(v)},{int(c)}\n")
    figures.save_progeny_figure(totals, os.path.join(output_dir, "progeny_hist.png"))

    extras: dict = {"capped_samples": int(capped.sum())}
    if p["dominating_steps"] > 0:
        dom = branching.dominating_trajectory(
            branching.DominatingConfig(
                hazard_constant=p["hazard_constant"],
                step_count=p["dominating_steps"],
                seed=rng.substream("dominating"),
            )
        )
        write_trajectory_csv(dom, os.path.join(output_dir, "dominating.csv"))
        extras["dominating_sum_inv_sqrt_mass"] = dom.metadata["sum_inv_sqrt_mass"]
    _write_json(extras, os.path.join(output_dir, "reports.json"))

    manifest = {
        "command": cfg.command,
        "package_version": __version__,
        "parameters": cfg.parameters,
        "replicas": cfg.replicas,
        "master_seed": cfg.master_seed,
    }
    _write_json(manifest, os.path.join(output_dir, "manifest.json"))
    return 0


def _run_estimate(cfg: ExperimentConfig, output_dir: str) -> int:
    if "batch" in cfg.parameters:
        reports = [
            _estimator_report(dict(spec), cfg.master_seed, index=i)
            for i, spec in enumerate(cfg.parameters["batch"])
        ]
        _write_json([r.to_dict() for r in reports], os.path.join(output_dir, "reports.json"))
        with open(os.path.join(output_dir, "summary.csv"), "w", encoding="utf-8",
                  newline="\n") as fh:
            fh.write("name,estimate,ci_low,ci_high,n_samples,verdict\n")
            for r in reports:
                fh.write(f"{r.name},{_fmt(r.estimate)},{_fmt(r.ci_low)},"
                         f"{_fmt(r.ci_high)},{r.n_samples},{r.verdict}\n")
        manifest = {
            "command": cfg.command,
            "package_version": __version__,
            "parameters": cfg.parameters,
            "master_seed": cfg.master_seed,
        }
        _write_json(manifest, os.path.join(output_dir, "manifest.json"))
        return 1 if any(r.verdict == "fail" for r in reports) else 0

    report = _estimator_report(dict(cfg.parameters), cfg.master_seed)
    _write_json(report.to_dict(), os.path.join(output_dir, "report.json"))
    manifest = {
        "command": cfg.command,
        "package_version": __version__,
        "parameters": cfg.parameters,
        "master_seed": cfg.master_seed,
    }
    _write_json(manifest, os.path.join(output_dir, "manifest.json"))
    return 1 if report.verdict == "fail" else 0


def _estimator_report(p: dict, master_seed: int, index: int | None = None):
    name = p.pop("estimator")
    tags = ("estimate", name) if index is None else ("estimate", name, index)
    rng = RngStream(master_seed).substream(*tags)
    if name == "kurtz":
        annuli = [Annulus(lo, hi) for lo, hi in p["annuli"]]
        report = stats.kurtz_test(
            p["lambda"], p.get("pool_radius", 1.0 / math.sqrt(math.pi)),
            p["t"], annuli, p["replicas"], rng,
        )
    elif name == "hazard":
        if "radii" in p:
            report = stats.hazard_linearity(
                p["radii"], p["replicas"], rng,
                **({"t_max": p["t_max"]} if "t_max" in p else {}),
            )
        else:
            report = stats.hazard_estimate(
                p["R"], p["replicas"], rng,
                intensity=p.get("intensity", 1.0),
                t_max=p.get("t_max"),
            )
    elif name == "refill":
        report = stats.refill_density_estimate(
            p["lambda"], p["R"], p["t"], Annulus(*p["probe"]), p["replicas"], rng,
            ratio_threshold=p.get("ratio_threshold", 0.9),
        )
    elif name == "hitting":
        report = stats.hitting_prob_estimate(p["x_radius"], p["k"], p["replicas"], rng)
    elif name == "entered":
        report = stats.entered_count_estimate(p["lambda"], p["k"], p["replicas"], rng)
    elif name == "exp-lln":
        report = stats.exp_lln_check(p.get("weight_rule", "inverse-sqrt"), p["n"], rng)
    else:
        raise ValueError(f"unknown estimator {name!r}")
    return report


def _load_inputs(inputs) -> list[Trajectory]:
    paths: list[str] = []
    for item in inputs if isinstance(inputs, list) else [inputs]:
        if os.path.isdir(item):
            paths.extend(sorted(glob.glob(os.path.join(item, "traj_*.csv"))))
        else:
            paths.append(item)
    if not paths:
        raise ValueError(f"no trajectory files found in inputs {inputs!r}")
    return [read_trajectory_csv(p) for p in paths]


def _run_analyze(cfg: ExperimentConfig, output_dir: str) -> int:
    p = dict(cfg.parameters)
    name = p.pop("analysis")
    trajs = _load_inputs(p["inputs"])
    code = 0
    if name == "quantiles":
        horizon = max(t.events[-1].time for t in trajs)
        grid = np.linspace(0.0, horizon, p.get("grid_points", 101))
        table = analysis.ensemble_quantiles(trajs, grid)
        _write_quantiles_csv(table, os.path.join(output_dir, "quantiles.csv"))
        figures.save_quantile_figure(table, os.path.join(output_dir, "quantiles.png"))
    elif name == "audit":
        reports = [analysis.mass_audit(t) for t in trajs]
        _write_json([r.to_dict() for r in reports], os.path.join(output_dir, "reports.json"))
        code = 0 if all(r.passed for r in reports) else 1
    elif name == "stall":
        params = analysis.StallParams(
            alpha=p.get("alpha", 0.5), beta=p.get("beta"), T0=p.get("T0", 0.0)
        )
        stalls = [analysis.find_stall(t, params) for t in trajs]
        _write_json(
            {"stall_times": stalls, "alpha": params.alpha, "beta": params.beta, "T0": params.T0},
            os.path.join(output_dir, "stalls.json"),
        )
    elif name == "growth-fit":
        reports = [
            stats.growth_exponent_fit(
                t, p["t_min"], p["t_max"],
                expected_range=tuple(p["expected_range"]) if p.get("expected_range") else None,
            ).to_dict()
            for t in trajs
        ]
        _write_json(reports, os.path.join(output_dir, "reports.json"))
        code = 0 if all(r["verdict"] != "fail" for r in reports) else 1
    else:
        raise ValueError(f"unknown analysis {name!r}")
    manifest = {
        "command": cfg.command,
        "package_version": __version__,
        "parameters": cfg.parameters,
        "master_seed": cfg.master_seed,
    }
    _write_json(manifest, os.path.join(output_dir, "manifest.json"))
    return code


def run_experiment(cfg: ExperimentConfig, output_dir: str, workers: int | None = None) -> int:
    """Dispatch an experiment config to its runner; returns exit status."""
    _ensure_writable(output_dir)
    if cfg.command in ("simulate-exact", "simulate-box"):
        return run_ensemble(cfg, output_dir, workers)
    if cfg.command == "branching":
        return _run_branching(cfg, output_dir)
    if cfg.command == "estimate":
        return _run_estimate(cfg, output_dir)
    if cfg.command == "analyze":
        return _run_analyze(cfg, output_dir)
    raise ValueError(f"unknown command {cfg.command!r}")
