"""End-to-end pipeline: spectral analysis, reduction, synthesis,
closed-loop validation, robustness sweep, artifact files.

Stages mirror the method's outer loop: decompose the spectrum, pick the
slow subspace, define the controller family, compute the manifold
coefficients, optimize the reduced tracking problem, then apply the
optimal feedback law to the full-order model. Every artifact embeds the
config hash and tool version; metrics files are byte-reproducible for a
fixed config and seed.
"""

import csv
import hashlib
import json
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .cmaes import CMAConfig
from .controller import ControllerParams
from .fields import load_system
from .integrators import IntegratorConfig
from .invariance import solve_autonomous, solve_periodic_correction
from .objective import (ObjectiveSpec, SinusoidReference,
                        synthesize_controller)
from .simulate import (compare_fom_rom, orbit_periodicity_defect,
                       pendulum_robustness_sweep, simulate_closed_loop_fom,
                       simulate_rom)
from .spectral import (check_nonresonance, eigendecompose,
                       select_slow_subspace, spectral_quotient)

_trapz = getattr(np, "trapezoid", None) or np.trapz


class StageError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")


@dataclass
class PipelineResult:
    status: str
    out_dir: str
    artifacts: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    stage: str = ""
    error: str = ""


def config_hash(cfg):
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _stamp(cfg):
    return {"config_sha256": config_hash(cfg), "tool_version": __version__}


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    raise TypeError(f"not JSON serializable: {type(obj)}")


def write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1,
                  default=_json_default)
        fh.write("\n")


def write_csv(path, header, rows, stamp):
    with open(path, "w", newline="") as fh:
        for key, val in sorted(stamp.items()):
            fh.write(f"# {key}={val}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _run_dir(cfg, out_root):
    name = f"{cfg['name']}-{config_hash(cfg)[:8]}"
    path = os.path.join(out_root, name)
    os.makedirs(path, exist_ok=True)
    return path


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except Exception as exc:
        raise StageError(name, exc) from exc


def build_reference(cfg):
    ref = cfg["reference"]
    return SinusoidReference(offset=math.radians(ref["offset_deg"]),
                             amplitude=math.radians(ref["amplitude_deg"]),
                             omega=float(ref["omega"]))


def build_integrator(cfg):
    doc = dict(cfg.get("integrator") or {})
    return IntegratorConfig(method=doc.get("method", "rk45_adaptive"),
                            dt=doc.get("dt"),
                            rtol=doc.get("rtol", 1e-8),
                            atol=doc.get("atol", 1e-10))


def analyze(cfg):
    """Spectrum, slow subspace, spectral quotient, nonresonance report."""
    system = _stage("load_system", load_system, cfg["system"])
    spec = _stage("eigendecompose", eigendecompose, system.A)
    spec = _stage("select_slow_subspace", select_slow_subspace, spec,
                  cfg["subspace_dim"])
    sigma = _stage("spectral_quotient", spectral_quotient, spec)
    nr = cfg.get("nonresonance") or {}
    report = _stage("check_nonresonance", check_nonresonance, spec,
                    max_order=nr.get("max_order"),
                    rtol=nr.get("rtol", 1e-6))
    payload = {
        "eigenvalues": [{"re": v.real, "im": v.imag}
                        for v in spec.eigenvalues],
        "master_indices": list(spec.master_indices),
        "spectral_quotient": sigma,
        "nonresonance": {
            "ok": report.ok,
            "max_order_checked": report.max_order_checked,
            "rtol": report.rtol,
            "resonant_tuples": [
                {"m": list(v["m"]), "order": v["order"],
                 "lhs": v["lhs"], "rhs": v["rhs"], "margin": v["margin"]}
                for v in report.resonant_tuples],
        },
        "assumptions": {
            "stable": bool(np.all(spec.eigenvalues.real < 0)),
        },
    }
    return system, spec, payload


def _controller_family(cfg, omega):
    doc = cfg["controller"]
    sysdoc = cfg["system"]
    system = load_system(sysdoc)
    return ControllerParams.zeros(system.m, system.o, doc["taylor_order"],
                                  tuple(doc["harmonics"]), omega)


def run_reduce(cfg, out_dir=None, controller=None):
    """Solve the manifold coefficients; optionally a periodic correction."""
    system, spec, analysis = analyze(cfg)
    red = cfg["reduction"]
    if not analysis["nonresonance"]["ok"]:
        raise StageError("check_nonresonance",
                         RuntimeError("nonresonance conditions violated"))
    W0, R0 = _stage("solve_autonomous", solve_autonomous, system, spec,
                    red["taylor_order"])
    result = {"system": system, "spec": spec, "W0": W0, "R0": R0,
              "analysis": analysis}
    if controller is not None:
        W1, R1 = _stage("solve_periodic_correction",
                        solve_periodic_correction, system, spec, W0, R0,
                        controller, controller.omega,
                        order=red["correction_order"],
                        harmonics=tuple(red["harmonics"]))
        result["W1"], result["R1"] = W1, R1
    if out_dir:
        stamp = _stamp(cfg)
        path = os.path.join(out_dir, "reduction.json")
        payload = dict(stamp)
        payload["W0"] = W0.to_dict()
        payload["R0"] = R0.to_dict()
        if controller is not None:
            payload["W1"] = result["W1"].to_dict()
            payload["R1"] = result["R1"].to_dict()
        write_json(path, payload)
        result["artifact"] = path
    return result


def run_synthesize(cfg, out_dir=None, seed=None):
    """Optimize the controller family on the reduced tracking problem."""
    system, spec, analysis = analyze(cfg)
    if not analysis["nonresonance"]["ok"]:
        raise StageError("check_nonresonance",
                         RuntimeError("nonresonance conditions violated"))
    red = cfg["reduction"]
    reference = build_reference(cfg)
    omega = reference.omega
    family = _controller_family(cfg, omega)
    obj = cfg["objective"]
    ospec = ObjectiveSpec(reference=reference, omega=omega,
                          settle_periods=obj["settle_periods"],
                          measure_periods=obj["measure_periods"],
                          steps_per_period=obj["steps_per_period"])
    opt = dict(cfg["optimizer"])
    if seed is not None:
        opt["seed"] = seed
    cma_cfg = CMAConfig(sigma0=opt["sigma0"], population=opt["population"],
                        max_evals=opt["max_evals"], seed=opt["seed"],
                        f_tol=opt["f_tol"], f_target=opt.get("f_target"),
                        restarts=opt.get("restarts", 0))
    synth = _stage("optimize", synthesize_controller, system, spec, family,
                   ospec, taylor_order=red["taylor_order"],
                   correction_order=red["correction_order"],
                   harmonics=tuple(red["harmonics"]), cma_config=cma_cfg)
    artifacts = {}
    if out_dir:
        stamp = _stamp(cfg)
        ctl_path = os.path.join(out_dir, "controller.json")
        payload = dict(stamp)
        payload["controller"] = synth.controller.to_dict()
        payload["objective_value"] = synth.objective_value
        payload["evals"] = synth.cma.evals
        payload["stop_reason"] = synth.cma.stop_reason
        write_json(ctl_path, payload)
        artifacts["controller"] = ctl_path
        trace_path = os.path.join(out_dir, "objective_trace.csv")
        write_csv(trace_path, ["generation", "evals", "best", "median",
                               "best_ever", "sigma"],
                  [[g.generation, g.evals, repr(g.best), repr(g.median),
                    repr(g.best_ever), repr(g.sigma)]
                   for g in synth.cma.history], stamp)
        artifacts["trace"] = trace_path
        model_path = os.path.join(out_dir, "model.json")
        payload = dict(stamp)
        payload["lift"] = synth.model.lift_map.to_dict()
        payload["rdyn"] = synth.model.rdyn_map.to_dict()
        payload["trust_radius"] = synth.model.trust_radius
        write_json(model_path, payload)
        artifacts["model"] = model_path
    return {"system": system, "spec": spec, "synth": synth,
            "analysis": analysis, "reference": reference,
            "ospec": ospec, "artifacts": artifacts}


def _trajectory_rows(traj, system, controller, omega):
    rows = []
    for t, x in zip(traj.times, traj.states):
        y = system.H @ x
        u = controller.eval(y, omega * t)
        rows.append([repr(float(t))] + [repr(float(v)) for v in x]
                    + [repr(float(v)) for v in y]
                    + [repr(float(v)) for v in u])
    header = (["t"] + [f"x{i+1}" for i in range(system.N)]
              + [f"y{i+1}" for i in range(system.o)]
              + [f"u{i+1}" for i in range(system.m)])
    return header, rows


def run_simulate(cfg, synth_bundle, out_dir=None):
    """Closed-loop FOM and ROM runs plus error metrics."""
    system = synth_bundle["system"]
    synth = synth_bundle["synth"]
    reference = synth_bundle["reference"]
    controller = synth.controller
    model = synth.model
    sim = cfg["simulation"]
    omega = controller.omega
    period = 2.0 * math.pi / omega
    periods = sim["periods"]
    spp = sim["samples_per_period"]
    x0 = np.array([math.radians(sim["x0_deg"][0]),
                   math.radians(sim["x0_deg"][1])]) \
        if len(sim["x0_deg"]) == system.N else np.zeros(system.N)
    cfg_int = build_integrator(cfg)
    settle = cfg["objective"]["settle_periods"]
    window = (settle * period, periods * period)

    fom = _stage("simulate_fom", simulate_closed_loop_fom, system,
                 controller, x0, periods, cfg_int, spp,
                 use_exact=sim.get("use_exact", True))
    rom = _stage("simulate_rom", simulate_rom, model, model.project(x0),
                 periods, samples_per_period=spp)
    metrics_obj = _stage("metrics", compare_fom_rom, system, model,
                         controller, x0, reference, periods=periods,
                         window=window, cfg=cfg_int,
                         samples_per_period=spp,
                         use_exact=sim.get("use_exact", True))

    mask = (fom.times >= window[0] - 1e-9)
    t = fom.times[mask]
    rate_ref = np.array([reference.time_derivative(omega * tt)
                         for tt in t])
    rate_err = fom.states[mask][:, 1:2] - rate_ref \
        if system.N >= 2 else np.zeros_like(rate_ref)
    dt = t[1] - t[0]
    span = t[-1] - t[0]
    rmse_rate = float(np.sqrt(_trapz(rate_err[:, 0] ** 2, dx=dt) / span))

    metrics = {
        "rmse_theta_deg": math.degrees(float(metrics_obj.rmse[0])),
        "rmse_theta_dot_rad_s": rmse_rate,
        "max_abs_error_deg": math.degrees(metrics_obj.max_abs_error),
        "fom_rom_gap": metrics_obj.fom_rom_gap,
        "objective_value": synth.objective_value,
        "window": list(metrics_obj.extras["window"]),
        "periodicity_defect": orbit_periodicity_defect(fom, period),
        "trust_flagged": bool(rom.flagged),
        "x0_deg": list(sim["x0_deg"]),
        "seed": cfg["optimizer"]["seed"],
    }
    artifacts = {}
    if out_dir:
        stamp = _stamp(cfg)
        header, rows = _trajectory_rows(fom, system, controller, omega)
        fom_path = os.path.join(out_dir, "fom_trajectory.csv")
        write_csv(fom_path, header, rows, stamp)
        artifacts["fom_trajectory"] = fom_path
        header, rows = _trajectory_rows(rom.lifted, system, controller,
                                        omega)
        rom_path = os.path.join(out_dir, "rom_trajectory.csv")
        write_csv(rom_path, header, rows, stamp)
        artifacts["rom_trajectory"] = rom_path
        red_path = os.path.join(out_dir, "reduced_trajectory.csv")
        write_csv(red_path, ["t"]
                  + [f"p{i+1}" for i in range(model.rdyn_map.n)]
                  + ["trust_ok"],
                  [[repr(float(t))] + [repr(float(v)) for v in np.atleast_1d(p)]
                   + [int(ok)]
                   for t, p, ok in zip(rom.reduced.times, rom.reduced.states,
                                       rom.trust_ok)], stamp)
        artifacts["reduced_trajectory"] = red_path
        metrics_path = os.path.join(out_dir, "metrics.json")
        payload = dict(_stamp(cfg))
        payload["metrics"] = metrics
        write_json(metrics_path, payload)
        artifacts["metrics"] = metrics_path
    return {"metrics": metrics, "artifacts": artifacts, "fom": fom,
            "rom": rom}


def run_sweep(cfg, controller, reference, out_dir=None, workers=1):
    """Damping x forcing-amplitude robustness sweep."""
    sweep_cfg = cfg.get("sweep") or {}
    red = cfg["reduction"]
    cells = _stage(
        "sweep", pendulum_robustness_sweep,
        sweep_cfg.get("damping_values", [7.0, 10.0, 15.0, 20.0, 35.0]),
        sweep_cfg.get("amplitude_scales", [0.25, 0.5, 1.0, 2.0, 4.0]),
        controller, reference,
        pend_params={k: v for k, v in
                     cfg["system"].get("params", {}).items() if k != "b"},
        taylor_order=red["taylor_order"],
        correction_order=red["correction_order"],
        harmonics=tuple(red["harmonics"]),
        periods=sweep_cfg.get("periods", 5),
        settle_periods=sweep_cfg.get("settle_periods", 2),
        samples_per_period=sweep_cfg.get("samples_per_period", 1000),
        workers=workers)
    artifacts = {}
    if out_dir:
        stamp = _stamp(cfg)
        path = os.path.join(out_dir, "sweep.csv")
        write_csv(path,
                  ["b", "sigma", "amp_scale", "amplitude", "fom_rom_gap",
                   "rmse_theta_deg", "status", "message"],
                  [[repr(float(c.b)), c.sigma, repr(float(c.amp_scale)),
                    repr(float(c.amplitude)),
                    repr(float(c.fom_rom_gap)),
                    repr(float(c.rmse_theta_deg)), c.status, c.message]
                   for c in cells], stamp)
        artifacts["sweep"] = path
    return {"cells": cells, "artifacts": artifacts}


def run_pipeline(cfg, out_root=".", seed=None, workers=1):
    """Run every stage and write artifacts under a run directory."""
    out_dir = _run_dir(cfg, out_root)
    artifacts = {}
    try:
        system, spec, analysis = analyze(cfg)
        analysis_path = os.path.join(out_dir, "analysis.json")
        payload = dict(_stamp(cfg))
        payload["analysis"] = analysis
        write_json(analysis_path, payload)
        artifacts["analysis"] = analysis_path
        if not analysis["nonresonance"]["ok"]:
            raise StageError("check_nonresonance",
                             RuntimeError("nonresonance conditions violated"))

        synth_bundle = run_synthesize(cfg, out_dir=out_dir, seed=seed)
        artifacts.update(synth_bundle["artifacts"])

        sim_bundle = run_simulate(cfg, synth_bundle, out_dir=out_dir)
        artifacts.update(sim_bundle["artifacts"])

        sweep_bundle = None
        if cfg.get("sweep"):
            sweep_bundle = run_sweep(cfg, synth_bundle["synth"].controller,
                                     synth_bundle["reference"],
                                     out_dir=out_dir, workers=workers)
            artifacts.update(sweep_bundle["artifacts"])

        manifest = dict(_stamp(cfg))
        manifest["created"] = time.strftime("%Y-%m-%dT%H:%M:%SZ",
                                            time.gmtime())
        manifest["artifacts"] = {k: os.path.basename(v)
                                 for k, v in artifacts.items()}
        manifest["config"] = cfg
        write_json(os.path.join(out_dir, "manifest.json"), manifest)
        return PipelineResult(status="ok", out_dir=out_dir,
                              artifacts=artifacts,
                              metrics=sim_bundle["metrics"])
    except StageError as err:
        report = dict(_stamp(cfg))
        report["stage"] = err.stage
        report["error"] = str(err.cause)
        write_json(os.path.join(out_dir, "error.json"), report)
        return PipelineResult(status="error", out_dir=out_dir,
                              artifacts=artifacts, stage=err.stage,
                              error=str(err.cause))
