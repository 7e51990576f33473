"""Command-line front end: demo, collect, synth, verify, inspect.

Every artifact is JSON.  ``collect`` turns a run configuration into
``data.json`` (and ``plant.json`` when the plant is known), ``synth`` turns
data into ``controller.json``, ``verify`` checks a controller against a plant
and writes ``report.json``.  ``demo`` chains the three on a bundled regime.
Wall-clock information goes to ``metadata.json`` so that the other files are
byte-identical across runs with the same seed.

Exit codes: 0 success, 1 usage or schema error, 2 infeasible, 3 assumption
violated, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import os
import sys
import time
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from . import __version__
from . import serialize as io
from .augmentation import (
    ArtificialSystem,
    artificial_noise_bound,
    augment_log,
    augmented_energy_bound,
    default_artificial,
)
from .auxiliary import aux_shift
from .consistency import build_set, from_parts, radius
from .errors import (
    Assumption2Violated,
    Infeasible,
    NioSynthError,
    NoiseBoundViolated,
    NotContractive,
    NotNeeded,
    NumericalFailure,
    SchemaError,
    Unobservable,
)
from .experiment import (
    ExperimentLog,
    LogTruth,
    NoiseLaw,
    UniformLaw,
    assemble,
    collect,
    diagnostics,
    energy_bound,
)
from .lti import StateSpaceModel, io_parameter, observability_index
from .plants import DEMOS
from .sdp import solve_feasibility
from .synthesis import DEFAULT_VARIANT, VARIANTS, DynController, assemble_lmi, gain_from, make_controller
from .synthesis import SynthesisResult
from .verify import certify, report, simulate_noisy_closed_loop

log = logging.getLogger("nio_synth")

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_ASSUMPTION, EXIT_NUMERICAL = 0, 1, 2, 3, 4
CERT_SAMPLES = 200
DEFAULT_MAX_DRAWS = 5


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, Infeasible):
        return EXIT_INFEASIBLE
    if isinstance(exc, (Assumption2Violated, NoiseBoundViolated, Unobservable, NotNeeded, NotContractive)):
        return EXIT_ASSUMPTION
    if isinstance(exc, NumericalFailure):
        return EXIT_NUMERICAL
    return EXIT_USAGE


# ---------------------------------------------------------------- configuration

def _model_from(doc, where: str) -> StateSpaceModel:
    A = io.read_mat(io.require(doc, "A", where), f"{where}.A")
    B = io.read_mat(io.require(doc, "B", where), f"{where}.B")
    C = io.read_mat(io.require(doc, "C", where), f"{where}.C")
    try:
        return StateSpaceModel(A, B, C)
    except ValueError as exc:
        raise SchemaError(f"{where}: {exc}") from None


def _model_doc(model: StateSpaceModel) -> dict:
    return {"A": io.mat(model.A), "B": io.mat(model.B), "C": io.mat(model.C)}


def _nonneg(doc, key, where, default=None) -> float:
    val = doc.get(key, default)
    if not isinstance(val, (int, float)) or isinstance(val, bool):
        raise SchemaError(f"{where}.{key}: expected a number, got {val!r}")
    if val < 0:
        raise SchemaError(f"{where}.{key}: must be >= 0, got {val}")
    return float(val)


def _posint(doc, key, where, default=None) -> int:
    val = doc.get(key, default)
    if not isinstance(val, int) or isinstance(val, bool) or val < 1:
        raise SchemaError(f"{where}.{key}: expected a positive integer, got {val!r}")
    return val


def normalize_config(doc: dict, base: Path | None = None) -> dict:
    """Validate a run configuration and fill defaults; returns a plain dict."""
    if not isinstance(doc, dict):
        raise SchemaError("config: expected an object")
    if "plant" in doc:
        plant = _model_from(doc["plant"], "config.plant")
    elif "plant_file" in doc:
        path = Path(doc["plant_file"])
        if base is not None and not path.is_absolute():
            path = base / path
        pdoc, _ = io.load(path)
        plant = _model_from(pdoc, str(path))
    else:
        raise SchemaError("config: needs 'plant' or 'plant_file'")
    ell = doc.get("ell", "auto")
    if ell == "auto":
        ell = observability_index(plant.A, plant.C)
    elif not isinstance(ell, int) or isinstance(ell, bool) or ell < 1:
        raise SchemaError(f"config.ell: expected a positive integer or 'auto', got {ell!r}")
    exp = io.require(doc, "experiment", "config")
    if "seed" not in exp or not isinstance(exp["seed"], int) or isinstance(exp["seed"], bool):
        raise SchemaError("config.experiment.seed: an integer seed is required")
    experiment = {
        "num_experiments": _posint(exp, "num_experiments", "config.experiment", 1),
        "samples_per_experiment": _posint(exp, "samples_per_experiment", "config.experiment"),
        "input_bound": _nonneg(exp, "input_bound", "config.experiment"),
        "du_bar": _nonneg(exp, "du_bar", "config.experiment"),
        "dy_bar": _nonneg(exp, "dy_bar", "config.experiment"),
        "x0_bound": _nonneg(exp, "x0_bound", "config.experiment", 1.0),
        "seed": exp["seed"],
    }
    if experiment["samples_per_experiment"] < ell + 1:
        raise SchemaError(f"config.experiment.samples_per_experiment: need at least ell+1 = {ell + 1}")
    theta_scale = doc.get("theta_scale", 1.0)
    if not isinstance(theta_scale, (int, float)) or theta_scale <= 0:
        raise SchemaError(f"config.theta_scale: must be > 0, got {theta_scale!r}")
    eps = doc.get("epsilon")
    if eps is not None and (not isinstance(eps, (int, float)) or eps <= 0):
        raise SchemaError(f"config.epsilon: must be > 0 or null, got {eps!r}")
    variant = doc.get("variant", DEFAULT_VARIANT)
    if variant not in VARIANTS:
        raise SchemaError(f"config.variant: expected one of {VARIANTS}, got {variant!r}")
    aug = doc.get("augmentation")
    if aug is not None:
        if not isinstance(aug, dict):
            raise SchemaError("config.augmentation: expected an object or null")
        aug = dict(aug)
        if "A_a" in aug:
            art = _art_from(aug, "config.augmentation")
            aug = {"A_a": io.mat(art.A_a), "B_a": io.mat(art.B_a), "C_a": io.mat(art.C_a)} | {
                k: v for k, v in aug.items() if k not in ("A_a", "B_a", "C_a")
            }
        else:
            aug.setdefault("style", "ones")
            if aug["style"] not in ("ones", "random-contractive"):
                raise SchemaError(f"config.augmentation.style: unknown style {aug['style']!r}")
        aug.setdefault("n", plant.n)
        aug.setdefault("max_draws", DEFAULT_MAX_DRAWS)
    runtime = doc.get("runtime")
    if runtime is not None:
        x0 = io.require(runtime, "x0", "config.runtime")
        if len(x0) != plant.n:
            raise SchemaError(f"config.runtime.x0: expected {plant.n} entries, got {len(x0)}")
        runtime = {"x0": [float(v) for v in x0], "horizon": _posint(runtime, "horizon", "config.runtime", 200)}
    return {
        "plant": _model_doc(plant),
        "ell": ell,
        "experiment": experiment,
        "theta_scale": float(theta_scale),
        "epsilon": None if eps is None else float(eps),
        "variant": variant,
        "augmentation": aug,
        "runtime": runtime,
    }


def demo_config(name: str, seed: int, theta_scale: float | None = None, noise_scale: float = 1.0) -> dict:
    """Run configuration of a bundled demo."""
    if name not in DEMOS:
        raise SchemaError(f"unknown demo {name!r}; choose from {sorted(DEMOS)}")
    r = DEMOS[name]
    model = r.model()
    cfg = {
        "plant": _model_doc(model),
        "ell": r.ell,
        "experiment": {
            "num_experiments": r.num_experiments,
            "samples_per_experiment": r.samples_per_experiment,
            "input_bound": r.input_bound,
            "du_bar": r.du_bar * noise_scale,
            "dy_bar": r.dy_bar * noise_scale,
            "x0_bound": r.x0_bound,
            "seed": seed,
        },
        "theta_scale": r.theta_scale if theta_scale is None else theta_scale,
        "epsilon": None,
        "variant": DEFAULT_VARIANT,
        "augmentation": {"style": "ones"} if r.augmented else None,
        "runtime": {"x0": list(r.runtime_x0), "horizon": r.runtime_horizon} if r.runtime_x0 else None,
    }
    return normalize_config(cfg)


# ---------------------------------------------------------------- pipeline steps

def _log_doc(lg: ExperimentLog) -> dict:
    doc = {"u_meas": io.mat(lg.u_meas), "y_meas": io.mat(lg.y_meas)}
    if lg.truth is not None:
        tr = lg.truth
        doc["truth"] = {"x0": io.vec(tr.x0), "d_u": io.mat(tr.d_u), "d_y": io.mat(tr.d_y), "y_true": io.mat(tr.y_true)}
    return doc


def _log_from(doc, where, p, m) -> ExperimentLog:
    u = io.read_mat(io.require(doc, "u_meas", where), f"{where}.u_meas", (None, m))
    y = io.read_mat(io.require(doc, "y_meas", where), f"{where}.y_meas", (u.shape[0], p))
    truth = None
    if "truth" in doc:
        t = doc["truth"]
        truth = LogTruth(
            np.asarray(io.require(t, "x0", f"{where}.truth"), dtype=float),
            io.read_mat(io.require(t, "d_u", f"{where}.truth"), f"{where}.truth.d_u", u.shape),
            io.read_mat(io.require(t, "d_y", f"{where}.truth"), f"{where}.truth.d_y", y.shape),
            io.read_mat(io.require(t, "y_true", f"{where}.truth"), f"{where}.truth.y_true", y.shape),
        )
    return ExperimentLog(u, y, truth)


def run_collect(cfg: dict, config_hash: str | None = None) -> dict:
    plant = _model_from(cfg["plant"], "config.plant")
    e = cfg["experiment"]
    logs = collect(
        plant,
        cfg["ell"],
        e["num_experiments"],
        e["samples_per_experiment"],
        UniformLaw(e["input_bound"]),
        NoiseLaw.uniform(e["du_bar"], e["dy_bar"]),
        e["seed"],
        UniformLaw(e["x0_bound"]),
    )
    return {
        "schema": "nio_synth/data",
        "version": 1,
        "config_hash": config_hash,
        "seed": e["seed"],
        "p": plant.p,
        "m": plant.m,
        "ell": cfg["ell"],
        "config": cfg,
        "logs": [_log_doc(lg) for lg in logs],
    }


def _read_data(doc) -> tuple[dict, list[ExperimentLog]]:
    if not isinstance(doc, dict) or doc.get("schema") != "nio_synth/data":
        raise SchemaError("data: not a nio_synth data document")
    p, m = io.require(doc, "p", "data"), io.require(doc, "m", "data")
    cfg = io.require(doc, "config", "data")
    logs = [_log_from(lg, f"data.logs[{i}]", p, m) for i, lg in enumerate(io.require(doc, "logs", "data"))]
    if not logs:
        raise SchemaError("data.logs: no experiments")
    return cfg, logs


def _artificial_candidates(aug: dict, n: int, p: int, m: int, ell: int, seed: int):
    """The configured artificial system, then random-contractive redraws."""
    if "A_a" in aug:
        yield "explicit", _art_from(aug, "config.augmentation")
    else:
        yield aug["style"], default_artificial(n, p, m, ell, aug["style"], seed)
    for draw in range(aug.get("max_draws", DEFAULT_MAX_DRAWS)):
        yield f"random-contractive#{draw}", default_artificial(n, p, m, ell, "random-contractive", seed + 1 + draw)


def prepare(cfg: dict, logs: list[ExperimentLog], theta_scale: float):
    """Data matrices, noise bound and consistent set, augmenting when configured.

    Returns (data, theta, set, artificial info or None).  An artificial system
    that leaves the augmented data too poor is replaced by random
    contractive draws.
    """
    p, m = logs[0].y_meas.shape[1], logs[0].u_meas.shape[1]
    ell = cfg["ell"]
    e = cfg["experiment"]
    shift = aux_shift(p, m, ell)
    aug = cfg.get("augmentation")
    if aug is None:
        data = assemble(logs, ell)
        theta = energy_bound(e["dy_bar"], e["du_bar"], ell, data.n_cols, theta_scale, p=p, m=m)
        return data, theta, build_set(data, theta, shift), None
    last = None
    for label, art in _artificial_candidates(aug, aug["n"], p, m, ell, e["seed"]):
        dya = artificial_noise_bound(art, e["du_bar"])
        data = assemble([augment_log(lg, art) for lg in logs], ell)
        theta = augmented_energy_bound(e["dy_bar"], e["du_bar"], dya, ell, data.n_cols, theta_scale, p=p, m=m)
        try:
            cs = build_set(data, theta, shift)
        except Assumption2Violated as exc:
            log.warning("artificial system %s: augmented data not rich enough (%s)", label, exc)
            last = exc
            continue
        info = {"source": label, "A_a": io.mat(art.A_a), "B_a": io.mat(art.B_a), "C_a": io.mat(art.C_a), "dya_bar": dya}
        return data, theta, cs, info
    raise last


def _set_doc(cs) -> dict:
    doc = {k: io.mat(getattr(cs, k)) for k in ("Acal", "Bcal", "Ccal", "Zcen", "Qcal")}
    doc["cancel_scale"] = cs.cancel_scale
    return doc


def run_synth(data_doc: dict, data_hash: str, theta_scale=None, epsilon=None, variant=None, dump_lmi: Path | None = None) -> dict:
    cfg, logs = _read_data(data_doc)
    theta_scale = cfg.get("theta_scale", 1.0) if theta_scale is None else theta_scale
    epsilon = cfg.get("epsilon") if epsilon is None else epsilon
    variant = cfg.get("variant", DEFAULT_VARIANT) if variant is None else variant
    data, theta, cs, art = prepare(cfg, logs, theta_scale)
    shift = aux_shift(data.p, data.m, data.ell)
    problem = assemble_lmi(cs, shift, epsilon, variant)
    try:
        sol = solve_feasibility(problem)
    finally:
        if dump_lmi is not None:
            io.write(dump_lmi, _lmi_doc(problem, locals().get("sol")))
    K, cond = gain_from(sol.assignment["P"], sol.assignment["Y"])
    result = SynthesisResult(K, sol.assignment["P"], sol.assignment["Y"], -max(sol.margins.values()), variant, cond, sol.diagnostics)
    ctrl = make_controller(result, shift, None if art is None else _art_from(art))
    e = cfg["experiment"]
    return {
        "schema": "nio_synth/controller",
        "version": 1,
        "data_hash": data_hash,
        "seed": data_doc.get("seed"),
        "shift": {"p": shift.p, "m": shift.m, "ell": shift.ell},
        "theta": {"scale": theta_scale, "diag": float(theta.Theta[0, 0]), "size": int(theta.Theta.shape[0])},
        "solver": {"variant": variant, "epsilon": problem.eps, **{k: v for k, v in sol.diagnostics.items() if k != "epsilon"}},
        "K": io.mat(result.K),
        "P": io.mat(result.P),
        "Y": io.mat(result.Y),
        "margin": result.margin,
        "cond_P": result.cond_P,
        "augmentation": art,
        "controller": {"order": ctrl.order, "Ac": io.mat(ctrl.Ac), "Bc": io.mat(ctrl.Bc), "Cc": io.mat(ctrl.Cc)},
        "consistent_set": _set_doc(cs),
        "runtime": None if cfg.get("runtime") is None else {**cfg["runtime"], "du_bar": e["du_bar"], "dy_bar": e["dy_bar"]},
    }


def _art_from(info, where="augmentation") -> ArtificialSystem:
    try:
        return ArtificialSystem(*(io.read_mat(io.require(info, k, where), f"{where}.{k}") for k in ("A_a", "B_a", "C_a")))
    except ValueError as exc:
        raise SchemaError(f"{where}: {exc}") from None


def _lmi_doc(problem, sol) -> dict:
    doc = {
        "epsilon": problem.eps,
        "variables": [{"name": v.name, "shape": list(v.shape), "symmetric": v.symmetric, "positive_definite": v.positive_definite}
                      for v in problem.variables],
        "constraints": [],
    }
    for c in problem.constraints:
        doc["constraints"].append({
            "name": c.name,
            "block_sizes": c.block_sizes,
            "constant": io.mat(c.constant),
            "terms": [{
                "row": t.row, "col": t.col, "variable": t.variable, "transpose": t.transpose, "coef": t.coef,
                "left": None if t.left is None else io.mat(t.left),
                "right": None if t.right is None else io.mat(t.right),
            } for t in c.terms],
        })
    if sol is not None:
        doc["solution"] = {
            "assignment": {k: io.mat(v) for k, v in sol.assignment.items()},
            "margins": sol.margins,
            "diagnostics": sol.diagnostics,
        }
    return doc


def _controller_from(doc) -> tuple[DynController, dict]:
    if not isinstance(doc, dict) or doc.get("schema") != "nio_synth/controller":
        raise SchemaError("controller: not a nio_synth controller document")
    sh = io.require(doc, "shift", "controller")
    p, m, ell = (io.require(sh, k, "controller.shift") for k in ("p", "m", "ell"))
    shift = aux_shift(p, m, ell)
    K = io.read_mat(io.require(doc, "K", "controller"), "controller.K", (m, shift.dim))
    aug = doc.get("augmentation")
    return make_controller(K, shift, None if aug is None else _art_from(aug, "controller.augmentation")), doc


def run_verify(plant_doc: dict, plant_hash: str, ctrl_doc: dict, ctrl_hash: str) -> dict:
    plant = _model_from(plant_doc, "plant")
    ctrl, doc = _controller_from(ctrl_doc)
    if plant.p != ctrl.shift.p or plant.m != ctrl.shift.m:
        raise SchemaError(
            f"plant has m={plant.m}, p={plant.p} but controller expects m={ctrl.shift.m}, p={ctrl.shift.p}"
        )
    seed = doc.get("seed") or 0
    rep = report(plant, ctrl)
    out = {
        "schema": "nio_synth/report",
        "version": 1,
        "plant_hash": plant_hash,
        "controller_hash": ctrl_hash,
        "seed": doc.get("seed"),
        "closed_loop": rep.to_dict(),
        "certificate": None,
        "noisy_run": None,
    }
    ok = rep.schur
    if doc.get("consistent_set") is not None:
        s = doc["consistent_set"]
        parts = (io.read_mat(io.require(s, k, "controller.consistent_set"), f"controller.consistent_set.{k}")
                 for k in ("Acal", "Bcal", "Ccal", "Zcen", "Qcal"))
        cs = from_parts(*parts, s.get("cancel_scale", 0.0))
        P = io.read_mat(io.require(doc, "P", "controller"), "controller.P", (ctrl.shift.dim, ctrl.shift.dim))
        cert = certify(cs, ctrl.shift, ctrl.K, P, CERT_SAMPLES, seed)
        out["certificate"] = {
            "ok": cert.ok, "samples": cert.samples, "worst_slack": cert.worst_slack,
            "worst_radius": cert.worst_radius, "failures": cert.failures[:10], "set_radius": radius(cs),
        }
        ok &= cert.ok
    rt = doc.get("runtime")
    if rt is not None and len(rt["x0"]) == plant.n:
        run = simulate_noisy_closed_loop(plant, ctrl, NoiseLaw.uniform(rt["du_bar"], rt["dy_bar"]), rt["x0"], rt["horizon"], seed)
        out["noisy_run"] = run.to_dict()
        ok &= not run.diverged
    out["ok"] = bool(ok)
    return out


def _finite(d: dict) -> dict:
    """Non-finite floats become strings ("inf") so that the document stays strict JSON."""
    return {k: (str(v) if isinstance(v, float) and not np.isfinite(v) else v) for k, v in d.items()}


def run_inspect(data_doc: dict, theta_scale=None) -> dict:
    cfg, logs = _read_data(data_doc)
    theta_scale = cfg.get("theta_scale", 1.0) if theta_scale is None else theta_scale
    out = {"ell": cfg["ell"], "experiments": len(logs), "theta_scale": theta_scale}
    try:
        data, theta, cs, art = prepare(cfg, logs, theta_scale)
    except (Assumption2Violated, NoiseBoundViolated) as exc:
        data = assemble(logs, cfg["ell"])
        e = cfg["experiment"]
        theta = energy_bound(e["dy_bar"], e["du_bar"], cfg["ell"], data.n_cols, theta_scale, p=data.p, m=data.m)
        out.update({"n_cols": data.n_cols, "diagnostics": _finite(diagnostics(data, theta)), "error": str(exc)})
        return out
    out["n_cols"] = data.n_cols
    out["diagnostics"] = _finite(diagnostics(data, theta))
    out["theta_diag"] = float(theta.Theta[0, 0])
    out["set_radius"] = radius(cs)
    out["augmentation"] = None if art is None else {"source": art["source"], "dya_bar": art["dya_bar"]}
    return out


# ---------------------------------------------------------------- command layer

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="nio-synth", description="Stabilizing output-feedback controllers from noisy input-output data.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def synth_flags(p):
        p.add_argument("--theta-scale", type=float, default=None, help="multiplier on the amplitude-derived noise bound")
        p.add_argument("--epsilon", type=float, default=None, help="LMI strictness margin")
        p.add_argument("--variant", choices=VARIANTS, default=None)
        p.add_argument("--dump-lmi", action="store_true", help="also write lmi.json")

    d = sub.add_parser("demo", help="run a bundled reproduction end to end")
    d.add_argument("name", choices=sorted(DEMOS))
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--noise-scale", type=float, default=1.0, help="multiply the noise amplitudes")
    synth_flags(d)
    d.add_argument("--out", type=Path, default=Path("."))

    c = sub.add_parser("collect", help="simulate experiments from a run configuration")
    c.add_argument("config", type=Path)
    c.add_argument("--seed", type=int, default=None, help="override the configured seed")
    c.add_argument("--out", type=Path, default=Path("."))

    s = sub.add_parser("synth", help="synthesize a controller from data.json")
    s.add_argument("data", type=Path)
    synth_flags(s)
    s.add_argument("--out", type=Path, default=Path("."))

    v = sub.add_parser("verify", help="check a controller against a plant")
    v.add_argument("plant", type=Path)
    v.add_argument("controller", type=Path)
    v.add_argument("--out", type=Path, default=Path("."))

    i = sub.add_parser("inspect", help="print data diagnostics")
    i.add_argument("data", type=Path)
    i.add_argument("--theta-scale", type=float, default=None)
    return ap


def _metadata(out: Path, command: str, timings: dict):
    meta = {
        "command": command,
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "elapsed_s": timings,
        "versions": {"nio_synth": __version__, "numpy": np.__version__, "python": sys.version.split()[0]},
    }
    (out / "metadata.json").write_text(json.dumps(meta, indent=2) + "\n")


def _collect_files(cfg: dict, config_hash: str, out: Path) -> tuple[str, str]:
    data = run_collect(cfg, config_hash)
    h_data = io.write(out / "data.json", data)
    h_plant = io.write(out / "plant.json", cfg["plant"])
    return h_data, h_plant


def _synth_file(data_path: Path, out: Path, args) -> str:
    doc, h = io.load(data_path)
    ctrl = run_synth(doc, h, args.theta_scale, args.epsilon, args.variant, out / "lmi.json" if args.dump_lmi else None)
    return io.write(out / "controller.json", ctrl)


def _verify_files(plant_path: Path, ctrl_path: Path, out: Path) -> dict:
    pdoc, ph = io.load(plant_path)
    cdoc, ch = io.load(ctrl_path)
    rep = run_verify(pdoc, ph, cdoc, ch)
    io.write(out / "report.json", rep)
    return rep


def _dispatch(args) -> int:
    out = getattr(args, "out", None)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    timings = {}
    if args.command == "demo":
        cfg = demo_config(args.name, args.seed, args.theta_scale, args.noise_scale)
        if args.epsilon is not None:
            cfg["epsilon"] = args.epsilon
        if args.variant is not None:
            cfg["variant"] = args.variant
        args.theta_scale = args.epsilon = args.variant = None
        h_cfg = io.write(out / "config.json", cfg)
        _collect_files(cfg, h_cfg, out)
        timings["collect"] = time.perf_counter() - t0
        _synth_file(out / "data.json", out, args)
        timings["synth"] = time.perf_counter() - t0
        rep = _verify_files(out / "plant.json", out / "controller.json", out)
        timings["verify"] = time.perf_counter() - t0
        _metadata(out, "demo", timings)
        _summary(rep)
        return EXIT_OK if rep["ok"] else EXIT_NUMERICAL
    if args.command == "collect":
        raw, h_cfg = io.load(args.config)
        if args.seed is not None and isinstance(raw, dict) and isinstance(raw.get("experiment"), dict):
            raw["experiment"]["seed"] = args.seed
        cfg = normalize_config(raw, args.config.parent)
        _collect_files(cfg, h_cfg, out)
        _metadata(out, "collect", {"collect": time.perf_counter() - t0})
        return EXIT_OK
    if args.command == "synth":
        _synth_file(args.data, out, args)
        _metadata(out, "synth", {"synth": time.perf_counter() - t0})
        return EXIT_OK
    if args.command == "verify":
        rep = _verify_files(args.plant, args.controller, out)
        _metadata(out, "verify", {"verify": time.perf_counter() - t0})
        _summary(rep)
        return EXIT_OK if rep["ok"] else EXIT_NUMERICAL
    if args.command == "inspect":
        doc, _ = io.load(args.data)
        print(io.dumps(run_inspect(doc, args.theta_scale)), end="")
        return EXIT_OK
    raise AssertionError(args.command)


def _summary(rep: dict):
    cl = rep["closed_loop"]
    line = f"spectral radius {cl['spectral_radius']:.6f} ({'Schur' if cl['schur'] else 'NOT Schur'})"
    if rep.get("certificate"):
        c = rep["certificate"]
        line += f"; certificate {'ok' if c['ok'] else 'FAILED'} on {c['samples']} samples"
    if rep.get("noisy_run"):
        n = rep["noisy_run"]
        line += "; noisy run diverged" if n["diverged"] else f"; noisy run tail max |y| {n['tail_max']:.4g}"
    print(line)


def _thread_limit():
    val = os.environ.get("NIO_SYNTH_THREADS")
    if not val:
        return nullcontext()
    try:
        n = int(val)
    except ValueError:
        log.warning("ignoring NIO_SYNTH_THREADS=%r (not an integer)", val)
        return nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=max(n, 1))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        with _thread_limit():
            return _dispatch(args)
    except (NioSynthError, ValueError, OSError) as exc:
        code = exit_code_for(exc)
        err = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
        for attr in ("min_eig", "best_margin"):
            if hasattr(exc, attr):
                err[attr] = getattr(exc, attr)
        out = getattr(args, "out", None)
        if out is not None and out.is_dir():
            (out / "error.json").write_text(json.dumps(err, indent=2) + "\n")
        print(json.dumps(err), file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
