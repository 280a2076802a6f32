"""Batch driver: every operation as a subcommand of a JSON-configured run.

Usage: hypoflow --config experiment.json [--output DIR] [--seed N] [--threads N]

The config carries {"command", "model", "parameters", "output"}; the schema
(config_schema.json, shipped with the package) is enforced before execution
and unknown keys are rejected.  Artifacts are CSV/JSON with floats printed at
17 significant digits, so re-running a config is byte-identical (timestamps
go to the run.log sidecar only, and --threads must not change any output).

Exit codes: 0 success, 2 domain/config error, 3 accuracy-window error.
"""

from __future__ import annotations

import argparse
import datetime
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import asian, harnack, heisenberg, kolmogorov, models, montecarlo, verify
from .asian import AccuracyError, AsianEndpoints
from .models import DomainError
from .paths import ControlPath, integrate_path

_MODELS = {
    "kolmogorov": models.KOLMOGOROV,
    "heisenberg": models.HEISENBERG,
    "quadratic_lifted": models.QUADRATIC_LIFTED,
    "asian": models.ASIAN,
}


def _resolve_model(name: str) -> models.Model:
    if name in _MODELS:
        return _MODELS[name]
    if name.startswith("heat"):
        return models.heat(int(name[4:]))
    if name.startswith("iterated_kolmogorov"):
        return models.iterated_kolmogorov(int(name[len("iterated_kolmogorov"):]))
    raise DomainError(f"unknown model '{name}'")


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _load_config(path: str) -> dict:
    import jsonschema

    with open(path) as fh:
        config = json.load(fh)
    schema = json.loads(
        resources.files("hypoflow").joinpath("config_schema.json").read_text()
    )
    jsonschema.validate(config, schema)
    params_schema = schema["$defs"][config["command"]]
    jsonschema.validate(config["parameters"], params_schema)
    return config


def _write(outdir: Path, name: str, text: str) -> Path:
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / name
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------

def _cmd_simulate(config, outdir, seed_override, threads):
    p = dict(config["parameters"])
    model = _resolve_model(config.get("model", "kolmogorov"))
    seed = seed_override if seed_override is not None else p["seed"]
    scheme = p.get("scheme", "euler")
    start = p.get("start", [1.0, 0.0] if model is models.ASIAN else [0.0] * model.dim)
    if scheme == "exact":
        if model is models.KOLMOGOROV:
            law = kolmogorov.langevin_law(start[0], start[1], p["horizon"])
        elif model.name.startswith("iterated_kolmogorov"):
            law = kolmogorov.iterated_covariance(model.dim, p["horizon"])
        elif model.name.startswith("heat"):
            law = kolmogorov.GaussianLaw(
                np.asarray(start, dtype=float),
                2.0 * p["horizon"] * np.eye(model.dim),
            )
        else:
            raise DomainError(f"no exact sampler for model {model.name}")
        batch = montecarlo.sample_gaussian_exact(law, p["n"], seed, threads=threads)
    else:
        batch = montecarlo.euler_maruyama(
            model, start, p["horizon"], p.get("dt", p["horizon"] / 1000.0),
            p["n"], seed, variant=p.get("variant", "sqrt2"), threads=threads,
        )
    outdir.mkdir(parents=True, exist_ok=True)
    montecarlo.save_batch(batch, outdir / "batch.bin")
    mean = batch.endpoints.mean(axis=0)
    var = batch.endpoints.var(axis=0, ddof=1)
    lines = ["coordinate,mean,variance"]
    for j in range(mean.size):
        lines.append(f"{j},{_fmt(mean[j])},{_fmt(var[j])}")
    lines.append(f"floored,{batch.floored},0")
    return _write(outdir, "batch_summary.csv", "\n".join(lines) + "\n")


def _cmd_density_eval(config, outdir, seed_override, threads):
    p = config["parameters"]
    rows = []
    if p["kernel"] == "gamma0":
        header = "x,y,t,xi,eta,tau,density"
        for pt in p["points"]:
            if len(pt) != 6:
                raise DomainError("gamma0 points need 6 coordinates")
            rows.append(",".join(_fmt(v) for v in pt) + "," + _fmt(kolmogorov.gamma0(*pt)))
    else:
        header = "x,y,t,x0,y0,density"
        for pt in p["points"]:
            if len(pt) != 5:
                raise DomainError("yor points need 5 coordinates")
            x, y, t, x0, y0 = pt
            rows.append(",".join(_fmt(v) for v in pt) + "," + _fmt(asian.yor_density(x, y, t, x0, y0)))
    return _write(outdir, "density.csv", header + "\n" + "\n".join(rows) + "\n")


def _cmd_value_fn(config, outdir, seed_override, threads):
    p = config["parameters"]
    model_name = config.get("model", "asian")
    if model_name == "kolmogorov":
        lines = ["x,y,t,xi,eta,tau,psi"]
        for row in p["endpoints"]:
            lines.append(",".join(_fmt(v) for v in row) + "," + _fmt(kolmogorov.psi0(*row)))
        return _write(outdir, "value_fn.csv", "\n".join(lines) + "\n")
    endpoints = [AsianEndpoints(*row) for row in p["endpoints"]]
    return _write(outdir, "value_fn.csv", asian.value_table_csv(endpoints))


def _cmd_chain(config, outdir, seed_override, threads):
    p = dict(config["parameters"])
    params = harnack.ChainParams(
        M=p.get("M", 8.0), h=p.get("h", 1.0), c=p.get("c", 0.5), theta=p.get("theta", 0.5)
    )
    if p["kind"] == "parabolic":
        chain = harnack.build_parabolic_chain(p["x0"], p["t0"], p["x"], p["t"], params)
    else:
        model = _resolve_model(config.get("model", "kolmogorov"))
        ctrl = ControlPath(np.asarray(p["control_grid"]), np.asarray(p["control_values"]))
        path = integrate_path(model, np.asarray(p["start"]), ctrl, p["step"])
        chain = harnack.build_path_chain(model, path, params)
    return _write(outdir, "chain.csv", harnack.chain_to_csv(chain))


def _cmd_cc_distance(config, outdir, seed_override, threads):
    p = config["parameters"]
    targets, results = [], []
    for pair in p["pairs"]:
        res = heisenberg.cc_distance(np.asarray(pair[0]), np.asarray(pair[1]))
        targets.append(list(pair[0]) + list(pair[1]))
        results.append(res)
    lines = ["px,py,pw,qx,qy,qw,distance,solver,residual"]
    for tgt, res in zip(targets, results):
        lines.append(
            ",".join(_fmt(v) for v in tgt)
            + f",{_fmt(res.distance)},{res.solver},{_fmt(res.residual)}"
        )
    return _write(outdir, "cc_distance.csv", "\n".join(lines) + "\n")


def _cmd_verify(config, outdir, seed_override, threads):
    p = dict(config["parameters"])
    seed = seed_override if seed_override is not None else p["seed"]
    target = p["target"]
    kwargs = {"n": p["n"], "seed": seed, "threads": threads}
    if "horizon" in p:
        kwargs["horizon"] = p["horizon"]
    if "dt" in p and target != "kolmogorov":
        kwargs["dt"] = p["dt"]
    if "fit_seed" in p and target != "kolmogorov":
        kwargs["fit_seed"] = p["fit_seed"]
    if "band" in p and target == "kolmogorov":
        kwargs["band"] = p["band"]
    if "window" in p and target == "heisenberg":
        kwargs["window"] = p["window"]
    report = {
        "kolmogorov": verify.verify_kolmogorov,
        "heat": verify.verify_heat,
        "heisenberg": verify.verify_heisenberg,
    }[target](**kwargs)
    payload = {"target": target, "seed": seed, **report.to_json_dict()}
    return _write(outdir, "bound_report.json", json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _cmd_calibrate_hjb(config, outdir, seed_override, threads):
    p = dict(config["parameters"])
    seed = seed_override if seed_override is not None else p.get("seed", 3)
    winner, table = asian.calibrate_hjb_convention(
        n_points=p.get("n_points", 200), seed=seed
    )
    fd_step = p.get("fd_step", 1e-4)
    n_asian = p.get("n_asian", 100)
    rng = np.random.default_rng(seed + 1)
    worst = 0.0
    for _ in range(n_asian):
        x1, x0 = np.exp(0.3 * rng.standard_normal(2))
        t1 = 1.0 + 0.5 * abs(rng.standard_normal())
        t0 = t1 - (0.8 + 0.4 * abs(rng.standard_normal()))
        dy = (t1 - t0) * np.sqrt(x1 * x0) * np.exp(0.7 * rng.standard_normal())
        y1 = rng.standard_normal()
        e = AsianEndpoints(x1, y1, t1, x0, y1 + dy, t0)
        worst = max(worst, abs(asian.hjb_residual(e, fd_step, convention=winner)))
    payload = {
        "winner": {"triple": winner[0], "drift_sign": winner[1]},
        "kolmogorov_residuals": {f"{k[0]}/{k[1]:+d}": v for k, v in table.items()},
        "asian_max_residual": worst,
        "fd_step": fd_step,
        "n_asian": n_asian,
    }
    return _write(outdir, "hjb_calibration.json", json.dumps(payload, indent=2, sort_keys=True) + "\n")


_HANDLERS = {
    "simulate": _cmd_simulate,
    "density-eval": _cmd_density_eval,
    "value-fn": _cmd_value_fn,
    "chain": _cmd_chain,
    "cc-distance": _cmd_cc_distance,
    "verify": _cmd_verify,
    "calibrate-hjb": _cmd_calibrate_hjb,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hypoflow", description="batch driver for the hypoflow laboratory"
    )
    parser.add_argument("--config", required=True, help="JSON experiment configuration")
    parser.add_argument("--output", default=".", help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument(
        "--threads", type=int, default=1,
        help="sampler worker threads (results are independent of this)",
    )
    args = parser.parse_args(argv)

    import jsonschema

    outdir = Path(args.output)
    try:
        config = _load_config(args.config)
        artifact = _HANDLERS[config["command"]](config, outdir, args.seed, args.threads)
    except AccuracyError as exc:
        print(f"accuracy-window error: {exc}", file=sys.stderr)
        return 3
    except (DomainError, ValueError, jsonschema.ValidationError, KeyError) as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return 2
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "run.log", "a") as fh:
        fh.write(f"{datetime.datetime.now().isoformat()} {config['command']} -> {artifact}\n")
    print(artifact)
    return 0


if __name__ == "__main__":
    sys.exit(main())
