"""Command-line front end.

Each subcommand has a table of parameters with defaults. Values come from
the defaults, then from ``--config file.json`` (a flat object of parameter
names), then from ``--<name>`` flags. Unknown keys are rejected.

Exit status: 0 on success, 2 for invalid input, 3 for numerical failure
(a diagnostic JSON object is written to stderr).
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import classical, opanalysis, qbasis, qline, qprop
from .errors import BoxGaugeError, ConfigurationError, NumericalFailure
from .model import DrivingField, PhysicalConstants

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3

_CONSTS = {"hbar": 1.0, "mass": 1.0, "box_length": 1.0, "alpha": 1.0}
_DRIVEN = {"kind": "cosine", "f0": 5.0, "omega": 2 * math.pi, "t0": 0.0}

COMMANDS: dict[str, dict] = {
    "classical-sim": {
        "constants": _CONSTS, "field": {"kind": "cosine", "f0": 10.0, "omega": 4 * math.pi, "t0": 0.0},
        "x0": 0.3, "v0": 1.0, "t0": 0.0, "t_end": 10.0, "n_samples": 1001,
    },
    "classical-lyapunov": {
        "constants": _CONSTS, "field": {"kind": "cosine", "f0": 10.0, "omega": 4 * math.pi, "t0": 0.0},
        "x0": 0.3, "v0": 1.0, "t0": 0.0, "horizon": 4000.0, "renorm_interval": 1.0, "delta0": 1e-9,
    },
    "qbox-propagate": {
        "constants": _CONSTS, "field": _DRIVEN, "N": 32, "dt": 1e-3, "scheme": "magnus",
        "gauge": "gauge0", "initial_mode": 1, "t1": 1.0, "n_samples": 11,
    },
    "qbox-gauge-residual": {
        "constants": _CONSTS, "field": _DRIVEN, "N": 32, "dt": 1e-3, "scheme": "magnus",
        "initial_mode": 1, "t1": 1.0,
    },
    "qbox-naive-compare": {
        "constants": _CONSTS, "field": _DRIVEN, "N": 16, "dt": 1e-3, "t1": 1.0,
    },
    "qline-bch": {
        "constants": _CONSTS, "f0": 1.0, "tau": 1.0, "steps": 16384, "M": 1024,
        "x_min": -20.0, "x_max": 20.0, "x0": 0.0, "p0": 0.5, "sigma": 1.0,
    },
    "qline-ehrenfest": {
        "constants": _CONSTS, "field": {"kind": "constant", "f0": 1.0, "t0": 0.0}, "M": 1024,
        "x_min": -20.0, "x_max": 20.0, "x0": 0.0, "p0": 0.5, "sigma": 1.0,
        "t_end": 2.0, "n_times": 21, "dt": 1e-3,
    },
    "op-bound-audit": {
        "constants": _CONSTS, "families": ["constant", "bump", "linear"], "trials": 1000,
        "N": 32, "a0_fraction": 0.5,
    },
    "op-defect": {"constants": _CONSTS, "family": "linear", "n_points": 65},
    "matrices-dump": {"constants": _CONSTS, "op": "P", "N": 4, "theta": 0.0},
}

SUMMARY_KEY = {
    "classical-sim": "reflections", "classical-lyapunov": "lambda",
    "qbox-propagate": "final_norm", "qbox-gauge-residual": "residual",
    "qbox-naive-compare": "difference_norm", "qline-bch": "residual",
    "qline-ehrenfest": "max_deviation", "op-bound-audit": "violations",
    "op-defect": "indices", "matrices-dump": "hermiticity_residual",
}


# --------------------------------------------------------------------------
# configuration

def _coerce(name: str, default, value):
    """Convert a flag or JSON value to the type of the default."""
    if isinstance(default, (dict, list)):
        if isinstance(value, str):
            try:
                value = json.loads(value)
            except json.JSONDecodeError as exc:
                raise ConfigurationError(f"--{name}: invalid JSON ({exc})") from None
        if not isinstance(value, type(default)):
            raise ConfigurationError(f"{name} must be a JSON {type(default).__name__}")
        return value
    try:
        if isinstance(default, bool):
            return value if isinstance(value, bool) else str(value).lower() in ("1", "true", "yes")
        if isinstance(default, int):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        if isinstance(default, float):
            return float(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{name}: cannot interpret {value!r} as {type(default).__name__}") from None
    return str(value)


def resolve_params(command: str, config: dict | None, overrides: dict) -> dict:
    defaults = COMMANDS[command]
    params = {k: (dict(v) if isinstance(v, dict) else v) for k, v in defaults.items()}
    for source in (config or {}), overrides:
        unknown = set(source) - set(defaults)
        if unknown:
            raise ConfigurationError(f"unknown parameter(s) for {command}: {sorted(unknown)}")
        for k, v in source.items():
            params[k] = _coerce(k, defaults[k], v)
    return params


def _consts(params) -> PhysicalConstants:
    return PhysicalConstants.from_dict(params["constants"])


def _field(params) -> DrivingField:
    return DrivingField.from_dict(params["field"])


# --------------------------------------------------------------------------
# output

@contextlib.contextmanager
def atomic_output(path: str):
    """Yield a temporary path next to ``path``; rename it into place on success."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    os.close(fd)
    try:
        yield tmp
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def _write_json(path, payload):
    with atomic_output(path) as tmp, open(tmp, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_rows(path, header, rows):
    with atomic_output(path) as tmp, open(tmp, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format(v, ".17g") if isinstance(v, float) else v for v in row])


def _sibling(path: str, suffix: str) -> str:
    root, ext = os.path.splitext(path)
    return f"{root}_{suffix}{ext}"


# --------------------------------------------------------------------------
# subcommands; each returns the headline value and writes its artifacts

def _classical_state(params):
    return classical.ClassicalState(params["x0"], params["v0"], params["t0"])


def cmd_classical_sim(p, out, fmt, seed):
    consts, fld = _consts(p), _field(p)
    traj, events = classical.simulate_box(_classical_state(p), fld, consts, p["t_end"],
                                          n_samples=p["n_samples"])
    if fmt == "csv":
        with atomic_output(out) as tmp:
            classical.write_trajectory_csv(tmp, traj, fld, consts)
        with atomic_output(_sibling(out, "events")) as tmp:
            classical.write_events_csv(tmp, events)
    else:
        _write_json(out, {
            "params": p, "seed": seed,
            "trajectory": [{"t": s.t, "x": s.x, "v": s.v} for s in traj],
            "events": [{"t_hit": e.t_hit, "wall": e.wall.value, "v_in": e.v_in, "v_out": e.v_out}
                       for e in events],
        })
    return len(events)


def cmd_classical_lyapunov(p, out, fmt, seed):
    res = classical.lyapunov_run(_classical_state(p), _field(p), _consts(p), p["horizon"],
                                 p["renorm_interval"], p["delta0"])
    row = {"lambda": res.estimate, "elapsed": res.elapsed,
           "renormalizations": res.renormalizations, "delta0": res.delta0}
    if fmt == "csv":
        _write_rows(out, list(row), [list(row.values())])
    else:
        _write_json(out, {"params": p, "seed": seed, **row})
    return res.estimate


def _initial_mode(p, consts):
    if not 1 <= p["initial_mode"] <= p["N"]:
        raise ConfigurationError("initial_mode must lie in 1..N")
    return qbasis.SpectralState.basis(p["initial_mode"], p["N"], consts)


def cmd_qbox_propagate(p, out, fmt, seed):
    consts, fld = _consts(p), _field(p)
    cfg = qprop.PropagationConfig(p["N"], p["dt"], qprop.Scheme(p["scheme"]))
    state = _initial_mode(p, consts)
    if p["gauge"] == "gauge0":
        builder = qprop.h0_builder(cfg.N, fld, consts)
    elif p["gauge"] == "gauge_chi":
        builder = qprop.hchi_builder(cfg.N, fld, consts)
        state = qprop.gauge_map(state, fld.t0, fld, consts, inverse=True)
    else:
        raise ConfigurationError("gauge must be gauge0 or gauge_chi")
    times = np.linspace(fld.t0, p["t1"], p["n_samples"])
    samples = qprop.propagate_samples(state, builder, fld.t0, times, cfg)
    rows = [[t, n + 1, float(c.real), float(c.imag)] for t, s in samples for n, c in enumerate(s.coeffs)]
    if fmt == "csv":
        _write_rows(out, ["t", "n", "re", "im"], rows)
    else:
        _write_json(out, {"params": p, "seed": seed, "samples": [
            {"t": t, "coeffs": [[float(c.real), float(c.imag)] for c in s.coeffs]} for t, s in samples]})
    return samples[-1][1].norm()


def cmd_qbox_gauge_residual(p, out, fmt, seed):
    consts, fld = _consts(p), _field(p)
    cfg = qprop.PropagationConfig(p["N"], p["dt"], qprop.Scheme(p["scheme"]))
    r = qprop.gauge_equivalence_residual(_initial_mode(p, consts), fld, consts, p["t1"], cfg)
    if fmt == "csv":
        _write_rows(out, ["N", "dt", "t1", "residual"], [[p["N"], p["dt"], p["t1"], r]])
    else:
        _write_json(out, {"params": p, "seed": seed, "residual": r})
    return r


def cmd_qbox_naive_compare(p, out, fmt, seed):
    consts, fld = _consts(p), _field(p)
    cfg = qprop.PropagationConfig(p["N"], p["dt"])
    cmp = qprop.compare_naive(fld.t0, p["t1"], fld, consts, cfg)
    row = {"difference_norm": cmp.difference_norm, "naive_unitarity": cmp.naive_unitarity,
           "ordered_unitarity": cmp.ordered_unitarity}
    if fmt == "csv":
        _write_rows(out, list(row), [list(row.values())])
    else:
        _write_json(out, {"params": p, "seed": seed, "label": cmp.label, **row})
    return cmp.difference_norm


def _packet(p, consts):
    grid = qline.Grid(p["M"], p["x_min"], p["x_max"])
    return qline.gaussian_packet(p["x0"], p["p0"], p["sigma"], grid, consts)


def cmd_qline_bch(p, out, fmt, seed):
    consts = _consts(p)
    pk = _packet(p, consts)
    fld = DrivingField.constant(p["f0"])
    ladder = [s for s in (p["steps"] // 4, p["steps"] // 2, p["steps"]) if s >= 1]
    res = [qline.bch_check(pk, p["tau"], fld, consts, s) for s in ladder]
    ratios = [math.nan] + [a / b if b > 0 else math.nan for a, b in zip(res, res[1:])]
    if fmt == "csv":
        _write_rows(out, ["steps", "residual", "ratio"], [[s, r, q] for s, r, q in zip(ladder, res, ratios)])
    else:
        _write_json(out, {"params": p, "seed": seed,
                          "ladder": [{"steps": s, "residual": r} for s, r in zip(ladder, res)]})
    return res[-1]


def cmd_qline_ehrenfest(p, out, fmt, seed):
    consts, fld = _consts(p), _field(p)
    pk = _packet(p, consts)
    times = np.linspace(0.0, p["t_end"], p["n_times"])
    rows = qline.ehrenfest_check(pk, times, fld, consts, p["dt"])
    if fmt == "csv":
        with atomic_output(out) as tmp:
            qline.write_moments_csv(tmp, rows)
    else:
        _write_json(out, {"params": p, "seed": seed, "rows": [
            {"t": r.t, "mean_x": r.mean_x, "x_classical": r.x_classical, "deviation": r.deviation,
             "mean_p": r.mean_p, "var_x": r.var_x} for r in rows]})
    return max(r.deviation for r in rows)


def cmd_op_bound_audit(p, out, fmt, seed):
    reports = opanalysis.bound_audit(tuple(p["families"]), p["trials"], p["N"], p["a0_fraction"],
                                     seed, _consts(p))
    if fmt == "csv":
        keys = list(reports[0])
        _write_rows(out, keys, [[r[k] for k in keys] for r in reports])
    else:
        _write_json(out, reports)
    return sum(r["violations"] for r in reports)


def cmd_op_defect(p, out, fmt, seed):
    consts = _consts(p)
    A = opanalysis.BoundedCoefficient.family(p["family"], consts)
    sol = opanalysis.defect_solutions(A, consts)
    resid = opanalysis.defect_residual(A, sol, consts)
    L = consts.box_length
    x = np.linspace(0.0, L, p["n_points"])[1:-1]
    if fmt == "csv":
        _write_rows(out, ["x", "psi_plus", "psi_minus"],
                    [[float(a), float(b), float(c)] for a, b, c in zip(x, sol.psi_plus(x), sol.psi_minus(x))])
    else:
        _write_json(out, {"params": p, "seed": seed, "n_plus": sol.n_plus, "n_minus": sol.n_minus,
                          "endpoint_exponents": {k: list(v) for k, v in sol.exponents.items()},
                          "plug_back_residual": resid})
    return f"({sol.n_plus},{sol.n_minus}) residual={resid:.3e}"


def cmd_matrices_dump(p, out, fmt, seed):
    consts, N = _consts(p), p["N"]
    builders = {
        "T": lambda: qbasis.matrix_T(N, consts), "P": lambda: qbasis.matrix_P(N, consts),
        "x": lambda: qbasis.matrix_x(N, consts),
        "gauge": lambda: qbasis.matrix_gauge_phase(N, p["theta"], consts),
    }
    if p["op"] not in builders:
        raise ConfigurationError(f"op must be one of {sorted(builders)}")
    M = builders[p["op"]]()
    if fmt == "csv":
        with atomic_output(out) as tmp:
            M.write_csv(tmp)
    else:
        with atomic_output(out) as tmp, open(tmp, "w") as fh:
            fh.write(M.to_json(p["op"], p["theta"] if p["op"] == "gauge" else None) + "\n")
    return M.hermiticity_residual()


HANDLERS = {
    "classical-sim": cmd_classical_sim, "classical-lyapunov": cmd_classical_lyapunov,
    "qbox-propagate": cmd_qbox_propagate, "qbox-gauge-residual": cmd_qbox_gauge_residual,
    "qbox-naive-compare": cmd_qbox_naive_compare, "qline-bch": cmd_qline_bch,
    "qline-ehrenfest": cmd_qline_ehrenfest, "op-bound-audit": cmd_op_bound_audit,
    "op-defect": cmd_op_defect, "matrices-dump": cmd_matrices_dump,
}


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="boxgauge", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, defaults in COMMANDS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON file with parameter values")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", help="output path (default: <command>.<format>)")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        for key, value in defaults.items():
            shown = json.dumps(value) if isinstance(value, (dict, list)) else value
            sp.add_argument(f"--{key}", dest=f"param_{key}", default=None, metavar="VALUE",
                            help=f"default: {shown}")
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.seed < 0 or args.seed >= 2**64:
            raise ConfigurationError("seed must be an unsigned 64-bit integer")
        config = None
        if args.config:
            try:
                with open(args.config) as fh:
                    config = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigurationError(f"cannot read config: {exc}") from None
            if not isinstance(config, dict):
                raise ConfigurationError("config must be a JSON object")
        overrides = {k[len("param_"):]: v for k, v in vars(args).items()
                     if k.startswith("param_") and v is not None}
        params = resolve_params(args.command, config, overrides)
        out = args.out or f"{args.command}.{args.format}"
        headline = HANDLERS[args.command](params, out, args.format, args.seed)
    except NumericalFailure as exc:
        diag = {"error": type(exc).__name__, "message": str(exc),
                "diagnostic": {k: _jsonable(v) for k, v in exc.diagnostic.items()}}
        print(json.dumps(diag, sort_keys=True), file=sys.stderr)
        return EXIT_NUMERICAL
    except (BoxGaugeError, ValueError) as exc:
        print(f"boxgauge {args.command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    value = format(headline, ".6g") if isinstance(headline, float) else headline
    print(f"{args.command}: {SUMMARY_KEY[args.command]}={value} -> {out}")
    return EXIT_OK


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, (int, float, str, bool)) or v is None:
        return v
    return repr(v)


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
