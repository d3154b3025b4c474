"""Command-line front end: ``rmtlab <subcommand> [flags]``.

Exit codes: 0 on success, 1 on a parameter error (the message names the
violated constraint), 2 on an internal failure.  Every output starts with a
header holding the tool version, the full parameter set and the seed.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import math
import sys
from typing import List, Optional

import numpy as np

from . import __version__
from .approxev import approx_ev
from .ensembles import EnsembleSpec, Model, rng_stream, sample, STREAM_AUX
from .errors import RmtError
from .estimator import estimate_all, invert_spike, read_eigenvalues_csv
from .limits import BoundParams, Theorem, bound_rhs, lambda_theta, lambda_theta_c, mp_stieltjes, semicircle_stieltjes
from .linalg import eig_sym
from .mc import ExperimentPlan, convergence_sweep, run_tail
from .nets import build_net, certify

SIG_DIGITS = 12


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _round(obj):
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return None if math.isnan(obj) else obj
        return float(format(obj, f".{SIG_DIGITS}g"))
    if isinstance(obj, (np.floating,)):
        return _round(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _round(obj.tolist())
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    return obj


def _fmt(x) -> str:
    if isinstance(x, bool) or x is None:
        return str(x).lower() if isinstance(x, bool) else ""
    if isinstance(x, (float, np.floating)):
        return format(float(x), f".{SIG_DIGITS}g")
    return str(x)


def _header(args, command: str, params: dict) -> dict:
    return {
        "tool": "rmtlab",
        "version": __version__,
        "command": command,
        "params": params,
        "seed": getattr(args, "seed", None),
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }


def _emit(args, header: dict, result: dict, table: Optional[List[dict]] = None):
    if args.format == "csv":
        buf = io.StringIO()
        buf.write("# " + json.dumps(_round(header), sort_keys=True) + "\n")
        rows = table if table is not None else [result]
        if rows:
            cols = list(rows[0].keys())
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(cols)
            for row in rows:
                w.writerow([_fmt(row[c]) if not isinstance(row[c], (list, dict)) else json.dumps(_round(row[c])) for c in cols])
        text = buf.getvalue()
    else:
        text = json.dumps(_round({"header": header, "result": result}), indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _floats(text: str) -> List[float]:
    text = text.strip()
    return [float(x) for x in text.split(",") if x.strip()] if text else []


def _ints(text: str) -> List[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=0, help="64-bit master seed")
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--threads", type=int, default=1, help="worker threads for replicate loops")


def _add_model(p: argparse.ArgumentParser, need_n: bool = True):
    p.add_argument("--model", choices=["goe", "spiked"], required=True)
    p.add_argument("--n", type=int, required=need_n)
    p.add_argument("--p", type=int, default=None, help="rows of the spiked model")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--spikes", type=_floats, default=[], help="comma list: thetas (goe) or theta^2 values (spiked)")


def _spec(args, n: Optional[int] = None) -> EnsembleSpec:
    n = args.n if n is None else n
    if args.model == "goe":
        return EnsembleSpec(Model.DEFORMED_GOE, n=n, spikes=tuple(args.spikes), sigma=args.sigma, seed=args.seed)
    if args.p is None:
        raise RmtError("--p is required for the spiked model")
    return EnsembleSpec(Model.SPIKED_POPULATION, n=n, p=args.p, spikes=tuple(args.spikes), seed=args.seed)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rmtlab", description="Deformed random matrix spectral laboratory.")
    parser.add_argument("--version", action="version", version=f"rmtlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sample", help="sample one matrix and print its spectrum")
    _add_model(p)
    p.add_argument("--replicate", type=int, default=0)
    p.add_argument("--vectors", action="store_true", help="also output eigenvectors")
    _add_common(p)

    p = sub.add_parser("limits", help="deterministic limits, Stieltjes values and bound values")
    p.add_argument("--model", choices=["goe", "spiked"], required=True)
    p.add_argument("--theta", type=float, default=None, help="spike (goe)")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--theta-sq", type=float, default=None, help="population variance (spiked)")
    p.add_argument("--c", type=float, default=None, help="aspect ratio (spiked)")
    p.add_argument("--z", type=float, default=None, help="also evaluate the Stieltjes transform at z")
    p.add_argument("--theorem", choices=[t.value for t in Theorem], default=None, help="evaluate a tail bound")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--p", type=int, default=None)
    p.add_argument("--spikes", type=_floats, default=None)
    p.add_argument("--i", type=int, default=1)
    p.add_argument("--t", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--C1", type=float, default=2.0)
    p.add_argument("--C2", type=float, default=None)
    p.add_argument("--C3", type=float, default=None)
    _add_common(p)

    p = sub.add_parser("net", help="build and certify an epsilon-net of the unit ball")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--samples", type=int, default=100_000, help="coverage certification samples")
    _add_common(p)

    p = sub.add_parser("approx-ev", help="approximate eigenvector diagnostics for one draw")
    _add_model(p)
    p.add_argument("--i", type=int, default=1)
    p.add_argument("--smallest", action="store_true", help="target lambda_{p-i+1} (spiked)")
    p.add_argument("--replicate", type=int, default=0)
    p.add_argument("--lambda0", type=float, default=None)
    p.add_argument("--with-vector", action="store_true")
    _add_common(p)

    p = sub.add_parser("estimate", help="invert sample eigenvalues into spike estimates")
    p.add_argument("--lambda", dest="lam", type=float, default=None, help="single sample eigenvalue")
    p.add_argument("--c", type=float, default=None, help="aspect ratio for --lambda")
    p.add_argument("--input", default=None, help="CSV file, one eigenvalue per line")
    p.add_argument("--n", type=int, default=None, help="sample count for --input (c = p/n)")
    p.add_argument("--r-max", type=int, default=3)
    _add_common(p)

    p = sub.add_parser("verify", help="Monte Carlo tail frequencies against a bound")
    p.add_argument("--plan", default=None, help="plan JSON file (overrides model flags)")
    p.add_argument("--model", choices=["goe", "spiked"], default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--p", type=int, default=None)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--spikes", type=_floats, default=[])
    p.add_argument("--theorem", choices=[t.value for t in Theorem], default=None)
    p.add_argument("--t-grid", type=_floats, default=None)
    p.add_argument("--replicates", type=int, default=1000)
    p.add_argument("--i", type=int, default=1)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--C1", type=float, default=2.0)
    p.add_argument("--C2", type=float, default=None)
    p.add_argument("--C3", type=float, default=None)
    _add_common(p)

    p = sub.add_parser("sweep", help="median deviation from the limit across n")
    _add_model(p, need_n=False)
    p.add_argument("--n-list", type=_ints, required=True)
    p.add_argument("--ratio", type=float, default=None, help="p/n for the spiked model (p = round(ratio n))")
    p.add_argument("--replicates", type=int, default=200)
    p.add_argument("--i", type=int, default=1)
    p.add_argument("--smallest", action="store_true")
    _add_common(p)
    return parser


def _cmd_sample(args):
    spec = _spec(args)
    draw = sample(spec, args.replicate)
    spectrum = eig_sym(draw.matrix, want_vectors=args.vectors)
    params = {**spec.to_dict(), "replicate": args.replicate}
    result = {"eigenvalues": spectrum.eigenvalues}
    if args.vectors:
        result["eigenvectors"] = spectrum.eigenvectors
    table = [{"k": k + 1, "eigenvalue": float(x)} for k, x in enumerate(spectrum.eigenvalues)]
    _emit(args, _header(args, "sample", params), result, table)


def _cmd_limits(args):
    params = {"model": args.model}
    if args.theorem is not None:
        if args.n is None or args.t is None:
            raise RmtError("--theorem needs --n and --t")
        spikes = args.spikes if args.spikes is not None else []
        bp = BoundParams(Theorem(args.theorem), n=args.n, t=args.t, i=args.i, spikes=tuple(spikes), sigma=args.sigma,
                         p=args.p, delta=args.delta, C1=args.C1, C2=args.C2, C3=args.C3)
        params.update({"theorem": args.theorem, "n": args.n, "p": args.p, "t": args.t, "i": args.i, "spikes": spikes,
                       "sigma": args.sigma, "delta": args.delta, "C1": args.C1, "C2": args.C2, "C3": args.C3})
        result = {"bound_rhs": bound_rhs(bp)}
        _emit(args, _header(args, "limits", params), result)
        return
    if args.model == "goe":
        if args.theta is None:
            raise RmtError("--theta is required for --model goe")
        lim = lambda_theta(args.theta, args.sigma)
        params.update(theta=args.theta, sigma=args.sigma)
    else:
        if args.theta_sq is None or args.c is None:
            raise RmtError("--theta-sq and --c are required for --model spiked")
        lim = lambda_theta_c(args.theta_sq, args.c)
        params.update(theta_sq=args.theta_sq, c=args.c)
    result = {"value": lim.value, "branch": lim.branch.value}
    if args.z is not None:
        params["z"] = args.z
        g, gp = semicircle_stieltjes(args.z, args.sigma) if args.model == "goe" else mp_stieltjes(args.z, args.c)
        result.update(g=g, gprime=gp)
    _emit(args, _header(args, "limits", params), result)


def _cmd_net(args):
    net = build_net(args.m, args.epsilon, rng_stream(args.seed, STREAM_AUX, 0) if args.m > 1 else None)
    radius = certify(net, rng_stream(args.seed, STREAM_AUX, 1), samples=args.samples)
    params = {"m": args.m, "epsilon": args.epsilon, "samples": args.samples}
    result = {**net.header(), "certified": True, "coverage_radius": radius, "points": net.points}
    table = [{f"x{j + 1}": float(v) for j, v in enumerate(pt)} for pt in net.points]
    _emit(args, {**_header(args, "net", params), "net": _round(net.header())}, result, table)


def _cmd_approx_ev(args):
    spec = _spec(args)
    rep = approx_ev(sample(spec, args.replicate), args.i, args.smallest, args.lambda0)
    d = rep.to_dict()
    if not args.with_vector:
        d.pop("x")
    params = {**spec.to_dict(), "i": args.i, "smallest": args.smallest, "replicate": args.replicate, "lambda0": args.lambda0}
    _emit(args, _header(args, "approx-ev", params), d)


def _cmd_estimate(args):
    if args.lam is not None:
        if args.c is None:
            raise RmtError("--lambda needs --c")
        est = invert_spike(args.lam, args.c)
        params = {"lambda": args.lam, "c": args.c}
        _emit(args, _header(args, "estimate", params), est.to_dict())
        return
    if args.input is None or args.n is None:
        raise RmtError("give --lambda with --c, or --input with --n")
    with open(args.input) as fh:
        eigs = read_eigenvalues_csv(fh.read())
    ests = [e.to_dict() for e in estimate_all(eigs, args.n, args.r_max)]
    params = {"input": args.input, "n": args.n, "p": int(eigs.shape[0]), "r_max": args.r_max}
    _emit(args, _header(args, "estimate", params), {"estimates": ests}, ests)


def _cmd_verify(args):
    if args.plan:
        with open(args.plan) as fh:
            plan = ExperimentPlan.from_dict(json.load(fh))
        args.seed = plan.spec.seed
    else:
        if args.model is None or args.n is None or args.theorem is None or args.t_grid is None:
            raise RmtError("verify needs --plan, or --model, --n, --theorem and --t-grid")
        plan = ExperimentPlan(_spec(args), Theorem(args.theorem), tuple(args.t_grid), args.replicates, args.i,
                              args.delta, args.C1, args.C2, args.C3)
    report = run_tail(plan, threads=args.threads)
    d = report.to_dict()
    table = [{"t": r["t"], "emp": r["empirical_prob"], "lo95": r["lo95"], "hi95": r["hi95"],
              "bound": r["bound_rhs"], "dominated": r["dominated"]} for r in d["rows"]]
    _emit(args, _header(args, "verify", plan.to_dict()), d, table)


def _cmd_sweep(args):
    if args.model == "spiked" and args.ratio is None and args.p is None:
        raise RmtError("spiked sweeps need --ratio (p/n) or a fixed --p")

    def make(n: int) -> EnsembleSpec:
        if args.model == "goe":
            return EnsembleSpec(Model.DEFORMED_GOE, n=n, spikes=tuple(args.spikes), sigma=args.sigma, seed=args.seed)
        p = args.p if args.ratio is None else max(1, int(round(args.ratio * n)))
        return EnsembleSpec(Model.SPIKED_POPULATION, n=n, p=p, spikes=tuple(args.spikes), seed=args.seed)

    res = convergence_sweep(make, args.n_list, args.replicates, args.i, args.smallest, args.threads)
    params = {"model": args.model, "n_list": args.n_list, "ratio": args.ratio, "p": args.p, "sigma": args.sigma,
              "spikes": args.spikes, "replicates": args.replicates, "i": args.i, "smallest": args.smallest}
    d = res.to_dict()
    _emit(args, _header(args, "sweep", params), d, d["rows"])


COMMANDS = {
    "sample": _cmd_sample,
    "limits": _cmd_limits,
    "net": _cmd_net,
    "approx-ev": _cmd_approx_ev,
    "estimate": _cmd_estimate,
    "verify": _cmd_verify,
    "sweep": _cmd_sweep,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (RmtError, ValueError) as exc:
        print(f"rmtlab: parameter error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except Exception as exc:  # pragma: no cover - defensive
        print(f"rmtlab: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
