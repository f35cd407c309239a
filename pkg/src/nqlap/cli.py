"""Batch front door: subcommand dispatch, sweep orchestration, artifact files.

Subcommands
-----------
regime       print the (p, q) regime classification
gn           sharp-constant solve: ground state profile, K, residuals
c2star       mass-critical threshold (requires p = pq_star)
mass-curve   global-minimum sweep over a mass list
c1star       threshold-mass bisection
gamma-curve  zero-Pohozaev level sweep
asymptotics  mass-decade monotonicity sweep
verify       verification suite on a saved profile CSV

Every output file embeds the hash of the resolved configuration; reruns
with the same configuration and seed are byte-identical (no timestamps,
sorted keys, shortest-round-trip floats).  Exit codes: 0 success, 2
validation error, 3 solver error, 4 partial sweep.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from dataclasses import asdict, dataclass

import numpy as np

from . import checks as checks_mod
from . import errors as err
from .flow import FlowOptions, find_c1_star, flow_minimize, mass_energy_curve
from .gn import GnOptions, critical_mass_c2, minimize_weinstein, shoot
from .manifold import GammaOptions, asymptotic_sweep, gamma_curve
from .params import classify, validate
from .radial import build_grid, grading_for_first_node, load_profile, save_profile

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SOLVER = 3
EXIT_PARTIAL = 4


@dataclass
class RunConfig:
    command: str
    N: int
    q: float
    p: float
    b: float
    R: float
    n: int
    grading: float
    seed: int
    workers: int
    out: str
    extra: dict

    def canonical(self) -> dict:
        d = asdict(self)
        d.pop("out")
        return d

    @property
    def config_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _fmt(x) -> object:
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, float) and math.isnan(x):
        return None
    return x


def _write_json(path, payload: dict, cfg: RunConfig) -> None:
    payload = {**payload, "config_hash": cfg.config_hash}
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1, default=_fmt)
        fh.write("\n")


def _write_csv(path, header: str, rows, cfg: RunConfig) -> None:
    lines = [f"# config_hash={cfg.config_hash}", header]
    for row in rows:
        lines.append(",".join(
            f"{x:.17g}" if isinstance(x, float) else str(x) for x in row
        ))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _add_common(sp, need_params: bool = True):
    if need_params:
        sp.add_argument("--N", type=int, required=True)
        sp.add_argument("--q", type=float, required=True)
        sp.add_argument("--p", type=float, required=True)
        sp.add_argument("--b", type=float, required=True)
    sp.add_argument("--R", type=float, default=40.0)
    sp.add_argument("--n", type=int, default=4096)
    sp.add_argument("--grading", type=float, default=None,
                    help="geometric cell ratio; default puts r_0 near 1e-5 R")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--out", type=str, default=None,
                    help="output directory (default: NQ_OUT_DIR or '.')")


def _add_flow_flags(sp):
    sp.add_argument("--tau0", type=float, default=None)
    sp.add_argument("--max-iters", type=int, default=None)
    sp.add_argument("--rearrange-every", type=int, default=None)
    sp.add_argument("--tol-grad", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nqlap", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("regime", help="print the regime classification")
    _add_common(sp)

    sp = sub.add_parser("gn", help="sharp constant and ground state")
    _add_common(sp)
    sp.add_argument("--restarts", type=int, default=5)
    sp.add_argument("--skip-shooting", action="store_true")

    sp = sub.add_parser("c2star", help="mass-critical threshold")
    _add_common(sp)
    sp.add_argument("--restarts", type=int, default=5)

    sp = sub.add_parser("mass-curve", help="global-minimum sweep")
    _add_common(sp)
    _add_flow_flags(sp)
    sp.add_argument("--c-list", type=str, required=True,
                    help="comma-separated strictly increasing masses")

    sp = sub.add_parser("c1star", help="threshold-mass bisection")
    _add_common(sp)
    _add_flow_flags(sp)
    sp.add_argument("--c-lo", type=float, default=1e-2)
    sp.add_argument("--c-hi", type=float, default=1.0)
    sp.add_argument("--tol", type=float, default=1e-3)

    sp = sub.add_parser("gamma-curve", help="zero-Pohozaev level sweep")
    _add_common(sp)
    sp.add_argument("--c-list", type=str, required=True)
    sp.add_argument("--max-iters", type=int, default=None)

    sp = sub.add_parser("asymptotics", help="mass-decade monotonicity sweep")
    _add_common(sp)
    sp.add_argument("--c-list", type=str, default=None,
                    help="defaults to 7 log-spaced decades in [1e-3, 1e3]")
    sp.add_argument("--max-iters", type=int, default=None)

    sp = sub.add_parser("verify", help="verification suite on a saved profile")
    sp.add_argument("profile", type=str)
    sp.add_argument("--gn-json", type=str, default=None,
                    help="reuse K from a saved gn result instead of recomputing")
    sp.add_argument("--lam", type=float, default=None)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--n-samples", type=int, default=200)
    sp.add_argument("--out", type=str, default=None)

    return ap


def _config_from(args) -> RunConfig:
    out = args.out or os.environ.get("NQ_OUT_DIR") or "."
    grading = args.grading
    if grading is None:
        grading = grading_for_first_node(args.R, args.n)
    extra = {}
    for key in ("c_list", "c_lo", "c_hi", "tol", "restarts", "tau0", "max_iters",
                "rearrange_every", "tol_grad", "skip_shooting", "n_samples"):
        if hasattr(args, key) and getattr(args, key) is not None:
            extra[key] = getattr(args, key)
    return RunConfig(
        command=args.command, N=args.N, q=args.q, p=args.p, b=args.b,
        R=args.R, n=args.n, grading=grading, seed=args.seed,
        workers=args.workers, out=out, extra=extra,
    )


def _parse_c_list(text: str):
    vals = [float(x) for x in text.split(",") if x.strip()]
    if not vals:
        raise err.ParameterError("empty mass list")
    return vals


def _flow_options(args, seed: int) -> FlowOptions:
    opts = FlowOptions(seed=seed)
    if getattr(args, "tau0", None) is not None:
        opts.tau0 = args.tau0
    if getattr(args, "max_iters", None) is not None:
        opts.max_iters = args.max_iters
    if getattr(args, "rearrange_every", None) is not None:
        opts.rearrange_every = args.rearrange_every
    if getattr(args, "tol_grad", None) is not None:
        opts.tol_grad = args.tol_grad
    return opts


def _run(args) -> int:
    if args.command == "verify":
        return _run_verify(args)

    params = validate(args.N, args.q, args.p, args.b)
    cfg = _config_from(args)
    os.makedirs(cfg.out, exist_ok=True)
    _write_json(os.path.join(cfg.out, "config.json"), cfg.canonical(), cfg)
    grid = build_grid(params.N, cfg.R, cfg.n, cfg.grading)

    if args.command == "regime":
        reg = classify(params)
        payload = {
            "tag": reg.tag.value,
            "compactness_ok": reg.compactness_ok,
            "sigma_pq": params.sigma_pq,
            "p2_star": params.p2_star,
            "pq_star": params.pq_star,
            "two_b_star": params.two_b_star,
            "qb_star": None if math.isinf(params.qb_star) else params.qb_star,
        }
        print(reg.tag.value)
        _write_json(os.path.join(cfg.out, "regime.json"), payload, cfg)
        return EXIT_OK

    if args.command in ("gn", "c2star"):
        gn_opts = GnOptions(n_restarts=args.restarts, seed=cfg.seed)
        res = minimize_weinstein(params, grid, gn_opts)
        payload = {
            "J_min": res.J_min,
            "K": res.K,
            "residuals": {"el_residual": res.el_residual,
                          **res.identity_residuals},
            "restarts": res.restart_values,
        }
        if args.command == "c2star":
            c2 = critical_mass_c2(params, grid, gn=res)
            payload["c2_star"] = c2.c2_star
            payload["c2_star_alt"] = c2.c2_star_alt
            payload["c2_star_gap"] = c2.relative_gap
        elif not args.skip_shooting:
            rep = shoot(params, grid)
            from .radial import weinstein

            payload["shooting"] = {
                "K": 1.0 / weinstein(rep.field, params),
                "s_star": rep.s_star,
                "orientation": rep.orientation,
            }
            save_profile(os.path.join(cfg.out, "Q_shooting.csv"), rep.field,
                         params, [f"config_hash={cfg.config_hash}", "form=sharp"])
        save_profile(os.path.join(cfg.out, "Q.csv"), res.Q, params,
                     [f"config_hash={cfg.config_hash}", "form=sharp"])
        _write_json(os.path.join(cfg.out, "gnresult.json"), payload, cfg)
        print(json.dumps(payload, sort_keys=True, default=_fmt))
        return EXIT_OK

    if args.command == "mass-curve":
        c_list = _parse_c_list(args.c_list)
        curve = mass_energy_curve(params, c_list, grid,
                                  _flow_options(args, cfg.seed), cfg.workers)
        rows = [
            (r.c, r.m, r.status.value, r.lam, r.pohozaev_residual, r.iters)
            for r in curve.rows
        ]
        _write_csv(os.path.join(cfg.out, "mass_curve.csv"),
                   "c,m,status,lambda,pohozaev_residual,iters", rows, cfg)
        failed = sum(1 for r in curve.rows if r.iters < 0 or math.isnan(r.m))
        print(f"{len(rows)} rows, {failed} failed")
        return EXIT_PARTIAL if failed else EXIT_OK

    if args.command == "c1star":
        res = find_c1_star(params, grid, (args.c_lo, args.c_hi),
                           args.tol, _flow_options(args, cfg.seed))
        payload = {
            "c1_star": res.c1_star,
            "bracket": list(res.bracket),
            "evaluations": [
                {"c": c, "negative": neg, "value": val}
                for c, neg, val in res.evaluations
            ],
        }
        _write_json(os.path.join(cfg.out, "c1star.json"), payload, cfg)
        print(f"c1_star = {res.c1_star:.12g}")
        return EXIT_OK

    if args.command == "gamma-curve":
        c_list = _parse_c_list(args.c_list)
        gopts = GammaOptions(seed=cfg.seed)
        if args.max_iters is not None:
            gopts.max_iters = args.max_iters
        curve = gamma_curve(params, c_list, grid, gopts)
        rows = [
            (r.c, r.gamma, r.lam, r.pohozaev_residual, r.status.value, r.iters)
            for r in curve.rows
        ]
        _write_csv(os.path.join(cfg.out, "gamma_curve.csv"),
                   "c,gamma,lambda,pohozaev_residual,status,iters", rows, cfg)
        failed = sum(1 for r in curve.rows if r.iters < 0 or math.isnan(r.gamma))
        print(f"{len(rows)} rows, {failed} failed")
        return EXIT_PARTIAL if failed else EXIT_OK

    if args.command == "asymptotics":
        gopts = GammaOptions(seed=cfg.seed)
        if args.max_iters is not None:
            gopts.max_iters = args.max_iters
        decades = _parse_c_list(args.c_list) if args.c_list else None
        rep = asymptotic_sweep(params, grid, decades, gopts)
        payload = {
            "rows": [
                {"c": r[0], "gamma": r[1], "lambda": r[2],
                 "grad2_sq": r[3], "gradq_q": r[4], "status": r[5].value}
                for r in rep.rows
            ],
            "trends": rep.trends,
            "all_pass": rep.all_pass,
        }
        _write_json(os.path.join(cfg.out, "asymptotics.json"), payload, cfg)
        print(json.dumps(rep.trends, sort_keys=True))
        return EXIT_OK

    raise err.ParameterError(f"unknown command {args.command}")


def _read_profile_form(path) -> str:
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            if "form=" in line:
                return line.split("form=", 1)[1].strip()
    return "full"


def _run_verify(args) -> int:
    params, fld = load_profile(args.profile)
    form = _read_profile_form(args.profile)
    out = args.out or os.environ.get("NQ_OUT_DIR") or "."
    os.makedirs(out, exist_ok=True)
    K = None
    if args.gn_json:
        with open(args.gn_json) as fh:
            K = json.load(fh)["K"]
    else:
        res = minimize_weinstein(params, fld.grid, GnOptions(n_restarts=2,
                                                             seed=args.seed))
        K = res.K
    rep = checks_mod.run_suite(fld, params, lam=args.lam, K=K,
                               n_samples=args.n_samples, seed=args.seed,
                               form=form)
    with open(os.path.join(out, "verify.json"), "w") as fh:
        fh.write(rep.to_json(profile=os.path.basename(args.profile)))
        fh.write("\n")
    for c in rep.checks:
        state = {True: "pass", False: "FAIL", None: "n/a"}[c.passed]
        print(f"{c.name}: {state} (value={c.value:.6g}, threshold={c.threshold:.6g})")
    return EXIT_OK if rep.all_passed() else EXIT_SOLVER


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except (err.ParameterError, err.InvalidGrid, err.InvalidRegime,
            err.RegimeMismatch, err.BracketInvalid, ValueError) as exc:
        print(json.dumps({"error": {"type": type(exc).__name__,
                                    "message": str(exc)}}))
        return EXIT_VALIDATION
    except err.NqlapError as exc:
        print(json.dumps({"error": {"type": type(exc).__name__,
                                    "message": str(exc)}}))
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
