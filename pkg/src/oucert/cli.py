"""Command-line front end: validate -> certify -> verify -> simulate.

Exit-code contract: 0 success, 1 analytic failure (a check ran and failed),
2 input error (bad config, bad flags, unsatisfiable hypotheses), 3
statistical non-convergence (soft failure).  Every report embeds a run
manifest (command, config, resolved parameters, version, seed, timestamps)
so results can be reproduced from the report alone.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import importlib.metadata
import json
import sys
import traceback

import numpy as np

from oucert import cheb, cqlf, lyap, matkit, oumodel, sim

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INPUT = 2
EXIT_SOFT = 3

_DEFAULT_NUMERICS = {
    "tol_zero": matkit.TOL_ZERO,
    "tol_semi": cqlf.TOL_SEMI_FACTOR,
    "shells": None,
    "samples_per_shell": 4096,
    "eps": None,
    "dt": None,
    "horizon": sim.DEFAULT_HORIZON,
    "replicas": sim.DEFAULT_REPLICAS,
}


class InputError(Exception):
    """Config or flag problem; maps to exit 2."""


class CheckFailure(Exception):
    """A check ran to completion and failed; maps to exit 1."""


def _version() -> str:
    try:
        return importlib.metadata.version("oucert")
    except importlib.metadata.PackageNotFoundError:
        return "unknown"


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _load_config(path: str | None) -> dict:
    if path is None:
        raise InputError("this command requires --config PATH")
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON in {path}: {exc}") from exc


def _numerics(cfg: dict, args) -> dict:
    num = dict(_DEFAULT_NUMERICS)
    num.update(cfg.get("numerics", {}))
    for key in ("samples_per_shell", "eps", "dt", "horizon", "replicas"):
        val = getattr(args, key, None)
        if val is not None:
            num[key] = val
    return num


def _params(cfg: dict):
    try:
        return oumodel.params_from_config(cfg)
    except KeyError as exc:
        raise InputError(f"config is missing field {exc}") from exc
    except (ValueError, matkit.MatrixError) as exc:
        raise CheckFailure(f"model invalid: {exc}") from exc


def _valid_params(cfg: dict):
    params = _params(cfg)
    try:
        return oumodel.require_valid(params)
    except ValueError as exc:
        raise CheckFailure(str(exc)) from exc


def _manifest(args, command: str, cfg: dict | None, params=None, outputs=None) -> dict:
    return {
        "command": command,
        "config_path": getattr(args, "config", None),
        "tool_version": _version(),
        "seed": args.seed,
        "timestamp": _now(),
        "resolved_parameters": params.to_json() if params is not None else None,
        "numerics": _numerics(cfg or {}, args) if cfg is not None else None,
        "output_paths": outputs or [],
    }


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _emit(report: dict, args, name: str, human: str) -> None:
    if getattr(args, "json", False):
        print(json.dumps(report, indent=2, default=_json_default))
    else:
        print(human)
    if getattr(args, "out", None):
        import pathlib

        out_dir = pathlib.Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / f"{name}.json"
        path.write_text(json.dumps(report, indent=2, default=_json_default))
        report["manifest"]["output_paths"].append(str(path))


# ---------------------------------------------------------------------------
# commands


def cmd_validate(args) -> int:
    cfg = _load_config(args.config)
    try:
        params = _params(cfg)
    except CheckFailure as exc:
        report = {"manifest": _manifest(args, "validate", cfg), "valid": False,
                  "problems": [str(exc)]}
        _emit(report, args, "validate", f"INVALID: {exc}")
        return EXIT_FAIL
    problems = oumodel.validate(params)
    report = {
        "manifest": _manifest(args, "validate", cfg, params),
        "valid": not problems,
        "problems": problems,
    }
    human = "valid model" if not problems else "INVALID:\n  " + "\n  ".join(problems)
    _emit(report, args, "validate", human)
    return EXIT_OK if not problems else EXIT_FAIL


def _alpha_pair(params):
    K = params.K
    e = np.ones(K)
    B1 = -params.R
    B2 = -(params.R @ (np.eye(K) - np.outer(params.p, e)) + params.alpha * np.outer(params.p, e))
    return cqlf.make_pair(B1, B2)


def cmd_check_cqlf(args) -> int:
    cfg = _load_config(args.config)
    params = _valid_params(cfg)
    if args.strong:
        pair = _alpha_pair(params)
        exists = cqlf.strong_cqlf_exists(pair)
        negs = cqlf.negative_product_eigenvalues(pair)
        verdict = "exists" if exists else "not_exists"
        report = {
            "manifest": _manifest(args, "check-cqlf", cfg, params),
            "reports": {
                "alpha_pair_strong": {
                    "verdict": verdict,
                    "real_negative_eigenvalues": [ev.real for ev in negs],
                }
            },
            "all_exist": exists,
        }
        lines = [f"alpha_pair_strong: {verdict}"]
        if not exists:
            lines.append(
                "  real negative product eigenvalues: "
                + ", ".join(f"{ev.real:.12g}" for ev in negs)
            )
        _emit(report, args, "check_cqlf", "\n".join(lines))
        return EXIT_OK if exists else EXIT_FAIL
    reports = {}
    (pair1, rep1), (pair2, rep2) = cqlf.theorem1_pairs(params.R, params.p)
    if args.pair in ("first", "both"):
        reports["first"] = rep1
    if args.pair in ("second", "both"):
        reports["second"] = rep2
    all_exist = all(r.verdict == "exists" for r in reports.values())
    report = {
        "manifest": _manifest(args, "check-cqlf", cfg, params),
        "reports": {k: r.to_json() for k, r in reports.items()},
        "all_exist": all_exist,
    }
    lines = []
    for name, r in reports.items():
        lines.append(f"{name}: {r.verdict}")
        if r.verdict != "exists":
            negs = [f"{ev.real:.12g}" for ev in r.product_spectrum
                    if abs(ev.imag) < 1e-9 and ev.real < 0]
            lines.append(f"  real negative product eigenvalues: {', '.join(negs)}")
    _emit(report, args, "check_cqlf", "\n".join(lines))
    return EXIT_OK if all_exist else EXIT_FAIL


def cmd_construct(args) -> int:
    cfg = _load_config(args.config)
    params = _valid_params(cfg)
    (pair1, rep1), (pair2, _) = cqlf.theorem1_pairs(params.R, params.p)
    if rep1.verdict != "exists":
        raise CheckFailure(f"no CQLF exists for the first pair: {rep1.verdict}")
    try:
        cert1 = cqlf.construct_cqlf(pair1)
    except cqlf.ConstructionFailure as exc:
        report = {
            "manifest": _manifest(args, "construct", cfg, params),
            "status": "failed",
            "best_residuals": {"strict": exc.res_strict, "semi": exc.res_semi},
        }
        _emit(report, args, "certificate",
              f"construction failed: residuals strict={exc.res_strict:g} semi={exc.res_semi:g}")
        return EXIT_FAIL
    Q2 = cqlf.transfer_cqlf(cert1.Q, params.R)
    cert2 = cqlf.certify(pair2, Q2)
    report = {
        "manifest": _manifest(args, "construct", cfg, params),
        "status": "ok",
        "first_pair": cert1.to_json(),
        "second_pair_transferred": cert2.to_json(),
    }
    human = (
        f"certificate found: min eig Q = {cert1.min_eig_Q:.3g}, "
        f"residuals strict={cert1.res_strict:.3g} semi={cert1.res_semi:.3g}\n"
        f"transfer R'QR: strict={cert2.res_strict:.3g} semi={cert2.res_semi:.3g}"
    )
    _emit(report, args, "certificate", human)
    return EXIT_OK


def cmd_verify_drift(args) -> int:
    cfg = _load_config(args.config)
    params = _valid_params(cfg)
    num = _numerics(cfg, args)
    family = args.lyapunov
    if family == "auto":
        family = "smoothed" if params.alpha > 0 else "quadratic"
    if params.alpha == 0 and params.beta <= 0:
        raise InputError(
            "drift verification is unavailable when alpha = 0 and beta <= 0: "
            "the quadratic criterion assumes alpha = 0 and beta > 0"
        )
    if family == "quadratic":
        V = lyap.build_quadratic(params)
    else:
        eps = num.get("eps")
        V = lyap.build_smoothed(params, **({"eps": eps} if eps is not None else {}))
    radii = num.get("shells")
    rep = lyap.verify_drift(
        params, V, radii=radii, samples_per_shell=int(num["samples_per_shell"]),
        seed=args.seed,
    )
    report = {
        "manifest": _manifest(args, "verify-drift", cfg, params),
        "drift_report": rep.to_json(),
    }
    lines = [f"family: {rep.family}", f"{'radius':>12} {'worst GV':>14} {'worst GV/|y|^2':>16} {'regime':>10}"]
    for r, gv, ratio, regime in zip(rep.radii, rep.worst_gv, rep.worst_ratio, rep.worst_regime):
        lines.append(f"{r:12.4g} {gv:14.5g} {ratio:16.5g} {regime:>10}")
    lines.append(f"verdict: {rep.verdict}" + (f"  (M = {rep.M:.4g})" if rep.M is not None else ""))
    _emit(report, args, "drift_report", "\n".join(lines))
    return EXIT_OK if rep.verdict == "pass" else EXIT_FAIL


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    params = _valid_params(cfg)
    num = _numerics(cfg, args)
    if int(num["replicas"]) < 1:
        raise InputError("replicas must be >= 1")
    sim_cfg = sim.SimConfig(
        dt=num["dt"], horizon=float(num["horizon"]), replicas=int(num["replicas"]),
        seed=args.seed,
    )
    outputs = []
    stats = sim.stationary_stats(params, sim_cfg)
    report = {
        "manifest": _manifest(args, "simulate", cfg, params, outputs),
        "stats": stats.to_json(),
    }
    if args.hitting is not None:
        y0 = np.full(params.K, 2.0 * args.hitting / np.sqrt(params.K))
        est = sim.hitting_time(params, y0, args.hitting, sim_cfg)
        report["hitting"] = est.to_json()
    if args.ergodicity:
        erg_cfg = sim_cfg if sim_cfg.replicas >= 100 else sim.SimConfig(
            dt=sim_cfg.dt, horizon=min(sim_cfg.horizon, 50.0), replicas=256, seed=args.seed
        )
        erg = sim.ergodicity_diagnostic(params, erg_cfg)
        report["ergodicity"] = erg.to_json()
    if args.trace:
        t, path = sim.simulate(params, sim_cfg, record_every=max(1, args.trace_every))
        with open(args.trace, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"y{i + 1}" for i in range(params.K)])
            for ti, yi in zip(t, path):
                w.writerow([f"{ti:.10g}"] + [f"{v:.10g}" for v in yi])
        outputs.append(args.trace)
    human = (
        f"mean: {np.array2string(stats.mean, precision=5)}  "
        f"(se {np.array2string(stats.se_mean, precision=2)})\n"
        f"covariance diag: {np.array2string(np.diag(stats.covariance), precision=5)}  "
        f"(se {np.array2string(stats.se_var, precision=2)})\n"
        f"converged: {stats.converged}"
    )
    if "hitting" in report:
        h = report["hitting"]
        human += (f"\nhitting |y| <= {h['radius']:g}: mean {h['mean_time']:.4g} "
                  f"(se {h['se']:.2g}, censored {100 * h['censored_fraction']:.1f}%)")
    if "ergodicity" in report:
        e = report["ergodicity"]
        human += f"\nergodicity: slope {e['slope']:.4g}, R^2 {e['r_squared']:.3f}"
    _emit(report, args, "simulate", human)
    return EXIT_OK if stats.converged else EXIT_SOFT


def _counterexample_params(alpha: float = 133.0):
    R = np.array([[1.0, -1.0, 0.0], [0.0, 1.0, -1.0], [0.0, 0.0, 1.0]])
    return oumodel.require_valid(oumodel.make_params(alpha, 0.0, R, [0.0, 0.0, 1.0]))


def cmd_counterexample(args) -> int:
    tol = args.tolerance
    params = _counterexample_params()
    K = params.K
    e = np.ones(K)
    product = params.R @ (
        params.R @ (np.eye(K) - np.outer(params.p, e)) + params.alpha * np.outer(params.p, e)
    )
    eigs = np.sort(matkit.eig_general(product).real)
    expected = np.sort([-7.0, 5.0 - np.sqrt(82.0), 5.0 + np.sqrt(82.0)])
    eig_err = float(np.max(np.abs(eigs - expected)))
    eig_ok = eig_err <= tol and float(np.max(np.abs(matkit.eig_general(product).imag))) <= tol

    pair = _alpha_pair(params)
    strong_exists = cqlf.strong_cqlf_exists(pair)
    negs = cqlf.negative_product_eigenvalues(pair)
    strong_ok = (not strong_exists) and len(negs) == 2

    rng = np.random.default_rng(args.seed)
    n_q = args.n_witness
    failures = 0
    witness_example = None
    for i in range(n_q + 1):
        if i == 0:
            Q = np.eye(K)
        else:
            A = rng.standard_normal((K, K))
            Q = A @ A.T + 1e-6 * np.eye(K)
        w = lyap.quadratic_failure_witness(params, Q)
        if w is None or not w.ok:
            failures += 1
        elif witness_example is None:
            witness_example = w
    witness_ok = failures == 0

    V = lyap.build_smoothed(params)
    drift_rep = lyap.verify_drift(params, V, samples_per_shell=1024, seed=args.seed)
    drift_ok = drift_rep.verdict == "pass"

    ok = eig_ok and strong_ok and witness_ok and drift_ok
    report = {
        "manifest": _manifest(args, "counterexample", None, params),
        "tolerance": tol,
        "product_eigenvalues": eigs.tolist(),
        "expected_eigenvalues": expected.tolist(),
        "eigenvalue_error": eig_err,
        "strong_cqlf_exists": strong_exists,
        "real_negative_eigenvalues": [ev.real for ev in negs],
        "quadratic_failure": {
            "tested": n_q + 1,
            "failures": failures,
            "example": None if witness_example is None else witness_example.to_json(),
        },
        "smoothed_drift": drift_rep.to_json(),
        "pass": ok,
    }
    lines = ["quadratic Lyapunov counterexample (K = 3, alpha = 133)", ""]
    lines.append(f"{'eigenvalue':>18} {'expected':>18} {'error':>10}")
    for ev, ex in zip(eigs, expected):
        lines.append(f"{ev:18.12f} {ex:18.12f} {abs(ev - ex):10.2e}")
    lines.append(f"eigenvalue check: {'ok' if eig_ok else 'FAIL'} (tolerance {tol:g})")
    lines.append(
        f"strong CQLF exists: {strong_exists} "
        f"(real negative eigenvalues: {', '.join(f'{ev.real:.6g}' for ev in negs)})"
    )
    lines.append(
        f"quadratic failure witnesses: {n_q + 1 - failures}/{n_q + 1} found "
        f"(beta = 0, GL(tv) >= 0 on the t-grid)"
    )
    lines.append(
        f"smoothed drift verification: {drift_rep.verdict}"
        + (f" (M = {drift_rep.M:.4g})" if drift_rep.M is not None else "")
    )
    lines.append(f"overall: {'PASS' if ok else 'FAIL'}")
    _emit(report, args, "counterexample", "\n".join(lines))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_chebyshev_selftest(args) -> int:
    report_body = cheb.selftest(seed=args.seed)
    report = {"manifest": _manifest(args, "chebyshev-selftest", None), **report_body}
    lines = []
    for name, chk in report_body["checks"].items():
        detail = ", ".join(f"{k}={v:.3g}" if isinstance(v, float) else f"{k}={v}"
                           for k, v in chk.items() if k != "pass")
        lines.append(f"{name}: {'ok' if chk['pass'] else 'FAIL'} ({detail})")
    lines.append(f"overall: {'PASS' if report_body['pass'] else 'FAIL'}")
    _emit(report, args, "chebyshev_selftest", "\n".join(lines))
    return EXIT_OK if report_body["pass"] else EXIT_FAIL


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oucert",
        description="Stability certification for piecewise OU diffusions",
    )
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    parser.add_argument("--json", action="store_true", help="machine-readable report on stdout")
    parser.add_argument("--out", help="directory for report files")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("validate", help="check model invariants").set_defaults(func=cmd_validate)

    p = sub.add_parser("check-cqlf", help="CQLF existence for the canonical pairs")
    p.add_argument("--pair", choices=["first", "second", "both"], default="both")
    p.add_argument("--strong", action="store_true",
                   help="strong (both-strict) test on the pair with the alpha term")
    p.set_defaults(func=cmd_check_cqlf)

    sub.add_parser("construct", help="construct Q and the transferred R'QR").set_defaults(
        func=cmd_construct
    )

    p = sub.add_parser("verify-drift", help="sampled Foster-Lyapunov drift verification")
    p.add_argument("--lyapunov", choices=["auto", "quadratic", "smoothed"], default="auto")
    p.add_argument("--samples-per-shell", dest="samples_per_shell", type=int)
    p.add_argument("--eps", type=float, help="smoothing width")
    p.set_defaults(func=cmd_verify_drift)

    p = sub.add_parser("simulate", help="Monte Carlo stationary statistics")
    p.add_argument("--dt", type=float)
    p.add_argument("--horizon", type=float)
    p.add_argument("--replicas", type=int)
    p.add_argument("--hitting", type=float, metavar="RADIUS",
                   help="also estimate the hitting time of |y| <= RADIUS")
    p.add_argument("--ergodicity", action="store_true",
                   help="also run the TV-decay ergodicity diagnostic")
    p.add_argument("--trace", metavar="CSV", help="stream one replica's trajectory to CSV")
    p.add_argument("--trace-every", type=int, default=100,
                   help="record every n-th step in the trace (default 100)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("counterexample", help="built-in quadratic-failure pipeline")
    p.add_argument("--tolerance", type=float, default=1e-9)
    p.add_argument("--n-witness", type=int, default=5,
                   help="number of random PSD Q to test besides the identity")
    p.set_defaults(func=cmd_counterexample)

    sub.add_parser("chebyshev-selftest", help="Chebyshev identity sweep").set_defaults(
        func=cmd_chebyshev_selftest
    )
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CheckFailure as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (ValueError, matkit.MatrixError, sim.SimulationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception:  # pragma: no cover - internal faults surface as exit 3
        traceback.print_exc()
        return EXIT_SOFT


if __name__ == "__main__":
    sys.exit(main())
