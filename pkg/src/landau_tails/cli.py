"""Command-line entry point ``landau-tails``.

Exit codes: 0 success, 2 a certificate failed, 3 bad input, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

from .alloy_operator import HypothesisViolation
from .certificate import NumericalFailure, _clean
from .config import ConfigError, load_config
from .disk_spectrum import AsymWindow, DiskSpec, log_nu_asymptotic, log_nu_exact, verify_f1
from .enlargement import EnlargementParams, certify_le2
from .landau_basis import FieldConfig, LandauIndex
from .pipeline import ESTIMATE_COLUMNS, fit_lifshitz_exponent, ids_estimate, thr2_certificates
from .smallball import CouplingLaw, rows_to_csv, small_ball_asymptotic, small_ball_exact

EXIT_OK, EXIT_CERT, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3, 4

NU_COLUMNS = ["q", "k", "R", "rho", "nu_exact", "nu_asym", "ratio"]
SMALLBALL_COLUMNS = ["kappa", "omega_plus", "n", "t", "p_exact", "p_lower", "p_upper", "p_asym", "ratio"]

SCHEMAS = {
    "nu": "CSV to stdout: " + ",".join(NU_COLUMNS) + " (nu_asym and ratio blank when k <= rho)",
    "verify-f1": "certificate JSON: rows {k, rho, ratio_dev, bound}; per_k summary with max_ratio_dev, C_k, condition",
    "certify-le2": "certificate JSON: rows {k, lhs, rhs, rhs_sign, margin, regime} with lhs/rhs as natural logs",
    "ids": "CSV: " + ",".join(ESTIMATE_COLUMNS) + "; manifest JSON {seed, kappa, omega_plus, a, n, b, q, K}",
    "thr2": "JSON list of certificates: rows {lambda_min, lhs, rhs, margin, tolerance}",
    "smallball": "CSV to stdout: " + ",".join(SMALLBALL_COLUMNS),
    "lifshitz-fit": "JSON {slope, intercept, residual, n_points, ratios}; input CSV needs columns E, N_hat",
}


def _int_list(text: str) -> list[int]:
    """``"a,b,c"`` or an inclusive range ``"lo:hi"``."""
    if ":" in text:
        lo, hi = (int(v) for v in text.split(":"))
        return list(range(lo, hi + 1))
    return [int(v) for v in text.split(",") if v.strip()]


def _write_text(path: str | None, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _emit_certificate(cert, path):
    _write_text(path, cert.to_json())
    return EXIT_OK if cert.passed else EXIT_CERT


def cmd_nu(args) -> int:
    cfg = FieldConfig(args.b)
    disk = DiskSpec.of(cfg, args.R)
    ks = [args.k] if args.k is not None else _int_list(args.k_range)
    rows = []
    for k in ks:
        idx = LandauIndex(args.q, k)
        log_exact = log_nu_exact(cfg, idx, disk)
        row = {"q": args.q, "k": k, "R": args.R, "rho": disk.rho, "nu_exact": math.exp(log_exact), "nu_asym": None, "ratio": None}
        if k > disk.rho:
            log_asym = log_nu_asymptotic(cfg, idx, disk)
            row.update(nu_asym=math.exp(log_asym), ratio=math.exp(log_exact - log_asym))
        rows.append(row)
    _write_text(None, rows_to_csv(rows, NU_COLUMNS))
    return EXIT_OK


def cmd_verify_f1(args) -> int:
    window = AsymWindow.power(args.f_power, args.beta)
    cert = verify_f1(FieldConfig(args.b), args.q, window, _int_list(args.k_range))
    return _emit_certificate(cert, args.out)


def cmd_certify_le2(args) -> int:
    cfg = FieldConfig(args.b)
    params = EnlargementParams.make(cfg, args.eps, args.R, args.bigC, args.delta)
    return _emit_certificate(certify_le2(cfg, args.q, params), args.out)


def cmd_ids(args) -> int:
    cfg = load_config(args.config)
    rows = ids_estimate(cfg, workers=args.workers)
    _write_text(args.out, rows_to_csv([r.as_row() for r in rows], ESTIMATE_COLUMNS))
    manifest = args.manifest or (None if args.out in (None, "-") else str(Path(args.out).with_suffix(".manifest.json")))
    if manifest:
        Path(manifest).write_text(json.dumps(cfg.manifest(), sort_keys=True, indent=1) + "\n", encoding="utf-8")
    if any(r.status != "ok" for r in rows):
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_thr2(args) -> int:
    cfg = load_config(args.config)
    certs = thr2_certificates(cfg, args.E)
    _write_text(args.out, json.dumps([_clean(c.to_dict()) for c in certs], sort_keys=True, indent=1) + "\n")
    return EXIT_OK if all(c.passed for c in certs) else EXIT_CERT


def cmd_smallball(args) -> int:
    law = CouplingLaw(args.kappa, 0.0, args.omega_plus)
    exact = small_ball_exact(law, args.n, args.t)
    asym = small_ball_asymptotic(law, args.n, args.t)
    row = {"kappa": args.kappa, "omega_plus": args.omega_plus, "n": args.n, "t": args.t, "p_exact": exact.value,
           "p_lower": exact.lower, "p_upper": exact.upper, "p_asym": asym, "ratio": asym / exact.value}
    _write_text(None, rows_to_csv([row], SMALLBALL_COLUMNS))
    return EXIT_OK


def cmd_lifshitz_fit(args) -> int:
    with open(args.input, newline="", encoding="utf-8") as fh:
        table = list(csv.DictReader(fh))
    if not table or not {"E", "N_hat"} <= set(table[0]):
        raise ValueError("input CSV needs columns E and N_hat")
    usable = [r for r in table if r["N_hat"] not in ("", "nan")]
    fit = fit_lifshitz_exponent([float(r["E"]) for r in usable], [float(r["N_hat"]) for r in usable])
    _write_text(args.out, json.dumps(fit.as_dict(), sort_keys=True, indent=1) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="landau-tails", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--schema", action="store_true", help="describe the output columns and exit")
        p.set_defaults(func=func)
        return p

    p = add("nu", cmd_nu, "exact and asymptotic disk eigenvalues")
    p.add_argument("--q", type=int, default=0)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--R", type=float)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--k", type=int)
    g.add_argument("--k-range", help="comma list or inclusive lo:hi")

    p = add("verify-f1", cmd_verify_f1, "asymptotic-ratio certificate")
    p.add_argument("--q", type=int, default=0)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--f-power", type=float, default=0.75)
    p.add_argument("--k-range", default="100,1000,10000")
    p.add_argument("--out")

    p = add("certify-le2", cmd_certify_le2, "enlargement scalar-inequality certificate")
    p.add_argument("--q", type=int, default=0)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--eps", type=float, default=0.4)
    p.add_argument("--R", type=float, default=8.0)
    p.add_argument("--bigC", type=float, default=3.0)
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--out")

    p = add("ids", cmd_ids, "Monte Carlo IDS estimates")
    p.add_argument("--config")
    p.add_argument("--out", help="CSV path (stdout if omitted)")
    p.add_argument("--manifest", help="manifest JSON path (default: next to --out)")
    p.add_argument("--workers", type=int, default=1)

    p = add("thr2", cmd_thr2, "per-sample operator-bound certificates")
    p.add_argument("--config")
    p.add_argument("--E", type=float)
    p.add_argument("--out")

    p = add("smallball", cmd_smallball, "small-ball probability, exact and asymptotic")
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--omega-plus", type=float, default=1.0)
    p.add_argument("--n", type=int)
    p.add_argument("--t", type=float)

    p = add("lifshitz-fit", cmd_lifshitz_fit, "fit ln|ln N| against ln|ln E|")
    p.add_argument("--input")
    p.add_argument("--out")
    return parser


REQUIRED = {"nu": ["R"], "ids": ["config"], "thr2": ["config", "E"], "smallball": ["n", "t"], "lifshitz-fit": ["input"]}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.schema:
        print(SCHEMAS[args.command])
        return EXIT_OK
    missing = [name for name in REQUIRED.get(args.command, []) if getattr(args, name) is None]
    if args.command == "nu" and args.k is None and args.k_range is None:
        missing.append("k or k_range")
    if missing:
        print(f"error: missing --{', --'.join(m.replace('_', '-') for m in missing)}", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, HypothesisViolation, ValueError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
