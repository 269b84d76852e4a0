"""Command-line front end.

Exit codes: 0 success or condition holds, 1 usage or validation error,
2 the tested condition fails, 3 a truncation did not converge.
"""

from __future__ import annotations

import argparse
import contextlib
import dataclasses
import logging
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import fileio
from .errors import ConditionFailed, OuterFactError, RankError, ValidationError
from .factor1d import factor_outer_1d, outerness_test
from .factormd import (check_2var_decomposition, check_gw_stability, check_multi_condition,
                       factor_outer_2d, outerness_certificates_2d)
from .linalg import Tolerances
from .schur import schur_complement
from .trigpoly import AnalyticPoly, LaurentPoly, residual

log = logging.getLogger("outerfact")

EXIT_OK, EXIT_INVALID, EXIT_CONDITION, EXIT_NO_CONVERGENCE = 0, 1, 2, 3
OUTCOMES = {EXIT_OK: "success", EXIT_INVALID: "error",
            EXIT_CONDITION: "condition_failed", EXIT_NO_CONVERGENCE: "no_convergence"}
# 2-D outerness surrogates and the 1-D Schur gap share this threshold
OUTER_GAP_TOL = 1e-6


@dataclass
class RunReport:
    command: str
    inputs: list
    tolerances: dict
    exit_code: int = EXIT_OK
    metrics: dict = field(default_factory=dict)
    message: str = ""

    @property
    def outcome(self) -> str:
        return OUTCOMES[self.exit_code]

    def to_dict(self) -> dict:
        return _jsonable({"command": self.command, "inputs": self.inputs,
                          "tolerances": self.tolerances, "outcome": self.outcome,
                          "exit_code": self.exit_code, "metrics": self.metrics,
                          "message": self.message})


def _jsonable(x):
    if isinstance(x, dict):
        return {_key_str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        if np.iscomplexobj(x):
            return {"re": x.real.tolist(), "im": x.imag.tolist()}
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if np.isfinite(x) else str(x)
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    return x


def _key_str(k):
    if isinstance(k, tuple):
        return ",".join(str(int(v)) for v in k)
    return str(k)


def _tolerances(args) -> Tolerances:
    return Tolerances(residual_tol=args.tol, rank_tol=args.rank_tol, conv_tol=args.conv_tol,
                      max_trunc=args.max_trunc, grid_points_per_dim=args.grid)


def _read_laurent(path, d=None) -> LaurentPoly:
    poly = fileio.read_poly(path)
    if not isinstance(poly, LaurentPoly):
        raise ValidationError(f"{path}: expected a Laurent (kind 'laurent') file")
    if d is not None and poly.d != d:
        raise ValidationError(f"{path}: expected d={d}, got d={poly.d}")
    return poly


def _converged_or_3(converged: bool, rep: RunReport) -> bool:
    if not converged:
        rep.exit_code = EXIT_NO_CONVERGENCE
        rep.message = "Toeplitz truncations did not converge; raise --max-trunc or --conv-tol"
    return converged


def _factor_metrics(F, Q) -> dict:
    return {"residual": F.residual, "rank": F.rank, "converged": F.converged,
            "trunc_used": F.trunc_used, "certificates": F.outer_certificates,
            "residual_threshold_scale": Q.scale}


def cmd_factor1(args, rep, tol):
    Q = _read_laurent(args.input, d=1)
    F = factor_outer_1d(Q, tol)
    rep.metrics.update(_factor_metrics(F, Q))
    rep.metrics["coefficients"] = {k: v for k, v in F.P.items()}
    if not _converged_or_3(F.converged, rep):
        return
    if F.residual > tol.residual_tol * Q.scale:
        rep.exit_code = EXIT_NO_CONVERGENCE
        rep.message = f"residual {F.residual:.3e} exceeds tolerance"
        return
    fileio.write_poly(F.P, args.output)
    rep.message = f"wrote outer factor of degree {F.P.degree[0]} to {args.output}"


def _multi_metrics(report) -> dict:
    return {"max_violation": report.max_violation, "rank_Y": report.rank_Y,
            "passed": report.passed, "converged": report.converged,
            "trunc_used": report.trunc_used, "threshold": report.threshold,
            "diag_sum_violation": report.diag_sum_violation}


def cmd_check_multi(args, rep, tol):
    Q = _read_laurent(args.input, d=2)
    report = check_multi_condition(Q, tol)
    rep.metrics.update(_multi_metrics(report))
    if not _converged_or_3(report.converged, rep):
        return
    if not report.passed:
        rep.exit_code = EXIT_CONDITION
        rep.message = "Q is not a single square on its degree box"
    else:
        rep.message = "Q is a single square on its degree box"


def cmd_factor2(args, rep, tol):
    Q = _read_laurent(args.input, d=2)
    report = check_multi_condition(Q, tol)
    rep.metrics.update(_multi_metrics(report))
    if not _converged_or_3(report.converged, rep):
        return
    try:
        F = factor_outer_2d(Q, tol, report=report)
    except ConditionFailed as exc:
        rep.exit_code = EXIT_CONDITION
        rep.message = str(exc)
        return
    rep.metrics.update(_factor_metrics(F, Q))
    rep.metrics["coefficients"] = {k: v for k, v in F.P.items()}
    if F.residual > tol.residual_tol * Q.scale:
        rep.exit_code = EXIT_NO_CONVERGENCE
        rep.message = f"residual {F.residual:.3e} exceeds tolerance"
        return
    if args.output:
        fileio.write_poly(F.P, args.output)
        rep.message = f"wrote factor to {args.output}"


def cmd_check_2var(args, rep, tol):
    Q = _read_laurent(args.input, d=2)
    r = check_2var_decomposition(Q, tol)
    limit = tol.residual_tol * Q.scale
    rep.metrics.update({"schureq1_gap": r.schureq1_gap, "schureq2_gap": r.schureq2_gap,
                        "zero_pattern_gap": r.zero_pattern_gap,
                        "reflected_zero_gap": r.reflected_zero_gap,
                        "converged": r.converged, "trunc_used": r.trunc_used,
                        "threshold": limit})
    if not _converged_or_3(r.converged, rep):
        return
    if r.max_gap > limit:
        rep.exit_code = EXIT_CONDITION
        rep.message = "decomposition identities fail"
    else:
        rep.message = "decomposition identities hold"


def cmd_check_gw(args, rep, tol):
    q = _read_laurent(args.input, d=2)
    r = check_gw_stability(q, tol)
    rep.metrics.update({"stable_factorable": r.stable_factorable, "max_entry": r.max_entry,
                        "inverse_norm": r.inverse_norm, "reflected_max": r.reflected_max,
                        "grid_points": r.grid_points})
    if not r.stable_factorable:
        rep.exit_code = EXIT_CONDITION
        rep.message = "no stable factor of this degree"
    else:
        rep.message = "a stable factor exists"


def cmd_verify(args, rep, tol):
    Q = _read_laurent(args.symbol)
    P = fileio.read_poly(args.factor)
    if not isinstance(P, AnalyticPoly):
        raise ValidationError(f"{args.factor}: expected an analytic (kind 'analytic') file")
    if P.d != Q.d or P.h_in != Q.h:
        raise ValidationError(f"factor {P.d}-variable with {P.h_in} columns does not match "
                              f"symbol {Q.d}-variable of block size {Q.h}")
    res = residual(Q, P, tol.grid_points(Q.d))
    if Q.d == 1:
        outer, cert = outerness_test(P, tol, gap_tol=OUTER_GAP_TOL)
    else:
        cert = outerness_certificates_2d(P, tol)
        outer = cert["schur_gap_0"] <= OUTER_GAP_TOL and cert["range_defect"] <= OUTER_GAP_TOL
    res_ok = res <= tol.residual_tol * Q.scale
    rep.metrics.update({"residual": res, "residual_ok": res_ok, "outer": outer,
                        "certificates": cert})
    if not _converged_or_3(cert["converged"], rep):
        return
    if not (res_ok and outer):
        rep.exit_code = EXIT_CONDITION
        rep.message = "residual too large" if not res_ok else "factor is not outer"
    else:
        rep.message = "factor verified"


def _parse_lambda(text):
    try:
        return [int(x) for x in text.replace(" ", "").split(",") if x != ""]
    except ValueError:
        raise ValidationError(f"bad --lambda {text!r}; expected comma-separated labels") from None


def cmd_schur(args, rep, tol):
    M = fileio.read_matrix(args.matrix)
    lam = _parse_lambda(args.lam)
    res = schur_complement(M, lam, tol, h=args.block)
    rep.metrics.update({"lambda": list(res.lam), "compact": res.compact,
                        "padded": res.padded})
    rep.message = (f"compact S(lambda={list(res.lam)}):\n{_fmt(res.compact)}\n"
                   f"padded:\n{_fmt(res.padded)}")


def _fmt(M):
    M = np.asarray(M)
    if M.size and np.max(np.abs(M.imag)) == 0:
        M = M.real
    if M.size == 0:
        return "[]"
    return np.array2string(M, precision=10, suppress_small=True)


COMMANDS = {
    "factor1": cmd_factor1,
    "factor2": cmd_factor2,
    "check-multi": cmd_check_multi,
    "check-2var": cmd_check_2var,
    "check-gw": cmd_check_gw,
    "verify": cmd_verify,
    "schur": cmd_schur,
}


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with 1; 2 is reserved for failed conditions."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--tol", type=float, default=1e-8, help="residual tolerance (default 1e-8)")
    common.add_argument("--rank-tol", type=float, default=1e-10, help="relative rank cutoff")
    common.add_argument("--conv-tol", type=float, default=1e-8,
                        help="truncation convergence tolerance")
    common.add_argument("--max-trunc", type=int, default=None,
                        help="largest truncation size per variable (default 512 / 48)")
    common.add_argument("--grid", type=int, default=None,
                        help="torus grid points per variable (power of two)")
    common.add_argument("--report", default=None, metavar="PATH",
                        help="write a JSON run report ('-' for standard output)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="outerfact",
                description="Outer factorization of PSD trigonometric polynomials.")
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("factor1", parents=[common], help="one-variable outer factor")
    s.add_argument("input")
    s.add_argument("output")
    s = sub.add_parser("factor2", parents=[common], help="two-variable single-square factor")
    s.add_argument("input")
    s.add_argument("output", nargs="?")
    for name, text in (("check-multi", "single-square condition"),
                       ("check-2var", "Schur complement decomposition identities"),
                       ("check-gw", "stable factorization test (scalar)")):
        s = sub.add_parser(name, parents=[common], help=text)
        s.add_argument("input")
    s = sub.add_parser("verify", parents=[common], help="check a factor against a symbol")
    s.add_argument("symbol")
    s.add_argument("factor")
    s = sub.add_parser("schur", parents=[common], help="Schur complement of a PSD matrix")
    s.add_argument("matrix")
    s.add_argument("--lambda", dest="lam", required=True, help="comma-separated labels")
    s.add_argument("--block", type=int, default=1, help="block size")
    return p


def _inputs(args):
    names = ("input", "symbol", "factor", "matrix")
    return [getattr(args, n) for n in names if getattr(args, n, None) is not None]


def _thread_limit():
    n = int(os.environ.get("OUTERFACT_THREADS", "0") or 0)
    if n <= 0:
        return contextlib.nullcontext()
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        log.info("threadpoolctl not installed; OUTERFACT_THREADS ignored")
        return contextlib.nullcontext()
    return threadpool_limits(limits=n)


def run(argv=None) -> tuple[int, RunReport]:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    rep = RunReport(args.command, _inputs(args), {})
    start = time.perf_counter()
    try:
        tol = _tolerances(args)
        rep.tolerances = dataclasses.asdict(tol)
        with _thread_limit():
            COMMANDS[args.command](args, rep, tol)
    except ValidationError as exc:
        rep.exit_code, rep.message = EXIT_INVALID, f"error: {exc}"
    except RankError as exc:
        rep.exit_code, rep.message = EXIT_NO_CONVERGENCE, f"numerical failure: {exc}"
    except OuterFactError as exc:
        rep.exit_code, rep.message = EXIT_INVALID, f"error: {exc}"
    rep.metrics["wall_time"] = time.perf_counter() - start
    _emit(args, rep)
    return rep.exit_code, rep


def _emit(args, rep):
    human = sys.stderr if args.report == "-" or rep.exit_code == EXIT_INVALID else sys.stdout
    print(f"{rep.command}: {rep.outcome}", file=human)
    if rep.message:
        print(rep.message, file=human)
    if args.command == "verify" and "residual" in rep.metrics:
        m = rep.metrics
        rows = [("residual", f"{m['residual']:.3e}"), ("outer", str(m["outer"]))]
        rows += [(k, str(v)) for k, v in sorted(m["certificates"].items())]
        for k, v in rows:
            print(f"  {k:<16} {v}", file=human)
    if args.report:
        fileio.write_json(rep.to_dict(), args.report)


def main(argv=None) -> int:
    code, _ = run(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
