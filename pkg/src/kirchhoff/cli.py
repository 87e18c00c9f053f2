"""Command-line front end.

Every subcommand builds a :class:`~kirchhoff.report.VerificationReport` and
writes it as JSON (default) or CSV.  Exit status: 0 when every check passes,
1 when any check fails or is inconclusive, 2 on a usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from dataclasses import asdict, dataclass
from datetime import datetime, timezone

import numpy as np

from . import closed_form as cf
from .operators import assemble_sector, gram_cosine
from .radial_grid import MIN_NODES, build_grid, default_grid_spec
from .report import FAIL, PASS, Check, VerificationReport, checks_csv
from .shooting import (
    FixedPointError,
    ShootingError,
    kirchhoff_fixed_point,
    self_consistent_rediscovery,
)
from .spectral import (
    convergence_sweep,
    kernel_report,
    kernel_tolerance,
    lowest_eigenpairs,
    proof_chain_check,
    sample_points,
)

THREADS_ENV = "KIRCHHOFF_THREADS"
DEFAULT_N_LIST = (96, 128, 192, 256)


@dataclass
class RunConfig:
    command: str
    a: float = 1.0
    b: float = 1.0
    lam: float = 1.0
    x0: tuple[float, float, float] = (0.0, 0.0, 0.0)
    n: int = 256
    l_max: int = 4
    sector: int | None = None
    k: int = 6
    tol_kernel: float | None = None
    operator: str = "Lplus"
    alpha: float | None = None
    n_list: tuple[int, ...] = DEFAULT_N_LIST
    format: str = "json"
    out_path: str | None = None
    timestamp: bool = True
    workers: int = 1

    @property
    def params(self) -> cf.KirchhoffParams:
        return cf.KirchhoffParams(self.a, self.b)

    @property
    def spec(self) -> cf.BubbleSpec:
        return cf.BubbleSpec(self.params, lam=self.lam, x0=self.x0)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("out_path")
        d.pop("timestamp")
        d["x0"] = list(self.x0)
        d["n_list"] = list(self.n_list)
        return d


# -- argument parsing ------------------------------------------------------

def _finite(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be finite: {text!r}")
    return v


def _triple(text):
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected x,y,z, got {text!r}")
    return tuple(_finite(p) for p in parts)


def _int_list(text):
    try:
        vals = tuple(int(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    return vals


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--a", type=_finite, default=1.0, help="coefficient a > 0 (default 1)")
    common.add_argument("--b", type=_finite, default=1.0, help="coefficient b >= 0 (default 1)")
    common.add_argument("--lambda", dest="lam", type=_finite, default=1.0,
                        help="dilation parameter lambda > 0 (default 1)")
    common.add_argument("--x0", type=_triple, default=(0.0, 0.0, 0.0), help='translation "x,y,z"')
    common.add_argument("--n", type=int, default=256, help="interior grid nodes (default 256)")
    common.add_argument("--lmax", dest="l_max", type=int, default=4, help="highest sector (default 4)")
    common.add_argument("--sector", type=int, default=None, help="single sector for `spectrum`")
    common.add_argument("--k", type=int, default=6, help="eigenvalues per sector (default 6)")
    common.add_argument("--tol-kernel", type=_finite, default=None,
                        help="kernel threshold (default: 10x analytic-mode residual)")
    common.add_argument("--operator", choices=("Lplus", "A"), default="Lplus",
                        help="full linearization or its local part (default Lplus)")
    common.add_argument("--alpha", type=_finite, default=None,
                        help="shooting height phi(0) (default 3^(1/4) lambda^(-1/2))")
    common.add_argument("--n-list", type=_int_list, default=DEFAULT_N_LIST,
                        help="ascending grid sizes for `sweep` (default 96,128,192,256)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", dest="out_path", default=None, help="output file (default stdout)")
    common.add_argument("--no-timestamp", dest="timestamp", action="store_false",
                        help="omit the generation time, making reports byte-reproducible")

    parser = argparse.ArgumentParser(prog="kirchhoff", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "constants": "scaling constants and the fixed-point oracle",
        "verify": "residuals, analytic identities and the radial nondegeneracy chain",
        "kernel": "kernel dimension of the linearization over sectors 0..lmax",
        "spectrum": "lowest eigenvalues per sector (CSV: sector,index,eigenvalue,kernel_flag,alignment)",
        "shoot": "rediscover the solution by shooting and fixed-point iteration",
        "sweep": "kernel report over a sequence of grid sizes",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text, description=text)
    return parser


def _workers(parser) -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw == "":
        return 1
    try:
        w = int(raw)
    except ValueError:
        parser.error(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    if w < 1:
        parser.error(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return w


def parse_config(argv=None) -> RunConfig:
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.a <= 0.0:
        parser.error(f"--a must be positive, got {ns.a}")
    if ns.b < 0.0:
        parser.error(f"--b must be nonnegative, got {ns.b}")
    if ns.lam <= 0.0:
        parser.error(f"--lambda must be positive, got {ns.lam}")
    if ns.n < MIN_NODES:
        parser.error(f"--n must be at least {MIN_NODES}, got {ns.n}")
    if ns.l_max < 2:
        parser.error(f"--lmax must be at least 2, got {ns.l_max}")
    if ns.k < 1:
        parser.error(f"--k must be positive, got {ns.k}")
    if ns.sector is not None and not 0 <= ns.sector <= ns.l_max:
        parser.error(f"--sector must lie in 0..{ns.l_max}, got {ns.sector}")
    if ns.tol_kernel is not None and ns.tol_kernel <= 0.0:
        parser.error("--tol-kernel must be positive")
    if ns.alpha is not None and ns.alpha <= 0.0:
        parser.error("--alpha must be positive")
    nl = ns.n_list
    if len(nl) < 2 or nl[0] < MIN_NODES or any(x >= y for x, y in zip(nl, nl[1:])):
        parser.error(f"--n-list must hold at least two ascending sizes >= {MIN_NODES}")
    return RunConfig(command=ns.command, a=ns.a, b=ns.b, lam=ns.lam, x0=ns.x0, n=ns.n,
                     l_max=ns.l_max, sector=ns.sector, k=ns.k, tol_kernel=ns.tol_kernel,
                     operator=ns.operator, alpha=ns.alpha, n_list=nl, format=ns.format,
                     out_path=ns.out_path, timestamp=ns.timestamp, workers=_workers(parser))


# -- subcommands -----------------------------------------------------------

def _amplitude(spec: cf.BubbleSpec) -> float:
    """Peak value ``u(center)``, the natural scale of pointwise residuals."""
    return cf.Q0 / math.sqrt(spec.lam)


def cmd_constants(cfg: RunConfig) -> VerificationReport:
    p = cfg.params
    k = cf.scaling_constants(p)
    fp = kirchhoff_fixed_point(p)
    diff = (fp.c - k.c) / k.c
    rep = VerificationReport(kind="constants")
    rep.checks.append(Check.below("fixed_point_vs_closed_form", diff, 1e-10, "relative difference in c"))
    rep.checks.append(Check.under("kappa_below_half", cf.kappa(p), 0.5))
    rep.data.update(gradQ_sq=k.gradQ_sq, sqrt_c=k.sqrt_c, c=k.c, oracle_c=fp.c,
                    oracle_iterations=fp.iterations, oracle_diff=fp.c - k.c, kappa=cf.kappa(p))
    return rep


def cmd_verify(cfg: RunConfig) -> VerificationReport:
    spec = cfg.spec
    x = sample_points(spec)
    scale = max(1.0, _amplitude(spec) ** 5)
    rep = VerificationReport(kind="verify")
    res = float(np.max(np.abs(cf.residual(spec, x)))) / scale
    rep.checks.append(Check.below("equation_residual", res, 1e-10, "max |residual| / max(1, u(center)^5)"))
    for i in (1, 2, 3):
        t = float(np.max(np.abs(cf.A_apply_translation(spec, i, x)))) / scale
        rep.checks.append(Check.below(f"pointwise_A_translation{i}", t, 1e-10))
    grid = build_grid(default_grid_spec(spec, cfg.n))
    return rep.extend(proof_chain_check(grid, spec))


def cmd_kernel(cfg: RunConfig) -> VerificationReport:
    spec = cfg.spec
    grid = build_grid(default_grid_spec(spec, cfg.n))
    return kernel_report(grid, spec, l_max=cfg.l_max, tol_kernel=cfg.tol_kernel,
                         kind=cfg.operator, k=cfg.k, workers=cfg.workers)


def cmd_spectrum(cfg: RunConfig) -> VerificationReport:
    spec = cfg.spec
    grid = build_grid(default_grid_spec(spec, cfg.n))
    sectors = range(cfg.l_max + 1) if cfg.sector is None else [cfg.sector]
    ops = {ell: assemble_sector(grid, spec, ell, cfg.operator) for ell in sorted({0, 1, *sectors})}
    tol = cfg.tol_kernel if cfg.tol_kernel is not None else kernel_tolerance([ops[0], ops[1]])
    rep = VerificationReport(kind="spectrum")
    rows = []
    for ell in sectors:
        op = ops[ell]
        eig = lowest_eigenpairs(op, cfg.k)
        count, undecided = 0, False
        for j, mu in enumerate(eig.eigenvalues):
            mu = float(mu)
            flag = "KERNEL" if abs(mu) <= tol else "AMBIGUOUS" if abs(mu) <= 10 * tol else ""
            count += flag == "KERNEL"
            align = None
            if op.kernel_mode is not None:
                align = abs(gram_cosine(op, eig.eigenvectors[:, j], op.kernel_mode))
            rows.append({"sector": ell, "index": j, "eigenvalue": mu, "kernel_flag": flag,
                         "alignment": align})
            if flag == "AMBIGUOUS":
                undecided = True
                rep.checks.append(Check.inconclusive(f"sector{ell}_index{j}_clustering", abs(mu), tol))
        rep.checks.append(Check.count(f"sector{ell}_kernel_count", count, 1 if ell <= 1 else 0,
                                      undecided))
    rep.data.update(tol_kernel=tol, rows=rows)
    return rep


def cmd_shoot(cfg: RunConfig) -> VerificationReport:
    p = cfg.params
    spec = cf.BubbleSpec(p, lam=cfg.lam)
    alpha = cfg.alpha if cfg.alpha is not None else _amplitude(spec)
    lam = (cf.Q0 / alpha) ** 2
    spec = cf.BubbleSpec(p, lam=lam)
    k = cf.scaling_constants(p)
    fp = kirchhoff_fixed_point(p)
    shot = self_consistent_rediscovery(p, alpha)
    x = sample_points(spec)
    res = float(np.max(np.abs(cf.residual(shot.candidate(p), x)))) / max(1.0, alpha ** 5)
    rep = VerificationReport(kind="shoot")
    rep.checks.append(Check.below("c_vs_closed_form", (shot.c - k.c) / k.c, 1e-10))
    rep.checks.append(Check.below("profile_vs_closed_form", shot.max_rel_err, 1e-5,
                                  "max relative error on [0, 50 lam sqrt(c)]"))
    rep.checks.append(Check.below("grad_norm_sq_vs_closed_form",
                                  shot.grad_norm_sq / cf.grad_u_norm_sq(spec) - 1.0, 1e-6))
    rep.checks.append(Check.below("lambda_fit", shot.lambda_fit / lam - 1.0, 1e-6))
    rep.checks.append(Check.below("equation_residual", res, 1e-6))
    rep.checks.append(Check.under("fixed_point_iterations", fp.iterations, 61))
    rep.data.update(alpha=alpha, c=shot.c, lambda_fit=shot.lambda_fit, lambda_expected=lam,
                    max_rel_err=shot.max_rel_err, grad_norm_sq=shot.grad_norm_sq,
                    decay_constant=shot.decay_constant, iterations=fp.iterations)
    exact = cf.u_radial(spec, shot.r)
    rep.data["profile"] = {"r": shot.r.tolist(), "phi": shot.profile.tolist(), "u": exact.tolist()}
    return rep


def cmd_sweep(cfg: RunConfig) -> VerificationReport:
    return convergence_sweep(cfg.spec, cfg.n_list, l_max=cfg.l_max, kind=cfg.operator,
                             workers=cfg.workers)


COMMANDS = {
    "constants": cmd_constants,
    "verify": cmd_verify,
    "kernel": cmd_kernel,
    "spectrum": cmd_spectrum,
    "shoot": cmd_shoot,
    "sweep": cmd_sweep,
}


# -- output ----------------------------------------------------------------

def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else format(v, ".17g") if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def render(report: VerificationReport, fmt: str) -> str:
    if fmt == "json":
        return report.to_json()
    if report.kind == "spectrum" and "rows" in report.data:
        cols = ["sector", "index", "eigenvalue", "kernel_flag", "alignment"]
        return _csv_text(cols, ([r[c] for c in cols] for r in report.data["rows"]))
    if report.kind == "shoot" and "profile" in report.data:
        pr = report.data["profile"]
        return _csv_text(["r", "phi", "u"], zip(pr["r"], pr["phi"], pr["u"]))
    if report.kind == "sweep" and report.convergence:
        cols = ["n", "dim", "gap", "tol_kernel", "kernel_eig_0", "kernel_eig_1", "align_0", "align_1"]
        rows = ([h["n"], h["dim"], h["gap"], h["tol_kernel"], h["kernel_eigenvalues"]["0"],
                 h["kernel_eigenvalues"]["1"], h["alignments"]["0"], h["alignments"]["1"]]
                for h in report.convergence)
        return _csv_text(cols, rows)
    return checks_csv(report)


def run(cfg: RunConfig) -> VerificationReport:
    try:
        rep = COMMANDS[cfg.command](cfg)
    except (cf.DomainError, np.linalg.LinAlgError, ShootingError, FixedPointError) as exc:
        rep = VerificationReport(kind=cfg.command)
        rep.checks.append(Check("runtime_error", None, None, "none", FAIL, f"{type(exc).__name__}: {exc}"))
    rep.config = cfg.to_dict()
    if cfg.timestamp:
        rep.config["generated_at"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return rep


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else 2
    rep = run(cfg)
    text = render(rep, cfg.format)
    if cfg.out_path:
        with open(cfg.out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    failed = [c.name for c in rep.checks if c.status != PASS]
    print(f"{cfg.command}: {rep.status}" + (f" ({', '.join(failed)})" if failed else ""),
          file=sys.stderr)
    return 0 if rep.status == PASS else 1
