"""Command-line entry point: ``fraclp <command> [options]``.

Every run writes a new directory ``OUT/<command>-<k>`` containing

``results.csv``   the command's result table (byte-reproducible),
``checks.csv``    one row per PASS/FAIL verdict,
``metadata.json`` config echo, library versions, seed and wall time,
``summary.txt``   a short human-readable summary.

Exit codes: 0 if every check passes, 1 if any check fails or a module
reports a numerical failure, 2 on configuration errors (nothing is written).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import platform
import shutil
import sys
import tempfile
import time
from dataclasses import dataclass, field, fields

import numpy as np
import scipy

from fraclp import __version__

COMMANDS = ("kernel", "verify-l2", "estimate-constant", "scaling", "sharp", "spde")

COLUMNS_HELP = {
    "kernel": "results.csv: alpha,beta,d,r,value,method,err_estimate",
    "verify-l2": "results.csv: alpha,window,nt,ratio,target",
    "estimate-constant": "results.csv: alpha,p,rung,nx,nt,max,median,q95,growth",
    "scaling": "results.csv: alpha,c,abs_discrepancy,rel_discrepancy",
    "sharp": "results.csv: check,rung,sample,value",
    "spde": "results.csv: quantity,p,t,mc,se,oracle",
}


class ConfigError(ValueError):
    """Invalid configuration; reported with exit code 2."""


# ---------------------------------------------------------------- config


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in str(text).split(",") if v.strip())


@dataclass(frozen=True)
class RunConfig:
    command: str
    alpha: tuple = (1.0,)
    beta: float = 0.0
    p: tuple = (2.0, 4.0, 8.0)
    dim: int = 1
    nx: int | None = None
    nt: int | None = None
    seed: int = 0
    samples: int | None = None
    workers: int = 1
    out: str = "runs"
    convention: str | None = None
    family: str = "random_bandlimited"
    band: int = 8
    c: tuple = (0.5, 2.0, 3.0)
    K: int = 4
    q: float = 2.0

    # keys accepted in config files and their parsers
    _PARSERS = {
        "alpha": _floats,
        "beta": float,
        "p": _floats,
        "dim": int,
        "nx": int,
        "nt": int,
        "seed": int,
        "samples": int,
        "workers": int,
        "out": str,
        "convention": str,
        "family": str,
        "band": int,
        "c": _floats,
        "K": int,
        "q": float,
    }

    def validate(self):
        from fraclp.families import FamilyTag

        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        for a in self.alpha:
            if not 0 < a < 2:
                raise ConfigError(f"alpha must lie in (0, 2), got {a}")
        if not self.alpha:
            raise ConfigError("alpha list is empty")
        if self.beta < 0:
            raise ConfigError("beta must be >= 0")
        if self.dim not in (1, 2, 3):
            raise ConfigError("dim must be 1, 2 or 3")
        if self.command != "kernel" and self.dim != 1:
            raise ConfigError(f"{self.command} supports dim=1 only")
        for name in ("nx", "nt"):
            v = getattr(self, name)
            if v is not None and (v < 4 or (name == "nx" and v & (v - 1))):
                raise ConfigError(f"{name} must be >= 4" + (" and a power of two" if name == "nx" else ""))
        if self.samples is not None and self.samples < 1:
            raise ConfigError("samples must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.convention not in (None, "canonical", "paper"):
            raise ConfigError("convention must be canonical or paper")
        try:
            FamilyTag.parse(self.family)
        except ValueError:
            raise ConfigError(f"unknown family {self.family!r}") from None
        if self.band < 1:
            raise ConfigError("band must be >= 1")
        if any(p < 1 for p in self.p):
            raise ConfigError("p must be >= 1")
        if self.command == "estimate-constant":
            if any(p < 2 for p in self.p):
                raise ConfigError("estimate-constant needs p >= 2")
            if self.samples is not None and self.samples < 30:
                raise ConfigError("estimate-constant needs samples >= 30")
        if self.command == "spde" and self.samples is not None and self.samples < 200:
            raise ConfigError("spde needs samples >= 200")
        if any(c <= 0 for c in self.c):
            raise ConfigError("dilation factors must be positive")
        if self.K < 1:
            raise ConfigError("K must be >= 1")
        if not self.q > 1:
            raise ConfigError("q must exceed 1")

    def echo(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def read_config_file(path: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    out = {}
    for no, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{no}: expected key=value, got {line!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in RunConfig._PARSERS:
            raise ConfigError(f"{path}:{no}: unknown key {key!r}")
        try:
            out[key] = RunConfig._PARSERS[key](val)
        except ValueError:
            raise ConfigError(f"{path}:{no}: bad value for {key}: {val!r}") from None
    return out


def _env_workers() -> int:
    raw = os.environ.get("FRACLP_WORKERS")
    if raw is None or raw == "":
        return 1
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"FRACLP_WORKERS must be an integer, got {raw!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="fraclp",
        description="Numerical checks for alpha-stable parabolic square functions.",
        epilog="Exit codes: 0 all checks pass, 1 a check fails, 2 configuration error.",
    )
    sub = ap.add_subparsers(dest="command", required=True)
    for cmd in COMMANDS:
        sp = sub.add_parser(cmd, help=COLUMNS_HELP[cmd], description=COLUMNS_HELP[cmd])
        sp.add_argument("--config", help="key=value file; command-line flags take precedence")
        sp.add_argument("--alpha", type=_floats, help="comma-separated list in (0, 2)")
        sp.add_argument("--beta", type=float)
        sp.add_argument("--p", type=_floats, help="comma-separated exponents")
        sp.add_argument("--dim", type=int)
        sp.add_argument("--nx", type=int)
        sp.add_argument("--nt", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--samples", type=int)
        sp.add_argument("--workers", type=int, help="FFT worker threads (default: $FRACLP_WORKERS or 1)")
        sp.add_argument("--out", help="parent directory for run bundles (default: runs)")
        sp.add_argument("--convention", choices=("canonical", "paper"))
    return ap


def resolve_config(ns: argparse.Namespace) -> RunConfig:
    values = {"workers": _env_workers()}
    if ns.config:
        values.update(read_config_file(ns.config))
    for key in RunConfig._PARSERS:
        v = getattr(ns, key, None)
        if v is not None:
            values[key] = v
    cfg = RunConfig(command=ns.command, **values)
    cfg.validate()
    return cfg


# ---------------------------------------------------------------- bundles


@dataclass
class ReportBundle:
    header: tuple
    rows: list
    checks: list = field(default_factory=list)  # (name, value, threshold, passed)
    summary: list = field(default_factory=list)
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(c[3] for c in self.checks)

    def check(self, name: str, value, threshold, passed: bool):
        self.checks.append((name, value, threshold, bool(passed)))


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    if isinstance(v, bool):
        return "1" if v else "0"
    return str(v)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def checks_text(bundle: ReportBundle) -> str:
    rows = [(n, v, t, "PASS" if ok else "FAIL") for n, v, t, ok in bundle.checks]
    if bundle.error is not None:
        rows.append(("module_failure", bundle.error, "", "FAIL"))
    return csv_text(("check", "value", "threshold", "verdict"), rows)


def _next_run_dir(parent: str, command: str) -> str:
    k = 0
    while os.path.exists(os.path.join(parent, f"{command}-{k}")):
        k += 1
    return os.path.join(parent, f"{command}-{k}")


def write_bundle(cfg: RunConfig, bundle: ReportBundle, wall: float) -> str:
    """Write the bundle into a fresh run directory via a temporary sibling and a rename."""
    os.makedirs(cfg.out, exist_ok=True)
    tmp = tempfile.mkdtemp(prefix=".tmp-", dir=cfg.out)
    try:
        with open(os.path.join(tmp, "results.csv"), "w", encoding="utf-8", newline="") as fh:
            fh.write(csv_text(bundle.header, bundle.rows))
        with open(os.path.join(tmp, "checks.csv"), "w", encoding="utf-8", newline="") as fh:
            fh.write(checks_text(bundle))
        meta = {
            "command": cfg.command,
            "config": cfg.echo(),
            "seed": cfg.seed,
            "versions": {
                "fraclp": __version__,
                "python": platform.python_version(),
                "numpy": np.__version__,
                "scipy": scipy.__version__,
            },
            "wall_time_s": round(wall, 3),
            "verdict": "PASS" if bundle.passed else "FAIL",
        }
        with open(os.path.join(tmp, "metadata.json"), "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
        lines = list(bundle.summary)
        for n, v, t, ok in bundle.checks:
            lines.append(f"{'PASS' if ok else 'FAIL'}  {n}: {_cell(v)} (threshold {_cell(t)})")
        if bundle.error is not None:
            lines.append(f"FAIL  module failure: {bundle.error}")
        lines.append(f"verdict: {'PASS' if bundle.passed else 'FAIL'}")
        with open(os.path.join(tmp, "summary.txt"), "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
        while True:
            target = _next_run_dir(cfg.out, cfg.command)
            try:
                os.rename(tmp, target)
                return target
            except OSError:
                if not os.path.exists(target):
                    raise
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise


# ---------------------------------------------------------------- commands


def _conv(cfg: RunConfig, default: str) -> str:
    return cfg.convention or default


# grids for the grid-FFT cross-check, per dimension: (L, nx)
KERNEL_GRIDS = {1: (32768.0, 2**21), 2: (256.0, 1024), 3: (42.5, 64)}


def cmd_kernel(cfg: RunConfig) -> ReportBundle:
    from fraclp import kernel as K

    b = ReportBundle(K.TABLE_COLUMNS, [])
    d = cfg.dim
    for alpha in cfg.alpha:
        beta = cfg.beta
        tol_x = 1e-5 if d == 1 else 1e-4
        L, nx = KERNEL_GRIDS[d]
        grid = K.kernel_grid(alpha, beta, d, L, nx, estimate_error=True)
        r_g, v_g, e_g = grid.samples(0.2, 5.0)
        pick = np.unique(np.linspace(0, r_g.size - 1, 16).round().astype(int))
        worst = 0.0
        for i in pick:
            s = K.kernel_value(alpha, beta, d, float(r_g[i]))
            b.rows.append((alpha, beta, d, float(r_g[i]), s.value, s.method, s.err))
            b.rows.append((alpha, beta, d, float(r_g[i]), float(v_g[i]), "grid", float(e_g[i])))
            worst = max(worst, abs(s.value - v_g[i]))
        b.check(f"cross_method_delta(alpha={alpha})", worst, tol_x, worst <= tol_x)
        if beta == 0:
            lo, hi = (1e3, 1e5) if d == 1 else (300.0, 1e4)
            radii = np.logspace(np.log10(lo), np.log10(hi), 16)
            vals = [K.kernel_value(alpha, 0.0, d, r).value for r in radii]
            fit = K.decay_fit(radii, vals)
            b.check(f"decay_exponent(alpha={alpha})", fit.exponent, -(d + alpha), abs(fit.exponent + d + alpha) <= 0.05)
        else:
            r_hi = 1e5 if alpha < 1 else 1e4
            cert = K.bound_certificate(alpha, beta, d, 0.1, r_hi, n_per_decade=12 if d == 1 else 4)
            b.check(f"bound_drift(alpha={alpha})", cert.drift, 0.05, cert.drift < 0.05)
        if beta > 0:
            env = K.fit_envelope(alpha, beta, d, np.logspace(-3, 3, 40))
            dense = np.logspace(-3, 3, 120)
            p3, g3 = K.envelope_samples(alpha, beta, d, dense)
            worst_ratio = float(np.max(K.envelope_ratio(alpha, beta, d, dense, p3, g3)) / env.N)
            b.summary.append(f"alpha={alpha}: envelope amplitude N={env.N!r}")
            b.check(f"envelope_domination(alpha={alpha})", worst_ratio, 1.0, worst_ratio <= 1.0 + 1e-8)
    b.summary.insert(0, f"kernel tables for d={d}, beta={cfg.beta}")
    return b


def cmd_verify_l2(cfg: RunConfig) -> ReportBundle:
    from fraclp.families import TestFieldFamily
    from fraclp.field import GridSpec
    from fraclp.verify import l2_identity_check

    conv = _conv(cfg, "paper")
    nx, nt = cfg.nx or 256, cfg.nt or 128
    fam = TestFieldFamily(cfg.family, seed=cfg.seed, band=min(cfg.band, nx // 4))
    b = ReportBundle(("alpha", "window", "nt", "ratio", "target"), [])
    for alpha in cfg.alpha:
        rep = l2_identity_check(alpha, fam.member(0), GridSpec(nx=nx, nt=nt), conv=conv, workers=cfg.workers)
        for T, r in zip(rep.windows, rep.ratios):
            b.rows.append((alpha, float(T), int(round(T * nt)), r, rep.target))
        b.summary.append(f"alpha={alpha}: target {rep.target:.7f}, achieved {rep.ratios[-1]:.7f}")
        b.check(f"final_within_2pct(alpha={alpha})", rep.final_error, rep.tol, rep.final_error <= rep.tol)
        b.check(f"increasing(alpha={alpha})", rep.increasing, True, rep.increasing)
        b.check(f"bounded_by_target(alpha={alpha})", max(rep.ratios), rep.target, rep.bounded)
    return b


def cmd_estimate_constant(cfg: RunConfig) -> ReportBundle:
    from fraclp.families import TestFieldFamily
    from fraclp.verify import lp_ratio_estimate

    conv = _conv(cfg, "paper")
    nx, nt = cfg.nx or 128, cfg.nt or 64
    ladder = [(nx, nt), (2 * nx, 2 * nt), (4 * nx, 4 * nt)]
    fam = TestFieldFamily(cfg.family, seed=cfg.seed, band=min(cfg.band, nx // 4))
    n = cfg.samples or 30
    b = ReportBundle(("alpha", "p", "rung", "nx", "nt", "max", "median", "q95", "growth"), [])
    for alpha in cfg.alpha:
        ests = lp_ratio_estimate(alpha, cfg.p, fam, n, ladder, conv=conv, workers=cfg.workers)
        for p, est in ests.items():
            for r, (rx, rt) in enumerate(ladder):
                g = float(est.growth[r - 1]) if r else 0.0
                b.rows.append((alpha, p, r, rx, rt, float(est.max[r]), float(est.median[r]), float(est.q95[r]), g))
            b.check(f"stable(alpha={alpha},p={p})", float(est.growth[-1]), est.growth_tol, est.stable)
            if est.l2_target is not None:
                b.check(f"p2_within_constant(alpha={alpha})", float(est.max.max()), est.l2_target * 1.02, est.within_l2)
    b.summary.append(f"{n} samples, ladder {ladder}")
    return b


def cmd_scaling(cfg: RunConfig) -> ReportBundle:
    from fraclp.families import TestFieldFamily
    from fraclp.field import GridSpec
    from fraclp.verify import scaling_check

    conv = _conv(cfg, "paper")
    nx, nt = cfg.nx or 256, cfg.nt or 128
    fam = TestFieldFamily(cfg.family, seed=cfg.seed, band=min(cfg.band, nx // 4))
    b = ReportBundle(("alpha", "c", "abs_discrepancy", "rel_discrepancy"), [])
    for alpha in cfg.alpha:
        rep = scaling_check(alpha, cfg.c, fam.member(0), GridSpec(nx=nx, nt=nt), conv=conv)
        for c, a, r in zip(rep.cs, rep.abs_discrepancy, rep.rel_discrepancy):
            b.rows.append((alpha, c, a, r))
            b.check(f"scaling(alpha={alpha},c={c})", r, rep.tol, r < rep.tol)
    return b


def cmd_sharp(cfg: RunConfig) -> ReportBundle:
    from fraclp.families import TestFieldFamily
    from fraclp.verify import fefferman_stein_ratio, pointwise_sharp_check

    conv = _conv(cfg, "paper")
    nx, nt = cfg.nx or 128, cfg.nt or 64
    rungs = ((nx, nt), (2 * nx, 2 * nt))
    fam = TestFieldFamily(cfg.family, seed=cfg.seed, band=min(cfg.band, nx // 4))
    n = cfg.samples or 30
    b = ReportBundle(("check", "rung", "sample", "value"), [])
    for alpha in cfg.alpha:
        reps = [
            (f"pointwise_sharp(alpha={alpha})", pointwise_sharp_check(alpha, fam, n, rungs, conv=conv)),
            (f"fefferman_stein(alpha={alpha},q={cfg.q})", fefferman_stein_ratio(cfg.q, fam, n, alpha, rungs)),
        ]
        for name, rep in reps:
            for rung, arr in ((0, rep.coarse), (1, rep.fine)):
                for i, v in enumerate(arr):
                    b.rows.append((name, rung, i, float(v)))
            b.check(name + ":refinement_drift", rep.refinement_drift, rep.tol, rep.finite and rep.refinement_drift < rep.tol)
            b.check(name + ":sample_drift", rep.sample_drift, rep.tol, rep.sample_drift < rep.tol)
    return b


def cmd_spde(cfg: RunConfig) -> ReportBundle:
    from fraclp.families import TestFieldFamily
    from fraclp.field import GridSpec
    from fraclp.spde import (
        NoiseSpec,
        energy_inequality_check,
        energy_stability,
        ito_isometry_check,
        simulate_stochastic_convolution,
    )

    conv = _conv(cfg, "canonical")
    nx, nt = cfg.nx or 64, cfg.nt or 64
    M = cfg.samples or 2000
    fam = TestFieldFamily(cfg.family, seed=cfg.seed, band=min(cfg.band, nx // 4), m=cfg.K)
    spec = GridSpec(nx=nx, nt=nt, m=cfg.K)
    f = fam.sample(spec, 0)
    ps = (2.0, 4.0)
    b = ReportBundle(("quantity", "p", "t", "mc", "se", "oracle"), [])
    for alpha in cfg.alpha:
        noise = NoiseSpec(cfg.K, cfg.seed, spec.dt, spec.nt)
        res = simulate_stochastic_convolution(f, alpha, noise, M, conv=conv, ps=ps, workers=cfg.workers)
        iso = ito_isometry_check(res, f, alpha)
        for t, mc, se, o in zip(iso.times, iso.mc, iso.se, iso.oracle):
            b.rows.append((f"l2sq(alpha={alpha})", "", float(t), float(mc), float(se), float(o)))
        b.check(f"ito_isometry_z(alpha={alpha})", iso.final_z, 3.0, iso.passed)
        half = res.head(M // 2)
        for p in ps:
            full = energy_inequality_check(res, f, alpha, p)
            small = energy_inequality_check(half, f, alpha, p)
            b.rows.append((f"energy_ratio(alpha={alpha},M={M // 2})", p, "", small.ratio, small.ratio_se, ""))
            b.rows.append((f"energy_ratio(alpha={alpha},M={M})", p, "", full.ratio, full.ratio_se, ""))
            stable = energy_stability(small, full)
            b.check(f"energy_stable(alpha={alpha},p={p})", full.ratio, "3 combined SE", stable)
            if full.exact_lhs is not None:
                z = (full.lhs - full.exact_lhs) / full.lhs_se
                b.check(f"energy_p2_exact_z(alpha={alpha})", z, 3.0, abs(z) <= 3.0)
    b.summary.append(f"M={M} paths, K={cfg.K}, grid nx={nx} nt={nt}")
    return b


DISPATCH = {
    "kernel": cmd_kernel,
    "verify-l2": cmd_verify_l2,
    "estimate-constant": cmd_estimate_constant,
    "scaling": cmd_scaling,
    "sharp": cmd_sharp,
    "spde": cmd_spde,
}


def run(cfg: RunConfig) -> tuple[int, str]:
    """Execute a validated config; returns ``(exit_code, run_dir)``."""
    from fraclp.quadrature import QuadratureError

    t0 = time.perf_counter()
    try:
        bundle = DISPATCH[cfg.command](cfg)
    except (QuadratureError, FloatingPointError, ArithmeticError) as exc:
        bundle = ReportBundle(("error",), [(str(exc),)], error=f"{type(exc).__name__}: {exc}")
    wall = time.perf_counter() - t0
    path = write_bundle(cfg, bundle, wall)
    return (0 if bundle.passed else 1), path


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        cfg = resolve_config(ns)
    except ConfigError as exc:
        print(f"fraclp: configuration error: {exc}", file=sys.stderr)
        return 2
    code, path = run(cfg)
    with open(os.path.join(path, "summary.txt"), encoding="utf-8") as fh:
        sys.stdout.write(fh.read())
    print(f"bundle: {path}")
    return code


if __name__ == "__main__":
    sys.exit(main())
