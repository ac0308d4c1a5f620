"""Command line entry point: verification suites and weight scans.

    coulomb-kernel verify --suite schoenberg --seed 7 --out report.json
    coulomb-kernel scan --z 0.0023,0.5 --nu-count 200 --out weight.csv

Exit status: 0 all checks pass, 1 a check failed, 2 bad configuration,
3 the report could not be written.  Reports contain no timing or worker
information unless --timing is given, so identical configurations produce
identical bytes however many worker processes are used.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .geometry import (
    LobachevskyPoint,
    boost,
    hyperbolic_angle,
    is_proper_lorentz,
    minkowski_dot,
    points_from_rng,
    random_direction,
    random_lorentz,
)
from .kernel import KernelParams, cnd_defect, gram_psd_certificate, levy_exponent, zero_sum_coefficients
from .spectral import (
    NU_FLOOR,
    default_nu_grid,
    phi_principal,
    phi_principal_integral,
    positivity_scan,
    reconstruct_kernel,
    small_nu_trend,
)
from .states import ElectricTypeState, j_form, lemma_check
from .transform import (
    bump_profile,
    forward_radial,
    forward_radial_2d,
    gaussian_profile,
    heat_kernel_profile,
    heat_kernel_spectrum,
    inverse_radial,
    round_trip,
)

SCHEMA_VERSION = 1
SUITES = ("geometry", "schoenberg", "lemma", "spectral", "reconstruct", "transform")
SCAN_HEADER = ["z", "nu", "K", "half_width_N", "im_residue_ratio", "status"]
PHYSICAL_Z = 0.0023
NEGATIVE_CONTROL_T = -0.05
DEFAULT_LAMBDAS = (0.25, 0.5, 1.0, 2.0, 3.0)


class ConfigError(ValueError):
    pass


@dataclass
class SuiteConfig:
    suite: str
    seed: int = 0
    z: list | None = None
    nu_min: float = NU_FLOOR
    nu_max: float = 20.0
    nu_count: int = 200
    lambda_grid: list | None = None
    points: int = 25
    t: list | None = None
    tol_psd: float = 1e-9
    trials: int = 40
    out: str | None = None
    format: str = "json"
    workers: int = 1
    timing: bool = False

    def validate(self):
        if self.suite not in SUITES + ("all",):
            raise ConfigError(f"unknown suite {self.suite!r}")
        if not NU_FLOOR <= self.nu_min <= self.nu_max:
            raise ConfigError(f"need {NU_FLOOR} <= nu-min <= nu-max")
        if self.nu_count < 0:
            raise ConfigError("nu-count must be >= 0")
        if not 2 <= self.points <= 200:
            raise ConfigError("points must lie in [2, 200]")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.z is not None and any(not (v > 0 and math.isfinite(v)) for v in self.z):
            raise ConfigError("z values must be positive")
        if self.lambda_grid is not None and any(not (v >= 0 and math.isfinite(v)) for v in self.lambda_grid):
            raise ConfigError("lambda values must be non-negative")
        if not self.tol_psd > 0:
            raise ConfigError("tol-psd must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def echo(self) -> dict:
        """Configuration as recorded in the report (no output path, workers or timing flag)."""
        return {
            "suite": self.suite,
            "seed": self.seed,
            "z": self.z,
            "nu_min": self.nu_min,
            "nu_max": self.nu_max,
            "nu_count": self.nu_count,
            "lambda_grid": self.lambda_grid,
            "points": self.points,
            "t": self.t,
            "tol_psd": self.tol_psd,
            "trials": self.trials,
            "format": self.format,
        }

    def nu_grid(self) -> np.ndarray:
        return default_nu_grid(self.nu_count, self.nu_min, self.nu_max)

    def lambdas(self) -> list:
        return list(DEFAULT_LAMBDAS) if self.lambda_grid is None else list(self.lambda_grid)


@dataclass
class Check:
    id: str
    params: dict
    value: float | None
    threshold: float | None
    passed: bool

    def as_dict(self) -> dict:
        return {"id": self.id, "params": self.params, "value": _num(self.value),
                "threshold": _num(self.threshold), "pass": bool(self.passed)}


@dataclass
class VerificationReport:
    suite: str
    config: dict
    checks: list = field(default_factory=list)
    duration: float | None = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self) -> dict:
        out = {
            "schema_version": SCHEMA_VERSION,
            "toolkit_version": __version__,
            "suite": self.suite,
            "verdict": "pass" if self.passed else "fail",
            "config": self.config,
            "checks": [c.as_dict() for c in self.checks],
        }
        if self.duration is not None:
            out["wall_clock_s"] = self.duration
        return out


def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else repr(x)


def _rng(cfg: SuiteConfig, suite: str) -> np.random.Generator:
    # one independent stream per suite, so "all" matches the suites run one by one
    return np.random.default_rng([cfg.seed, SUITES.index(suite)])


# --------------------------------------------------------------------------- suites

def suite_geometry(cfg: SuiteConfig) -> list[Check]:
    rng = _rng(cfg, "geometry")
    checks = []
    pts = points_from_rng(rng, cfg.points, 6.0)
    vecs = np.stack([p.vector for p in pts])
    shell = float(np.max(np.abs(minkowski_dot(vecs, vecs) - 1.0) / vecs[:, 0] ** 2))
    checks.append(Check("on_shell", {"n": cfg.points}, shell, 1e-12, shell <= 1e-12))

    lam = hyperbolic_angle(vecs[:, None, :], vecs[None, :, :])
    sym = float(np.max(np.abs(lam - lam.T)))
    checks.append(Check("angle_symmetric", {}, sym, 0.0, sym == 0.0))
    diag = float(np.max(np.abs(np.diagonal(lam))))
    checks.append(Check("angle_self_zero", {}, diag, 1e-7, diag <= 1e-7))

    worst_inv = 0.0
    worst_lorentz = True
    for _ in range(cfg.trials):
        m = random_lorentz(rng, 2.0)
        worst_lorentz &= is_proper_lorentz(m)
        i, j = rng.choice(len(pts), 2, replace=False)
        a, b = vecs[i], vecs[j]
        before = float(hyperbolic_angle(a, b))
        after = float(hyperbolic_angle(m @ a, m @ b))
        worst_inv = max(worst_inv, abs(after - before) / max(1.0, before))
    checks.append(Check("random_maps_proper", {"trials": cfg.trials}, None, None, bool(worst_lorentz)))
    checks.append(Check("angle_invariance", {"trials": cfg.trials}, worst_inv, 1e-9, worst_inv <= 1e-9))

    worst_tri = -math.inf
    for _ in range(cfg.trials):
        i, j, k = rng.choice(len(pts), 3, replace=False)
        worst_tri = max(worst_tri, float(lam[i, k] - lam[i, j] - lam[j, k]))
    checks.append(Check("triangle_inequality", {"trials": cfg.trials}, worst_tri, 1e-9, worst_tri <= 1e-9))

    o = LobachevskyPoint.origin().vector
    worst_rap = 0.0
    for s in (0.1, 1.0, 3.0, 6.0):
        u = boost(s, random_direction(rng)) @ o
        worst_rap = max(worst_rap, abs(float(hyperbolic_angle(o, u)) - s) / s)
    checks.append(Check("boost_rapidity", {"s": [0.1, 1.0, 3.0, 6.0]}, worst_rap, 1e-12, worst_rap <= 1e-12))
    return checks


def _schoenberg_ts(cfg: SuiteConfig) -> list:
    return list(cfg.t) if cfg.t is not None else [PHYSICAL_Z / (4.0 * math.pi), 0.1, 1.0]


def _gram_batch(rng, t: float, cfg: SuiteConfig, count: int, lam_max: float = 6.0):
    worst = math.inf
    failures = 0
    for _ in range(count):
        n = int(rng.integers(2, cfg.points + 1))
        rep = gram_psd_certificate(points_from_rng(rng, n, lam_max), KernelParams(t), cfg.tol_psd)
        worst = min(worst, rep.min_eigenvalue / n)
        failures += not rep.psd
    return worst, failures


def suite_schoenberg(cfg: SuiteConfig) -> list[Check]:
    rng = _rng(cfg, "schoenberg")
    checks = []
    for t in _schoenberg_ts(cfg):
        worst, failures = _gram_batch(rng, t, cfg, cfg.trials)
        checks.append(Check("gram_psd", {"t": t, "grams": cfg.trials, "lambda_max": 6.0},
                            worst, -cfg.tol_psd, failures == 0))
    if cfg.t is None:
        # the control must be caught: exp(-4 pi t g) with t < 0 is not positive definite
        worst, failures = _gram_batch(rng, NEGATIVE_CONTROL_T, cfg, cfg.trials)
        checks.append(Check("negative_control_detected", {"t": NEGATIVE_CONTROL_T, "grams": cfg.trials},
                            float(failures), 1.0, failures >= 1))
    worst_q = -math.inf
    for _ in range(cfg.trials):
        n = int(rng.integers(2, cfg.points + 1))
        alpha = zero_sum_coefficients(rng, n)
        q = cnd_defect(points_from_rng(rng, n, 6.0), alpha)
        worst_q = max(worst_q, q / float(np.sum(np.abs(alpha) ** 2)))
    checks.append(Check("cnd_defect", {"trials": cfg.trials}, worst_q, 1e-10, worst_q <= 1e-10))
    return checks


def _pair(lam: float):
    """Two points at distance lam placed symmetrically about the origin."""
    axis = np.array([0.3, -0.5, 0.8])
    o = LobachevskyPoint.origin().vector
    return boost(0.5 * lam, axis) @ o, boost(-0.5 * lam, axis) @ o


def suite_lemma(cfg: SuiteConfig) -> list[Check]:
    rng = _rng(cfg, "lemma")
    checks = []
    for lam in cfg.lambdas():
        if lam <= 0:
            continue
        u, v = _pair(lam)
        got = j_form(ElectricTypeState.single(u), ElectricTypeState.single(v)).real
        exact = -4.0 * math.pi * lam / math.tanh(lam)
        err = abs(got - exact) / abs(exact)
        checks.append(Check("pair_closed_form", {"lambda": lam}, err, 1e-6, err <= 1e-6))

        charge = math.sqrt(PHYSICAL_Z * math.pi)
        a = charge / (2.0 * math.pi)
        state = ElectricTypeState(np.array([a, -a]), [u, v])
        got = j_form(state, state).real
        exact = 2.0 * PHYSICAL_Z * float(levy_exponent(lam))
        err = abs(got - exact) / exact
        checks.append(Check("two_charge_closed_form", {"lambda": lam}, err, 1e-6, err <= 1e-6))

    worst_pos = math.inf
    worst_cross = 0.0
    for _ in range(cfg.trials):
        n = int(rng.integers(2, 9))
        center = points_from_rng(rng, 1, 4.0)[0]
        pts = points_from_rng(rng, n, 1.5, center=center)
        alpha = zero_sum_coefficients(rng, n)
        norm = float(np.sum(np.abs(alpha) ** 2))
        val = lemma_check(ElectricTypeState(alpha, pts))
        q = cnd_defect(pts, alpha)
        worst_pos = min(worst_pos, val / norm)
        worst_cross = max(worst_cross, abs(val + 4.0 * math.pi * q) / max(abs(val), 1e-300))
    checks.append(Check("lemma_nonnegative", {"trials": cfg.trials}, worst_pos, -1e-8, worst_pos >= -1e-8))
    checks.append(Check("cross_identity", {"trials": cfg.trials}, worst_cross, 1e-8, worst_cross <= 1e-8))
    return checks


PHI_NUS = (0.5, 1.0, 2.0, 4.0, 8.0)
PHI_LAMS = (0.2, 0.5, 1.0, 2.0, 4.0)


def suite_spectral(cfg: SuiteConfig, z_default=(PHYSICAL_Z,)) -> list[Check]:
    checks = []
    z_list = list(z_default) if cfg.z is None else cfg.z
    for table in positivity_scan(z_list, cfg.nu_grid(), workers=cfg.workers):
        if not len(table.nu):
            continue
        certified = all(s == "ok" for s in table.status)
        im_worst = max((c.im_ratio for c in table.certificates if c is not None), default=math.inf)
        checks.append(Check("weight_certified", {"z": table.z, "count": len(table.nu)},
                            float(sum(s != "ok" for s in table.status)), 0.0, certified))
        checks.append(Check("weight_real", {"z": table.z}, im_worst, 1e-8, im_worst <= 1e-8))
        scale = float(np.nanmax(np.abs(table.values)))
        checks.append(Check("weight_nonnegative", {"z": table.z}, table.minimum, -1e-10 * scale,
                            bool(table.nonnegative)))
    for z in z_list:
        # informational: the trend towards nu -> 0 is reported, no limit is asserted
        nus, ks = small_nu_trend(z)
        checks.append(Check("small_nu_trend", {"z": z, "nu": nus.tolist(), "K": ks.tolist()},
                            float(ks[-1] / ks[0]), None, True))
    o = LobachevskyPoint.origin().vector
    worst = 0.0
    for lam in PHI_LAMS:
        u = boost(lam, (0.0, 0.0, 1.0)) @ o
        for nu in PHI_NUS:
            # the distance lam is split symmetrically so the sphere rule sees moderate boosts
            a, b = boost(-0.5 * lam, (0.0, 0.0, 1.0)) @ o, boost(0.5 * lam, (0.0, 0.0, 1.0)) @ o
            quad = phi_principal_integral(nu, a, b)
            worst = max(worst, abs(quad - phi_principal(nu, lam)))
    checks.append(Check("phi_oracle", {"nu": list(PHI_NUS), "lambda": list(PHI_LAMS)}, worst, 1e-8, worst <= 1e-8))
    return checks


def suite_reconstruct(cfg: SuiteConfig) -> list[Check]:
    checks = []
    z_list = [2.0, 0.5] if cfg.z is None else cfg.z
    lams = cfg.lambdas()
    for z in z_list:
        rec = reconstruct_kernel(lams, z, workers=cfg.workers)
        worst = float(np.max(rec.relative_residual)) if len(lams) else 0.0
        params = {"z": z, "lambda": lams, "discrete_weight": rec.discrete.weight,
                  "candidate": rec.discrete.candidate, "ratio": rec.discrete.ratio}
        checks.append(Check("reconstruction", params, worst, 1e-5, worst <= 1e-5))
        if z > 1.0:
            checks.append(Check("no_discrete_term", {"z": z}, abs(rec.sum_rule - 1.0), 1e-5,
                                abs(rec.sum_rule - 1.0) <= 1e-5 and not rec.discrete.present))
    return checks


def suite_transform(cfg: SuiteConfig) -> list[Check]:
    checks = []
    nus = np.array([0.0, 0.25, 0.5, 1.0, 2.0, 3.0, 4.0])
    exact = heat_kernel_spectrum()(nus)
    err = float(np.max(np.abs(forward_radial(heat_kernel_profile(), nus) - exact)))
    checks.append(Check("heat_forward", {"nu": nus.tolist()}, err, 1e-8, err <= 1e-8))
    lams = np.linspace(0.0, 3.0, 31)
    err = float(np.max(np.abs(inverse_radial(heat_kernel_spectrum(), lams) - heat_kernel_profile()(lams))))
    checks.append(Check("heat_inverse", {"lambda": "linspace(0, 3, 31)"}, err, 1e-8, err <= 1e-8))
    for name, prof in (("gaussian", gaussian_profile()), ("bump", bump_profile()), ("heat", heat_kernel_profile())):
        err = float(np.max(np.abs(round_trip(prof, lams) - prof(lams))))
        checks.append(Check("round_trip", {"profile": name}, err, 1e-6, err <= 1e-6))
    for name, prof in (("gaussian", gaussian_profile()), ("bump", bump_profile()), ("heat", heat_kernel_profile())):
        worst_2d = 0.0
        worst_im = 0.0
        for nu in (0.5, 1.5, 3.0):
            two = forward_radial_2d(prof, nu)
            one = float(forward_radial(prof, nu))
            scale = max(abs(one), 1e-300)
            worst_2d = max(worst_2d, abs(two.real - one) / scale)
            worst_im = max(worst_im, abs(two.imag) / scale)
        checks.append(Check("two_dim_oracle", {"profile": name, "nu": [0.5, 1.5, 3.0]}, worst_2d, 1e-6,
                            worst_2d <= 1e-6))
        checks.append(Check("spectrum_real", {"profile": name}, worst_im, 1e-10, worst_im <= 1e-10))
    return checks


SUITE_FUNCS = {
    "geometry": suite_geometry,
    "schoenberg": suite_schoenberg,
    "lemma": suite_lemma,
    "spectral": suite_spectral,
    "reconstruct": suite_reconstruct,
    "transform": suite_transform,
}


def run_suite(cfg: SuiteConfig) -> VerificationReport:
    cfg.validate()
    start = time.perf_counter()
    names = SUITES if cfg.suite == "all" else (cfg.suite,)
    report = VerificationReport(suite=cfg.suite, config=cfg.echo())
    for name in names:
        for c in SUITE_FUNCS[name](cfg):
            if cfg.suite == "all":
                c.id = f"{name}.{c.id}"
            report.checks.append(c)
    if cfg.timing:
        report.duration = time.perf_counter() - start
    return report


# --------------------------------------------------------------------------- output

def render_report(report: VerificationReport, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report.as_dict(), indent=2, sort_keys=False) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["check", "params", "value", "threshold", "pass"])
    for c in report.checks:
        d = c.as_dict()
        w.writerow([d["id"], json.dumps(d["params"], sort_keys=True), d["value"], d["threshold"], d["pass"]])
    w.writerow(["verdict", "", "", "", "pass" if report.passed else "fail"])
    return buf.getvalue()


def scan_rows(tables) -> list[list]:
    rows = []
    for table in tables:
        for nu, k, cert, status in zip(table.nu, table.values, table.certificates, table.status):
            rows.append([repr(table.z), repr(float(nu)), repr(float(k)),
                         cert.half_width if cert else "", repr(cert.im_ratio) if cert else "", status])
        verdict = {None: "empty", True: "non-negative", False: "negative-or-uncertified"}[table.nonnegative]
        minimum = "" if table.minimum is None else repr(table.minimum)
        rows.append([repr(table.z), "min", minimum, "", "", verdict])
    return rows


def render_scan(tables, fmt: str) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SCAN_HEADER)
        w.writerows(scan_rows(tables))
        return buf.getvalue()
    out = {"schema_version": SCHEMA_VERSION, "toolkit_version": __version__, "tables": []}
    for t in tables:
        out["tables"].append({
            "z": t.z,
            "rows": [
                {"nu": float(nu), "K": _num(k), "half_width_N": c.half_width if c else None,
                 "im_residue_ratio": c.im_ratio if c else None, "status": s}
                for nu, k, c, s in zip(t.nu, t.values, t.certificates, t.status)
            ],
            "min_K": t.minimum,
            "verdict": {None: "empty", True: "non-negative", False: "negative-or-uncertified"}[t.nonnegative],
        })
    return json.dumps(out, indent=2) + "\n"


def _write(text: str, path: str | None):
    if path is None or path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


# --------------------------------------------------------------------------- argument parsing

def _float_list(text: str) -> list:
    text = text.strip()
    if not text:
        return []
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(2)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="coulomb-kernel", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, default_format):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--z", type=_float_list, default=None, help="comma-separated couplings z = 4 pi t")
        sp.add_argument("--nu-min", type=float, default=NU_FLOOR)
        sp.add_argument("--nu-max", type=float, default=20.0)
        sp.add_argument("--nu-count", type=int, default=200)
        sp.add_argument("--out", default=None, help="output file (default stdout)")
        sp.add_argument("--format", choices=("csv", "json"), default=default_format)
        sp.add_argument("--workers", type=int, default=1, help="worker processes (results do not depend on it)")
        sp.add_argument("--timing", action="store_true", help="add the wall-clock duration to the report")

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("--suite", required=True, choices=SUITES + ("all",))
    v.add_argument("--lambda-grid", type=_float_list, default=None)
    v.add_argument("--points", type=int, default=25, help="largest Gram matrix / point count")
    v.add_argument("--t", type=_float_list, default=None, help="Schoenberg parameters (replaces the defaults)")
    v.add_argument("--tol-psd", type=float, default=1e-9)
    v.add_argument("--trials", type=int, default=40)
    common(v, "json")

    s = sub.add_parser("scan", help="tabulate the spectral weight K(nu; z)")
    common(s, "csv")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "verify":
        cfg = SuiteConfig(suite=args.suite, seed=args.seed, z=args.z, nu_min=args.nu_min, nu_max=args.nu_max,
                          nu_count=args.nu_count, lambda_grid=args.lambda_grid, points=args.points, t=args.t,
                          tol_psd=args.tol_psd, trials=args.trials, out=args.out, format=args.format,
                          workers=args.workers, timing=args.timing)
    else:
        cfg = SuiteConfig(suite="spectral", seed=args.seed, z=args.z, nu_min=args.nu_min, nu_max=args.nu_max,
                          nu_count=args.nu_count, out=args.out, format=args.format, workers=args.workers,
                          timing=args.timing)
    try:
        cfg.validate()
    except ConfigError as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return 2

    start = time.perf_counter()
    if args.command == "verify":
        report = run_suite(cfg)
        text = render_report(report, cfg.format)
        status = 0 if report.passed else 1
    else:
        z_list = [PHYSICAL_Z] if cfg.z is None else cfg.z
        tables = positivity_scan(z_list, cfg.nu_grid(), workers=cfg.workers)
        text = render_scan(tables, cfg.format)
        status = 0 if all(t.nonnegative is not False for t in tables) else 1
    try:
        _write(text, cfg.out)
    except OSError as exc:
        sys.stderr.write(f"cannot write {cfg.out}: {exc}\n")
        # flush what we have so the run is not lost
        sys.stdout.write(text)
        return 3
    sys.stderr.write(f"{args.command}: {'ok' if status == 0 else 'FAILED'} in {time.perf_counter() - start:.1f} s\n")
    return status


if __name__ == "__main__":
    raise SystemExit(main())
