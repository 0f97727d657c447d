"""Command-line entry point.

Subcommands:

    generate    write fading realizations to CSV or binary
    variances   emit the per-harmonic variance table as CSV
    validate    reproduce a reference validation run (figures 6/7/8)
    compare-kl  series generator vs dense correlated-Gaussian baseline
    bench       timing sweep: series synthesis vs dense baseline scaling

All lengths on the interface are in wavelengths; the wavelength itself is
never a flag. A flat key=value config file may supply any long option of
the chosen subcommand (unknown keys are rejected); explicit flags win over
file values. ``--threads`` caps worker concurrency (default: available
parallelism; env var HOLO_THREADS overrides the default). Exit codes:
0 all checks passed, 1 a validation failed (machine-readable failure list
on stderr), 2 bad configuration.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .errors import ConfigError, HoloFadingError
from .generator import Aperture, generate_batch_planes
from .spectrum import SpectralFactor
from .validation import compare_kl, run_figure
from .variances import table_1d, table_2d

BIN_MAGIC = b"HOLO"
BIN_VERSION = 1


def _parse_lengths(text: str, name: str, max_parts: int = 3) -> list[float]:
    try:
        parts = [float(p) for p in text.split(",") if p != ""]
    except ValueError:
        raise ConfigError(f"--{name}: expected comma-separated numbers, got {text!r}")
    if not 1 <= len(parts) <= max_parts:
        raise ConfigError(f"--{name}: expected 1 to {max_parts} values, got {len(parts)}")
    return parts


def build_aperture(aperture_spec: str, spacing_spec: str) -> Aperture:
    sides = _parse_lengths(aperture_spec, "aperture")
    spacings = _parse_lengths(spacing_spec, "spacing")
    if len(spacings) == 1:
        spacings = spacings * len(sides)
    if len(spacings) != len(sides):
        raise ConfigError("--spacing must have one value or one per aperture side")
    for d in spacings[: min(len(sides), 2)]:
        if d > 0.5 + 1e-12:
            raise ConfigError(
                f"spacing {d:g} violates the Nyquist rule: the field is "
                "2*kappa-bandlimited, so in-plane spacing must be <= lambda/2"
            )
    kwargs = dict(lx=sides[0], dx=spacings[0])
    if len(sides) >= 2:
        kwargs.update(ly=sides[1], dy=spacings[1])
    if len(sides) == 3:
        kwargs.update(lz=sides[2], dz=spacings[2])
    try:
        return Aperture(**kwargs)
    except (ValueError, HoloFadingError) as exc:
        raise ConfigError(str(exc))


def load_factor(spec: str, aperture: Aperture | None = None) -> SpectralFactor | None:
    if spec == "isotropic":
        return None  # generator picks the isotropic kind native to the aperture
    if not os.path.exists(spec):
        raise ConfigError(f"--factor: {spec!r} is neither 'isotropic' nor an existing CSV file")
    try:
        return SpectralFactor.from_csv(spec)
    except ValueError as exc:
        raise ConfigError(f"--factor {spec}: {exc}")


# ---------------------------------------------------------------------------
# config file / flag merging
# ---------------------------------------------------------------------------

def read_config_file(path: str) -> dict[str, str]:
    if not os.path.exists(path):
        raise ConfigError(f"config file {path!r} does not exist")
    out: dict[str, str] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def merge_config(args: argparse.Namespace, parser_defaults: dict) -> argparse.Namespace:
    """Resolve option precedence: explicit flag > config file > default."""
    file_values: dict[str, str] = {}
    if args.config:
        file_values = read_config_file(args.config)
        unknown = set(file_values) - set(parser_defaults)
        if unknown:
            raise ConfigError(
                f"unknown config key(s) {sorted(unknown)}; valid keys: "
                f"{sorted(parser_defaults)}"
            )
    for dest, (default, conv) in parser_defaults.items():
        if getattr(args, dest) is not None:
            continue  # explicit flag
        if dest in file_values:
            try:
                setattr(args, dest, conv(file_values[dest]))
            except ValueError:
                raise ConfigError(f"config key {dest}: cannot parse {file_values[dest]!r}")
        else:
            setattr(args, dest, default)
    required = [d for d, (default, _) in parser_defaults.items() if default is _REQUIRED]
    missing = [d for d in required if getattr(args, d) is _REQUIRED]
    if missing:
        raise ConfigError(f"missing required option(s): {missing}")
    return args


_REQUIRED = object()


class _Command:
    """One subcommand: argparse wiring plus the file-mergeable option table."""

    def __init__(self, sub, name, help_text):
        self.parser = sub.add_parser(name, help=help_text)
        self.defaults: dict[str, tuple[object, object]] = {}

    def opt(self, flag, conv=str, default=None, required=False, help=""):  # noqa: A002
        dest = flag.lstrip("-").replace("-", "_")
        self.parser.add_argument(flag, dest=dest, type=conv, default=None, help=help)
        self.defaults[dest] = (_REQUIRED if required else default, conv)

    def finish(self, handler):
        self.parser.set_defaults(handler=handler, option_table=self.defaults)


def _threads_default() -> int:
    env = os.environ.get("HOLO_THREADS")
    if env:
        return max(int(env), 1)
    return os.cpu_count() or 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="holofading",
        description="Fourier plane-wave synthesis of spatially-stationary fading",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = _Command(sub, "generate", "write fading realizations")
    g.opt("--aperture", str, required=True, help="side lengths Lx[,Ly[,Lz]] in wavelengths")
    g.opt("--spacing", str, required=True, help="grid spacings dx[,dy[,dz]] in wavelengths")
    g.opt("--seed", int, 0, help="RNG seed (default 0)")
    g.opt("--realizations", int, 1, help="number of realizations M")
    g.opt("--factor", str, "isotropic", help="'isotropic' or a tabulated-factor CSV")
    g.opt("--out", str, required=True, help="output path")
    g.opt("--format", str, "bin", help="'csv' or 'bin'")
    g.opt("--config", str, None, help="key=value config file")
    g.opt("--threads", int, _threads_default(), help="worker thread cap")
    g.finish(cmd_generate)

    v = _Command(sub, "variances", "emit the variance table")
    v.opt("--aperture", str, required=True, help="side lengths Lx[,Ly] in wavelengths")
    v.opt("--method", str, "closed-form", help="'closed-form' or 'quadrature' (2D only)")
    v.opt("--out", str, None, help="output CSV path (default stdout)")
    v.opt("--config", str, None, help="key=value config file")
    v.finish(cmd_variances)

    va = _Command(sub, "validate", "reproduce a reference validation run")
    va.opt("--fig", int, required=True, help="6, 7 or 8")
    va.opt("--realizations", int, 10_000, help="Monte Carlo realizations M")
    va.opt("--seed", int, 0, help="RNG seed (default 0)")
    va.opt("--out", str, None, help="directory for curve.csv and report.json")
    va.opt("--config", str, None, help="key=value config file")
    va.opt("--threads", int, _threads_default(), help="worker thread cap")
    va.finish(cmd_validate)

    ck = _Command(sub, "compare-kl", "series generator vs dense baseline")
    ck.opt("--realizations", int, 10_000, help="Monte Carlo realizations M")
    ck.opt("--seed", int, 0, help="RNG seed (default 0)")
    ck.opt("--out", str, None, help="output CSV path")
    ck.opt("--config", str, None, help="key=value config file")
    ck.opt("--threads", int, _threads_default(), help="worker thread cap")
    ck.finish(cmd_compare_kl)

    b = _Command(sub, "bench", "synthesis/baseline timing sweep")
    b.opt("--sizes", str, "64,128,256,512", help="square grid sides for the series sweep")
    b.opt("--kl-sizes", str, "512,1024,2048,4096", help="1D point counts for the baseline sweep")
    b.opt("--per-size", int, 8, help="realizations timed per size")
    b.opt("--seed", int, 0, help="RNG seed (default 0)")
    b.opt("--out", str, None, help="JSON report path")
    b.opt("--config", str, None, help="key=value config file")
    b.finish(cmd_bench)

    return parser


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _write_bin(fh, aperture, m, batches):
    header = BIN_MAGIC + np.array(
        [BIN_VERSION, aperture.nx, aperture.ny, aperture.nz, m], dtype="<u4"
    ).tobytes()
    fh.write(header)
    for block in batches:  # (B, nz, ny, nx) complex
        fh.write(np.ascontiguousarray(block).astype("<c16").tobytes())


def _write_csv(fh, aperture, m, batches, first_real=0):
    fh.write("realization,z_index,y_index,x_index,re,im\n")
    r = first_real
    for block in batches:
        for real in block:
            for iz in range(real.shape[0]):
                for iy in range(real.shape[1]):
                    for ix in range(real.shape[2]):
                        v = real[iz, iy, ix]
                        fh.write(f"{r},{iz},{iy},{ix},{float(v.real)!r},{float(v.imag)!r}\n")
            r += 1


def _field_batches(aperture, factor, seed, m, batch=256):
    z_planes = aperture.z_planes()
    for start in range(0, m, batch):
        reals = range(start, min(start + batch, m))
        planes = generate_batch_planes(aperture, factor, seed, reals, z_planes)
        yield np.stack(planes, axis=1)  # (B, nz, ny, nx)


def cmd_generate(args) -> int:
    aperture = build_aperture(args.aperture, args.spacing)
    factor = load_factor(args.factor, aperture)
    if args.format not in ("csv", "bin"):
        raise ConfigError(f"--format must be 'csv' or 'bin', got {args.format!r}")
    m = args.realizations
    batches = _field_batches(aperture, factor, args.seed, m)
    if args.format == "bin":
        with open(args.out, "wb") as fh:
            _write_bin(fh, aperture, m, batches)
    else:
        with open(args.out, "w", newline="") as fh:
            _write_csv(fh, aperture, m, batches)
    print(f"wrote {m} realization(s) of a {aperture.kind} aperture to {args.out}")
    return 0


def cmd_variances(args) -> int:
    sides = _parse_lengths(args.aperture, "aperture", max_parts=2)
    try:
        if len(sides) == 1:
            table = table_1d(sides[0])
            rows = [(int(l), 0, s) for l, s in zip(table.ls, table.sigma_sq)]
        else:
            if args.method not in ("closed-form", "quadrature"):
                raise ConfigError(f"--method must be 'closed-form' or 'quadrature', got {args.method!r}")
            table = table_2d(sides[0], sides[1], method=args.method)
            rows = [
                (int(l), int(mm), s)
                for l, mm, s in zip(table.ls, table.ms, table.sigma_sq)
            ]
    except ValueError as exc:
        raise ConfigError(str(exc))
    lines = ["l,m,sigma_sq"]
    lines += [f"{l},{mm},{float(s)!r}" for l, mm, s in rows]
    lines.append(f"# total_power={table.total_power()!r}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_validate(args) -> int:
    if args.fig not in (6, 7, 8):
        raise ConfigError(f"--fig must be 6, 7 or 8, got {args.fig}")
    report = run_figure(
        args.fig, m=args.realizations, seed=args.seed,
        out_dir=args.out, threads=args.threads,
    )
    status = "PASS" if report.passed else "FAIL"
    print(
        f"fig {report.fig}: rmse={report.rmse:.5f} max_abs_dev={report.max_abs_dev:.5f} "
        f"M={report.m} seed={report.seed} -> {status}"
    )
    if report.z_consistency_max is not None:
        print(f"fig {report.fig}: z-plane consistency max dev = {report.z_consistency_max:.5f}")
    if not report.passed:
        _fail([{"check": f"fig{report.fig}", **report.to_json_dict()}])
        return 1
    return 0


def cmd_compare_kl(args) -> int:
    result = compare_kl(m=args.realizations, seed=args.seed, threads=args.threads)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write("lag_over_lambda,model_estimate,kl_estimate,closed_form\n")
            for lag, a, b, c in zip(
                result.lags, result.model_estimate, result.kl_estimate, result.closed_form
            ):
                fh.write(f"{float(lag)!r},{float(a)!r},{float(b)!r},{float(c)!r}\n")
    print(
        f"compare-kl: entrywise_max={result.entrywise_max:.5f} "
        f"model rmse={result.model_report.rmse:.5f} kl rmse={result.kl_report.rmse:.5f} "
        f"M={result.m} -> {'PASS' if result.passed else 'FAIL'}"
    )
    if not result.passed:
        _fail([{
            "check": "compare-kl",
            "entrywise_max": result.entrywise_max,
            "model_rmse": result.model_report.rmse,
            "model_max_abs_dev": result.model_report.max_abs_dev,
            "kl_rmse": result.kl_report.rmse,
            "kl_max_abs_dev": result.kl_report.max_abs_dev,
        }])
        return 1
    return 0


def fit_exponent(sizes, times) -> float:
    """Least-squares slope of log(time) against log(size)."""
    x = np.log(np.asarray(sizes, dtype=float))
    y = np.log(np.asarray(times, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def _time_once(fn, repeats=3) -> float:
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_series(sizes, per: int = 8, seed: int = 0) -> tuple[list[int], list[float]]:
    """Per-realization synthesis wall time over square grid sides.

    The variance table is built outside the timed region; the timing covers
    the per-realization pipeline (draws, migration, IFFT).
    """
    points, times = [], []
    for n in sizes:
        aperture = Aperture(lx=n / 2.0, dx=0.5, ly=n / 2.0, dy=0.5)
        table = table_2d(aperture.lx, aperture.ly)

        def run():
            generate_batch_planes(aperture, None, seed, range(per), (0.0,), table)

        points.append(n * n)
        times.append(_time_once(run) / per)
    return points, times


def bench_baseline(sizes, seed: int = 0) -> tuple[list[int], list[float]]:
    """Dense-baseline wall time (matrix build + eigendecomposition + draws)
    over 1D point counts."""
    from .baseline import AcfClosedForm, correlation_matrix, kl_sample

    acf = AcfClosedForm("bessel-2d")
    times = []
    for n in sizes:
        aperture = Aperture(lx=n / 16.0, dx=1.0 / 16.0)

        def run_kl():
            kl_sample(correlation_matrix(aperture, acf), seed, 4)

        times.append(_time_once(run_kl, repeats=1))
    return list(sizes), times


def cmd_bench(args) -> int:
    sizes = [int(s) for s in _parse_lengths(args.sizes, "sizes", max_parts=16)]
    kl_sizes = [int(s) for s in _parse_lengths(args.kl_sizes, "kl-sizes", max_parts=16)]
    if any(n > 4096 for n in kl_sizes):
        raise ConfigError("--kl-sizes are capped at 4096 points (dense baseline)")

    gen_points, gen_times = bench_series(sizes, per=args.per_size, seed=args.seed)
    rows = []
    for n, p, t in zip(sizes, gen_points, gen_times):
        rows.append(("series", p, t))
        print(f"series  {n:4d} x {n:<4d} ({p:7d} pts): {t * 1e3:9.3f} ms/realization")

    _, kl_times = bench_baseline(kl_sizes, seed=args.seed)
    for n, t in zip(kl_sizes, kl_times):
        rows.append(("baseline", n, t))
        print(f"baseline 1D N={n:5d}: {t:9.3f} s (matrix + eigendecomposition + draws)")

    gen_exp = fit_exponent(gen_points, gen_times)
    kl_exp = fit_exponent(kl_sizes, kl_times)
    gen_ok = 0.9 <= gen_exp <= 1.3
    kl_ok = kl_exp > 1.8
    print(f"series synthesis exponent (time vs points): {gen_exp:.3f} (want [0.9, 1.3])")
    print(f"dense baseline exponent  (time vs points): {kl_exp:.3f} (want > 1.8)")

    if args.out:
        with open(args.out, "w") as fh:
            json.dump(
                {
                    "rows": [{"kind": k, "points": p, "seconds": t} for k, p, t in rows],
                    "series_exponent": gen_exp,
                    "baseline_exponent": kl_exp,
                    "pass": gen_ok and kl_ok,
                },
                fh, indent=2, sort_keys=True,
            )
            fh.write("\n")
    if not (gen_ok and kl_ok):
        _fail([{
            "check": "bench",
            "series_exponent": gen_exp,
            "baseline_exponent": kl_exp,
        }])
        return 1
    return 0


def _fail(failures: list[dict]) -> None:
    json.dump({"failures": failures}, sys.stderr, sort_keys=True)
    sys.stderr.write("\n")


def parse_config(argv=None) -> argparse.Namespace:
    """Resolve the run configuration: flags, then config-file values, then
    defaults; unknown config keys and missing required options raise
    ConfigError."""
    parser = build_parser()
    args = parser.parse_args(argv)
    return merge_config(args, args.option_table)


def main(argv=None) -> int:
    try:
        args = parse_config(argv)
        return args.handler(args)
    except ConfigError as exc:
        _fail([{"check": "config", "detail": str(exc)}])
        return 2
    except HoloFadingError as exc:
        _fail([{"check": type(exc).__name__, "detail": str(exc)}])
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
