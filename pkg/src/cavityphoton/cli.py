"""Command-line front end.

Subcommands::

    drive   design the Rabi frequency for a target photon and write drive.csv
    bounds  print eta_cav, eta_sup and eta_max as JSON
    verify  integrate the system forward under the drive and compare photons
    sweep   tabulate the bounds over a log-spaced parameter axis
    plot    render a drive CSV as a two-panel SVG

Cavity rates are given in MHz and mean 2 pi x value (``--g-mhz 15`` is
g = 2 pi * 15 rad/us). Pass ``--angular`` to give rad/us directly.

Exit codes: 0 success, 1 I/O or runtime failure, 2 infeasible drive or
failed verification, 64 invalid configuration.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import efficiency
from .forward import IntegrationError, verify
from .inverse import CavityParams, DrivePulse, solve
from .plotting import drive_figure
from .shapes import CATALOG_KINDS, PhotonShape, make_catalog_shape, read_samples_csv

EXIT_OK = 0
EXIT_IO = 1
EXIT_INFEASIBLE = 2
EXIT_CONFIG = 64

VERIFY_PASS = 1e-3
DRIVE_COLUMNS = ("t_us", "psi0", "omega_rad_per_us", "rho_ee", "rho_xx", "rho_gg", "loss_gamma", "loss_kappa")
SWEEP_AXES = ("T", "g", "kappa", "gamma")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    shape: str = "sin2"
    T_us: float = 3.14
    csv: Optional[str] = None
    sigma_us: Optional[float] = None
    t0_us: Optional[float] = None
    coeff: Optional[float] = None
    eta: float = 0.95
    g_mhz: float = 15.0
    kappa_mhz: float = 3.0
    gamma_mhz: float = 3.0
    angular: bool = False
    grid_points: int = 4001
    out: Optional[str] = None
    drive_csv: Optional[str] = None
    axis: str = "T"
    start: Optional[float] = None
    stop: Optional[float] = None
    num: int = 25

    def validate(self) -> "RunConfig":
        if self.csv is None and self.shape not in CATALOG_KINDS:
            raise ConfigError(f"unknown shape {self.shape!r}; choose from {', '.join(CATALOG_KINDS)} or give --csv")
        if not (self.eta > 0 and math.isfinite(self.eta)):
            raise ConfigError("eta must be positive")
        if not self.T_us > 0:
            raise ConfigError("T_us must be positive")
        if not (self.g_mhz > 0 and self.kappa_mhz > 0):
            raise ConfigError("g and kappa must be positive")
        if not self.gamma_mhz >= 0:
            raise ConfigError("gamma must be non-negative")
        if self.grid_points < 101 or self.grid_points % 2 == 0:
            raise ConfigError("grid_points must be an odd integer >= 101")
        if self.axis not in SWEEP_AXES:
            raise ConfigError(f"sweep axis must be one of {SWEEP_AXES}")
        if self.num < 1:
            raise ConfigError("sweep needs at least one point")
        if self.csv is None:
            try:
                self.make_shape()
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        return self

    def cavity(self, **override: float) -> CavityParams:
        rates = {"g": self.g_mhz, "kappa": self.kappa_mhz, "gamma": self.gamma_mhz}
        rates.update(override)
        scale = 1.0 if self.angular else 2.0 * math.pi
        return CavityParams(scale * rates["g"], scale * rates["kappa"], scale * rates["gamma"])

    def make_shape(self, T_us: Optional[float] = None) -> PhotonShape:
        if self.csv is not None:
            return read_samples_csv(self.csv)
        extra = {}
        if self.sigma_us is not None:
            extra["sigma"] = self.sigma_us
        if self.t0_us is not None:
            extra["t0"] = self.t0_us
        if self.coeff is not None:
            extra["coeff"] = self.coeff
        return make_catalog_shape(self.shape, self.T_us if T_us is None else T_us, **extra)

    def grid(self, shape: PhotonShape) -> np.ndarray:
        return np.linspace(shape.t_start, shape.t_end, self.grid_points)

    def to_text(self) -> str:
        """Flat ``key = value`` serialisation readable by :func:`parse_config`."""
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            lines.append(f"{f.name} = {_format_value(value)}")
        return "\n".join(lines) + "\n"


_FIELD_TYPES = {
    "shape": str, "T_us": float, "csv": str, "sigma_us": float, "t0_us": float, "coeff": float,
    "eta": float, "g_mhz": float, "kappa_mhz": float, "gamma_mhz": float, "angular": bool,
    "grid_points": int, "out": str, "drive_csv": str, "axis": str, "start": float, "stop": float,
    "num": int,
}


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _convert(key: str, raw: str):
    kind = _FIELD_TYPES[key]
    raw = raw.strip()
    if kind is bool:
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    try:
        return kind(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from None


def parse_config(text: str) -> dict:
    """Parse ``key = value`` lines; blank lines and ``#`` comments are ignored."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELD_TYPES:
            raise ConfigError(f"config line {lineno}: unknown key {key!r}")
        values[key] = _convert(key, raw)
    return values


def config_from_text(text: str) -> RunConfig:
    return RunConfig(**parse_config(text))


# --- output helpers -----------------------------------------------------------


def _fmt(x) -> str:
    return "%.17g" % x


def _umask() -> int:
    mask = os.umask(0)
    os.umask(mask)
    return mask


def write_atomic(path, text: str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.chmod(tmp, 0o666 & ~_umask())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header, columns) -> str:
    rows = [",".join(header)]
    for row in zip(*columns):
        rows.append(",".join(_fmt(v) for v in row))
    return "\n".join(rows) + "\n"


def read_csv_columns(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise ValueError(f"{path}: empty file")
        rows = [r for r in reader if r]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    data = np.array([[float(v) for v in r] for r in rows])
    return {name: data[:, i] for i, name in enumerate(header)}


def _out_path(cfg: RunConfig, default: str) -> Path:
    return Path(cfg.out) if cfg.out else Path(default)


# --- commands -------------------------------------------------------------------


def _bounds(shape, cavity, grid):
    return efficiency.report(shape, cavity, grid)


def cmd_drive(cfg: RunConfig) -> int:
    shape = cfg.make_shape()
    cavity = cfg.cavity()
    grid = cfg.grid(shape)
    traj, drive = solve(shape, cfg.eta, cavity, grid)
    text = csv_text(
        DRIVE_COLUMNS,
        [grid, shape(grid), drive.omega, traj.rho_ee, traj.rho_xx, traj.rho_gg, traj.loss_gamma, traj.loss_kappa],
    )
    out = _out_path(cfg, "drive.csv")
    write_atomic(out, text)
    if drive.depleted_at is None:
        print(f"wrote {out}")
        return EXIT_OK
    rep = _bounds(shape, cavity, grid)
    sup = "n/a (shape does not end smoothly)" if rep.eta_sup is None else f"{rep.eta_sup:.6f}"
    print(
        f"infeasible: rho_ee depleted at t_m = {drive.depleted_at:.6g} us for requested eta = {cfg.eta:g}; "
        f"eta_sup = {sup}, eta_max = {rep.eta_max:.6f} (request eta <= eta_max)",
        file=sys.stderr,
    )
    return EXIT_INFEASIBLE


def cmd_bounds(cfg: RunConfig) -> int:
    shape = cfg.make_shape()
    rep = _bounds(shape, cfg.cavity(), cfg.grid(shape))
    print(json.dumps(rep.as_dict(), indent=2))
    return EXIT_OK


def _load_drive(path, shape: PhotonShape) -> DrivePulse:
    cols = read_csv_columns(path)
    if "t_us" not in cols or "omega_rad_per_us" not in cols:
        raise ValueError(f"{path}: needs columns t_us and omega_rad_per_us")
    grid = cols["t_us"]
    breaks = tuple(int(np.argmin(np.abs(grid - tf))) for tf in shape.phase_flips if grid[0] < tf < grid[-1])
    omega = cols["omega_rad_per_us"]
    depleted = None
    if not np.all(np.isfinite(omega)):
        depleted = float(grid[np.argmin(np.isfinite(omega))])
    return DrivePulse(grid=grid, omega=omega, depleted_at=depleted, breaks=breaks)


def cmd_verify(cfg: RunConfig) -> int:
    shape = cfg.make_shape()
    cavity = cfg.cavity()
    if cfg.drive_csv:
        drive = _load_drive(cfg.drive_csv, shape)
    else:
        _, drive = solve(shape, cfg.eta, cavity, cfg.grid(shape))
    if drive.depleted_at is not None:
        print(f"infeasible: drive depleted at t_m = {drive.depleted_at:.6g} us", file=sys.stderr)
        return EXIT_INFEASIBLE
    result = verify(shape, cfg.eta, cavity, drive)
    grid = result.trajectory.grid
    write_atomic(
        _out_path(cfg, "verify.csv"),
        csv_text(("t_us", "target", "emitted", "abs_error"),
                 [grid, result.target, result.emitted, np.abs(result.emitted - result.target)]),
    )
    summary = {
        "shape_error_l2": result.shape_error_l2,
        "eta_achieved": result.eta_achieved,
        "conservation_residual": result.conservation_residual,
        "zero_area": result.zero_area,
    }
    print(json.dumps(summary, indent=2))
    if result.shape_error_l2 < VERIFY_PASS:
        return EXIT_OK
    worst = int(np.argmax(np.abs(result.emitted - result.target)))
    print(
        f"mismatch: relative L2 error {result.shape_error_l2:.3g} exceeds {VERIFY_PASS:g}; "
        f"largest deviation {abs(result.emitted[worst] - result.target[worst]):.3g} at t = {grid[worst]:.6g} us",
        file=sys.stderr,
    )
    return EXIT_INFEASIBLE


def sweep_rows(cfg: RunConfig):
    """(axis value, report) pairs over the configured log-spaced axis."""
    base = {"T": cfg.T_us, "g": cfg.g_mhz, "kappa": cfg.kappa_mhz, "gamma": cfg.gamma_mhz}[cfg.axis]
    start = base if cfg.start is None else cfg.start
    stop = start if cfg.stop is None else cfg.stop
    if start <= 0 or stop <= 0:
        raise ConfigError("sweep bounds must be positive (log-spaced axis)")
    values = np.geomspace(start, stop, cfg.num) if cfg.num > 1 else np.array([start])
    rows = []
    for v in values:
        v = float(v)
        if cfg.axis == "T":
            shape, cavity = cfg.make_shape(T_us=v), cfg.cavity()
        else:
            shape, cavity = cfg.make_shape(), cfg.cavity(**{cfg.axis: v})
        rows.append((v, _bounds(shape, cavity, cfg.grid(shape))))
    return rows


def cmd_sweep(cfg: RunConfig) -> int:
    if cfg.csv is not None and cfg.axis == "T":
        raise ConfigError("a T sweep needs a catalog shape")
    rows = sweep_rows(cfg)
    header = (f"{cfg.axis}", "eta_sup", "eta_cav", "eta_max", "two_c", "t_m_us")
    cols = [[], [], [], [], [], []]
    for v, rep in rows:
        d = rep.as_dict()
        for col, val in zip(cols, (v, d["eta_sup"], d["eta_cav"], d["eta_max"], d["two_c"], d["t_m_us"])):
            col.append(math.nan if val is None else val)
    out = _out_path(cfg, "sweep.csv")
    write_atomic(out, csv_text(header, cols))
    print(f"wrote {out}")
    return EXIT_OK


def cmd_plot(csv_path, out_path) -> int:
    cols = read_csv_columns(csv_path)
    missing = {"t_us", "psi0", "omega_rad_per_us"} - set(cols)
    if missing:
        raise ValueError(f"{csv_path}: missing columns {sorted(missing)}")
    flips = drive_figure(cols["t_us"], cols["psi0"], cols["omega_rad_per_us"], out_path)
    print(f"wrote {out_path} ({flips} phase flip{'s' if flips != 1 else ''})")
    return EXIT_OK


# --- argument parsing -----------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat 'key = value' file with run settings")
    p.add_argument("--shape", choices=CATALOG_KINDS)
    p.add_argument("--csv", help="sampled shape, two columns t_us,psi0")
    p.add_argument("--T-us", dest="T_us", type=float, help="pulse duration in us")
    p.add_argument("--sigma-us", dest="sigma_us", type=float, help="gaussian width")
    p.add_argument("--t0-us", dest="t0_us", type=float, help="gaussian centre")
    p.add_argument("--coeff", type=float, help="tophat sin^7 coefficient")
    p.add_argument("--eta", type=float, help="requested efficiency (default 0.95)")
    p.add_argument("--g-mhz", dest="g_mhz", type=float, help="coupling, 2 pi x MHz")
    p.add_argument("--kappa-mhz", dest="kappa_mhz", type=float, help="cavity field decay, 2 pi x MHz")
    p.add_argument("--gamma-mhz", dest="gamma_mhz", type=float, help="atomic polarisation decay, 2 pi x MHz")
    p.add_argument("--angular", action="store_const", const=True, default=None,
                   help="rates are given in rad/us rather than 2 pi x MHz")
    p.add_argument("--grid-points", dest="grid_points", type=int, help="odd, >= 101 (default 4001)")
    p.add_argument("--out", help="output file")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cavityphoton", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, text in (
        ("drive", "design the drive pulse"),
        ("bounds", "efficiency bounds as JSON"),
        ("verify", "forward-integrate and compare"),
        ("sweep", "bounds over a parameter axis"),
    ):
        p = sub.add_parser(name, help=text)
        _add_run_options(p)
        if name == "verify":
            p.add_argument("--drive-csv", dest="drive_csv", help="verify this drive file instead of designing one")
        if name == "sweep":
            p.add_argument("--axis", choices=SWEEP_AXES)
            p.add_argument("--start", type=float)
            p.add_argument("--stop", type=float)
            p.add_argument("--num", type=int)
    p = sub.add_parser("plot", help="render a drive CSV as SVG")
    p.add_argument("csv_path")
    p.add_argument("--out", default="drive.svg")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = {}
    if getattr(args, "config", None):
        values.update(parse_config(Path(args.config).read_text()))
    for name in _FIELD_TYPES:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    if values.get("csv") is not None:
        values.setdefault("shape", "sampled")
    return RunConfig(**values).validate()


COMMANDS = {"drive": cmd_drive, "bounds": cmd_bounds, "verify": cmd_verify, "sweep": cmd_sweep}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "plot":
            return cmd_plot(args.csv_path, args.out)
        cfg = config_from_args(args)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, IntegrationError, efficiency.EfficiencyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
