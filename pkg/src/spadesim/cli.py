"""Config-driven batch runner emitting figure-ready CSV datasets.

Reads one INI config, sweeps a separation grid with the information /
bound / Monte Carlo machinery, and writes one CSV per curve plus a JSON
run manifest.  Every CSV starts with '#' metadata lines documenting its
columns, normalization, and grid, so any plotting tool can consume the
files without guessing conventions.

Normalization conventions
-------------------------
Information curves are reported in units of the asymptotic quantum value
N·Δk² (= N/(4σ²) for a Gaussian PSF, π²N/(3W²) for sinc), so the quantum
separation information is the constant 1.  Cramér-Rao bound curves are in
units of its inverse 1/(N·Δk²), and two-parameter localization bounds in
units of width²/N.  Monte Carlo reports are written unnormalized by
:func:`spadesim.montecarlo.write_report_csv`.

Exit status: 0 on success, 2 for configuration problems (the message names
the offending field), 3 when every point of some curve failed numerically
(isolated failures are flagged in-file and do not change the status).
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import sys
from dataclasses import dataclass, fields
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import __version__
from .fisher import (
    MisalignmentConfig,
    NotGaussianPsf,
    binary_spade_fisher_gaussian,
    binary_spade_fisher_general,
    direct_imaging_fisher,
    hybrid_fisher,
    localization_bound,
    misaligned_binary_fisher,
    misaligned_hg_fisher,
)
from .montecarlo import Scheme, run_error_sweep, write_report_csv
from .psf import (
    GaussianPsf,
    NonConvergence,
    PointSpreadFunction,
    SincPsf,
    load_tabulated,
    overlaps,
)
from .qfi import DegenerateBasis, OnePhotonModel, qfi_closed_form

__all__ = ["ConfigError", "ExperimentConfig", "FIGURES", "run", "main"]

FIGURES = (
    "InfoCurves",
    "CrbCurves",
    "BinaryComparison",
    "SincComparison",
    "MisalignHg",
    "MisalignBinary",
    "HybridBounds",
    "McHg",
    "McBinary",
    "McMisaligned",
)

#: Figures whose physics is Gaussian-specific (HG mode decompositions).
_GAUSSIAN_ONLY = {"MisalignHg", "MisalignBinary", "McHg", "McBinary", "McMisaligned"}

#: Exceptions treated as per-point numeric failures rather than crashes.
_NUMERIC_FAILURES = (
    NonConvergence,
    DegenerateBasis,
    NotGaussianPsf,
    ZeroDivisionError,
    OverflowError,
    FloatingPointError,
)


class ConfigError(ValueError):
    """A configuration field is missing, malformed, or inconsistent."""


# =============================================================================
# Configuration
# =============================================================================


@dataclass
class ExperimentConfig:
    """Validated run description, loadable from an INI file.

    Sections and keys (all optional except [experiment] figure):

    [experiment] figure, seed — figure name from FIGURES or "all"
    [psf]        kind (gaussian|sinc|tabulated), sigma, width, path
    [grid]       min, max, points, scale (linear|log) — information grids
    [budget]     n (photons for information curves), l (comma list for MC)
    [misalignment] xi — comma list of offsets in sigma units
    [montecarlo] trials, min, max, points
    [output]     dir
    """

    figure: str = "all"
    seed: int = 0
    psf_kind: str = "gaussian"
    sigma: float = 1.0
    width: float = 1.0
    table_path: str | None = None
    grid_min: float = 0.0
    grid_max: float = 6.0
    grid_points: int = 121
    grid_scale: str = "linear"
    n_photons: float = 1.0
    budgets: tuple = (20, 100, 500)
    xi_list: tuple = (0.0, 0.1, 0.2, 0.5)
    trials: int = 100_000
    mc_min: float = 0.05
    mc_max: float = 2.0
    mc_points: int = 20
    out_dir: str = "spadesim-results"

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.figure != "all" and self.figure not in FIGURES:
            raise ConfigError(
                f"experiment.figure must be 'all' or one of {', '.join(FIGURES)}; "
                f"got {self.figure!r}"
            )
        if self.psf_kind not in ("gaussian", "sinc", "tabulated"):
            raise ConfigError(f"psf.kind must be gaussian, sinc or tabulated; got {self.psf_kind!r}")
        if self.psf_kind == "tabulated" and not self.table_path:
            raise ConfigError("psf.path is required when psf.kind = tabulated")
        if not self.sigma > 0:
            raise ConfigError(f"psf.sigma must be > 0, got {self.sigma}")
        if not self.width > 0:
            raise ConfigError(f"psf.width must be > 0, got {self.width}")
        if not self.grid_min < self.grid_max:
            raise ConfigError(f"grid.min must be < grid.max, got [{self.grid_min}, {self.grid_max}]")
        if self.grid_points < 2:
            raise ConfigError(f"grid.points must be >= 2, got {self.grid_points}")
        if self.grid_scale not in ("linear", "log"):
            raise ConfigError(f"grid.scale must be linear or log, got {self.grid_scale!r}")
        if self.grid_scale == "log" and self.grid_min <= 0:
            raise ConfigError("grid.min must be > 0 for a log grid")
        if not self.n_photons > 0:
            raise ConfigError(f"budget.n must be > 0, got {self.n_photons}")
        if not self.budgets or any(l < 1 for l in self.budgets):
            raise ConfigError(f"budget.l entries must be >= 1, got {list(self.budgets)}")
        if any(x < 0 for x in self.xi_list):
            raise ConfigError(f"misalignment.xi entries must be >= 0, got {list(self.xi_list)}")
        if self.trials < 1:
            raise ConfigError(f"montecarlo.trials must be >= 1, got {self.trials}")
        if not 0 < self.mc_min < self.mc_max:
            raise ConfigError(
                f"montecarlo grid must satisfy 0 < min < max, got [{self.mc_min}, {self.mc_max}]"
            )
        if self.mc_points < 2:
            raise ConfigError(f"montecarlo.points must be >= 2, got {self.mc_points}")
        if self.seed < 0:
            raise ConfigError(f"experiment.seed must be >= 0, got {self.seed}")

    # -- loading -------------------------------------------------------------

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        except configparser.Error as exc:
            raise ConfigError(f"config file {path} is not valid INI: {exc}") from exc

        known = {
            "experiment": {"figure", "seed"},
            "psf": {"kind", "sigma", "width", "path"},
            "grid": {"min", "max", "points", "scale"},
            "budget": {"n", "l"},
            "misalignment": {"xi"},
            "montecarlo": {"trials", "min", "max", "points"},
            "output": {"dir"},
        }
        for section in parser.sections():
            if section not in known:
                raise ConfigError(f"unknown config section [{section}]")
            for key in parser[section]:
                if key not in known[section]:
                    raise ConfigError(f"unknown config field {section}.{key}")

        def get(section, key, cast, default, descr):
            raw = parser.get(section, key, fallback=None)
            if raw is None:
                return default
            try:
                return cast(raw.strip())
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{section}.{key} must be {descr}, got {raw!r}") from exc

        def int_list(raw):
            return tuple(int(tok.strip()) for tok in raw.split(",") if tok.strip())

        def float_list(raw):
            return tuple(float(tok.strip()) for tok in raw.split(",") if tok.strip())

        kwargs = dict(
            figure=get("experiment", "figure", str, "all", "a figure name"),
            seed=get("experiment", "seed", int, 0, "an integer"),
            psf_kind=get("psf", "kind", str.lower, "gaussian", "a PSF kind"),
            sigma=get("psf", "sigma", float, 1.0, "a number"),
            width=get("psf", "width", float, 1.0, "a number"),
            table_path=get("psf", "path", str, None, "a path"),
            grid_min=get("grid", "min", float, 0.0, "a number"),
            grid_max=get("grid", "max", float, 6.0, "a number"),
            grid_points=get("grid", "points", int, 121, "an integer"),
            grid_scale=get("grid", "scale", str.lower, "linear", "linear or log"),
            n_photons=get("budget", "n", float, 1.0, "a number"),
            budgets=get("budget", "l", int_list, (20, 100, 500), "a comma list of integers"),
            xi_list=get("misalignment", "xi", float_list, (0.0, 0.1, 0.2, 0.5),
                        "a comma list of numbers"),
            trials=get("montecarlo", "trials", int, 100_000, "an integer"),
            mc_min=get("montecarlo", "min", float, 0.05, "a number"),
            mc_max=get("montecarlo", "max", float, 2.0, "a number"),
            mc_points=get("montecarlo", "points", int, 20, "an integer"),
            out_dir=get("output", "dir", str, "spadesim-results", "a path"),
        )
        return cls(**kwargs)

    # -- derived helpers -----------------------------------------------------

    def build_psf(self) -> PointSpreadFunction:
        if self.psf_kind == "gaussian":
            return GaussianPsf(self.sigma)
        if self.psf_kind == "sinc":
            return SincPsf(self.width)
        try:
            return load_tabulated(self.table_path)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"psf.path {self.table_path!r} is not a loadable table: {exc}") from exc

    def theta2_grid(self) -> np.ndarray:
        scale = self.build_psf().width
        if self.grid_scale == "log":
            return scale * np.logspace(
                math.log10(self.grid_min), math.log10(self.grid_max), self.grid_points
            )
        return scale * np.linspace(self.grid_min, self.grid_max, self.grid_points)

    def mc_grid(self) -> np.ndarray:
        return self.sigma * np.linspace(self.mc_min, self.mc_max, self.mc_points)

    def as_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out


# =============================================================================
# Curve evaluation and CSV emission
# =============================================================================


@dataclass
class CurveResult:
    path: Path
    points: int
    failed: int


def _psf_label(cfg: ExperimentConfig) -> str:
    if cfg.psf_kind == "gaussian":
        return f"gaussian(sigma={cfg.sigma!r})"
    if cfg.psf_kind == "sinc":
        return f"sinc(width={cfg.width!r})"
    return f"tabulated({cfg.table_path})"


def _emit_curve(out_dir, figure, curve, grid, fn, cfg, norm_label, norm):
    """Evaluate ``fn`` per grid point, flag failures, write one curve CSV."""
    values, statuses = [], []
    for t2 in grid:
        try:
            values.append(float(fn(float(t2))) / norm)
            statuses.append("ok")
        except _NUMERIC_FAILURES as exc:
            values.append(math.nan)
            statuses.append(f"failed: {type(exc).__name__}")
    path = Path(out_dir) / f"{_snake(figure)}_{curve}.csv"
    lines = [
        f"# figure = {figure}; curve = {curve}; spadesim {__version__}",
        f"# psf = {_psf_label(cfg)}; N = {cfg.n_photons!r}; seed = {cfg.seed}",
        f"# normalization: value in units of {norm_label} = {norm!r}",
        f"# grid: {len(grid)} points, {cfg.grid_scale}, "
        f"[{float(grid[0])!r}, {float(grid[-1])!r}] (theta2, length units)",
        "# 3 columns: theta2, value, status",
        "theta2,value,status",
    ]
    for t2, v, s in zip(grid, values, statuses):
        lines.append(f"{float(t2)!r},{v!r},{s}")
    path.write_text("\n".join(lines) + "\n")
    failed = sum(s != "ok" for s in statuses)
    return CurveResult(path, len(grid), failed)


def _snake(name: str) -> str:
    return "".join("_" + c.lower() if c.isupper() else c for c in name).lstrip("_")


# =============================================================================
# Figure runners
# =============================================================================


def _model(cfg, psf, t2):
    return OnePhotonModel.symmetric(psf, t2, n_photons=cfg.n_photons)


def _info_norm(cfg, psf):
    """N·Δk², the PSF-appropriate information unit."""
    return cfg.n_photons * overlaps(psf, 0.0).dk2


def _direct_cached(cfg, psf):
    """Direct-imaging matrix memoized per θ₂ (several curves share it)."""

    @lru_cache(maxsize=None)
    def direct(t2: float):
        return direct_imaging_fisher(_model(cfg, psf, t2))

    return direct


def _binary_j22(cfg, psf, t2):
    if isinstance(psf, GaussianPsf):
        return binary_spade_fisher_gaussian(_model(cfg, psf, t2)).j22
    return binary_spade_fisher_general(psf, t2, cfg.n_photons).j22


def _fig_info_curves(cfg, out_dir):
    psf = cfg.build_psf()
    grid = cfg.theta2_grid()
    norm = _info_norm(cfg, psf)
    direct = _direct_cached(cfg, psf)
    curves = [
        ("k11", lambda t2: qfi_closed_form(_model(cfg, psf, t2)).j11),
        ("k22", lambda t2: qfi_closed_form(_model(cfg, psf, t2)).j22),
        ("j11_direct", lambda t2: direct(t2).j11),
        ("j22_direct", lambda t2: direct(t2).j22),
    ]
    return [
        _emit_curve(out_dir, "InfoCurves", name, grid, fn, cfg, "N*dk2", norm)
        for name, fn in curves
    ]


def _fig_crb_curves(cfg, out_dir):
    psf = cfg.build_psf()
    grid = cfg.theta2_grid()
    norm = 1.0 / _info_norm(cfg, psf)
    direct = _direct_cached(cfg, psf)

    def crb(j22):
        return 1.0 / j22 if j22 > 0 else math.inf

    curves = [
        ("qcrb22", lambda t2: crb(qfi_closed_form(_model(cfg, psf, t2)).j22)),
        ("crb22_direct", lambda t2: crb(direct(t2).j22)),
    ]
    return [
        _emit_curve(out_dir, "CrbCurves", name, grid, fn, cfg, "1/(N*dk2)", norm)
        for name, fn in curves
    ]


def _fig_binary_comparison(cfg, out_dir, figure="BinaryComparison"):
    psf = cfg.build_psf()
    if figure == "SincComparison" and not isinstance(psf, SincPsf):
        raise ConfigError("psf.kind must be sinc for figure SincComparison")
    grid = cfg.theta2_grid()
    norm = _info_norm(cfg, psf)
    curves = [
        ("k22", lambda t2: qfi_closed_form(_model(cfg, psf, t2)).j22),
        ("j22_binary", lambda t2: _binary_j22(cfg, psf, t2)),
        ("j22_direct", lambda t2: direct_imaging_fisher(_model(cfg, psf, t2)).j22),
    ]
    return [
        _emit_curve(out_dir, figure, name, grid, fn, cfg, "N*dk2", norm)
        for name, fn in curves
    ]


def _fig_sinc_comparison(cfg, out_dir):
    return _fig_binary_comparison(cfg, out_dir, figure="SincComparison")


def _fig_misalign(cfg, out_dir, figure, fisher_fn):
    psf = cfg.build_psf()
    grid = cfg.theta2_grid()
    norm = _info_norm(cfg, psf)
    results = []
    for xi in cfg.xi_list:
        mis = MisalignmentConfig(xi=xi)
        results.append(
            _emit_curve(
                out_dir, figure, f"j22_xi{xi:g}", grid,
                lambda t2, mis=mis: fisher_fn(_model(cfg, psf, t2), mis).j22,
                cfg, "N*dk2", norm,
            )
        )
    return results


def _fig_misalign_hg(cfg, out_dir):
    return _fig_misalign(cfg, out_dir, "MisalignHg", misaligned_hg_fisher)


def _fig_misalign_binary(cfg, out_dir):
    return _fig_misalign(cfg, out_dir, "MisalignBinary", misaligned_binary_fisher)


def _fig_hybrid_bounds(cfg, out_dir):
    psf = cfg.build_psf()
    grid = cfg.theta2_grid()
    norm = psf.width**2 / cfg.n_photons
    curves = [
        ("bound_hybrid", lambda t2: localization_bound(hybrid_fisher(_model(cfg, psf, t2)))),
        ("bound_direct", lambda t2: localization_bound(direct_imaging_fisher(_model(cfg, psf, t2)))),
    ]
    return [
        _emit_curve(out_dir, "HybridBounds", name, grid, fn, cfg, "width^2/N", norm)
        for name, fn in curves
    ]


def _fig_mc(cfg, out_dir, figure, scheme, xi=0.0):
    grid = cfg.mc_grid()
    results = []
    for L in cfg.budgets:
        report = run_error_sweep(
            scheme, L, grid, trials=cfg.trials, xi=xi, seed=cfg.seed, sigma=cfg.sigma
        )
        path = Path(out_dir) / f"{_snake(figure)}_L{L}.csv"
        write_report_csv(report, path, metadata={"figure": figure, "config": cfg.as_dict()})
        results.append(CurveResult(path, len(grid), 0))
    return results


def _fig_mc_hg(cfg, out_dir):
    return _fig_mc(cfg, out_dir, "McHg", Scheme.HG_SPADE)


def _fig_mc_binary(cfg, out_dir):
    return _fig_mc(cfg, out_dir, "McBinary", Scheme.BINARY_SPADE)


def _fig_mc_misaligned(cfg, out_dir):
    nonzero = [x for x in cfg.xi_list if x > 0]
    xi = nonzero[0] if nonzero else 0.1
    return _fig_mc(cfg, out_dir, "McMisaligned", Scheme.MISALIGNED_BINARY, xi=xi)


_RUNNERS = {
    "InfoCurves": _fig_info_curves,
    "CrbCurves": _fig_crb_curves,
    "BinaryComparison": _fig_binary_comparison,
    "SincComparison": _fig_sinc_comparison,
    "MisalignHg": _fig_misalign_hg,
    "MisalignBinary": _fig_misalign_binary,
    "HybridBounds": _fig_hybrid_bounds,
    "McHg": _fig_mc_hg,
    "McBinary": _fig_mc_binary,
    "McMisaligned": _fig_mc_misaligned,
}


# =============================================================================
# Driver
# =============================================================================


def _figure_list(config: ExperimentConfig):
    """Figures to run: 'all' silently skips PSF-incompatible ones."""
    if config.figure != "all":
        return (config.figure,)
    keep = []
    for figure in FIGURES:
        if figure in _GAUSSIAN_ONLY and config.psf_kind != "gaussian":
            continue
        if figure == "SincComparison" and config.psf_kind != "sinc":
            continue
        keep.append(figure)
    return tuple(keep)


def run(config: ExperimentConfig) -> int:
    """Execute the configured figure(s); return the process exit code."""
    figures = _figure_list(config)
    for figure in figures:
        if figure in _GAUSSIAN_ONLY and config.psf_kind != "gaussian":
            raise ConfigError(f"psf.kind must be gaussian for figure {figure}")

    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    results = []
    for figure in figures:
        results.extend(_RUNNERS[figure](config, out_dir))

    manifest = {
        "version": __version__,
        "seed": config.seed,
        "figures": list(figures),
        "config": config.as_dict(),
        "files": [r.path.name for r in results],
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")

    dead_curves = [r for r in results if r.failed == r.points]
    for r in results:
        note = "" if r.failed == 0 else f"  ({r.failed}/{r.points} points failed)"
        print(f"wrote {r.path}{note}")
    print(f"manifest: {out_dir / 'manifest.json'}")
    if dead_curves:
        print(
            f"error: {len(dead_curves)} curve(s) failed at every point: "
            + ", ".join(r.path.name for r in dead_curves),
            file=sys.stderr,
        )
        return 3
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="spadesim",
        description="Batch runner for two-source resolution bounds and simulations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="run the experiment described by an INI config file")
    runp.add_argument("--config", required=True, help="path to the INI config")
    runp.add_argument("--figure", help="override the configured figure (name or 'all')")
    runp.add_argument("--out", help="override the output directory")
    runp.add_argument("--seed", type=int, help="override the RNG seed (unsigned 64-bit)")
    runp.add_argument("--trials", type=int, help="override Monte Carlo trials per grid point")

    args = parser.parse_args(argv)
    try:
        config = ExperimentConfig.from_file(args.config)
        if args.figure is not None:
            config.figure = args.figure
        if args.out is not None:
            config.out_dir = args.out
        if args.seed is not None:
            config.seed = args.seed
        if args.trials is not None:
            config.trials = args.trials
        config.validate()
        return run(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
