"""
Command-line entry point.

    tat-lab <subcommand> [SCENARIO] [--config PATH] [--out DIR]
            [--resolution N] [--seed N] [--quiet] [--strict]

Each subcommand writes TAWF arrays and a report.csv into the output
directory. Exit codes: 0 ok, 2 configuration error or invalid
parameter, 3 numerical failure, 4 failed condition check under --strict.
"""

import argparse
import logging
import math
import sys
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import pandas as pd

from .boundary_ops import CutoffProfile, back_project
from .config import ScenarioConfig, load_config
from .convexity import (
    best_bent_families,
    check_background,
    check_ellipticity,
    check_observation_time,
    check_stability_condition,
    verify_foliation,
)
from .domain import Domain
from .errors import ConfigError, TatLabError
from .foliations import make_family
from .inversion import (
    SPEED_HEADROOM,
    SpeedRecoverySetup,
    neumann_consistency_experiment,
    recover_source,
    recover_speed,
    stability_probe,
    support_mask,
)
from .io import save_conditions, save_reconstruction, save_table, write_array
from .metrics import convergence_order, refinement_ratios, relative_l2_error
from .reports import ConditionReport
from .scenarios import get_scenario, list_scenarios
from .speed import radial_closed_geodesics
from .wave import SourceTerm, solve_ivp, solve_source

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_CONDITION = 4


# -- condition checks -----------------------------------------------------------


def observation_domain(cfg: ScenarioConfig) -> Domain:
    """Ω with τ ≡ T unless the config sets τ explicitly."""
    domain = cfg.domain()
    if cfg.tau_table is None and not math.isfinite(cfg.tau_const):
        domain = domain.with_tau(cfg.T)
    return domain


def support_points(cfg: ScenarioConfig, domain: Domain, per_radius: int = 6) -> np.ndarray:
    h = cfg.support_radius / per_radius
    pts = domain.interior_grid(h)
    return pts[np.linalg.norm(pts, axis=-1) <= cfg.support_radius]


def _closed_geodesic_report(cfg: ScenarioConfig) -> Optional[ConditionReport]:
    speed = cfg.speed()
    if speed.kind != "radial" or cfg.foliation_kind.lower() != "spheres":
        return None
    if any(abs(p) > 0 for p in cfg.foliation_params[:2]):
        return None
    circles = radial_closed_geodesics(speed, cfg.domain().radius)
    if not circles:
        return None
    outermost = max(c["radius"] for c in circles)
    report = ConditionReport("closed_geodesic", cfg.s_min - outermost, samples=len(circles))
    report.extras["outermost_radius"] = outermost
    report.extras["stable"] = sum(c["stable"] for c in circles)
    return report


def run_check_conditions(cfg: ScenarioConfig) -> list[ConditionReport]:
    """
    Evaluate the hypotheses behind a scenario.

    Background speed, the foliation, the observation time, stability on K
    (full observation only), Δf on K for speed twins, and the closed-geodesic
    limit of concentric foliations.
    """
    c = cfg.speed()
    domain = observation_domain(cfg)
    family = cfg.family()
    reports = [check_background(c, domain), verify_foliation(c, domain, family)]

    if cfg.foliation_kind.lower() == "bent-geodesic":
        mirrored = make_family(
            "bent-geodesic",
            [*cfg.foliation_params[:2], -cfg.foliation_params[2]],
            cfg.s_min, cfg.s_max, cfg.s_steps, domain,
        )
        reports.append(best_bent_families(c, domain, [family, mirrored], mode=cfg.observation))
    else:
        reports.append(check_observation_time(c, domain, family, mode=cfg.observation))

    K = support_points(cfg, domain)
    if domain.gamma_is_full:
        reports.append(check_stability_condition(c, domain, K, cfg.T))
    if cfg.truth_kind is not None:
        reports.append(check_ellipticity(cfg.source(), K))
    closed = _closed_geodesic_report(cfg)
    if closed is not None:
        reports.append(closed)
    for r in reports:
        logger.info("%s: %s (margin %.4g)", r.condition_id, "pass" if r.passed else "FAIL", r.margin)
    return reports


# -- subcommands ---------------------------------------------------------------


def _forward(cfg: ScenarioConfig, out: Path) -> pd.DataFrame:
    c, domain = cfg.speed(), cfg.domain()
    grid = cfg.grid(c_field=c)
    traj, trace = solve_ivp(c, cfg.source(), cfg.T, grid, domain)
    write_array(out / "initial.tawf", traj.extras["initial"])
    write_array(out / "final.tawf", traj.final.u)
    write_array(out / "trace.tawf", trace.values)
    row = {
        "n": grid.n, "h": grid.h, "dt": grid.dt, "steps": grid.steps_for(cfg.T),
        "energy_drift": traj.energy_drift(), "trace_norm": trace.norm(),
    }
    return save_table([row], out)


def _measure(cfg: ScenarioConfig, out: Path) -> pd.DataFrame:
    c, domain = cfg.speed(), cfg.domain()
    grid = cfg.grid(c_field=c)
    F = np.where(support_mask(grid, domain, cfg.support_radius), grid.sample(cfg.source()), 0.0)
    _, dirichlet, neumann = solve_source(c, SourceTerm(F), cfg.T, grid, domain)
    write_array(out / "source.tawf", F)
    write_array(out / "dirichlet.tawf", dirichlet.values)
    write_array(out / "neumann.tawf", neumann.values)
    row = {"n": grid.n, "dt": grid.dt, "dirichlet_norm": dirichlet.norm(), "neumann_norm": neumann.norm()}
    return save_table([row], out)


def _neumann(cfg: ScenarioConfig, out: Path) -> pd.DataFrame:
    levels = (cfg.n, 2 * cfg.n, 4 * cfg.n)
    df = neumann_consistency_experiment(cfg.speed(), cfg.domain(), cfg.source(), cfg.T, levels)
    df["ratio"] = np.concatenate([[np.nan], refinement_ratios(df["error"].to_numpy())])
    if np.all(df["error"] > 0):
        logger.info("neumann consistency: observed order %.2f", convergence_order(df["h"], df["error"]))
    return save_table(df, out)


def _backproject(cfg: ScenarioConfig, out: Path) -> pd.DataFrame:
    c, domain = cfg.speed(), cfg.domain()
    grid = cfg.grid(c_field=c)
    traj, trace = solve_ivp(c, cfg.source(), cfg.T, grid, domain, track_energy=False)
    image = back_project(c, domain, CutoffProfile(cfg.T).apply(trace), cfg.T, grid)
    truth = traj.extras["initial"]
    write_array(out / "backprojection.tawf", image)
    inside = domain.contains(grid.points())
    row = {"n": grid.n, "rel_error": relative_l2_error(image, truth, inside)}
    return save_table([row], out)


def _recover_source(cfg: ScenarioConfig, out: Path) -> pd.DataFrame:
    c, domain = cfg.speed(), cfg.domain()
    grid = cfg.grid(c_field=c)
    K = support_mask(grid, domain, cfg.support_radius)
    truth = np.where(K, grid.sample(cfg.source()), 0.0)
    _, data, _ = solve_source(c, SourceTerm(truth), cfg.T, grid, domain)
    F, report = recover_source(c, domain, lambda t: 1.0, data, K, cfg.iters, grid, truth=truth)
    write_array(out / "source_estimate.tawf", F)
    write_array(out / "source_truth.tawf", truth)
    save_conditions(report.condition_reports, out)
    return save_reconstruction(report, out)


def _recover_speed(cfg: ScenarioConfig, out: Path) -> pd.DataFrame:
    truth = cfg.truth()
    if truth is None:
        raise ConfigError("recover-speed needs a [truth] section")
    c0, domain = cfg.speed(), cfg.domain()
    grid = cfg.grid(c_field=truth)
    grid = grid.with_speed_bound(SPEED_HEADROOM * grid.c_max, cfg.T)
    f = cfg.source()
    _, data = solve_ivp(truth, f, cfg.T, grid, domain, track_energy=False)
    setup = SpeedRecoverySetup(f, c0, data, support_mask(grid, domain, cfg.support_radius), domain, grid, cfg.floor)
    estimate, report = recover_speed(setup, cfg.outer_iters, cfg.iters, truth=truth)
    write_array(out / "c2_estimate.tawf", report.extras["c2"])
    write_array(out / "c2_truth.tawf", grid.sample(truth) ** 2)
    return save_reconstruction(report, out)


def trapped_circle(cfg: ScenarioConfig) -> Optional[float]:
    """Radius of the outermost stable closed geodesic inside K for radial speeds."""
    speed = cfg.speed()
    if speed.kind != "radial":
        return None
    stable = [c["radius"] for c in radial_closed_geodesics(speed, cfg.support_radius) if c["stable"]]
    return max(stable) if stable else None


def _stability_probe(cfg: ScenarioConfig, out: Path) -> pd.DataFrame:
    c, domain = cfg.speed(), cfg.domain()
    grid = cfg.grid(c_field=c)
    focus = trapped_circle(cfg)
    if focus is not None:
        logger.info("stability-probe: packets on the closed geodesic r = %.3f", focus)
    rows = []
    for modes in cfg.band_limits:
        result = stability_probe(
            c, domain, lambda t: 1.0, ((0.0, 0.0), cfg.support_radius), cfg.T,
            cfg.ensemble, cfg.seed, int(modes), grid, focus=focus,
        )
        write_array(out / f"ratios_{int(modes)}.tawf", result.ratios)
        rows.append(result.summary())
    return save_table(pd.DataFrame(rows), out)


def _check_conditions(cfg: ScenarioConfig, out: Path) -> pd.DataFrame:
    reports = run_check_conditions(cfg)
    df = save_conditions(reports, out)
    save_table(df, out)
    return df


SUBCOMMANDS: dict[str, Callable[[ScenarioConfig, Path], pd.DataFrame]] = {
    "forward": _forward,
    "measure": _measure,
    "neumann": _neumann,
    "backproject": _backproject,
    "recover-source": _recover_source,
    "recover-speed": _recover_speed,
    "stability-probe": _stability_probe,
    "check-conditions": _check_conditions,
}


def run_scenario(cfg: ScenarioConfig, subcommand: str, out_dir: Optional[Path] = None) -> pd.DataFrame:
    """
    Run one subcommand on a scenario and write its artifacts.

    Raises:
        ValueError: For unknown subcommands
    """
    key = subcommand.lower()
    if key not in SUBCOMMANDS:
        raise ValueError(f"Unknown subcommand: {subcommand}. Use one of {list(SUBCOMMANDS)}")
    out = Path(out_dir or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    logger.info("running %s on %s (n=%d, T=%g)", key, cfg.name, cfg.n, cfg.T)
    return SUBCOMMANDS[key](cfg, out)


# -- argument parsing ---------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("scenario", nargs="?", help=f"Shipped scenario: {', '.join(list_scenarios())}")
    p.add_argument("--config", type=Path, help="Configuration file (instead of a scenario)")
    p.add_argument("--out", type=Path, help="Output directory")
    p.add_argument("--resolution", type=int, help="Override grid cells per axis")
    p.add_argument("--seed", type=int, help="Override the probe seed")
    p.add_argument("--quiet", action="store_true", help="Only log warnings")
    p.add_argument("--strict", action="store_true", help="Exit 4 when a condition check fails")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tat-lab", description="Thermoacoustic tomography numerical lab"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        _add_common(sub.add_parser(name, help=f"Run {name}"))
    run = sub.add_parser("run", help="Run a scenario; check conditions unless a task flag is given")
    _add_common(run)
    tasks = run.add_mutually_exclusive_group()
    for name in SUBCOMMANDS:
        tasks.add_argument(f"--{name}", dest="task", action="store_const", const=name)
    sub.add_parser("list", help="List shipped scenarios")
    return parser


def resolve_config(args: argparse.Namespace) -> ScenarioConfig:
    if args.config is not None:
        cfg = load_config(args.config)
    elif args.scenario:
        cfg = get_scenario(args.scenario)
    else:
        raise ConfigError("give a scenario name or --config PATH")
    if args.resolution is not None:
        cfg = cfg.with_resolution(args.resolution)
    if args.seed is not None:
        cfg = cfg.with_overrides(seed=args.seed)
    return cfg


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        for name in list_scenarios():
            print(name)
        return EXIT_OK

    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    task = getattr(args, "task", None) or ("check-conditions" if args.command == "run" else args.command)
    try:
        cfg = resolve_config(args)
        df = run_scenario(cfg, task, args.out)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"Configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"Invalid parameter: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TatLabError as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    if not args.quiet:
        print(df.to_string(index=False))
    if task == "check-conditions" and args.strict and not bool(df["passed"].all()):
        failed = ", ".join(df.loc[~df["passed"].astype(bool), "id"])
        print(f"Condition checks failed: {failed}", file=sys.stderr)
        return EXIT_CONDITION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
