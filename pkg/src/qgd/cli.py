"""Command-line interface for scenario runs and cross-checks.

Five subcommands: ``evolve`` (deterministic solvers), ``sample``
(trajectory averaging), ``entangle`` (closed-form two-mode squeeze
diagnostics), ``oracle`` (density-matrix cross-checks), and
``validate`` (schema check only).  Exit codes: 0 success, 2 scenario
or schema problem, 3 numerical failure or a cross-check over its
threshold.  Errors print one line on stderr.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from typing import List, Optional

import numpy as np

from .crosscheck import oracle_report
from .entanglement import closed_form_moments, closed_form_report, squeeze_channel
from .errors import QgdError, ScenarioError
from .reports import write_oracle_json, write_states_csv, write_summary_json
from .runner import ScenarioRun, execute_scenario
from .scenario import Scenario, load_scenario

__all__ = ["build_parser", "main"]

_DETERMINISTIC = ("ode", "series", "spectral")
_ENTANGLE_COLUMNS = ("ppt", "entropy", "coherent_info")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qgd",
        description=(
            "Gaussian dynamics under random symplectic kicks: evolve "
            "moments, sample trajectories, track entanglement, and "
            "cross-check against a truncated density matrix."
        ),
    )
    commands = parser.add_subparsers(dest="command", required=True)
    specs = [
        ("evolve", "integrate the moment equations on a time grid"),
        ("sample", "average Monte Carlo trajectories"),
        ("entangle", "closed-form two-mode squeeze diagnostics"),
        ("oracle", "density-matrix cross-checks of the moment solvers"),
        ("validate", "check a scenario file without running it"),
    ]
    for name, help_text in specs:
        sub = commands.add_parser(name, help=help_text)
        sub.add_argument("--config", required=True, metavar="PATH",
                         help="scenario JSON file")
        sub.add_argument("--quiet", action="store_true",
                         help="suppress normal progress output")
        if name != "validate":
            sub.add_argument("--out", required=True, metavar="DIR",
                             help="output directory (created if missing)")
            sub.add_argument("--seed", type=int, default=None, metavar="N",
                             help="override the scenario seed (sampling only)")
            sub.add_argument("--plot", action="store_true",
                             help="also render PNG figures")
    return parser


def _say(args, message: str) -> None:
    if not args.quiet:
        print(message)


def _write_run(args, scenario: Scenario, run: ScenarioRun, wall: float) -> None:
    os.makedirs(args.out, exist_ok=True)
    states_path = os.path.join(args.out, "states.csv")
    write_states_csv(states_path, run, scenario.modes)
    outputs = ["states.csv"]
    if args.plot:
        from .plots import render_state_figures

        outputs += render_state_figures(run, args.out, scenario.modes)
    write_summary_json(
        os.path.join(args.out, "summary.json"), scenario, run, wall, outputs
    )
    outputs.append("summary.json")
    for name in outputs:
        _say(args, f"wrote {os.path.join(args.out, name)}")


def _entangle_run(scenario: Scenario) -> ScenarioRun:
    """Evaluates the closed-form squeeze diagnostics on the time grid."""
    channels = scenario.channels.channels
    if scenario.modes != 2 or len(channels) != 1:
        raise ScenarioError(
            "entangle needs a two-mode scenario with a single channel"
        )
    generator = channels[0].generator
    r = float(generator[0, 3]) if generator is not None else 0.0
    if (
        generator is None
        or r <= 0.0
        or channels[0].weight != 1.0
        or not np.allclose(generator, squeeze_channel(r)[0], atol=1e-12)
    ):
        raise ScenarioError(
            "entangle needs the unit-weight two_mode_squeeze channel"
        )
    if scenario.times is None:
        raise ScenarioError("entangle needs a time grid")
    if np.any(scenario.mean != 0.0) or not np.allclose(
        scenario.cov, 0.5 * np.eye(4), atol=1e-12
    ):
        raise ScenarioError("entangle starts from the vacuum state")

    times = scenario.times
    moments = [closed_form_moments(r, float(t)) for t in times]
    reports = [closed_form_report(r, float(t)) for t in times]
    # Both symplectic eigenvalues of the mixture covariance equal
    # exp(2 t sinh^2 r) / 2; reuse the exact form instead of refactoring
    # overflow-prone matrix entries.
    nu = np.exp(2.0 * np.sinh(r) ** 2 * times) / 2.0
    wanted = [
        name for name in _ENTANGLE_COLUMNS
        if not scenario.diagnostics or name in scenario.diagnostics
    ]
    diagnostics = {}
    if "ppt" in wanted:
        diagnostics["nu_tilde_min"] = np.array(
            [x.min_ppt_symplectic_eigenvalue for x in reports]
        )
        diagnostics["entangled"] = np.array([int(x.entangled) for x in reports])
    if "entropy" in wanted:
        diagnostics["S_total"] = np.array([x.entropy_total for x in reports])
        diagnostics["S_reduced"] = np.array([x.entropy_reduced for x in reports])
    if "coherent_info" in wanted:
        diagnostics["I_C"] = np.array([x.coherent_information for x in reports])

    return ScenarioRun(
        times=np.asarray(times, dtype=float),
        covs=np.stack([m.cov for m in moments]),
        means=np.stack([m.mean for m in moments]),
        nus=np.column_stack([nu, nu]),
        diagnostics=diagnostics,
        solver_info={"method": "closed_form", "r": r},
    )


def _dispatch(args) -> int:
    scenario_or_none = None
    if args.command == "validate":
        scenario = load_scenario(args.config)
        _say(
            args,
            f"valid: {args.config} ({scenario.modes} modes, "
            f"{len(scenario.channels.channels)} channels, "
            f"solver {scenario.solver.method})",
        )
        return 0

    scenario = load_scenario(args.config)
    if args.command == "evolve":
        if scenario.solver.method not in _DETERMINISTIC:
            raise ScenarioError(
                "scenario requests the mc solver; use the sample subcommand"
            )
        start = time.perf_counter()
        run = execute_scenario(scenario, seed_override=args.seed)
        _write_run(args, scenario, run, time.perf_counter() - start)
        return 0

    if args.command == "sample":
        if scenario.solver.method != "mc":
            raise ScenarioError(
                f"scenario requests the {scenario.solver.method} solver; "
                "use the evolve subcommand"
            )
        start = time.perf_counter()
        run = execute_scenario(scenario, seed_override=args.seed)
        _write_run(args, scenario, run, time.perf_counter() - start)
        return 0

    if args.command == "entangle":
        start = time.perf_counter()
        run = _entangle_run(scenario)
        if args.seed is not None:
            run.warnings.append("seed override ignored by the closed form")
        _write_run(args, scenario, run, time.perf_counter() - start)
        return 0

    # oracle
    payload = oracle_report(scenario)
    if args.seed is not None:
        payload["warnings"] = ["seed override ignored by the oracle run"]
    os.makedirs(args.out, exist_ok=True)
    report_path = os.path.join(args.out, "oracle.json")
    write_oracle_json(report_path, payload)
    _say(args, f"wrote {report_path}")
    if args.plot:
        from .plots import render_oracle_figure

        for name in render_oracle_figure(payload, args.out):
            _say(args, f"wrote {os.path.join(args.out, name)}")
    if payload["failures"]:
        first = payload["failures"][0]
        values = dict(payload["residuals"])
        values["leakage"] = payload["leakage"]
        values["richardson_ratio"] = payload["collision"]["richardson_ratio"]
        shown = values[first]
        shown = f"{shown:.6g}" if isinstance(shown, float) else str(shown)
        print(
            f"qgd: error: ResidualExceeded: {first} = {shown} "
            f"(see {report_path})",
            file=sys.stderr,
        )
        return 3
    _say(args, "pass: all residuals within thresholds")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except ScenarioError as exc:
        message = " ".join(str(exc).split())
        print(f"qgd: error: {type(exc).__name__}: {message}", file=sys.stderr)
        return 2
    except QgdError as exc:
        message = " ".join(str(exc).split())
        print(f"qgd: error: {type(exc).__name__}: {message}", file=sys.stderr)
        return 3
