"""Executes a validated scenario and assembles the tabular results.

This is the glue between the scenario schema and the solver library: it
dispatches to the requested solver, evaluates the per-time diagnostics,
and returns plain arrays ready for serialization.  Warnings emitted by
the solvers are captured as strings so the summary file can carry them.
"""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .dynamics import (
    TERM_CAP_DEFAULT,
    EvolutionProblem,
    GaussianMoments,
    ode_evolve,
    series_evolve,
    spectral_evolve,
)
from .entanglement import covariance_report
from .errors import ScenarioError
from .sampler import TrajectoryConfig, discrete_collision, ensemble_mean, trajectory_stream
from .scenario import Scenario
from .symplectic import symplectic_eigenvalues

__all__ = ["ScenarioRun", "execute_scenario", "series_term_cap"]

_DEFAULT_TOL = 1e-10


@dataclass
class ScenarioRun:
    """Arrays produced by one scenario execution, one row per time."""

    times: np.ndarray
    covs: np.ndarray
    means: np.ndarray
    nus: np.ndarray
    diagnostics: Dict[str, np.ndarray]
    solver_info: dict
    warnings: List[str] = field(default_factory=list)
    jump_count_histogram: Optional[Dict[int, int]] = None
    n_samples: Optional[int] = None
    n_divergent: Optional[int] = None
    max_standard_error: Optional[float] = None


def series_term_cap() -> float:
    """Series term budget, overridable through QGD_MAX_TERMS."""
    raw = os.environ.get("QGD_MAX_TERMS")
    if raw is None:
        return TERM_CAP_DEFAULT
    try:
        cap = int(raw)
    except ValueError as exc:
        raise ScenarioError(
            f"QGD_MAX_TERMS must be an integer, got {raw!r}"
        ) from exc
    if cap < 1:
        raise ScenarioError(f"QGD_MAX_TERMS must be positive, got {cap}")
    return float(cap)


def _deterministic_rows(scenario: Scenario) -> tuple:
    solver = scenario.solver
    times = scenario.times
    if solver.method == "ode":
        problem = EvolutionProblem(
            channels=scenario.channels,
            initial=GaussianMoments(cov=scenario.cov, mean=scenario.mean),
            times=times,
            baseline=scenario.baseline,
        )
        rtol = solver.tol if solver.tol is not None else _DEFAULT_TOL
        moments = ode_evolve(problem, rtol=rtol)
        info = {"method": "ode", "rtol": rtol}
    elif solver.method == "series":
        tol = solver.tol if solver.tol is not None else _DEFAULT_TOL
        cap = series_term_cap()
        moments = [
            series_evolve(
                scenario.channels,
                scenario.cov,
                scenario.mean,
                float(t),
                tol=tol,
                max_terms=cap,
            )
            for t in times
        ]
        info = {"method": "series", "tol": tol, "max_terms": cap}
    else:
        generator = scenario.channels.channels[0].generator
        moments = [
            spectral_evolve(generator, scenario.cov, float(t), xi0=scenario.mean)
            for t in times
        ]
        info = {"method": "spectral"}
    covs = np.stack([m.cov for m in moments])
    means = np.stack([m.mean for m in moments])
    return times, covs, means, info


def _sampled_rows(scenario: Scenario, seed_override: Optional[int]) -> tuple:
    solver = scenario.solver
    seed = seed_override if seed_override is not None else solver.seed
    config = TrajectoryConfig(n_trajectories=solver.trajectories, seed=seed)
    extras: dict = {}
    if solver.dt is not None:
        # Collision stepping: rows at k dt, each trajectory replayed from its
        # own stream so every prefix of the chain is consistent.
        steps = solver.steps
        times = solver.dt * np.arange(steps + 1)
        dim = scenario.cov.shape[0]
        covs = np.empty((steps + 1, dim, dim))
        for k in range(steps + 1):
            total = np.zeros((dim, dim))
            for index in range(config.n_trajectories):
                stream = trajectory_stream(seed, index)
                total += discrete_collision(
                    scenario.channels, scenario.cov, solver.dt, k, stream
                )
            covs[k] = total / config.n_trajectories
        info = {
            "method": "mc",
            "variant": "collision",
            "trajectories": config.n_trajectories,
            "seed": seed,
            "dt": solver.dt,
            "steps": steps,
        }
    else:
        times = scenario.times
        dim = scenario.cov.shape[0]
        covs = np.empty((len(times), dim, dim))
        max_se = 0.0
        stats = None
        for row, t in enumerate(times):
            stats = ensemble_mean(scenario.channels, scenario.cov, float(t), config)
            covs[row] = stats.mean_covariance
            max_se = max(max_se, float(np.max(stats.standard_error)))
        extras = {
            "jump_count_histogram": stats.jump_count_histogram,
            "n_samples": stats.n_samples,
            "n_divergent": stats.n_divergent,
            "max_standard_error": max_se,
        }
        info = {
            "method": "mc",
            "variant": "jump",
            "trajectories": config.n_trajectories,
            "seed": seed,
        }
    means = np.zeros((len(times), scenario.cov.shape[0]))
    return times, covs, means, info, extras


def execute_scenario(
    scenario: Scenario, seed_override: Optional[int] = None
) -> ScenarioRun:
    """Runs the scenario's solver and assembles rows plus diagnostics.

    ``seed_override`` replaces the scenario seed for the mc method; for
    deterministic solvers it is recorded as ignored.
    """
    captured: List[str] = []
    extras: dict = {}
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if scenario.solver.method == "mc":
            times, covs, means, info, extras = _sampled_rows(scenario, seed_override)
        else:
            times, covs, means, info = _deterministic_rows(scenario)
            if seed_override is not None:
                captured.append("seed override ignored by a deterministic solver")
    captured.extend(f"{w.category.__name__}: {w.message}" for w in caught)

    nus = np.stack([symplectic_eigenvalues(v) for v in covs])
    diagnostics: Dict[str, np.ndarray] = {}
    wanted = set(scenario.diagnostics)
    if wanted & {"ppt", "entropy", "coherent_info"}:
        reports = [covariance_report(v, float(t)) for v, t in zip(covs, times)]
        if "ppt" in wanted:
            diagnostics["nu_tilde_min"] = np.array(
                [r.min_ppt_symplectic_eigenvalue for r in reports]
            )
            diagnostics["entangled"] = np.array(
                [int(r.entangled) for r in reports]
            )
        if "entropy" in wanted:
            diagnostics["S_total"] = np.array([r.entropy_total for r in reports])
            diagnostics["S_reduced"] = np.array([r.entropy_reduced for r in reports])
        if "coherent_info" in wanted:
            diagnostics["I_C"] = np.array(
                [r.coherent_information for r in reports]
            )

    return ScenarioRun(
        times=np.asarray(times, dtype=float),
        covs=covs,
        means=means,
        nus=nus,
        diagnostics=diagnostics,
        solver_info=info,
        warnings=captured,
        **extras,
    )
