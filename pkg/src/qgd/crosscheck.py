"""Cross-checks the moment solvers against a truncated density matrix.

Four residuals are computed for a scenario: quadrature moments from the
master equation against the jump expansion, the single-channel spectral
law against direct integration, the controlled-unitary dilation
identity, and the one-step collision map against the semigroup (with a
Richardson ratio confirming the second-order step error).  Identity and
collision checks run at a reduced cutoff because they compare operators
on the doubled or ancilla-extended space; the statements they verify do
not depend on the cutoff.
"""

from __future__ import annotations

import numpy as np

from .dynamics import series_evolve
from .errors import ScenarioError
from .fock import (
    DensityState,
    build_fock_system,
    collision_step_check,
    controlled_unitary_check,
    displacement_unitary,
    extract_moments,
    gkls_integrate,
    mode_leakage,
    quadratic_hamiltonian,
    spectral_solution,
    vacuum_state,
)
from .scenario import OracleSpec, Scenario

__all__ = ["oracle_report", "RATIO_BOUNDS"]

SPECTRAL_THRESHOLD = 1e-8
CONTROLLED_UNITARY_THRESHOLD = 1e-10
PASSIVE_MOMENT_THRESHOLD = 1e-4
ACTIVE_MOMENT_THRESHOLD = 1e-3
LEAKAGE_THRESHOLD = 1e-6
RATIO_BOUNDS = (3.0, 5.0)
_EXACT_FLOOR = 1e-13
_PASSIVE_GAIN_TOL = 1e-9


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ScenarioError(message)


def _is_passive(scenario: Scenario) -> bool:
    for channel in scenario.channels.channels:
        gain = np.linalg.norm(channel.kick, ord=2)
        if gain > 1.0 + _PASSIVE_GAIN_TOL:
            return False
    return True


def _initial_state(scenario: Scenario, system) -> DensityState:
    if np.any(scenario.mean != 0.0):
        shift = displacement_unitary(system, scenario.mean)
        matrix = shift @ vacuum_state(system).matrix @ shift.conj().T
        return DensityState(matrix=matrix, leakage=mode_leakage(system, matrix))
    return vacuum_state(system)


def _reduced_cutoffs(n_modes: int) -> tuple:
    # The collision check exponentiates on the doubled space, so its
    # dimension squared must stay small; two modes get a tighter cutoff.
    unitary = 8
    collision = 8 if n_modes == 1 else 6
    return unitary, collision


def oracle_report(scenario: Scenario) -> dict:
    """Runs all four cross-checks and returns the report payload.

    The scenario must start from the vacuum covariance (an optional
    displacement is applied exactly), carry a time grid, and specify
    every channel through its generator.

    Raises:
        ScenarioError: the scenario shape does not fit the oracle path.
        LeakageError: truncated evolution pushed weight into the top
            Fock levels, so the cutoff is too small for this scenario.
    """
    n = 2 * scenario.modes
    _require(
        np.allclose(scenario.cov, 0.5 * np.eye(n), atol=1e-12),
        "oracle runs need the vacuum initial covariance",
    )
    _require(scenario.times is not None, "oracle runs need a time grid")
    _require(
        all(c.generator is not None for c in scenario.channels.channels),
        "oracle runs need generator-specified channels",
    )
    settings = scenario.oracle if scenario.oracle is not None else OracleSpec()
    t_final = float(scenario.times[-1])

    system = build_fock_system(scenario.modes, settings.cutoff)
    h_list = [
        quadratic_hamiltonian(system, c.generator)
        for c in scenario.channels.channels
    ]
    gammas = [c.weight for c in scenario.channels.channels]
    rho0 = _initial_state(scenario, system)

    evolved = gkls_integrate(
        system, h_list, gammas, rho0, t_final, tol=settings.tol
    )
    truncated = extract_moments(system, evolved)
    reference = series_evolve(
        scenario.channels, scenario.cov, scenario.mean, t_final, tol=1e-12
    )
    moment_residual = max(
        float(np.max(np.abs(truncated.cov - reference.cov))),
        float(np.max(np.abs(truncated.mean - reference.mean))),
    )

    direct = gkls_integrate(
        system, [h_list[0]], [1.0], rho0, t_final,
        tol=min(settings.tol, 1e-10), check_leakage=False,
    )
    law = spectral_solution(system, h_list[0], rho0, t_final)
    delta = np.linalg.eigvalsh(direct.matrix - law.matrix)
    spectral_residual = float(np.sum(np.abs(delta)))

    unitary_cutoff, collision_cutoff = _reduced_cutoffs(scenario.modes)
    small = build_fock_system(scenario.modes, unitary_cutoff)
    h_small = [quadratic_hamiltonian(small, c.generator)
               for c in scenario.channels.channels]
    unitary_residual = controlled_unitary_check(
        h_small, len(h_small) + 1, small
    )

    tiny = build_fock_system(scenario.modes, collision_cutoff)
    h_tiny = [quadratic_hamiltonian(tiny, c.generator)
              for c in scenario.channels.channels]
    rho_tiny = vacuum_state(tiny)
    full_step = collision_step_check(h_tiny, gammas, settings.dt, rho_tiny, tiny)
    half_step = collision_step_check(
        h_tiny, gammas, settings.dt / 2.0, rho_tiny, tiny
    )
    if half_step.residual > _EXACT_FLOOR:
        ratio = full_step.residual / half_step.residual
        ratio_ok = RATIO_BOUNDS[0] <= ratio <= RATIO_BOUNDS[1]
    else:
        # Commuting channels can make the step essentially exact; there
        # is no second-order error left to halve.  None keeps the JSON
        # strict (NaN is not valid JSON).
        ratio = None
        ratio_ok = full_step.residual <= _EXACT_FLOOR

    residuals = {
        "moments_vs_symplectic": moment_residual,
        "spectral_vs_integrator": spectral_residual,
        "controlled_unitary": unitary_residual,
        "collision_step": full_step.residual,
    }
    thresholds = {
        "moments_vs_symplectic": (
            PASSIVE_MOMENT_THRESHOLD if _is_passive(scenario)
            else ACTIVE_MOMENT_THRESHOLD
        ),
        "spectral_vs_integrator": SPECTRAL_THRESHOLD,
        "controlled_unitary": CONTROLLED_UNITARY_THRESHOLD,
        "collision_step": settings.dt ** 2,
        "leakage": LEAKAGE_THRESHOLD,
    }
    failures = [
        name for name in residuals if residuals[name] > thresholds[name]
    ]
    if evolved.leakage > thresholds["leakage"]:
        failures.append("leakage")
    if not ratio_ok:
        failures.append("richardson_ratio")

    return {
        "scenario": scenario.to_dict(),
        "settings": {
            "cutoff": settings.cutoff,
            "dt": settings.dt,
            "tol": settings.tol,
            "time": t_final,
            "unitary_cutoff": unitary_cutoff,
            "collision_cutoff": collision_cutoff,
        },
        "residuals": residuals,
        "collision": {
            "half_step_residual": half_step.residual,
            "richardson_ratio": ratio,
            "ratio_bounds": list(RATIO_BOUNDS),
            "first_order_residual": full_step.first_order_residual,
        },
        "leakage": evolved.leakage,
        "thresholds": thresholds,
        "failures": failures,
        "passed": not failures,
    }
