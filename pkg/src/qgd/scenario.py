"""Scenario files: strict JSON schema for the command-line front end.

A scenario is one JSON object describing modes, initial moments, the
channel mixture, the time grid, the solver and optional diagnostics.
Parsing is strict: unknown keys anywhere are rejected, cross-field rules
(weight normalization, dimension agreement, solver-specific keys) are
checked before any computation, and every violation raises
:class:`~qgd.errors.ScenarioError` with a message naming the offending
field.

The parsed :class:`Scenario` keeps a canonical dictionary echo of itself;
writing that echo back to JSON and re-parsing it yields an identical
scenario, which is what the summary files rely on.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .dynamics import ChannelSet, GaussianBaseline, UnitaryChannel
from .entanglement import squeeze_channel
from .errors import QgdError, ScenarioError
from .symplectic import require_physical, vacuum_covariance

__all__ = [
    "DIAGNOSTIC_NAMES",
    "OracleSpec",
    "Scenario",
    "SolverSpec",
    "load_scenario",
    "parse_scenario",
]

DIAGNOSTIC_NAMES = ("nu", "ppt", "entropy", "coherent_info")

_SOLVER_METHODS = ("ode", "series", "spectral", "mc")


def _require_keys(obj: dict, allowed: tuple, required: tuple, where: str) -> None:
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise ScenarioError(f"unknown key '{unknown[0]}' in {where}")
    missing = sorted(set(required) - set(obj))
    if missing:
        raise ScenarioError(f"missing key '{missing[0]}' in {where}")


def _as_dict(value, where: str) -> dict:
    if not isinstance(value, dict):
        raise ScenarioError(f"{where} must be an object")
    return value


def _as_matrix(value, shape, where: str) -> np.ndarray:
    try:
        m = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{where} is not a numeric matrix: {exc}") from exc
    if m.shape != shape:
        raise ScenarioError(f"{where} has shape {m.shape}, expected {shape}")
    if not np.all(np.isfinite(m)):
        raise ScenarioError(f"{where} contains non-finite entries")
    return m


def _as_positive_int(value, where: str, minimum: int = 1) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
        raise ScenarioError(f"{where} must be an integer >= {minimum}, got {value!r}")
    return value


def _as_finite_float(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{where} must be a number, got {value!r}")
    out = float(value)
    if not math.isfinite(out):
        raise ScenarioError(f"{where} must be finite, got {value!r}")
    return out


@dataclass(frozen=True)
class SolverSpec:
    """Solver selection and its method-specific knobs."""

    method: str
    tol: Optional[float] = None
    trajectories: Optional[int] = None
    seed: Optional[int] = None
    dt: Optional[float] = None
    steps: Optional[int] = None


@dataclass(frozen=True)
class OracleSpec:
    """Settings for the density-matrix oracle run."""

    cutoff: int = 20
    dt: float = 0.05
    tol: float = 1e-8


@dataclass(frozen=True, eq=False)
class Scenario:
    """A fully validated scenario, ready to hand to a solver.

    ``canonical`` is the normalized dictionary form; identical scenarios
    have equal canonical forms regardless of cosmetic differences in the
    source JSON (grid versus explicit time list, omitted defaults).
    """

    modes: int
    cov: np.ndarray
    mean: np.ndarray
    channels: ChannelSet
    baseline: Optional[GaussianBaseline]
    times: Optional[np.ndarray]
    solver: SolverSpec
    diagnostics: Tuple[str, ...]
    oracle: Optional[OracleSpec]
    canonical: dict = field(repr=False)

    def to_dict(self) -> dict:
        """Canonical echo; re-parsing it reproduces this scenario."""
        return json.loads(json.dumps(self.canonical))


def _parse_initial(data, modes: int) -> tuple:
    n = 2 * modes
    if data is None:
        return vacuum_covariance(modes), np.zeros(n)
    obj = _as_dict(data, "initial")
    _require_keys(obj, ("covariance", "mean"), (), "initial")
    cov_src = obj.get("covariance", "vacuum")
    if isinstance(cov_src, str):
        if cov_src != "vacuum":
            raise ScenarioError(
                f"initial.covariance must be 'vacuum' or a matrix, got {cov_src!r}"
            )
        cov = vacuum_covariance(modes)
    else:
        cov = _as_matrix(cov_src, (n, n), "initial.covariance")
        try:
            cov = 0.5 * (cov + cov.T)
            require_physical(cov, tol=1e-8, context="initial.covariance")
        except QgdError as exc:
            raise ScenarioError(str(exc)) from exc
    mean_src = obj.get("mean")
    if mean_src is None:
        mean = np.zeros(n)
    else:
        mean = _as_matrix(mean_src, (n,), "initial.mean")
    return cov, mean


def _parse_channel(entry, index: int, modes: int) -> UnitaryChannel:
    where = f"channels[{index}]"
    obj = _as_dict(entry, where)
    _require_keys(obj, ("gamma", "generator", "kick", "name", "r"), ("gamma",), where)
    forms = [key for key in ("generator", "kick", "name") if key in obj]
    if len(forms) != 1:
        raise ScenarioError(
            f"{where} must give exactly one of generator/kick/name, got {forms}"
        )
    if "r" in obj and forms != ["name"]:
        raise ScenarioError(f"{where}.r is only valid with a named channel")
    gamma = _as_finite_float(obj["gamma"], f"{where}.gamma")
    n = 2 * modes
    try:
        if forms == ["generator"]:
            s = _as_matrix(obj["generator"], (n, n), f"{where}.generator")
            return UnitaryChannel.from_generator(gamma, s)
        if forms == ["kick"]:
            k = _as_matrix(obj["kick"], (n, n), f"{where}.kick")
            return UnitaryChannel(weight=gamma, kick=k)
        name = obj["name"]
        if name != "two_mode_squeeze":
            raise ScenarioError(
                f"{where}.name: unknown channel '{name}' (only 'two_mode_squeeze')"
            )
        if modes != 2:
            raise ScenarioError(
                f"{where}: two_mode_squeeze requires modes = 2, got {modes}"
            )
        if "r" not in obj:
            raise ScenarioError(f"{where}: two_mode_squeeze requires r")
        r = _as_finite_float(obj["r"], f"{where}.r")
        if r <= 0:
            raise ScenarioError(f"{where}.r must be positive, got {r}")
        s, _ = squeeze_channel(r)
        return UnitaryChannel.from_generator(gamma, s)
    except ScenarioError:
        raise
    except QgdError as exc:
        raise ScenarioError(f"{where}: {exc}") from exc


def _parse_baseline(data, modes: int) -> GaussianBaseline:
    obj = _as_dict(data, "baseline")
    _require_keys(
        obj,
        ("hamiltonian", "coupling_real", "coupling_imag"),
        ("hamiltonian",),
        "baseline",
    )
    n = 2 * modes
    g = _as_matrix(obj["hamiltonian"], (n, n), "baseline.hamiltonian")
    coupling = None
    re_src = obj.get("coupling_real")
    im_src = obj.get("coupling_imag")
    if re_src is not None or im_src is not None:
        probe = np.array(re_src if re_src is not None else im_src, dtype=float)
        if probe.ndim != 2 or probe.shape[1] != n:
            raise ScenarioError(
                f"baseline coupling rows must have {n} columns, got {probe.shape}"
            )
        shape = probe.shape
        re_part = (
            _as_matrix(re_src, shape, "baseline.coupling_real")
            if re_src is not None
            else np.zeros(shape)
        )
        im_part = (
            _as_matrix(im_src, shape, "baseline.coupling_imag")
            if im_src is not None
            else np.zeros(shape)
        )
        coupling = re_part + 1j * im_part
    try:
        return GaussianBaseline(hamiltonian=g, coupling=coupling)
    except QgdError as exc:
        raise ScenarioError(f"baseline: {exc}") from exc


def _parse_times(data) -> np.ndarray:
    if isinstance(data, dict):
        _require_keys(data, ("start", "stop", "count"), ("start", "stop", "count"), "times")
        start = _as_finite_float(data["start"], "times.start")
        stop = _as_finite_float(data["stop"], "times.stop")
        count = _as_positive_int(data["count"], "times.count")
        if start < 0 or stop < start:
            raise ScenarioError(
                f"times grid needs 0 <= start <= stop, got [{start}, {stop}]"
            )
        if count == 1 and stop != start:
            raise ScenarioError("times.count = 1 requires start == stop")
        return np.linspace(start, stop, count)
    if isinstance(data, list):
        if not data:
            raise ScenarioError("times list must be nonempty")
        times = _as_matrix(data, (len(data),), "times")
        if times[0] < 0:
            raise ScenarioError(f"times must be nonnegative, got {times[0]}")
        if np.any(np.diff(times) <= 0):
            raise ScenarioError("times list must be strictly increasing")
        return times
    raise ScenarioError("times must be a {start, stop, count} object or a list")


def _parse_solver(data) -> SolverSpec:
    obj = _as_dict(data, "solver")
    _require_keys(
        obj,
        ("method", "tol", "trajectories", "seed", "dt", "steps"),
        ("method",),
        "solver",
    )
    method = obj["method"]
    if method not in _SOLVER_METHODS:
        raise ScenarioError(
            f"solver.method must be one of {_SOLVER_METHODS}, got {method!r}"
        )
    tol = None
    if "tol" in obj:
        if method not in ("ode", "series"):
            raise ScenarioError(f"solver.tol is not used by method '{method}'")
        tol = _as_finite_float(obj["tol"], "solver.tol")
        if tol <= 0:
            raise ScenarioError(f"solver.tol must be positive, got {tol}")
    trajectories = seed = dt = steps = None
    for key in ("trajectories", "seed", "dt", "steps"):
        if key in obj and method != "mc":
            raise ScenarioError(f"solver.{key} is only valid for method 'mc'")
    if method == "mc":
        if "trajectories" not in obj:
            raise ScenarioError("solver.trajectories is required for method 'mc'")
        trajectories = _as_positive_int(obj["trajectories"], "solver.trajectories")
        seed = 0
        if "seed" in obj:
            seed = _as_positive_int(obj["seed"], "solver.seed", minimum=0)
        if ("dt" in obj) != ("steps" in obj):
            raise ScenarioError("solver.dt and solver.steps must appear together")
        if "dt" in obj:
            dt = _as_finite_float(obj["dt"], "solver.dt")
            if not 0 < dt <= 1:
                raise ScenarioError(f"solver.dt must lie in (0, 1], got {dt}")
            steps = _as_positive_int(obj["steps"], "solver.steps")
    return SolverSpec(
        method=method, tol=tol, trajectories=trajectories, seed=seed, dt=dt, steps=steps
    )


def _parse_diagnostics(data, modes: int) -> Tuple[str, ...]:
    if data is None:
        return ()
    if not isinstance(data, list):
        raise ScenarioError("diagnostics must be a list of names")
    for name in data:
        if name not in DIAGNOSTIC_NAMES:
            raise ScenarioError(
                f"unknown diagnostic {name!r}; choose from {DIAGNOSTIC_NAMES}"
            )
    if len(set(data)) != len(data):
        raise ScenarioError("diagnostics contains duplicates")
    chosen = tuple(name for name in DIAGNOSTIC_NAMES if name in data)
    if modes != 2 and any(n in chosen for n in ("ppt", "entropy", "coherent_info")):
        raise ScenarioError(
            "diagnostics ppt/entropy/coherent_info require a two-mode scenario"
        )
    return chosen


def _parse_oracle(data) -> OracleSpec:
    obj = _as_dict(data, "oracle")
    _require_keys(obj, ("cutoff", "dt", "tol"), (), "oracle")
    cutoff = 20
    if "cutoff" in obj:
        cutoff = _as_positive_int(obj["cutoff"], "oracle.cutoff", minimum=4)
    dt = 0.05
    if "dt" in obj:
        dt = _as_finite_float(obj["dt"], "oracle.dt")
        if not 0 < dt <= 0.1:
            raise ScenarioError(f"oracle.dt must lie in (0, 0.1], got {dt}")
    tol = 1e-8
    if "tol" in obj:
        tol = _as_finite_float(obj["tol"], "oracle.tol")
        if tol <= 0:
            raise ScenarioError(f"oracle.tol must be positive, got {tol}")
    return OracleSpec(cutoff=cutoff, dt=dt, tol=tol)


def _canonical_channel(channel: UnitaryChannel) -> dict:
    entry = {"gamma": float(channel.weight)}
    if channel.generator is not None:
        entry["generator"] = channel.generator.tolist()
    else:
        entry["kick"] = channel.kick.tolist()
    return entry


def parse_scenario(data: dict) -> Scenario:
    """Validates a scenario dictionary and builds the typed form.

    Raises:
        ScenarioError: On any schema or cross-field violation; the message
            names the offending field.
    """
    obj = _as_dict(data, "scenario")
    _require_keys(
        obj,
        (
            "modes",
            "initial",
            "channels",
            "baseline",
            "times",
            "solver",
            "diagnostics",
            "oracle",
        ),
        ("modes", "channels", "solver"),
        "scenario",
    )
    modes = _as_positive_int(obj["modes"], "modes")
    cov, mean = _parse_initial(obj.get("initial"), modes)
    raw_channels = obj["channels"]
    if not isinstance(raw_channels, list) or not raw_channels:
        raise ScenarioError("channels must be a nonempty list")
    parsed = [
        _parse_channel(entry, i, modes) for i, entry in enumerate(raw_channels)
    ]
    try:
        channels = ChannelSet(tuple(parsed))
    except QgdError as exc:
        raise ScenarioError(f"channels: {exc}") from exc
    solver = _parse_solver(obj["solver"])

    baseline = None
    if "baseline" in obj:
        if solver.method != "ode":
            raise ScenarioError("baseline dynamics are supported by the ode solver only")
        baseline = _parse_baseline(obj["baseline"], modes)

    collision_mode = solver.dt is not None
    times = None
    if "times" in obj:
        if collision_mode:
            raise ScenarioError(
                "times must be omitted when solver.dt/steps select collision stepping"
            )
        times = _parse_times(obj["times"])
    elif not collision_mode:
        raise ScenarioError("missing key 'times' in scenario")

    diagnostics = _parse_diagnostics(obj.get("diagnostics"), modes)
    oracle = _parse_oracle(obj["oracle"]) if "oracle" in obj else None

    if solver.method == "mc" and np.any(mean != 0):
        raise ScenarioError("the mc sampler requires a zero initial mean")
    if solver.method == "spectral":
        if len(channels.channels) != 1:
            raise ScenarioError("the spectral solver supports exactly one channel")
        if channels.channels[0].generator is None:
            raise ScenarioError(
                "the spectral solver needs the channel given as a generator"
            )

    canonical = {
        "modes": modes,
        "initial": {"covariance": cov.tolist(), "mean": mean.tolist()},
        "channels": [_canonical_channel(c) for c in channels.channels],
        "solver": {
            key: value
            for key, value in (
                ("method", solver.method),
                ("tol", solver.tol),
                ("trajectories", solver.trajectories),
                ("seed", solver.seed),
                ("dt", solver.dt),
                ("steps", solver.steps),
            )
            if value is not None
        },
        "diagnostics": list(diagnostics),
    }
    if baseline is not None:
        canonical["baseline"] = {"hamiltonian": baseline.hamiltonian.tolist()}
        if baseline.coupling is not None:
            canonical["baseline"]["coupling_real"] = baseline.coupling.real.tolist()
            canonical["baseline"]["coupling_imag"] = baseline.coupling.imag.tolist()
    if times is not None:
        canonical["times"] = times.tolist()
    if oracle is not None:
        canonical["oracle"] = {
            "cutoff": oracle.cutoff,
            "dt": oracle.dt,
            "tol": oracle.tol,
        }

    return Scenario(
        modes=modes,
        cov=cov,
        mean=mean,
        channels=channels,
        baseline=baseline,
        times=times,
        solver=solver,
        diagnostics=diagnostics,
        oracle=oracle,
        canonical=canonical,
    )


def load_scenario(path) -> Scenario:
    """Reads and validates a scenario JSON file."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario file {path} is not valid JSON: {exc}") from exc
    return parse_scenario(data)
