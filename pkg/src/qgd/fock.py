"""Truncated Fock-space density-matrix oracle.

Everything here works on explicit density matrices over a truncated
number basis, with no Gaussian shortcuts: the master equation with
unitary jump operators is integrated step by step, moments are read off
by tracing quadratures against the state, and the controlled-unitary and
collision-step identities are checked at operator level.  The point is
independence: this module shares no solver machinery with the symplectic
code, so agreement between the two is evidence, not tautology.

Truncation discipline: squeezing pumps population up the number ladder
exponentially fast, so every moment extraction is gated on leakage (the
population in the top tenth of levels of any mode).  Results with leakage
above 1e-6 are refused rather than returned silently wrong.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .dynamics import GaussianMoments
from .errors import (
    DimensionError,
    DomainError,
    IntegrationError,
    LeakageError,
    NormalizationError,
    PhysicalityError,
    QgdError,
)
from .symplectic import symplectic_form

__all__ = [
    "DIMENSION_CAP",
    "LEAKAGE_THRESHOLD",
    "CollisionCheck",
    "DensityState",
    "FockSystem",
    "build_fock_system",
    "channel_unitary",
    "collision_step_check",
    "controlled_unitary_check",
    "displacement_unitary",
    "extract_moments",
    "gkls_integrate",
    "mode_leakage",
    "quadratic_hamiltonian",
    "spectral_solution",
    "vacuum_state",
]

# Dense-matrix memory guard: total Hilbert dimension allowed per call.
DIMENSION_CAP = 4096

# Above this top-level population the truncation has visibly corrupted the
# state and moment extraction is refused.
LEAKAGE_THRESHOLD = 1e-6

_HERM_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class FockSystem:
    """Truncated multimode Fock space with quadrature operators.

    Attributes:
        n_modes: Number of modes N.
        cutoff: Fock levels kept per mode.
        quadratures: 2N Hermitian matrices in interleaved order
            (x_1, p_1, x_2, p_2, ...), each of size cutoff**N.
        dimension: Total Hilbert-space dimension cutoff**N.
    """

    n_modes: int
    cutoff: int
    quadratures: Tuple[np.ndarray, ...]
    dimension: int


@dataclass(frozen=True, eq=False)
class DensityState:
    """Density matrix plus its truncation-leakage figure.

    Attributes:
        matrix: Hermitian, unit-trace, positive-semidefinite complex matrix.
        leakage: Largest population found in the top tenth of any mode's
            levels; the truncation health indicator.
    """

    matrix: np.ndarray
    leakage: float

    def __post_init__(self) -> None:
        m = self.matrix
        scale = max(1.0, float(np.max(np.abs(m))))
        if np.max(np.abs(m - m.conj().T)) > _HERM_TOL * scale:
            raise QgdError("density matrix is not Hermitian")
        trace = float(np.trace(m).real)
        if abs(trace - 1.0) > 1e-9:
            raise NormalizationError(f"density matrix trace {trace} is not 1")
        floor = float(np.min(np.linalg.eigvalsh(m)))
        if floor < -1e-10:
            raise PhysicalityError(
                f"density matrix has negative eigenvalue {floor}"
            )


def _single_mode_ladder(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1.0, cutoff)), k=1)


def _embed(op: np.ndarray, mode: int, n_modes: int, cutoff: int) -> np.ndarray:
    full = np.eye(1)
    for m in range(n_modes):
        factor = op if m == mode else np.eye(cutoff)
        full = np.kron(full, factor)
    return full


def build_fock_system(n_modes: int, cutoff: int) -> FockSystem:
    """Builds truncated quadratures x_k = (a + a')/sqrt(2), p_k likewise.

    The vacuum then has variance 1/2 in every quadrature.

    Raises:
        DomainError: If ``cutoff < 4`` or ``n_modes < 1``.
        DimensionError: If ``cutoff**n_modes`` exceeds the memory cap.
    """
    if n_modes < 1:
        raise DomainError(f"need at least one mode, got {n_modes}")
    if cutoff < 4:
        raise DomainError(f"cutoff must be at least 4, got {cutoff}")
    dimension = cutoff**n_modes
    if dimension > DIMENSION_CAP:
        raise DimensionError(
            f"dimension {dimension} exceeds the cap {DIMENSION_CAP}"
        )
    a = _single_mode_ladder(cutoff)
    x1 = (a + a.T) / math.sqrt(2.0)
    p1 = 1j * (a.T - a) / math.sqrt(2.0)
    quadratures = []
    for mode in range(n_modes):
        for op in (x1, p1.astype(complex)):
            big = _embed(op, mode, n_modes, cutoff).astype(complex)
            quadratures.append(0.5 * (big + big.conj().T))
    return FockSystem(
        n_modes=n_modes,
        cutoff=cutoff,
        quadratures=tuple(quadratures),
        dimension=dimension,
    )


def mode_leakage(system: FockSystem, matrix: np.ndarray) -> float:
    """Largest population in the top tenth of levels of any single mode."""
    pops = np.diag(matrix).real
    grid = pops.reshape((system.cutoff,) * system.n_modes)
    top = max(1, math.ceil(0.1 * system.cutoff))
    worst = 0.0
    for mode in range(system.n_modes):
        tail = np.take(grid, range(system.cutoff - top, system.cutoff), axis=mode)
        worst = max(worst, float(np.sum(tail)))
    return worst


def _as_state(system: FockSystem, matrix: np.ndarray) -> DensityState:
    return DensityState(matrix=matrix, leakage=mode_leakage(system, matrix))


def vacuum_state(system: FockSystem) -> DensityState:
    """The multimode ground state |0...0><0...0|."""
    m = np.zeros((system.dimension, system.dimension), dtype=complex)
    m[0, 0] = 1.0
    return _as_state(system, m)


def _check_hermitian(h: np.ndarray, dimension: int, name: str) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    if h.shape != (dimension, dimension):
        raise DimensionError(
            f"{name} has shape {h.shape}, expected {(dimension, dimension)}"
        )
    scale = max(1.0, float(np.max(np.abs(h))))
    if np.max(np.abs(h - h.conj().T)) > _HERM_TOL * scale:
        raise QgdError(f"{name} is not Hermitian")
    return 0.5 * (h + h.conj().T)


def quadratic_hamiltonian(system: FockSystem, s: np.ndarray) -> np.ndarray:
    """The operator h = (1/2) sum_kl S_kl q_k q_l for symmetric S.

    This is the generator whose unitary exp(-i h) kicks the quadrature
    vector by the symplectic matrix exp(J S).
    """
    s = np.asarray(s, dtype=float)
    n = 2 * system.n_modes
    if s.shape != (n, n):
        raise DimensionError(f"generator has shape {s.shape}, expected {(n, n)}")
    if np.max(np.abs(s - s.T)) > 1e-9 * max(1.0, float(np.max(np.abs(s)))):
        raise QgdError("quadratic generator matrix must be symmetric")
    h = np.zeros((system.dimension, system.dimension), dtype=complex)
    for k in range(n):
        row = system.quadratures[k]
        for l in range(n):
            if s[k, l] != 0.0:
                h += 0.5 * s[k, l] * (row @ system.quadratures[l])
    return 0.5 * (h + h.conj().T)


def channel_unitary(system: FockSystem, h: np.ndarray) -> np.ndarray:
    """exp(-i h) by exact eigendecomposition, unitary to machine precision."""
    h = _check_hermitian(h, system.dimension, "generator")
    vals, vecs = np.linalg.eigh(h)
    return (vecs * np.exp(-1j * vals)) @ vecs.conj().T


def displacement_unitary(system: FockSystem, mean: np.ndarray) -> np.ndarray:
    """Weyl displacement: conjugation shifts the quadrature vector by ``mean``."""
    mean = np.asarray(mean, dtype=float)
    n = 2 * system.n_modes
    if mean.shape != (n,):
        raise DimensionError(f"mean has shape {mean.shape}, expected {(n,)}")
    j = symplectic_form(system.n_modes)
    weights = -(j @ mean)
    g = np.zeros((system.dimension, system.dimension), dtype=complex)
    for k in range(n):
        g += weights[k] * system.quadratures[k]
    return channel_unitary(system, g)


def _check_weights(gammas: Sequence[float]) -> np.ndarray:
    g = np.asarray(gammas, dtype=float)
    if g.ndim != 1 or g.size == 0:
        raise DimensionError("channel weights must be a nonempty vector")
    if np.any(g < 0):
        raise DomainError(f"channel weights must be nonnegative, got {g}")
    if abs(math.fsum(g.tolist()) - 1.0) > 1e-12:
        raise NormalizationError(
            f"channel weights must sum to 1, got {math.fsum(g.tolist())}"
        )
    return g


def _state_matrix(rho) -> np.ndarray:
    if isinstance(rho, DensityState):
        return np.asarray(rho.matrix, dtype=complex)
    return np.asarray(rho, dtype=complex)


def _integrate_linear(rhs, y0: np.ndarray, t: float, tol: float) -> np.ndarray:
    sol = solve_ivp(
        rhs,
        (0.0, t),
        y0,
        method="RK45",
        rtol=tol,
        atol=tol * 1e-4,
        dense_output=False,
    )
    if sol.status != 0:
        raise IntegrationError(f"density integrator failed: {sol.message}")
    return sol.y[:, -1]


def gkls_integrate(
    system: FockSystem,
    h_list: Sequence[np.ndarray],
    gammas: Sequence[float],
    rho0,
    t: float,
    tol: float = 1e-8,
    check_leakage: bool = True,
) -> DensityState:
    """Integrates d(rho)/dt = sum_j gamma_j (U_j rho U_j' - rho).

    The unitaries are exp(-i h_j) for the given Hermitian generators.
    Adaptive Runge-Kutta at relative tolerance ``tol``.  Trace and
    Hermiticity drift are checked before the result is accepted.

    When the generators are all diagonal in the number basis, or there is
    a single channel, the equation is integrated entrywise in the
    eigenbasis; this changes nothing about the numerics being a step-by-
    step integration, it only removes matrix products from the hot loop.

    Pass ``check_leakage=False`` when the space is not a truncation of
    anything, e.g. exact finite-dimensional identity checks where every
    level is legitimately occupied.

    Raises:
        LeakageError: If the final state's leakage exceeds 1e-6 (with
            ``check_leakage`` on); the truncated result is untrustworthy,
            raise the cutoff or shrink ``t``.
    """
    if t < 0:
        raise DomainError(f"time must be nonnegative, got {t}")
    g = _check_weights(gammas)
    if len(h_list) != g.size:
        raise DimensionError(
            f"{len(h_list)} generators but {g.size} weights"
        )
    hs = [_check_hermitian(h, system.dimension, "generator") for h in h_list]
    rho = _state_matrix(rho0)
    if rho.shape != (system.dimension, system.dimension):
        raise DimensionError(
            f"state has shape {rho.shape}, expected square of {system.dimension}"
        )
    if t == 0:
        return _as_state(system, rho)

    d = system.dimension
    scales = [max(1.0, float(np.max(np.abs(h)))) for h in hs]
    all_diagonal = all(
        np.max(np.abs(h - np.diag(np.diag(h)))) <= 1e-12 * s
        for h, s in zip(hs, scales)
    )

    if all_diagonal:
        factor = np.zeros((d, d), dtype=complex)
        for h, gamma in zip(hs, g):
            lam = np.diag(h).real
            delta = lam[:, None] - lam[None, :]
            factor += gamma * (np.exp(-1j * delta) - 1.0)
        rho_t = _integrate_linear(
            lambda _, y: factor.ravel() * y, rho.ravel(), t, tol
        ).reshape(d, d)
    elif len(hs) == 1:
        lam, basis = np.linalg.eigh(hs[0])
        delta = lam[:, None] - lam[None, :]
        factor = np.exp(-1j * delta) - 1.0
        tilde = basis.conj().T @ rho @ basis
        tilde_t = _integrate_linear(
            lambda _, y: factor.ravel() * y, tilde.ravel(), t, tol
        ).reshape(d, d)
        rho_t = basis @ tilde_t @ basis.conj().T
    else:
        unitaries = [channel_unitary(system, h) for h in hs]

        def rhs(_, y):
            m = y.reshape(d, d)
            out = np.zeros_like(m)
            for u, gamma in zip(unitaries, g):
                out += gamma * (u @ m @ u.conj().T - m)
            return out.ravel()

        rho_t = _integrate_linear(rhs, rho.ravel(), t, tol).reshape(d, d)

    herm_drift = float(np.max(np.abs(rho_t - rho_t.conj().T)))
    if herm_drift > 1e-9:
        raise IntegrationError(
            f"integrator broke Hermiticity by {herm_drift}"
        )
    trace_drift = abs(float(np.trace(rho_t).real) - 1.0)
    if trace_drift > 1e-9:
        raise IntegrationError(f"integrator broke the trace by {trace_drift}")
    state = _as_state(system, 0.5 * (rho_t + rho_t.conj().T))
    if check_leakage and state.leakage > LEAKAGE_THRESHOLD:
        raise LeakageError(
            f"leakage {state.leakage:.3e} exceeds {LEAKAGE_THRESHOLD}; "
            "the truncated result is untrustworthy - raise the cutoff or "
            "shrink the evolution time"
        )
    return state


def spectral_solution(system: FockSystem, h: np.ndarray, rho0, t: float) -> DensityState:
    """Closed-form single-channel solution in the generator eigenbasis.

    In the eigenbasis of ``h`` each matrix element evolves independently:

        rho_kk'(t) = exp([cos(h_k - h_k') - 1] t) exp(-i sin(h_k - h_k') t)
                     rho_kk'(0)

    so diagonal entries are constant and off-diagonal ones spiral inward.
    """
    if t < 0:
        raise DomainError(f"time must be nonnegative, got {t}")
    h = _check_hermitian(h, system.dimension, "generator")
    rho = _state_matrix(rho0)
    lam, basis = np.linalg.eigh(h)
    delta = lam[:, None] - lam[None, :]
    with np.errstate(under="ignore"):
        factor = np.exp((np.cos(delta) - 1.0) * t) * np.exp(-1j * np.sin(delta) * t)
    tilde = basis.conj().T @ rho @ basis
    out = basis @ (factor * tilde) @ basis.conj().T
    return _as_state(system, 0.5 * (out + out.conj().T))


def extract_moments(
    system: FockSystem, rho, check_leakage: bool = True
) -> GaussianMoments:
    """First and second quadrature moments of a truncated state.

    Returns the mean ``xi_k = tr(rho q_k)`` and the symmetrized covariance
    ``V_kl = tr(rho {q_k, q_l})/2 - xi_k xi_l``.

    Raises:
        LeakageError: If the state's leakage exceeds 1e-6 (with
            ``check_leakage`` on).
    """
    matrix = _state_matrix(rho)
    leak = (
        rho.leakage
        if isinstance(rho, DensityState)
        else mode_leakage(system, matrix)
    )
    if check_leakage and leak > LEAKAGE_THRESHOLD:
        raise LeakageError(
            f"leakage {leak:.3e} exceeds {LEAKAGE_THRESHOLD}; moments would "
            "be corrupted by truncation"
        )
    n = 2 * system.n_modes
    products = [matrix @ q for q in system.quadratures]
    mean = np.array([float(np.trace(p).real) for p in products])
    second = np.empty((n, n))
    for k in range(n):
        for l in range(k, n):
            # tr(rho q_k q_l) with rho q_k already formed
            val = np.einsum("ij,ji->", products[k], system.quadratures[l])
            second[k, l] = second[l, k] = float(val.real)
    cov = second - np.outer(mean, mean)
    return GaussianMoments(cov=0.5 * (cov + cov.T), mean=mean)


def controlled_unitary_check(
    h_list: Sequence[np.ndarray],
    ancilla_dim: int,
    system: FockSystem,
) -> float:
    """Residual of the blocked form of a controlled unitary.

    Exponentiates ``-i sum_j h_j (x) |j><j|`` directly and compares with
    the block form ``1 (x) |0><0| + sum_j exp(-i h_j) (x) |j><j|``.
    Returns the max-abs entry difference.
    """
    m = len(h_list)
    if m < 1:
        raise DomainError("need at least one controlled generator")
    if ancilla_dim != m + 1:
        raise DimensionError(
            f"ancilla dimension {ancilla_dim} does not fit {m} generators"
        )
    d = system.dimension
    total = d * ancilla_dim
    if total > DIMENSION_CAP:
        raise DimensionError(
            f"joint dimension {total} exceeds the cap {DIMENSION_CAP}"
        )
    hs = [_check_hermitian(h, d, "generator") for h in h_list]
    generator = np.zeros((total, total), dtype=complex)
    blocked = np.zeros((total, total), dtype=complex)
    projector = np.zeros((ancilla_dim, ancilla_dim))
    projector[0, 0] = 1.0
    blocked += np.kron(np.eye(d), projector)
    for j, h in enumerate(hs, start=1):
        projector = np.zeros((ancilla_dim, ancilla_dim))
        projector[j, j] = 1.0
        generator += np.kron(h, projector)
        blocked += np.kron(channel_unitary(system, h), projector)
    direct = expm(-1j * generator)
    return float(np.max(np.abs(direct - blocked)))


class CollisionCheck(NamedTuple):
    """Residuals of one collision step against its two reference maps.

    ``residual`` compares the traced-out collision step with the exact
    semigroup exp(dt L); it shrinks as O(dt^2).  ``first_order_residual``
    compares with the first-order map rho + dt sum_j gamma_j
    (U_j rho U_j' - rho), which the partial trace reproduces exactly, so
    it sits at round-off for every dt.
    """

    residual: float
    first_order_residual: float


def collision_step_check(
    h_list: Sequence[np.ndarray],
    gammas: Sequence[float],
    dt: float,
    rho0,
    system: FockSystem,
) -> CollisionCheck:
    """One ancilla collision, traced out and compared with its targets.

    The ancilla (dimension M+1) starts in |0>.  A Householder completion
    of the column (sqrt(1-dt), sqrt(dt gamma_1), ..., sqrt(dt gamma_M))
    spreads its amplitude, the controlled unitary applies U_j on the
    system against ancilla level j, and the ancilla is traced out.

    Raises:
        DomainError: If ``dt`` lies outside [0, 0.1].
        DimensionError: If the joint or superoperator dimension exceeds
            the memory cap.
    """
    if not 0.0 <= dt <= 0.1:
        raise DomainError(f"collision step dt must be in [0, 0.1], got {dt}")
    g = _check_weights(gammas)
    m = len(h_list)
    if m != g.size:
        raise DimensionError(f"{m} generators but {g.size} weights")
    d = system.dimension
    anc = m + 1
    if d * anc > DIMENSION_CAP or d * d > DIMENSION_CAP:
        raise DimensionError(
            f"collision check needs dimensions {d * anc} and {d * d} within "
            f"the cap {DIMENSION_CAP}"
        )
    hs = [_check_hermitian(h, d, "generator") for h in h_list]
    unitaries = [channel_unitary(system, h) for h in hs]
    rho = _state_matrix(rho0)

    column = np.concatenate(([math.sqrt(1.0 - dt)], np.sqrt(dt * g)))
    v = column - np.eye(anc)[:, 0]
    norm_sq = float(v @ v)
    if norm_sq < 1e-30:
        o = np.eye(anc)
    else:
        o = np.eye(anc) - 2.0 * np.outer(v, v) / norm_sq

    controlled = np.zeros((d * anc, d * anc), dtype=complex)
    projector = np.zeros((anc, anc))
    projector[0, 0] = 1.0
    controlled += np.kron(np.eye(d), projector)
    for j, u in enumerate(unitaries, start=1):
        projector = np.zeros((anc, anc))
        projector[j, j] = 1.0
        controlled += np.kron(u, projector)
    w = controlled @ np.kron(np.eye(d), o)

    eta = np.zeros((anc, anc))
    eta[0, 0] = 1.0
    joint = w @ np.kron(rho, eta) @ w.conj().T
    stepped = np.einsum("iaja->ij", joint.reshape(d, anc, d, anc))

    first_order = rho.copy()
    for u, gamma in zip(unitaries, g):
        first_order += dt * gamma * (u @ rho @ u.conj().T - rho)
    first_order_residual = float(np.max(np.abs(stepped - first_order)))

    # Row-major vec: U rho U' maps to kron(U, conj(U)) acting on rho.ravel().
    superop = -np.eye(d * d, dtype=complex)
    for u, gamma in zip(unitaries, g):
        superop += gamma * np.kron(u, u.conj())
    semigroup = expm(dt * superop) @ rho.ravel()
    residual = float(np.max(np.abs(stepped - semigroup.reshape(d, d))))
    return CollisionCheck(residual=residual, first_order_residual=first_order_residual)
