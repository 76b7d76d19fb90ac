"""Evolution of Gaussian moments under mixtures of unitary symplectic kicks.

The dissipator is a convex mixture of unitary channels with symplectic kicks
``K_j`` and weights ``gamma_j`` summing to one.  With zero mean the covariance
obeys

    dV/dt = sum_j gamma_j (K_j V K_j^T - V),

and a nonzero mean contributes the inhomogeneity
``F_j = (K_j - 1) xi xi^T (K_j - 1)^T`` per channel while itself following
``dxi/dt = sum_j gamma_j (K_j - 1) xi``.  Three solvers are provided:

* :func:`ode_evolve` -- adaptive Runge-Kutta on the moment equations,
  optionally with a quadratic (drift + diffusion) baseline;
* :func:`series_evolve` -- the Poisson jump expansion
  ``V(t) = sum_k p_k(t) Phi^k(V0)`` with ``p_k = e^{-t} t^k / k!`` and
  ``Phi(V) = sum_j gamma_j K_j V K_j^T``, truncated by an explicit tail bound;
* :func:`spectral_evolve` -- single channel only: elementwise evolution of
  ``J V`` in the eigenbasis of ``J S`` when that matrix is normal.

Nonzero means propagate through the second-moment matrix ``M = V + xi xi^T``,
which satisfies the homogeneous equation, so all solvers agree with the
inhomogeneous form above.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.integrate
import scipy.special
import scipy.stats

from .errors import (
    DegenerateSpectrumWarning,
    DimensionError,
    DivergenceError,
    DomainError,
    IntegrationError,
    NormalizationError,
    NotNormalError,
    NotPassiveError,
    NotSymplecticError,
    QgdError,
    ResonanceError,
    TermBudgetError,
)
from .symplectic import (
    _is_normal,
    check_symmetric,
    is_symplectic,
    require_physical,
    symplectic_exp,
    symplectic_form,
)

#: Covariance entries beyond this bound abort a solver with a divergence
#: diagnostic (divergent scenarios are legal, silent overflow is not).
OVERFLOW_BOUND = 1e12

#: Default cap on the estimated multi-channel sequence count M**kstar.
TERM_CAP_DEFAULT = 10_000_000


@dataclass(frozen=True)
class GaussianMoments:
    """First and second moments of a Gaussian state.

    Attributes:
        cov: covariance matrix, shape (2N, 2N), symmetric.
        mean: quadrature mean vector, shape (2N,).
    """

    cov: np.ndarray
    mean: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self):
        cov = check_symmetric(self.cov, "covariance")
        mean = self.mean
        if mean is None:
            mean = np.zeros(cov.shape[0])
        mean = np.asarray(mean, dtype=float)
        if mean.shape != (cov.shape[0],):
            raise DimensionError(
                f"mean has shape {mean.shape}, expected ({cov.shape[0]},)"
            )
        if not (np.all(np.isfinite(cov)) and np.all(np.isfinite(mean))):
            raise DomainError("moments must be finite")
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "mean", mean)

    @property
    def n_modes(self) -> int:
        return self.cov.shape[0] // 2


def vacuum_moments(n_modes: int) -> GaussianMoments:
    """Vacuum state: covariance I/2, zero mean."""
    return GaussianMoments(0.5 * np.eye(2 * n_modes))


@dataclass(frozen=True)
class UnitaryChannel:
    """One unitary kick channel: weight ``gamma`` and symplectic kick ``K``.

    When the generator ``S`` is known, pass it too; consistency
    ``K = exp(J S)`` is validated on construction.
    """

    weight: float
    kick: np.ndarray
    generator: np.ndarray | None = None

    def __post_init__(self):
        if not (0.0 < self.weight <= 1.0):
            raise NormalizationError(f"channel weight {self.weight} outside (0, 1]")
        kick = np.asarray(self.kick, dtype=float)
        if not is_symplectic(kick, tol=1e-9):
            raise NotSymplecticError("channel kick fails K J K^T = J at 1e-9")
        object.__setattr__(self, "kick", kick)
        if self.generator is not None:
            gen = check_symmetric(self.generator, "generator")
            ref = symplectic_exp(gen)
            scale = 1.0 + np.max(np.abs(kick))
            if np.max(np.abs(ref - kick)) > 1e-9 * scale:
                raise NotSymplecticError(
                    "channel generator and kick disagree: exp(JS) != K at 1e-9"
                )
            object.__setattr__(self, "generator", gen)

    @classmethod
    def from_generator(cls, weight: float, s: np.ndarray) -> "UnitaryChannel":
        s = check_symmetric(s, "S")
        return cls(weight=weight, kick=symplectic_exp(s), generator=s)


@dataclass(frozen=True)
class ChannelSet:
    """A normalized mixture of unitary channels (weights sum to one)."""

    channels: tuple[UnitaryChannel, ...]

    def __post_init__(self):
        chans = tuple(self.channels)
        if not chans:
            raise NormalizationError("channel set must be nonempty")
        dims = {c.kick.shape[0] for c in chans}
        if len(dims) != 1:
            raise DimensionError(f"channels act on mixed dimensions {sorted(dims)}")
        total = math.fsum(c.weight for c in chans)
        if abs(total - 1.0) > 1e-12:
            raise NormalizationError(
                f"channel weights sum to {total!r}, expected 1 within 1e-12"
            )
        object.__setattr__(self, "channels", chans)

    @property
    def dim(self) -> int:
        return self.channels[0].kick.shape[0]

    @property
    def n_modes(self) -> int:
        return self.dim // 2

    @property
    def weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.channels])

    @property
    def kicks(self) -> list[np.ndarray]:
        return [c.kick for c in self.channels]

    @classmethod
    def from_generator(cls, s: np.ndarray) -> "ChannelSet":
        """Single channel with unit weight and generator ``S``."""
        return cls((UnitaryChannel.from_generator(1.0, s),))


@dataclass(frozen=True)
class GaussianBaseline:
    """Optional quadratic Gaussian background dynamics.

    ``hamiltonian`` is the symmetric matrix G of the quadratic Hamiltonian and
    ``coupling`` stacks linear Lindblad rows (complex, shape (m, 2N)).  Drift
    and diffusion are derived on demand and never stored, so they cannot go
    stale:

        A = J (G + Im C^dag C),    D = J Re(C^dag C) J^T.
    """

    hamiltonian: np.ndarray
    coupling: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self):
        g = check_symmetric(self.hamiltonian, "baseline hamiltonian")
        c = self.coupling
        if c is None:
            c = np.zeros((0, g.shape[0]), dtype=complex)
        c = np.asarray(c, dtype=complex)
        if c.ndim != 2 or c.shape[1] != g.shape[0]:
            raise DimensionError(
                f"coupling shape {c.shape} incompatible with dimension {g.shape[0]}"
            )
        object.__setattr__(self, "hamiltonian", g)
        object.__setattr__(self, "coupling", c)

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    def drift(self) -> np.ndarray:
        j = symplectic_form(self.dim // 2)
        cdc = self.coupling.conj().T @ self.coupling
        return j @ (self.hamiltonian + cdc.imag)

    def diffusion(self) -> np.ndarray:
        j = symplectic_form(self.dim // 2)
        cdc = self.coupling.conj().T @ self.coupling
        return j @ cdc.real @ j.T


@dataclass(frozen=True)
class EvolutionProblem:
    """A solver-agnostic evolution request: channels, initial state, time grid."""

    channels: ChannelSet
    initial: GaussianMoments
    times: np.ndarray
    baseline: GaussianBaseline | None = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if times.ndim != 1 or times.size == 0:
            raise DomainError("times must be a nonempty 1-d grid")
        if times[0] < 0.0 or np.any(np.diff(times) <= 0.0):
            raise DomainError("times must be strictly increasing and nonnegative")
        if self.initial.cov.shape[0] != self.channels.dim:
            raise DimensionError(
                f"initial state dimension {self.initial.cov.shape[0]} does not "
                f"match channels ({self.channels.dim})"
            )
        if self.baseline is not None and self.baseline.dim != self.channels.dim:
            raise DimensionError("baseline dimension does not match channels")
        object.__setattr__(self, "times", times)


def rotation_generator(angles) -> np.ndarray:
    """Generator of per-mode phase rotations: S = diag(theta_m I_2).

    The kick is ``exp(J S) = diag(cos(theta_m) I + sin(theta_m) J2)``.
    Accepts a scalar for a single mode.
    """
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    return np.kron(np.diag(angles), np.eye(2))


def _check_overflow(v: np.ndarray, t: float, solver: str) -> None:
    peak = float(np.max(np.abs(v)))
    if peak > OVERFLOW_BOUND:
        raise DivergenceError(
            f"{solver}: covariance entry {peak:.3e} exceeds {OVERFLOW_BOUND:.1e} "
            f"at t = {t:g}; the scenario is divergent"
        )


def ode_evolve(
    problem: EvolutionProblem,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> list[GaussianMoments]:
    """Integrate the moment equations with an adaptive embedded RK 4(5) pair.

    Args:
        problem: channels, initial moments, output time grid, optional baseline.
        rtol: relative tolerance of the integrator.
        atol: absolute tolerance of the integrator.

    Returns:
        Moments at each grid time, in order.

    Raises:
        DivergenceError: a covariance entry crossed the overflow bound.
        IntegrationError: the integrator failed to converge.
        PhysicalityError: an output violates the uncertainty relation at 1e-8.
    """
    dim = problem.channels.dim
    weights = problem.channels.weights
    kicks = problem.channels.kicks
    kicks_m1 = [k - np.eye(dim) for k in kicks]
    if problem.baseline is not None:
        drift = problem.baseline.drift()
        diffusion = problem.baseline.diffusion()
    else:
        drift = diffusion = None
    nn = dim * dim

    def rhs(_t, y):
        v = y[:nn].reshape(dim, dim)
        xi = y[nn:]
        dv = np.zeros_like(v)
        dxi = np.zeros_like(xi)
        for w, k, km1 in zip(weights, kicks, kicks_m1):
            u = km1 @ xi
            dv += w * (k @ v @ k.T - v + np.outer(u, u))
            dxi += w * u
        if drift is not None:
            dv += drift @ v + v @ drift.T + diffusion
            dxi += drift @ xi
        return np.concatenate([dv.ravel(), dxi])

    def overflow(_t, y):
        return OVERFLOW_BOUND - np.max(np.abs(y[:nn]))

    overflow.terminal = True
    overflow.direction = -1

    times = problem.times
    y0 = np.concatenate([problem.initial.cov.ravel(), problem.initial.mean])
    if times[-1] == 0.0:
        return [problem.initial]

    sol = scipy.integrate.solve_ivp(
        rhs,
        (0.0, times[-1]),
        y0,
        method="RK45",
        t_eval=times,
        rtol=rtol,
        atol=atol,
        events=overflow,
    )
    if sol.status == 1:
        t_stop = float(sol.t_events[0][0])
        raise DivergenceError(
            f"ode_evolve: covariance crossed {OVERFLOW_BOUND:.1e} at t = {t_stop:g}; "
            "the scenario is divergent"
        )
    if sol.status != 0:
        raise IntegrationError(f"ode_evolve: integrator failed: {sol.message}")

    out = []
    for i, t in enumerate(times):
        v = sol.y[:nn, i].reshape(dim, dim)
        v = 0.5 * (v + v.T)
        _check_overflow(v, t, "ode_evolve")
        require_physical(v, 1e-8, context=f"ode_evolve output at t = {t:g}")
        out.append(GaussianMoments(v, sol.y[nn:, i]))
    return out


def _poisson_cutoff(t: float, growth: float, scale: float, tol: float) -> int:
    """Smallest k* with sum_{k > k*} p_k(t) growth^(2k) scale <= tol."""
    lam = t * growth * growth
    log_tol = math.log(tol / max(scale, 1e-300))
    kstar = 0
    # log of the tail sum_{k > k*} e^{-t} t^k g^{2k} / k!  =  (lam - t) + logsf(k*)
    while (lam - t) + scipy.stats.poisson.logsf(kstar, lam) > log_tol:
        kstar += 1
        if kstar > 10_000_000:  # unreachable for sane inputs; avoid spinning
            raise TermBudgetError("series tail bound did not converge")
    return kstar


def series_evolve(
    channels: ChannelSet,
    v0: np.ndarray,
    xi0: np.ndarray | None,
    t: float,
    tol: float = 1e-10,
    max_terms: float = TERM_CAP_DEFAULT,
) -> GaussianMoments:
    """Poisson jump expansion of the moments at time ``t``.

    The depth ``k*`` is the smallest k whose Poisson tail, amplified by the
    largest kick singular value g per jump, drops below ``tol``:
    ``sum_{k > k*} p_k(t) g^(2k) ||M0|| <= tol``.  Multi-channel sequence
    weights are summed exactly through the recursion
    ``Phi(M) = sum_j gamma_j K_j M K_j^T`` (the distributed form of the
    sequence sum); the estimated raw sequence count ``M**k*`` is still guarded
    by ``max_terms``.

    Raises:
        TermBudgetError: ``M**k*`` exceeds ``max_terms``; use ode_evolve or the
            sampler, or raise the cap.
        DivergenceError: the result crossed the overflow bound.
    """
    if t < 0.0:
        raise DomainError(f"time must be nonnegative, got {t}")
    v0 = check_symmetric(v0, "V0")
    dim = v0.shape[0]
    if dim != channels.dim:
        raise DimensionError("V0 dimension does not match channels")
    xi = np.zeros(dim) if xi0 is None else np.asarray(xi0, dtype=float)
    initial = GaussianMoments(v0, xi)
    if t == 0.0:
        return initial

    growth = max(np.linalg.norm(k, 2) for k in channels.kicks)
    m = v0 + np.outer(xi, xi)
    scale = max(1.0, float(np.linalg.norm(m, 2)))
    kstar = _poisson_cutoff(t, growth, scale, tol)

    n_channels = len(channels.channels)
    if n_channels > 1 and kstar * math.log(n_channels) > math.log(max_terms):
        raise TermBudgetError(
            f"series_evolve: estimated sequence count {n_channels}^{kstar} exceeds "
            f"the cap {max_terms:.3g}; use ode_evolve or the sampler, or raise "
            "the cap (max_terms / QGD_MAX_TERMS)"
        )

    ks = np.arange(kstar + 1)
    log_p = -t + ks * math.log(t) - scipy.special.gammaln(ks + 1)
    p = np.exp(log_p)

    weights = channels.weights
    kicks = channels.kicks
    second = m.copy()
    mean = xi.copy()
    acc_second = p[0] * second
    acc_mean = p[0] * mean
    for k in range(1, kstar + 1):
        second = sum(w * kk @ second @ kk.T for w, kk in zip(weights, kicks))
        mean = sum(w * (kk @ mean) for w, kk in zip(weights, kicks))
        acc_second += p[k] * second
        acc_mean += p[k] * mean

    v = acc_second - np.outer(acc_mean, acc_mean)
    v = 0.5 * (v + v.T)
    _check_overflow(v, t, "series_evolve")
    require_physical(v, 1e-8, context=f"series_evolve output at t = {t:g}")
    return GaussianMoments(v, acc_mean)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Unitary eigendecomposition of a normal ``J S``.

    ``eigenvectors`` columns form an orthonormal basis; ``J S = Z diag(s) Z^dag``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def spectral_decompose(s: np.ndarray) -> SpectralDecomposition:
    """Eigendecompose ``J S`` in a unitary basis (complex Schur).

    Raises:
        NotNormalError: ``J S`` fails the normality test
            ``||A A^* - A^* A||_F <= 1e-10 ||A||_F^2``.
    """
    s = check_symmetric(s, "S")
    a = symplectic_form(s.shape[0] // 2) @ s
    if not _is_normal(a):
        raise NotNormalError(
            "JS is not normal; the spectral solver does not apply (use "
            "ode_evolve or series_evolve)"
        )
    tri, z = scipy.linalg.schur(a.astype(complex), output="complex")
    eigs = np.diag(tri).copy()
    residual = np.max(np.abs(a @ z - z * eigs))
    if residual > 1e-9 * (1.0 + np.max(np.abs(a))):
        raise NotNormalError("eigenbasis residual too large; JS is not normal enough")
    return SpectralDecomposition(eigenvalues=eigs, eigenvectors=z)


def spectral_evolve(
    s: np.ndarray,
    v0: np.ndarray,
    t: float,
    xi0: np.ndarray | None = None,
    exp_bound: float = 700.0,
) -> GaussianMoments:
    """Single-channel evolution in the eigenbasis of a normal ``J S``.

    In that basis the matrix ``J V`` evolves elementwise:
    ``(JV)_{kk'}(t) = exp[(e^{conj(s_k') - conj(s_k)} - 1) t] (JV)_{kk'}(0)``
    (one kick conjugates ``J M`` by ``exp(-J S)^T``, which is elementwise
    in the same unitary basis).

    Raises:
        NotNormalError: ``J S`` is not normal.
        DivergenceError: a growth exponent exceeds ``exp_bound`` or the result
            crossed the overflow bound.
    """
    if t < 0.0:
        raise DomainError(f"time must be nonnegative, got {t}")
    v0 = check_symmetric(v0, "V0")
    dim = v0.shape[0]
    xi = np.zeros(dim) if xi0 is None else np.asarray(xi0, dtype=float)
    dec = spectral_decompose(s)
    z = dec.eigenvectors
    eigs = dec.eigenvalues

    j = symplectic_form(dim // 2)
    m0 = v0 + np.outer(xi, xi)
    coeff = z.conj().T @ (j @ m0) @ z
    delta = np.conj(eigs[None, :] - eigs[:, None])
    exponent = (np.exp(delta) - 1.0) * t
    peak = float(np.max(exponent.real))
    if peak > exp_bound:
        raise DivergenceError(
            f"spectral_evolve: growth exponent {peak:.3g} exceeds {exp_bound:g} "
            f"at t = {t:g}; the scenario is divergent"
        )
    gt = z @ (coeff * np.exp(exponent)) @ z.conj().T
    mt = -j @ gt.real
    mean_factor = np.exp((np.exp(eigs) - 1.0) * t)
    xi_t = (z @ (mean_factor * (z.conj().T @ xi))).real
    v = mt - np.outer(xi_t, xi_t)
    v = 0.5 * (v + v.T)
    _check_overflow(v, t, "spectral_evolve")
    require_physical(v, 1e-8, context=f"spectral_evolve output at t = {t:g}")
    return GaussianMoments(v, xi_t)


#: Classification labels used by :func:`classify_asymptotics`.
DIVERGENT, OSCILLATORY, DECAYING = "divergent", "oscillatory", "decaying"


@dataclass(frozen=True)
class AsymptoticsReport:
    """Per-pair asymptotics of the spectral solution.

    For eigenvalue pair (k, k') with difference ``x + i y``, the element decays
    like ``exp[(zeta - 1) t]`` with ``zeta = e^x cos(y)``: divergent for
    ``zeta > 1``, purely oscillatory on ``zeta = 1`` (phase rate ``e^x sin y``,
    which equals ``tan y`` on that manifold), decaying otherwise.  Pairs with
    ``zeta = 1`` but ``y != 0`` form a measure-zero resonant manifold and are
    flagged rather than silently classified.
    """

    decomposition: SpectralDecomposition
    zeta: np.ndarray
    labels: np.ndarray
    phase_rate: np.ndarray
    flagged: np.ndarray


def classify_asymptotics(s: np.ndarray, osc_tol: float = 1e-12) -> AsymptoticsReport:
    """Classify every eigenvalue pair of the spectral solution of ``S``."""
    dec = spectral_decompose(s)
    eigs = dec.eigenvalues
    delta = np.conj(eigs[None, :] - eigs[:, None])
    x, y = delta.real, delta.imag
    zeta = np.exp(x) * np.cos(y)
    labels = np.full(zeta.shape, DECAYING, dtype=object)
    labels[zeta > 1.0 + osc_tol] = DIVERGENT
    oscillatory = np.abs(zeta - 1.0) <= osc_tol
    labels[oscillatory] = OSCILLATORY
    phase_rate = np.full(zeta.shape, np.nan)
    phase_rate[oscillatory] = (np.exp(x) * np.sin(y))[oscillatory]
    # distance of y to the nearest multiple of 2 pi
    wrapped = np.abs(np.remainder(y + np.pi, 2.0 * np.pi) - np.pi)
    flagged = oscillatory & (wrapped > 1e-9)
    return AsymptoticsReport(
        decomposition=dec,
        zeta=zeta,
        labels=np.asarray(labels),
        phase_rate=phase_rate,
        flagged=flagged,
    )


def stationary_state(
    s: np.ndarray,
    v0: np.ndarray,
    grouping_tol: float = 1e-10,
) -> np.ndarray:
    """Late-time covariance of a passive single channel.

    For purely imaginary spectrum of ``J S`` the off-diagonal sectors of
    ``J V`` decay and the limit keeps the eigenspace-diagonal part:
    ``J V_inf = sum_g P_g (J V0) P_g`` over eigenvalue groups g, which reduces
    to ``V_inf = -J sum_k mu_k s_k s_k^dag`` with ``mu_k = s_k^dag (J V0) s_k``
    when the spectrum is simple.  Assumes zero mean.

    Args:
        s: symmetric generator of the single passive channel.
        v0: initial covariance.
        grouping_tol: relative tolerance for eigenvalue grouping.

    Returns:
        The stationary covariance.

    Raises:
        NotPassiveError: some eigenvalue has a nonzero real part.
        ResonanceError: two distinct eigenvalue groups differ by a multiple of
            2 pi i, so their cross sector does not decay and no unique limit
            exists.

    Warns:
        DegenerateSpectrumWarning: repeated eigenvalues were grouped and
            projector averaging used.
    """
    v0 = check_symmetric(v0, "V0")
    dec = spectral_decompose(s)
    eigs = dec.eigenvalues
    z = dec.eigenvectors
    scale = max(1.0, float(np.max(np.abs(eigs))))
    if np.max(np.abs(eigs.real)) > grouping_tol * scale:
        raise NotPassiveError(
            "JS has eigenvalues off the imaginary axis; no stationary state"
        )

    theta = eigs.imag
    order = np.argsort(theta)
    group_ids = np.empty(theta.size, dtype=int)
    gid = 0
    group_ids[order[0]] = 0
    for prev, cur in zip(order[:-1], order[1:]):
        if theta[cur] - theta[prev] > grouping_tol * scale:
            gid += 1
        group_ids[cur] = gid
    if gid + 1 < theta.size:
        warnings.warn(
            "degenerate passive spectrum; using eigenspace-projector averaging",
            DegenerateSpectrumWarning,
            stacklevel=2,
        )

    same_group = group_ids[:, None] == group_ids[None, :]
    y = theta[:, None] - theta[None, :]
    resonant = (~same_group) & (np.cos(y) > 1.0 - 1e-12)
    if np.any(resonant):
        raise ResonanceError(
            "distinct eigenvalues differ by a multiple of 2 pi i; the cross "
            "sector does not decay and no unique stationary limit exists"
        )

    j = symplectic_form(v0.shape[0] // 2)
    coeff = z.conj().T @ (j @ v0) @ z
    g_inf = z @ (coeff * same_group) @ z.conj().T
    v_inf = -j @ g_inf.real
    v_inf = 0.5 * (v_inf + v_inf.T)

    a = j @ s
    commutator = np.max(np.abs(a @ (j @ v_inf) - (j @ v_inf) @ a))
    if commutator > 1e-10 * scale * (1.0 + np.max(np.abs(j @ v_inf))):
        raise QgdError(
            f"stationary_state: [JS, JV] residual {commutator:.3e} exceeds tolerance"
        )
    require_physical(v_inf, 1e-8, context="stationary_state output")
    return v_inf
