"""Symplectic linear algebra for continuous-variable states.

Conventions used throughout the package:

* quadratures are interleaved, ``(x_1, p_1, ..., x_N, p_N)``, and this
  ordering never varies;
* natural units with hbar = 1, so the vacuum covariance is ``I/2`` and a
  physical covariance satisfies ``V + (i/2) J >= 0``;
* the symplectic form is ``J = diag(J2, ..., J2)`` with
  ``J2 = [[0, 1], [-1, 0]]``;
* symplectic matrices act on covariances as ``V -> K V K^T`` and satisfy
  ``K J K^T = J``; the exponential family is ``K = exp(J S)`` with ``S``
  symmetric.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import DimensionError, DivergenceError, DomainError, PhysicalityError

_J2 = np.array([[0.0, 1.0], [-1.0, 0.0]])

#: Relative tolerance of the normality test selecting the eigen path of
#: :func:`symplectic_exp`.
NORMALITY_RTOL = 1e-10

#: Default bound on ||JS||_F above which :func:`symplectic_exp` refuses to
#: exponentiate (the result would be numerically meaningless).
EXP_NORM_BOUND = 50.0


def symplectic_form(n_modes: int) -> np.ndarray:
    """Return the 2N x 2N symplectic form for ``n_modes`` modes."""
    if n_modes < 1:
        raise DimensionError(f"need at least one mode, got {n_modes}")
    return np.kron(np.eye(n_modes), _J2)


def vacuum_covariance(n_modes: int) -> np.ndarray:
    """Covariance of the N-mode vacuum, I/2."""
    return 0.5 * np.eye(2 * n_modes)


def _check_even_square(m: np.ndarray, name: str) -> int:
    """Validate a 2N x 2N array and return N."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")
    if m.shape[0] % 2 != 0 or m.shape[0] == 0:
        raise DimensionError(f"{name} must have even dimension, got {m.shape[0]}")
    return m.shape[0] // 2


def check_symmetric(m: np.ndarray, name: str = "matrix", rtol: float = 1e-9) -> np.ndarray:
    """Validate symmetry within ``rtol`` (relative to the largest entry) and return the symmetrized array."""
    m = np.asarray(m, dtype=float)
    _check_even_square(m, name)
    scale = max(1.0, float(np.max(np.abs(m))))
    if np.max(np.abs(m - m.T)) > rtol * scale:
        raise DomainError(f"{name} is not symmetric within tolerance {rtol}")
    return 0.5 * (m + m.T)


def is_symplectic(k: np.ndarray, tol: float = 1e-10) -> bool:
    """Whether ``K J K^T = J`` holds entrywise within ``tol``."""
    k = np.asarray(k, dtype=float)
    n = _check_even_square(k, "K")
    j = symplectic_form(n)
    return bool(np.max(np.abs(k @ j @ k.T - j)) <= tol)


def symplectic_exp(s: np.ndarray, norm_bound: float = EXP_NORM_BOUND) -> np.ndarray:
    """Exponentiate a symmetric generator: ``K = exp(J S)``.

    Uses an exact eigen route (complex Schur) when ``J S`` is normal and
    scaling-and-squaring with a rational approximant otherwise.

    Args:
        s: symmetric real generator, shape (2N, 2N).
        norm_bound: refuse to exponentiate when ``||JS||_F`` exceeds this.

    Returns:
        The symplectic matrix ``exp(J S)``.

    Raises:
        DomainError: if ``s`` is not symmetric within tolerance.
        DivergenceError: if ``||JS||_F`` exceeds ``norm_bound``.
    """
    s = check_symmetric(s, "S")
    n = s.shape[0] // 2
    a = symplectic_form(n) @ s
    norm = np.linalg.norm(a)
    if norm > norm_bound:
        raise DivergenceError(
            f"||JS|| = {norm:.3g} exceeds the exponentiation bound {norm_bound:.3g}"
        )
    if _is_normal(a):
        # Unitary eigenbasis; exponentiation is exact up to round-off.
        t, z = scipy.linalg.schur(a.astype(complex), output="complex")
        k = (z * np.exp(np.diag(t))) @ z.conj().T
        return np.ascontiguousarray(k.real)
    return scipy.linalg.expm(a)


def _is_normal(a: np.ndarray) -> bool:
    """Normality test ||A A* - A* A||_F <= rtol ||A||_F^2 (A real here)."""
    fro = np.linalg.norm(a)
    if fro == 0.0:
        return True
    comm = a @ a.T - a.T @ a
    return bool(np.linalg.norm(comm) <= NORMALITY_RTOL * fro**2)


def symplectic_eigenvalues(v: np.ndarray, pair_rtol: float = 1e-9) -> np.ndarray:
    """Symplectic spectrum of a positive definite covariance.

    The eigenvalues of ``J V`` come in pairs ``+/- i nu_k``; the returned
    ``nu_k`` are sorted ascending.

    Args:
        v: symmetric positive definite covariance, shape (2N, 2N).
        pair_rtol: relative tolerance for the pairing test.

    Returns:
        Array of N symplectic eigenvalues, ascending.

    Raises:
        DomainError: if the spectrum of ``J V`` fails to form conjugate pairs
            within tolerance (``v`` not symmetric positive definite).
    """
    v = check_symmetric(v, "V")
    n = v.shape[0] // 2
    mu = np.linalg.eigvals(symplectic_form(n) @ v)
    scale = max(np.max(np.abs(mu)), 1e-300)
    if np.max(np.abs(mu.real)) > pair_rtol * scale:
        raise DomainError(
            "eigenvalues of JV are not purely imaginary; V is not a positive "
            "definite covariance"
        )
    nus = np.sort(np.abs(mu.imag))
    lo, hi = nus[0::2], nus[1::2]
    if np.max(np.abs(hi - lo)) > pair_rtol * scale:
        raise DomainError("eigenvalues of JV fail to pair within tolerance")
    return 0.5 * (lo + hi)


def uncertainty_margin(v: np.ndarray) -> float:
    """Smallest eigenvalue of the Hermitian matrix ``V + (i/2) J``.

    Nonnegative (within round-off) exactly when ``V`` is a physical covariance.
    """
    v = np.asarray(v, dtype=float)
    n = _check_even_square(v, "V")
    h = v.astype(complex) + 0.5j * symplectic_form(n)
    return float(np.linalg.eigvalsh(h)[0])


def check_uncertainty(v: np.ndarray, tol: float = 1e-9) -> bool:
    """Whether ``V + (i/2) J >= 0`` holds up to an eigenvalue deficit ``tol``."""
    return uncertainty_margin(v) >= -tol


def require_physical(v: np.ndarray, tol: float = 1e-8, context: str = "state") -> None:
    """Raise :class:`PhysicalityError` when ``v`` violates the uncertainty relation."""
    margin = uncertainty_margin(v)
    if margin < -tol:
        raise PhysicalityError(
            f"{context}: covariance violates the uncertainty relation "
            f"(eigenvalue deficit {margin:.3e}, tolerance {tol:.1e})"
        )
