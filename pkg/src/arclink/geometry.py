"""Topocentric observation geometry.

The observed direction defined by right ascension ``alpha`` and declination
``delta`` spans a moving orthonormal triad: the line of sight and the two
tangent directions along which the angular rates act.  Body states are
composed from an observer state, the triad, and the topocentric spherical
coordinates; the inverse extraction recovers those coordinates from a pair of
Cartesian states.  All vectors live in one fixed inertial frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PolarSingularityError

Vec3 = np.ndarray

_POLAR_MARGIN = 1e-9


@dataclass(frozen=True)
class ObservationBasis:
    """Line-of-sight triad (e_rho, e_alpha, e_delta) at fixed angles.

    e_rho is the unit line of sight, e_alpha = (cos delta)^-1 d(e_rho)/d(alpha)
    and e_delta = d(e_rho)/d(delta).  The triad is orthonormal with
    e_rho x e_alpha = e_delta.
    """

    alpha: float
    delta: float
    e_rho: Vec3
    e_alpha: Vec3
    e_delta: Vec3


def observation_basis(alpha: float, delta: float) -> ObservationBasis:
    """Build the topocentric triad for one observed direction.

    Parameters
    ----------
    alpha : float
        Right ascension in radians.
    delta : float
        Declination in radians, strictly inside (-pi/2, pi/2).

    Returns
    -------
    ObservationBasis

    Raises
    ------
    PolarSingularityError
        If ``delta`` is within 1e-9 rad of a pole, where e_alpha is undefined.
    """
    if abs(delta) >= math.pi / 2.0 - _POLAR_MARGIN:
        raise PolarSingularityError(
            f"declination {delta!r} too close to a pole for the tangent basis"
        )
    ca, sa = math.cos(alpha), math.sin(alpha)
    cd, sd = math.cos(delta), math.sin(delta)
    e_rho = np.array([cd * ca, cd * sa, sd])
    e_alpha = np.array([-sa, ca, 0.0])
    e_delta = np.array([-sd * ca, -sd * sa, cd])
    return ObservationBasis(alpha, delta, e_rho, e_alpha, e_delta)


def basis_partials(basis: ObservationBasis) -> dict[str, Vec3]:
    """Partial derivatives of the triad vectors with respect to the angles.

    Returns a dict with keys ``"drho_dalpha"``, ``"drho_ddelta"``,
    ``"dalpha_dalpha"``, ``"dalpha_ddelta"``, ``"ddelta_dalpha"``,
    ``"ddelta_ddelta"``.  Used by the attributable-to-Cartesian Jacobian.
    """
    ca, sa = math.cos(basis.alpha), math.sin(basis.alpha)
    cd, sd = math.cos(basis.delta), math.sin(basis.delta)
    return {
        "drho_dalpha": cd * basis.e_alpha,
        "drho_ddelta": basis.e_delta.copy(),
        "dalpha_dalpha": np.array([-ca, -sa, 0.0]),
        "dalpha_ddelta": np.zeros(3),
        "ddelta_dalpha": -sd * basis.e_alpha,
        "ddelta_ddelta": -basis.e_rho,
    }


def body_position(q: Vec3, rho: float, basis: ObservationBasis) -> Vec3:
    """Compose the body position r = q + rho * e_rho.

    ``rho`` must be positive; zero range would put the body at the observer.
    """
    if rho <= 0.0:
        raise DomainError(f"range must be positive, got {rho!r}")
    return np.asarray(q, dtype=float) + rho * basis.e_rho


def body_velocity(
    qdot: Vec3,
    rho: float,
    rhodot: float,
    alphadot: float,
    deltadot: float,
    basis: ObservationBasis,
) -> Vec3:
    """Compose the body velocity from observer velocity, rates, and range.

    rdot = qdot + rhodot e_rho + rho (alphadot cos(delta) e_alpha
           + deltadot e_delta)

    The composition is linear in (rhodot, alphadot, deltadot), which the
    angular-momentum coefficient assembly relies on.
    """
    if rho <= 0.0:
        raise DomainError(f"range must be positive, got {rho!r}")
    cd = math.cos(basis.delta)
    return (
        np.asarray(qdot, dtype=float)
        + rhodot * basis.e_rho
        + rho * (alphadot * cd * basis.e_alpha + deltadot * basis.e_delta)
    )


def topocentric_coords(
    r: Vec3, rdot: Vec3, q: Vec3, qdot: Vec3
) -> tuple[float, float, float, float, float, float]:
    """Invert the composition: (alpha, delta, alphadot, deltadot, rho, rhodot).

    Exact inverse of :func:`body_position` / :func:`body_velocity` for the
    given observer state.  Raises :class:`PolarSingularityError` on a polar
    line of sight and :class:`DomainError` on zero separation.
    """
    d = np.asarray(r, dtype=float) - np.asarray(q, dtype=float)
    rho = float(np.linalg.norm(d))
    if rho <= 0.0:
        raise DomainError("body and observer coincide; direction undefined")
    alpha = math.atan2(d[1], d[0]) % (2.0 * math.pi)
    delta = math.asin(min(1.0, max(-1.0, d[2] / rho)))
    basis = observation_basis(alpha, delta)
    ddot = np.asarray(rdot, dtype=float) - np.asarray(qdot, dtype=float)
    rhodot = float(ddot @ basis.e_rho)
    cd = math.cos(delta)
    alphadot = float(ddot @ basis.e_alpha) / (rho * cd)
    deltadot = float(ddot @ basis.e_delta) / rho
    return alpha, delta, alphadot, deltadot, rho, rhodot


def hat_map(u: Vec3) -> np.ndarray:
    """Skew-symmetric matrix such that hat_map(u) @ w == cross(u, w)."""
    u = np.asarray(u, dtype=float)
    return np.array(
        [
            [0.0, -u[2], u[1]],
            [u[2], 0.0, -u[0]],
            [-u[1], u[0], 0.0],
        ]
    )
