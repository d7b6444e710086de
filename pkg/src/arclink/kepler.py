"""Two-body dynamics: first integrals, element conversions, propagation.

Everything works in one consistent unit system (see :mod:`arclink.config`);
``mu`` is the gravitational parameter of the centre.  Only elliptic orbits
can be expressed in Keplerian elements here; hyperbolic states keep their
Cartesian representation and callers flag them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConvergenceError, NonEllipticOrbitError, RectilinearOrbitError

TWO_PI = 2.0 * math.pi

_ECC_TOL = 1e-10  # below this the perihelion direction is meaningless
_INC_TOL = 1e-10  # below this the node direction is meaningless


def wrap_angle(x: float) -> float:
    """Wrap an angle to [0, 2*pi)."""
    return float(np.mod(x, TWO_PI))


def wrap_signed(x: float) -> float:
    """Wrap an angle difference to (-pi, pi]."""
    y = math.fmod(x, TWO_PI)
    if y > math.pi:
        y -= TWO_PI
    elif y <= -math.pi:
        y += TWO_PI
    return y


@dataclass(frozen=True)
class CartesianState:
    """Position and velocity at an epoch (internal time units)."""

    r: np.ndarray
    v: np.ndarray
    epoch: float

    def __post_init__(self):
        object.__setattr__(self, "r", np.asarray(self.r, dtype=float))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))


@dataclass(frozen=True)
class KeplerianElements:
    """Elliptic elements (a, e, i, Omega, omega, ell) at an epoch.

    Angles are radians: inclination in [0, pi], the others wrapped to
    [0, 2*pi).  ``ell`` is the mean anomaly.  For near-circular orbits
    (e < 1e-10) omega is set to zero and ell is measured from the node; for
    near-equatorial orbits (i < 1e-10) Omega is set to zero.
    """

    a: float
    e: float
    i: float
    Omega: float
    omega: float
    ell: float
    epoch: float

    def __post_init__(self):
        object.__setattr__(self, "Omega", wrap_angle(self.Omega))
        object.__setattr__(self, "omega", wrap_angle(self.omega))
        object.__setattr__(self, "ell", wrap_angle(self.ell))

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.e, self.i, self.Omega, self.omega, self.ell])


def angular_momentum(state: CartesianState) -> np.ndarray:
    """First integral c = r x v."""
    return np.cross(state.r, state.v)


def laplace_lenz(state: CartesianState, mu: float) -> np.ndarray:
    """Dimensionless Laplace-Lenz (eccentricity) vector.

    L = mu^-1 [ (|v|^2 - mu/|r|) r - (r . v) v ], equal to v x c / mu - r/|r|.
    Points to perihelion with magnitude e.
    """
    r, v = state.r, state.v
    rmag = float(np.linalg.norm(r))
    return ((v @ v - mu / rmag) * r - (r @ v) * v) / mu


def two_body_energy(state: CartesianState, mu: float) -> float:
    """Specific orbital energy |v|^2/2 - mu/|r|."""
    return float(state.v @ state.v) / 2.0 - mu / float(np.linalg.norm(state.r))


def mean_motion(a: float, mu: float) -> float:
    return math.sqrt(mu / a**3)


def solve_kepler(ell, e: float, tol: float = 1e-14, max_iter: int = 60):
    """Solve E - e sin(E) = ell for the eccentric anomaly.

    Safeguarded Newton iteration started at E0 = ell + e sin(ell), falling
    back to bisection on the bracket [ell - e, ell + e] whenever a Newton
    step leaves it.  Works element-wise on arrays; scalars in, scalar out.

    Args:
        ell: Mean anomaly in radians (any real value).
        e: Eccentricity in [0, 1).
        tol: Convergence threshold on the equation residual, radians.

    Returns:
        Eccentric anomaly with the same 2*pi offset as ``ell``.
    """
    if not 0.0 <= e < 1.0:
        raise NonEllipticOrbitError(f"eccentricity {e!r} outside [0, 1)")
    ell_arr = np.atleast_1d(np.asarray(ell, dtype=float))
    # Reduce to (-pi, pi]; the solution shifts back by the same multiple.
    k = np.round(ell_arr / TWO_PI)
    m = ell_arr - k * TWO_PI
    E = m + e * np.sin(m)
    lo = m - e
    hi = m + e
    f = E - e * np.sin(E) - m
    for _ in range(max_iter):
        active = np.abs(f) > tol
        if not active.any():
            break
        # f is strictly increasing in E, so the bracket update is by sign.
        lo = np.where(active & (f < 0.0), E, lo)
        hi = np.where(active & (f > 0.0), E, hi)
        step = f / (1.0 - e * np.cos(E))
        cand = E - step
        outside = (cand < lo) | (cand > hi)
        cand = np.where(outside, 0.5 * (lo + hi), cand)
        E = np.where(active, cand, E)
        f = E - e * np.sin(E) - m
    else:
        raise ConvergenceError(
            f"Kepler equation not converged to {tol} in {max_iter} iterations"
        )
    E = E + k * TWO_PI
    return float(E[0]) if np.isscalar(ell) or np.asarray(ell).ndim == 0 else E


def cartesian_to_keplerian(state: CartesianState, mu: float) -> KeplerianElements:
    """Convert a Cartesian state to elliptic Keplerian elements.

    Raises:
        RectilinearOrbitError: angular momentum numerically zero.
        NonEllipticOrbitError: non-negative orbital energy.
    """
    r, v = state.r, state.v
    rmag = float(np.linalg.norm(r))
    vmag = float(np.linalg.norm(v))
    c = np.cross(r, v)
    cmag = float(np.linalg.norm(c))
    if cmag <= 1e-12 * rmag * vmag:
        raise RectilinearOrbitError("angular momentum numerically zero")
    energy = vmag * vmag / 2.0 - mu / rmag
    if energy >= 0.0:
        raise NonEllipticOrbitError(f"non-elliptic state (energy {energy:.6e} >= 0)")
    a = -mu / (2.0 * energy)
    lvec = ((vmag * vmag - mu / rmag) * r - (r @ v) * v) / mu
    e = float(np.linalg.norm(lvec))
    chat = c / cmag
    inc = math.acos(min(1.0, max(-1.0, c[2] / cmag)))

    node = np.array([-c[1], c[0], 0.0])
    nmag = float(np.linalg.norm(node))
    if inc < _INC_TOL or nmag <= 1e-300:
        Omega = 0.0
        nhat = np.array([1.0, 0.0, 0.0])
    else:
        Omega = wrap_angle(math.atan2(node[1], node[0]))
        nhat = node / nmag

    if e < _ECC_TOL:
        omega = 0.0
        ref = nhat  # anomaly measured from the node
    else:
        lhat = lvec / e
        omega = wrap_angle(math.atan2(chat @ np.cross(nhat, lhat), nhat @ lhat))
        ref = lhat
    nu = math.atan2(chat @ np.cross(ref, r) / rmag, ref @ r / rmag)
    # True -> eccentric -> mean anomaly.
    E = 2.0 * math.atan2(
        math.sqrt(1.0 - e) * math.sin(nu / 2.0),
        math.sqrt(1.0 + e) * math.cos(nu / 2.0),
    )
    ell = wrap_angle(E - e * math.sin(E))
    return KeplerianElements(a, e, inc, Omega, omega, ell, state.epoch)


def _rot_z(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _rot_x(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def _drot_z(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[-s, -c, 0.0], [c, -s, 0.0], [0.0, 0.0, 0.0]])


def _drot_x(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[0.0, 0.0, 0.0], [0.0, -s, -c], [0.0, c, -s]])


def _perifocal(el: KeplerianElements, mu: float):
    """In-plane coordinates, velocities, and the quantities reused by the
    analytic Jacobian."""
    E = solve_kepler(el.ell, el.e)
    cE, sE = math.cos(E), math.sin(E)
    b = math.sqrt(1.0 - el.e * el.e)
    beta = 1.0 - el.e * cE
    n = mean_motion(el.a, mu)
    X = el.a * (cE - el.e)
    Y = el.a * b * sE
    Xd = -n * el.a * sE / beta
    Yd = n * el.a * b * cE / beta
    return E, cE, sE, b, beta, n, X, Y, Xd, Yd


def keplerian_to_cartesian(el: KeplerianElements, mu: float) -> CartesianState:
    """Convert elliptic elements to a Cartesian state at the element epoch."""
    if el.a <= 0.0:
        raise NonEllipticOrbitError(f"semimajor axis must be positive, got {el.a!r}")
    if not 0.0 <= el.e < 1.0:
        raise NonEllipticOrbitError(f"eccentricity {el.e!r} outside [0, 1)")
    _, _, _, _, _, _, X, Y, Xd, Yd = _perifocal(el, mu)
    R = _rot_z(el.Omega) @ _rot_x(el.i) @ _rot_z(el.omega)
    r = R @ np.array([X, Y, 0.0])
    v = R @ np.array([Xd, Yd, 0.0])
    return CartesianState(r, v, el.epoch)


def propagate_elements(el: KeplerianElements, t: float, mu: float) -> KeplerianElements:
    """Two-body propagation in element space: advance the mean anomaly."""
    ell = el.ell + mean_motion(el.a, mu) * (t - el.epoch)
    return replace(el, ell=wrap_angle(ell), epoch=t)


def propagate_kepler(el: KeplerianElements, t: float, mu: float) -> CartesianState:
    """Two-body propagation of elements to a Cartesian state at time ``t``."""
    return keplerian_to_cartesian(propagate_elements(el, t, mu), mu)


def propagation_jacobian(el: KeplerianElements, t: float, mu: float) -> np.ndarray:
    """Jacobian of element propagation, in element coordinates.

    The two-body flow is the identity on (a, e, i, Omega, omega) while
    ell picks up n(a) * dt, so the only off-diagonal entry is
    d(ell)/d(a) = -1.5 (n/a) dt.
    """
    J = np.eye(6)
    n = mean_motion(el.a, mu)
    J[5, 0] = -1.5 * (n / el.a) * (t - el.epoch)
    return J


def element_state_jacobian(el: KeplerianElements, mu: float) -> np.ndarray:
    """Analytic 6x6 Jacobian of the element -> Cartesian-state map.

    Columns follow the element order (a, e, i, Omega, omega, ell); rows are
    (r, v).  Obtained by differentiating the perifocal coordinates (through
    the Kepler equation) and the rotation to the inertial frame.
    """
    E, cE, sE, b, beta, n, X, Y, Xd, Yd = _perifocal(el, mu)
    a, e = el.a, el.e
    dE_dell = 1.0 / beta
    dE_de = sE / beta
    dbeta_de = -cE + e * sE * dE_de
    dbeta_dell = e * sE * dE_dell
    db_de = -e / b

    dX = {
        "a": cE - e,
        "e": a * (-sE * dE_de - 1.0),
        "ell": -a * sE * dE_dell,
    }
    dY = {
        "a": b * sE,
        "e": a * (db_de * sE + b * cE * dE_de),
        "ell": a * b * cE * dE_dell,
    }
    na = n * a
    # d(na)/da = -n/2 because n ~ a^(-3/2).
    dXd = {
        "a": 0.5 * n * sE / beta,
        "e": -na * (cE * dE_de * beta - sE * dbeta_de) / beta**2,
        "ell": -na * (cE * dE_dell * beta - sE * dbeta_dell) / beta**2,
    }
    dYd = {
        "a": -0.5 * n * b * cE / beta,
        "e": na
        * ((db_de * cE - b * sE * dE_de) * beta - b * cE * dbeta_de)
        / beta**2,
        "ell": na * (-b * sE * dE_dell * beta - b * cE * dbeta_dell) / beta**2,
    }

    Rz_O, Rx_i, Rz_o = _rot_z(el.Omega), _rot_x(el.i), _rot_z(el.omega)
    R = Rz_O @ Rx_i @ Rz_o
    dR = {
        "i": Rz_O @ _drot_x(el.i) @ Rz_o,
        "Omega": _drot_z(el.Omega) @ Rx_i @ Rz_o,
        "omega": Rz_O @ Rx_i @ _drot_z(el.omega),
    }
    p_vec = np.array([X, Y, 0.0])
    v_vec = np.array([Xd, Yd, 0.0])

    J = np.zeros((6, 6))
    for col, key in enumerate(("a", "e", "i", "Omega", "omega", "ell")):
        if key in dX:
            J[:3, col] = R @ np.array([dX[key], dY[key], 0.0])
            J[3:, col] = R @ np.array([dXd[key], dYd[key], 0.0])
        else:
            J[:3, col] = dR[key] @ p_vec
            J[3:, col] = dR[key] @ v_vec
    return J


def state_element_jacobian(el: KeplerianElements, mu: float) -> np.ndarray:
    """Inverse map Jacobian d(elements)/d(r, v) at the given elements."""
    return np.linalg.inv(element_state_jacobian(el, mu))


def compatibility_residuals(
    state1: CartesianState,
    state2: CartesianState,
    e_rho2: np.ndarray,
    mu: float,
) -> tuple[float, float | None]:
    """Diagnostic residuals of the two scalar compatibility conditions.

    First: the Laplace-Lenz difference projected on the epoch-2 line of
    sight, (L1 - L2) . e_rho2.  Second: the mean-anomaly consistency
    ell1 - ell2 - n1 (t1 - t2), wrapped to (-pi, pi]; ``None`` when either
    state is not elliptic.
    """
    dL = laplace_lenz(state1, mu) - laplace_lenz(state2, mu)
    first = float(dL @ np.asarray(e_rho2, dtype=float))
    try:
        el1 = cartesian_to_keplerian(state1, mu)
        el2 = cartesian_to_keplerian(state2, mu)
    except (NonEllipticOrbitError, RectilinearOrbitError):
        return first, None
    n1 = mean_motion(el1.a, mu)
    second = wrap_signed(el1.ell - el2.ell - n1 * (state1.epoch - state2.epoch))
    return first, second
