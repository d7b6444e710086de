"""Physical constants for the two unit systems supported by the package.

Heliocentric work uses astronomical units, days, and radians; geocentric
work uses kilometres, seconds, and radians.  Epochs are exchanged as MJD
(days) at the I/O boundary in both systems.
"""

# Gauss gravitational constant [au^(3/2) / day]; mu_sun = GAUSS_K**2.
GAUSS_K = 0.01720209895
GM_SUN_AU3_DAY2 = GAUSS_K * GAUSS_K  # 2.9591220828559115e-04

# Earth gravitational parameter [km^3 / s^2] (EGM96 value).
GM_EARTH_KM3_S2 = 398600.4418

# Speed of light.
C_LIGHT_KM_S = 299792.458
AU_KM = 149597870.7
C_LIGHT_AU_DAY = C_LIGHT_KM_S * 86400.0 / AU_KM  # 173.1446 au/day

SECONDS_PER_DAY = 86400.0

ARCSEC_RAD = 4.84813681109536e-06  # pi / (180 * 3600)
