#!/usr/bin/env python3
"""Link two short optical arcs of the same body into preliminary orbits.

A known elliptic orbit is observed twice, half a year apart, by a station
on a circular 1 au heliocentric orbit.  Each sighting is reduced to an
attributable -- two angles and two angular rates, no range information at
all.  Conservation of angular momentum and of the projected Laplace-Lenz
vector between the two epochs then pins down the ranges, and with them
complete orbits.  With noiseless data one candidate reproduces the truth
to machine precision.
"""

import numpy as np

from arclink.attributables import (circular_observer,
                                   synthesize_optical_attributable,
                                   synthetic_truth_state)
from arclink.config import RunConfig
from arclink.geometry import topocentric_coords
from arclink.kepler import CartesianState, KeplerianElements
from arclink.optical import link_optical

config = RunConfig()            # au / day / rad, mu of the Sun
MU = config.mu_value
C = config.units.c_light

# --- the scenario ---------------------------------------------------------
# Ground truth: a slightly eccentric orbit just inside 1 au.  The observer
# sits on a circular 1 au orbit; the two mean observation epochs are 182
# days apart, so the station has moved half-way around the Sun in between.

truth = KeplerianElements(a=0.92, e=0.19, i=0.06, Omega=1.2, omega=0.7,
                          ell=0.4, epoch=53100.0)
eph = circular_observer(1.0, MU)
t1, t2 = 53105.0, 53287.0

att1 = synthesize_optical_attributable(truth, eph, t1, MU, C)
att2 = synthesize_optical_attributable(truth, eph, t2, MU, C)

for k, att in ((1, att1), (2, att2)):
    print(f"attributable {k} @ MJD {att.tbar:.1f}: "
          f"alpha={np.degrees(att.alpha):8.3f} deg  "
          f"delta={np.degrees(att.delta):7.3f} deg  "
          f"alphadot={np.degrees(att.alphadot) * 3600:8.2f} arcsec/day  "
          f"deltadot={np.degrees(att.deltadot) * 3600:8.2f} arcsec/day")

# --- link the two arcs -----------------------------------------------------
# link_optical eliminates the four unknowns (rho, rhodot at both epochs)
# down to one polynomial in rho1, takes its real positive roots, and keeps
# the root pairs whose angular-momentum residual q(rho1, rho2) is small.

obs1 = CartesianState(*eph.state(t1), t1)
obs2 = CartesianState(*eph.state(t2), t2)
solutions = link_optical(att1, att2, obs1, obs2, config)
print(f"\n{len(solutions)} candidate orbit(s)")

for i, sol in enumerate(solutions):
    el = sol.elements1
    shape = (f"a={el.a:.4f} au  e={el.e:.4f}  i={np.degrees(el.i):.3f} deg"
             if el is not None else "hyperbolic")
    anom = ("n/a" if sol.compat_anomaly is None
            else f"{sol.compat_anomaly:9.2e}")
    print(f"  [{i}] rho1={sol.rho1:.6f}  rho2={sol.rho2:.6f}  {shape}")
    print(f"      lenz residual {sol.lenz_residual:9.2e}   "
          f"compatibility (lenz, anomaly) = ({sol.compat_lenz:9.2e}, {anom})")

# --- compare against the ground truth --------------------------------------
# The synthesized attributables know nothing about range; recover the true
# topocentric ranges independently from the truth orbit and check that one
# candidate nails all four unknowns.

true_rho = []
for att in (att1, att2):
    s = synthetic_truth_state(truth, att, MU, C, eph)
    q, qdot = eph.state(att.tbar)
    coords = topocentric_coords(s.r, s.v, q, qdot)
    true_rho.append((coords[4], coords[5]))      # (rho, rhodot)

best = min(solutions, key=lambda s: abs(s.rho1 - true_rho[0][0]))
err = max(abs(best.rho1 - true_rho[0][0]) / true_rho[0][0],
          abs(best.rho2 - true_rho[1][0]) / true_rho[1][0],
          abs(best.rhodot1 - true_rho[0][1]) / abs(true_rho[0][1]),
          abs(best.rhodot2 - true_rho[1][1]) / abs(true_rho[1][1]))

print(f"\ntrue ranges:      rho1={true_rho[0][0]:.6f}  rho2={true_rho[1][0]:.6f}")
print(f"best candidate:   rho1={best.rho1:.6f}  rho2={best.rho2:.6f}")
print(f"worst relative error over (rho1, rho2, rhodot1, rhodot2): {err:.2e}")

el = best.elements1
print("\nrecovered elements vs truth:")
for name in ("a", "e", "i", "Omega", "omega"):
    got, want = getattr(el, name), getattr(truth, name)
    print(f"  {name:5s} {got:12.8f}   (truth {want:12.8f})")
