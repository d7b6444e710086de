#!/usr/bin/env python3
"""Tell genuine linkages apart from spurious ones under realistic noise.

The all-optical linkage routinely returns more than one candidate orbit:
the polynomial system has extra roots that satisfy both conservation
equalities yet belong to no real body.  The discriminator is the
identification penalty chi4: propagate candidate 1 (with its full
covariance) to the second epoch, predict the attributable there, and take
the Mahalanobis distance to what was actually observed.  Genuine linkages
score order-one; spurious ones score astronomically.
"""

import numpy as np

from arclink.attributables import (NoiseSpec, circular_observer,
                                   synthesize_optical_attributable)
from arclink.config import RunConfig
from arclink.constants import ARCSEC_RAD
from arclink.covariance import AttributablePair, attach_covariances
from arclink.kepler import CartesianState, KeplerianElements
from arclink.optical import link_optical
from arclink.selection import element_covariance, select_solutions

config = RunConfig()
MU = config.mu_value
C = config.units.c_light
rng = np.random.default_rng(1)

# --- noisy synthetic observations ------------------------------------------
# 0.5 arcsec on angles, 0.5 arcsec/day on rates: decent survey astrometry.
# NoiseSpec both perturbs the values and attaches the 4x4 covariance that
# the selection stage consumes.  This particular geometry is chosen because
# it genuinely produces three candidates.

truth = KeplerianElements(a=1.8292, e=0.3128, i=0.4619, Omega=0.5306,
                          omega=2.6126, ell=0.2615, epoch=53000.0)
eph = circular_observer(1.0, MU, phase=0.908)
t1, t2 = 52998.8, 53101.4
noise = NoiseSpec(sigma_angle=0.5 * ARCSEC_RAD, sigma_rate=0.5 * ARCSEC_RAD,
                  apply=True)

att1 = synthesize_optical_attributable(truth, eph, t1, MU, C, noise, rng)
att2 = synthesize_optical_attributable(truth, eph, t2, MU, C, noise, rng)
obs1 = CartesianState(*eph.state(t1), t1)
obs2 = CartesianState(*eph.state(t2), t2)

solutions = link_optical(att1, att2, obs1, obs2, config)
print(f"{len(solutions)} candidate(s) survive the conservation screen")

# --- covariance attachment --------------------------------------------------
# Each candidate solves Psi(unknowns; attributables) = 0, so the implicit
# function theorem maps the 8x8 attributable covariance to a covariance of
# the four recovered unknowns, and on to Cartesian states and elements.

pair = AttributablePair(att1, att2)
for sol in solutions:
    attach_covariances(pair, sol, obs1, obs2, config)

accepted = select_solutions(solutions, att2, obs2, config=config)

print(f"\n{'cand':>4} {'rho1 (au)':>12} {'a (au)':>10} {'e':>8} "
      f"{'sigma(a)':>10} {'chi4':>12}  verdict")
for i, sol in enumerate(solutions):
    el = sol.elements1
    if el is None or sol.unselectable:
        print(f"{i:>4} {sol.rho1:>12.6f} {'--':>10} {'--':>8} {'--':>10} "
              f"{'--':>12}  unselectable (non-elliptic or singular)")
        continue
    sig_a = np.sqrt(element_covariance(sol, MU)[0, 0])
    verdict = "ACCEPTED" if sol.selected else "rejected"
    print(f"{i:>4} {sol.rho1:>12.6f} {el.a:>10.4f} {el.e:>8.4f} "
          f"{sig_a:>10.2e} {sol.chi4:>12.4g}  {verdict}")

print(f"\nchi4 threshold: {config.chi4_threshold}")
print(f"accepted: {len(accepted)} of {len(solutions)}")

# --- the margin --------------------------------------------------------------
# The rejected elliptic candidate is not marginally worse -- it misses the
# second-epoch attributable by many thousands of sigmas.

best = min(accepted, key=lambda s: s.chi4)
worst = max((s.chi4 for s in solutions
             if s.chi4 is not None and not s.selected), default=None)
el = best.elements1
print(f"\nbest accepted orbit: a={el.a:.4f} au (truth {truth.a}), "
      f"e={el.e:.4f} (truth {truth.e}), chi4={best.chi4:.3f}")
if worst is not None:
    print(f"spurious-to-genuine chi4 ratio: {worst / best.chi4:.3g}")
