"""arclink: preliminary orbit linkage of two short observed arcs.

Two attributables (angles and angular rates, or angles and range/range-rate
for radar) taken at different epochs are linked into preliminary orbits by
equating the Kepler first integrals — angular momentum and a projection of
the Laplace-Lenz vector — yielding polynomial systems solved exactly.
"""

__version__ = "0.1.0"
