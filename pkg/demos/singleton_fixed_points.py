"""
How many fixed points can a one-state recursion have?
=====================================================

With a single state the utility recursion reduces to the scalar map
``T(f) = H(1, delta f + varpi)``. A zero or positive gain-loss term ``varpi``
always gives exactly one fixed point. A negative one can leave none, one or
two. We count them across ``varpi`` for both sides of unit elasticity.
"""

# %%
import numpy as np

from narrowframe.preferences import Preferences
from narrowframe.utility import analyze_singleton, singleton_closed_form

# %%
# Elasticity below one (rho > 1)
# -------------------------------
# Near the edge of the domain T is zero, so with negative varpi the identity
# line is either crossed twice or missed entirely.
prefs = Preferences(beta=0.5, rho=2.0, gamma=2.0)
for varpi in (0.1, 0.0, -0.05, -0.1, -0.2, -0.3):
    census = analyze_singleton(1.0, varpi, prefs)
    print(f"varpi {varpi:+.2f}: {census.n_roots} fixed point(s) {np.round(census.roots, 5)}")

# %%
# Elasticity above one (rho < 1)
# ------------------------------
# Here T starts at (1 - beta)^(1/(1 - rho)) at the domain edge. If that exceeds
# the edge the fixed point is unique. Otherwise we are back to zero or two.
prefs = Preferences(beta=0.9, rho=0.5, gamma=2.0)
edge = (1 - prefs.beta) ** (1 / (1 - prefs.rho))
for varpi in (0.0, -0.005, -0.0099, -0.02, -0.5):
    census = analyze_singleton(1.0, varpi, prefs)
    tag = "unique" if edge > -varpi else "edge below domain start"
    print(f"varpi {varpi:+.4f}: {census.n_roots} fixed point(s) ({tag})")

# %%
# With no framing the fixed point has a closed form.
prefs = Preferences(beta=0.9, rho=0.5, gamma=2.0)
print("closed form:", singleton_closed_form(1.02, prefs))
print("census root:", analyze_singleton(1.02, 0.0, prefs).roots[0])
