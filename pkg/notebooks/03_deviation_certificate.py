# %% [markdown]
# Checking that no firm gains by deviating from the posted equilibrium.
# The majorizing line bounds every payoff-in-effective-value curve, and a
# brute-force search over prices and binary/ternary signals confirms it.

# %%
import numpy as np

from pandora_market import MarketParams, best_deviation_search, deviation_payoff, majorizing_line

prm = MarketParams(2, 0.5, 0.1)
p = 0.5
slope, intercept = majorizing_line(prm, p)
w = np.linspace(-p, prm.u_high - p, 9)
for wi, pi in zip(w, deviation_payoff(prm, p, w)):
    print(f"w={wi:+.3f}  payoff={pi:.4f}  line={slope * wi + intercept:.4f}")

# %%
rep = best_deviation_search(prm, include_ternary=True)
print(rep.to_record())
