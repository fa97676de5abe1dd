# %% [markdown]
# Posted-information equilibrium: full disclosure and dispersed prices.
# Prints a plot-ready CSV of the price CDF.

# %%
import numpy as np

from pandora_market import MarketParams, posted_equilibrium, posted_price_cdf

prm = MarketParams(3, 0.5, 0.1)
prof = posted_equilibrium(prm)
lo, hi = prm.price_support
print(f"support [{lo:.4f}, {hi:.4f}], profit {prof.firm_profit:.4f}, welfare {prof.consumer_welfare:.4f}")

# %%
print("price,cdf")
for p in np.linspace(lo, hi, 11):
    print(f"{p:.6f},{posted_price_cdf(prm, p):.6f}")
