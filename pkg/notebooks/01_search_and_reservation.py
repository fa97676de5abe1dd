# %% [markdown]
# Consumer search with Pandora's rule.
# A firm's signal is a distribution over posterior match values; the
# consumer ranks unvisited firms by reservation value and stops once a
# sampled offer beats everything left.

# %%
import numpy as np

from pandora_market import full_info, make_binary_posterior, no_info, pandora_search, reservation_value, static_winner

mu, c = 0.5, 0.1

# %%
# more informative signals raise the index at a given price
for name, F in [("none", no_info(mu)), ("binary 0.2/0.8", make_binary_posterior(0.2, 0.8, mu)), ("full", full_info(mu))]:
    print(f"{name:>15}: U at p=0 is {reservation_value(F, 0.0, c):.4f}")

# %%
# sequential search and the one-shot rule "buy the best min(x - p, U)" pick the same firm
rng = np.random.default_rng(0)
U = np.array([0.6, 0.45, 0.3])
x = np.array([0.1, 0.5, 0.9])
out = pandora_search(U, x, c)
print("visited", out.visit_order, "bought", out.purchase, "static", static_winner(np.minimum(x, U)))
