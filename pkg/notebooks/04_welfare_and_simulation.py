# %% [markdown]
# Which regime do consumers prefer, and does a simulation agree?

# %%
from pandora_market import MarketParams, consumer_welfare, posting_threshold, simulate_market

mu, c = 0.5, 0.1
print("n*:", posting_threshold(mu))
for n in range(2, 8):
    prm = MarketParams(n, mu, c)
    print(n, round(consumer_welfare(prm, "hidden"), 6), round(consumer_welfare(prm, "posted"), 6))

# %%
stats = simulate_market(MarketParams(5, mu, c), "posted", 200_000, master_seed=42)
print(f"surplus {stats.consumer_surplus:.5f} +/- {stats.consumer_surplus_se:.5f}")
print(f"profit  {stats.firm_profit:.5f} +/- {stats.firm_profit_se:.5f}")
