# %% [markdown]
# # Decoding with finite memory
#
# Every live block holds 4 memory units (MUs): its systematic and parity
# samples, the parity of its interleaved copy and one for extrinsic values.
# When a new block arrives and fewer than 3 MUs are free, the oldest block
# is forced to stop.

# %%
from ibptc.pipeline import CodeConfig, DecoderConfig
from ibptc.sim import RunConfig, simulate_point

code = CodeConfig(L=400, S=1)

# %% [markdown]
# At 1.0 dB the hybrid test keeps a block busy for about 6 to 7 rounds, so
# roughly 28 MUs are in use on average. Limits near that figure force many
# terminations; somewhere around 40 MUs the limit stops mattering.

# %%
print("M_max   BER        forced   avg DR   peak MUs")
for m_max in (20, 30, 38, 42, 50, None):
    cfg = RunConfig(code=code, decoder=DecoderConfig(m_max=m_max), blocks_per_run=500, seed=1)
    s = simulate_point(cfg, 1.0)
    label = "inf" if m_max is None else m_max
    print(f"{label!s:>5}  {s.ber:9.2e}  {s.forced:6d}   {s.avg_dr:6.2f}   {s.mu_high_water}")

# %% [markdown]
# The two forced-termination policies: `freeze` keeps the stopped block's
# soft values for its neighbours, `harden` replaces them with hard
# decisions and also stops the right neighbour.

# %%
for policy in ("freeze", "harden"):
    cfg = RunConfig(code=code, decoder=DecoderConfig(m_max=30, policy=policy), blocks_per_run=500,
                    seed=1)
    s = simulate_point(cfg, 1.0)
    print(f"{policy:7s} BER {s.ber:.2e} forced {s.forced}")
