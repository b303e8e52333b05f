# %% [markdown]
# # Zigzag schedules and decoding delay
#
# Seven blocks, two iterations (four decoding rounds) and a single decoder.
# Block b's round r may only start once rounds r-1 of b-1, b and b+1 are done.

# %%
from ibptc.scheduler import build_zigzag, classic_schedule, latency_profile, schedule_matrix

ib = build_zigzag(n_blocks=7, r_max=4, S=1, n_adus=1)
print(schedule_matrix(ib))  # rows: rounds 1..4, columns: blocks 1..7

# %% [markdown]
# The first block needs N(1+2N) = 10 cycles, later ones follow 2N = 4
# cycles apart and the last few arrive 3, 2, 1 cycles apart.

# %%
p = latency_profile(ib)
print("IBPTC completion", p.completion, "FBDD", p.fbdd, "IBDD", p.ibdd)

# %% [markdown]
# A classic turbo code decodes one block at a time: the first block is out
# after 4 cycles, but the whole stream still takes 28.

# %%
c = latency_profile(classic_schedule(7, 4))
print("CTC   completion", c.completion, "TDD", c.tdd)

# %% [markdown]
# More decoders shorten the total delay.

# %%
for adus in (1, 2, 3, 4):
    print(adus, "ADUs -> TDD", latency_profile(build_zigzag(7, 4, 1, adus)).tdd)
