# %% [markdown]
# # The span-S inter-block interleaver
#
# Each bit of block i is first shuffled inside its block and then sent to
# block i-1, i or i+1 (for S = 1). This notebook shows the map on a toy
# stream and how far information travels after a few iterations.

# %%
import numpy as np

from ibptc.interleave import IbpiSpec, build_ibpi, dependency_cone

m = build_ibpi(IbpiSpec(L=12, S=1, P=3, intra="identity"), n_blocks=9)

# destination block of each position of block 5
print([m.forward(5, j)[0] for j in range(12)])

# %% [markdown]
# Post-permuted block 4 mixes bits from blocks 3, 4 and 5, four from each.

# %%
print(np.bincount(m.inv_block[4], minlength=9))

# %% [markdown]
# The blocks at either end have no neighbour on one side, so those bits
# stay at home. The map is still a bijection.

# %%
print("block 0 sends to", sorted(m.pre_targets(0)))
flat = np.sort((m.fwd_block * 12 + m.fwd_pos).ravel())
print("bijective:", np.array_equal(flat, np.arange(9 * 12)))

# %% [markdown]
# ## Dependency cone
#
# After I iterations the posterior of a block depends on 4SI + 1 blocks.

# %%
big = build_ibpi(IbpiSpec(L=400, S=1), n_blocks=41)
for iters in range(1, 6):
    print(iters, len(dependency_cone(big, 20, iters)))
