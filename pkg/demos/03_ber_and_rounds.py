# %% [markdown]
# # BER and average decoding rounds
#
# A short sweep of the L=400, S=1 code with the hybrid CRC + sign test
# (two rounds), against a classic turbo code of twice the block length.
# Runs take about half a minute; raise `BLOCKS` for smoother numbers.

# %%
from ibptc.pipeline import CTC, CodeConfig, DecoderConfig
from ibptc.sim import RunConfig, simulate_point
from ibptc.termination import TtSpec

BLOCKS = 300
sweep = (0.4, 0.6, 0.8, 1.0)

ibptc = RunConfig(code=CodeConfig(L=400, S=1), decoder=DecoderConfig(), blocks_per_run=BLOCKS)
ctc = RunConfig(code=CodeConfig(L=800, S=0, mode=CTC), decoder=DecoderConfig(),
                blocks_per_run=BLOCKS // 2)

# %%
print(" Eb/N0   IBPTC BER   avg DR    CTC BER   avg DR")
for p, e in enumerate(sweep):
    a = simulate_point(ibptc, e, p)
    b = simulate_point(ctc, e, p)
    print(f"{e:6.2f}  {a.ber:10.2e}  {a.avg_dr:6.2f}  {b.ber:10.2e}  {b.avg_dr:6.2f}")

# %% [markdown]
# ## Which test?
#
# A single CRC round lets wrong blocks through. Their saturated wrong
# values then slow the neighbouring blocks down, so it is not even cheap.
# The genie test shows the best any test could do.

# %%
for tt in ("crc:1", "sign:2", "hybrid:2", "genie"):
    cfg = RunConfig(code=CodeConfig(L=400, S=1), decoder=DecoderConfig(tt=TtSpec.parse(tt)),
                    blocks_per_run=BLOCKS)
    s = simulate_point(cfg, 0.6)
    print(f"{tt:9s} BER {s.ber:.2e}  avg DR {s.avg_dr:.2f}  undetected {s.undetected}")
