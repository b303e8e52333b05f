"""IBPTC encoder, BPSK/AWGN channel and the variable-termination-time decoder."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import codec
from .codec import (LLR_MAX, OPEN, ZERO_TAIL, AppInput, CrcSpec, TrellisSpec, app_decode, crc_encode,
                    hard_decide, rsc_encode, saturate)
from .errors import ConfigError
from .interleave import (ROW_COLUMN, IbpiMapping, IbpiSpec, build_ibpi, deinterleave_block,
                         interleave_block)
from .memman import FREEZE, SKIP, MemoryLedger, MemoryManager
from .scheduler import ScheduleTable, build_zigzag
from .termination import FIXED, Kind, TtSpec, extended_et_scan, should_terminate, tt_round

IBPTC = "ibptc"
CTC = "ctc"

RNG_ALGORITHM = "Philox4x64-10 via numpy SeedSequence(seed, point, block)"


@dataclass(frozen=True)
class CodeConfig:
    L: int = 400
    crc: CrcSpec = field(default_factory=CrcSpec)
    trellis: TrellisSpec = field(default_factory=TrellisSpec)
    S: int = 1
    P: int | None = None
    intra: str = ROW_COLUMN
    mode: str = IBPTC
    termination: str = ZERO_TAIL
    rate_den: int = 3

    def __post_init__(self):
        if self.mode not in (IBPTC, CTC):
            raise ConfigError(f"mode must be {IBPTC!r} or {CTC!r}")
        if self.mode == CTC and self.S != 0:
            raise ConfigError("CTC mode forces S = 0")
        if self.termination not in (OPEN, ZERO_TAIL):
            raise ConfigError(f"termination must be {OPEN!r} or {ZERO_TAIL!r}")
        if self.k_data < 1:
            raise ConfigError(
                f"block length L={self.L} leaves no data bits after K_CRC={self.crc.k} "
                f"and a {self.n_tail}-bit tail"
            )
        if self.rate_den != 3:
            raise ConfigError("only the rate-1/3 code is supported")

    @property
    def n_tail(self) -> int:
        """Zero bits padded after the CRC so the end of each block is protected."""
        return self.trellis.memory if self.termination == ZERO_TAIL else 0

    @property
    def k_data(self) -> int:
        return self.L - self.crc.k - self.n_tail

    @property
    def ibpi(self) -> IbpiSpec:
        return IbpiSpec(self.L, self.S, self.P, self.intra)

    def mapping(self, n_blocks: int) -> IbpiMapping:
        return build_ibpi(self.ibpi, n_blocks)

    def as_ctc(self, L: int | None = None) -> "CodeConfig":
        return replace(self, mode=CTC, S=0, P=None, L=self.L if L is None else L)


@dataclass(frozen=True)
class ChannelConfig:
    ebn0_db: float = 1.0
    rate: float = 1.0 / 3.0
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.rate <= 1:
            raise ConfigError("code rate must lie in (0, 1]")

    @property
    def sigma2(self) -> float:
        return 1.0 / (2.0 * self.rate * 10.0 ** (self.ebn0_db / 10.0))


@dataclass(frozen=True)
class DecoderConfig:
    iterations: int = 15
    d_max: int = 30
    m_max: int | None = None
    n_adus: int = 1
    tt: TtSpec = field(default_factory=TtSpec)
    policy: str = FREEZE
    exact: bool = True

    @property
    def r_max(self) -> int:
        return 2 * self.iterations

    @property
    def round_cap(self) -> int:
        cap = min(self.r_max, self.d_max)
        if self.tt.family == FIXED:
            cap = min(cap, self.tt.fixed)
        return cap


def block_rng(seed: int, point: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, point, block])))


def random_data(n_blocks: int, code: CodeConfig, seed: int = 0, point: int = 0) -> np.ndarray:
    out = np.empty((n_blocks, code.k_data), dtype=np.uint8)
    for b in range(n_blocks):
        out[b] = block_rng(seed, point, 2 * b).integers(0, 2, code.k_data, dtype=np.uint8)
    return out


@dataclass
class CodedStream:
    z1: np.ndarray  # CRC-coded systematic blocks W
    z2: np.ndarray  # parity of W
    z3: np.ndarray  # parity of the IBPI-permuted W'

    @property
    def n_bits(self) -> int:
        return self.z1.size + self.z2.size + self.z3.size


def encode_stream(data, code: CodeConfig, mapping: IbpiMapping | None = None) -> CodedStream:
    """CRC-encode each data block, then turbo-encode the stream.

    With zero-tail termination each CRC codeword is followed by ``memory``
    zero bits (still a CRC codeword, as ``c(x) x^n`` is divisible by
    ``g(x)``). Each component encoder restarts from state 0 at every block;
    the trellis is not forced back to state 0.
    """
    data = np.atleast_2d(np.asarray(data, dtype=np.uint8))
    if data.shape[1] != code.k_data:
        raise ConfigError(f"data blocks must have L - K_CRC = {code.k_data} bits")
    B = data.shape[0]
    mapping = mapping or code.mapping(B)
    w = crc_encode(data, code.crc)
    if code.n_tail:
        w = np.concatenate([w, np.zeros((B, code.n_tail), dtype=np.uint8)], axis=1)
    wp = mapping.interleave_stream(w)
    z2 = np.empty_like(w)
    z3 = np.empty_like(w)
    for b in range(B):
        z2[b] = rsc_encode(w[b], code.trellis)[0]
        z3[b] = rsc_encode(wp[b], code.trellis)[0]
    return CodedStream(w, z2, z3)


@dataclass
class Received:
    y1: np.ndarray
    y2: np.ndarray
    y3: np.ndarray


def transmit(z: CodedStream, channel: ChannelConfig, point: int = 0) -> Received:
    """BPSK over AWGN; returns channel LLRs ``2y/sigma^2`` per stream.

    Noise for block ``b`` comes from its own counter-based generator, so the
    result depends only on ``(seed, point, b)``.
    """
    sigma2 = channel.sigma2
    sigma = np.sqrt(sigma2)
    out = []
    B, L = z.z1.shape
    noise = np.empty((B, 3, L))
    for b in range(B):
        noise[b] = block_rng(channel.seed, point, 2 * b + 1).standard_normal((3, L))
    for s, zs in enumerate((z.z1, z.z2, z.z3)):
        y = (1.0 - 2.0 * zs) + sigma * noise[:, s, :]
        out.append(np.clip(2.0 * y / sigma2, -LLR_MAX, LLR_MAX))
    return Received(*out)


@dataclass
class BlockRecord:
    block: int
    drs: int
    kind: str
    decisions: np.ndarray
    bit_errors: int | None = None
    block_error: bool | None = None


@dataclass
class DecodeResult:
    decisions: np.ndarray
    records: list
    executed: set
    mu_high_water: float
    forced: int
    schedule: ScheduleTable
    ledger_events: int = 0

    @property
    def avg_dr(self) -> float:
        return float(np.mean([r.drs for r in self.records]))

    def kinds(self) -> dict:
        out: dict = {}
        for r in self.records:
            out[r.kind] = out.get(r.kind, 0) + 1
        return out


class StreamDecoder:
    """Runs the zigzag schedule cycle by cycle over one received stream.

    Per DR: memory check, Log-MAP pass, scatter through the interleaver,
    termination test, extended-ET scan and memory release. Terminated blocks
    feed their neighbours saturated LLRs (or, for forced terminations under
    the freeze policy, their last soft values).
    """

    def __init__(self, rx: Received, code: CodeConfig, dec: DecoderConfig,
                 truth: np.ndarray | None = None, mapping: IbpiMapping | None = None,
                 audit: bool = False):
        if dec.tt.family == "genie" and truth is None:
            raise ConfigError("genie termination test needs the transmitted blocks")
        if dec.n_adus < 1 or dec.iterations < 1 or dec.d_max < 1:
            raise ConfigError("iterations, d_max and n_adus must be >= 1")
        self.code, self.dec = code, dec
        self.y1, self.y2, self.y3 = rx.y1.copy(), rx.y2, rx.y3
        self.B, self.L = self.y1.shape
        if code.n_tail:
            # padding bits are known zeros
            self.y1[:, self.L - code.n_tail:] = LLR_MAX
        self.truth = truth
        self.map = mapping or code.mapping(self.B)
        self.cap = dec.round_cap
        self.schedule = build_zigzag(self.B, self.cap, code.S, dec.n_adus)
        self.audit = audit

        self.post_sys = self.map.interleave_stream(self.y1)
        self.post_apri = np.zeros((self.B, self.L))
        self.pre_apri = np.zeros((self.B, self.L))
        self.last_ext = np.zeros((self.B, self.L))
        self.face_round = np.zeros(self.B, dtype=np.int64)
        self.states: dict = {}
        self.executed: set = set()
        self.ledger = MemoryLedger(dec.m_max, code.rate_den, audit=audit)
        self.mem = MemoryManager(self.ledger, self.states, self.map.post_sources,
                                 self.map.pre_targets, code.S, self._terminate, dec.policy)

    # ---------------------------------------------------------- helpers

    def _app(self, sys, par, apri, termination=OPEN):
        return app_decode(AppInput(sys, par, apri, self.code.trellis, termination),
                          exact=self.dec.exact)

    def _truth(self, b):
        return None if self.truth is None else self.truth[b]

    def _terminate(self, b: int, kind: Kind, freeze: bool):
        """Fix block ``b``'s decisions and rewrite its contribution downstream."""
        st = self.states[b]
        post = st.posterior if st.posterior is not None else self.y1[b]
        if kind != Kind.EXTENDED or st.decisions is None:
            st.decisions = hard_decide(post)
        st.kind = kind
        if freeze:
            frozen = self.y1[b] + self.last_ext[b]
        else:
            frozen = saturate(st.decisions)
        interleave_block(frozen, b, self.map, self.post_apri)
        interleave_block(0.0, b, self.map, self.post_sys)
        # rule (a): post-permuted blocks fed only by terminated blocks retire
        extended_et_scan(self.states, self.map, self.dec.tt, candidates=self.map.pre_targets(b))

    def _regular(self, b: int, kind: Kind):
        self._terminate(b, kind, False)
        self.mem.release_on_termination(b)

    def _check(self, b: int | None = None):
        if self.audit:
            self.ledger.check()
        if b is not None and self.states[b].drs > self.dec.d_max:
            raise AssertionError(f"block {b} exceeded D_max")

    # ------------------------------------------------------------ rounds

    def _pre_round(self, b: int, r: int):
        st = self.states[b]
        ext, post = self._app(self.y1[b], self.y2[b], self.pre_apri[b], self.code.termination)
        st.drs += 1
        st.posterior = post
        self.last_ext[b] = ext
        tt = self.dec.tt
        if tt.family != FIXED:
            _, st.tt_state = tt_round(tt, st.tt_state, post, "pre", self._truth(b))
            if should_terminate(tt, st.tt_state):
                st.decisions = hard_decide(post)
                self._regular(b, Kind.REGULAR)
                return
        interleave_block(ext, b, self.map, self.post_apri)
        if r >= self.cap:
            self.mem.forced_et(b, Kind.DMAX)

    def _post_round(self, i: int, r: int):
        st = self.states[i]
        ext, _ = self._app(self.post_sys[i], self.y3[i], self.post_apri[i])
        st.drs += 1
        self.face_round[i] = r
        deinterleave_block(ext, i, self.map, self.pre_apri)

        filled = {}
        for j in sorted(self.map.post_sources(i)):
            sj = self.states.get(j)
            if sj is None or not sj.active:
                continue
            if all(self.face_round[f] == r for f in self.map.pre_targets(j)):
                sj.posterior = np.clip(self.y1[j] + self.last_ext[j] + self.pre_apri[j],
                                       -LLR_MAX, LLR_MAX)
                filled[j] = sj.posterior
        if not filled:
            return
        events = extended_et_scan(self.states, self.map, self.dec.tt, filled, self.truth,
                                  candidates=())
        for ev in events:
            self._regular(ev.block, Kind.EXTENDED)
        if r >= self.cap:
            for j in filled:
                if self.states[j].active:
                    self.mem.forced_et(j, Kind.DMAX)

    # --------------------------------------------------------------- run

    def run(self) -> DecodeResult:
        for _, slots in self.schedule.by_cycle():
            for slot in slots:
                b, r = slot.dr.block - 1, slot.dr.round
                orient = slot.dr.orientation
                if r == 1:
                    self.mem.admit_block(b)
                    self._check()
                if self.mem.ensure_dr_space(b, orient) == SKIP:
                    continue
                self.executed.add(slot.dr)
                if orient == "pre":
                    self._pre_round(b, r)
                else:
                    self._post_round(b, r)
                self._check(b)
        # anything still open (e.g. fixed test with an odd cap) ends at the limit
        for b in sorted(self.states):
            if self.states[b].active:
                self.mem.forced_et(b, Kind.DMAX)
        self._check()
        return self._result()

    def _result(self) -> DecodeResult:
        decisions = np.zeros((self.B, self.L), dtype=np.uint8)
        records = []
        k = self.code.k_data
        for b in range(self.B):
            st = self.states[b]
            decisions[b] = st.decisions
            rec = BlockRecord(b, st.drs, Kind(st.kind).value, st.decisions.copy())
            if self.truth is not None:
                errs = int(np.count_nonzero(st.decisions[:k] != self.truth[b][:k]))
                rec.bit_errors = errs
                rec.block_error = bool(np.any(st.decisions != self.truth[b]))
            records.append(rec)
        return DecodeResult(decisions, records, self.executed, self.ledger.high_water,
                            len(self.mem.forced), self.schedule, self.ledger.events)


def decode_stream(rx: Received, code: CodeConfig, dec: DecoderConfig, truth=None,
                  audit: bool = False) -> DecodeResult:
    return StreamDecoder(rx, code, dec, truth, audit=audit).run()


def decode_ctc(rx: Received, code: CodeConfig, dec: DecoderConfig, truth=None,
               audit: bool = False) -> DecodeResult:
    """Classic turbo decoding: every block on its own (span 0)."""
    if code.mode != CTC:
        raise ConfigError("decode_ctc needs a CTC-mode code configuration")
    return StreamDecoder(rx, code, dec, truth, audit=audit).run()
