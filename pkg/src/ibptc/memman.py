"""Memory-unit (MU) accounting and forced early terminations.

One MU stores a block-length vector of received samples or extrinsic values.
A live block holds ``M_R`` category-I MUs (``M_R - 1`` for the pre-permuted
systematic/parity samples, one for the post-permuted parity ``Y^3``) plus one
category-II MU for its extrinsic values, allocated on its first DR.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError, LedgerError
from .termination import Kind, TtState

FREEZE = "freeze"
HARDEN = "harden"

PROCEED = "proceed"
SKIP = "skip"


@dataclass
class BlockState:
    block: int
    drs: int = 0
    kind: Kind = Kind.ACTIVE
    decisions: np.ndarray | None = None
    tt_state: TtState = field(default_factory=TtState)
    post_retired: bool = False
    posterior: np.ndarray | None = None

    @property
    def active(self) -> bool:
        return self.kind == Kind.ACTIVE


@dataclass
class Holding:
    pre: int = 0  # Y^1, Y^2
    post: int = 0  # Y^3
    ext: int = 0
    ext_done: bool = False  # category-II MU already allocated once

    @property
    def total(self) -> int:
        return self.pre + self.post + self.ext


class MemoryLedger:
    """MU counters. ``m_max=None`` means unconstrained memory."""

    def __init__(self, m_max: int | None = None, m_r: int = 3, word_bits: int = 8,
                 audit: bool = False):
        if m_r < 2:
            raise ConfigError("M_R must be at least 2 (systematic + parity)")
        if m_max is not None and m_max < m_r + 1:
            raise ConfigError(f"m_max={m_max} cannot hold one block ({m_r} + 1 MUs)")
        self.m_max = math.inf if m_max is None else int(m_max)
        self.m_r = m_r
        self.word_bits = word_bits
        self.free = self.m_max
        self.in_use = 0
        self.held: dict[int, Holding] = {}
        self.high_water = 0
        self.events = 0
        self.audit = audit

    def check(self):
        """Assert conservation: allocations + M_F = M_max."""
        used = sum(h.total for h in self.held.values())
        if used != self.in_use or used + self.free != self.m_max or self.free < 0:
            raise LedgerError(f"ledger out of balance: used={used} free={self.free} max={self.m_max}")

    def _take(self, n: int):
        if n > self.free:
            raise LedgerError(f"allocating {n} MUs with only {self.free} free")
        self.free -= n
        self.in_use += n
        self.high_water = max(self.high_water, self.in_use)
        self._event()

    def _give(self, n: int):
        self.free += n
        self.in_use -= n
        self._event()

    def _event(self):
        self.events += 1
        if self.audit:
            self.check()
            if self.high_water > self.m_max:
                raise LedgerError(f"high-water mark {self.high_water} exceeds m_max={self.m_max}")

    def allocate_block(self, b: int):
        if b in self.held:
            raise LedgerError(f"block {b} admitted twice")
        if self.m_r > self.free:
            raise LedgerError(f"admitting block {b} with only {self.free} free MUs")
        self.held[b] = Holding(pre=self.m_r - 1, post=1)
        self._take(self.m_r)

    def allocate_ext(self, b: int):
        h = self.held[b]
        if h.ext_done:
            raise LedgerError(f"block {b} already received its extrinsic MU")
        if self.free < 1:
            raise LedgerError(f"no free MU for block {b}'s extrinsic values")
        h.ext, h.ext_done = 1, True
        self._take(1)

    def release(self, b: int, part: str) -> int:
        h = self.held.get(b)
        n = getattr(h, part) if h is not None else 0
        if n == 0:
            raise LedgerError(f"double release of {part} MUs for block {b}")
        setattr(h, part, 0)
        if h.total == 0:
            del self.held[b]
        self._give(n)
        return n

    def holds(self, b: int, part: str) -> bool:
        h = self.held.get(b)
        return h is not None and getattr(h, part) > 0


@dataclass
class ForcedRecord:
    target: int
    kind: Kind
    hardened: list = field(default_factory=list)


class MemoryManager:
    """Admission, per-DR space checks and forced terminations.

    ``terminate(block, kind, freeze)`` is supplied by the decoder: it fixes
    the block's decisions and rewrites what the block contributes to its
    neighbours (frozen soft values when ``freeze`` is true, saturated hard
    decisions otherwise). The manager owns the memory side.
    """

    def __init__(self, ledger: MemoryLedger, states: dict, sources: Callable[[int], frozenset],
                 targets: Callable[[int], frozenset], S: int,
                 terminate: Callable[[int, Kind, bool], None], policy: str = FREEZE):
        if policy not in (FREEZE, HARDEN):
            raise ConfigError(f"unknown forced-ET policy {policy!r}")
        self.ledger = ledger
        self.states = states
        self.sources = sources
        self.targets = targets
        self.S = S
        self.terminate = terminate
        self.policy = policy
        self.forced: list[ForcedRecord] = []

    def most_ancient(self) -> int | None:
        live = [b for b, st in self.states.items() if st.active]
        return min(live) if live else None

    def admit_block(self, b: int) -> list[ForcedRecord]:
        """Move block ``b`` into category-I storage, forcing ETs while ``M_F < M_R``."""
        out = []
        while self.ledger.free < self.ledger.m_r:
            if self.most_ancient() is None:
                raise LedgerError(
                    f"no unterminated block to discard while admitting block {b}; "
                    f"m_max={self.ledger.m_max} is too small for span {self.S}"
                )
            out.append(self.forced_et())
        self.ledger.allocate_block(b)
        self.states[b] = BlockState(b)
        return out

    def ensure_dr_space(self, b: int, orientation: str) -> str:
        """``"skip"`` if the DR is not needed, else make room and ``"proceed"``."""
        st = self.states[b]
        if orientation == "pre" and not st.active:
            return SKIP
        if orientation == "post" and st.post_retired:
            return SKIP
        if orientation == "pre" and not self.ledger.held[b].ext_done:
            while self.ledger.free < 1:
                self.forced_et()
            if not st.active:
                return SKIP
            self.ledger.allocate_ext(b)
        return PROCEED

    def forced_et(self, target: int | None = None, kind: Kind = Kind.FORCED) -> ForcedRecord:
        """Give up on ``target`` (default: the most ancient unterminated block)."""
        if target is None:
            target = self.most_ancient()
        if target is None or not self.states[target].active:
            raise LedgerError("forced ET requested with no unterminated target")
        rec = ForcedRecord(target, kind)
        harden = self.policy == HARDEN
        self.terminate(target, kind, not harden)
        self.release_on_termination(target)
        if harden:
            for j in range(target + 1, target + self.S + 1):
                st = self.states.get(j)
                if st is not None and st.active:
                    self.terminate(j, Kind.FORCED, False)
                    self.release_on_termination(j, keep_ext=True)
                    rec.hardened.append(j)
        self.forced.append(rec)
        return rec

    def release_on_termination(self, b: int, keep_ext: bool = False) -> int:
        """Free what a newly terminated block no longer needs; returns MUs freed."""
        freed = 0
        led = self.ledger
        if led.holds(b, "ext") and not keep_ext:
            freed += led.release(b, "ext")
        freed += led.release(b, "pre")
        for j in self.targets(b):
            freed += self._release_post(j)
        return freed

    def _release_post(self, j: int) -> int:
        led = self.ledger
        if not led.holds(j, "post"):
            return 0
        if all(i in self.states and not self.states[i].active for i in self.sources(j)):
            freed = led.release(j, "post")
            if led.holds(j, "ext"):
                freed += led.release(j, "ext")
            return freed
        return 0
