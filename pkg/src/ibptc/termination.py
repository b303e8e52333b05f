"""Termination tests (TTs) and early-termination bookkeeping.

A test string such as ``"hybrid:2"`` means: stop a block once its decisions
pass the hybrid CRC + sign test in two consecutive rounds. The short
labels T1.m / T2.m / T3.m map to ``crc:m`` / ``sign:m`` / ``hybrid:m``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .codec import PRE, CrcSpec, crc_check, hard_decide
from .errors import ConfigError

CRC = "crc"
SIGN = "sign"
HYBRID = "hybrid"
GENIE = "genie"
FIXED = "fixed"
FAMILIES = (CRC, SIGN, HYBRID, GENIE, FIXED)

SHORT_LABELS = {"T1": CRC, "T2": SIGN, "T3": HYBRID}


class Kind(str, Enum):
    ACTIVE = "active"
    REGULAR = "regular"
    EXTENDED = "extended"
    FORCED = "forced"
    DMAX = "dmax"


@dataclass(frozen=True)
class TtSpec:
    family: str = HYBRID
    m: int = 2
    fixed: int = 0
    crc: CrcSpec = field(default_factory=CrcSpec)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown termination test family {self.family!r}")
        if self.family == FIXED:
            if self.fixed < 1:
                raise ConfigError("fixed test needs a positive DR count")
        elif self.m < 1:
            raise ConfigError("termination test needs m >= 1 rounds")

    @classmethod
    def parse(cls, text: str, crc: CrcSpec | None = None) -> "TtSpec":
        """Parse ``"crc:3"``, ``"sign:5"``, ``"hybrid:2"``, ``"genie"``, ``"fixed:30"`` or ``"T3.2"``."""
        crc = crc or CrcSpec()
        t = text.strip()
        if t[:2] in SHORT_LABELS and "." in t:
            fam, m = SHORT_LABELS[t[:2]], t.split(".", 1)[1]
            return cls(fam, int(m), crc=crc)
        fam, _, arg = t.lower().partition(":")
        if fam == GENIE:
            return cls(GENIE, 1, crc=crc)
        if not arg:
            raise ConfigError(f"termination test {text!r} needs a count, e.g. {fam}:2")
        try:
            n = int(arg)
        except ValueError:
            raise ConfigError(f"bad round count in termination test {text!r}") from None
        if fam == FIXED:
            return cls(FIXED, 1, fixed=n, crc=crc)
        return cls(fam, n, crc=crc)

    def __str__(self):
        if self.family == GENIE:
            return GENIE
        if self.family == FIXED:
            return f"{FIXED}:{self.fixed}"
        return f"{self.family}:{self.m}"


@dataclass
class TtState:
    streak: int = 0
    previous: np.ndarray | None = None
    rounds: int = 0


def tt_round(spec: TtSpec, state: TtState, posterior, orientation: str = PRE, truth=None):
    """Run one test round on a posterior in pre-permuted (data) order.

    Returns ``(passed, new_state)``; ``state`` is not modified. A CRC-based
    round on a post-permuted vector is not feasible and returns ``False``
    without consuming a round.

    The streak of a sign or hybrid test is the length of the current run of
    identical (and, for hybrid, CRC-valid) decision vectors, so ``sign:3``
    stops on the third of three identical rounds.
    """
    if spec.family == GENIE and truth is None:
        raise ConfigError("genie termination test needs the transmitted bits")
    uses_crc = spec.family in (CRC, HYBRID)
    if uses_crc and orientation != PRE:
        return False, state
    bits = hard_decide(posterior)
    # sign-based streaks count a run of identical decision vectors: the
    # first vector of a run has nothing to disagree with, so a change of
    # decisions restarts the run at 1 rather than 0
    same = state.previous is not None and np.array_equal(bits, state.previous)
    fresh = 1
    if spec.family == CRC:
        ok = crc_check(bits, spec.crc)
    elif spec.family == SIGN:
        ok = same or state.previous is None
    elif spec.family == HYBRID:
        valid = crc_check(bits, spec.crc)
        ok = valid and (same or state.previous is None)
        fresh = int(valid)
    elif spec.family == GENIE:
        ok = np.array_equal(bits, np.asarray(truth, dtype=np.uint8))
    else:
        ok = False
    if ok:
        streak = min(state.streak + 1, spec.m)
    elif spec.family in (SIGN, HYBRID):
        streak = fresh
    else:
        streak = 0
    return bool(ok), TtState(streak, bits, state.rounds + 1)


def should_terminate(spec: TtSpec, state: TtState) -> bool:
    if spec.family == FIXED:
        return state.rounds >= spec.fixed
    return state.streak >= spec.m


@dataclass
class ExtendedEvent:
    block: int
    face: str  # "pre": data block terminated, "post": post-permuted DRs retired
    rule: str  # "a": filled by terminated blocks, "b": filled content passed the TT


def extended_et_scan(states, mapping, tt: TtSpec, filled=None, truth=None, candidates=None):
    """Extended early terminations after a scatter.

    ``states`` maps block id to objects with ``kind``,
    ``tt_state`` and ``post_retired`` attributes (0-based ids). Rule (a)
    retires post-permuted block ``i`` once every block contributing to it is
    terminated. Rule (b) runs a test round on each entry of ``filled``
    (block id -> freshly de-interleaved posterior in pre order) and
    terminates blocks that reach the streak threshold. ``candidates``
    restricts the rule (a) sweep to the given post-permuted blocks. Block
    states are updated in place; the new events are returned.
    """
    events = []
    for i, post in (filled or {}).items():
        st = states[i]
        if st.kind != Kind.ACTIVE:
            continue
        t = None if truth is None else truth[i]
        _, st.tt_state = tt_round(tt, st.tt_state, post, PRE, t)
        if tt.family != FIXED and should_terminate(tt, st.tt_state):
            st.kind = Kind.EXTENDED
            st.decisions = hard_decide(post)
            events.append(ExtendedEvent(i, "pre", "b"))
    for i in sorted(states if candidates is None else candidates):
        st = states.get(i)
        if st is None:
            continue
        if st.post_retired:
            continue
        srcs = mapping.post_sources(i)
        if all(j in states and states[j].kind != Kind.ACTIVE for j in srcs):
            st.post_retired = True
            events.append(ExtendedEvent(i, "post", "a"))
    return events


@dataclass
class AuditCounts:
    correct: int = 0
    incorrect: int = 0
    forced: int = 0
    per_block: list = field(default_factory=list)


def false_termination_audit(records, truth) -> AuditCounts:
    """Classify each block's termination against the transmitted bits.

    ``records`` is a sequence of objects with ``kind`` and ``decisions``.
    Forced and D_max terminations are counted separately: they are not
    claims of correctness.
    """
    out = AuditCounts()
    for rec, t in zip(records, truth):
        kind = Kind(rec.kind)
        if kind in (Kind.FORCED, Kind.DMAX):
            out.forced += 1
            out.per_block.append("forced")
        elif np.array_equal(rec.decisions, t):
            out.correct += 1
            out.per_block.append("correct")
        else:
            out.incorrect += 1
            out.per_block.append("incorrect")
    return out
