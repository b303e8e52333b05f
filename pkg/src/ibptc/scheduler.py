"""Expanding-window zigzag decoding schedules and DT-cycle latency accounting.

A decoding round (DR) ``(b, r)`` decodes block ``b`` for the ``r``-th time;
odd rounds work on the pre-permuted block, even rounds on the post-permuted
one. Round ``r > 1`` of block ``b`` needs round ``r - 1`` of every block
within ``S`` of ``b``. Phase ``k`` is the anti-diagonal
``{(b, r) : b + S*(r-1) = k}`` walked in increasing ``r``; phases are dealt
to ADUs round-robin and every DR costs one DT cycle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ScheduleError


class DrId(NamedTuple):
    block: int  # 1-based
    round: int  # 1-based

    @property
    def orientation(self) -> str:
        return "pre" if self.round % 2 else "post"


class Slot(NamedTuple):
    cycle: int  # 1-based DT cycle
    adu: int
    dr: DrId


@dataclass(frozen=True)
class ScheduleTable:
    slots: tuple
    n_blocks: int
    r_max: int
    S: int
    n_adus: int

    def __iter__(self):
        return iter(self.slots)

    def __len__(self):
        return len(self.slots)

    def cycle_of(self) -> dict:
        return {s.dr: s.cycle for s in self.slots}

    def by_cycle(self):
        """Yield ``(cycle, [slots...])`` in cycle order, slots in ADU order."""
        cur, group = None, []
        for s in sorted(self.slots, key=lambda s: (s.cycle, s.adu)):
            if s.cycle != cur and group:
                yield cur, group
                group = []
            cur = s.cycle
            group.append(s)
        if group:
            yield cur, group


@dataclass
class LatencyProfile:
    completion: list
    fbdd: int
    ibdd: list = field(default_factory=list)
    tdd: int = 0


def dependencies(dr: DrId, S: int, n_blocks: int) -> list[DrId]:
    if dr.round == 1:
        return []
    lo, hi = max(1, dr.block - S), min(n_blocks, dr.block + S)
    return [DrId(b, dr.round - 1) for b in range(lo, hi + 1)]


def phases(n_blocks: int, r_max: int, S: int) -> list[list[DrId]]:
    out = []
    for k in range(1, n_blocks + S * (r_max - 1) + 1):
        ph = [DrId(k - S * (r - 1), r) for r in range(1, r_max + 1)
              if 1 <= k - S * (r - 1) <= n_blocks]
        if ph:
            out.append(ph)
    return out


def build_zigzag(n_blocks: int, r_max: int, S: int = 1, n_adus: int = 1) -> ScheduleTable:
    """Cycle-synchronous list schedule of all ``(b, r)`` DRs.

    Each ADU works through its own phases in order and stalls (idles) until
    the DR at the head of its queue has every dependency finished in an
    earlier cycle.
    """
    if min(n_blocks, r_max, n_adus) < 1 or S < 0:
        raise ValueError("n_blocks, r_max, n_adus must be >= 1 and S >= 0")
    queues = [[] for _ in range(n_adus)]
    for idx, ph in enumerate(phases(n_blocks, r_max, S)):
        queues[idx % n_adus].extend(ph)
    heads = [0] * n_adus
    done: dict[DrId, int] = {}
    slots = []
    remaining = n_blocks * r_max
    cycle = 0
    while remaining:
        cycle += 1
        started = []
        for a in range(n_adus):
            if heads[a] >= len(queues[a]):
                continue
            dr = queues[a][heads[a]]
            if all(done.get(d, cycle) < cycle for d in dependencies(dr, S, n_blocks)):
                started.append(Slot(cycle, a, dr))
                heads[a] += 1
        if not started:
            # completions from earlier cycles are already visible, so nothing will change
            raise ScheduleError("zigzag schedule deadlocked")
        for s in started:
            done[s.dr] = cycle
        slots.extend(started)
        remaining -= len(started)
    return ScheduleTable(tuple(slots), n_blocks, r_max, S, n_adus)


def validate_schedule(table: ScheduleTable) -> list[str]:
    """Human-readable violations; empty when the table is valid."""
    problems = []
    cyc: dict[DrId, int] = {}
    for s in table.slots:
        if s.dr in cyc:
            problems.append(f"DR {tuple(s.dr)} scheduled twice")
        cyc[s.dr] = s.cycle
        if not (1 <= s.dr.block <= table.n_blocks and 1 <= s.dr.round <= table.r_max):
            problems.append(f"DR {tuple(s.dr)} outside the block/round range")
    for s in table.slots:
        for d in dependencies(s.dr, table.S, table.n_blocks):
            if d not in cyc:
                problems.append(f"DR {tuple(s.dr)} depends on unscheduled {tuple(d)}")
            elif cyc[d] >= s.cycle:
                problems.append(
                    f"DR {tuple(s.dr)} at cycle {s.cycle} needs {tuple(d)} finished first "
                    f"(scheduled at cycle {cyc[d]})"
                )
    per_adu: dict[int, list[int]] = {}
    for s in table.slots:
        per_adu.setdefault(s.adu, []).append(s.cycle)
    for a, cycles in per_adu.items():
        if any(c2 <= c1 for c1, c2 in zip(cycles, cycles[1:])):
            problems.append(f"ADU {a} runs two DRs in one cycle or out of order")
    return problems


def completion_cycles(table: ScheduleTable, executed=None) -> list[int]:
    """Cycle at which each block finishes its last DR.

    With ``executed`` (a set of DrIds from a decoding trace) only those DRs
    count, so early-terminated blocks finish at their last executed DR.
    """
    last = [0] * table.n_blocks
    for s in table.slots:
        if executed is not None and s.dr not in executed:
            continue
        if executed is None and s.dr.round != table.r_max:
            continue
        b = s.dr.block - 1
        last[b] = max(last[b], s.cycle)
    return last


def latency_profile(table: ScheduleTable, executed=None) -> LatencyProfile:
    problems = validate_schedule(table)
    if problems:
        raise ScheduleError("invalid schedule: " + "; ".join(problems[:3]))
    comp = completion_cycles(table, executed)
    ibdd = [b - a for a, b in zip(comp, comp[1:])]
    return LatencyProfile(comp, comp[0], ibdd, max(comp))


def dependency_cone(b: int, iterations: int, S: int, n_blocks: int) -> set[int]:
    """Blocks (1-based) whose messages can reach block ``b`` in ``2*iterations`` DRs."""
    reach = 2 * S * iterations
    return set(range(max(1, b - reach), min(n_blocks, b + reach) + 1))


def classic_schedule(n_blocks: int, r_max: int, n_adus: int = 1) -> ScheduleTable:
    """Classic turbo code: blocks decoded independently (span 0)."""
    return build_zigzag(n_blocks, r_max, 0, n_adus)


def schedule_matrix(table: ScheduleTable) -> np.ndarray:
    """``(r_max, n_blocks)`` array of the cycle at which each DR runs."""
    m = np.zeros((table.r_max, table.n_blocks), dtype=np.int64)
    for s in table.slots:
        m[s.dr.round - 1, s.dr.block - 1] = s.cycle
    return m
