"""Intra-block permutations and the span-S inter-block permutation interleaver.

Every bit of pre-permuted block ``i`` first moves to intra position ``k``, then
lands in post-permuted block ``i + offset(k)`` at the same position ``k``,
where ``offset(k) = ((k mod P) mod (2S+1)) - S``. At the two ends of a finite
stream the offsets that would leave the stream are folded back into the
block itself, which stays a bijection because the offset classes ``+d`` and
``-d`` are kept the same size.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import ConfigError, ScheduleError

IDENTITY = "identity"
ROW_COLUMN = "row-column"
TABLE = "table"


@dataclass(frozen=True)
class IntraPermSpec:
    """``perm[k]`` is the original position read into permuted position ``k``."""

    L: int
    kind: str = ROW_COLUMN
    table: tuple | None = None

    def __post_init__(self):
        if self.L < 1:
            raise ConfigError("block length must be positive")
        if self.kind not in (IDENTITY, ROW_COLUMN, TABLE):
            raise ConfigError(f"unknown intra permutation kind {self.kind!r}")
        if self.kind == TABLE:
            if self.table is None or sorted(self.table) != list(range(self.L)):
                raise ConfigError("table permutation must be a bijection on 0..L-1")

    def perm(self) -> np.ndarray:
        if self.kind == IDENTITY:
            return np.arange(self.L)
        if self.kind == TABLE:
            return np.asarray(self.table, dtype=np.int64)
        return row_column_perm(self.L)


def row_column_perm(L: int) -> np.ndarray:
    """Odd-even row-column permutation.

    Positions are written row-wise into a ``rows x cols`` array and read
    column-wise, even columns first and then odd columns, so neighbouring
    input bits end up about ``L/2`` apart.
    """
    rows = max(1, int(np.floor(np.sqrt(L))))
    cols = -(-L // rows)
    grid = np.full(rows * cols, -1, dtype=np.int64)
    grid[:L] = np.arange(L)
    grid = grid.reshape(rows, cols)
    order = list(range(0, cols, 2)) + list(range(1, cols, 2))
    out = grid[:, order].T.ravel()
    return out[out >= 0]


@dataclass(frozen=True)
class IbpiSpec:
    L: int
    S: int = 1
    P: int | None = None
    intra: str = ROW_COLUMN
    table: tuple | None = None

    def __post_init__(self):
        if self.S < 0:
            raise ConfigError("interleaving span S must be >= 0")
        if self.P is None:
            object.__setattr__(self, "P", 2 * self.S + 1)
        if self.P < 2 * self.S + 1:
            raise ConfigError(f"IBP period P={self.P} must be >= 2S+1 = {2 * self.S + 1}")
        IntraPermSpec(self.L, self.intra, self.table)

    @property
    def intra_spec(self) -> IntraPermSpec:
        return IntraPermSpec(self.L, self.intra, self.table)


def block_offsets(L: int, S: int, P: int) -> np.ndarray:
    """Destination-block offset of each intra-permuted position, classes balanced."""
    delta = (np.arange(L) % P) % (2 * S + 1) - S
    for d in range(1, S + 1):
        pos = np.flatnonzero(delta == d)
        neg = np.flatnonzero(delta == -d)
        excess = len(pos) - len(neg)
        if excess > 0:
            delta[pos[-excess:]] = 0
        elif excess < 0:
            delta[neg[excess:]] = 0
    return delta


@dataclass
class IbpiMapping:
    """Forward/inverse (block, position) maps over a stream of ``n_blocks``."""

    spec: IbpiSpec
    n_blocks: int
    fwd_block: np.ndarray = field(repr=False)
    fwd_pos: np.ndarray = field(repr=False)
    inv_block: np.ndarray = field(repr=False)
    inv_pos: np.ndarray = field(repr=False)

    @property
    def L(self) -> int:
        return self.spec.L

    @property
    def S(self) -> int:
        return self.spec.S

    def forward(self, i: int, j: int) -> tuple[int, int]:
        return int(self.fwd_block[i, j]), int(self.fwd_pos[i, j])

    def inverse(self, i: int, k: int) -> tuple[int, int]:
        return int(self.inv_block[i, k]), int(self.inv_pos[i, k])

    def __post_init__(self):
        self._sources = [frozenset(np.unique(r).tolist()) for r in self.inv_block]
        self._targets = [frozenset(np.unique(r).tolist()) for r in self.fwd_block]

    def post_sources(self, i: int) -> frozenset:
        """Pre-permuted blocks contributing to post-permuted block ``i``."""
        return self._sources[i]

    def pre_targets(self, i: int) -> frozenset:
        """Post-permuted blocks holding bits of pre-permuted block ``i``."""
        return self._targets[i]

    def interleave_stream(self, x: np.ndarray) -> np.ndarray:
        """Whole-stream permutation: pre-ordered ``(B, L)`` -> post-ordered."""
        return np.asarray(x)[self.inv_block, self.inv_pos]

    def deinterleave_stream(self, y: np.ndarray) -> np.ndarray:
        return np.asarray(y)[self.fwd_block, self.fwd_pos]


def build_ibpi(spec: IbpiSpec, n_blocks: int) -> IbpiMapping:
    if n_blocks < 1:
        raise ConfigError("stream needs at least one block")
    L, S = spec.L, spec.S
    perm = spec.intra_spec.perm()
    delta = block_offsets(L, S, spec.P)

    B = n_blocks
    blocks = np.arange(B)[:, None]
    dest = blocks + delta[None, :]  # indexed by intra position k
    dest_pos = np.broadcast_to(np.arange(L), (B, L)).copy()
    for i in range(B):
        homeless = np.flatnonzero((dest[i] < 0) | (dest[i] >= B))
        if homeless.size == 0:
            continue
        src = i - delta
        empty = np.flatnonzero((src < 0) | (src >= B))
        # balanced offset classes guarantee equal sizes
        assert homeless.size == empty.size
        dest[i, homeless] = i
        dest_pos[i, homeless] = empty

    # re-index from intra position k to original position j = perm[k]
    fwd_block = np.empty((B, L), dtype=np.int64)
    fwd_pos = np.empty((B, L), dtype=np.int64)
    fwd_block[:, perm] = dest
    fwd_pos[:, perm] = dest_pos

    inv_block = np.full((B, L), -1, dtype=np.int64)
    inv_pos = np.full((B, L), -1, dtype=np.int64)
    inv_block[fwd_block, fwd_pos] = blocks
    inv_pos[fwd_block, fwd_pos] = np.arange(L)[None, :]
    if (inv_block < 0).any():
        raise AssertionError("inter-block permutation is not a bijection")
    for a in (fwd_block, fwd_pos, inv_block, inv_pos):
        a.setflags(write=False)
    return IbpiMapping(spec, B, fwd_block, fwd_pos, inv_block, inv_pos)


def _check_window(targets: np.ndarray, lo: int, window: np.ndarray):
    if targets.min() < lo or targets.max() >= lo + window.shape[0]:
        raise ScheduleError(
            f"window [{lo}, {lo + window.shape[0]}) does not cover target blocks "
            f"{int(targets.min())}..{int(targets.max())}"
        )


def interleave_block(values, i: int, mapping: IbpiMapping, window: np.ndarray, lo: int = 0) -> np.ndarray:
    """Scatter pre-ordered values of block ``i`` into post-ordered ``window``.

    ``window[r]`` holds post-permuted block ``lo + r``. Modified in place and
    returned.
    """
    tb = mapping.fwd_block[i]
    _check_window(tb, lo, window)
    window[tb - lo, mapping.fwd_pos[i]] = values
    return window


def deinterleave_block(values, i: int, mapping: IbpiMapping, window: np.ndarray, lo: int = 0) -> np.ndarray:
    """Scatter post-ordered values of post-permuted block ``i`` back to pre order."""
    tb = mapping.inv_block[i]
    _check_window(tb, lo, window)
    window[tb - lo, mapping.inv_pos[i]] = values
    return window


def fill_status(i: int, direction: str, mapping: IbpiMapping, completed: Iterable[int]) -> set[int]:
    """Blocks still missing before block ``i`` is completely filled.

    ``direction`` is ``"post"`` for post-permuted block ``i`` (filled by
    interleaving pre-permuted DRs) or ``"pre"`` for pre-permuted block ``i``
    (filled by de-interleaving post-permuted DRs). ``completed`` lists the
    blocks whose previous-round scatter is done. An empty result means the
    block is complete.
    """
    if direction == "post":
        need = mapping.post_sources(i)
    elif direction == "pre":
        need = mapping.pre_targets(i)
    else:
        raise ValueError(f"direction must be 'pre' or 'post', got {direction!r}")
    return need - set(completed)


def dependency_cone(mapping: IbpiMapping, b: int, iterations: int) -> set[int]:
    """Blocks whose channel values reach block ``b`` after ``iterations`` iterations.

    Traced through the actual maps: each of the ``2 * iterations`` scatters
    pulls in the blocks feeding the current set.
    """
    cone = {b}
    frontier = {b}
    pre_side = True
    for _ in range(2 * iterations):
        nxt = set()
        for x in frontier:
            nxt |= mapping.pre_targets(x) if pre_side else mapping.post_sources(x)
        frontier = nxt
        cone |= nxt
        pre_side = not pre_side
    return cone
