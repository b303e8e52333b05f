"""CRC outer code, RSC component trellis and the Log-MAP APP decoder.

LLR convention used throughout the package: ``llr = ln P(bit=0) - ln P(bit=1)``,
so a positive value favours bit 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numba import njit

from .errors import ConfigError, InputError

LLR_MAX = 50.0
LN2 = float(np.log(2.0))

PRE = "pre"
POST = "post"

OPEN = "open"
ZERO_TAIL = "zero-tail"


def parse_bits(bits) -> np.ndarray:
    """Parse ``"110011011"`` or any 0/1 sequence into a uint8 vector."""
    if isinstance(bits, str):
        s = bits.strip()
        if not s or set(s) - {"0", "1"}:
            raise ConfigError(f"not a binary string: {bits!r}")
        return np.frombuffer(s.encode(), dtype=np.uint8) - ord("0")
    arr = np.asarray(bits, dtype=np.uint8).ravel()
    if arr.size and arr.max() > 1:
        raise ConfigError("bit vector must contain only 0 and 1")
    return arr.copy()


# --------------------------------------------------------------------- CRC


@dataclass(frozen=True)
class CrcSpec:
    """CRC generator, MSB-first (``generator[0]`` is the x^K coefficient)."""

    generator: tuple = (1, 1, 0, 0, 1, 1, 0, 1, 1)

    def __post_init__(self):
        g = tuple(int(b) for b in parse_bits(self.generator))
        object.__setattr__(self, "generator", g)
        if len(g) < 2:
            raise ConfigError("CRC generator needs at least two coefficients")
        if g[0] != 1 or g[-1] != 1:
            raise ConfigError("CRC generator must have leading and trailing 1")

    @classmethod
    def from_string(cls, s: str) -> "CrcSpec":
        return cls(tuple(parse_bits(s)))

    @property
    def k(self) -> int:
        return len(self.generator) - 1

    @property
    def degrees(self) -> list[int]:
        """Exponents of the nonzero terms of g(x), highest first."""
        k = self.k
        return [k - i for i, b in enumerate(self.generator) if b]

    def remainder_matrix(self, n: int) -> np.ndarray:
        """Row t holds ``x^(n-1-t) mod g(x)`` as K bits, MSB first."""
        return _remainder_matrix(self.generator, n)


@lru_cache(maxsize=64)
def _remainder_matrix(generator: tuple, n: int) -> np.ndarray:
    k = len(generator) - 1
    g_low = np.array(generator[1:], dtype=np.uint8)  # x^(K-1) .. x^0
    rows = np.zeros((n, k), dtype=np.uint8)
    # x^j mod g for j = 0, 1, ..., n-1, built by repeated multiplication by x
    r = np.zeros(k, dtype=np.uint8)
    r[-1] = 1
    for j in range(n):
        rows[n - 1 - j] = r
        carry = r[0]
        r = np.roll(r, -1)
        r[-1] = 0
        if carry:
            r ^= g_low
    rows.setflags(write=False)
    return rows


def crc_encode(data, spec: CrcSpec = CrcSpec()) -> np.ndarray:
    """Append the K_CRC parity bits of ``data``.

    ``data`` may be a single vector or a 2-D batch (one block per row).
    """
    d = np.atleast_1d(np.asarray(data, dtype=np.uint8))
    if d.shape[-1] < 1:
        raise ConfigError("CRC data length must be positive")
    n = d.shape[-1] + spec.k
    rows = spec.remainder_matrix(n)[: d.shape[-1]]
    parity = (d.astype(np.int64) @ rows.astype(np.int64)) & 1
    return np.concatenate([d, parity.astype(np.uint8)], axis=-1)


def crc_syndrome(block, spec: CrcSpec = CrcSpec()) -> np.ndarray:
    b = np.atleast_1d(np.asarray(block, dtype=np.uint8))
    n = b.shape[-1]
    if n < spec.k + 1:
        raise ConfigError(f"block length {n} shorter than K_CRC + 1 = {spec.k + 1}")
    return ((b.astype(np.int64) @ spec.remainder_matrix(n).astype(np.int64)) & 1).astype(np.uint8)


def crc_check(block, spec: CrcSpec = CrcSpec()):
    """True iff the block polynomial is divisible by g(x).

    Returns a bool for a single block and a boolean array for a batch.
    """
    syn = crc_syndrome(block, spec)
    ok = ~syn.any(axis=-1)
    return bool(ok) if ok.ndim == 0 else ok


# ----------------------------------------------------------------- trellis


@dataclass(frozen=True)
class TrellisSpec:
    """Rate-1/2 recursive systematic convolutional code.

    Polynomials are coefficient tuples in ascending powers of D, so
    ``(1, 1, 0, 1)`` is 1 + D + D^3.
    """

    feedback: tuple = (1, 1, 0, 1)
    feedforward: tuple = (1, 0, 1, 1)
    next_state: np.ndarray = field(init=False, repr=False, compare=False)
    output: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        fb = tuple(int(b) for b in parse_bits(self.feedback))
        ff = tuple(int(b) for b in parse_bits(self.feedforward))
        if len(fb) != len(ff):
            raise ConfigError("feedback and feedforward polynomials must share a degree")
        if len(fb) < 2 or fb[0] != 1 or ff[0] != 1:
            raise ConfigError("trellis polynomials need constant term 1 and degree >= 1")
        object.__setattr__(self, "feedback", fb)
        object.__setattr__(self, "feedforward", ff)
        nu = len(fb) - 1
        ns = np.zeros((1 << nu, 2), dtype=np.int64)
        out = np.zeros((1 << nu, 2), dtype=np.int64)
        for s in range(1 << nu):
            # bit k-1 of s holds a_{t-k}
            reg = [(s >> (k - 1)) & 1 for k in range(1, nu + 1)]
            for u in (0, 1):
                a = u
                for k in range(1, nu + 1):
                    a ^= fb[k] & reg[k - 1]
                p = ff[0] & a
                for k in range(1, nu + 1):
                    p ^= ff[k] & reg[k - 1]
                new = [a] + reg[:-1]
                ns[s, u] = sum(b << i for i, b in enumerate(new))
                out[s, u] = p
        ns.setflags(write=False)
        out.setflags(write=False)
        object.__setattr__(self, "next_state", ns)
        object.__setattr__(self, "output", out)

    @property
    def memory(self) -> int:
        return len(self.feedback) - 1

    @property
    def n_states(self) -> int:
        return 1 << self.memory


def rsc_encode(bits, trellis: TrellisSpec = TrellisSpec(), state: int = 0):
    """Parity sequence of the RSC encoder and its final state (no tail)."""
    u = np.asarray(bits, dtype=np.int64).ravel()
    if u.size == 0:
        raise InputError("rsc_encode needs a nonempty input")
    parity = np.empty(u.size, dtype=np.uint8)
    final = _rsc_run(u, trellis.next_state, trellis.output, state, parity)
    return parity, int(final)


@njit(cache=True)
def _rsc_run(u, next_state, output, s, parity):
    for t in range(u.size):
        parity[t] = output[s, u[t]]
        s = next_state[s, u[t]]
    return s


# ------------------------------------------------------------------ Log-MAP


@njit(cache=True, inline="always")
def _maxstar(a, b, exact):
    if a == -np.inf:
        return b
    if b == -np.inf:
        return a
    if not exact:
        return max(a, b)
    if a > b:
        return a + np.log1p(np.exp(b - a))
    return b + np.log1p(np.exp(a - b))


def maxstar(a: float, b: float, exact: bool = True) -> float:
    """Jacobian logarithm ln(e^a + e^b); plain max when ``exact`` is False."""
    return float(_maxstar(float(a), float(b), exact))


@njit(cache=True)
def _log_map(sys, par, apri, next_state, output, n_tail, exact):
    n = sys.size
    ns = next_state.shape[0]
    alpha = np.full((n + 1, ns), -np.inf)
    beta = np.full((n + 1, ns), -np.inf)
    alpha[0, 0] = 0.0
    beta[n, :] = 0.0
    # the last n_tail inputs are known zeros: their u = 1 branches do not exist
    first_tail = n - n_tail
    # branch metric halves: bit 0 -> +1, bit 1 -> -1
    gs = 0.5 * (sys + apri)
    gp = 0.5 * par
    for t in range(n):
        for s in range(ns):
            a = alpha[t, s]
            if a == -np.inf:
                continue
            for u in range(2 - (t >= first_tail)):
                g = (gs[t] if u == 0 else -gs[t]) + (gp[t] if output[s, u] == 0 else -gp[t])
                s2 = next_state[s, u]
                alpha[t + 1, s2] = _maxstar(alpha[t + 1, s2], a + g, exact)
        m = -np.inf
        for s in range(ns):
            if alpha[t + 1, s] > m:
                m = alpha[t + 1, s]
        for s in range(ns):
            alpha[t + 1, s] -= m
    for t in range(n - 1, -1, -1):
        for s in range(ns):
            acc = -np.inf
            for u in range(2 - (t >= first_tail)):
                g = (gs[t] if u == 0 else -gs[t]) + (gp[t] if output[s, u] == 0 else -gp[t])
                acc = _maxstar(acc, beta[t + 1, next_state[s, u]] + g, exact)
            beta[t, s] = acc
        m = -np.inf
        for s in range(ns):
            if beta[t, s] > m:
                m = beta[t, s]
        for s in range(ns):
            beta[t, s] -= m
    post = np.empty(n)
    for t in range(n):
        l0 = -np.inf
        l1 = -np.inf
        for s in range(ns):
            a = alpha[t, s]
            if a == -np.inf:
                continue
            for u in range(2 - (t >= first_tail)):
                g = (gs[t] if u == 0 else -gs[t]) + (gp[t] if output[s, u] == 0 else -gp[t])
                v = a + g + beta[t + 1, next_state[s, u]]
                if u == 0:
                    l0 = _maxstar(l0, v, exact)
                else:
                    l1 = _maxstar(l1, v, exact)
        post[t] = l0 - l1
    return post


@dataclass
class AppInput:
    systematic: np.ndarray
    parity: np.ndarray
    apriori: np.ndarray
    trellis: TrellisSpec = field(default_factory=TrellisSpec)
    termination: str = OPEN

    def __post_init__(self):
        self.systematic = np.asarray(self.systematic, dtype=np.float64)
        self.parity = np.asarray(self.parity, dtype=np.float64)
        self.apriori = np.asarray(self.apriori, dtype=np.float64)
        n = self.systematic.shape
        if self.parity.shape != n or self.apriori.shape != n or len(n) != 1:
            raise InputError("systematic, parity and a-priori LLRs must be equal-length vectors")
        if self.termination not in (OPEN, ZERO_TAIL):
            raise ConfigError(f"unknown trellis termination {self.termination!r}")


def app_decode(inp: AppInput, exact: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Log-MAP decode one block.

    The forward recursion starts in state 0. The backward recursion starts
    uniform: the final state is never assumed. In ``"zero-tail"`` mode the
    last ``memory`` inputs are known zeros (padding), so only paths with a
    zero tail contribute.

    Returns ``(extrinsic, posterior)``, both saturated to ``±LLR_MAX``.
    ``posterior == systematic + apriori + extrinsic`` up to rounding unless
    the posterior saturates. ``exact=False`` switches to Max-Log-MAP.
    """
    for v in (inp.systematic, inp.parity, inp.apriori):
        if not np.all(np.isfinite(v)):
            raise InputError("APP input contains non-finite LLRs")
    t = inp.trellis
    raw = _log_map(
        inp.systematic, inp.parity, inp.apriori,
        t.next_state, t.output, t.memory if inp.termination == ZERO_TAIL else 0, exact,
    )
    base = inp.systematic + inp.apriori
    extrinsic = np.clip(raw - base, -LLR_MAX, LLR_MAX)
    posterior = np.clip(base + extrinsic, -LLR_MAX, LLR_MAX)
    return extrinsic, posterior


def hard_decide(llr) -> np.ndarray:
    """Bit 1 where the LLR is negative; ties (LLR == 0) decide 0."""
    return (np.asarray(llr) < 0).astype(np.uint8)


def saturate(bits) -> np.ndarray:
    """Map decided bits to ``±LLR_MAX`` (bit 0 -> +LLR_MAX)."""
    return LLR_MAX * (1.0 - 2.0 * np.asarray(bits, dtype=np.float64))
