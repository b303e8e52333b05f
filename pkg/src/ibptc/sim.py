"""Configuration ingestion, BER sweeps and latency reports.

A config document is a JSON object. Keys may be given flat (``"ibpi.span": 1``)
or nested (``{"ibpi": {"span": 1}}``); anything missing takes the default of
the L=400 / CRC-8 / S=1 / hybrid:2 / D_max=30 setup.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import binomtest

from .codec import OPEN, ZERO_TAIL, CrcSpec, TrellisSpec
from .errors import ConfigError
from .interleave import IDENTITY, ROW_COLUMN
from .memman import FREEZE, HARDEN
from .pipeline import (CTC, IBPTC, RNG_ALGORITHM, ChannelConfig, CodeConfig, DecoderConfig,
                       StreamDecoder, encode_stream, random_data, transmit)
from .scheduler import build_zigzag, latency_profile
from .termination import Kind, TtSpec

CSV_COLUMNS = ("ebn0_db", "ber", "bler", "undetected_bler", "avg_dr", "forced_et_frac",
               "mu_high_water", "bits", "blocks")

DEFAULTS = {
    "code.L": 400,
    "code.crc": "110011011",
    "code.feedback": "1101",
    "code.feedforward": "1011",
    "code.termination": ZERO_TAIL,
    "code.mode": IBPTC,
    "ibpi.span": 1,
    "ibpi.period": None,
    "ibpi.intra": ROW_COLUMN,
    "channel.rate": 1.0 / 3.0,
    "decoder.iterations": 15,
    "decoder.d_max": 30,
    "decoder.m_max": None,
    "decoder.n_adus": 1,
    "decoder.tt": "hybrid:2",
    "decoder.forced_et_policy": FREEZE,
    "decoder.exact": True,
    "run.sweep": [0.2, 0.4, 0.6, 0.8, 1.0],
    "run.blocks_per_run": 1000,
    "run.seed": 0,
    "run.out": "results",
    "run.threads": 1,
    "run.audit": False,
}


@dataclass(frozen=True)
class RunConfig:
    code: CodeConfig = field(default_factory=CodeConfig)
    decoder: DecoderConfig = field(default_factory=DecoderConfig)
    sweep: tuple = (0.2, 0.4, 0.6, 0.8, 1.0)
    blocks_per_run: int = 1000
    seed: int = 0
    rate: float = 1.0 / 3.0
    out: str = "results"
    threads: int = 1
    audit: bool = False
    document: dict = field(default_factory=dict, compare=False, repr=False)


@dataclass
class RunStats:
    ebn0_db: float
    bits: int = 0
    bit_errors: int = 0
    blocks: int = 0
    block_errors: int = 0
    undetected: int = 0
    drs: int = 0
    forced: int = 0
    dmax: int = 0
    mu_high_water: float = 0
    wall_time: float = 0.0

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits if self.bits else 0.0

    @property
    def bler(self) -> float:
        return self.block_errors / self.blocks if self.blocks else 0.0

    @property
    def undetected_bler(self) -> float:
        return self.undetected / self.blocks if self.blocks else 0.0

    @property
    def avg_dr(self) -> float:
        return self.drs / self.blocks if self.blocks else 0.0

    @property
    def forced_et_frac(self) -> float:
        return self.forced / self.blocks if self.blocks else 0.0

    def ber_interval(self, level: float = 0.95) -> tuple[float, float]:
        return wilson_interval(self.bit_errors, self.bits, level)

    def row(self) -> list[str]:
        return [f"{self.ebn0_db:.4f}", f"{self.ber:.6e}", f"{self.bler:.6e}",
                f"{self.undetected_bler:.6e}", f"{self.avg_dr:.6f}", f"{self.forced_et_frac:.6f}",
                _num(self.mu_high_water), str(self.bits), str(self.blocks)]


def _num(x) -> str:
    return "inf" if x == math.inf else str(int(x))


def wilson_interval(k: int, n: int, level: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for ``k`` successes in ``n`` trials."""
    if n == 0:
        return 0.0, 1.0
    ci = binomtest(int(k), int(n)).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


# ------------------------------------------------------------------ config


def _flatten(doc, prefix="") -> dict:
    out = {}
    for k, v in doc.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def _int(v, lo=None):
    if isinstance(v, bool) or not isinstance(v, (int, np.integer)) and not (
            isinstance(v, float) and v.is_integer()):
        raise ValueError(f"expected an integer, got {v!r}")
    v = int(v)
    if lo is not None and v < lo:
        raise ValueError(f"must be >= {lo}, got {v}")
    return v


def _choice(*options):
    def parse(v):
        if v not in options:
            raise ValueError(f"must be one of {', '.join(map(str, options))}; got {v!r}")
        return v
    return parse


def _bool(v):
    if not isinstance(v, bool):
        raise ValueError(f"expected true or false, got {v!r}")
    return v


def _sweep(v):
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        v = [v]
    pts = tuple(float(x) for x in v)
    if not pts or not all(math.isfinite(x) for x in pts):
        raise ValueError("sweep must be a nonempty list of finite Eb/N0 values")
    return pts


def _rate(v):
    v = float(v)
    if not 0 < v <= 1:
        raise ValueError("code rate must lie in (0, 1]")
    return v


PARSERS = {
    "code.L": lambda v: _int(v, 1),
    "code.crc": lambda v: CrcSpec.from_string(str(v)) if isinstance(v, str) else CrcSpec(tuple(v)),
    "code.feedback": lambda v: v,
    "code.feedforward": lambda v: v,
    "code.termination": _choice(ZERO_TAIL, OPEN),
    "code.mode": _choice(IBPTC, CTC),
    "ibpi.span": lambda v: _int(v, 0),
    "ibpi.period": lambda v: None if v is None else _int(v, 1),
    "ibpi.intra": _choice(ROW_COLUMN, IDENTITY),
    "channel.rate": _rate,
    "decoder.iterations": lambda v: _int(v, 1),
    "decoder.d_max": lambda v: _int(v, 1),
    "decoder.m_max": lambda v: None if v is None else _int(v, 1),
    "decoder.n_adus": lambda v: _int(v, 1),
    "decoder.tt": lambda v: TtSpec.parse(str(v)),
    "decoder.forced_et_policy": _choice(FREEZE, HARDEN),
    "decoder.exact": _bool,
    "run.sweep": _sweep,
    "run.blocks_per_run": lambda v: _int(v, 1),
    "run.seed": lambda v: _int(v, 0),
    "run.out": str,
    "run.threads": lambda v: _int(v, 1),
    "run.audit": _bool,
}


def validate_config(document=None) -> tuple[RunConfig | None, list[str]]:
    """Normalize a config document.

    Parameters
    ----------
    document : dict, str or None
        Mapping (flat or nested) or JSON text. ``None`` and ``{}`` give the
        default configuration.

    Returns
    -------
    (config, errors)
        ``config`` is None whenever ``errors`` is nonempty. Each error
        starts with the offending key path, e.g. ``"ibpi.span: must be >= 0"``.
    """
    if document is None:
        document = {}
    if isinstance(document, str):
        try:
            document = json.loads(document) if document.strip() else {}
        except json.JSONDecodeError as exc:
            return None, [f"<document>: not valid JSON ({exc})"]
    if not isinstance(document, dict):
        return None, ["<document>: expected a JSON object"]

    given = _flatten(document)
    errors = [f"{k}: unknown key" for k in sorted(given) if k not in PARSERS]
    v = {}
    for key, parse in PARSERS.items():
        raw = given.get(key, DEFAULTS[key])
        try:
            v[key] = parse(raw)
        except (ValueError, TypeError, ConfigError) as exc:
            errors.append(f"{key}: {exc}")
    if errors:
        return None, errors

    if v["code.mode"] == CTC:
        if "ibpi.span" in given and v["ibpi.span"] != 0:
            errors.append(f"ibpi.span: CTC mode forces span 0, got {v['ibpi.span']}")
        v["ibpi.span"] = 0
    S = v["ibpi.span"]
    m_r = 3
    if v["decoder.m_max"] is not None and v["decoder.m_max"] < m_r + 1 + S:
        errors.append(f"decoder.m_max: needs at least M_R + 1 + S = {m_r + 1 + S} MUs, "
                      f"got {v['decoder.m_max']}")
    if v["ibpi.period"] is not None and v["ibpi.period"] < 2 * S + 1:
        errors.append(f"ibpi.period: must be >= 2S+1 = {2 * S + 1}")
    if errors:
        return None, errors

    try:
        trellis = TrellisSpec(v["code.feedback"], v["code.feedforward"])
    except (ConfigError, ValueError, TypeError) as exc:
        return None, [f"code.feedback/code.feedforward: {exc}"]
    try:
        code = CodeConfig(L=v["code.L"], crc=v["code.crc"], trellis=trellis, S=S,
                          P=v["ibpi.period"], intra=v["ibpi.intra"], mode=v["code.mode"],
                          termination=v["code.termination"])
    except ConfigError as exc:
        return None, [f"code: {exc}"]
    tt = v["decoder.tt"]
    if tt.crc != code.crc:
        tt = TtSpec(tt.family, tt.m, tt.fixed, code.crc)
    dec = DecoderConfig(iterations=v["decoder.iterations"], d_max=v["decoder.d_max"],
                        m_max=v["decoder.m_max"], n_adus=v["decoder.n_adus"], tt=tt,
                        policy=v["decoder.forced_et_policy"], exact=v["decoder.exact"])
    norm = dict(v)
    norm["code.crc"] = "".join(map(str, code.crc.generator))
    norm["code.feedback"] = "".join(map(str, trellis.feedback))
    norm["code.feedforward"] = "".join(map(str, trellis.feedforward))
    norm["decoder.tt"] = str(tt)
    norm["run.sweep"] = list(v["run.sweep"])
    cfg = RunConfig(code, dec, v["run.sweep"], v["run.blocks_per_run"], v["run.seed"],
                    v["channel.rate"], v["run.out"], v["run.threads"], v["run.audit"], norm)
    return cfg, []


def load_config(path=None, overrides=None) -> RunConfig:
    """Read a JSON config file, apply flat ``overrides`` and validate."""
    doc = {}
    if path is not None:
        doc = json.loads(Path(path).read_text() or "{}")
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: expected a JSON object")
        doc = _flatten(doc)
    doc.update({k: x for k, x in (overrides or {}).items() if x is not None})
    cfg, errors = validate_config(doc)
    if errors:
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(errors))
    return cfg


# -------------------------------------------------------------- BER sweeps


def simulate_point(cfg: RunConfig, ebn0_db: float, point: int = 0) -> RunStats:
    """Encode, transmit and decode one stream of ``blocks_per_run`` blocks."""
    t0 = time.perf_counter()
    code, B = cfg.code, cfg.blocks_per_run
    mapping = code.mapping(B)
    data = random_data(B, code, cfg.seed, point)
    z = encode_stream(data, code, mapping)
    rx = transmit(z, ChannelConfig(ebn0_db, cfg.rate, cfg.seed), point)
    res = StreamDecoder(rx, code, cfg.decoder, truth=z.z1, mapping=mapping, audit=cfg.audit).run()

    st = RunStats(float(ebn0_db), bits=B * code.k_data, blocks=B)
    for rec in res.records:
        st.bit_errors += rec.bit_errors
        st.drs += rec.drs
        wrong = rec.bit_errors > 0
        st.block_errors += wrong
        if wrong and rec.kind in (Kind.REGULAR.value, Kind.EXTENDED.value):
            st.undetected += 1
        st.forced += rec.kind == Kind.FORCED.value
        st.dmax += rec.kind == Kind.DMAX.value
    st.mu_high_water = res.mu_high_water
    st.wall_time = time.perf_counter() - t0
    return st


def _point_job(args):
    cfg, ebn0, point = args
    return simulate_point(cfg, ebn0, point)


def sweep(cfg: RunConfig) -> list[RunStats]:
    """Run every sweep point, in a process pool when ``threads > 1``."""
    jobs = [(cfg, e, p) for p, e in enumerate(cfg.sweep)]
    if cfg.threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.threads, len(jobs))) as pool:
            return list(pool.map(_point_job, jobs))
    return [_point_job(j) for j in jobs]


def ber_csv(rows: list[RunStats]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(r.row())
    return buf.getvalue()


def _prepare_out(out) -> Path:
    path = Path(out)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {path}: {exc}") from exc
    if not os.access(path, os.W_OK):
        raise OSError(f"output directory {path} is not writable")
    return path


def run_ber(cfg: RunConfig, out=None) -> list[RunStats]:
    """BER sweep; writes ``ber.csv`` and ``ber_summary.json`` into ``out``."""
    path = _prepare_out(cfg.out if out is None else out)
    t0 = time.perf_counter()
    rows = sweep(cfg)
    (path / "ber.csv").write_text(ber_csv(rows))
    points = []
    for r in rows:
        lo, hi = r.ber_interval()
        points.append({**{c: getattr(r, c) for c in CSV_COLUMNS},
                       "bit_errors": r.bit_errors, "block_errors": r.block_errors,
                       "undetected_blocks": r.undetected, "dmax_frac": r.dmax / r.blocks,
                       "ber_ci95": [lo, hi], "wall_time_s": r.wall_time})
    summary = {"config": cfg.document, "rng": RNG_ALGORITHM, "points": points,
               "wall_time_s": time.perf_counter() - t0}
    (path / "ber_summary.json").write_text(json.dumps(summary, indent=2, default=_json_default))
    return rows


def _json_default(x):
    if isinstance(x, (np.integer, np.floating)):
        return x.item()
    if isinstance(x, tuple):
        return list(x)
    raise TypeError(type(x).__name__)


# ---------------------------------------------------------------- latency


def latency_report(cfg: RunConfig) -> dict:
    """Completion cycles, FBDD, IBDDs and TDD for the IBPTC and CTC schedules."""
    B, cap = cfg.blocks_per_run, cfg.decoder.round_cap
    # a CTC-mode config still gets the span-1 IBPTC schedule for comparison
    ib_span = cfg.code.S if cfg.code.mode == IBPTC else 1
    out = {}
    for mode, span in ((IBPTC, ib_span), (CTC, 0)):
        prof = latency_profile(build_zigzag(B, cap, span, cfg.decoder.n_adus))
        out[mode] = {"span": span, **asdict(prof)}
    return out


def run_latency(cfg: RunConfig, out=None) -> dict:
    """Writes ``latency.csv`` (mode, block, completion_cycle) and ``latency_summary.json``."""
    path = _prepare_out(cfg.out if out is None else out)
    rep = latency_report(cfg)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("mode", "block", "completion_cycle"))
    for mode, prof in rep.items():
        for b, c in enumerate(prof["completion"], start=1):
            w.writerow((mode, b, c))
    (path / "latency.csv").write_text(buf.getvalue())
    summary = {"blocks": cfg.blocks_per_run, "rounds": cfg.decoder.round_cap,
               "n_adus": cfg.decoder.n_adus,
               "modes": {m: {k: p[k] for k in ("span", "fbdd", "ibdd", "tdd")}
                         for m, p in rep.items()}}
    (path / "latency_summary.json").write_text(json.dumps(summary, indent=2))
    return rep
