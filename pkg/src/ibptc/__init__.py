"""Inter-block-permuted turbo codes with variable-termination-time decoding."""

from .codec import (LLR_MAX, CrcSpec, TrellisSpec, AppInput, app_decode, crc_check, crc_encode,
                    crc_syndrome, hard_decide, rsc_encode)
from .errors import ConfigError, InputError, LedgerError, ScheduleError
from .interleave import IbpiMapping, IbpiSpec, IntraPermSpec, build_ibpi
from .memman import MemoryLedger, MemoryManager
from .pipeline import (ChannelConfig, CodeConfig, DecoderConfig, DecodeResult, StreamDecoder,
                       decode_ctc, decode_stream, encode_stream, random_data, transmit)
from .scheduler import ScheduleTable, build_zigzag, latency_profile, validate_schedule
from .sim import RunConfig, RunStats, run_ber, run_latency, validate_config, wilson_interval
from .termination import Kind, TtSpec, false_termination_audit

__version__ = "0.1.0"
