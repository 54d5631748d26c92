"""Distributed arithmetic coding for binary sources with decoder side information."""
from ._backend import BACKEND
from .ac_core import DEFAULT_PARAMS, FixedPointParams, InconsistentPath
from .corr_models import CorrelationModel, TrialSeed, apply_bsc, gen_source
from .dac_codec import (DacBitstream, DecodeResult, EmptyFrontier, EncoderSchedule, HeaderError,
                        build_equal_alpha_schedule, build_schedule, decode, decode_detail, encode,
                        map_oracle)
from .rate_alloc import (DoesNotFit, Infeasible, InvalidParam, allocate_margin,
                         allocate_symmetric, solve_equal_alpha, solve_k)
from .sym_codec import RoleViolation, decode_pair, encode_pair, joint_oracle

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "DEFAULT_PARAMS", "FixedPointParams", "InconsistentPath", "CorrelationModel",
    "TrialSeed", "apply_bsc", "gen_source", "DacBitstream", "DecodeResult", "EmptyFrontier",
    "EncoderSchedule", "HeaderError", "build_equal_alpha_schedule", "build_schedule", "decode",
    "decode_detail", "encode", "map_oracle", "DoesNotFit", "Infeasible", "InvalidParam",
    "allocate_margin", "allocate_symmetric", "solve_equal_alpha", "solve_k", "RoleViolation",
    "decode_pair", "encode_pair", "joint_oracle",
]
