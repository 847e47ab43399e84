"""SB Stirling - 2-adic partial Stirling functions, their zeros and the theorems about them."""

from .atlas import Atlas, count_zeros, expected_zero_count, scan_zero_bitruns
from .atlas_async import AsyncAtlasBuilder
from .atlas_builder import AtlasBuilder
from .config import RunConfig
from .dyadic import TwoAdic, Valuation
from .kernel import U_2inf, eval_P, eval_P_inf, eval_Phi
from .zeros import CongruenceClass, ZeroRecord, classify

__version__ = "0.1.0"
__all__ = [
    "Atlas",
    "AsyncAtlasBuilder",
    "AtlasBuilder",
    "CongruenceClass",
    "RunConfig",
    "TwoAdic",
    "Valuation",
    "ZeroRecord",
    "U_2inf",
    "classify",
    "count_zeros",
    "eval_P",
    "eval_P_inf",
    "eval_Phi",
    "expected_zero_count",
    "scan_zero_bitruns",
]
