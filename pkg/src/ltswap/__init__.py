"""LT-Swap style benchmark generation and evaluation for long-tail words."""

__version__ = "0.1.0"

from .forge import Quadruplet, Subtask
from .ingest import pad_symbols, segment
from .morphology import BinScheme, PosTag, WordRecord, bin_of, inflect
from .scoring import JudgeMode, ScoringMode, SentenceScore

__all__ = [
    "BinScheme",
    "JudgeMode",
    "PosTag",
    "Quadruplet",
    "ScoringMode",
    "SentenceScore",
    "Subtask",
    "WordRecord",
    "bin_of",
    "inflect",
    "pad_symbols",
    "segment",
]
