"""Sentence-scoring sidecar for the ltswap harness."""

__version__ = "0.1.0"

from .models import ModelHandle, ToyTableModel, ToyUniformModel, load_model
from .scoring import ItemError, Scored, score_causal, score_item, score_pll
from .service import ScorerServer, batch, compute_scores

__all__ = [
    "ItemError",
    "ModelHandle",
    "Scored",
    "ScorerServer",
    "ToyTableModel",
    "ToyUniformModel",
    "batch",
    "compute_scores",
    "load_model",
    "score_causal",
    "score_item",
    "score_pll",
]
