"""Encode image folders with a vision-language checkpoint into the
gaussadapt dataset formats (features, prototypes, labels, manifest)."""

from .encoders import SyntheticEncoder, make_encoder
from .extract import extract, zero_shot_accuracy

__version__ = "0.1.0"

__all__ = ["SyntheticEncoder", "extract", "make_encoder",
           "zero_shot_accuracy"]
