"""Offensive-tweet classification: preprocessing, TF-IDF and look-up
embeddings, classical and neural classifiers, and evaluation protocols."""

from .corpus import Dataset, Example, load_olid_tsv
from .evaluation import cross_validate, grid_search, holdout
from .pipeline import build_pipeline

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "Example",
    "load_olid_tsv",
    "build_pipeline",
    "cross_validate",
    "grid_search",
    "holdout",
]
