"""paravec: paraphrase-pair corpus tools and averaging sentence embeddings."""

__version__ = "0.1.0"

from .corpus import ParaphrasePair, StsExample, TokenizedSentence, load_pairs, tokenize
from .encoders import Encoder, cosine, encode, encode_batch, load_model, save_model
from .trainer import TrainingConfig, train

__all__ = [
    "__version__",
    "Encoder",
    "ParaphrasePair",
    "StsExample",
    "TokenizedSentence",
    "TrainingConfig",
    "cosine",
    "encode",
    "encode_batch",
    "load_model",
    "load_pairs",
    "save_model",
    "tokenize",
    "train",
]
