"""Sliding-window sequence classification with an online prototype tree.

Sequences are cut into windows, each window is encoded as a sparse binary
vector, and an online tree of prototypes learns from them. Classification
harmonises the per-window votes into a class distribution.
"""

__version__ = "0.1.0"

from .baselines import KmerCentroidClassifier, MajorityBaseline
from .core import CoreConfig, Model, Representation, load_model, save_model
from .encoder import Codebook, Sdr, WindowConfig, WindowEncoder
from .episodic import EpisodicCognitionClassifier, VoteDistribution, harmonize

__all__ = [
    "Codebook",
    "CoreConfig",
    "EpisodicCognitionClassifier",
    "KmerCentroidClassifier",
    "MajorityBaseline",
    "Model",
    "Representation",
    "Sdr",
    "VoteDistribution",
    "WindowConfig",
    "WindowEncoder",
    "harmonize",
    "load_model",
    "save_model",
]
