"""Learning motions from demonstrations with automatically chosen parameters."""
from .core import (Demonstration, DemonstrationError, DemonstrationSet, GeneralizedTrajectory,
                   ModelFormatError, MotionModel, load_demonstration_set, load_model, save_model)
from .pipeline import evaluate, reproduce, train

__all__ = [
    "Demonstration", "DemonstrationError", "DemonstrationSet", "GeneralizedTrajectory",
    "ModelFormatError", "MotionModel", "evaluate", "load_demonstration_set", "load_model",
    "reproduce", "save_model", "train",
]
__version__ = "0.1.0"
