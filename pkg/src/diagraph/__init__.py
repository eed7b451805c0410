"""Structure-diagram toolkit: synthesis, recognition, conversion, evaluation."""

__version__ = "0.1.0"
