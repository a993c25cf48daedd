"""White-box AutoML engine for tabular regression and classification."""

__version__ = "0.1.0"
