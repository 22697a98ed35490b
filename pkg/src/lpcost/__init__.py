"""Static cost analysis and execution-time prediction for a deterministic Prolog subset."""

__version__ = "0.1.0"
