"""Student-risk prediction and interpretable feedback from Online Judge submission logs."""

__version__ = "0.1.0"
