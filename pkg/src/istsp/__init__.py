"""Two-stage integer programming for integrated shift and task scheduling."""

__version__ = "0.1.0"
