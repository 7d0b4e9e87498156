"""Self-supervised bug detection and repair over a Python subset."""

__version__ = "0.1.0"
