"""Error-disturbance trade-offs for approximate joint measurements."""

__version__ = "0.1.0"
