"""retrobench: retrosynthesis evaluation and instruction-data toolkit."""

__version__ = "0.1.0"
