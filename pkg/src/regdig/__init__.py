"""Random regular digraph singularity laboratory."""

__version__ = "0.1.0"
