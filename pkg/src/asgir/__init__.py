"""Bird sound recognition and information retrieval pipeline."""

__version__ = "0.1.0"
