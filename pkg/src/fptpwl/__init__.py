"""First-passage times of a Wiener process through an exponentially decaying threshold."""

__version__ = "1.0.0"
