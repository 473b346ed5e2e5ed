"""Web access-log preprocessing and ART1 clustering of hosts."""

__version__ = "0.1.0"
