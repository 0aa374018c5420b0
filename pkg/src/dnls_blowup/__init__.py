"""Self-similar blow-up profiles of the generalized derivative NLS equation."""

__version__ = "0.1.0"
