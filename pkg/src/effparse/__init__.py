"""Effect-driven semantic parsing with string-diagram normal forms."""

__version__ = "0.1.0"
