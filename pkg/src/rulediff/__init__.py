"""Compare Boolean formalizations of legal provisions by their edge cases."""

__version__ = "0.1.0"
