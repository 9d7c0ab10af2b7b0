"""opmoment - Operator moment sequences and atomic operator-valued measures at matrix scale."""

__version__ = "0.1.0"
