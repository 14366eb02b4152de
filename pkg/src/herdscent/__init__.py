"""Python library for information foraging on social graphs with elephant herding optimization."""

__version__ = "0.1.0"
