"""Deterministic partitioned-executive emulator and benchmark suite."""

__version__ = "0.1.0"
