"""Nonbinary polar coding for degraded wiretap channels."""

__version__ = "0.1.0"
