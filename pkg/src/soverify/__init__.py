"""Verification of two-level workflow/policy systems."""

__version__ = "0.1.0"
