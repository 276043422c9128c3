"""Desk-scale variant-call store, HSM tiering, and knowledge federation."""

__version__ = "0.1.0"
