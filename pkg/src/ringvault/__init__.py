"""Tiered cloud storage: CIA-triad classification, ring-gated authentication,
client-side DES encryption."""

__version__ = "0.1.0"
