"""Hashing multi-arm beam training for multi-RIS, multi-user mmWave links."""

__version__ = "0.1.0"
