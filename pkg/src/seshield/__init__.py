"""Toolkit for screenshot-based social-engineering-attack detection."""

__version__ = "0.1.0"
