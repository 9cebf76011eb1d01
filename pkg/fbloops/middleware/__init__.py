"""Wrappers applied around every CLI command."""
