"""Bundled board description files."""
