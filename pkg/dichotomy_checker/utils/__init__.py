"""Utility functions for logging and JSON reports."""
