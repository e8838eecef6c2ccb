"""Initialise."""
