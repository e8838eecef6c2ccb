"""Tests for telegraph_spin."""
