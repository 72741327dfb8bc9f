"""Tests for conegeo."""
