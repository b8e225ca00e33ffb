"""Tests for relnet."""
