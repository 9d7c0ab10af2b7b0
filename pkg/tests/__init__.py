"""Tests for opmoment."""
