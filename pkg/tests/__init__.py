"""Tests for nhq-search."""
