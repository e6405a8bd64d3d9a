"""Tests for caimbench."""
