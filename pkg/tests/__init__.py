"""Tests for censcov-surv."""
