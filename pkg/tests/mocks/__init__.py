"""Test doubles and batch builders for varda tests."""
