"""Multiqudit quantum hashing toolkit."""
