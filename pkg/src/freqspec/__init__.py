"""Frequency-domain forensics for synthetic images."""
