"""Helical CR structures, step-two Carnot groups and Q0/Q1 curves."""

__version__ = "1.0.0"
