"""Driven charged particle on the line and in a box, in two gauges."""

__version__ = "0.1.0"
