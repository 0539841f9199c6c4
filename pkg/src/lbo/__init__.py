"""Agents that learn a task by watching experts publish software images."""

__version__ = "0.1.0"
