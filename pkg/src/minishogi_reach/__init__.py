"""Sampling estimate of the number of Minishogi positions reachable from the
initial position."""

__version__ = "0.1.0"
