"""Command-line surface: workflow and benchmark commands."""

from . import bench_commands, commands

__all__ = [
    "bench_commands",
    "commands",
]
