"""Wave kinetics toolkit tools.

This package contains the tool modules shared by the command line and the MCP server.
"""

from . import combinatorics, export, kinetics, simulation

__all__ = [
    "combinatorics",
    "export",
    "kinetics",
    "simulation",
]
