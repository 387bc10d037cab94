"""Kinetic multilane traffic toolkit: microscopic interactions, moment ODEs,
DSMC and finite-volume hydrodynamic solvers."""

try:
    from ._core import *  # noqa: F401,F403
    from . import _core as core  # noqa: F401
except ImportError:  # in-tree test layout, extension built next to the sources
    from _core import *  # noqa: F401,F403
    import _core as core  # noqa: F401

__all__ = [name for name in dir(core) if not name.startswith("_")]
