"""Anisotropic long-range dependence of random fields on Z^2."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
