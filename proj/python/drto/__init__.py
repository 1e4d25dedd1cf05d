"""Distributionally robust trajectory optimization under parameter uncertainty."""

from ._drto import *  # noqa: F401,F403
from ._drto import __doc__  # noqa: F401

__version__ = "0.1.0"
