"""Learning-percentage data selection: scoring, clustering, selection and analytics."""

from ._core import *  # noqa: F401,F403
from ._core import ValidationError, __doc__  # noqa: F401

__version__ = "0.1.0"
