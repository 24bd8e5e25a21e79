"""Phase-subtractive two-source interference: simulation and phase retrieval."""

from ._psipi import *  # noqa: F401,F403
from ._psipi import InvalidArgument, NumericalError, __version__  # noqa: F401
