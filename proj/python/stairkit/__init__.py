"""Stair line detection postprocessing, geometry and synthetic scenes.

Grids are float64 arrays of shape (32, 16, 9): confidence then the eight
normalized chord coordinates of each cell.
"""

from ._stairkit import *  # noqa: F401,F403
from ._stairkit import __doc__  # noqa: F401
