"""Split-inference offloading toolkit for DNN-based camera relocalization.

Thin python surface over the C++ core: pose math, the layered network
model, the split planner, the pipeline simulator and the fusion study.
"""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
