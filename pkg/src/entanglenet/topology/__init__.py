"""Network graphs: lattice patches and the Bravais company network."""

from .graph import *  # noqa: F401,F403
from .lattices import *  # noqa: F401,F403
from .bravais import *  # noqa: F401,F403
