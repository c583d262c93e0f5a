"""Quantum noise of a synchronously pumped degenerate optical parametric oscillator.

Closed-form steady states, correlation combs and photocurrent spectra,
a Monte Carlo Langevin simulator that serves as their independent check,
and a virtual balanced homodyne detector.
"""

from .core import *  # noqa: F401,F403
from .analytic import *  # noqa: F401,F403
from .langevin import *  # noqa: F401,F403
from .homodyne import *  # noqa: F401,F403
from .config import ConfigError, RunConfig, load_config, parse_config
from . import core, analytic, langevin, homodyne, io, config

__version__ = "0.1.0"
