"""Project-risk classification toolkit.

PCA-based risk index construction plus a from-scratch tanh multilayer
perceptron with steepest-descent and Levenberg-Marquardt training.
"""

__version__ = "0.1.0"

from .nn import Network, init_network, forward  # noqa: F401
from .rais import DEFAULT_CANDIDATE_SCHEMA, DEFAULT_RETAINED_SCHEMA  # noqa: F401
