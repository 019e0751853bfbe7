"""
Operator-valued free, Boolean and c-free convolution engine - Core Modules
"""

from .config import config
from .algebra import InclusionSpec
from .ncseries import NCSeries
from .distribution import DistPair, OperatorModel, OVDistribution
from .convolution import bp_map, convolve, power
from .scalar import ScalarDist, ScalarPair

__all__ = [
    'config',
    'InclusionSpec',
    'NCSeries',
    'OVDistribution',
    'DistPair',
    'OperatorModel',
    'convolve',
    'power',
    'bp_map',
    'ScalarDist',
    'ScalarPair',
]
