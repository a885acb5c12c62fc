"""Differential CSI feedback for time-correlated MIMO Rayleigh channels.

Closed-form minimum feedback rate, distortion-versus-interval analysis,
optimal feedback interval, water-filling ergodic capacity, and a
Lloyd-quantized differential feedback protocol, plus a CLI simulator.
"""

from .channel import ChannelParams
from .capacity import CapacityConfig
from .ratedist import FeedbackBudget

__version__ = "0.1.0"

__all__ = ["ChannelParams", "CapacityConfig", "FeedbackBudget", "__version__"]
