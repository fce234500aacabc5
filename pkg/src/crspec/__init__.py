"""Transmit covariance optimization for a multi-antenna secondary link.

The secondary transmitter maximizes its own rate under a sum-power budget
and caps on the interference power received by each primary receiver.
"""

from ._kernels import BACKEND, available_backends
from .harness import ResultRow, ScenarioConfig, gen_channels, run_scenario
from .mimo import (
    HybridConfig,
    NotImplementableError,
    best_hybrid,
    dsvd,
    hybrid,
    psvd,
    solve_p1,
    unconstrained_capacity,
    white_spectrum,
)
from .miso import closed_form_beamformer, decompose, solve_p5, theorem2_beamformer
from .model import ChannelSet, Covariance, DualPoint, PrecoderResult, achievable_rate, interference_power
from .multichannel import MultiAllocation, ToneSet, per_tone_svd_select, solve_p6, solve_p7
from .theory import PrimaryLink, capacity_loss_actual, capacity_loss_bound, multiplexing_slope
from .waterfill import solve_a1, solve_multi_mu, standard_wf

__version__ = "0.1.0"
