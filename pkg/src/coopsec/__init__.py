"""Decode-and-forward cooperative beamforming for physical-layer secrecy."""

__version__ = "0.1.0"

from .channel import GeometryConfig, Scenario, los_gain, sample_scenario  # noqa: E402
from .design import (  # noqa: E402
    DesignProblem,
    IterationTrace,
    Objective,
    imperfect_min_power,
    imperfect_multi_max,
    imperfect_single_max,
    max_secrecy_single,
    min_power_single,
    null_max_secrecy_multi,
    null_min_power_multi,
    solve,
)
from .secrecy import (  # noqa: E402
    BeamformerSolution,
    Stage1Accounting,
    capacity_destination,
    capacity_eavesdropper,
    direct_min_power,
    direct_secrecy,
    secrecy_capacity,
)
