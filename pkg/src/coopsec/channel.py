"""Network geometry sampling and line-of-sight channel gains.

The source (node 0) sits at the origin, which is also the cluster center.
The destination lies on the positive x-axis.  Relays are area-uniform in
the cluster disk; eavesdroppers have uniform range and azimuth about the
origin.

Randomness comes from numpy's ``PCG64`` bit generator seeded through
``SeedSequence``.  Each kind of draw has its own child stream, and every
draw is laid out so that a scenario with fewer nodes or eavesdroppers is a
prefix of one with more.  Monte-Carlo sweeps rely on that nesting: the
same trial seed gives the same relays and eavesdroppers at every grid
point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidConfig, NonPositiveDistance

PRNG_ID = f"numpy-{np.__version__}/PCG64+SeedSequence"

PHASE_MODELS = ("geometric", "uniform_random")

# child-stream keys under the scenario seed
_NODES, _EAVS, _DEST_PHASE, _EAV_PHASE, _CSI_ERROR = range(5)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) * 1e-3


def watts_to_dbm(watts: float) -> float:
    return 10.0 * math.log10(watts / 1e-3)


@dataclass(frozen=True)
class GeometryConfig:
    """Simulation geometry.  Defaults reproduce the 900 MHz setup."""

    wavelength: float = 0.33
    cluster_radius: float = 5 * 0.33
    path_loss_exponent: float = 4.0
    noise_power: float = 1e-9
    n_nodes: int = 10
    n_eavesdroppers: int = 1
    dest_distance: float = 20 * 5 * 0.33
    eav_distance_range: tuple[float, float] = (40 * 5 * 0.33, 100 * 5 * 0.33)
    phase_model: str = "geometric"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not (self.wavelength > 0 and self.cluster_radius > 0 and self.noise_power > 0):
            raise InvalidConfig("wavelength, cluster_radius and noise_power must be positive")
        if not self.path_loss_exponent >= 2:
            raise InvalidConfig("path_loss_exponent must be >= 2")
        if self.n_nodes < 1:
            raise InvalidConfig("n_nodes must be >= 1")
        if self.n_eavesdroppers < 0:
            raise InvalidConfig("n_eavesdroppers must be >= 0")
        if not self.dest_distance > 0:
            raise InvalidConfig("dest_distance must be positive")
        lo, hi = self.eav_distance_range
        if not 0 < lo <= hi:
            raise InvalidConfig("eav_distance_range must satisfy 0 < min <= max")
        if self.phase_model not in PHASE_MODELS:
            raise InvalidConfig(f"phase_model must be one of {PHASE_MODELS}")


@dataclass(frozen=True, eq=False)
class Scenario:
    node_positions: np.ndarray  # (N, 2), row 0 is the source
    dest_position: np.ndarray  # (2,)
    eav_positions: np.ndarray  # (J, 2)
    h: np.ndarray  # (N,) node -> destination
    G: np.ndarray  # (N, J) column j is node -> eavesdropper j
    noise_power: float
    seed: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return self.h.shape[0]

    @property
    def n_eavesdroppers(self) -> int:
        return self.G.shape[1]

    @property
    def h0(self) -> complex:
        """Source-to-destination gain."""
        return complex(self.h[0])

    @property
    def g0(self) -> np.ndarray:
        """Source-to-eavesdropper gains, one per eavesdropper."""
        return self.G[0, :]

    def subset(self, n_nodes: int, n_eavesdroppers: int) -> "Scenario":
        """The first ``n_nodes`` nodes and ``n_eavesdroppers`` eavesdroppers.

        Equal to sampling the smaller configuration with the same seed.
        """
        if not (1 <= n_nodes <= self.n_nodes and 0 <= n_eavesdroppers <= self.n_eavesdroppers):
            raise InvalidConfig("subset must not exceed the sampled scenario")
        return Scenario(
            node_positions=self.node_positions[:n_nodes],
            dest_position=self.dest_position,
            eav_positions=self.eav_positions[:n_eavesdroppers],
            h=self.h[:n_nodes],
            G=self.G[:n_nodes, :n_eavesdroppers],
            noise_power=self.noise_power,
            seed=self.seed,
            meta=self.meta,
        )


def los_gain(distance: float, phase: float, path_loss_exponent: float) -> complex:
    """Line-of-sight gain ``d^(-a/2) * exp(j phase)``."""
    if not distance > 0:
        raise NonPositiveDistance(f"distance must be positive, got {distance}")
    amp = distance ** (-path_loss_exponent / 2.0)
    return complex(amp * math.cos(phase), amp * math.sin(phase))


def _los_gains(d: np.ndarray, phase: np.ndarray, exponent: float) -> np.ndarray:
    if np.any(d <= 0):
        raise NonPositiveDistance("node coincides with a receiver")
    return d ** (-exponent / 2.0) * (np.cos(phase) + 1j * np.sin(phase))


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def csi_error_stream(seed: int, eavesdropper: int) -> np.random.Generator:
    """Stream for channel-estimation errors toward one eavesdropper."""
    return _stream(seed, _CSI_ERROR, eavesdropper)


def sample_scenario(config: GeometryConfig, seed: int) -> Scenario:
    """Draw one network realization; deterministic in ``(config, seed)``."""
    config.validate()
    seed = int(seed)
    N, J = config.n_nodes, config.n_eavesdroppers
    R = config.cluster_radius

    u = _stream(seed, _NODES).random((max(N - 1, 0), 2))
    radius = R * np.sqrt(u[:, 0])
    theta = 2 * np.pi * u[:, 1]
    nodes = np.zeros((N, 2))
    nodes[1:, 0] = radius * np.cos(theta)
    nodes[1:, 1] = radius * np.sin(theta)

    dest = np.array([config.dest_distance, 0.0])

    lo, hi = config.eav_distance_range
    v = _stream(seed, _EAVS).random((J, 2))
    rng_e = lo + (hi - lo) * v[:, 0]
    az = 2 * np.pi * v[:, 1]
    eavs = np.column_stack([rng_e * np.cos(az), rng_e * np.sin(az)]).reshape(J, 2)

    d_dest = np.hypot(*(nodes - dest).T)
    d_eav = np.hypot(
        nodes[:, None, 0] - eavs[None, :, 0], nodes[:, None, 1] - eavs[None, :, 1]
    ).reshape(N, J)

    if config.phase_model == "geometric":
        k = 2 * np.pi / config.wavelength
        ph_dest = np.mod(k * d_dest, 2 * np.pi)
        ph_eav = np.mod(k * d_eav, 2 * np.pi)
    else:
        ph_dest = 2 * np.pi * _stream(seed, _DEST_PHASE).random(N)
        ph_eav = np.empty((N, J))
        for j in range(J):
            ph_eav[:, j] = 2 * np.pi * _stream(seed, _EAV_PHASE, j).random(N)

    alpha = config.path_loss_exponent
    h = _los_gains(d_dest, ph_dest, alpha)
    G = _los_gains(d_eav, ph_eav, alpha).reshape(N, J)
    return Scenario(
        node_positions=nodes,
        dest_position=dest,
        eav_positions=eavs,
        h=h,
        G=G,
        noise_power=config.noise_power,
        seed=seed,
        meta={"prng": PRNG_ID, "phase_model": config.phase_model},
    )
