"""Receiver orientation models.

Device tilt angles are Laplace-distributed; the facing normal comes from
either a roll/pitch/yaw rotation or an azimuth/elevation pair.  Angles are
degrees at every interface and become radians only inside trig calls.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SQRT2 = float(np.sqrt(2.0))

ORIENTATION_MODES = ("fixed", "random-euler", "random-spherical")


@dataclass(frozen=True)
class LaplaceParams:
    """Location and spread of one orientation angle, degrees.

    The Laplace scale is tied to the standard deviation: scale = sigma/sqrt(2).
    """

    mu_deg: float = 0.0
    sigma_deg: float = 0.0

    def __post_init__(self):
        if self.sigma_deg < 0.0:
            raise ValueError("sigma_deg must be nonnegative")

    @property
    def scale_deg(self) -> float:
        return self.sigma_deg / SQRT2


@dataclass(frozen=True)
class OrientationConfig:
    """How receiver normals are generated per trial.

    fixed            -> always upright (0, 0, 1)
    random-euler     -> roll/pitch/yaw draws through the rotation formula
    random-spherical -> azimuth/elevation draws; the default elevation mean
                        of 90 degrees keeps the zero-spread case upright
    """

    mode: str = "fixed"
    roll: LaplaceParams = LaplaceParams(0.0, 10.0)
    pitch: LaplaceParams = LaplaceParams(0.0, 30.0)
    yaw: LaplaceParams = LaplaceParams(0.0, 10.0)
    azimuth: LaplaceParams = LaplaceParams(0.0, 0.0)
    elevation: LaplaceParams = LaplaceParams(90.0, 0.0)

    def __post_init__(self):
        if self.mode not in ORIENTATION_MODES:
            raise ValueError(f"mode must be one of {ORIENTATION_MODES}, got {self.mode!r}")


def laplace_sample(p: LaplaceParams, u: float) -> float:
    """Map a uniform draw u in the open interval (-0.5, 0.5) through the
    inverse Laplace CDF; u = 0 lands exactly on the median."""
    if abs(u) >= 0.5:
        raise ValueError("u must lie strictly inside (-0.5, 0.5)")
    return float(p.mu_deg - p.scale_deg * np.sign(u) * np.log1p(-2.0 * abs(u)))


def _uniform_open(rng: np.random.Generator) -> float:
    # rejection keeps the draw strictly inside (-0.5, 0.5); the endpoint has
    # probability ~2^-53 but would hit the log singularity
    while True:
        u = float(rng.uniform(-0.5, 0.5))
        if abs(u) < 0.5:
            return u


def sample_orientation_angles(cfg: OrientationConfig, rng: np.random.Generator) -> tuple[float, float]:
    """Independent (azimuth_deg, elevation_deg) draws for the spherical mode."""
    if cfg.mode != "random-spherical":
        raise ValueError("orientation config is not in random-spherical mode")
    phi = laplace_sample(cfg.azimuth, _uniform_open(rng))
    theta = laplace_sample(cfg.elevation, _uniform_open(rng))
    return phi, theta


def normal_from_spherical(azimuth_deg: float, elevation_deg: float) -> np.ndarray:
    """Facing normal from azimuth/elevation; elevation 90 faces straight up."""
    p = np.radians(azimuth_deg)
    t = np.radians(elevation_deg)
    return np.array([np.cos(t) * np.cos(p), np.cos(t) * np.sin(p), np.sin(t)])


def normal_from_euler(roll_deg: float, pitch_deg: float, yaw_deg: float) -> np.ndarray:
    """Facing normal of a device rotated by roll/pitch/yaw; zero angles face up.

    The combination is exactly unit norm for every angle triple (the cross
    terms cancel), so no renormalization is applied.
    """
    a = np.radians(roll_deg)
    b = np.radians(pitch_deg)
    g = np.radians(yaw_deg)
    return np.array(
        [
            np.cos(g) * np.sin(a) * np.sin(b) + np.cos(a) * np.sin(g),
            np.sin(a) * np.sin(g) - np.cos(a) * np.cos(g) * np.sin(b),
            np.cos(g) * np.cos(b),
        ]
    )


def sample_receiver_normal(cfg: OrientationConfig, rng: np.random.Generator) -> np.ndarray:
    """One facing-normal draw per the configured mode.

    Fixed mode consumes no randomness and returns the upright normal.
    """
    if cfg.mode == "fixed":
        return np.array([0.0, 0.0, 1.0])
    if cfg.mode == "random-euler":
        roll = laplace_sample(cfg.roll, _uniform_open(rng))
        pitch = laplace_sample(cfg.pitch, _uniform_open(rng))
        yaw = laplace_sample(cfg.yaw, _uniform_open(rng))
        return normal_from_euler(roll, pitch, yaw)
    phi, theta = sample_orientation_angles(cfg, rng)
    return normal_from_spherical(phi, theta)
