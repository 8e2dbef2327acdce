"""Qubit-addressability arithmetic: pairwise frequency separations, channel
counts within a band envelope, dilution-controlled nearest-neighbor distances
and dipole-coupling magnitudes.

Distances use the nanometer-scale c^(-1/3) geometry of a diluted cation
sublattice.  The Poisson mean nearest-neighbor distance of a random point
process at density c/a^3 is Gamma(4/3) (4 pi c / 3 a^3)^(-1/3)
= 0.55396 a c^(-1/3); the Monte Carlo check samples the diluted lattice
directly (the rank of the first occupied site in distance order is geometric
in c, so the sampling is exact and cheap).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import units

__all__ = [
    "CrystalSpec",
    "PlanReport",
    "PlanError",
    "delta_omega_table",
    "addressable_channels",
    "nn_distance",
    "nn_distance_mc",
    "coupling_estimate",
    "build_plan_report",
    "POISSON_MEAN_FACTOR",
]


class PlanError(ValueError):
    """Invalid planning input."""


#: Gamma(4/3) * (3/(4*pi))**(1/3)
POISSON_MEAN_FACTOR = math.gamma(4.0 / 3.0) * (3.0 / (4.0 * math.pi)) ** (1.0 / 3.0)


@dataclass(frozen=True)
class CrystalSpec:
    """Cation sublattice: site spacing at full occupancy and dilution."""

    a_nm: float
    c: float

    def __post_init__(self):
        if not self.a_nm > 0:
            raise PlanError(f"lattice spacing must be positive, got {self.a_nm}")
        if not 0 < self.c <= 1:
            raise PlanError(f"dilution fraction must be in (0, 1], got {self.c}")


@dataclass(frozen=True)
class PlanReport:
    delta_omega_pairs: tuple   # (id_i, id_j, delta_cm1, delta_ghz), descending
    channels: int
    r12_characteristic_nm: float
    r12_poisson_mean_nm: float
    couplings: tuple           # (label, r_nm, coupling_hz)


def delta_omega_table(lines) -> list[tuple[str, str, float, float]]:
    """All unordered line pairs with separations in cm^-1 and GHz, sorted by
    separation descending.  Needs at least two lines."""
    if len(lines) < 2:
        raise PlanError(f"need at least two lines for a separation table, got {len(lines)}")
    pairs = []
    for i in range(len(lines)):
        for j in range(i + 1, len(lines)):
            li, lj = lines[i], lines[j]
            d = abs(li.frequency - lj.frequency)
            a = f"{li.lower}->{li.upper}"
            b = f"{lj.lower}->{lj.upper}"
            if lj.frequency > li.frequency:
                a, b = b, a
            pairs.append((a, b, d, units.cm1_to_ghz(d)))
    pairs.sort(key=lambda p: (-p[2], p[0], p[1]))
    return pairs


def addressable_channels(band_fwhm_cm1: float, source_linewidth_ghz: float) -> int:
    """Distinct probing channels a narrow source resolves within one band."""
    if not band_fwhm_cm1 > 0 or not source_linewidth_ghz > 0:
        raise PlanError("band width and source linewidth must be positive")
    return max(1, int(math.floor(units.cm1_to_ghz(band_fwhm_cm1) / source_linewidth_ghz)))


def nn_distance(spec: CrystalSpec, mode: str = "characteristic") -> float:
    """Nearest-neighbor distance in nm: `characteristic` is the density scale
    a c^(-1/3); `poisson_mean` the mean of a random point process at c/a^3."""
    scale = spec.a_nm * spec.c ** (-1.0 / 3.0)
    if mode == "characteristic":
        return scale
    if mode == "poisson_mean":
        return POISSON_MEAN_FACTOR * scale
    raise PlanError(f"unknown distance mode {mode!r}")


def _sorted_lattice_distances(c: float) -> np.ndarray:
    # enough shells that the first occupied site lies inside with prob 1-1e-9
    needed = max(8, int(math.ceil(math.log(1e-9) / math.log(1.0 - c))) if c < 1 else 8)
    half = 1
    while (2 * half + 1) ** 3 - 1 < 3 * needed:
        half += 1
    r = np.arange(-half, half + 1)
    X, Y, Z = np.meshgrid(r, r, r, indexing="ij")
    d2 = (X**2 + Y**2 + Z**2).ravel()
    d2 = d2[d2 > 0]
    return np.sqrt(np.sort(d2))


def nn_distance_mc(spec: CrystalSpec, n_samples: int = 100_000, seed: int = 0) -> float:
    """Monte Carlo mean nearest-neighbor distance on the randomly diluted
    lattice, in nm.

    From an occupied reference site, visit the other sites in distance order;
    each is occupied independently with probability c, so the rank of the
    first occupied one is a geometric draw and the sample is exact.
    """
    if n_samples < 1:
        raise PlanError("need at least one Monte Carlo sample")
    if spec.c < 1e-4:
        raise PlanError("Monte Carlo dilution check supports c >= 1e-4")
    distances = _sorted_lattice_distances(spec.c)
    rng = np.random.default_rng(seed)
    ranks = rng.geometric(spec.c, size=n_samples) - 1
    ranks = np.minimum(ranks, len(distances) - 1)
    return float(spec.a_nm * distances[ranks].mean())


def coupling_estimate(mu_debye: float, r_nm: float) -> float:
    """Dipole-dipole coupling magnitude mu^2 / (4 pi eps0 h r^3) in Hz."""
    if mu_debye < 0:
        raise PlanError(f"dipole moment must be non-negative, got {mu_debye}")
    if not r_nm > 0:
        raise PlanError(f"distance must be positive, got {r_nm}")
    mu = mu_debye * units.DEBYE_C_M
    r = r_nm * units.NM_M
    return mu**2 / (4.0 * math.pi * units.VACUUM_PERMITTIVITY * units.PLANCK_J_S * r**3)


def build_plan_report(lines, crystal: CrystalSpec, band_fwhm_cm1: float,
                      source_linewidth_ghz: float, mu_debye: float = 1.0,
                      max_pairs: int | None = None) -> PlanReport:
    pairs = delta_omega_table(lines)
    if max_pairs is not None:
        pairs = pairs[:max_pairs]
    r_char = nn_distance(crystal, "characteristic")
    r_mean = nn_distance(crystal, "poisson_mean")
    couplings = (
        ("characteristic", r_char, coupling_estimate(mu_debye, r_char)),
        ("poisson_mean", r_mean, coupling_estimate(mu_debye, r_mean)),
    )
    return PlanReport(
        delta_omega_pairs=tuple(pairs),
        channels=addressable_channels(band_fwhm_cm1, source_linewidth_ghz),
        r12_characteristic_nm=r_char,
        r12_poisson_mean_nm=r_mean,
        couplings=couplings,
    )
