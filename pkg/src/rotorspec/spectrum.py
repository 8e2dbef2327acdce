"""Transition line lists and band-envelope synthesis.

Vibration-orientation lines couple the triply degenerate stretching vibration
to the orientational levels: the lab-frame dipole is D^1(omega) contracted
with the molecule-frame transition dipole, so the orientational selection
rules are rank-1 on both the site and molecule sides.  Excited-vibrational
orientation levels reuse the ground-state level table with tunneling gaps
multiplied by `excited_scale`; the two high-frequency band offsets can be
overridden through `extra_offsets` when calibrated values are available.

Nuclear spin species are conserved strictly.  Within the ground vibrational
state this forces equal species on both levels of a Raman line.  For a
vibration-orientation line the excited level hosts every species contained in
(vibration x orientation) on the molecular side, and the rank-1 molecular
selection rule is exactly the condition that the lower level's species is
among them, so one gate covers both.

Line strengths (design choice, see README): the orientational transition
moments only gate which finals are reachable; each initial level then
distributes unit total strength over its reachable finals proportionally to
their degeneracy (an oscillator-strength sum rule).  Mode "matrix_element"
uses the squared rank-1/rank-2 moments themselves instead; `strength_factors`
rescales named transitions on top of either mode.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import rotor, symmetry, units
from .rotor import EnergyLevel, find_level

__all__ = [
    "VibrationBandModel",
    "PopulationModel",
    "Line",
    "SpectrumConfig",
    "SpectrumError",
    "populations",
    "vibration_orientation_lines",
    "rotational_raman_lines",
    "sum_band_lines",
    "synthesize",
    "DEFAULT_FROZEN_FRACTIONS",
]


class SpectrumError(ValueError):
    """Invalid spectral model input."""


#: infinite-temperature statistical fractions of the spin species
DEFAULT_FROZEN_FRACTIONS = {
    s.label: s.total_count / 16.0 for s in symmetry.spin_decomposition()
}

#: relative orientational strength below which a transition is dropped
STRENGTH_GATE = 1e-2

#: total dimension of the orientational levels kept as vibration-orientation
#: finals (the J' <= 2 content: 1 + 9 + 25)
_FINAL_DIM = 35


@dataclass(frozen=True)
class VibrationBandModel:
    """Band origin and excited-state offsets of the vibration-orientation
    system.  nu0 is the frequency of the (L1)1 -> (L1)1 reference transition.

    extra_offsets may carry "dw_L1_star" (applied to the near-degenerate
    L1(2) + I1I2 + E4 final group) and "dw_LE3_star" (applied to E3(1)), both
    as offsets from nu0 in cm^-1; finals without an override use the scaled
    ground-state level table.
    """

    nu0: float
    excited_scale: float = 1.0
    extra_offsets: dict = field(default_factory=dict)

    def validate(self) -> list[str]:
        problems = []
        if not self.nu0 > 0:
            problems.append(f"nu0 must be positive, got {self.nu0}")
        if not self.excited_scale > 0:
            problems.append(f"excited_scale must be positive, got {self.excited_scale}")
        unknown = set(self.extra_offsets) - {"dw_L1_star", "dw_LE3_star"}
        if unknown:
            problems.append(f"unknown extra_offsets keys: {sorted(unknown)}")
        return problems


@dataclass(frozen=True)
class PopulationModel:
    """Level populations: full thermal equilibrium, or nuclear-spin species
    frozen at fixed fractions with Boltzmann equilibrium inside each species."""

    mode: str = "thermal"           # thermal | spin_frozen
    T: float = 7.0                  # kelvin
    frozen_fractions: dict | None = None

    def fractions(self) -> dict[str, float]:
        frac = dict(self.frozen_fractions or DEFAULT_FROZEN_FRACTIONS)
        return frac

    def validate(self) -> list[str]:
        problems = []
        if self.mode not in ("thermal", "spin_frozen"):
            problems.append(f"mode must be thermal or spin_frozen, got {self.mode!r}")
        if not self.T > 0:
            problems.append(f"temperature must be positive, got {self.T}")
        frac = self.fractions()
        if set(frac) != {"A", "E", "F"}:
            problems.append(f"frozen fractions must be keyed A, E, F, got {sorted(frac)}")
        else:
            if any(v < 0 for v in frac.values()):
                problems.append("frozen fractions must be non-negative")
            if abs(sum(frac.values()) - 1.0) > 1e-12:
                problems.append(f"frozen fractions sum to {sum(frac.values())!r}, not 1")
        return problems


@dataclass(frozen=True)
class Line:
    frequency: float
    intensity: float
    lower: str
    upper: str
    activity: str  # IR | Raman

    def __post_init__(self):
        if self.frequency < 0:
            raise SpectrumError(f"negative line frequency {self.frequency}")
        if self.intensity < 0:
            raise SpectrumError(f"negative line intensity {self.intensity}")


@dataclass(frozen=True)
class SpectrumConfig:
    start: float
    stop: float
    step: float
    shape: str = "gaussian"   # gaussian | lorentzian
    fwhm: float = 1.5

    def validate(self) -> list[str]:
        problems = []
        if not self.start < self.stop:
            problems.append(f"grid start {self.start} must be below stop {self.stop}")
        if not self.step > 0:
            problems.append(f"grid step must be positive, got {self.step}")
        if not self.fwhm > 0:
            problems.append(f"fwhm must be positive, got {self.fwhm}")
        if self.shape not in ("gaussian", "lorentzian"):
            problems.append(f"shape must be gaussian or lorentzian, got {self.shape!r}")
        return problems

    @property
    def fwhm_ghz(self) -> float:
        return units.cm1_to_ghz(self.fwhm)


# ----------------------------------------------------------------------------
# populations
# ----------------------------------------------------------------------------

def _pauli_count(level: EnergyLevel) -> float:
    lab = symmetry.LEVEL_LABELS[level.rovib_label]
    return lab.pauli_count * (level.degeneracy / lab.dimension)


def populations(levels, pop: PopulationModel) -> dict[str, float]:
    """Fraction of molecules in each level, keyed by level name "(L1)1".

    Thermal mode: p ~ g * exp(-E/kT) with g the Pauli-allowed state count of
    the level (site degeneracy times nuclear-spin pairing).  Spin-frozen mode
    fixes each species' share and equilibrates inside the species only.
    """
    problems = pop.validate()
    if problems:
        raise SpectrumError("; ".join(problems))
    missing = [lev.name for lev in levels if lev.spin_species is None]
    if missing:
        raise SpectrumError(f"levels without spin species: {missing}")
    kt = units.thermal_energy_cm1(pop.T)
    weights = {lev.name: _pauli_count(lev) * math.exp(-lev.energy / kt) for lev in levels}
    if pop.mode == "thermal":
        total = sum(weights.values())
        return {name: w / total for name, w in weights.items()}
    fractions = pop.fractions()
    out = {}
    for species, share in fractions.items():
        members = [lev for lev in levels if lev.spin_species == species]
        if not members:
            if share > 0:
                raise SpectrumError(f"no levels of species {species} to carry "
                                    f"its frozen fraction {share}")
            continue
        norm = sum(weights[lev.name] for lev in members)
        for lev in members:
            out[lev.name] = share * weights[lev.name] / norm
    return out


# ----------------------------------------------------------------------------
# selection and strengths
# ----------------------------------------------------------------------------

def _jmax_from_basis(levels) -> int:
    n = next(lev.vectors.shape[0] for lev in levels if lev.vectors is not None)
    jmax = 0
    while (jmax + 1) * (2 * jmax + 1) * (2 * jmax + 3) // 3 != n:
        jmax += 1
        if jmax > 200:
            raise SpectrumError("level vectors do not match any basis size")
    return jmax


def hosted_species(final_label: str) -> frozenset[str]:
    """Spin species a vibration-orientation level can host: those paired with
    the molecular content of (F vibration) x (orientational label)."""
    lab = symmetry.LEVEL_LABELS[final_label]
    table = symmetry.character_table("T")
    chi = table.characters("F") * lab.mol_characters()
    content = symmetry.decompose(chi, table)
    species = set()
    for irrep in content:
        species.add({"A": "A", "1E": "E", "2E": "E", "F": "F"}[irrep])
    return frozenset(species)


def _gated_finals(initial: EnergyLevel, finals, jmax: int, rank: int):
    """Finals with orientational strength above STRENGTH_GATE of the
    strongest channel from this initial level; returns [(final, S)]."""
    strengths = []
    for fin in finals:
        s = rotor.transition_strength(initial, fin, jmax, rank)
        strengths.append((fin, s))
    smax = max((s for _, s in strengths), default=0.0)
    if smax <= 0.0:
        return []
    return [(fin, s) for fin, s in strengths if s > STRENGTH_GATE * smax]


def _intensities(initial, gated, pop_fraction, mode, factors, upper_suffix):
    """Distribute the initial level's population over its gated finals."""
    out = {}
    if mode == "sum_rule":
        denom = sum(fin.degeneracy for fin, _ in gated)
        for fin, _ in gated:
            out[fin.name] = pop_fraction * fin.degeneracy / denom
    elif mode == "matrix_element":
        for fin, s in gated:
            out[fin.name] = pop_fraction * s / initial.degeneracy
    else:
        raise SpectrumError(f"unknown strength mode {mode!r}")
    if factors:
        for fin, _ in gated:
            key = (initial.name, fin.name + upper_suffix)
            if key in factors:
                out[fin.name] *= factors[key]
    return out


# ----------------------------------------------------------------------------
# line generators
# ----------------------------------------------------------------------------

_INITIAL_LEVELS = (("A1", 1), ("L1", 1), ("E2", 1))
_HIGH_GROUP = {("L1", 2), ("I1I2", 1), ("E4", 1)}   # the nu0 + dw_L1_star band
_E3_FINAL = ("E3", 1)


def vibration_orientation_lines(levels, band: VibrationBandModel,
                                pop: PopulationModel,
                                strength_mode: str = "sum_rule",
                                strength_factors: dict | None = None):
    """IR lines from the populated ground orientation levels to the excited
    vibrational state's orientation levels (ground table reused, tunneling
    gaps scaled by excited_scale, high-band offsets overridable)."""
    problems = band.validate()
    if problems:
        raise SpectrumError("; ".join(problems))
    jmax = _jmax_from_basis(levels)
    initials = []
    missing = []
    for name, ordn in _INITIAL_LEVELS:
        try:
            initials.append(find_level(levels, name, ordn))
        except rotor.RotorError:
            missing.append(f"({name}){ordn}")
    if missing:
        raise SpectrumError(f"required ground levels missing: {', '.join(missing)}")
    ordered = sorted(levels, key=lambda lev: (lev.energy, lev.rovib_label))
    finals, total = [], 0
    for lev in ordered:
        if lev.rovib_label not in symmetry.LEVEL_LABELS:
            continue  # unresolved cluster; populations already guard initials
        if total + lev.degeneracy > _FINAL_DIM:
            break
        finals.append(lev)
        total += lev.degeneracy
    e_l1 = find_level(levels, "L1", 1).energy
    fractions = populations(levels, pop)

    def excited_offset(fin: EnergyLevel) -> float:
        key = (fin.rovib_label, fin.ordinal)
        if key in _HIGH_GROUP and band.extra_offsets.get("dw_L1_star") is not None:
            return float(band.extra_offsets["dw_L1_star"])
        if key == _E3_FINAL and band.extra_offsets.get("dw_LE3_star") is not None:
            return float(band.extra_offsets["dw_LE3_star"])
        return band.excited_scale * (fin.energy - e_l1)

    lines = []
    for ini in initials:
        gated = _gated_finals(ini, finals, jmax, rank=1)
        if not gated:
            continue
        intens = _intensities(ini, gated, fractions[ini.name], strength_mode,
                              strength_factors, upper_suffix="*")
        for fin, _ in gated:
            if ini.spin_species not in hosted_species(fin.rovib_label):
                continue  # spin species cannot ride into this final
            freq = band.nu0 + excited_offset(fin) - (ini.energy - e_l1)
            lines.append(Line(frequency=freq, intensity=intens[fin.name],
                              lower=ini.name, upper=fin.name + "*", activity="IR"))
    lines.sort(key=lambda l: (l.frequency, l.lower, l.upper))
    return lines


def rotational_raman_lines(levels, pop: PopulationModel,
                           strength_mode: str = "sum_rule",
                           strength_factors: dict | None = None):
    """Stokes lines among the ground-vibrational orientation levels; rank-2
    selection on both frames with strict spin-species conservation."""
    jmax = _jmax_from_basis(levels)
    fractions = populations(levels, pop)
    ordered = sorted(levels, key=lambda lev: (lev.energy, lev.rovib_label))
    lines = []
    for ini in ordered:
        if fractions[ini.name] <= 1e-12:
            continue
        candidates = [lev for lev in ordered
                      if lev.energy > ini.energy + 1e-9
                      and lev.spin_species == ini.spin_species]
        gated = _gated_finals(ini, candidates, jmax, rank=2)
        if not gated:
            continue
        intens = _intensities(ini, gated, fractions[ini.name], strength_mode,
                              strength_factors, upper_suffix="")
        for fin, _ in gated:
            lines.append(Line(frequency=fin.energy - ini.energy,
                              intensity=intens[fin.name],
                              lower=ini.name, upper=fin.name, activity="Raman"))
    lines.sort(key=lambda l: (l.frequency, l.lower, l.upper))
    return lines


def sum_band_lines(base, lattice_freq: float, intensity_scale: float = 0.1):
    """Copies of the base lines shifted up by one lattice-mode quantum."""
    if lattice_freq < 0:
        raise SpectrumError(f"lattice frequency must be non-negative, got {lattice_freq}")
    if intensity_scale < 0:
        raise SpectrumError(f"intensity scale must be non-negative, got {intensity_scale}")
    return [Line(frequency=l.frequency + lattice_freq,
                 intensity=l.intensity * intensity_scale,
                 lower=l.lower, upper=l.upper + "+lat", activity=l.activity)
            for l in base]


# ----------------------------------------------------------------------------
# envelope synthesis
# ----------------------------------------------------------------------------

def _profile(shape: str, offsets: np.ndarray, fwhm: float) -> np.ndarray:
    if shape == "gaussian":
        sigma = fwhm / (2.0 * math.sqrt(2.0 * math.log(2.0)))
        return np.exp(-0.5 * (offsets / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi))
    if shape == "lorentzian":
        gamma = fwhm / 2.0
        return (gamma / math.pi) / (offsets**2 + gamma**2)
    raise SpectrumError(f"unknown line shape {shape!r}")


def synthesize(lines, config: SpectrumConfig) -> tuple[np.ndarray, np.ndarray]:
    """Sampled band envelope: sum of unit-area profiles scaled by intensity.

    Lines outside the grid raise a warning naming them and still contribute
    their (clipped) tails.
    """
    problems = config.validate()
    if problems:
        raise SpectrumError("; ".join(problems))
    n = int(math.floor((config.stop - config.start) / config.step + 1e-9)) + 1
    freqs = config.start + config.step * np.arange(n)
    amps = np.zeros(n)
    clipped = [l for l in lines if not (config.start <= l.frequency <= config.stop)]
    if clipped:
        listing = ", ".join(f"{l.lower}->{l.upper} at {l.frequency:g}" for l in clipped)
        warnings.warn(f"lines outside the synthesis grid: {listing}", stacklevel=2)
    for line in lines:
        amps += line.intensity * _profile(config.shape, freqs - line.frequency, config.fwhm)
    return freqs, amps
