"""Hindered-rotor eigenproblem for a tetrahedral molecule at a tetrahedral
crystal site.

The Hamiltonian is H = B*P^2 + beta*B*V(omega) in a symmetric-top basis
|J k m>, k the molecule-frame and m the lattice-frame projection.  V(omega)
is built from rotation-matrix invariants of the proper tetrahedral rotation
group acting simultaneously on both frames; rank 3 is the leading term when
neither group contains inversion, with an optional rank-4 admixture.  The
coefficient tensor of each rank is the (unique) two-sided group average of
D^l, so invariance under all 144 site x molecule rotations holds by
construction and the matrix is real symmetric.

Potential normalization fixes max V - min V = 1 over orientation space, so
the barrier height is exactly beta*B.  With the default negative rank-3
coefficient the potential minima sit at the aligned orientations (molecular
tetrahedron coincident with the site tetrahedron); the aligned-frame value is
then the global minimum and the quarter-turn about a coordinate axis gives
the global maximum.

Eigenlevels are classified by character projection over the product group
(site rotations act on m, molecular rotations on k) and receive the cluster
labels of symmetry.LEVEL_LABELS together with their nuclear-spin species.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg
import scipy.optimize
import scipy.sparse

from . import symmetry
from .symmetry import LEVEL_LABELS, T_CLASS_REPS, T_CLASS_SIZES, T_ROTATIONS

__all__ = [
    "BasisState",
    "RotorModel",
    "EnergyLevel",
    "Eigensystem",
    "RotorError",
    "PotentialError",
    "build_basis",
    "wigner3j",
    "wigner_d_matrix",
    "invariant_coefficients",
    "potential_range",
    "hamiltonian_matrix",
    "diagonalize",
    "classify_levels",
    "tunneling_frequencies",
    "barrier_height",
    "rank_operator_blocks",
    "LevelGapCache",
    "DEFAULT_POTENTIAL",
    "DEFAULT_B_CM1",
    "DEFAULT_JMAX",
]


class RotorError(RuntimeError):
    """Eigenproblem failure or invalid model."""


class PotentialError(ValueError):
    """Potential specification violates the unit-range normalization."""


DEFAULT_B_CM1 = 5.9
DEFAULT_JMAX = 10
SUPPORTED_RANKS = (3, 4)


@dataclass(frozen=True, order=True)
class BasisState:
    J: int
    k: int
    m: int

    def __post_init__(self):
        if self.J < 0 or abs(self.k) > self.J or abs(self.m) > self.J:
            raise ValueError(f"invalid |J k m> = |{self.J} {self.k} {self.m}>")


def build_basis(jmax: int) -> list[BasisState]:
    """All |J k m> with J <= jmax; J ascending, then k, then m.
    Count is sum_J (2J+1)^2 = (jmax+1)(2jmax+1)(2jmax+3)/3."""
    if jmax < 0:
        raise ValueError("jmax must be >= 0")
    return [
        BasisState(J, k, m)
        for J in range(jmax + 1)
        for k in range(-J, J + 1)
        for m in range(-J, J + 1)
    ]


# ----------------------------------------------------------------------------
# Wigner 3j (Racah formula, exact integer factorials)
# ----------------------------------------------------------------------------

def wigner3j(j1: int, j2: int, j3: int, m1: int, m2: int, m3: int) -> float:
    """3j symbol for integer arguments.  Out-of-domain inputs return 0."""
    if m1 + m2 + m3 != 0:
        return 0.0
    if j3 < abs(j1 - j2) or j3 > j1 + j2:
        return 0.0
    if abs(m1) > j1 or abs(m2) > j2 or abs(m3) > j3:
        return 0.0
    from fractions import Fraction

    f = math.factorial
    num = (f(j1 + j2 - j3) * f(j1 - j2 + j3) * f(-j1 + j2 + j3)
           * f(j1 - m1) * f(j1 + m1) * f(j2 - m2) * f(j2 + m2)
           * f(j3 - m3) * f(j3 + m3))
    den = f(j1 + j2 + j3 + 1)
    ssum = 0
    scale = f(j1 + j2 + j3)  # multinomial factor keeps every k-term integral
    for k in range(max(0, j2 - j3 - m1, j1 - j3 + m2),
                   min(j1 + j2 - j3, j1 - m1, j2 + m2) + 1):
        term = scale // (f(k) * f(j1 + j2 - j3 - k) * f(j1 - m1 - k)
                         * f(j2 + m2 - k) * f(j3 - j2 + m1 + k)
                         * f(j3 - j1 - m2 + k))
        ssum += -term if k % 2 else term
    sign = -1 if (j1 - j2 - m3) % 2 else 1
    return sign * math.sqrt(float(Fraction(num, den))) * float(Fraction(ssum, scale))


# ----------------------------------------------------------------------------
# Wigner D matrices for finite rotations
# ----------------------------------------------------------------------------

def _angular_momentum(j: int):
    dim = 2 * j + 1
    m = np.arange(-j, j + 1, dtype=float)
    jz = np.diag(m)
    jp = np.zeros((dim, dim))
    for i in range(dim - 1):
        jp[i + 1, i] = math.sqrt(j * (j + 1) - m[i] * (m[i] + 1))
    jx = (jp + jp.T) / 2
    jy = (jp - jp.T) / 2j
    return jx, jy, jz


@lru_cache(maxsize=None)
def _wigner_d_cached(j: int, axis: tuple, angle: float) -> np.ndarray:
    jx, jy, jz = _angular_momentum(j)
    n = np.asarray(axis, dtype=float)
    norm = np.linalg.norm(n)
    if norm > 0:
        n = n / norm
    D = scipy.linalg.expm(-1j * angle * (n[0] * jx + n[1] * jy + n[2] * jz))
    D.setflags(write=False)
    return D


def wigner_d_matrix(j: int, axis, angle: float) -> np.ndarray:
    """D^j for the active rotation by `angle` about `axis`, rows/cols ordered
    m = -j..j."""
    return _wigner_d_cached(j, tuple(axis), float(angle))


# ----------------------------------------------------------------------------
# invariant potential coefficients
# ----------------------------------------------------------------------------

@lru_cache(maxsize=None)
def invariant_coefficients(rank: int) -> np.ndarray:
    """Real symmetric coefficient matrix c of the unique two-sided tetrahedral
    invariant at the given rank: V(omega) = sum_{mu nu} c_{mu nu} D^rank_{mu nu}.

    c is the complex conjugate of the group-average projector onto the
    invariant vector, normalized to V(identity) = 1.
    """
    if rank not in SUPPORTED_RANKS:
        raise PotentialError(f"unsupported potential rank {rank}; use {SUPPORTED_RANKS}")
    dim = 2 * rank + 1
    P = np.zeros((dim, dim), dtype=complex)
    for axis, angle, _ in T_ROTATIONS:
        P += wigner_d_matrix(rank, axis, angle)
    P /= len(T_ROTATIONS)
    if abs(np.trace(P).real - 1.0) > 1e-10:
        raise RuntimeError(f"rank-{rank} invariant subspace is not one-dimensional")
    c = P.conj()
    if np.abs(c.imag).max() > 1e-12:
        raise RuntimeError(f"rank-{rank} coefficient matrix is not real")
    c = np.ascontiguousarray(c.real)
    c[np.abs(c) < 1e-14] = 0.0  # chop group-average noise; exact zeros by symmetry
    c.setflags(write=False)
    return c


def _little_d(rank: int, beta_angles: np.ndarray) -> np.ndarray:
    """Stack of real d^rank(beta) matrices for an array of angles."""
    return np.array([wigner_d_matrix(rank, (0.0, 1.0, 0.0), b).real for b in beta_angles])


def _potential_on_grid(potential, n: int = 32):
    """Evaluate V on an Euler grid; returns (values, angle triples)."""
    alphas = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
    gammas = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
    betas = np.arccos(np.linspace(-1.0, 1.0, n + 1))
    A, G = np.meshgrid(alphas, gammas, indexing="ij")
    values = np.zeros((len(betas), n, n))
    for rank, weight in potential:
        c = invariant_coefficients(rank)
        dstack = _little_d(rank, betas)
        ms = np.arange(-rank, rank + 1)
        for i, mu in enumerate(ms):
            for j_, nu in enumerate(ms):
                if c[i, j_] == 0.0:
                    continue
                phase = np.cos(A * mu + G * nu)  # V real: sine parts cancel
                values += weight * c[i, j_] * dstack[:, i, j_][:, None, None] * phase
    return values, (alphas, betas, gammas)


def _potential_value(potential, angles: np.ndarray) -> float:
    a, b, g = angles
    v = 0.0
    for rank, weight in potential:
        c = invariant_coefficients(rank)
        d = wigner_d_matrix(rank, (0.0, 1.0, 0.0), b).real
        ms = np.arange(-rank, rank + 1)
        phase = np.cos(np.add.outer(ms * a, ms * g))
        v += weight * float(np.sum(c * d * phase))
    return v


def potential_range(potential, grid_n: int = 32) -> tuple[float, float]:
    """(min, max) of V over orientations: dense grid scan plus local
    refinement from the best grid points."""
    return _potential_range_cached(tuple((int(r), float(w)) for r, w in potential), grid_n)


@lru_cache(maxsize=64)
def _potential_range_cached(potential: tuple, grid_n: int) -> tuple[float, float]:
    values, (alphas, betas, gammas) = _potential_on_grid(potential, grid_n)
    lo_idx = np.unravel_index(np.argmin(values), values.shape)
    hi_idx = np.unravel_index(np.argmax(values), values.shape)

    def refine(idx, sign):
        x0 = np.array([alphas[idx[1]], betas[idx[0]], gammas[idx[2]]])
        res = scipy.optimize.minimize(
            lambda x: sign * _potential_value(potential, x), x0,
            method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 400},
        )
        return sign * res.fun

    vmin = min(values.min(), refine(lo_idx, +1.0))
    vmax = max(values.max(), refine(hi_idx, -1.0))
    return float(vmin), float(vmax)


def normalize_potential(potential) -> tuple[tuple[int, float], ...]:
    """Rescale coefficients so that max V - min V = 1."""
    pot = tuple((int(r), float(w)) for r, w in potential)
    if not pot:
        raise PotentialError("potential must contain at least one term")
    for rank, _ in pot:
        if rank not in SUPPORTED_RANKS:
            raise PotentialError(f"unsupported potential rank {rank}")
    vmin, vmax = potential_range(pot)
    span = vmax - vmin
    if span <= 1e-12:
        raise PotentialError("potential is constant; cannot normalize to unit range")
    return tuple((r, w / span) for r, w in pot)


DEFAULT_POTENTIAL = ((3, -0.5),)  # normalized rank-3 invariant, minima aligned


# ----------------------------------------------------------------------------
# model
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class RotorModel:
    """Physical parameters of H = B*P^2 + beta*B*V(omega).

    `potential` holds normalized (rank, coefficient) pairs; use
    RotorModel.create to normalize arbitrary coefficients.
    """

    B: float = DEFAULT_B_CM1
    beta: float = 1.0
    potential: tuple[tuple[int, float], ...] = DEFAULT_POTENTIAL
    Jmax: int = DEFAULT_JMAX

    @classmethod
    def create(cls, B: float = DEFAULT_B_CM1, beta: float = 1.0,
               potential=((3, -1.0),), Jmax: int = DEFAULT_JMAX) -> "RotorModel":
        return cls(B=float(B), beta=float(beta),
                   potential=normalize_potential(potential), Jmax=int(Jmax))

    def validate(self) -> list[str]:
        problems = []
        if not self.B > 0:
            problems.append(f"B must be positive, got {self.B}")
        if self.beta < 0:
            problems.append(f"beta must be non-negative, got {self.beta}; "
                            "flip the potential sign instead")
        if self.Jmax < 2:
            problems.append(f"Jmax must be >= 2, got {self.Jmax}")
        if not self.potential:
            problems.append("potential must contain at least one term")
        for rank, _ in self.potential:
            if rank not in SUPPORTED_RANKS:
                problems.append(f"unsupported potential rank {rank}")
        return problems

    def require_valid(self):
        problems = self.validate()
        if problems:
            raise RotorError("invalid rotor model: " + "; ".join(problems))


# ----------------------------------------------------------------------------
# Hamiltonian assembly
# ----------------------------------------------------------------------------

def _j_offsets(jmax: int) -> list[int]:
    out, ofs = [], 0
    for J in range(jmax + 1):
        out.append(ofs)
        ofs += (2 * J + 1) ** 2
    return out


def _coupling_blocks(jmax: int, rank: int, cmat: np.ndarray) -> list:
    """Per (J2, J) dense blocks of sum_{mu nu} c_{mu nu} <J2 k2 m2|D^rank|J k m>.

    Within a J block states are ordered k-major: index = (k+J)(2J+1) + (m+J).
    """
    blocks = []
    for J2 in range(jmax + 1):
        for J in range(jmax + 1):
            if abs(J - J2) > rank:
                continue
            pref = math.sqrt((2 * J2 + 1) * (2 * J + 1))
            # shifted-diagonal factors shared by the m and k sides
            shift = {}
            for mu in range(-rank, rank + 1):
                if not np.any(cmat[mu + rank, :]) and not np.any(cmat[:, mu + rank]):
                    continue
                S = np.zeros((2 * J2 + 1, 2 * J + 1))
                for m2 in range(-J2, J2 + 1):
                    m = m2 + mu
                    if abs(m) > J:
                        continue
                    S[m2 + J2, m + J] = wigner3j(J2, rank, J, m2, mu, -m)
                shift[mu] = S
            phase_m = np.array([(-1.0) ** m for m in range(-J, J + 1)])
            phase_k = phase_m  # same alternation on the k side
            block = np.zeros(((2 * J2 + 1) ** 2, (2 * J + 1) ** 2))
            for mu, Smu in shift.items():
                for nu, Snu in shift.items():
                    cc = cmat[mu + rank, nu + rank]
                    if cc == 0.0:
                        continue
                    block += cc * np.kron(Snu * phase_k, Smu * phase_m)
            if np.any(block):
                blocks.append((J2, J, pref * block))
    return blocks


@lru_cache(maxsize=8)
def _potential_matrix(jmax: int, potential: tuple) -> np.ndarray:
    n = len(build_basis(jmax))
    offsets = _j_offsets(jmax)
    V = np.zeros((n, n))
    for rank, weight in potential:
        cmat = invariant_coefficients(rank)
        for J2, J, block in _coupling_blocks(jmax, rank, cmat):
            r0, c0 = offsets[J2], offsets[J]
            V[r0:r0 + block.shape[0], c0:c0 + block.shape[1]] += weight * block
    asym = np.abs(V - V.T).max()
    if asym > 1e-12:
        raise RotorError(f"potential matrix asymmetry {asym:.2e} exceeds 1e-12")
    V.setflags(write=False)
    return V


@lru_cache(maxsize=8)
def _kinetic_diagonal(jmax: int) -> np.ndarray:
    diag = np.array([s.J * (s.J + 1) for s in build_basis(jmax)], dtype=float)
    diag.setflags(write=False)
    return diag


def hamiltonian_matrix(model: RotorModel) -> np.ndarray:
    """Dense real symmetric Hamiltonian over build_basis(model.Jmax), cm^-1."""
    model.require_valid()
    vmin, vmax = potential_range(model.potential)
    if abs((vmax - vmin) - 1.0) > 1e-6:
        raise PotentialError(
            f"potential range is {vmax - vmin:.8f}, not 1 (use RotorModel.create)"
        )
    H = np.diag(model.B * _kinetic_diagonal(model.Jmax))
    H += (model.beta * model.B) * _potential_matrix(model.Jmax, model.potential)
    return H


# ----------------------------------------------------------------------------
# diagonalization (parity blocks)
# ----------------------------------------------------------------------------

def _parity_blocks(basis) -> list[np.ndarray]:
    kpar = np.array([s.k % 2 for s in basis])
    mpar = np.array([s.m % 2 for s in basis])
    return [np.where((kpar == kp) & (mpar == mp))[0]
            for kp in (0, 1) for mp in (0, 1)]


@dataclass(frozen=True)
class Eigensystem:
    """Eigenvalues (shifted so the ground level is 0, ascending) and the
    orthonormal eigenvector matrix, columns ordered as `energies`."""

    energies: np.ndarray
    vectors: np.ndarray
    basis: tuple[BasisState, ...]
    model: RotorModel

    def residual_checks(self) -> tuple[float, float]:
        """(orthonormality defect, relative eigen-residual) for validation."""
        H = hamiltonian_matrix(self.model)
        span = self.energies[-1] - self.energies[0] or 1.0
        ortho = np.abs(self.vectors.T @ self.vectors - np.eye(len(self.energies))).max()
        ground = (self.vectors[:, 0] @ H @ self.vectors[:, 0])
        resid = np.abs(H @ self.vectors - self.vectors * (self.energies + ground)).max()
        return float(ortho), float(resid / span)


def diagonalize(model: RotorModel) -> Eigensystem:
    """Solve the eigenproblem per parity block; the potential conserves the
    parity of k and of m for every supported rank."""
    H = hamiltonian_matrix(model)
    basis = build_basis(model.Jmax)
    n = len(basis)
    energies = np.empty(n)
    vectors = np.zeros((n, n))
    filled = 0
    for idx in _parity_blocks(basis):
        sub = H[np.ix_(idx, idx)]
        try:
            w, v = np.linalg.eigh(sub)
        except np.linalg.LinAlgError as exc:
            cond = np.linalg.cond(sub)
            raise RotorError(
                f"eigen-solver failed on a {len(idx)}-state block "
                f"(condition number {cond:.3e}): {exc}"
            ) from exc
        energies[filled:filled + len(idx)] = w
        vectors[np.ix_(idx, np.arange(filled, filled + len(idx)))] = v
        filled += len(idx)
    order = np.argsort(energies, kind="stable")
    energies = energies[order]
    vectors = vectors[:, order]
    energies -= energies[0]
    return Eigensystem(energies=energies, vectors=vectors, basis=tuple(basis), model=model)


# ----------------------------------------------------------------------------
# classification
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class EnergyLevel:
    """Labeled eigenlevel; `vectors` spans the cluster in basis order."""

    energy: float
    degeneracy: int
    rovib_label: str
    spin_species: str | None
    ordinal: int
    flagged: bool = False
    vectors: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def name(self) -> str:
        return f"({self.rovib_label}){self.ordinal}"


def _cluster_slices(energies: np.ndarray, tol: float) -> list[tuple[int, int]]:
    out, start = [], 0
    for i in range(1, len(energies) + 1):
        if i == len(energies) or energies[i] - energies[i - 1] > tol:
            out.append((start, i))
            start = i
    return out


def _block_shapes(jmax: int):
    return [(ofs, 2 * J + 1) for J, ofs in enumerate(_j_offsets(jmax))]


def _apply_rotation(vec_blocks, jmax, rs, rm):
    """Apply U(site=rs, mol=rm) to vectors given per-J as (2J+1_k, 2J+1_m, d)."""
    out = []
    for J, Vj in enumerate(vec_blocks):
        if Vj.size == 0:
            out.append(Vj)
            continue
        Ds = wigner_d_matrix(J, *rs)
        Dm = wigner_d_matrix(J, *rm).conj()
        out.append(np.einsum("ab,cd,bdn->acn", Dm, Ds, Vj, optimize=True))
    return out


def _split_vector_blocks(vectors: np.ndarray, jmax: int):
    blocks = []
    d = vectors.shape[1]
    for J, ofs in enumerate(_j_offsets(jmax)):
        dJ = 2 * J + 1
        blocks.append(vectors[ofs:ofs + dJ * dJ, :].reshape(dJ, dJ, d))
    return blocks


def _cluster_characters(vectors: np.ndarray, jmax: int) -> np.ndarray:
    """Characters of the cluster representation over the 16 class pairs."""
    vb = _split_vector_blocks(vectors.astype(complex), jmax)
    chi = np.zeros((4, 4), dtype=complex)
    for a, rs in enumerate(T_CLASS_REPS):
        for b, rm in enumerate(T_CLASS_REPS):
            rotated = _apply_rotation(vb, jmax, rs, rm)
            acc = 0.0
            for Vj, Wj in zip(vb, rotated):
                if Vj.size:
                    acc += np.einsum("kmn,kmn->", Vj.conj(), Wj)
            chi[a, b] = acc
    return chi


def _complex_multiplicities(chi: np.ndarray) -> dict[str, int]:
    table = symmetry.character_table("T")
    sizes = np.array(T_CLASS_SIZES, dtype=float)
    out = {}
    for sl, _, sch in table.irreps:
        for ml, _, mch in table.irreps:
            n = 0.0
            for a in range(4):
                for b in range(4):
                    n += sizes[a] * sizes[b] * np.conj(sch[a] * mch[b]) * chi[a, b]
            n /= 144.0
            if abs(n.imag) > 1e-6 or abs(n.real - round(n.real)) > 1e-6:
                raise RotorError(f"non-integer irrep multiplicity {n:.3e} for {sl}.{ml}")
            if round(n.real):
                out[f"{sl}.{ml}"] = int(round(n.real))
    return out


def _group_elements():
    """All 144 (site, mol) rotation pairs with their class indices."""
    singles = [((ax, ang), cls) for ax, ang, cls in T_ROTATIONS]
    return [((rs, cs), (rm, cm)) for rs, cs in singles for rm, cm in singles]


def _project_label(vectors: np.ndarray, jmax: int, label) -> np.ndarray:
    """Real orthonormal basis of the `label` isotypic component of the cluster."""
    table = symmetry.character_table("T")
    chars = {row[0]: np.asarray(row[2]) for row in table.irreps}
    vb = _split_vector_blocks(vectors.astype(complex), jmax)
    acc = [np.zeros_like(b) for b in vb]
    for (rs, cs), (rm, cm) in _group_elements():
        coef = 0.0
        for cst in label.constituents:
            s, m = cst.split(".")
            coef += np.conj(chars[s][cs] * chars[m][cm])
        if coef == 0.0:
            continue
        rotated = _apply_rotation(vb, jmax, rs, rm)
        for j, Wj in enumerate(rotated):
            if Wj.size:
                acc[j] += coef * Wj
    flat = np.vstack([b.reshape(-1, vectors.shape[1]) for b in acc]) / 144.0
    # coefficients of the projected vectors in the cluster basis
    coeff = vectors.T @ flat
    stacked = np.hstack([coeff.real, coeff.imag])
    u, s, _ = np.linalg.svd(stacked, full_matrices=False)
    rank = int(np.sum(s > 1e-8))
    return vectors @ u[:, :rank]


def classify_levels(system: Eigensystem, model: RotorModel | None = None,
                    cluster_tol: float | None = None,
                    max_energy: float | None = None) -> list[EnergyLevel]:
    """Assign product-group labels and spin species to degenerate clusters.

    Energy clusters holding several irreps (the model's site/molecule exchange
    symmetry makes some pairs exactly degenerate) are split into one level per
    label by isotypic projection.  A level is flagged when its label occurs
    more than once within one cluster (basis choice then arbitrary) or when
    projection fails to resolve integral content.
    """
    model = model or system.model
    jmax = model.Jmax
    span = system.energies[-1] - system.energies[0] or 1.0
    tol = cluster_tol if cluster_tol is not None else 1e-6 * span
    raw_levels = []
    for a, b in _cluster_slices(system.energies, tol):
        if max_energy is not None and system.energies[a] > max_energy:
            break
        vecs = system.vectors[:, a:b]
        energy = float(system.energies[a:b].mean())
        try:
            content = _complex_multiplicities(_cluster_characters(vecs, jmax))
        except RotorError:
            raw_levels.append((energy, "?", None, b - a, True, vecs))
            continue
        by_label: dict[str, int] = {}
        consistent = True
        for irrep, mult in content.items():
            name = symmetry.CONSTITUENT_TO_LABEL[irrep]
            prev = by_label.setdefault(name, mult)
            if prev != mult:
                consistent = False
        if not consistent:
            raw_levels.append((energy, "?", None, b - a, True, vecs))
            continue
        if len(by_label) == 1:
            name, mult = next(iter(by_label.items()))
            lab = LEVEL_LABELS[name]
            raw_levels.append((energy, name, lab.spin, b - a, mult > 1, vecs))
            continue
        for name in sorted(by_label):
            lab = LEVEL_LABELS[name]
            mult = by_label[name]
            sub = _project_label(vecs, jmax, lab)
            if sub.shape[1] != mult * lab.dimension:
                raw_levels.append((energy, "?", None, sub.shape[1], True, sub))
                continue
            raw_levels.append((energy, name, lab.spin, sub.shape[1], mult > 1, sub))
    raw_levels.sort(key=lambda r: (r[0], r[1]))
    counts: dict[str, int] = {}
    levels = []
    for energy, name, spin, deg, flagged, vecs in raw_levels:
        counts[name] = counts.get(name, 0) + 1
        levels.append(EnergyLevel(
            energy=energy, degeneracy=deg, rovib_label=name, spin_species=spin,
            ordinal=counts[name], flagged=flagged, vectors=vecs,
        ))
    return levels


def find_level(levels, label: str, ordinal: int = 1) -> EnergyLevel:
    for lev in levels:
        if lev.rovib_label == label and lev.ordinal == ordinal:
            return lev
    raise RotorError(f"no level ({label}){ordinal} in the classified set")


def tunneling_frequencies(levels) -> tuple[float, float]:
    """(omega_LA, omega_LE2): the A1(1)-L1(1) and L1(1)-E2(1) gaps in cm^-1."""
    a1 = find_level(levels, "A1", 1)
    l1 = find_level(levels, "L1", 1)
    e2 = find_level(levels, "E2", 1)
    return l1.energy - a1.energy, e2.energy - l1.energy


def barrier_height(model: RotorModel) -> float:
    """beta*B*(max V - min V); the normalization makes this beta*B."""
    model.require_valid()
    vmin, vmax = potential_range(model.potential)
    return model.beta * model.B * (vmax - vmin)


# ----------------------------------------------------------------------------
# rank-l transition operator matrices (for line strengths)
# ----------------------------------------------------------------------------

@lru_cache(maxsize=4)
def rank_operator_blocks(jmax: int, rank: int):
    """Sparse matrices of D^rank_{mu nu} over the basis, keyed (mu, nu)."""
    basis = build_basis(jmax)
    offsets = _j_offsets(jmax)
    mats = {}
    for mu in range(-rank, rank + 1):
        for nu in range(-rank, rank + 1):
            rows, cols, vals = [], [], []
            for J2 in range(jmax + 1):
                for J in range(jmax + 1):
                    if abs(J - J2) > rank:
                        continue
                    pref = math.sqrt((2 * J2 + 1) * (2 * J + 1))
                    for k2 in range(-J2, J2 + 1):
                        k = k2 + nu
                        if abs(k) > J:
                            continue
                        w_k = wigner3j(J2, rank, J, k2, nu, -k)
                        if w_k == 0.0:
                            continue
                        for m2 in range(-J2, J2 + 1):
                            m = m2 + mu
                            if abs(m) > J:
                                continue
                            w_m = wigner3j(J2, rank, J, m2, mu, -m)
                            if w_m == 0.0:
                                continue
                            i = offsets[J2] + (k2 + J2) * (2 * J2 + 1) + (m2 + J2)
                            j = offsets[J] + (k + J) * (2 * J + 1) + (m + J)
                            rows.append(i)
                            cols.append(j)
                            vals.append(pref * (-1.0) ** (m - k) * w_m * w_k)
            n = len(basis)
            mats[(mu, nu)] = scipy.sparse.csr_matrix(
                (vals, (rows, cols)), shape=(n, n))
    return mats


def transition_strength(lower: EnergyLevel, upper: EnergyLevel, jmax: int,
                        rank: int) -> float:
    """Squared rank-`rank` orientational transition moment summed over all
    cluster states and tensor components."""
    if lower.vectors is None or upper.vectors is None:
        raise RotorError("levels must carry eigenvectors for strength evaluation")
    total = 0.0
    for M in rank_operator_blocks(jmax, rank).values():
        X = upper.vectors.T @ (M @ lower.vectors)
        total += float(np.sum(X * X))
    return total


# ----------------------------------------------------------------------------
# fast eigenvalue path for fitting
# ----------------------------------------------------------------------------

class LevelGapCache:
    """Per-beta eigenvalues of P^2 + beta*V in units of B, with the parity
    blocks prefactored; used by the fitting objective.

    The ground level and the first excited cluster both keep a component in
    the (k even, m even) parity block at every beta (parity content of a
    cluster does not change along beta), so gap() needs only the two lowest
    states of that single block.  They come from a shift-invert Lanczos solve
    with the shift placed below a Gershgorin bound of the spectrum,
    deterministic via a fixed start vector; eigenvalues() is the dense path.
    """

    def __init__(self, potential=DEFAULT_POTENTIAL, jmax: int = DEFAULT_JMAX):
        self.potential = tuple(potential)
        self.jmax = jmax
        basis = build_basis(jmax)
        V = _potential_matrix(jmax, self.potential)
        K = _kinetic_diagonal(jmax)
        self._blocks = []
        for idx in _parity_blocks(basis):
            self._blocks.append((K[idx], V[np.ix_(idx, idx)]))
        kd, vb = self._blocks[0]
        self._ee_kdiag = kd
        self._ee_v = scipy.sparse.csr_matrix(vb)
        vdiag = self._ee_v.diagonal()
        self._ee_vdiag = vdiag
        self._ee_vrow = np.asarray(np.abs(self._ee_v).sum(axis=1)).ravel() - np.abs(vdiag)
        self._cache: dict[float, np.ndarray] = {}
        self._gap_cache: dict[float, float] = {}

    def eigenvalues(self, beta: float, count: int = 40) -> np.ndarray:
        key = round(float(beta), 12)
        hit = self._cache.get(key)
        if hit is None:
            parts = []
            for kdiag, vblock in self._blocks:
                parts.append(np.linalg.eigvalsh(np.diag(kdiag) + beta * vblock))
            hit = np.sort(np.concatenate(parts))
            hit = hit - hit[0]
            self._cache[key] = hit
        return hit[:count]

    def gap(self, beta: float) -> float:
        """First orientation gap (A1 ground to L1 manifold) in units of B."""
        import scipy.sparse.linalg as spl

        key = round(float(beta), 12)
        hit = self._gap_cache.get(key)
        if hit is not None:
            return hit
        full = self._cache.get(key)
        if full is not None:
            gap = float(full[1])
        else:
            try:
                bound = np.min(self._ee_kdiag + beta * self._ee_vdiag
                               - abs(beta) * self._ee_vrow)
                H = (scipy.sparse.diags(self._ee_kdiag) + beta * self._ee_v).tocsc()
                v0 = np.full(H.shape[0], 1.0 / math.sqrt(H.shape[0]))
                w = spl.eigsh(H, k=2, sigma=bound - 1.0, which="LM", v0=v0,
                              tol=0, return_eigenvectors=False)
                w = np.sort(w)
                gap = float(w[1] - w[0])
            except (spl.ArpackError, RuntimeError):
                gap = float(self.eigenvalues(beta, count=2)[1])
        self._gap_cache[key] = gap
        return gap
