"""Masses of cylinder sets of the condensation measure μ and a sampler for μ.

μ satisfies μ = p_0 ν + Σ p_i μ∘f_i⁻¹, where ν is the self-similar measure of
the inner system.  Cylinders f_σ(C_ω) carry mass p_0 p_σ t_ω and the tail
copies f_σ(K) carry mass p_σ.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import numpy as np

from .errors import NotMaximalError
from .system import CondensationSystem, Interval, compose
from .words import Antichain, Word, all_words, check_maximal_antichain, lambda_star, ratio, weight

logger = logging.getLogger(__name__)

RESOLUTION_EXPONENT = 40


class PieceKind(Enum):
    CYLINDER = "cylinder"
    TAIL = "tail"


@dataclass(frozen=True)
class PieceMass:
    """One set of a decomposition of K with its exact mass and hull"""
    kind: PieceKind
    sigma: Word
    omega: Optional[Word]
    mass: Fraction
    diameter: Fraction
    hull: Interval


def _check_outer(system: CondensationSystem, sigma: Word) -> None:
    if sigma.alphabet_size != system.outer_size:
        raise ValueError(f"Outer word {sigma} is over {sigma.alphabet_size} letters, system has N={system.outer_size}")


def _check_inner(system: CondensationSystem, omega: Word) -> None:
    if omega.alphabet_size != system.inner_size:
        raise ValueError(f"Inner word {omega} is over {omega.alphabet_size} letters, system has M={system.inner_size}")


def cylinder_mass(system: CondensationSystem, sigma: Word, omega: Word) -> Fraction:
    """μ(f_σ(C_ω)) = p_0 p_σ t_ω"""
    system.require_valid()
    _check_outer(system, sigma)
    _check_inner(system, omega)
    return system.p0 * weight(sigma, system.outer_weights) * weight(omega, system.inner_weights)


def tail_mass(system: CondensationSystem, sigma: Word) -> Fraction:
    """μ(f_σ(K)) = p_σ"""
    system.require_valid()
    _check_outer(system, sigma)
    return weight(sigma, system.outer_weights)


def cylinder_piece(system: CondensationSystem, sigma: Word, omega: Word) -> PieceMass:
    hull = compose(system.outer, sigma).image(compose(system.inner, omega).image(system.inner_hull))
    diameter = ratio(sigma, system.outer_weights) * ratio(omega, system.inner_weights) * system.inner_hull.length
    return PieceMass(PieceKind.CYLINDER, sigma, omega, cylinder_mass(system, sigma, omega), diameter, hull)


def tail_piece(system: CondensationSystem, sigma: Word) -> PieceMass:
    hull = compose(system.outer, sigma).image(system.hull)
    diameter = ratio(sigma, system.outer_weights) * system.hull.length
    return PieceMass(PieceKind.TAIL, sigma, None, tail_mass(system, sigma), diameter, hull)


def decompose(system: CondensationSystem, gamma: Iterable[Word]) -> List[PieceMass]:
    """Split K along a finite maximal antichain Γ.

    Cylinders f_σ(C) for σ in the levels below l(Γ) and in Λ*_Γ, tails f_σ(K)
    for σ in Γ.  The masses add up to exactly 1.
    """
    members = list(gamma)
    check = check_maximal_antichain(members, system.outer_size)
    if not check.is_maximal:
        witness = ", ".join(str(w) for w in check.witness)
        raise NotMaximalError(f"Decomposition needs a maximal antichain ({check.status.name}: {witness})")
    antichain = Antichain(system.outer_size, tuple(members))

    prefixes: List[Word] = []
    for h in range(antichain.min_length):
        prefixes.extend(all_words(system.outer_size, h))
    prefixes.extend(lambda_star(antichain))

    theta = Word.empty(system.inner_size)
    pieces = [cylinder_piece(system, sigma, theta) for sigma in prefixes]
    pieces.extend(tail_piece(system, sigma) for sigma in antichain)
    logger.debug(f"Decomposed K into {len(prefixes)} cylinders and {len(antichain)} tails")
    return pieces


def default_resolution(system: CondensationSystem) -> float:
    """2^-40·|hull(C)|"""
    return float(system.inner_hull.length / 2 ** RESOLUTION_EXPONENT)


def sample(system: CondensationSystem, seed: int, count: int,
           resolution: Optional[float] = None) -> np.ndarray:
    """Draw ``count`` points from μ.

    Each draw walks down the outer tree, stopping with probability p_0 and
    otherwise entering f_i with probability p_i.  At the stop it draws a ν
    point by descending the inner tree until the inner cylinder is shorter
    than ``resolution`` and takes the cylinder midpoint.  All draws advance
    together, one tree level per numpy step.
    """
    if count < 0:
        raise ValueError(f"Sample count must be non-negative, got {count}")
    eps = default_resolution(system) if resolution is None else float(resolution)
    if eps <= 0:
        raise ValueError(f"Resolution must be positive, got {resolution}")

    rng = np.random.default_rng(seed)

    outer_cumulative = np.cumsum([float(p) for p in system.outer_probs])
    outer_scales = np.array([float(f.scale) for f in system.outer])
    outer_offsets = np.array([float(f.offset) for f in system.outer])
    scale = np.ones(count)
    offset = np.zeros(count)
    active = np.ones(count, dtype=bool)
    while active.any():
        idx = np.flatnonzero(active)
        choice = np.searchsorted(outer_cumulative, rng.random(idx.size), side='right')
        choice = np.minimum(choice, system.outer_size)
        stopped = choice == 0
        active[idx[stopped]] = False
        moving = idx[~stopped]
        letters = choice[~stopped] - 1
        offset[moving] += scale[moving] * outer_offsets[letters]
        scale[moving] *= outer_scales[letters]

    inner_cumulative = np.cumsum([float(t) for t in system.inner_probs])
    inner_scales = np.array([float(g.scale) for g in system.inner])
    inner_offsets = np.array([float(g.offset) for g in system.inner])
    hull_length = float(system.inner_hull.length)
    nu_scale = np.ones(count)
    nu_offset = np.zeros(count)
    active = np.abs(nu_scale) * hull_length >= eps
    while active.any():
        idx = np.flatnonzero(active)
        letters = np.searchsorted(inner_cumulative, rng.random(idx.size), side='right')
        letters = np.minimum(letters, system.inner_size - 1)
        nu_offset[idx] += nu_scale[idx] * inner_offsets[letters]
        nu_scale[idx] *= inner_scales[letters]
        active[idx] = np.abs(nu_scale[idx]) * hull_length >= eps

    nu_points = nu_scale * float(system.inner_hull.midpoint) + nu_offset
    return scale * nu_points + offset


def empirical_masses(samples: np.ndarray, pieces: Sequence[PieceMass]) -> np.ndarray:
    """Fraction of samples falling in each piece hull (closed)"""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("No samples given")
    ordered = np.sort(samples)
    counts = []
    for piece in pieces:
        lo = np.searchsorted(ordered, float(piece.hull.lo), side='left')
        hi = np.searchsorted(ordered, float(piece.hull.hi), side='right')
        counts.append(hi - lo)
    return np.asarray(counts, dtype=float) / samples.size


def write_samples_csv(samples: np.ndarray, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, np.asarray(samples, dtype=float), fmt='%.17g', header='x', comments='')
    logger.debug(f"Wrote {len(samples)} samples to {path}")
    return path
