"""Stopping-time antichains Γ_{k,r}, Ψ_{k,r}, the inner antichains Γ_{k,r}(σ) and φ_{k,r}.

Γ_{k,r} collects the words σ with p_{σ⁻}s_{σ⁻}^r ≥ η_r^k > p_σ s_σ^r.  For σ ∈ Ψ_{k,r} the inner
antichain Γ_{k,r}(σ) stops the inner words ρ the same way, with
t_θ c_θ = 1 for the empty word.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

from .dims import outer_moran_sum
from .errors import BudgetExceededError, NotMaximalError
from .powers import DEFAULT_GUARD_BAND, Exponent, PowerComparator, PowerTerm, normalize_exponent
from .system import CondensationSystem
from .words import Antichain, Word, all_words, check_maximal_antichain, lambda_star, power_term, weight

logger = logging.getLogger(__name__)

DEFAULT_NODE_BUDGET = 10 ** 7
DEFAULT_MAX_WORKERS = 4


def _check_parameters(r: Any, k: int) -> Exponent:
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    return normalize_exponent(r)


def format_exponent(r: Exponent) -> Union[str, float]:
    return str(r) if isinstance(r, Fraction) else r


@dataclass(frozen=True)
class GrowthConstants:
    r: Exponent
    eta_lo: PowerTerm
    eta_hi: PowerTerm
    H: int
    D: int
    d1: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            'r': format_exponent(self.r),
            'eta_lo': float(self.eta_lo.value(self.r)),
            'eta_hi': float(self.eta_hi.value(self.r)),
            'H': self.H,
            'D': self.D,
            'd1': self.d1
        }


def growth_constants(system: CondensationSystem, r: Any,
                     comparator: Optional[PowerComparator] = None) -> GrowthConstants:
    """η_r, η̄_r and the constants H, D, d_1 bounding φ_{k+1,r}/φ_{k,r}"""
    comparator = comparator or PowerComparator(r)
    terms = system.outer_weights.terms() + system.inner_weights.terms()
    eta_lo = comparator.minimum(terms)
    eta_hi = comparator.maximum(terms)

    h = 1
    while not comparator.below(eta_hi ** h, eta_lo):
        h += 1

    m, n = system.inner_size, system.outer_size
    d = sum(m ** i for i in range(1, h + 1))
    return GrowthConstants(comparator.r, eta_lo, eta_hi, h, d, d * max(m ** h, n ** h) + 1)


def _stopping_antichain(root: PowerTerm, letter_terms: Sequence[PowerTerm], alphabet_size: int,
                        threshold: PowerTerm, comparator: PowerComparator, budget: int) -> Tuple[Antichain, int]:
    """Words whose running product first drops below ``threshold``; root must be at or above it"""
    members: List[Word] = []
    stack: List[Tuple[Tuple[int, ...], PowerTerm]] = [((), root)]
    nodes = 0
    while stack:
        letters, term = stack.pop()
        for letter, letter_term in enumerate(letter_terms, 1):
            nodes += 1
            if nodes > budget:
                raise BudgetExceededError(f"Antichain enumeration exceeded {budget} words", budget)
            child = term * letter_term
            if comparator.at_least(child, threshold):
                stack.append((letters + (letter,), child))
            else:
                members.append(Word(alphabet_size, letters + (letter,)))
    return Antichain(alphabet_size, tuple(members)), nodes


def build_gamma(system: CondensationSystem, r: Any, k: int, budget: int = DEFAULT_NODE_BUDGET,
                comparator: Optional[PowerComparator] = None) -> Antichain:
    """Γ_{k,r} by depth-first descent from θ"""
    _check_parameters(r, k)
    comparator = comparator or PowerComparator(r)
    threshold = growth_constants(system, r, comparator).eta_lo ** k
    gamma, nodes = _stopping_antichain(PowerTerm.unit(), system.outer_weights.terms(), system.outer_size,
                                       threshold, comparator, budget)
    logger.debug(f"Γ_{k},{format_exponent(comparator.r)}: {len(gamma)} words from {nodes} visited")
    return gamma


def build_psi(system: CondensationSystem, gamma: Antichain) -> Tuple[List[Word], List[Word]]:
    """(Ψ, Λ*) with Ψ = Ω_0 ∪ … ∪ Ω_{l1−1} ∪ Λ*_Γ"""
    if gamma.alphabet_size != system.outer_size:
        raise ValueError("Γ is not over the outer alphabet")
    levels: List[Word] = []
    for h in range(gamma.min_length):
        levels.extend(all_words(system.outer_size, h))
    tail = lambda_star(gamma)
    return levels + tail, tail


def build_inner(system: CondensationSystem, r: Any, k: int, sigma: Word, budget: int = DEFAULT_NODE_BUDGET,
                comparator: Optional[PowerComparator] = None) -> Antichain:
    """Γ_{k,r}(σ) over the inner alphabet"""
    _check_parameters(r, k)
    comparator = comparator or PowerComparator(r)
    threshold = growth_constants(system, r, comparator).eta_lo ** k
    base = power_term(sigma, system.outer_weights)
    if comparator.below(base, threshold):
        raise ValueError(f"σ = {sigma} has p_σ s_σ^r below η_r^k and is not in Ψ_{k},r")
    antichain, _ = _stopping_antichain(base, system.inner_weights.terms(), system.inner_size,
                                       threshold, comparator, budget)
    return antichain


@dataclass(frozen=True)
class PartitionBundle:
    """Everything built for one (k, r)"""
    k: int
    r: Exponent
    threshold: PowerTerm
    gamma: Antichain
    psi: Tuple[Word, ...]
    lambda_star: Tuple[Word, ...]
    inner: Mapping[Word, Antichain]
    phi: int
    boundary_comparisons: int = 0

    @property
    def n_count(self) -> int:
        """N_{k,r}"""
        return len(self.gamma)

    def m_count(self, sigma: Word) -> int:
        """M_{k,r}(σ)"""
        return len(self.inner[sigma])

    @property
    def l1(self) -> int:
        return self.gamma.min_length

    @property
    def l2(self) -> int:
        return self.gamma.max_length

    def to_dict(self) -> Dict[str, Any]:
        return {
            'k': self.k,
            'r': format_exponent(self.r),
            'l1': self.l1,
            'l2': self.l2,
            'counts': {
                'N': self.n_count,
                'M': [self.m_count(sigma) for sigma in self.psi],
                'phi': self.phi
            },
            'gamma': [w.to_list() for w in self.gamma],
            'psi': [w.to_list() for w in self.psi],
            'lambda_star': [w.to_list() for w in self.lambda_star],
            'inner': [
                {'sigma': sigma.to_list(), 'members': [rho.to_list() for rho in self.inner[sigma]]}
                for sigma in self.psi
            ],
            'boundary_comparisons': self.boundary_comparisons
        }


def phi(system: CondensationSystem, r: Any, k: int, budget: int = DEFAULT_NODE_BUDGET,
        max_workers: int = DEFAULT_MAX_WORKERS, guard_band: float = DEFAULT_GUARD_BAND) -> PartitionBundle:
    """Assemble Γ_{k,r}, Ψ_{k,r}, all Γ_{k,r}(σ) and φ_{k,r} = N_{k,r} + Σ M_{k,r}(σ)"""
    _check_parameters(r, k)
    comparator = PowerComparator(r, guard_band)
    threshold = growth_constants(system, r, comparator).eta_lo ** k

    gamma = build_gamma(system, r, k, budget, comparator)
    check = check_maximal_antichain(gamma.members, system.outer_size)
    if not check.is_maximal:
        raise NotMaximalError(f"Γ_{k} is not a maximal antichain: {check.status.name}")
    psi, tail = build_psi(system, gamma)

    inner: Dict[Word, Antichain] = {}
    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        future_to_sigma = {
            executor.submit(build_inner, system, r, k, sigma, budget, comparator): sigma
            for sigma in psi
        }
        for future in as_completed(future_to_sigma):
            sigma = future_to_sigma[future]
            try:
                inner[sigma] = future.result()
            except Exception as e:
                logger.error(f"Inner antichain for σ = {sigma} failed: {e}")
                raise

    ordered = {sigma: inner[sigma] for sigma in psi}
    count = len(gamma) + sum(len(a) for a in ordered.values())
    bundle = PartitionBundle(
        k=k,
        r=comparator.r,
        threshold=threshold,
        gamma=gamma,
        psi=tuple(psi),
        lambda_star=tuple(tail),
        inner=ordered,
        phi=count,
        boundary_comparisons=comparator.boundary_hits
    )
    if bundle.boundary_comparisons:
        logger.warning(f"{bundle.boundary_comparisons} threshold comparisons fell inside the guard band")
    logger.debug(f"k={k}: N={bundle.n_count}, |Ψ|={len(psi)}, φ={count}, l1={bundle.l1}, l2={bundle.l2}")
    return bundle


def i_k(system: CondensationSystem, r: Any, k: int, s: float,
        bundle: Optional[PartitionBundle] = None) -> float:
    """I_k(s) = ΣΣ (p_σ s_σ^r t_ρ c_ρ^r)^{s/(s+r)} + Σ_Γ (p_σ s_σ^r)^{s/(s+r)}"""
    if s <= 0:
        raise ValueError(f"s must be positive, got {s}")
    bundle = bundle or phi(system, r, k)
    exponent = s / (s + float(bundle.r))
    terms: List[float] = []
    for sigma in bundle.psi:
        base = power_term(sigma, system.outer_weights)
        for rho in bundle.inner[sigma]:
            terms.append((base * power_term(rho, system.inner_weights)).powered(bundle.r, exponent))
    for sigma in bundle.gamma:
        terms.append(power_term(sigma, system.outer_weights).powered(bundle.r, exponent))
    return math.fsum(terms)


def decomposition_mass(system: CondensationSystem, bundle: PartitionBundle) -> Fraction:
    """p_0 Σ_Ψ p_σ Σ_{Γ(σ)} t_ρ + Σ_Γ p_σ, which must equal 1"""
    cylinders = sum(
        (weight(sigma, system.outer_weights) * sum((weight(rho, system.inner_weights) for rho in bundle.inner[sigma]),
                                                    Fraction(0))
         for sigma in bundle.psi),
        Fraction(0)
    )
    tails = sum((weight(sigma, system.outer_weights) for sigma in bundle.gamma), Fraction(0))
    return system.p0 * cylinders + tails


def build_bundles(system: CondensationSystem, r: Any, k_max: int, budget: int = DEFAULT_NODE_BUDGET,
                  max_workers: int = DEFAULT_MAX_WORKERS,
                  guard_band: float = DEFAULT_GUARD_BAND) -> List[PartitionBundle]:
    return [phi(system, r, k, budget, max_workers, guard_band) for k in range(1, k_max + 1)]


def growth_report(system: CondensationSystem, bundles: Sequence[PartitionBundle]) -> List[Dict[str, Any]]:
    """φ_{k+1}/φ_k for consecutive bundles, checked against [1, d_1]"""
    if not bundles:
        return []
    constants = growth_constants(system, bundles[0].r)
    rows = []
    for current, following in zip(bundles, bundles[1:]):
        ratio = following.phi / current.phi
        rows.append({
            'k': current.k,
            'phi': current.phi,
            'phi_next': following.phi,
            'ratio': ratio,
            'd1': constants.d1,
            'within': current.phi <= following.phi <= constants.d1 * current.phi
        })
    return rows


def phi_growth_envelope(system: CondensationSystem, r: Any, k: int, s: float) -> float:
    """c(s)·η_r^{-(k+1)s/(s+r)} with c(s) = (1 − b(s))⁻¹ + 1; bounds φ_{k,r} whenever s > ξ_r"""
    constants = growth_constants(system, r)
    b = outer_moran_sum(system, constants.r, s)
    if b >= 1:
        raise ValueError(f"The envelope needs b(s) < 1, got {b} at s = {s}")
    c = 1.0 / (1.0 - b) + 1.0
    log_eta = constants.eta_lo.log_value(constants.r)
    return c * math.exp(-(k + 1) * s / (s + float(constants.r)) * log_eta)


def summary_rows(system: CondensationSystem, bundles: Sequence[PartitionBundle],
                 s: Optional[float]) -> List[Dict[str, Any]]:
    """Per-k CSV rows (k, N_kr, phi_kr, l1, l2, I_k(s))"""
    rows = []
    for bundle in bundles:
        rows.append({
            'k': bundle.k,
            'N_kr': bundle.n_count,
            'phi_kr': bundle.phi,
            'l1': bundle.l1,
            'l2': bundle.l2,
            'I_k': i_k(system, bundle.r, bundle.k, s, bundle) if s is not None else None
        })
    return rows
