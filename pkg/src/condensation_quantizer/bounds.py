"""Separation markers, the test family and the analytic bound sums.

The test family shifts every piece of the (k, r) partition by the markers
τ⁽⁰⁾ and ρ⁽⁰⁾ so that distinct pieces are δ-separated relative to their
diameters.  The upper bound uses the unshifted pieces with one code point
per piece.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from .dims import DEFAULT_TOL, outer_moran_sum, xi_r
from .errors import BudgetExceededError
from .measure import PieceKind
from .partition import PartitionBundle, format_exponent, growth_constants, i_k, phi
from .powers import Exponent, PowerComparator, PowerTerm, normalize_exponent
from .quantizer import Codebook
from .system import DEFAULT_REFINE_DEPTH, CondensationSystem, Interval, compose, find_contained_cylinder
from .words import Word, power_term, ratio, weight

logger = logging.getLogger(__name__)

Value = Union[Fraction, float]


def _total(values: Sequence[Value]) -> Value:
    """Exact sum when every value is a Fraction, fsum otherwise"""
    if all(isinstance(v, Fraction) for v in values):
        return sum(values, Fraction(0))
    return math.fsum(float(v) for v in values)


#
# Markers
#

@dataclass(frozen=True)
class SeparationData:
    tau0: Word
    rho0: Word
    epsilon0: Fraction
    W: Interval
    V: Interval
    delta0: Fraction
    delta1: Fraction
    delta2: Fraction
    delta3: Fraction

    @property
    def delta(self) -> Fraction:
        return min(self.delta0, self.delta1, self.delta2, self.delta3)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'tau0': self.tau0.to_list(),
            'rho0': self.rho0.to_list(),
            'epsilon0': str(self.epsilon0),
            'W': self.W.to_dict(),
            'V': self.V.to_dict(),
            'delta0': str(self.delta0),
            'delta1': str(self.delta1),
            'delta2': str(self.delta2),
            'delta3': str(self.delta3),
            'delta': str(self.delta)
        }


def find_markers(system: CondensationSystem, depth_budget: int = DEFAULT_REFINE_DEPTH) -> SeparationData:
    """τ⁽⁰⁾, ρ⁽⁰⁾, the sets W and V and the separation constants δ_0…δ_3"""
    system.require_valid()
    U = system.open_set
    hull_c = system.inner_hull

    tau0 = find_contained_cylinder(system.outer, system.hull, U, depth_budget)
    if tau0 is None:
        raise BudgetExceededError(f"No outer word of length ≤ {depth_budget} maps hull(K) into U", depth_budget)

    epsilon0 = min(hull_c.distance(f.image(U.closure())) for f in system.outer)
    W = hull_c.neighborhood(epsilon0 / 2)
    V = hull_c.interior().intersection(U)
    V = V.intersection(W) if V is not None else None
    if V is None:
        raise AssertionError("int(hull C) ∩ U ∩ W is empty although IOSC passed")

    rho0 = find_contained_cylinder(system.inner, hull_c, V, depth_budget)
    if rho0 is None:
        raise BudgetExceededError(f"No inner word of length ≤ {depth_budget} maps hull(C) into V", depth_budget)

    markers = SeparationData(
        tau0=tau0,
        rho0=rho0,
        epsilon0=epsilon0,
        W=W,
        V=V,
        delta0=W.distance_to_complement(hull_c),
        delta1=U.distance_to_complement(compose(system.outer, tau0).image(system.hull)),
        delta2=V.distance_to_complement(compose(system.inner, rho0).image(hull_c)),
        delta3=U.distance_to_complement(hull_c)
    )
    logger.debug(f"Markers τ0={tau0}, ρ0={rho0}, δ={markers.delta}")
    return markers


#
# Test family
#

@dataclass(frozen=True)
class TestPiece:
    __test__ = False

    kind: PieceKind
    sigma: Word
    rho: Optional[Word]
    hull: Interval
    mass: Fraction
    diameter: Fraction

    @property
    def energy(self) -> PowerTerm:
        """E(A) = μ(A)·|A|^r, evaluated for a given r"""
        return PowerTerm(self.mass, self.diameter)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'kind': self.kind.value,
            'sigma': self.sigma.to_list(),
            'rho': self.rho.to_list() if self.rho is not None else None,
            'hull': self.hull.to_dict(),
            'mass': str(self.mass),
            'diameter': str(self.diameter)
        }


def test_family(system: CondensationSystem, r: Any, k: int, markers: SeparationData,
                bundle: Optional[PartitionBundle] = None) -> List[TestPiece]:
    """f_{σ*τ⁽⁰⁾}(C_{ρ*ρ⁽⁰⁾}) for σ ∈ Ψ, ρ ∈ Γ(σ), then f_{σ*τ⁽⁰⁾}(hull K) for σ ∈ Γ"""
    bundle = bundle or phi(system, r, k)
    outer, inner = system.outer_weights, system.inner_weights
    hull_c, hull_k = system.inner_hull, system.hull

    pieces: List[TestPiece] = []
    for sigma in bundle.psi:
        shifted = sigma * markers.tau0
        f = compose(system.outer, shifted)
        for rho in bundle.inner[sigma]:
            inner_word = rho * markers.rho0
            pieces.append(TestPiece(
                kind=PieceKind.CYLINDER,
                sigma=sigma,
                rho=rho,
                hull=f.image(compose(system.inner, inner_word).image(hull_c)),
                mass=system.p0 * weight(shifted, outer) * weight(inner_word, inner),
                diameter=ratio(shifted, outer) * ratio(inner_word, inner) * hull_c.length
            ))
    for sigma in bundle.gamma:
        shifted = sigma * markers.tau0
        pieces.append(TestPiece(
            kind=PieceKind.TAIL,
            sigma=sigma,
            rho=None,
            hull=compose(system.outer, shifted).image(hull_k),
            mass=weight(shifted, outer),
            diameter=ratio(shifted, outer) * hull_k.length
        ))
    return pieces


test_family.__test__ = False  # type: ignore[attr-defined]


def family_mass(pieces: Sequence[TestPiece]) -> Fraction:
    """μ(G_{k,r}), the pieces being pairwise disjoint"""
    return sum((piece.mass for piece in pieces), Fraction(0))


def d4(system: CondensationSystem, markers: SeparationData) -> Fraction:
    """p_0 p_{τ⁽⁰⁾} t_{ρ⁽⁰⁾}, a lower bound for μ(G_{k,r}) at every k"""
    return system.p0 * weight(markers.tau0, system.outer_weights) * weight(markers.rho0, system.inner_weights)


@dataclass(frozen=True)
class SeparationReport:
    passed: bool
    delta: Fraction
    pairs_checked: int
    witness: Optional[Tuple[int, int]] = None
    distance: Optional[Fraction] = None
    required: Optional[Fraction] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'passed': self.passed,
            'delta': str(self.delta),
            'pairs_checked': self.pairs_checked,
            'witness': list(self.witness) if self.witness else None,
            'distance': str(self.distance) if self.distance is not None else None,
            'required': str(self.required) if self.required is not None else None
        }


def verify_separation(pieces: Sequence[TestPiece], delta: Fraction, exhaustive: bool = False) -> SeparationReport:
    """Check d(A_1, A_2) ≥ δ·max(|A_1|, |A_2|) on piece hulls.

    For intervals the nearest neighbour of a piece in either direction is
    adjacent in (lo, hi) order once overlaps are excluded, so the sorted sweep
    finds a violation whenever one exists.  ``exhaustive`` checks every pair.
    """
    delta = Fraction(delta)
    if exhaustive:
        pairs = itertools.combinations(range(len(pieces)), 2)
    else:
        order = sorted(range(len(pieces)), key=lambda i: (pieces[i].hull.lo, pieces[i].hull.hi, i))
        pairs = ((min(a, b), max(a, b)) for a, b in zip(order, order[1:]))

    checked = 0
    violations: List[Tuple[Tuple[int, int], Fraction, Fraction]] = []
    for i, j in pairs:
        checked += 1
        distance = pieces[i].hull.distance(pieces[j].hull)
        required = delta * max(pieces[i].diameter, pieces[j].diameter)
        if distance < required or pieces[i].hull.intersects(pieces[j].hull):
            violations.append(((i, j), distance, required))

    if violations:
        witness, distance, required = min(violations, key=lambda v: v[0])
        logger.info(f"Separation fails for pieces {witness}: distance {distance} < {required}")
        return SeparationReport(False, delta, checked, witness, distance, required)
    return SeparationReport(True, delta, checked)


#
# Energies
#

@dataclass(frozen=True)
class EnergyReport:
    r: Exponent
    k: int
    H1: PowerTerm
    H2: PowerTerm
    H3: PowerTerm
    H4: PowerTerm
    d2: PowerTerm
    d3: PowerTerm
    min_energy: float
    max_energy: float
    lower_ok: bool
    upper_ok: bool
    upper_eta_hi_ok: bool
    violations: Tuple[int, ...] = ()

    @property
    def passed(self) -> bool:
        return self.lower_ok and self.upper_ok and self.upper_eta_hi_ok

    def to_dict(self) -> Dict[str, Any]:
        return {
            'r': format_exponent(self.r),
            'k': self.k,
            'H1': float(self.H1.value(self.r)),
            'H2': float(self.H2.value(self.r)),
            'H3': float(self.H3.value(self.r)),
            'H4': float(self.H4.value(self.r)),
            'd2': float(self.d2.value(self.r)),
            'd3': float(self.d3.value(self.r)),
            'min_energy': self.min_energy,
            'max_energy': self.max_energy,
            'lower_ok': self.lower_ok,
            'upper_ok': self.upper_ok,
            'upper_eta_hi_ok': self.upper_eta_hi_ok,
            'violations': list(self.violations)
        }


def energy_bounds(pieces: Sequence[TestPiece], system: CondensationSystem, r: Any, k: int,
                  markers: SeparationData) -> EnergyReport:
    """Check d_3·η_r^k ≤ E(A) < d_2·η_r^k for every piece, and E(A) < d_2·η̄_r^k"""
    if not pieces:
        raise ValueError("energy_bounds needs at least one piece")
    comparator = PowerComparator(r)
    constants = growth_constants(system, r, comparator)
    outer, inner = system.outer_weights, system.inner_weights
    tau0, rho0 = markers.tau0, markers.rho0

    H1 = PowerTerm(system.p0 * weight(tau0, outer) * weight(rho0, inner),
                   ratio(tau0, outer) * ratio(rho0, inner) * system.inner_hull.length)
    H2 = comparator.minimum(inner.terms())
    H3 = PowerTerm(weight(tau0, outer), ratio(tau0, outer) * system.hull.length)
    H4 = comparator.minimum(outer.terms())
    d2 = comparator.maximum([H1, H3])
    d3 = comparator.minimum([H1 * H2, H3 * H4])

    lower = d3 * constants.eta_lo ** k
    upper = d2 * constants.eta_lo ** k
    upper_hi = d2 * constants.eta_hi ** k

    lower_ok = upper_ok = upper_hi_ok = True
    violations = []
    for index, piece in enumerate(pieces):
        energy = piece.energy
        ok_lo = comparator.at_least(energy, lower)
        ok_hi = comparator.below(energy, upper)
        ok_bar = comparator.below(energy, upper_hi)
        if not (ok_lo and ok_hi and ok_bar):
            violations.append(index)
        lower_ok &= ok_lo
        upper_ok &= ok_hi
        upper_hi_ok &= ok_bar

    energies = [piece.energy.log_value(comparator.r) for piece in pieces]
    report = EnergyReport(
        r=comparator.r,
        k=k,
        H1=H1, H2=H2, H3=H3, H4=H4,
        d2=d2,
        d3=d3,
        min_energy=math.exp(min(energies)),
        max_energy=math.exp(max(energies)),
        lower_ok=lower_ok,
        upper_ok=upper_ok,
        upper_eta_hi_ok=upper_hi_ok,
        violations=tuple(violations)
    )
    if violations:
        logger.warning(f"{len(violations)} pieces fall outside the energy band at k={k}")
    return report


#
# Upper bound and lower sum
#

def _stopping_sums(system: CondensationSystem, bundle: PartitionBundle) -> Tuple[Value, Value]:
    """(Σ_Ψ Σ_{Γ(σ)} p_σ s_σ^r t_ρ c_ρ^r, Σ_Γ p_σ s_σ^r)"""
    outer, inner = system.outer_weights, system.inner_weights
    cylinders = [
        (power_term(sigma, outer) * power_term(rho, inner)).value(bundle.r)
        for sigma in bundle.psi
        for rho in bundle.inner[sigma]
    ]
    tails = [power_term(sigma, outer).value(bundle.r) for sigma in bundle.gamma]
    return _total(cylinders), _total(tails)


@dataclass(frozen=True)
class UpperBound:
    k: int
    r: Exponent
    value: Value
    cylinder_sum: Value
    tail_sum: Value
    codebook: Codebook

    def to_dict(self) -> Dict[str, Any]:
        return {
            'k': self.k,
            'r': format_exponent(self.r),
            'upper': str(self.value) if isinstance(self.value, Fraction) else self.value,
            'upper_float': float(self.value),
            'codebook_size': self.codebook.n
        }


def upper_bound(system: CondensationSystem, r: Any, k: int,
                bundle: Optional[PartitionBundle] = None) -> UpperBound:
    """p_0|hull C|^r·Σ_cyl + |hull K|^r·Σ_tail with one code point per piece.

    The codebook takes the midpoint of each piece f_σ(g_ρ(hull C)) and
    f_σ(hull K); coinciding midpoints are kept once.
    """
    bundle = bundle or phi(system, r, k)
    cylinder_sum, tail_sum = _stopping_sums(system, bundle)
    c_power = PowerTerm(Fraction(1), system.inner_hull.length).value(bundle.r)
    k_power = PowerTerm(Fraction(1), system.hull.length).value(bundle.r)
    value = system.p0 * c_power * cylinder_sum + k_power * tail_sum

    midpoints = set()
    for sigma in bundle.psi:
        f = compose(system.outer, sigma)
        for rho in bundle.inner[sigma]:
            midpoints.add(f.image(compose(system.inner, rho).image(system.inner_hull)).midpoint)
    for sigma in bundle.gamma:
        midpoints.add(compose(system.outer, sigma).image(system.hull).midpoint)
    codebook = Codebook.from_points(float(a) for a in sorted(midpoints))

    logger.debug(f"Upper bound k={k}: {float(value):.6g} with {codebook.n} code points (φ={bundle.phi})")
    return UpperBound(k, bundle.r, value, cylinder_sum, tail_sum, codebook)


def lower_sum(system: CondensationSystem, r: Any, k: int,
              bundle: Optional[PartitionBundle] = None) -> Value:
    """Σ_Ψ Σ_{Γ(σ)} p_σ s_σ^r t_ρ c_ρ^r + Σ_Γ p_σ s_σ^r"""
    bundle = bundle or phi(system, r, k)
    cylinder_sum, tail_sum = _stopping_sums(system, bundle)
    return cylinder_sum + tail_sum


#
# Reports over k
#

def sum_growth_report(system: CondensationSystem, bundles: Sequence[PartitionBundle],
                      tol: float = DEFAULT_TOL) -> List[Dict[str, Any]]:
    """I_k(s_r) against (1 − b(s_r))⁻¹ + 1 when s_r > t_r, against l_{1,k} when balanced"""
    if not bundles:
        return []
    r = bundles[0].r
    dims = xi_r(system, r, tol)
    s = dims.s_r
    rows = []
    for bundle in bundles:
        value = i_k(system, r, bundle.k, s, bundle)
        if dims.balanced:
            mode, bound, holds = "balanced", float(bundle.l1), value >= bundle.l1
        elif dims.s_r > dims.t_r:
            bound = 1.0 / (1.0 - outer_moran_sum(system, r, s)) + 1.0
            mode, holds = "inner", value < bound
        else:
            mode, bound, holds = "outer", None, None
        rows.append({'k': bundle.k, 's': s, 'I_k': value, 'mode': mode, 'bound': bound,
                     'l1': bundle.l1, 'holds': holds})
    return rows


def coefficient_envelope(system: CondensationSystem, r: Any, s: float) -> float:
    """max(p_0|hull C|^r, |hull K|^r)·c(s)^{(s+r)/s}·η_r⁻¹ for s > ξ_r.

    Every term of the upper bound is below that prefactor times η_r^k, so
    φ_{k,r}^{r/s}·upper_bound(k) stays under this value for all k.
    """
    r = normalize_exponent(r)
    constants = growth_constants(system, r)
    prefactor = max(float(system.p0 * PowerTerm(Fraction(1), system.inner_hull.length).value(r)),
                    float(PowerTerm(Fraction(1), system.hull.length).value(r)))
    b = outer_moran_sum(system, r, s)
    if b >= 1:
        raise ValueError(f"The envelope needs b(s) < 1, got {b} at s = {s}")
    c = 1.0 / (1.0 - b) + 1.0
    return prefactor * c ** ((s + float(r)) / s) * math.exp(-constants.eta_lo.log_value(r))


def coefficient_table(system: CondensationSystem, bundles: Sequence[PartitionBundle],
                      tol: float = DEFAULT_TOL) -> List[Dict[str, Any]]:
    """φ^{r/ξ_r}·upper_bound and φ^{r/ξ_r}·lower_sum per k"""
    if not bundles:
        return []
    r = bundles[0].r
    xi = xi_r(system, r, tol).xi_r
    rows = []
    for bundle in bundles:
        bound = upper_bound(system, r, bundle.k, bundle)
        lower = lower_sum(system, r, bundle.k, bundle)
        scale = bundle.phi ** (float(r) / xi)
        rows.append({
            'k': bundle.k,
            'phi': bundle.phi,
            'upper': float(bound.value),
            'lower_sum': float(lower),
            'upper_proxy': scale * float(bound.value),
            'lower_proxy': scale * float(lower)
        })
    return rows


@dataclass(frozen=True)
class BoundsReport:
    """Everything the bounds command writes for one k"""
    k: int
    r: Exponent
    phi: int
    upper: UpperBound
    lower_sum: Value
    markers: SeparationData
    energies: EnergyReport
    separation: SeparationReport
    family_mass: Fraction
    d4: Fraction

    def to_dict(self) -> Dict[str, Any]:
        return {
            'k': self.k,
            'r': format_exponent(self.r),
            'phi': self.phi,
            'upper': self.upper.to_dict()['upper'],
            'upper_float': float(self.upper.value),
            'lower_sum': str(self.lower_sum) if isinstance(self.lower_sum, Fraction) else self.lower_sum,
            'd2': float(self.energies.d2.value(self.r)),
            'd3': float(self.energies.d3.value(self.r)),
            'd4': str(self.d4),
            'family_mass': str(self.family_mass),
            'delta': str(self.markers.delta),
            'separation': 'pass' if self.separation.passed else 'fail',
            'energy_band': 'pass' if self.energies.passed else 'fail',
            'markers': self.markers.to_dict(),
            'separation_detail': self.separation.to_dict(),
            'energy_detail': self.energies.to_dict()
        }


def bounds_report(system: CondensationSystem, r: Any, k: int, markers: Optional[SeparationData] = None,
                  bundle: Optional[PartitionBundle] = None, exhaustive: bool = False) -> BoundsReport:
    markers = markers or find_markers(system)
    bundle = bundle or phi(system, r, k)
    pieces = test_family(system, r, k, markers, bundle)
    return BoundsReport(
        k=k,
        r=bundle.r,
        phi=bundle.phi,
        upper=upper_bound(system, r, k, bundle),
        lower_sum=lower_sum(system, r, k, bundle),
        markers=markers,
        energies=energy_bounds(pieces, system, r, k, markers),
        separation=verify_separation(pieces, markers.delta, exhaustive),
        family_mass=family_mass(pieces),
        d4=d4(system, markers)
    )
