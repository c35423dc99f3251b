"""Finite words over {1..N}, antichains of words and multiplicative weights."""

import logging
from dataclasses import dataclass, field
from enum import Enum, auto
from fractions import Fraction
from typing import Iterable, Iterator, List, Optional, Sequence, Set, Tuple

from .powers import PowerTerm

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Word:
    """A finite index string; the empty word is θ"""
    alphabet_size: int
    letters: Tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.alphabet_size < 1:
            raise ValueError(f"Alphabet size must be positive, got {self.alphabet_size}")
        letters = tuple(self.letters)
        for letter in letters:
            if not 1 <= letter <= self.alphabet_size:
                raise ValueError(f"Letter {letter} outside alphabet 1..{self.alphabet_size}")
        object.__setattr__(self, 'letters', letters)

    @classmethod
    def empty(cls, alphabet_size: int) -> 'Word':
        return cls(alphabet_size, ())

    def __len__(self) -> int:
        return len(self.letters)

    def __str__(self) -> str:
        if not self.letters:
            return "θ"
        return "(" + ",".join(str(letter) for letter in self.letters) + ")"

    def __mul__(self, other: 'Word') -> 'Word':
        return concat(self, other)

    @property
    def is_empty(self) -> bool:
        return not self.letters

    @property
    def sort_key(self) -> Tuple[int, Tuple[int, ...]]:
        """Shortlex key: shorter words first, then lexicographic"""
        return (len(self.letters), self.letters)

    def prefix(self, n: int) -> 'Word':
        """σ|_n"""
        if not 0 <= n <= len(self.letters):
            raise ValueError(f"Prefix length {n} outside 0..{len(self.letters)}")
        return Word(self.alphabet_size, self.letters[:n])

    def extend(self, letter: int) -> 'Word':
        return Word(self.alphabet_size, self.letters + (letter,))

    def children(self) -> List['Word']:
        return [self.extend(i) for i in range(1, self.alphabet_size + 1)]

    def to_list(self) -> List[int]:
        return list(self.letters)


def concat(sigma: Word, tau: Word) -> Word:
    """σ * τ"""
    if sigma.alphabet_size != tau.alphabet_size:
        raise ValueError(f"Alphabet mismatch: {sigma.alphabet_size} != {tau.alphabet_size}")
    return Word(sigma.alphabet_size, sigma.letters + tau.letters)


def predecessor(sigma: Word) -> Word:
    """σ⁻, the word with its last letter dropped"""
    if sigma.is_empty:
        raise ValueError("The empty word has no predecessor")
    return Word(sigma.alphabet_size, sigma.letters[:-1])


class Relation(Enum):
    EQUAL = auto()
    PREFIX = auto()       # σ ≺ τ
    EXTENSION = auto()    # τ ≺ σ
    INCOMPARABLE = auto()


def is_prefix(sigma: Word, tau: Word) -> bool:
    """True when σ is a (not necessarily strict) prefix of τ"""
    n = len(sigma.letters)
    return n <= len(tau.letters) and tau.letters[:n] == sigma.letters


def relation(sigma: Word, tau: Word) -> Relation:
    if sigma.alphabet_size != tau.alphabet_size:
        raise ValueError(f"Alphabet mismatch: {sigma.alphabet_size} != {tau.alphabet_size}")
    if sigma.letters == tau.letters:
        return Relation.EQUAL
    if is_prefix(sigma, tau):
        return Relation.PREFIX
    if is_prefix(tau, sigma):
        return Relation.EXTENSION
    return Relation.INCOMPARABLE


@dataclass(frozen=True)
class WeightSystem:
    """Probabilities and contraction ratios attached to the letters of an alphabet"""
    weights: Tuple[Fraction, ...]
    ratios: Tuple[Fraction, ...]

    def __post_init__(self) -> None:
        weights = tuple(Fraction(w) for w in self.weights)
        ratios = tuple(Fraction(c) for c in self.ratios)
        if not weights:
            raise ValueError("WeightSystem needs at least one letter")
        if len(weights) != len(ratios):
            raise ValueError(f"Got {len(weights)} weights but {len(ratios)} ratios")
        if any(not 0 < w <= 1 for w in weights):
            raise ValueError(f"Weights must lie in (0, 1]: {weights}")
        if any(not 0 < c < 1 for c in ratios):
            raise ValueError(f"Ratios must lie in (0, 1): {ratios}")
        if sum(weights) > 1:
            raise ValueError(f"Weights sum to {sum(weights)} > 1")
        object.__setattr__(self, 'weights', weights)
        object.__setattr__(self, 'ratios', ratios)

    @property
    def alphabet_size(self) -> int:
        return len(self.weights)

    @property
    def total(self) -> Fraction:
        return sum(self.weights, Fraction(0))

    def term(self, letter: int) -> PowerTerm:
        """``w_i * ρ_i**r`` for a single letter"""
        self._check_letter(letter)
        return PowerTerm(self.weights[letter - 1], self.ratios[letter - 1])

    def terms(self) -> List[PowerTerm]:
        return [PowerTerm(w, c) for w, c in zip(self.weights, self.ratios)]

    def _check_letter(self, letter: int) -> None:
        if not 1 <= letter <= len(self.weights):
            raise ValueError(f"Letter {letter} out of range 1..{len(self.weights)}")


def _product(values: Sequence[Fraction], word: Word) -> Fraction:
    result = Fraction(1)
    for letter in word.letters:
        if not 1 <= letter <= len(values):
            raise ValueError(f"Letter {letter} out of range 1..{len(values)}")
        result *= values[letter - 1]
    return result


def weight(sigma: Word, system: WeightSystem) -> Fraction:
    """p_σ: product of the letter weights, 1 for θ"""
    return _product(system.weights, sigma)


def ratio(sigma: Word, system: WeightSystem) -> Fraction:
    """s_σ: product of the letter ratios, 1 for θ"""
    return _product(system.ratios, sigma)


def power_term(sigma: Word, system: WeightSystem) -> PowerTerm:
    """The pair (p_σ, s_σ), i.e. ``p_σ s_σ^r`` with r left open"""
    return PowerTerm(weight(sigma, system), ratio(sigma, system))


def _check_incomparable(members: Sequence[Word]) -> Optional[Tuple[Word, Word]]:
    """First comparable pair in lexicographically sorted members, if any.

    In lexicographic order every word lying between σ and an extension of σ
    also extends σ, so checking neighbours is enough.
    """
    for left, right in zip(members, members[1:]):
        if is_prefix(left, right):
            return (left, right)
    return None


@dataclass(frozen=True)
class Antichain:
    """A finite set of pairwise incomparable words, kept in lexicographic order"""
    alphabet_size: int
    members: Tuple[Word, ...]
    _lookup: Set[Tuple[int, ...]] = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        members = sorted(set(self.members), key=lambda w: w.letters)
        if not members:
            raise ValueError("An antichain needs at least one word")
        for word in members:
            if word.alphabet_size != self.alphabet_size:
                raise ValueError(f"Word {word} is not over alphabet size {self.alphabet_size}")
        clash = _check_incomparable(members)
        if clash is not None:
            raise ValueError(f"Words {clash[0]} and {clash[1]} are comparable")
        object.__setattr__(self, 'members', tuple(members))
        object.__setattr__(self, '_lookup', {w.letters for w in members})

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self) -> Iterator[Word]:
        return iter(self.members)

    def __contains__(self, word: object) -> bool:
        return isinstance(word, Word) and word.letters in self._lookup

    @property
    def min_length(self) -> int:
        """l(Γ)"""
        return min(len(w) for w in self.members)

    @property
    def max_length(self) -> int:
        """L(Γ)"""
        return max(len(w) for w in self.members)


class AntichainStatus(Enum):
    VALID_MAXIMAL = auto()
    VALID_NONMAXIMAL = auto()
    INVALID = auto()


@dataclass(frozen=True)
class AntichainCheck:
    status: AntichainStatus
    witness: Tuple[Word, ...] = ()

    @property
    def is_maximal(self) -> bool:
        return self.status is AntichainStatus.VALID_MAXIMAL


def check_maximal_antichain(words: Iterable[Word], alphabet_size: int) -> AntichainCheck:
    """Classify a finite word set as a maximal, non-maximal or invalid antichain.

    Maximality is decided by prefix-coverage counting: once the set is known
    to be prefix-free, it is maximal iff its members cover all N^L words of
    length L = L(Γ).
    """
    members = sorted(set(words), key=lambda w: w.letters)
    if not members:
        raise ValueError("Cannot check an empty word set")
    for word in members:
        if word.alphabet_size != alphabet_size:
            raise ValueError(f"Word {word} is not over alphabet size {alphabet_size}")

    clash = _check_incomparable(members)
    if clash is not None:
        return AntichainCheck(AntichainStatus.INVALID, clash)

    depth = max(len(w) for w in members)
    covered = sum(alphabet_size ** (depth - len(w)) for w in members)
    if covered == alphabet_size ** depth:
        return AntichainCheck(AntichainStatus.VALID_MAXIMAL)

    uncovered = _first_uncovered(members, alphabet_size, depth)
    logger.debug(f"Antichain covers {covered} of {alphabet_size ** depth} words, e.g. not {uncovered}")
    return AntichainCheck(AntichainStatus.VALID_NONMAXIMAL, (uncovered,))


def _first_uncovered(members: Sequence[Word], alphabet_size: int, depth: int) -> Word:
    member_set = {w.letters for w in members}
    prefixes = {w.letters[:n] for w in members for n in range(len(w.letters))}

    stack: List[Tuple[int, ...]] = [()]
    while stack:
        node = stack.pop()
        if node in member_set:
            continue
        if node not in prefixes:
            return Word(alphabet_size, node + (1,) * (depth - len(node)))
        for letter in range(alphabet_size, 0, -1):
            stack.append(node + (letter,))
    raise AssertionError("coverage count and trie walk disagree")


def strict_prefixes(antichain: Antichain) -> List[Word]:
    """All words that are strict prefixes of some member, in shortlex order"""
    seen = {w.letters[:n] for w in antichain for n in range(len(w.letters))}
    return sorted((Word(antichain.alphabet_size, p) for p in seen), key=lambda w: w.sort_key)


def lambda_star(antichain: Antichain) -> List[Word]:
    """Λ*_Γ: words of length at least l(Γ) having a strict extension in Γ"""
    shortest = antichain.min_length
    return [w for w in strict_prefixes(antichain) if len(w) >= shortest]


def all_words(alphabet_size: int, length: int) -> List[Word]:
    """Ω_length in lexicographic order"""
    words = [Word.empty(alphabet_size)]
    for _ in range(length):
        words = [child for w in words for child in w.children()]
    return words
