"""Exact-arithmetic submodular oracles and polymatroid primitives.

A polymatroid is the packing polytope ``P(f) = {x >= 0 : x(S) <= f(S) for all
S}`` of a normalized monotone submodular function ``f`` on the ground set
``{0, .., n-1}``.  Everything here works in :class:`fractions.Fraction`
arithmetic: tightness (``x(S) = f(S)``) and set minimization are decided
exactly, never up to a tolerance.

The central construction is the residual oracle: given promised allocations
``rho`` inside the polytope and per-element demand caps ``d``, the set of
feasible additional allocations ``{x >= 0 : rho + x in P, x <= d}`` is itself
a polymatroid, defined by

    fhat(S) = min over T subset of S of  f(T) - rho(T) + d(S \\ T).

``fhat`` need not be monotone; its monotonization ``fbar(S) = min over
supersets S' of fhat(S')`` defines the same polytope.  Clinch amounts derive
from ``fhat`` evaluated at the full set and at each full-set-minus-one.

All subset enumeration is capped (default 16 elements, override with the
``CLINCH_BRUTE_FORCE_CAP`` environment variable); these oracles are meant for
desk-scale verification, not for large-scale submodular minimization.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence, Union

from .errors import DomainError, PreconditionError, SizeError

DEFAULT_BRUTE_FORCE_CAP = 16
_CAP_ENV = "CLINCH_BRUTE_FORCE_CAP"

Rational = Union[int, str, Fraction]

ZERO = Fraction(0)


def brute_force_cap() -> int:
    """Current subset-enumeration cap (env override, else 16)."""
    raw = os.environ.get(_CAP_ENV)
    if raw is None:
        return DEFAULT_BRUTE_FORCE_CAP
    try:
        cap = int(raw)
    except ValueError as exc:
        raise DomainError(f"{_CAP_ENV} must be an integer, got {raw!r}") from exc
    if cap < 1:
        raise DomainError(f"{_CAP_ENV} must be positive, got {cap}")
    return cap


def check_enumeration_size(n: int, what: str = "subset enumeration") -> None:
    cap = brute_force_cap()
    if n > cap:
        raise SizeError(f"{what} over {n} elements exceeds the cap of {cap}")


def as_fraction(value: Rational) -> Fraction:
    """Exact conversion; floats are rejected to keep arithmetic exact."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise DomainError(f"expected a rational, got {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise DomainError(f"malformed rational {value!r}") from exc
    raise DomainError(f"expected an exact rational, got {type(value).__name__}")


def vector(values: Iterable[Rational], n: Optional[int] = None) -> tuple:
    vec = tuple(as_fraction(v) for v in values)
    if n is not None and len(vec) != n:
        raise DomainError(f"expected a vector of length {n}, got {len(vec)}")
    return vec


@dataclass(frozen=True)
class GroundSet:
    """Bidders 0..n-1."""

    n: int

    def __post_init__(self):
        if self.n < 1:
            raise DomainError(f"ground set must have n >= 1, got {self.n}")

    @property
    def full_mask(self) -> int:
        return (1 << self.n) - 1

    def members(self) -> range:
        return range(self.n)


def mask_of(subset: Iterable[int], n: int) -> int:
    mask = 0
    for i in subset:
        if not 0 <= i < n:
            raise DomainError(f"element {i} is outside the ground set of size {n}")
        mask |= 1 << i
    return mask


def set_of(mask: int) -> frozenset:
    return frozenset(i for i in range(mask.bit_length()) if mask >> i & 1)


def _mask_sums(vec: Sequence[Fraction], n: int) -> list:
    """sums[m] = sum of vec over the members of mask m, for all m."""
    sums = [ZERO] * (1 << n)
    for m in range(1, 1 << n):
        low = m & -m
        sums[m] = sums[m ^ low] + vec[low.bit_length() - 1]
    return sums


class SubmodularOracle:
    """Memoizing value oracle for a normalized set function on {0..n-1}.

    ``monotone`` is a claim by the constructor, checkable with
    :func:`verify_submodular`.  Oracles are immutable after construction and
    safe to share read-only across threads.
    """

    def __init__(self, n: int, fn_mask: Callable[[int], Fraction],
                 monotone: bool, name: str, ctrs: Optional[tuple] = None):
        self.ground = GroundSet(n)
        self.n = n
        self.monotone = monotone
        self.name = name
        # Single-keyword oracles carry their CTR list so the auction engine
        # can dispatch to the greedy clinch path.
        self.ctrs = ctrs
        self._fn = fn_mask
        self._memo = {0: ZERO}

    @classmethod
    def from_set_function(cls, n: int, fn: Callable[[frozenset], Rational],
                          monotone: bool = False, name: str = "custom") -> "SubmodularOracle":
        return cls(n, lambda m: as_fraction(fn(set_of(m))), monotone, name)

    def value_mask(self, mask: int) -> Fraction:
        cached = self._memo.get(mask)
        if cached is None:
            cached = as_fraction(self._fn(mask))
            self._memo[mask] = cached
        return cached

    def value(self, subset: Iterable[int]) -> Fraction:
        return self.value_mask(mask_of(subset, self.n))

    def singleton(self, i: int) -> Fraction:
        if not 0 <= i < self.n:
            raise DomainError(f"element {i} is outside the ground set of size {self.n}")
        return self.value_mask(1 << i)

    def __repr__(self):
        return f"SubmodularOracle({self.name}, n={self.n}, monotone={self.monotone})"


def evaluate(oracle: SubmodularOracle, subset: Iterable[int]) -> Fraction:
    """f(S); uniform oracle call surface used by the other modules."""
    return oracle.value(subset)


@dataclass(frozen=True)
class OracleCheck:
    """Result of verify_submodular: ok, or a named violation with witness sets."""

    ok: bool
    violation: Optional[str] = None          # normalization | submodularity | monotonicity
    witness: Optional[tuple] = None          # tuple of frozensets reproducing the violation
    detail: str = ""

    def __bool__(self):
        return self.ok


def verify_submodular(oracle) -> OracleCheck:
    """Exhaustively check normalization, submodularity and claimed monotonicity.

    Enumerates all 4^n subset pairs, so expect this to be slow well before
    the cap bites.  Returns the first violating pair in ascending mask order,
    so failures are reproducible.
    """
    n = oracle.n
    check_enumeration_size(n, f"pairwise submodularity check on {oracle.name!r}")
    if oracle.value_mask(0) != 0:
        return OracleCheck(False, "normalization", (frozenset(),),
                           f"f(empty) = {oracle.value_mask(0)} != 0")
    size = 1 << n
    values = [oracle.value_mask(m) for m in range(size)]
    for s in range(size):
        for t in range(s + 1, size):
            if values[s | t] + values[s & t] > values[s] + values[t]:
                return OracleCheck(
                    False, "submodularity", (set_of(s), set_of(t)),
                    f"f(S|T)+f(S&T) = {values[s | t] + values[s & t]} > "
                    f"{values[s] + values[t]} = f(S)+f(T)")
    if oracle.monotone:
        for s in range(size):
            for i in range(n):
                if s >> i & 1:
                    continue
                if values[s | (1 << i)] < values[s]:
                    return OracleCheck(
                        False, "monotonicity", (set_of(s), set_of(s | (1 << i))),
                        f"f(S) = {values[s]} > {values[s | (1 << i)]} = f(S+{i})")
    return OracleCheck(True)


@dataclass(frozen=True)
class MembershipResult:
    ok: bool
    violating: Optional[frozenset] = None
    deficit: Optional[Fraction] = None       # f(S) - x(S) on the violating set

    def __bool__(self):
        return self.ok


def membership(oracle: SubmodularOracle, x: Sequence[Rational]) -> MembershipResult:
    """Decide x in P(f) exactly; on failure report a most-violated set."""
    n = oracle.n
    vec = vector(x, n)
    for i, xi in enumerate(vec):
        if xi < 0:
            raise DomainError(f"membership requires x >= 0, got x[{i}] = {xi}")
    check_enumeration_size(n, "membership test")
    sums = _mask_sums(vec, n)
    best_mask, best_key = None, None
    for m in range(1, 1 << n):
        slack = oracle.value_mask(m) - sums[m]
        key = (slack, bin(m).count("1"), tuple(sorted(set_of(m))))
        if best_key is None or key < best_key:
            best_key, best_mask = key, m
    if best_key[0] < 0:
        return MembershipResult(False, set_of(best_mask), best_key[0])
    return MembershipResult(True)


def min_constrained(evaluator, n: Optional[int] = None,
                    include: Iterable[int] = (), exclude: Iterable[int] = ()):
    """Minimize eval(S) over include <= S <= ground \\ exclude.

    ``evaluator`` is either an oracle (``n`` optional) or a callable taking a
    frozenset.  Ties break by smallest cardinality, then lexicographically on
    the sorted element tuple, so witnesses are deterministic.
    Returns ``(set, value)``.
    """
    if hasattr(evaluator, "value_mask"):
        if n is None:
            n = evaluator.n
        eval_mask = evaluator.value_mask
    else:
        if n is None:
            raise DomainError("min_constrained needs n when given a bare callable")
        fn = evaluator
        eval_mask = lambda m: as_fraction(fn(set_of(m)))  # noqa: E731
    check_enumeration_size(n, "constrained minimization")
    inc = mask_of(include, n)
    exc = mask_of(exclude, n)
    if inc & exc:
        raise DomainError("include and exclude sets overlap")
    free = ((1 << n) - 1) & ~inc & ~exc
    best_mask, best_key = None, None
    # Iterate all supersets of inc avoiding exc: submasks of `free` shifted by inc.
    sub = free
    while True:
        m = inc | sub
        value = eval_mask(m)
        key = (value, bin(m).count("1"), tuple(sorted(set_of(m))))
        if best_key is None or key < best_key:
            best_key, best_mask = key, m
        if sub == 0:
            break
        sub = (sub - 1) & free
    return set_of(best_mask), best_key[0]


def _min_over_subsets(values: list, n: int) -> list:
    """out[m] = min over submasks t of m of values[t]  (subset zeta transform)."""
    out = list(values)
    for i in range(n):
        bit = 1 << i
        for m in range(1 << n):
            if m & bit and out[m ^ bit] < out[m]:
                out[m] = out[m ^ bit]
    return out


def _min_over_supersets(values: list, n: int) -> list:
    out = list(values)
    for i in range(n):
        bit = 1 << i
        for m in range(1 << n):
            if not m & bit and out[m | bit] < out[m]:
                out[m] = out[m | bit]
    return out


class ResidualOracle:
    """Oracle for the residual polymatroid P_{rho,d} of a base polymatroid.

    Evaluates ``fhat(S) = min over T <= S of f(T) - rho(T) + d(S \\ T)`` by
    exhaustive enumeration with memoized base values.  Since ``d(S \\ T) =
    d(S) - d(T)`` the whole table reduces to a subset-min transform of
    ``h(T) = f(T) - rho(T) - d(T)``, computed once per (rho, d) snapshot.
    Snapshots are immutable, so the table never invalidates.

    ``monotonized`` evaluates ``fbar(S) = min over supersets of fhat``, the
    monotone function defining the same polytope.
    """

    def __init__(self, base: SubmodularOracle, rho: Sequence[Rational],
                 d: Sequence[Rational], _validate: bool = True):
        self.base = base
        self.n = base.n
        self.monotone = False
        self.name = f"residual({base.name})"
        self.rho = vector(rho, base.n)
        self.demand = vector(d, base.n)
        for i, di in enumerate(self.demand):
            if di < 0:
                raise DomainError(f"demands must be >= 0, got d[{i}] = {di}")
        if _validate:
            check_enumeration_size(self.n, "residual oracle construction")
            result = membership(base, self.rho)
            if not result.ok:
                raise PreconditionError(
                    f"rho is not in the base polymatroid: rho(S) exceeds f(S) on "
                    f"S = {sorted(result.violating)}", witness=result.violating)
        self._fhat = None
        self._fbar = None

    def _tables(self):
        if self._fhat is None:
            n = self.n
            rsum = _mask_sums(self.rho, n)
            dsum = _mask_sums(self.demand, n)
            h = [self.base.value_mask(m) - rsum[m] - dsum[m] for m in range(1 << n)]
            minh = _min_over_subsets(h, n)
            self._fhat = [dsum[m] + minh[m] for m in range(1 << n)]
            self._fbar = _min_over_supersets(self._fhat, n)
        return self._fhat, self._fbar

    def value_mask(self, mask: int) -> Fraction:
        return self._tables()[0][mask]

    def value(self, subset: Iterable[int]) -> Fraction:
        return self.value_mask(mask_of(subset, self.n))

    def monotonized_mask(self, mask: int) -> Fraction:
        return self._tables()[1][mask]

    def monotonized(self, subset: Iterable[int]) -> Fraction:
        return self.monotonized_mask(mask_of(subset, self.n))

    def full_value(self) -> Fraction:
        """fhat([n]): the total amount the residual polytope can still absorb."""
        return self.value_mask((1 << self.n) - 1)

    def monotonized_oracle(self) -> SubmodularOracle:
        return SubmodularOracle(self.n, self.monotonized_mask, True,
                                f"monotonized({self.name})")


def residual(oracle: SubmodularOracle, rho: Sequence[Rational],
             d: Sequence[Rational]) -> ResidualOracle:
    """Residual-polytope oracle for promises rho (must lie in P) and demands d."""
    return ResidualOracle(oracle, rho, d)


def clinch_amounts(oracle: SubmodularOracle, rho: Sequence[Rational],
                   d: Sequence[Rational]) -> tuple:
    """Per-bidder clinch vector: delta_i = max{0, fhat([n]) - fhat([n]\\i)}.

    The result satisfies 0 <= delta <= d and rho + delta in P(f).
    """
    res = residual(oracle, rho, d)
    full = (1 << oracle.n) - 1
    total = res.value_mask(full)
    return tuple(max(ZERO, total - res.value_mask(full ^ (1 << i)))
                 for i in range(oracle.n))


def greedy_vertex(oracle: SubmodularOracle, order: Optional[Sequence[int]] = None) -> tuple:
    """Greedy vertex x[order[j]] = f(prefix_{j+1}) - f(prefix_j); lies in P(f)."""
    n = oracle.n
    if order is None:
        order = range(n)
    order = list(order)
    if sorted(order) != list(range(n)):
        raise DomainError(f"order must be a permutation of 0..{n - 1}")
    x = [ZERO] * n
    mask = 0
    prev = ZERO
    for i in order:
        mask |= 1 << i
        cur = oracle.value_mask(mask)
        x[i] = cur - prev
        prev = cur
    return tuple(x)
