"""Strictly increasing multi-indices, insertion signs, and coefficient families.

Multi-indices are plain tuples of positive integers in strictly increasing
order.  ``epsilon`` is the antisymmetry sign picked up when an index ``i`` is
wedged onto a multi-index ``L``; ``WeightFamily`` carries the per-pair weights
c[I, J] > 0 that define the weighted form norms, together with checkers for
the three structural conditions the estimates need (bounded ratio, positive
ratio, multiplicativity).
"""

from __future__ import annotations

import itertools
from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional


MultiIndex = tuple  # tuple of positive ints, strictly increasing


def as_multiindex(seq: Iterable[int]) -> MultiIndex:
    """Validate and normalize a strictly increasing multi-index."""
    t = tuple(int(v) for v in seq)
    for k, v in enumerate(t):
        if v < 1:
            raise ValueError(f"multi-index entries must be >= 1, got {v}")
        if k > 0 and t[k - 1] >= v:
            raise ValueError(f"multi-index must be strictly increasing, got {t}")
    return t


def epsilon(i: int, L: MultiIndex, K: MultiIndex) -> int:
    """Sign of the permutation sorting (i, l1, ..., lt) into K; 0 if K != {i} u L.

    Total function: returns 0 whenever i already lies in L or the union does
    not equal K as a set.
    """
    if i in L:
        return 0
    if len(K) != len(L) + 1:
        return 0
    merged = sorted((i,) + tuple(L))
    if tuple(merged) != tuple(K):
        return 0
    # L is sorted, so the inversions of (i, l1, ..., lt) are exactly the
    # entries of L smaller than i.
    inv = bisect_left(L, i)
    return -1 if inv % 2 else 1


def perm_sign_bruteforce(seq: Iterable[int]) -> int:
    """Inversion-count oracle for the sign of the permutation sorting ``seq``."""
    s = list(seq)
    inv = 0
    for a in range(len(s)):
        for b in range(a + 1, len(s)):
            if s[a] > s[b]:
                inv += 1
    return -1 if inv % 2 else 1


def insert(i: int, J: MultiIndex) -> tuple[int, Optional[MultiIndex]]:
    """Insert ``i`` into ``J``: returns (sign, K) with K = sorted({i} u J).

    Returns (0, None) when i is already in J.
    """
    if i in J:
        return 0, None
    K = tuple(sorted((i,) + tuple(J)))
    return epsilon(i, tuple(J), K), K


class InvalidFamilyError(ValueError):
    """A custom weight callback produced a non-positive value."""


@dataclass(frozen=True)
class WeightFamily:
    """Weights c[I, J] > 0 attached to pairs of strictly increasing multi-indices.

    kind:
      - "constant":        c[I, J] = value
      - "multiplicative":  c[I, J] = alpha(I) * prod(mu(j) for j in J)
      - "custom":          c[I, J] = callback(I, J), checked positive
    """

    kind: str
    value: float = 1.0
    alpha: Callable[[MultiIndex], float] = field(default=lambda I: 1.0)
    mu: Callable[[int], float] = field(default=lambda j: 1.0)
    callback: Optional[Callable[[MultiIndex, MultiIndex], float]] = None

    def coeff(self, I: MultiIndex, J: MultiIndex) -> float:
        I = tuple(I)
        J = tuple(J)
        if self.kind == "constant":
            return self.value
        if self.kind == "multiplicative":
            out = self.alpha(I)
            for j in J:
                out *= self.mu(j)
            return out
        if self.kind == "custom":
            v = float(self.callback(I, J))
            if not v > 0.0:
                raise InvalidFamilyError(f"c[{I},{J}] = {v} is not positive")
            return v
        raise ValueError(f"unknown family kind {self.kind!r}")

    def contract_coeff(self, I: MultiIndex, i: int, L: MultiIndex) -> float:
        """c[I, iL]: the single surviving term of the contraction sum, 0 if i in L."""
        sign, K = insert(i, tuple(L))
        if sign == 0:
            return 0.0
        return self.coeff(I, K)


def constant_family(value: float = 1.0) -> WeightFamily:
    if not value > 0:
        raise InvalidFamilyError(f"constant family value must be positive, got {value}")
    return WeightFamily(kind="constant", value=value)


def multiplicative_family(alpha=lambda I: 1.0, mu=lambda j: 1.0) -> WeightFamily:
    return WeightFamily(kind="multiplicative", alpha=alpha, mu=mu)


def custom_family(callback) -> WeightFamily:
    return WeightFamily(kind="custom", callback=callback)


def prior_work_family(a: Callable[[int], float]) -> WeightFamily:
    """The earlier working-space weights: 2^(|I|+|J|) * prod a_i^2 * prod a_j^2."""

    def cb(I, J):
        out = 2.0 ** (len(I) + len(J))
        for i in I:
            out *= a(i) ** 2
        for j in J:
            out *= a(j) ** 2
        return out

    return custom_family(cb)


@dataclass
class ConditionReport:
    c1_sup: float
    c0_inf: float
    multiplicative_ok: bool
    violations: list
    max_index: int
    s: int
    t: int
    note: str = "ratios c[I,iJ]/c[I,J] enumerated over entries <= max_index with i not in J"

    @property
    def passed(self) -> bool:
        return self.c0_inf > 0.0 and self.c1_sup < float("inf") and self.multiplicative_ok


def _increasing_tuples(length: int, max_index: int):
    return itertools.combinations(range(1, max_index + 1), length)


def check_conditions(family: WeightFamily, max_index: int, s: int, t: int,
                     rel_tol: float = 1e-12) -> ConditionReport:
    """Enumerate the ratio extrema and the multiplicativity identity up to max_index.

    The infimum is taken over i not in J: the i-in-J terms vanish identically
    and would force the infimum to 0 for every family, emptying the estimate
    they feed.
    """
    if max_index < s + t + 2:
        raise ValueError(f"max_index must be >= s+t+2 = {s + t + 2}, got {max_index}")

    c1 = -float("inf")
    c0 = float("inf")
    for I in _increasing_tuples(s, max_index):
        for J in _increasing_tuples(t, max_index):
            cIJ = family.coeff(I, J)
            for i in range(1, max_index + 1):
                if i in J:
                    continue
                ratio = family.contract_coeff(I, i, J) / cIJ
                c1 = max(c1, ratio)
                c0 = min(c0, ratio)

    violations = []
    # Quadruples (J, J', L, K): J = L u {a}, J' = L u {b}, K = L u {a, b}.
    for I in _increasing_tuples(s, max_index):
        for L in _increasing_tuples(t, max_index):
            rest = [v for v in range(1, max_index + 1) if v not in L]
            for a, b in itertools.combinations(rest, 2):
                J = tuple(sorted(L + (a,)))
                Jp = tuple(sorted(L + (b,)))
                K = tuple(sorted(L + (a, b)))
                lhs = family.coeff(I, J) * family.coeff(I, Jp)
                rhs = family.coeff(I, L) * family.coeff(I, K)
                if abs(lhs - rhs) > rel_tol * max(abs(lhs), abs(rhs), 1e-300):
                    violations.append({"I": I, "J": J, "Jp": Jp, "L": L, "K": K,
                                       "lhs": lhs, "rhs": rhs})

    return ConditionReport(c1_sup=c1, c0_inf=c0,
                           multiplicative_ok=not violations,
                           violations=violations,
                           max_index=max_index, s=s, t=t)
