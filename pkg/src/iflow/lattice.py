"""Finite security lattices.

A lattice is described by its level names and a set of Hasse pairs; the
partial order is the reflexive-transitive closure of those pairs.  On
construction we validate the lattice axioms (antisymmetry, unique join and
meet for every pair) and precompute the join/meet tables, so lookups during
checking are O(1).
"""

from __future__ import annotations

from .errors import ConfigError


class Lattice:
    def __init__(self, elements: tuple[str, ...], hasse: tuple[tuple[str, str], ...]):
        if not elements:
            raise ConfigError("a lattice needs at least one level")
        if len(set(elements)) != len(elements):
            raise ConfigError("duplicate level names")
        self.elements = elements
        self.hasse = hasse
        index = {e: i for i, e in enumerate(elements)}
        for a, b in hasse:
            for name in (a, b):
                if name not in index:
                    raise ConfigError(f"unknown level '{name}' in order clause")

        n = len(elements)
        leq = [[False] * n for _ in range(n)]
        for i in range(n):
            leq[i][i] = True
        for a, b in hasse:
            leq[index[a]][index[b]] = True
        for k in range(n):  # Warshall closure
            for i in range(n):
                if leq[i][k]:
                    row_k = leq[k]
                    row_i = leq[i]
                    for j in range(n):
                        if row_k[j]:
                            row_i[j] = True
        for i in range(n):
            for j in range(n):
                if i != j and leq[i][j] and leq[j][i]:
                    raise ConfigError(
                        f"order is not antisymmetric: {elements[i]} and {elements[j]} "
                        "are mutually below each other"
                    )

        self._index = index
        self._leq = leq
        self._join: dict[tuple[str, str], str] = {}
        self._meet: dict[tuple[str, str], str] = {}
        for a in elements:
            for b in elements:
                self._join[(a, b)] = self._bound(a, b, upper=True)
                self._meet[(a, b)] = self._bound(a, b, upper=False)

        bottom = elements[0]
        top = elements[0]
        for e in elements[1:]:
            bottom = self._meet[(bottom, e)]
            top = self._join[(top, e)]
        self.bottom = bottom
        self.top = top

    def _bound(self, a: str, b: str, upper: bool) -> str:
        ia, ib = self._index[a], self._index[b]
        if upper:
            cands = [c for c in self.elements
                     if self._leq[ia][self._index[c]] and self._leq[ib][self._index[c]]]
            best = [c for c in cands
                    if all(self._leq[self._index[c]][self._index[d]] for d in cands)]
        else:
            cands = [c for c in self.elements
                     if self._leq[self._index[c]][ia] and self._leq[self._index[c]][ib]]
            best = [c for c in cands
                    if all(self._leq[self._index[d]][self._index[c]] for d in cands)]
        kind = "join" if upper else "meet"
        if not best:
            raise ConfigError(f"not a lattice: levels {a}, {b} have no {kind}")
        if len(best) > 1:
            raise ConfigError(f"not a lattice: levels {a}, {b} have no unique {kind}")
        return best[0]

    def _check(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise ConfigError(f"unknown level '{name}'") from None

    def leq(self, a: str, b: str) -> bool:
        return self._leq[self._check(a)][self._check(b)]

    def join(self, a: str, b: str) -> str:
        self._check(a), self._check(b)
        return self._join[(a, b)]

    def meet(self, a: str, b: str) -> str:
        self._check(a), self._check(b)
        return self._meet[(a, b)]

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def __repr__(self) -> str:
        pairs = ", ".join(f"{a}<{b}" for a, b in self.hasse)
        return f"Lattice({' '.join(self.elements)}; {pairs})"


def two_point() -> Lattice:
    """The default policy lattice: public L below secret H."""
    return Lattice(("L", "H"), (("L", "H"),))
