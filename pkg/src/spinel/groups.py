"""Finite groups as explicit multiplication tables, with 0 as the identity.

Everything downstream (graphs of groups, links, blow-ups) only ever needs
coset and conjugation arithmetic in small groups, so groups are stored as
plain tables and subgroups as sorted element tuples.
"""

from __future__ import annotations

import itertools
from functools import lru_cache


class GroupError(ValueError):
    pass


class FiniteGroup:
    """A finite group given by its multiplication table.

    table[a][b] is the product a*b; element 0 is the identity.
    """

    __slots__ = ("order", "table", "name", "_inv", "_key")

    def __init__(self, table, name="G"):
        table = tuple(tuple(row) for row in table)
        n = len(table)
        if n == 0:
            raise GroupError("invalid-order: empty table")
        self.order = n
        self.table = table
        self.name = name
        self._validate()
        inv = [None] * n
        for a in range(n):
            for b in range(n):
                if table[a][b] == 0:
                    inv[a] = b
        self._inv = tuple(inv)
        self._key = None

    def _validate(self):
        n = self.order
        idx = set(range(n))
        for row in self.table:
            if len(row) != n or set(row) != idx:
                raise GroupError("table rows must be permutations of 0..n-1")
        for b in range(n):
            col = {self.table[a][b] for a in range(n)}
            if col != idx:
                raise GroupError("table columns must be permutations of 0..n-1")
        if any(self.table[0][b] != b for b in range(n)):
            raise GroupError("element 0 must be the identity (row)")
        if any(self.table[a][0] != a for a in range(n)):
            raise GroupError("element 0 must be the identity (column)")
        for a in range(n):
            for b in range(n):
                tab = self.table[a][b]
                for c in range(n):
                    if self.table[tab][c] != self.table[a][self.table[b][c]]:
                        raise GroupError("associativity fails at (%d,%d,%d)" % (a, b, c))

    def mul(self, a, b):
        return self.table[a][b]

    def inv(self, a):
        return self._inv[a]

    def conj(self, g, h):
        """g h g^-1."""
        return self.table[self.table[g][h]][self._inv[g]]

    def elements(self):
        return range(self.order)

    def element_order(self, a):
        x = a
        n = 1
        while x != 0:
            x = self.table[x][a]
            n += 1
        return n

    def is_trivial(self):
        return self.order == 1

    def iso_key(self):
        """Canonical table serialization up to isomorphism (brute force).

        Cached; fine for order <= 24 in principle, used on order <= 6 here.
        """
        if self._key is None:
            self._key = _iso_key(self.table)
        return self._key

    def __repr__(self):
        return "FiniteGroup(%s, order=%d)" % (self.name, self.order)


@lru_cache(maxsize=None)
def _iso_key_cached(table):
    n = len(table)
    best = None
    for perm in itertools.permutations(range(1, n)):
        p = (0,) + perm
        q = [0] * n
        for i, pi in enumerate(p):
            q[pi] = i
        relab = tuple(tuple(q[table[p[a]][p[b]]] for b in range(n)) for a in range(n))
        if best is None or relab < best:
            best = relab
    return best


def _iso_key(table):
    return _iso_key_cached(tuple(tuple(row) for row in table))


def make_cyclic(n, name=None):
    """Z/n as a table group; element 1 generates for n >= 2."""
    if n < 1:
        raise GroupError("invalid-order: n must be >= 1")
    table = [[(a + b) % n for b in range(n)] for a in range(n)]
    return FiniteGroup(table, name or ("C%d" % n))


def make_trivial():
    return make_cyclic(1, "1")


def from_permutations(perms, name="P"):
    """Group generated by permutations (as tuples); identity normalized to 0.

    The caller supplies generators of a permutation group on range(k).
    """
    k = len(perms[0])
    ident = tuple(range(k))
    elems = {ident}
    frontier = [ident]
    while frontier:
        new = []
        for g in frontier:
            for p in perms:
                h = tuple(g[p[i]] for i in range(k))
                if h not in elems:
                    elems.add(h)
                    new.append(h)
        frontier = new
    order = sorted(elems)
    order.remove(ident)
    order = [ident] + order
    index = {e: i for i, e in enumerate(order)}
    table = [
        [index[tuple(a[b[i]] for i in range(k))] for b in order]
        for a in order
    ]
    return FiniteGroup(table, name)


class Subgroup:
    """A subgroup as a sorted, deduplicated tuple of element indices."""

    __slots__ = ("ambient", "elements")

    def __init__(self, ambient, elements):
        self.ambient = ambient
        self.elements = tuple(sorted(set(elements)))
        if 0 not in self.elements:
            raise GroupError("subgroup must contain the identity")
        es = set(self.elements)
        for a in self.elements:
            if ambient.inv(a) not in es:
                raise GroupError("subgroup not closed under inverse")
            for b in self.elements:
                if ambient.mul(a, b) not in es:
                    raise GroupError("subgroup not closed under multiplication")

    @property
    def order(self):
        return len(self.elements)

    def contains(self, g):
        return g in set(self.elements)

    def __eq__(self, other):
        return (
            isinstance(other, Subgroup)
            and self.ambient is other.ambient
            and self.elements == other.elements
        )

    def __hash__(self):
        return hash((id(self.ambient), self.elements))

    def __repr__(self):
        return "Subgroup(%r)" % (self.elements,)

    def as_group(self, name=None):
        """The subgroup as an abstract table group plus the element list.

        Returns (group, elems) with elems[i] the ambient element of index i;
        the identity is elems[0] = 0.
        """
        elems = list(self.elements)
        index = {e: i for i, e in enumerate(elems)}
        table = [
            [index[self.ambient.mul(a, b)] for b in elems]
            for a in elems
        ]
        return FiniteGroup(table, name or "H"), elems


def trivial_subgroup(G):
    return Subgroup(G, (0,))


def full_subgroup(G):
    return Subgroup(G, range(G.order))


def generated_subgroup(G, gens):
    elems = {0}
    frontier = [0]
    gens = list(gens)
    while frontier:
        new = []
        for a in frontier:
            for g in gens:
                for h in (G.mul(a, g), G.mul(a, G.inv(g))):
                    if h not in elems:
                        elems.add(h)
                        new.append(h)
        frontier = new
    return Subgroup(G, elems)


def all_subgroups(G):
    """All subgroups of G, by closing generator sets (order <= 24 scale)."""
    found = {trivial_subgroup(G).elements}
    frontier = [trivial_subgroup(G)]
    while frontier:
        new = []
        for H in frontier:
            for g in G.elements():
                if g in set(H.elements):
                    continue
                K = generated_subgroup(G, H.elements + (g,))
                if K.elements not in found:
                    found.add(K.elements)
                    new.append(K)
        frontier = new
    return [Subgroup(G, els) for els in sorted(found, key=lambda t: (len(t), t))]


def left_cosets(H):
    """Left cosets of H in its ambient group.

    Each coset sorted; the list sorted by minimal representative, so the
    identity coset (H itself) comes first.
    """
    G = H.ambient
    seen = set()
    cosets = []
    for g in G.elements():
        if g in seen:
            continue
        coset = tuple(sorted(G.mul(g, h) for h in H.elements))
        seen.update(coset)
        cosets.append(coset)
    cosets.sort(key=lambda c: c[0])
    return cosets


def conjugate_subgroup(g, H):
    G = H.ambient
    return Subgroup(G, (G.conj(g, h) for h in H.elements))


class Monomorphism:
    """An injective homomorphism between table groups, as an image list."""

    __slots__ = ("source", "target", "image_of")

    def __init__(self, source, target, image_of):
        self.source = source
        self.target = target
        self.image_of = tuple(image_of)
        if len(self.image_of) != source.order:
            raise GroupError("bad-monomorphism: wrong image length")
        if len(set(self.image_of)) != source.order:
            raise GroupError("bad-monomorphism: not injective")
        if self.image_of[0] != 0:
            raise GroupError("bad-monomorphism: identity must map to identity")
        for a in source.elements():
            for b in source.elements():
                if self.image_of[source.mul(a, b)] != target.mul(
                    self.image_of[a], self.image_of[b]
                ):
                    raise GroupError("bad-monomorphism: not multiplicative")

    def __call__(self, a):
        return self.image_of[a]

    def image(self):
        return Subgroup(self.target, self.image_of)

    def is_surjective(self):
        return self.source.order == self.target.order

    def inverse(self):
        """Inverse of a surjective monomorphism (an isomorphism)."""
        if not self.is_surjective():
            raise GroupError("not surjective, no inverse")
        pre = [0] * self.target.order
        for a, b in enumerate(self.image_of):
            pre[b] = a
        return Monomorphism(self.target, self.source, pre)

    def then(self, other):
        """Composition: first self, then other."""
        if other.source is not self.target:
            raise GroupError("composition mismatch")
        return Monomorphism(
            self.source, other.target, (other.image_of[x] for x in self.image_of)
        )

    def conjugated(self, g):
        """ad(g) o self : a |-> g self(a) g^-1 in the target."""
        T = self.target
        return Monomorphism(self.source, T, (T.conj(g, x) for x in self.image_of))

    def __eq__(self, other):
        return (
            isinstance(other, Monomorphism)
            and self.source is other.source
            and self.target is other.target
            and self.image_of == other.image_of
        )

    def __hash__(self):
        return hash((id(self.source), id(self.target), self.image_of))

    def __repr__(self):
        return "Monomorphism(%r)" % (self.image_of,)


def identity_iso(G):
    return Monomorphism(G, G, range(G.order))


def trivial_into(G, T=None):
    """The inclusion of the trivial group into G."""
    return Monomorphism(T or make_trivial(), G, (0,))


def all_isomorphisms(G, H):
    """All isomorphisms G -> H (brute force with generator pruning)."""
    if G.order != H.order:
        return []
    gens = []
    K = {0}
    for g in G.elements():
        if g not in K:
            gens.append(g)
            K = set(generated_subgroup(G, gens).elements)
            if len(K) == G.order:
                break
    if not gens:
        return [Monomorphism(G, H, (0,))] if H.order == 1 else []

    isos = []

    def words(targets):
        """Close the partial generator images into a full image map, or None."""
        img = {0: 0}
        frontier = [0]
        while frontier:
            new = []
            for a in frontier:
                for g, t in zip(gens, targets):
                    b = G.mul(a, g)
                    ib = H.mul(img[a], t)
                    if b in img:
                        if img[b] != ib:
                            return None
                    else:
                        img[b] = ib
                        new.append(b)
            frontier = new
        if len(img) != G.order or len(set(img.values())) != G.order:
            return None
        image_of = [img[a] for a in range(G.order)]
        for a in range(G.order):
            for b in range(G.order):
                if image_of[G.mul(a, b)] != H.mul(image_of[a], image_of[b]):
                    return None
        return tuple(image_of)

    orders = {g: G.element_order(g) for g in gens}
    candidates = {
        g: [h for h in H.elements() if H.element_order(h) == orders[g]] for g in gens
    }
    for targets in itertools.product(*(candidates[g] for g in gens)):
        image_of = words(targets)
        if image_of is not None:
            isos.append(Monomorphism(G, H, image_of))
    # Deduplicate (different generator images can give the same map).
    seen = set()
    out = []
    for f in isos:
        if f.image_of not in seen:
            seen.add(f.image_of)
            out.append(f)
    return out


def are_isomorphic(G, H):
    return G.order == H.order and G.iso_key() == H.iso_key()
