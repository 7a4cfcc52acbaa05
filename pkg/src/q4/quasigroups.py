"""Value tables of n-ary quasigroups of order 4 and their classifiers.

A quasigroup here is a function from n-tuples over {0,1,2,3} to {0,1,2,3}
that is uniquely invertible in every argument; its value table is a Latin
n-cube stored flat in vertex-index order (same big-endian convention as
cell sets, see :mod:`q4.space`).

The classifiers implemented on top:

* reduced      -- acts as the identity on every axis through the origin;
* linear       -- every two-symbol level-set union is a linear double-code;
* semilinear   -- some two-symbol level-set union is a linear double-code;
* decomposable -- a superposition h(g(arguments A), remaining arguments)
                  with 2 <= |A| <= n-1.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, permutations, product
from typing import Iterable, Sequence

from .space import CellSet, FormatError, InvariantViolation, SYMBOLS, coords_of
from .dcodes import linear_code_bits, mds_subcodes, split_parts, xor_factorize
from . import dcodes

#: sentinel for an unset cell of a partial value table
UNSET = 4

_PAIRS = tuple(combinations(SYMBOLS, 2))


def _arity_of(length: int) -> int:
    n = 0
    size = 1
    while size < length:
        size <<= 2
        n += 1
    if size != length or n == 0:
        raise ValueError(f"table length {length} is not a positive power of 4")
    return n


def _check_table(table: Sequence[int], allow_unset: bool = False) -> int:
    n = _arity_of(len(table))
    top = UNSET if allow_unset else 3
    for v in table:
        if not isinstance(v, int) or not 0 <= v <= top:
            raise ValueError(f"bad table entry: {v!r}")
    return n


def _lines(n: int):
    """Yield the cell-index quadruples of every axis line of the table."""
    for d in range(n):
        stride = 1 << (2 * (n - 1 - d))
        for hi in range(1 << (2 * d)):
            base_hi = hi * stride * 4
            for lo in range(stride):
                base = base_hi + lo
                yield (base, base + stride, base + 2 * stride, base + 3 * stride)


def is_quasigroup(table: Sequence[int]) -> bool:
    """Whether a flat value table is a Latin n-cube (all lines permutations)."""
    n = _check_table(table)
    for a, b, c, d in _lines(n):
        if (1 << table[a]) | (1 << table[b]) | (1 << table[c]) | (1 << table[d]) != 15:
            return False
    return True


class Quasigroup:
    """An n-ary quasigroup of order 4, held as a flat value table."""

    __slots__ = ("n", "table", "_planes")

    def __init__(self, n: int, table: Sequence[int]):
        table = tuple(table)
        if _check_table(table) != n:
            raise ValueError(f"table length {len(table)} does not match n={n}")
        if not is_quasigroup(table):
            raise ValueError("table is not uniquely invertible in every argument")
        self.n = n
        self.table = table
        self._planes = None

    @classmethod
    def _trusted(cls, n: int, table: tuple[int, ...]) -> "Quasigroup":
        """Construct without validation (for tables produced by the search)."""
        obj = object.__new__(cls)
        obj.n = n
        obj.table = table
        obj._planes = None
        return obj

    def __call__(self, *args: int) -> int:
        if len(args) != self.n:
            raise ValueError(f"expected {self.n} arguments")
        i = 0
        for a in args:
            i = (i << 2) | a
        return self.table[i]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Quasigroup)
            and self.n == other.n
            and self.table == other.table
        )

    def __hash__(self) -> int:
        return hash((self.n, self.table))

    def __repr__(self) -> str:
        body = "".join(map(str, self.table)) if self.n <= 2 else f"<{len(self.table)} cells>"
        return f"Quasigroup(n={self.n}, {body})"

    @property
    def planes(self) -> tuple[int, int, int, int]:
        """Bit masks of the four level sets (cells where the value equals a)."""
        if self._planes is None:
            p = [0, 0, 0, 0]
            for i, v in enumerate(self.table):
                p[v] |= 1 << i
            self._planes = tuple(p)
        return self._planes

    # -- serialisation ---------------------------------------------------

    def to_text(self) -> str:
        return f"q4 n={self.n}\n{''.join(map(str, self.table))}\n"

    @classmethod
    def parse(cls, text: str) -> "Quasigroup":
        lines = [ln.strip() for ln in text.strip().splitlines()]
        if len(lines) != 2:
            raise FormatError("expected a header line and one payload line")
        header = lines[0].split()
        if len(header) != 2 or header[0] != "q4" or not header[1].startswith("n="):
            raise FormatError(f"bad header: {lines[0]!r}")
        try:
            n = int(header[1][2:])
        except ValueError:
            raise FormatError(f"bad arity in header: {lines[0]!r}") from None
        payload = lines[1]
        if len(payload) != 1 << (2 * n):
            raise FormatError("payload has wrong length")
        if set(payload) - set("0123"):
            raise FormatError("payload must consist of symbols 0..3")
        try:
            return cls(n, tuple(int(ch) for ch in payload))
        except ValueError as exc:
            raise FormatError(str(exc)) from None


def is_reduced(f: Quasigroup) -> bool:
    """Identity on every axis through the origin: f(0,..,a,..,0) = a."""
    table = f.table
    for i in range(1, f.n + 1):
        w = 1 << (2 * (f.n - i))
        for a in SYMBOLS:
            if table[a * w] != a:
                return False
    return True


# -- the MDS-code correspondence ---------------------------------------------


def graph_code(f: Quasigroup) -> CellSet:
    """The graph {(arguments, value)} as a cell set in dimension n+1."""
    bits = 0
    for i, v in enumerate(f.table):
        bits |= 1 << ((i << 2) | v)
    return CellSet(f.n + 1, bits)


def from_mds_code(c: CellSet) -> Quasigroup:
    """Inverse of :func:`graph_code`; the input must be an MDS code."""
    if c.n < 2:
        raise ValueError("need dimension >= 2 to read off a value table")
    bits = c.bits
    table = []
    for i in range(1 << (2 * (c.n - 1))):
        nib = (bits >> (4 * i)) & 15
        if nib.bit_count() != 1:
            raise ValueError("not the graph of a value table")
        table.append(nib.bit_length() - 1)
    return Quasigroup(c.n - 1, tuple(table))


def level_sets(f: Quasigroup) -> tuple[CellSet, CellSet, CellSet, CellSet]:
    """The four pairwise disjoint MDS codes where f takes each value."""
    return tuple(CellSet(f.n, p) for p in f.planes)


def pair_set(f: Quasigroup, a: int, b: int) -> CellSet:
    """Union of two level sets; always a splittable double-MDS-code."""
    if a == b:
        raise ValueError("symbols must differ")
    p = f.planes
    return CellSet(f.n, p[a] | p[b])


def inversion(f: Quasigroup, i: int) -> Quasigroup:
    """The quasigroup solving for argument i: result(x) = b iff
    substituting b at position i of x makes f produce the old x_i."""
    n = f.n
    if not 1 <= i <= n:
        raise ValueError(f"argument position must be in 1..{n}")
    stride = 1 << (2 * (n - i))
    table = list(f.table)
    out = [0] * len(table)
    for hi in range(1 << (2 * (i - 1))):
        for lo in range(stride):
            base = hi * stride * 4 + lo
            inv = [0, 0, 0, 0]
            for b in SYMBOLS:
                inv[table[base + b * stride]] = b
            for a in SYMBOLS:
                out[base + a * stride] = inv[a]
    return Quasigroup._trusted(n, tuple(out))


# -- reduction to canonical form ----------------------------------------------


def _perm_inverse(p: Sequence[int]) -> tuple[int, ...]:
    out = [0] * len(p)
    for i, v in enumerate(p):
        out[v] = i
    return tuple(out)


@dataclass(frozen=True)
class QEquivalence:
    """An equivalence transform: argument permutation plus n+1 symbol
    permutations (one for the value, one per argument).

    Applied to g it produces f with
        f(x_1,...,x_n) = taus[0]( g(taus[1] x_{sigma(1)}, ..., taus[n] x_{sigma(n)}) )
    where ``sigma`` is stored as the 1-based tuple (sigma(1),...,sigma(n)).
    """

    sigma: tuple[int, ...]
    taus: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        n = len(self.sigma)
        if sorted(self.sigma) != list(range(1, n + 1)):
            raise ValueError("sigma is not a permutation of 1..n")
        if len(self.taus) != n + 1:
            raise ValueError("need n+1 symbol permutations")
        for t in self.taus:
            if sorted(t) != [0, 1, 2, 3]:
                raise ValueError(f"not a symbol permutation: {t}")

    @classmethod
    def identity(cls, n: int) -> "QEquivalence":
        return cls(tuple(range(1, n + 1)), tuple((0, 1, 2, 3) for _ in range(n + 1)))

    def apply(self, g: Quasigroup) -> Quasigroup:
        n = g.n
        if len(self.sigma) != n:
            raise ValueError("arity mismatch")
        t0 = self.taus[0]
        table = g.table
        out = []
        for i in range(1 << (2 * n)):
            x = coords_of(i, n)
            j = 0
            for pos in range(n):
                j = (j << 2) | self.taus[pos + 1][x[self.sigma[pos] - 1]]
            out.append(t0[table[j]])
        return Quasigroup._trusted(n, tuple(out))


@dataclass(frozen=True)
class Reduction:
    equivalence: QEquivalence
    reduced: Quasigroup


def reduce(f: Quasigroup) -> Reduction:
    """Unique factorisation through a reduced quasigroup.

    The value permutation is the transposition (0, f(0,..,0)); each argument
    permutation is read off the corresponding axis and fixes 0.  Applying
    the returned equivalence to the reduced table reproduces f exactly.
    """
    n = f.n
    table = f.table
    c = table[0]
    tau0 = tuple(_swap01(c))
    taus = [tau0]
    for i in range(1, n + 1):
        w = 1 << (2 * (n - i))
        t = tuple(tau0[table[b * w]] for b in SYMBOLS)  # tau0 is an involution
        taus.append(t)
    tinvs = [_perm_inverse(t) for t in taus]
    out = []
    for i in range(1 << (2 * n)):
        x = coords_of(i, n)
        j = 0
        for pos in range(n):
            j = (j << 2) | tinvs[pos + 1][x[pos]]
        out.append(tinvs[0][table[j]])
    g = Quasigroup._trusted(n, tuple(out))
    if not is_reduced(g):
        raise InvariantViolation("reduction did not produce a reduced table")
    return Reduction(QEquivalence(tuple(range(1, n + 1)), tuple(taus)), g)


def _swap01(c: int) -> tuple[int, ...]:
    """The transposition exchanging 0 and c (identity when c = 0)."""
    p = [0, 1, 2, 3]
    p[0], p[c] = p[c], p[0]
    return tuple(p)


# -- linearity classifiers ----------------------------------------------------


@lru_cache(maxsize=None)
def linear_quasigroup(n: int) -> Quasigroup:
    """The unique reduced linear quasigroup: bitwise XOR of the arguments
    (the elementary abelian group of order 4)."""
    table = []
    for i in range(1 << (2 * n)):
        acc = 0
        for x in coords_of(i, n):
            acc ^= x
        table.append(acc)
    return Quasigroup(n, tuple(table))


def is_semilinear(f: Quasigroup) -> tuple[int, int] | None:
    """Smallest symbol pair whose level-set union is a linear double-code."""
    lin = linear_code_bits(f.n)
    p = f.planes
    for a, b in _PAIRS:
        if p[a] | p[b] in lin:
            return (a, b)
    return None


def semilinear_via_graph(f: Quasigroup) -> bool:
    """Independent route: the graph avoids some linear double-code in
    dimension n+1 (the XOR relation between one value pair and one symbol
    pair per argument holds identically on the graph)."""
    g = graph_code(f).bits
    return any(g & t == 0 for t in linear_code_bits(f.n + 1))


def is_linear(f: Quasigroup) -> bool:
    """All six level-set pair unions are linear.

    Computed twice -- from the pair sets and by comparing the reduced form
    with the XOR table -- and the two routes must agree.
    """
    lin = linear_code_bits(f.n)
    p = f.planes
    by_pairs = all(p[a] | p[b] in lin for a, b in _PAIRS)
    by_reduction = reduce(f).reduced.table == linear_quasigroup(f.n).table
    if by_pairs != by_reduction:
        raise InvariantViolation("linearity classifiers disagree")
    return by_pairs


# -- decomposability ----------------------------------------------------------


@dataclass(frozen=True)
class Decomposition:
    """Witness that f(x) = outer(inner(x restricted to inner_coords), rest).

    ``inner_coords`` is the 1-based, ascending tuple of argument positions
    fed to the inner quasigroup; the outer quasigroup takes the inner value
    followed by the remaining arguments in ascending position order.
    """

    inner_coords: tuple[int, ...]
    inner: Quasigroup
    outer: Quasigroup

    def recompose(self) -> Quasigroup:
        m = len(self.inner_coords)
        n = m + self.outer.n - 1
        amap, bmap = _subset_index_maps(n, self.inner_coords)
        shift = 2 * (n - m)
        it = self.inner.table
        ot = self.outer.table
        table = tuple(
            ot[(it[amap[i]] << shift) | bmap[i]] for i in range(1 << (2 * n))
        )
        return Quasigroup._trusted(n, table)


@lru_cache(maxsize=None)
def _subset_index_maps(n: int, coords: tuple[int, ...]):
    """Per cell: the sub-index over ``coords`` and over the complement."""
    rest = tuple(c for c in range(1, n + 1) if c not in coords)
    amap = []
    bmap = []
    for i in range(1 << (2 * n)):
        a = 0
        for c in coords:
            a = (a << 2) | ((i >> (2 * (n - c))) & 3)
        b = 0
        for c in rest:
            b = (b << 2) | ((i >> (2 * (n - c))) & 3)
        amap.append(a)
        bmap.append(b)
    return tuple(amap), tuple(bmap)


def _try_decompose(f: Quasigroup, coords: tuple[int, ...]) -> Decomposition | None:
    """Test decomposability against one argument subset.

    Builds the three restrictions obtained by pinning the complementary
    arguments (resp. the non-distinguished inner arguments) to 0 and checks
    the resulting superposition identity cell by cell; the identity holds
    iff f decomposes over ``coords``.
    """
    n = f.n
    m = len(coords)
    table = f.table
    amap, bmap = _subset_index_maps(n, coords)
    x_w = 1 << (2 * (n - coords[0]))

    delta = [table[x * x_w] for x in SYMBOLS]
    dinv = [0, 0, 0, 0]
    for b, v in enumerate(delta):
        dinv[v] = b

    aweights = [2 * (n - c) for c in coords]
    g0 = [0] * (1 << (2 * m))
    for sub in range(1 << (2 * m)):
        cell = 0
        for pos, w in enumerate(aweights):
            cell |= ((sub >> (2 * (m - 1 - pos))) & 3) << w
        g0[sub] = table[cell]

    rest = [c for c in range(1, n + 1) if c not in coords]
    nb = n - m
    bweights = [2 * (n - c) for c in rest]
    h0 = [0] * (1 << (2 * (nb + 1)))
    for x in SYMBOLS:
        xpart = x * x_w
        for bsub in range(1 << (2 * nb)):
            cell = xpart
            for pos, w in enumerate(bweights):
                cell |= ((bsub >> (2 * (nb - 1 - pos))) & 3) << w
            h0[(x << (2 * nb)) + bsub] = table[cell]

    shift = 2 * nb
    for i, v in enumerate(table):
        if h0[(dinv[g0[amap[i]]] << shift) | bmap[i]] != v:
            return None

    inner = Quasigroup(m, tuple(dinv[v] for v in g0))
    outer = Quasigroup(nb + 1, tuple(h0))
    dec = Decomposition(coords, inner, outer)
    if dec.recompose().table != table:
        raise InvariantViolation("decomposition witness failed to recompose")
    return dec


def find_decomposition(f: Quasigroup) -> Decomposition | None:
    """Definitional decomposability check: scan every argument subset of
    size 2..n-1 (by size, then lexicographically) and return the first
    witness."""
    n = f.n
    if n < 3:
        raise ValueError("decomposability needs arity >= 3")
    for m in range(2, n):
        for coords in combinations(range(1, n + 1), m):
            dec = _try_decompose(f, coords)
            if dec is not None:
                return dec
    return None


def find_decomposition_structural(f: Quasigroup) -> Decomposition | None:
    """Factorisation-guided decomposability check.

    XOR-factorises every two-symbol level-set union; unions of the
    resulting coordinate groups (of total size 2..n-1) are the only
    subsets a decomposition can live on, and each candidate is validated
    by the same superposition identity as the definitional route.
    """
    n = f.n
    if n < 3:
        raise ValueError("decomposability needs arity >= 3")
    p = f.planes
    candidates: set[tuple[int, ...]] = set()
    for a, b in _PAIRS:
        fac = xor_factorize(CellSet(n, p[a] | p[b]))
        if fac.k < 2:
            continue
        groups = fac.groups
        for mask in range(1, 1 << fac.k):
            union: list[int] = []
            for j in range(fac.k):
                if (mask >> j) & 1:
                    union.extend(groups[j])
            if 2 <= len(union) <= n - 1:
                candidates.add(tuple(sorted(union)))
    for coords in sorted(candidates, key=lambda c: (len(c), c)):
        dec = _try_decompose(f, coords)
        if dec is not None:
            return dec
    return None


# -- partial tables and extensions ---------------------------------------------


class PartialQuasigroup:
    """A value table with unset cells (sentinel 4), uniquely invertible in
    the at-most-one-solution sense on its domain."""

    __slots__ = ("n", "table")

    def __init__(self, n: int, table: Sequence[int]):
        table = tuple(table)
        if _check_table(table, allow_unset=True) != n:
            raise ValueError(f"table length {len(table)} does not match n={n}")
        for cells in _lines(n):
            seen = 0
            for c in cells:
                v = table[c]
                if v == UNSET:
                    continue
                if seen & (1 << v):
                    raise ValueError("a line repeats a symbol")
                seen |= 1 << v
        self.n = n
        self.table = table

    def domain(self) -> CellSet:
        bits = 0
        for i, v in enumerate(self.table):
            if v != UNSET:
                bits |= 1 << i
        return CellSet(self.n, bits)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PartialQuasigroup)
            and self.n == other.n
            and self.table == other.table
        )

    def __hash__(self) -> int:
        return hash((self.n, self.table))


def two_layer_restriction(f: Quasigroup, alpha: int, beta: int) -> PartialQuasigroup:
    """Restrict f to the cells whose last argument is alpha or beta."""
    if alpha == beta:
        raise ValueError("symbols must differ")
    table = [
        v if (i & 3) in (alpha, beta) else UNSET for i, v in enumerate(f.table)
    ]
    return PartialQuasigroup(f.n, table)


def pin_argument(f: Quasigroup, i: int, a: int) -> Quasigroup:
    """The (n-1)-ary quasigroup obtained by pinning argument i to a."""
    n = f.n
    if n < 2:
        raise ValueError("need arity >= 2")
    if not 1 <= i <= n:
        raise ValueError(f"argument position must be in 1..{n}")
    stride = 1 << (2 * (n - i))
    table = []
    for hi in range(1 << (2 * (i - 1))):
        base = hi * stride * 4 + a * stride
        table.extend(f.table[base + lo] for lo in range(stride))
    return Quasigroup._trusted(n - 1, tuple(table))


def last_layer(f: Quasigroup, alpha: int) -> Quasigroup:
    """The (n-1)-ary quasigroup obtained by pinning the last argument."""
    return pin_argument(f, f.n, alpha)


def count_extensions(g: PartialQuasigroup) -> tuple[int, list[Quasigroup]]:
    """All total extensions of a two-full-layer partial table.

    The domain must consist of two complete layers in the last direction.
    Every extension is determined by the layer carrying the smaller missing
    symbol, which ranges over the MDS codes inside the complement of the
    two known layer graphs; the count is 2**gamma for a splittable
    complement and 0 otherwise.
    """
    n = g.n
    if n < 2:
        raise ValueError("need arity >= 2")
    per_layer = 1 << (2 * (n - 1))
    set_layers = []
    for s in SYMBOLS:
        states = {g.table[(i << 2) | s] != UNSET for i in range(per_layer)}
        if states == {True}:
            set_layers.append(s)
        elif states != {False}:
            raise ValueError("domain is not a union of full last-direction layers")
    if len(set_layers) != 2:
        raise ValueError("domain must consist of exactly two full layers")
    alpha, beta = set_layers
    lay_a = Quasigroup(n - 1, tuple(g.table[(i << 2) | alpha] for i in range(per_layer)))
    lay_b = Quasigroup(n - 1, tuple(g.table[(i << 2) | beta] for i in range(per_layer)))
    s = CellSet(n, ~(graph_code(lay_a).bits | graph_code(lay_b).bits)
                & ((1 << (1 << (2 * n))) - 1))
    if not dcodes.is_double_mds_code(s):
        raise InvariantViolation("complement of two disjoint layer graphs is "
                                 "not a double-MDS-code")
    if split_parts(s) is None:
        return 0, []
    c, d = sorted(set(SYMBOLS) - {alpha, beta})
    extensions = []
    for code in mds_subcodes(s):
        f_c = from_mds_code(code)
        f_d = from_mds_code(CellSet(n, s.bits & ~code.bits))
        table = list(g.table)
        for i in range(per_layer):
            table[(i << 2) | c] = f_c.table[i]
            table[(i << 2) | d] = f_d.table[i]
        extensions.append(Quasigroup(n, tuple(table)))
    extensions.sort(key=lambda q: q.table)
    return len(extensions), extensions


def compatible_count(g: Quasigroup, members: Iterable[Quasigroup]) -> int:
    """Count members that disagree with g on every cell.

    When ``members`` is closed under equivalence the count cannot exceed
    3**(n+1) times the number of reduced members; exceeding it raises
    InvariantViolation.
    """
    gp = g.planes
    count = 0
    reduced = 0
    for m in members:
        if m.n != g.n:
            raise ValueError("arity mismatch")
        mp = m.planes
        if all(gp[a] & mp[a] == 0 for a in SYMBOLS):
            count += 1
        if is_reduced(m):
            reduced += 1
    bound = 3 ** (g.n + 1) * reduced
    if count > bound:
        raise InvariantViolation(
            f"compatible count {count} exceeds the bound {bound}"
        )
    return count


# -- equivalence of quasigroups -------------------------------------------------

EQUIVALENCE_MAX_ARITY = 3


def are_equivalent_quasigroups(f: Quasigroup, g: Quasigroup) -> bool:
    """Exhaustive equivalence test (argument permutation + n+1 isotopy).

    The search factors the n! * 24**(n+1) transform space: for a fixed
    argument permutation, value permutation and images of 0 under the
    argument-wise permutations, those permutations are forced by the axis
    values, so only n! * 24 * 4**n candidates are ever materialised.
    """
    if f.n != g.n:
        return False
    n = f.n
    if n > EQUIVALENCE_MAX_ARITY:
        raise ValueError(
            f"exhaustive equivalence search is capped at n <= {EQUIVALENCE_MAX_ARITY}"
        )
    ft = f.table
    gt = g.table
    all_perms = list(permutations(SYMBOLS))
    for sigma in permutations(range(1, n + 1)):
        for tau0 in all_perms:
            t0inv = _perm_inverse(tau0)
            for cbar in product(SYMBOLS, repeat=n):
                taus = [tau0]
                feasible = True
                base_full = 0
                for pos in range(n):
                    base_full = (base_full << 2) | cbar[pos]
                for i in range(1, n + 1):
                    w_g = 1 << (2 * (n - i))
                    base = base_full - cbar[i - 1] * w_g
                    inv = [0, 0, 0, 0]
                    for u in SYMBOLS:
                        inv[gt[base + u * w_g]] = u
                    w_f = 1 << (2 * (n - sigma[i - 1]))
                    t = tuple(inv[t0inv[ft[b * w_f]]] for b in SYMBOLS)
                    if t[0] != cbar[i - 1]:
                        feasible = False
                        break
                    taus.append(t)
                if not feasible:
                    continue
                if QEquivalence(sigma, tuple(taus)).apply(g).table == ft:
                    return True
    return False
