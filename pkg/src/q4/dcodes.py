"""MDS codes, double-codes and double-MDS-codes over the 4-letter alphabet.

Terminology (all subsets of the n-dimensional space):

* MDS code: meets every axis line in exactly one point.
* double-code: every axis line through one of its own points carries
  exactly two of its points.
* double-MDS-code: every axis line of the whole space carries exactly two
  points; equivalently a double-code of cardinality 4**n / 2.
* prime: a nonempty double-code, contained in some double-MDS-code, whose
  adjacency graph (join points differing in one coordinate) is connected.
* splittable: a double-MDS-code that is the disjoint union of two MDS codes;
  equivalent to its adjacency graph being bipartite.
* linear: the characteristic function is an XOR of per-coordinate
  two-element-subset indicators.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, product

from .space import (
    CellSet,
    InvariantViolation,
    SYMBOLS,
    cell_line_ids,
    complement,
    coord_value_mask,
    cylinder,
    layer,
    line_masks,
)


def _flat_line_masks(n: int) -> tuple[int, ...]:
    return _flat_line_masks_cached(n)


@lru_cache(maxsize=None)
def _flat_line_masks_cached(n: int) -> tuple[int, ...]:
    return tuple(m for dirmasks in line_masks(n) for m in dirmasks)


@lru_cache(maxsize=None)
def _line_cells(n: int) -> tuple[tuple[int, ...], ...]:
    """Cell indices of every line, in the global line-id order."""
    out = []
    for mask in _flat_line_masks_cached(n):
        cells = []
        while mask:
            low = mask & -mask
            cells.append(low.bit_length() - 1)
            mask ^= low
        out.append(tuple(cells))
    return tuple(out)


# -- predicates --------------------------------------------------------------


def is_mds_code(s: CellSet) -> bool:
    """Every axis line meets the set exactly once (forces |S| = 4**(n-1))."""
    bits = s.bits
    return all((bits & m).bit_count() == 1 for m in _flat_line_masks(s.n))


def is_double_code(s: CellSet) -> bool:
    """Every axis line through a point of the set carries exactly 2 points.

    Equivalently: no axis line carries 1, 3 or 4 points.  The empty set
    passes vacuously; callers that need a nonempty double-code must check.
    """
    bits = s.bits
    return all((bits & m).bit_count() in (0, 2) for m in _flat_line_masks(s.n))


def is_double_mds_code(s: CellSet) -> bool:
    """Every axis line of the whole space carries exactly 2 points."""
    bits = s.bits
    return all((bits & m).bit_count() == 2 for m in _flat_line_masks(s.n))


# -- adjacency structure ------------------------------------------------------


def adjacency_graph(s: CellSet) -> dict[int, tuple[int, ...]]:
    """Adjacency lists over the set, keyed and valued by vertex indices.

    Two points are adjacent iff they differ in exactly one coordinate.
    """
    lines = cell_line_ids(s.n)
    members: dict[int, list[int]] = {i: [] for i in s.indices()}
    by_line: dict[int, list[int]] = {}
    for i in members:
        for ln in lines[i]:
            by_line.setdefault(ln, []).append(i)
    for cells in by_line.values():
        for a, b in combinations(cells, 2):
            members[a].append(b)
            members[b].append(a)
    return {i: tuple(sorted(nb)) for i, nb in members.items()}


def prime_components(s: CellSet) -> list[CellSet]:
    """Connected components of the adjacency graph, as cell sets.

    Requires a nonempty double-code.  Components are ordered by their
    smallest vertex index.
    """
    if not s:
        raise ValueError("empty set has no components")
    if not is_double_code(s):
        raise ValueError("not a double-code")
    graph = adjacency_graph(s)
    seen: set[int] = set()
    comps = []
    for start in sorted(graph):
        if start in seen:
            continue
        stack = [start]
        comp = {start}
        seen.add(start)
        while stack:
            v = stack.pop()
            for w in graph[v]:
                if w not in comp:
                    comp.add(w)
                    seen.add(w)
                    stack.append(w)
        comps.append(CellSet.from_indices(s.n, comp))
    return comps


def _two_coloring(s: CellSet) -> list[tuple[int, int]] | None:
    """Per component, the canonical proper 2-coloring as (bits0, bits1).

    The smallest vertex of each component receives color 0.  Returns None
    if some component has an odd cycle.
    """
    graph = adjacency_graph(s)
    color: dict[int, int] = {}
    parts = []
    for start in sorted(graph):
        if start in color:
            continue
        color[start] = 0
        queue = [start]
        bits = [0, 0]
        bits[0] |= 1 << start
        while queue:
            v = queue.pop()
            for w in graph[v]:
                if w not in color:
                    color[w] = color[v] ^ 1
                    bits[color[w]] |= 1 << w
                    queue.append(w)
                elif color[w] == color[v]:
                    return None
        parts.append((bits[0], bits[1]))
    return parts


def split_parts(s: CellSet) -> tuple[CellSet, CellSet] | None:
    """Canonical disjoint MDS-code pair covering a double-MDS-code, if any.

    None means the adjacency graph is not bipartite (the set is
    unsplittable).  In the witness, the lexicographically smallest vertex
    of every component lands in the first part.
    """
    if not is_double_mds_code(s):
        raise ValueError("not a double-MDS-code")
    parts = _two_coloring(s)
    if parts is None:
        return None
    b0 = 0
    b1 = 0
    for p0, p1 in parts:
        b0 |= p0
        b1 |= p1
    c1, c2 = CellSet(s.n, b0), CellSet(s.n, b1)
    if not (is_mds_code(c1) and is_mds_code(c2)):
        raise InvariantViolation("proper 2-coloring of a double-MDS-code "
                                 "produced a non-MDS part")
    return c1, c2


def is_splittable(s: CellSet) -> bool:
    return split_parts(s) is not None


def enumerate_mds_splits(s: CellSet) -> list[tuple[CellSet, CellSet]]:
    """All ordered pairs of disjoint MDS codes covering a splittable set.

    There are 2**gamma of them, gamma = number of connected components:
    each component's two color classes can go to either side independently.
    """
    if not is_double_mds_code(s):
        raise ValueError("not a double-MDS-code")
    parts = _two_coloring(s)
    if parts is None:
        raise ValueError("unsplittable double-MDS-code has no MDS splits")
    gamma = len(parts)
    out = []
    for sel in range(1 << gamma):
        b0 = 0
        for j, (p0, p1) in enumerate(parts):
            b0 |= p1 if (sel >> j) & 1 else p0
        c1 = CellSet(s.n, b0)
        c2 = CellSet(s.n, s.bits & ~b0)
        out.append((c1, c2))
    return out


def mds_subcodes(s: CellSet) -> list[CellSet]:
    """The distinct MDS codes contained in a splittable double-MDS-code."""
    codes = {c1 for c1, _ in enumerate_mds_splits(s)}
    return sorted(codes, key=lambda c: c.bits)


def double_code_core(s: CellSet) -> CellSet:
    """Largest subset in which every point sees >= 2 points per axis line.

    When every line of ``s`` carries at most two points (e.g. ``s`` is a
    subset of a double-MDS-code) the result is exactly the largest
    double-code contained in ``s`` -- possibly empty.
    """
    masks = _flat_line_masks(s.n)
    lines = cell_line_ids(s.n)
    bits = s.bits
    while True:
        drop = 0
        for i in CellSet(s.n, bits).indices():
            for ln in lines[i]:
                if (bits & masks[ln]).bit_count() < 2:
                    drop |= 1 << i
                    break
        if not drop:
            return CellSet(s.n, bits)
        bits &= ~drop


# -- linearity ----------------------------------------------------------------


@dataclass(frozen=True)
class LinearForm:
    """XOR normal form of a linear double-code.

    ``chi0`` is the value at the all-zero vertex; ``chi[i]`` is the
    two-element symbol subset on which the i-th single-coordinate indicator
    equals 1.  Each subset contains 0 exactly when chi0 is 1 (both express
    the value at the all-zero vertex).
    """

    chi0: int
    chi: tuple[frozenset[int], ...]

    def __post_init__(self):
        if self.chi0 not in (0, 1):
            raise ValueError("chi0 must be a bit")
        for sub in self.chi:
            if len(sub) != 2 or not sub <= set(SYMBOLS):
                raise ValueError("each coordinate indicator must be a "
                                 "2-element symbol subset")
            if (0 in sub) != bool(self.chi0):
                raise ValueError("indicator value at symbol 0 must equal chi0")

    @property
    def n(self) -> int:
        return len(self.chi)

    def evaluate(self, vertex) -> int:
        acc = self.chi0
        for sub, x in zip(self.chi, vertex):
            acc ^= (1 if x in sub else 0) ^ self.chi0
        return acc

    def to_cellset(self) -> CellSet:
        n = self.n
        bits = CellSet.full(n).bits if self.chi0 else 0
        for i, sub in enumerate(self.chi, start=1):
            for y in SYMBOLS:
                if ((1 if y in sub else 0) ^ self.chi0) == 1:
                    bits ^= coord_value_mask(n, i, y)
        return CellSet(n, bits)


def is_linear_double_code(s: CellSet) -> LinearForm | None:
    """Recognise a linear double-code by reconstructing its XOR form.

    The candidate form is read off the all-zero vertex and the n axes
    through it (a linear double-code is determined by those cells); the
    reconstruction is then replayed over the whole space and accepted only
    on an exact match.
    """
    n = s.n
    bits = s.bits
    chi0 = bits & 1
    chi = []
    for i in range(1, n + 1):
        w = 1 << (2 * (n - i))  # index weight of coordinate i
        sub = frozenset(y for y in SYMBOLS if (bits >> (y * w)) & 1)
        if len(sub) != 2:
            return None
        chi.append(sub)
    form = LinearForm(chi0, tuple(chi))
    if form.to_cellset().bits != bits:
        return None
    return form


@lru_cache(maxsize=None)
def all_linear_double_codes(n: int) -> tuple[LinearForm, ...]:
    """All 2*3**n linear forms in dimension n, in a fixed order."""
    forms = []
    for chi0 in (0, 1):
        if chi0:
            choices = [frozenset({0, x}) for x in (1, 2, 3)]
        else:
            choices = [frozenset(p) for p in combinations((1, 2, 3), 2)]
        for combo in product(choices, repeat=n):
            forms.append(LinearForm(chi0, combo))
    return tuple(forms)


@lru_cache(maxsize=None)
def linear_code_bits(n: int) -> frozenset[int]:
    """Bit vectors of every linear double-code in dimension n."""
    return frozenset(f.to_cellset().bits for f in all_linear_double_codes(n))


# -- unique extension ---------------------------------------------------------


def extend_double_code(s0: CellSet) -> CellSet | None:
    """Complete a nonempty double-code to the double-MDS-code containing it.

    Constraint propagation over axis lines (each line must end with exactly
    two points), with backtracking where propagation stalls.  Returns None
    when no completion exists.  Finding two distinct completions would
    contradict the unique-extension law and raises InvariantViolation.
    """
    if not s0:
        raise ValueError("seed must be nonempty")
    if not is_double_code(s0):
        raise ValueError("seed is not a double-code")
    n = s0.n
    size = 1 << (2 * n)
    lines = cell_line_ids(n)
    cells_of = _line_cells(n)
    nlines = len(cells_of)

    UNKNOWN, IN, OUT = 0, 1, 2
    state = bytearray(size)
    in_cnt = [0] * nlines
    unk_cnt = [4] * nlines

    def assign(cell: int, value: int, trail: list[int]) -> bool:
        if state[cell] != UNKNOWN:
            return state[cell] == value
        state[cell] = value
        trail.append(cell)
        for ln in lines[cell]:
            unk_cnt[ln] -= 1
            if value == IN:
                in_cnt[ln] += 1
            if in_cnt[ln] > 2 or in_cnt[ln] + unk_cnt[ln] < 2:
                return False
        return True

    def propagate(trail: list[int]) -> bool:
        changed = True
        while changed:
            changed = False
            for ln in range(nlines):
                if unk_cnt[ln] == 0:
                    continue
                if in_cnt[ln] == 2:
                    fill, ok_w = OUT, True
                elif in_cnt[ln] + unk_cnt[ln] == 2:
                    fill, ok_w = IN, True
                else:
                    continue
                for c in cells_of[ln]:
                    if state[c] == UNKNOWN:
                        if not assign(c, fill, trail):
                            return False
                        changed = True
        return True

    def undo(trail: list[int], mark: int) -> None:
        while len(trail) > mark:
            cell = trail.pop()
            value = state[cell]
            state[cell] = UNKNOWN
            for ln in lines[cell]:
                unk_cnt[ln] += 1
                if value == IN:
                    in_cnt[ln] -= 1

    solutions: list[int] = []

    def search(start: int, trail: list[int]) -> None:
        if len(solutions) >= 2:
            return
        cell = start
        while cell < size and state[cell] != UNKNOWN:
            cell += 1
        if cell == size:
            bits = 0
            for i in range(size):
                if state[i] == IN:
                    bits |= 1 << i
            solutions.append(bits)
            return
        for value in (IN, OUT):
            mark = len(trail)
            if assign(cell, value, trail) and propagate(trail):
                search(cell + 1, trail)
            undo(trail, mark)
            if len(solutions) >= 2:
                return

    trail: list[int] = []
    ok = True
    for i in s0.indices():
        if not assign(i, IN, trail):
            ok = False
            break
    if ok and propagate(trail):
        search(0, trail)
    if not solutions:
        return None
    if len(solutions) > 1:
        raise InvariantViolation(
            "double-code seed admits two distinct double-MDS completions"
        )
    return CellSet(n, solutions[0])


def enumerate_double_mds_codes(n: int, limit: int | None = None):
    """Yield double-MDS-codes in dimension n in a fixed search order.

    Backtracking over cells in index order with the exactly-2-per-line
    propagation; exhaustive when ``limit`` is None.
    """
    size = 1 << (2 * n)
    lines = cell_line_ids(n)
    cells_of = _line_cells(n)
    nlines = len(cells_of)

    UNKNOWN, IN, OUT = 0, 1, 2
    state = bytearray(size)
    in_cnt = [0] * nlines
    unk_cnt = [4] * nlines
    emitted = 0

    def assign(cell, value, trail):
        if state[cell] != UNKNOWN:
            return state[cell] == value
        state[cell] = value
        trail.append(cell)
        for ln in lines[cell]:
            unk_cnt[ln] -= 1
            if value == IN:
                in_cnt[ln] += 1
            if in_cnt[ln] > 2 or in_cnt[ln] + unk_cnt[ln] < 2:
                return False
        return True

    def propagate(trail):
        changed = True
        while changed:
            changed = False
            for ln in range(nlines):
                if unk_cnt[ln] == 0:
                    continue
                if in_cnt[ln] == 2:
                    fill = OUT
                elif in_cnt[ln] + unk_cnt[ln] == 2:
                    fill = IN
                else:
                    continue
                for c in cells_of[ln]:
                    if state[c] == UNKNOWN:
                        if not assign(c, fill, trail):
                            return False
                        changed = True
        return True

    def undo(trail, mark):
        while len(trail) > mark:
            cell = trail.pop()
            value = state[cell]
            state[cell] = UNKNOWN
            for ln in lines[cell]:
                unk_cnt[ln] += 1
                if value == IN:
                    in_cnt[ln] -= 1

    def search(start, trail):
        nonlocal emitted
        if limit is not None and emitted >= limit:
            return
        cell = start
        while cell < size and state[cell] != UNKNOWN:
            cell += 1
        if cell == size:
            bits = 0
            for i in range(size):
                if state[i] == IN:
                    bits |= 1 << i
            emitted += 1
            yield CellSet(n, bits)
            return
        for value in (IN, OUT):
            mark = len(trail)
            if assign(cell, value, trail) and propagate(trail):
                yield from search(cell + 1, trail)
            undo(trail, mark)
            if limit is not None and emitted >= limit:
                return

    trail: list[int] = []
    if propagate(trail):
        yield from search(0, trail)


# -- anti-layers --------------------------------------------------------------


def find_linear_antilayer(s: CellSet, k: int, a: int) -> int:
    """Symbol b whose layer complements a linear layer of a splittable set.

    For a splittable double-MDS-code whose layer at (k, a) is linear, some
    layer in the same direction is the exact complement of that layer; the
    complement of the whole set must itself be splittable.  Violations of
    either fact raise InvariantViolation.
    """
    if not is_double_mds_code(s):
        raise ValueError("not a double-MDS-code")
    if not is_splittable(s):
        raise ValueError("set is not splittable")
    lay = layer(s, k, a)
    if is_linear_double_code(lay) is None:
        raise ValueError("layer is not a linear double-code")
    target = complement(lay)
    found = None
    for b in SYMBOLS:
        if b != a and layer(s, k, b) == target:
            found = b
            break
    if found is None:
        raise InvariantViolation("no complementary layer to a linear layer "
                                 "of a splittable double-MDS-code")
    if not is_splittable(complement(s)):
        raise InvariantViolation("complement of a splittable double-MDS-code "
                                 "with a linear layer is unsplittable")
    return found


# -- XOR factorisation --------------------------------------------------------


@dataclass(frozen=True)
class PrimeDecomposition:
    """Finest XOR factorisation of a double-MDS-code.

    The characteristic function equals ``constant`` XORed with the
    component indicators evaluated on disjoint coordinate groups; every
    component is a prime double-MDS-code in its own (smaller) dimension.
    Canonical form: no component contains its all-zero vertex, and
    ``constant`` equals the set's value at the all-zero vertex.
    """

    n: int
    groups: tuple[tuple[int, ...], ...]
    components: tuple[CellSet, ...]
    constant: int

    @property
    def k(self) -> int:
        return len(self.groups)

    def to_cellset(self) -> CellSet:
        n = self.n
        bits = CellSet.full(n).bits if self.constant else 0
        for group, comp in zip(self.groups, self.components):
            weights = [2 * (n - c) for c in group]
            cbits = comp.bits
            pattern = 0
            for i in range(1 << (2 * n)):
                sub = 0
                for w in weights:
                    sub = (sub << 2) | ((i >> w) & 3)
                if (cbits >> sub) & 1:
                    pattern |= 1 << i
            bits ^= pattern
        return CellSet(n, bits)


def _depends_on(d: CellSet, j: int) -> bool:
    base = layer(d, j, 0)
    return any(layer(d, j, y) != base for y in (1, 2, 3))


def xor_factorize(s: CellSet) -> PrimeDecomposition:
    """Split a double-MDS-code into its prime XOR factors.

    Coordinates i and j are linked when some single-coordinate substitution
    toggle in direction i still depends on coordinate j; groups are the
    transitive closure of linkage.  Each component is cut out by pinning
    the other coordinates to 0, then normalised so that it avoids its
    all-zero vertex (the two-fold complement ambiguity is absorbed into the
    constant bit).  The recomposition is re-checked bit-exactly.
    """
    if not is_double_mds_code(s):
        raise ValueError("not a double-MDS-code")
    n = s.n

    parent = list(range(n + 1))  # 1-based coordinates

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x, y):
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[max(rx, ry)] = min(rx, ry)

    if n > 1:
        for i in range(1, n + 1):
            toggles = [
                CellSet(n, s.bits ^ cylinder(layer(s, i, a), i).bits)
                for a in SYMBOLS
            ]
            for j in range(1, n + 1):
                if j == i or find(i) == find(j):
                    continue
                if any(_depends_on(d, j) for d in toggles):
                    union(i, j)

    grouped: dict[int, list[int]] = {}
    for c in range(1, n + 1):
        grouped.setdefault(find(c), []).append(c)
    groups = tuple(tuple(sorted(g)) for _, g in sorted(grouped.items()))

    chi0 = s.bits & 1
    comps = []
    for group in groups:
        m = len(group)
        weights = [2 * (n - c) for c in group]
        bits = 0
        for sub in range(1 << (2 * m)):
            full = 0
            for pos, w in enumerate(weights):
                digit = (sub >> (2 * (m - 1 - pos))) & 3
                full |= digit << w
            if (s.bits >> full) & 1:
                bits |= 1 << sub
        comp = CellSet(m, bits)
        if chi0:
            comp = complement(comp)
        comps.append(comp)

    for comp in comps:
        if not is_double_mds_code(comp):
            raise InvariantViolation("extracted XOR factor is not a "
                                     "double-MDS-code")
        if len(prime_components(comp)) != 1:
            raise InvariantViolation("extracted XOR factor is not prime")

    dec = PrimeDecomposition(n, groups, tuple(comps), chi0)
    if dec.to_cellset() != s:
        raise InvariantViolation("XOR factorisation failed to recompose")
    return dec
