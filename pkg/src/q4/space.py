"""The ambient space of words over the 4-letter alphabet {0,1,2,3}.

A point of the space is a length-n tuple of symbols ("vertex").  Subsets are
held as bit vectors: vertex (x1,...,xn) sits at bit index

    index = x1*4^(n-1) + x2*4^(n-2) + ... + xn

i.e. the first coordinate is the most significant base-4 digit.  Every module
in this package relies on that single indexing convention, including the text
serialisation formats.

Coordinate/direction arguments to the public operations are 1-based, matching
the usual mathematical convention k in 1..n.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import permutations, product
from typing import Iterable, Iterator, Sequence

SYMBOLS = (0, 1, 2, 3)

#: largest supported dimension: the bit vector for n=12 is 4**12 bits = 2 MiB.
MAX_DIM = 12


class FormatError(ValueError):
    """Raised when a serialised object cannot be parsed."""


class InvariantViolation(RuntimeError):
    """A structural law that is supposed to always hold failed.

    This is reserved for situations that would falsify one of the verified
    counting/structure claims (never expected on valid inputs); the CLI maps
    it to a dedicated exit code so CI can distinguish it from usage errors.
    """


def _check_dim(n: int) -> None:
    if not 1 <= n <= MAX_DIM:
        raise ValueError(f"dimension must be in 1..{MAX_DIM}, got {n}")


def index_of(coords: Sequence[int]) -> int:
    """Bit index of a vertex (first coordinate most significant)."""
    i = 0
    for c in coords:
        if not 0 <= c <= 3:
            raise ValueError(f"symbol out of range: {c}")
        i = (i << 2) | c
    return i


def coords_of(index: int, n: int) -> tuple[int, ...]:
    """Inverse of :func:`index_of`."""
    return tuple((index >> (2 * (n - 1 - k))) & 3 for k in range(n))


class CellSet:
    """An immutable subset of the n-dimensional space as a 4**n-bit vector."""

    __slots__ = ("n", "bits")

    def __init__(self, n: int, bits: int = 0):
        _check_dim(n)
        size = 1 << (2 * n)
        if not 0 <= bits < (1 << size):
            raise ValueError("bit vector does not fit the space")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "bits", bits)

    def __setattr__(self, name, value):
        raise AttributeError("CellSet is immutable")

    # -- constructors ------------------------------------------------------

    @classmethod
    def empty(cls, n: int) -> "CellSet":
        return cls(n, 0)

    @classmethod
    def full(cls, n: int) -> "CellSet":
        return cls(n, (1 << (1 << (2 * n))) - 1)

    @classmethod
    def from_vertices(cls, n: int, vertices: Iterable[Sequence[int]]) -> "CellSet":
        bits = 0
        for v in vertices:
            if len(v) != n:
                raise ValueError(f"vertex {tuple(v)} has wrong length for n={n}")
            bits |= 1 << index_of(v)
        return cls(n, bits)

    @classmethod
    def from_indices(cls, n: int, indices: Iterable[int]) -> "CellSet":
        bits = 0
        for i in indices:
            bits |= 1 << i
        return cls(n, bits)

    # -- set algebra -------------------------------------------------------

    def _check_peer(self, other: "CellSet") -> None:
        if not isinstance(other, CellSet):
            raise TypeError("expected a CellSet")
        if other.n != self.n:
            raise ValueError("dimension mismatch")

    def __or__(self, other: "CellSet") -> "CellSet":
        self._check_peer(other)
        return CellSet(self.n, self.bits | other.bits)

    def __and__(self, other: "CellSet") -> "CellSet":
        self._check_peer(other)
        return CellSet(self.n, self.bits & other.bits)

    def __sub__(self, other: "CellSet") -> "CellSet":
        self._check_peer(other)
        return CellSet(self.n, self.bits & ~other.bits)

    def __xor__(self, other: "CellSet") -> "CellSet":
        self._check_peer(other)
        return CellSet(self.n, self.bits ^ other.bits)

    def __le__(self, other: "CellSet") -> bool:
        self._check_peer(other)
        return self.bits & ~other.bits == 0

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, CellSet) and self.n == other.n and self.bits == other.bits
        )

    def __hash__(self) -> int:
        return hash((self.n, self.bits))

    def __len__(self) -> int:
        return self.bits.bit_count()

    def __bool__(self) -> bool:
        return self.bits != 0

    def __contains__(self, vertex: Sequence[int]) -> bool:
        if len(vertex) != self.n:
            raise ValueError("vertex has wrong length")
        return (self.bits >> index_of(vertex)) & 1 == 1

    def indices(self) -> Iterator[int]:
        """Set bit indices in increasing order."""
        bits = self.bits
        while bits:
            low = bits & -bits
            yield low.bit_length() - 1
            bits ^= low

    def vertices(self) -> Iterator[tuple[int, ...]]:
        n = self.n
        for i in self.indices():
            yield coords_of(i, n)

    def __iter__(self) -> Iterator[tuple[int, ...]]:
        return self.vertices()

    def __repr__(self) -> str:
        if len(self) <= 8:
            vs = ",".join("".join(map(str, v)) for v in self.vertices())
            return f"CellSet(n={self.n}, {{{vs}}})"
        return f"CellSet(n={self.n}, |S|={len(self)})"

    # -- serialisation -----------------------------------------------------

    def to_text(self, hex_form: bool = False) -> str:
        """Serialise as a ``cs`` block; payload is in vertex-index order.

        Binary form: one character '0'/'1' per cell, cell index 0 first.
        Hex form: the same bit string packed 4 cells per hex digit (the
        first cell of each group is the most significant bit of the digit).
        """
        size = 1 << (2 * self.n)
        bitstring = "".join(
            "1" if (self.bits >> i) & 1 else "0" for i in range(size)
        )
        if hex_form:
            payload = f"{int(bitstring, 2):0{size // 4}x}"
            return f"cs n={self.n} hex\n{payload}\n"
        return f"cs n={self.n}\n{bitstring}\n"

    @classmethod
    def parse(cls, text: str) -> "CellSet":
        lines = [ln.strip() for ln in text.strip().splitlines()]
        if len(lines) != 2:
            raise FormatError("expected a header line and one payload line")
        header = lines[0].split()
        if len(header) not in (2, 3) or header[0] != "cs":
            raise FormatError(f"bad header: {lines[0]!r}")
        if not header[1].startswith("n="):
            raise FormatError(f"bad header: {lines[0]!r}")
        try:
            n = int(header[1][2:])
        except ValueError:
            raise FormatError(f"bad dimension in header: {lines[0]!r}") from None
        _check_dim(n)
        hex_form = len(header) == 3
        if hex_form and header[2] != "hex":
            raise FormatError(f"bad header: {lines[0]!r}")
        size = 1 << (2 * n)
        payload = lines[1]
        if hex_form:
            if len(payload) != size // 4:
                raise FormatError("hex payload has wrong length")
            try:
                value = int(payload, 16)
            except ValueError:
                raise FormatError("hex payload is not hexadecimal") from None
            bitstring = f"{value:0{size}b}"
        else:
            bitstring = payload
            if len(bitstring) != size:
                raise FormatError("payload has wrong length")
            if set(bitstring) - {"0", "1"}:
                raise FormatError("payload must consist of '0'/'1'")
        bits = 0
        for i, ch in enumerate(bitstring):
            if ch == "1":
                bits |= 1 << i
        return cls(n, bits)


# -- isotopies and coordinate permutations ---------------------------------

Isotopy = Sequence[Sequence[int]]  # n permutations of the symbol set


def _check_symbol_permutation(p: Sequence[int]) -> tuple[int, ...]:
    t = tuple(p)
    if sorted(t) != [0, 1, 2, 3]:
        raise ValueError(f"not a permutation of 0..3: {p}")
    return t


def _check_coordinate(n: int, k: int) -> None:
    if not 1 <= k <= n:
        raise ValueError(f"coordinate must be in 1..{n}, got {k}")


def edge(x: Sequence[int], k: int) -> CellSet:
    """The 4 vertices obtained by letting coordinate k of x run over 0..3."""
    n = len(x)
    _check_dim(n)
    _check_coordinate(n, k)
    x = tuple(x)
    return CellSet.from_vertices(
        n, (x[: k - 1] + (a,) + x[k:] for a in SYMBOLS)
    )


def layer(s: CellSet, k: int, y: int) -> CellSet:
    """Slice of ``s`` at coordinate k equal to y, re-indexed in dimension n-1."""
    n = s.n
    if n < 2:
        # the layer of a 1-dimensional set is 0-dimensional; unsupported
        raise ValueError("layer requires dimension >= 2")
    _check_coordinate(n, k)
    if y not in SYMBOLS:
        raise ValueError(f"symbol out of range: {y}")
    low = 1 << (2 * (n - k))  # weight of coordinate k in the index
    bits = s.bits
    out = 0
    for t in range(1 << (2 * (n - 1))):
        hi, lo = divmod(t, low)
        if (bits >> (hi * low * 4 + y * low + lo)) & 1:
            out |= 1 << t
    return CellSet(n - 1, out)


def cylinder(s: CellSet, k: int) -> CellSet:
    """Inverse of :func:`layer`: lift a set of dimension n-1 to dimension n.

    The result contains (x1,...,xn) iff dropping coordinate k gives a
    member of ``s`` -- i.e. each vertex of ``s`` becomes a full k-line.
    """
    n = s.n + 1
    _check_dim(n)
    _check_coordinate(n, k)
    low = 1 << (2 * (n - k))
    out = 0
    bits = s.bits
    for t in range(1 << (2 * (n - 1))):
        if (bits >> t) & 1:
            hi, lo = divmod(t, low)
            base = (hi << (2 * (n - k + 1))) + lo
            for y in SYMBOLS:
                out |= 1 << (base + (y << (2 * (n - k))))
    return CellSet(n, out)


def complement(s: CellSet) -> CellSet:
    size = 1 << (2 * s.n)
    return CellSet(s.n, ~s.bits & ((1 << size) - 1))


def apply_isotopy(s: CellSet, perms: Isotopy) -> CellSet:
    """Image of ``s`` under coordinatewise symbol permutations."""
    n = s.n
    if len(perms) != n:
        raise ValueError(f"isotopy must have {n} permutations, got {len(perms)}")
    ps = [_check_symbol_permutation(p) for p in perms]
    out = 0
    for v in s.vertices():
        out |= 1 << index_of(tuple(ps[j][v[j]] for j in range(n)))
    return CellSet(n, out)


def permute_coordinates(s: CellSet, tau: Sequence[int]) -> CellSet:
    """Relabel coordinates: the result T satisfies

        T contains (x1,...,xn)  iff  (x_tau(1),...,x_tau(n)) is in s,

    with ``tau`` given as the 1-based sequence (tau(1),...,tau(n)).
    """
    n = s.n
    t = tuple(tau)
    if sorted(t) != list(range(1, n + 1)):
        raise ValueError(f"not a permutation of 1..{n}: {tau}")
    out = 0
    for v in s.vertices():
        w = [0] * n
        for j in range(n):
            w[t[j] - 1] = v[j]
        out |= 1 << index_of(w)
    return CellSet(n, out)


#: equivalence search is exhaustive over n! * 24**n transformations
EQUIVALENCE_MAX_DIM = 3


def are_equivalent_sets(s1: CellSet, s2: CellSet) -> bool:
    """Whether some coordinate permutation plus isotopy maps s2 onto s1."""
    if s1.n != s2.n:
        raise ValueError("dimension mismatch")
    n = s1.n
    if n > EQUIVALENCE_MAX_DIM:
        raise ValueError(
            f"exhaustive equivalence search is capped at n <= {EQUIVALENCE_MAX_DIM}"
        )
    if len(s1) != len(s2):
        return False
    all_perms = list(permutations(SYMBOLS))
    for tau in permutations(range(1, n + 1)):
        base = permute_coordinates(s2, tau)
        verts = list(base.vertices())
        for iso in product(all_perms, repeat=n):
            bits = 0
            for v in verts:
                bits |= 1 << index_of(tuple(iso[j][v[j]] for j in range(n)))
            if bits == s1.bits:
                return True
    return False


# -- line tables -----------------------------------------------------------


@lru_cache(maxsize=None)
def line_masks(n: int) -> tuple[tuple[int, ...], ...]:
    """Per direction, the bit masks of all 4**(n-1) axis lines.

    Direction d (0-based, i.e. coordinate d+1) varies the base-4 digit of
    weight 4**(n-1-d).
    """
    _check_dim(n)
    out = []
    for d in range(n):
        stride = 1 << (2 * (n - 1 - d))
        masks = []
        for t in range(1 << (2 * (n - 1))):
            hi, lo = divmod(t, stride)
            base = hi * stride * 4 + lo
            m = 0
            for y in SYMBOLS:
                m |= 1 << (base + y * stride)
            masks.append(m)
        out.append(tuple(masks))
    return tuple(out)


@lru_cache(maxsize=None)
def coord_value_mask(n: int, k: int, y: int) -> int:
    """Bit mask of all cells whose k-th coordinate equals y."""
    _check_dim(n)
    _check_coordinate(n, k)
    low = 1 << (2 * (n - k))
    mask = 0
    for t in range(1 << (2 * (n - 1))):
        hi, lo = divmod(t, low)
        mask |= 1 << (hi * low * 4 + y * low + lo)
    return mask


@lru_cache(maxsize=None)
def cell_line_ids(n: int) -> tuple[tuple[int, ...], ...]:
    """For each cell index, the n global line ids the cell belongs to."""
    _check_dim(n)
    per_dir = 1 << (2 * (n - 1))
    out = []
    for i in range(1 << (2 * n)):
        ids = []
        for d in range(n):
            stride = 1 << (2 * (n - 1 - d))
            hi = i // (stride * 4)
            lo = i % stride
            ids.append(d * per_dir + hi * stride + lo)
        out.append(tuple(ids))
    return tuple(out)
