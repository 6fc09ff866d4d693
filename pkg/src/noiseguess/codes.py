"""Binary linear block codes with bit-packed words.

Words are packed into Python ints / uint64 lanes with coordinate 1 in the
most significant bit, i.e. coordinate j of a length-n word sits at bit
``n - j``.  Hex serialisation is the packed integer zero-padded to
``ceil(n / 4)`` nibbles.  Membership is a handful of parity checks against
precomputed row masks, which vectorises over numpy uint64 arrays.

Codes are immutable after construction.  Two code transforms are provided:
antipodal pruning, which keeps the codeword starting with 0 from each pair
``(x, x + 1^n)``, and puncturing, which deletes coordinates and re-derives a
reduced parity check by Gaussian elimination.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


def pack_bits(bits) -> int:
    """Pack a bit vector into an int, first coordinate at the top bit."""
    out = 0
    for b in bits:
        out = (out << 1) | int(b)
    return out


def unpack_bits(x: int, n: int) -> np.ndarray:
    return np.array([(x >> (n - 1 - j)) & 1 for j in range(n)], dtype=np.int64)


def word_to_hex(x: int, n: int) -> str:
    return format(x, "0%dx" % ((n + 3) // 4))


def word_from_hex(text: str, n: int) -> int:
    x = int(text, 16)
    if x >> n:
        raise ValueError("hex word does not fit in %d bits" % n)
    return x


def _rref(rows: list[int], n: int) -> tuple[list[int], list[int]]:
    """Reduced row echelon form over GF(2).

    Returns (reduced nonzero rows, pivot coordinates 1-based, ascending).
    """
    rows = [r for r in rows]
    pivots: list[int] = []
    out: list[int] = []
    for coord in range(1, n + 1):
        bit = 1 << (n - coord)
        pivot_row = None
        for i, r in enumerate(rows):
            if r & bit:
                pivot_row = rows.pop(i)
                break
        if pivot_row is None:
            continue
        rows = [r ^ pivot_row if r & bit else r for r in rows]
        out = [r ^ pivot_row if r & bit else r for r in out]
        out.append(pivot_row)
        pivots.append(coord)
    return out, pivots


def _null_space(rows: list[int], n: int) -> list[int]:
    """Basis of the dual space {h : parity(r & h) = 0 for all rows r}."""
    reduced, pivots = _rref(rows, n)
    pivot_set = set(pivots)
    free_coords = [c for c in range(1, n + 1) if c not in pivot_set]
    basis = []
    for fc in free_coords:
        h = 1 << (n - fc)
        for r, pc in zip(reduced, pivots):
            if r & (1 << (n - fc)):
                h |= 1 << (n - pc)
        basis.append(h)
    return basis


@dataclass(frozen=True)
class LinearCode:
    """Binary linear code given by packed generator and parity-check rows.

    ``generator_rows`` are in reduced row echelon form with pivots at
    ``systematic_coords`` (1-based), so the message bits of a codeword can be
    read off directly.  ``first_bit_zero`` marks antipodal-pruned codes, whose
    membership adds the constraint coordinate-1 = 0 on top of the parity
    checks.
    """

    n: int
    k: int
    generator_rows: tuple[int, ...]
    parity_rows: tuple[int, ...]
    systematic_coords: tuple[int, ...]
    first_bit_zero: bool = False
    modifier: str | None = None
    punctured_positions: tuple[int, ...] = ()
    d_min_bound: int | None = None

    def __post_init__(self):
        if len(self.generator_rows) != self.k:
            raise ValueError("generator must have k rows")
        for g in self.generator_rows:
            for h in self.parity_rows:
                if (g & h).bit_count() & 1:
                    raise ValueError("generator and parity rows are inconsistent")
        if self.first_bit_zero:
            top = 1 << (self.n - 1)
            if any(g & top for g in self.generator_rows):
                raise ValueError("pruned generator rows must start with 0")

    @classmethod
    def from_generator_rows(cls, rows, n: int, **kwargs) -> "LinearCode":
        rows = list(rows)
        reduced, pivots = _rref(rows, n)
        if len(reduced) != len(rows):
            raise ValueError("generator rows are linearly dependent")
        parity = _null_space(reduced, n)
        return cls(
            n=n,
            k=len(reduced),
            generator_rows=tuple(reduced),
            parity_rows=tuple(parity),
            systematic_coords=tuple(pivots),
            **kwargs,
        )

    @property
    def rate(self) -> float:
        return self.k / self.n

    @cached_property
    def _parity_masks(self) -> np.ndarray:
        return np.array(self.parity_rows, dtype=np.uint64)

    # -- membership ---------------------------------------------------------

    def contains_packed(self, word: int) -> bool:
        if word >> self.n:
            raise ValueError("word does not fit the block length")
        if self.first_bit_zero and (word >> (self.n - 1)) & 1:
            return False
        return all(((word & h).bit_count() & 1) == 0 for h in self.parity_rows)

    def contains_batch(self, words: np.ndarray) -> np.ndarray:
        """Vectorised membership over packed uint64 words."""
        words = words.astype(np.uint64, copy=False)
        bad = np.zeros(words.shape, dtype=bool)
        for mask in self._parity_masks:
            bad |= (np.bitwise_count(words & mask) & np.uint64(1)).astype(bool)
        if self.first_bit_zero:
            bad |= ((words >> np.uint64(self.n - 1)) & np.uint64(1)).astype(bool)
        return ~bad

    def contains_word(self, bits) -> bool:
        bits = np.asarray(bits)
        if len(bits) != self.n:
            raise ValueError("word length mismatch")
        return self.contains_packed(pack_bits(bits))

    # -- encoding -----------------------------------------------------------

    def encode_packed(self, message: int) -> int:
        if message >> self.k:
            raise ValueError("message does not fit in %d bits" % self.k)
        out = 0
        for i, row in enumerate(self.generator_rows):
            if (message >> (self.k - 1 - i)) & 1:
                out ^= row
        return out

    def encode(self, message_bits) -> np.ndarray:
        bits = np.asarray(message_bits)
        if len(bits) != self.k:
            raise ValueError("message length mismatch")
        return unpack_bits(self.encode_packed(pack_bits(bits)), self.n)

    def message_from_packed(self, word: int) -> int:
        """Read the message back off the pivot coordinates."""
        out = 0
        for coord in self.systematic_coords:
            out = (out << 1) | ((word >> (self.n - coord)) & 1)
        return out

    def message_from_word(self, bits) -> int:
        return self.message_from_packed(pack_bits(np.asarray(bits)))


# ---------------------------------------------------------------------------
# BCH(63, 51) construction over GF(64)

_GF64_PRIMITIVE = 0b1000011  # x^6 + x + 1


def _gf64_tables():
    antilog = [0] * 63
    x = 1
    for i in range(63):
        antilog[i] = x
        x <<= 1
        if x & 0b1000000:
            x ^= _GF64_PRIMITIVE
    log = {v: i for i, v in enumerate(antilog)}
    return antilog, log


def _poly_mul_gf2(a: int, b: int) -> int:
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        b >>= 1
    return out


def _minimal_polynomial(power: int) -> int:
    """Minimal polynomial over GF(2) of alpha**power in GF(64), as a packed
    GF(2) polynomial (bit i = coefficient of x^i)."""
    antilog, log = _gf64_tables()

    def gf_mul(a, b):
        if a == 0 or b == 0:
            return 0
        return antilog[(log[a] + log[b]) % 63]

    coset = []
    c = power % 63
    while c not in coset:
        coset.append(c)
        c = (2 * c) % 63
    # product of (x + alpha^c) with coefficients in GF(64)
    poly = [1]
    for c in coset:
        root = antilog[c]
        nxt = [0] * (len(poly) + 1)
        for i, coef in enumerate(poly):
            nxt[i + 1] ^= coef
            nxt[i] ^= gf_mul(coef, root)
        poly = nxt
    if any(coef not in (0, 1) for coef in poly):
        raise AssertionError("minimal polynomial has coefficients outside GF(2)")
    out = 0
    for i, coef in enumerate(poly):
        out |= coef << i
    return out


def bch_generator_polynomial() -> int:
    """Generator polynomial of the narrow-sense double-error-correcting
    BCH code of length 63: lcm of the minimal polynomials of alpha, alpha^3.

    The two minimal polynomials are distinct irreducibles, so the lcm is
    their product; its degree is 12.
    """
    return _poly_mul_gf2(_minimal_polynomial(1), _minimal_polynomial(3))


def make_bch_63_51() -> LinearCode:
    """Systematic BCH(63, 51) with designed distance 5."""
    n, g = 63, bch_generator_polynomial()
    deg = g.bit_length() - 1
    k = n - deg
    rows = []
    for i in range(k):
        # systematic cyclic encoding: x^(n-1-i) plus its remainder mod g
        m = 1 << (n - 1 - i)
        rem = m
        while rem.bit_length() > deg:
            rem ^= g << (rem.bit_length() - 1 - deg)
        rows.append(m ^ rem)
    return LinearCode.from_generator_rows(rows, n, d_min_bound=5)


def make_hamming_7_4() -> LinearCode:
    """Small surrogate code containing the all-ones word; used in tests."""
    rows = [
        0b1000110,
        0b0100101,
        0b0010011,
        0b0001111,
    ]
    return LinearCode.from_generator_rows(rows, 7, d_min_bound=3)


# ---------------------------------------------------------------------------
# Code transforms


def prune_antipodal(code: LinearCode) -> LinearCode:
    """Keep one codeword from each antipodal pair: the one starting with 0.

    Requires the all-ones word to be a codeword, so the pairs exist; the
    result is the index-2 subcode {c : c1 = 0}, of dimension k - 1.
    """
    all_ones = (1 << code.n) - 1
    if not code.contains_packed(all_ones):
        raise ValueError("all-ones word is not in the code; no antipodal pairs")
    top = 1 << (code.n - 1)
    rows = list(code.generator_rows)
    pivot = next((r for r in rows if r & top), None)
    if pivot is None:
        raise ValueError("code already has first bit fixed to zero")
    rows = [r ^ pivot if r & top else r for r in rows if r is not pivot]
    reduced, pivots = _rref(rows, code.n)
    return LinearCode(
        n=code.n,
        k=code.k - 1,
        generator_rows=tuple(reduced),
        parity_rows=code.parity_rows,
        systematic_coords=tuple(pivots),
        first_bit_zero=True,
        modifier="antipodal_pruned",
        d_min_bound=code.d_min_bound,
    )


def puncture(code: LinearCode, positions) -> LinearCode:
    """Delete the given coordinates (1-based) and rebuild the parity check.

    Membership of a punctured word means some completion of the deleted
    coordinates lies in the parent code.  The reduced parity check is the
    left null space of the parent checks restricted to the deleted columns,
    applied to the kept columns.  Raises when the puncturing drops the code
    dimension (a nonzero parent codeword supported on the deleted positions).
    """
    positions = tuple(sorted(int(p) for p in positions))
    if len(set(positions)) != len(positions):
        raise ValueError("puncture positions must be distinct")
    if any(not (1 <= p <= code.n) for p in positions):
        raise ValueError("puncture positions out of range")
    kept = [c for c in range(1, code.n + 1) if c not in set(positions)]
    n_new = len(kept)

    checks = list(code.parity_rows)
    if code.first_bit_zero:
        checks.append(1 << (code.n - 1))

    def restrict(row: int, coords: list[int]) -> int:
        out = 0
        for c in coords:
            out = (out << 1) | ((row >> (code.n - c)) & 1)
        return out

    punct_cols = [restrict(h, list(positions)) for h in checks]
    kept_cols = [restrict(h, kept) for h in checks]

    # eliminate the punctured part; surviving zero rows give the reduced checks
    width = len(positions)
    tagged = [(punct_cols[i], kept_cols[i]) for i in range(len(checks))]
    pivot_count = 0
    for bit in range(width - 1, -1, -1):
        mask = 1 << bit
        pivot = None
        for i in range(pivot_count, len(tagged)):
            if tagged[i][0] & mask:
                pivot = i
                break
        if pivot is None:
            continue
        tagged[pivot_count], tagged[pivot] = tagged[pivot], tagged[pivot_count]
        pb, pk = tagged[pivot_count]
        for i in range(len(tagged)):
            if i != pivot_count and tagged[i][0] & mask:
                tagged[i] = (tagged[i][0] ^ pb, tagged[i][1] ^ pk)
        pivot_count += 1
    if pivot_count < width:
        raise ValueError(
            "degenerate puncture: a codeword is supported on the deleted positions"
        )
    reduced_checks = [kc for (pc, kc) in tagged[pivot_count:] if pc == 0]
    reduced_checks = [h for h in reduced_checks if h != 0]

    if any(p in set(code.systematic_coords) for p in positions):
        raise ValueError("puncturing a systematic coordinate is not supported")
    new_rows = [restrict(g, kept) for g in code.generator_rows]
    reduced, pivots = _rref(new_rows, n_new)
    if len(reduced) != code.k:
        raise AssertionError("puncture silently dropped the dimension")
    new_code = LinearCode(
        n=n_new,
        k=code.k,
        generator_rows=tuple(reduced),
        parity_rows=tuple(reduced_checks),
        systematic_coords=tuple(pivots),
        first_bit_zero=False,
        modifier="punctured",
        punctured_positions=positions,
        d_min_bound=None
        if code.d_min_bound is None
        else max(1, code.d_min_bound - len(positions)),
    )
    if len(reduced_checks) != n_new - code.k:
        raise AssertionError("reduced parity check has the wrong rank")
    return new_code


def make_modified_bch() -> LinearCode:
    """Antipodal-pruned BCH(63, 51): effective dimension 50, rate 50/63."""
    return prune_antipodal(make_bch_63_51())


# ---------------------------------------------------------------------------
# Unstructured codebooks for tiny random-coding experiments


@dataclass(frozen=True)
class ExplicitCodebook:
    """A list of (possibly repeated) words over a general alphabet.

    Membership is a hash lookup; the decoded message of a word is the first
    index carrying it.
    """

    words: tuple[tuple[int, ...], ...]
    alphabet_size: int
    _index: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        index = {}
        for i, w in enumerate(self.words):
            index.setdefault(w, i)
        object.__setattr__(self, "_index", index)

    @property
    def n(self) -> int:
        return len(self.words[0])

    @property
    def size(self) -> int:
        return len(self.words)

    def contains_word(self, bits) -> bool:
        return tuple(int(b) for b in bits) in self._index

    def message_from_word(self, bits) -> int:
        return self._index[tuple(int(b) for b in bits)]

    def encode_message(self, index: int) -> np.ndarray:
        return np.array(self.words[index], dtype=np.int64)

    @cached_property
    def packed_words(self) -> np.ndarray:
        """Packed representation, binary codebooks only."""
        if self.alphabet_size != 2:
            raise ValueError("packed words require a binary alphabet")
        return np.array([pack_bits(w) for w in self.words], dtype=np.uint64)
