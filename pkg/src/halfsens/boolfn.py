"""Boolean functions on the hypercube {-1,+1}^n with values in {0,1}.

Three representations are supported:

* :class:`TruthTable` -- the exact, fully materialized form (one entry per point),
* :class:`LinearThresholdFunction` -- ``1`` iff ``sum_i w_i x_i > threshold``,
* :class:`CompositeSpec` -- an ordered AND / OR of LTFs and/or truth tables.

Points are integers: bit ``i`` is set exactly when ``x_{i+1} = +1``.  Flipping
coordinate ``i`` is ``bits ^ (1 << i)``.
"""
import enum
import json
import struct
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from ._bits import check_table_n, pairs, popcount, xor_permute

HSTT_MAGIC = b"HSTT"
MAX_POINT_N = 30


@dataclass(frozen=True)
class HypercubePoint:
    n: int
    bits: int

    def __post_init__(self):
        if not 1 <= self.n <= MAX_POINT_N:
            raise ValueError(f"point dimension must be in [1, {MAX_POINT_N}], got {self.n}")
        if self.bits < 0 or self.bits >> self.n:
            raise ValueError(f"bits {self.bits:#x} has bits set above n={self.n}")

    @classmethod
    def from_signs(cls, signs):
        bits = 0
        for i, s in enumerate(signs):
            if s == 1:
                bits |= 1 << i
            elif s != -1:
                raise ValueError(f"coordinates must be +1 or -1, got {s}")
        return cls(len(signs), bits)

    @property
    def signs(self):
        return tuple(1 if (self.bits >> i) & 1 else -1 for i in range(self.n))

    def flip(self, i):
        """The neighbour x^i (zero-based coordinate)."""
        return HypercubePoint(self.n, self.bits ^ (1 << i))


class TruthTable:
    """All 2^n values of a {0,1}-valued function, stored as a read-only bool array."""

    __slots__ = ("n", "values")

    def __init__(self, n, values):
        check_table_n(n, cap=MAX_POINT_N)
        values = np.ascontiguousarray(values, dtype=bool).reshape(-1)
        if values.size != 1 << n:
            raise ValueError(f"table for n={n} needs {1 << n} entries, got {values.size}")
        values.flags.writeable = False
        self.n = n
        self.values = values

    @classmethod
    def constant(cls, n, value):
        return cls(n, np.full(1 << n, bool(value)))

    @classmethod
    def from_function(cls, n, func):
        """Materialize ``func(point) -> 0/1`` point by point (slow; for oracles)."""
        return cls(n, [bool(func(HypercubePoint(n, b))) for b in range(1 << n)])

    def __getitem__(self, bits):
        return int(self.values[bits])

    def __len__(self):
        return self.values.size

    def __eq__(self, other):
        if not isinstance(other, TruthTable):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.n, self.values.tobytes()))

    def __repr__(self):
        return f"TruthTable(n={self.n}, ones={self.ones})"

    def _check_same_n(self, other):
        if other.n != self.n:
            raise ValueError(f"dimension mismatch: {self.n} vs {other.n}")

    def __and__(self, other):
        self._check_same_n(other)
        return TruthTable(self.n, self.values & other.values)

    def __or__(self, other):
        self._check_same_n(other)
        return TruthTable(self.n, self.values | other.values)

    def __xor__(self, other):
        self._check_same_n(other)
        return TruthTable(self.n, self.values ^ other.values)

    def __invert__(self):
        return complement(self)

    @property
    def ones(self):
        return int(np.count_nonzero(self.values))

    @property
    def mean(self):
        return Fraction(self.ones, 1 << self.n)

    def is_constant(self):
        return self.ones in (0, 1 << self.n)

    def packed(self):
        """Little-endian bit dump: entry j is bit (j % 8) of byte j // 8."""
        return np.packbits(self.values, bitorder="little").tobytes()

    @classmethod
    def from_packed(cls, n, data):
        bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
        if bits.size < 1 << n:
            raise ValueError("packed table is too short")
        return cls(n, bits[: 1 << n])


@dataclass(frozen=True)
class LinearThresholdFunction:
    """Indicator of the open halfspace ``sum_i w_i x_i > threshold``."""

    weights: tuple
    threshold: int

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(int(w) for w in self.weights))
        object.__setattr__(self, "threshold", int(self.threshold))

    @property
    def n(self):
        return len(self.weights)

    def linear_form(self, bits):
        return sum(w if (bits >> i) & 1 else -w for i, w in enumerate(self.weights))

    def sums_table(self):
        """``sum_i w_i x_i`` at every point, built from two half-dimension tables."""
        n = self.n
        check_table_n(n, cap=MAX_POINT_N)
        bound = sum(abs(w) for w in self.weights) + abs(self.threshold)
        dtype = np.int32 if bound < 2**31 else np.int64
        h = n // 2
        lo = _partial_sums(self.weights[:h], dtype)
        hi = _partial_sums(self.weights[h:], dtype)
        return hi[:, None] + lo[None, :]

    def table_values(self):
        return (self.sums_table() > self.threshold).reshape(-1)


def _partial_sums(weights, dtype):
    s = np.zeros(1, dtype=dtype)
    for w in weights:
        s = np.concatenate([s - w, s + w])
    return s


class Combiner(str, enum.Enum):
    AND = "AND"
    OR = "OR"


@dataclass(frozen=True)
class CompositeSpec:
    """Ordered AND / OR of LTF, truth-table or nested composite terms."""

    n: int
    combiner: Combiner
    terms: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "combiner", Combiner(self.combiner))
        object.__setattr__(self, "terms", tuple(self.terms))
        for t in self.terms:
            if not isinstance(t, (LinearThresholdFunction, TruthTable, CompositeSpec)):
                raise TypeError(f"unsupported term type {type(t).__name__}")
            if t.n != self.n:
                raise ValueError(f"term dimension {t.n} does not match spec dimension {self.n}")

    @property
    def k(self):
        return len(self.terms)

    def is_ltf_only(self):
        return all(isinstance(t, LinearThresholdFunction) for t in self.terms)


Spec = Union[LinearThresholdFunction, TruthTable, CompositeSpec]


def spec_dimension(spec):
    return spec.n


def _as_point(x, n):
    if isinstance(x, HypercubePoint):
        if x.n != n:
            raise ValueError(f"dimension mismatch: point has n={x.n}, function has n={n}")
        return x.bits
    signs = tuple(x)
    if len(signs) != n:
        raise ValueError(f"dimension mismatch: point has n={len(signs)}, function has n={n}")
    return HypercubePoint.from_signs(signs).bits


def evaluate(spec, x):
    """f(x) in {0,1}; ``x`` is a HypercubePoint or a sequence of +-1."""
    bits = _as_point(x, spec.n)
    return _eval_bits(spec, bits)


def _eval_bits(spec, bits):
    if isinstance(spec, LinearThresholdFunction):
        return int(spec.linear_form(bits) > spec.threshold)
    if isinstance(spec, TruthTable):
        return spec[bits]
    if isinstance(spec, CompositeSpec):
        outs = (_eval_bits(t, bits) for t in spec.terms)
        if spec.combiner is Combiner.AND:
            return int(all(outs))
        return int(any(outs))
    raise TypeError(f"cannot evaluate {type(spec).__name__}")


def truth_table(spec, n=None, cap=None):
    """Materialize ``spec`` over all 2^n points."""
    n = spec.n if n is None else n
    if spec.n != n:
        raise ValueError(f"dimension mismatch: spec has n={spec.n}, requested n={n}")
    check_table_n(n, cap=cap)
    if isinstance(spec, TruthTable):
        return spec
    if isinstance(spec, LinearThresholdFunction):
        return TruthTable(n, spec.table_values())
    acc = np.full(1 << n, spec.combiner is Combiner.AND)
    for term in spec.terms:
        if isinstance(term, TruthTable):
            vals = term.values
        elif isinstance(term, CompositeSpec):
            vals = truth_table(term, n, cap).values
        else:
            vals = term.table_values()
        if spec.combiner is Combiner.AND:
            acc &= vals
        else:
            acc |= vals
    return TruthTable(n, acc)


class Direction(str, enum.Enum):
    INCREASING = "Increasing"
    DECREASING = "Decreasing"
    CONSTANT = "Constant"
    MIXED = "Mixed"


@dataclass(frozen=True)
class Orientation:
    directions: tuple

    @property
    def unate(self):
        return Direction.MIXED not in self.directions

    @property
    def sigma(self):
        """Sign vector that turns a unate function increasing (+1 on Constant)."""
        return tuple(-1 if d is Direction.DECREASING else 1 for d in self.directions)

    def __getitem__(self, i):
        return self.directions[i]

    def __len__(self):
        return len(self.directions)


def orientation(tt: TruthTable) -> Orientation:
    """Classify each coordinate by comparing f at x_i=+1 against x_i=-1."""
    dirs = []
    for i in range(tt.n):
        lo, hi = pairs(tt.values, i)
        up = bool(np.any(hi & ~lo))
        down = bool(np.any(lo & ~hi))
        if up and down:
            dirs.append(Direction.MIXED)
        elif up:
            dirs.append(Direction.INCREASING)
        elif down:
            dirs.append(Direction.DECREASING)
        else:
            dirs.append(Direction.CONSTANT)
    return Orientation(tuple(dirs))


def weight_orientation(f: LinearThresholdFunction) -> Orientation:
    """Orientation read off the weight signs."""
    return Orientation(tuple(
        Direction.INCREASING if w > 0 else Direction.DECREASING if w < 0 else Direction.CONSTANT
        for w in f.weights
    ))


def apply_signs(tt: TruthTable, sigma: Sequence[int]) -> TruthTable:
    """g(x) = f(sigma_1 x_1, ..., sigma_n x_n)."""
    if len(sigma) != tt.n:
        raise ValueError(f"sign vector has length {len(sigma)}, expected {tt.n}")
    mask = 0
    for i, s in enumerate(sigma):
        if s == -1:
            mask |= 1 << i
        elif s != 1:
            raise ValueError(f"sign vector entries must be +1 or -1, got {s}")
    return TruthTable(tt.n, xor_permute(tt.values, mask))


def normalize_increasing(tt, o=None):
    """Reflect coordinates so that the result is increasing in every coordinate.

    Returns ``(g, sigma)`` with ``g(x) = f(sigma * x)``; raises ``ValueError``
    for a non-unate table.
    """
    o = orientation(tt) if o is None else o
    if not o.unate:
        raise ValueError("function is not unate; mixed coordinates: "
                         f"{[i for i, d in enumerate(o.directions) if d is Direction.MIXED]}")
    sigma = o.sigma
    return apply_signs(tt, sigma), sigma


def flip_signs(f: LinearThresholdFunction, s: Sequence[int]) -> LinearThresholdFunction:
    """f_s(x) = f(s_1 x_1, ..., s_n x_n), realized by negating weights."""
    if len(s) != f.n:
        raise ValueError(f"sign vector has length {len(s)}, expected {f.n}")
    if any(v not in (1, -1) for v in s):
        raise ValueError("sign vector entries must be +1 or -1")
    return LinearThresholdFunction(tuple(si * w for si, w in zip(s, f.weights)), f.threshold)


def complement(tt):
    if not isinstance(tt, TruthTable):
        tt = truth_table(tt)
    return TruthTable(tt.n, ~tt.values)


def is_increasing(tt):
    return all(d in (Direction.INCREASING, Direction.CONSTANT) for d in orientation(tt).directions)


def monotone_closure(n, generators):
    """Smallest increasing function that is 1 on every generator point."""
    vals = np.zeros(1 << n, dtype=bool)
    vals[np.asarray(list(generators), dtype=np.int64)] = True
    for i in range(n):
        lo, hi = pairs(vals, i)
        hi |= lo
    return TruthTable(n, vals)


# ---------------------------------------------------------------- serialization

def spec_to_dict(spec):
    if isinstance(spec, LinearThresholdFunction):
        return {"weights": list(spec.weights), "threshold": spec.threshold}
    if isinstance(spec, TruthTable):
        return {"n": spec.n, "table": spec.packed().hex()}
    if isinstance(spec, CompositeSpec):
        return {"n": spec.n, "combiner": spec.combiner.value,
                "terms": [spec_to_dict(t) for t in spec.terms]}
    raise TypeError(f"cannot serialize {type(spec).__name__}")


def spec_from_dict(doc, n=None):
    if "terms" in doc:
        n = int(doc["n"])
        terms = [spec_from_dict(t, n) for t in doc["terms"]]
        return CompositeSpec(n, doc.get("combiner", "AND"), terms)
    if "weights" in doc:
        f = LinearThresholdFunction(doc["weights"], doc["threshold"])
        if "n" in doc and int(doc["n"]) != f.n:
            raise ValueError(f"declared n={doc['n']} but {f.n} weights given")
        return f
    if "table" in doc:
        return TruthTable.from_packed(int(doc["n"]), bytes.fromhex(doc["table"]))
    raise ValueError("spec document needs one of 'terms', 'weights' or 'table'")


def dumps_spec(spec, metadata=None):
    doc = spec_to_dict(spec)
    if metadata is not None:
        doc["metadata"] = metadata
    return json.dumps(doc, sort_keys=False)


def loads_spec(text):
    """Parse a spec document; returns ``(spec, metadata_or_None)``."""
    doc = json.loads(text)
    if not isinstance(doc, dict):
        raise ValueError("spec document must be a JSON object")
    return spec_from_dict(doc), doc.get("metadata")


def write_hstt(tt: TruthTable, fh):
    fh.write(HSTT_MAGIC + struct.pack("<I", tt.n) + tt.packed())


def read_hstt(fh) -> TruthTable:
    header = fh.read(8)
    if len(header) != 8 or header[:4] != HSTT_MAGIC:
        raise ValueError("not an HSTT truth-table file")
    (n,) = struct.unpack("<I", header[4:])
    return TruthTable.from_packed(n, fh.read())


def parity(n):
    """Indicator (1 + chi_[n]) / 2, i.e. 1 iff the number of -1 coordinates is even."""
    return TruthTable(n, (popcount(np.arange(1 << n)) - n) % 2 == 0)


def dictator(n, i=0, sign=1):
    w = [0] * n
    w[i] = sign
    return LinearThresholdFunction(w, 0)


def majority(n):
    return LinearThresholdFunction([1] * n, 0)
