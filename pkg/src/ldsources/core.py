"""Shared vocabulary: alphabets, pmfs, exact types, linear families and source-set expressions.

Membership of an :class:`NType` in a set is decided in exact integer
arithmetic.  Membership of a floating :class:`Pmf` uses a residual
tolerance of ``PMF_SET_TOL``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

PMF_SET_TOL = 1e-12

HALF_L1 = "half-l1"
L1 = "l1"
BALL_CONVENTIONS = (HALF_L1, L1)
# reproduces the published concentration table; see README
DEFAULT_BALL = L1

RationalLike = Union[int, float, str, Fraction]


def as_fraction(x: RationalLike) -> Fraction:
    """Convert to an exact rational.

    Strings such as ``"17/10"`` or ``"0.1"`` are parsed exactly.  Floats are
    read through their shortest decimal repr, so ``0.1`` becomes ``1/10``.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (bool, np.bool_)):
        raise TypeError("booleans are not rationals")
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, (float, np.floating)):
        if not math.isfinite(x):
            raise ValueError(f"non-finite value {x!r}")
        return Fraction(repr(float(x)))
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"cannot interpret {x!r} as a rational")


def _lcm_denominators(values: Iterable[Fraction]) -> int:
    out = 1
    for v in values:
        out = math.lcm(out, v.denominator)
    return out


class DimensionError(ValueError):
    """Raised when objects over different alphabet sizes are combined."""


@dataclass(frozen=True)
class Alphabet:
    letters: tuple
    values: tuple | None = None

    def __post_init__(self):
        letters = tuple(self.letters)
        if len(letters) < 1:
            raise ValueError("alphabet needs at least one letter")
        if len(set(letters)) != len(letters):
            raise ValueError("alphabet letters must be distinct")
        object.__setattr__(self, "letters", letters)
        if self.values is not None:
            values = tuple(as_fraction(v) for v in self.values)
            if len(values) != len(letters):
                raise ValueError("values must have one entry per letter")
            object.__setattr__(self, "values", values)

    @property
    def m(self) -> int:
        return len(self.letters)

    @classmethod
    def numeric(cls, values: Sequence[RationalLike]) -> "Alphabet":
        vals = tuple(as_fraction(v) for v in values)
        return cls(letters=tuple(str(v) for v in vals), values=vals)


class Pmf:
    """A validated probability mass function on ``m`` letters.

    Weights are never renormalized.  The sum check allows ``tolerance`` on top
    of ``m * 2**-53``, the worst case representation error of correctly
    rounded weights such as ``counts / n``.
    """

    __slots__ = ("_w", "tolerance")

    def __init__(self, weights, tolerance: float = 1e-12):
        w = np.array(weights, dtype=float).ravel()
        if w.size == 0:
            raise ValueError("pmf needs at least one weight")
        if tolerance < 0:
            raise ValueError("tolerance must be non-negative")
        if not np.all(np.isfinite(w)):
            raise ValueError("pmf weights must be finite")
        if np.any(w < 0):
            raise ValueError(f"negative weight in {w.tolist()}")
        total = math.fsum(w.tolist())
        if abs(total - 1.0) > tolerance + w.size * 2.0**-53:
            raise ValueError(f"weights sum to {total!r}, not 1 (tolerance {tolerance})")
        w.setflags(write=False)
        self._w = w
        self.tolerance = float(tolerance)

    @property
    def weights(self) -> np.ndarray:
        return self._w

    @property
    def m(self) -> int:
        return self._w.size

    def __len__(self):
        return self._w.size

    def __array__(self, dtype=None, copy=None):
        return self._w if dtype is None else self._w.astype(dtype)

    def __iter__(self):
        return iter(self._w.tolist())

    def __repr__(self):
        return f"Pmf({np.array2string(self._w, precision=6)})"

    def __eq__(self, other):
        return isinstance(other, Pmf) and np.array_equal(self._w, other._w)

    def __hash__(self):
        return hash(self._w.tobytes())


def make_pmf(weights, tolerance: float = 1e-12) -> Pmf:
    return Pmf(weights, tolerance)


def support(p) -> frozenset:
    """Indices carrying strictly positive mass."""
    w = as_weights(p)
    return frozenset(int(i) for i in np.flatnonzero(w > 0))


@dataclass(frozen=True, order=True)
class NType:
    """An n-type (equivalently an n-source): integer counts summing to n."""

    counts: tuple

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if not counts:
            raise ValueError("type needs at least one count")
        if any(c < 0 for c in counts):
            raise ValueError(f"negative count in {counts}")
        if sum(counts) < 1:
            raise ValueError("type must have n >= 1")
        object.__setattr__(self, "counts", counts)

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def m(self) -> int:
        return len(self.counts)

    def fractions(self) -> tuple:
        n = self.n
        return tuple(Fraction(c, n) for c in self.counts)

    def pmf(self) -> Pmf:
        # each weight is a correctly rounded quotient, hence the sum is within m ulps
        n = self.n
        return Pmf([c / n for c in self.counts], tolerance=0.0)

    def as_array(self) -> np.ndarray:
        return np.array(self.counts, dtype=np.int64)

    def __str__(self):
        return "[" + ", ".join(map(str, self.counts)) + f"]/{self.n}"


def as_weights(p) -> np.ndarray:
    """Float weights of a Pmf, NType or plain vector."""
    if isinstance(p, Pmf):
        return p.weights
    if isinstance(p, NType):
        n = p.n
        return np.array([c / n for c in p.counts])
    return np.asarray(p, dtype=float)


def as_exact(p) -> tuple:
    """Exact rational coordinates of an NType, Pmf or vector."""
    if isinstance(p, NType):
        return p.fractions()
    if isinstance(p, Pmf):
        return tuple(Fraction(float(x)) for x in p.weights)
    return tuple(as_fraction(x) for x in p)


@dataclass(frozen=True)
class LinearFamily:
    """Moment constraints ``sum_x q(x) u_j(x) = a_j`` for ``j = 1..k``."""

    u: tuple
    a: tuple

    def __post_init__(self):
        u = tuple(tuple(as_fraction(x) for x in row) for row in self.u)
        a = tuple(as_fraction(x) for x in self.a)
        if len(u) < 1:
            raise ValueError("linear family needs at least one constraint")
        if len(u) != len(a):
            raise ValueError("u and a must have the same number of rows")
        widths = {len(row) for row in u}
        if len(widths) != 1:
            raise ValueError("rows of u must have equal length")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "a", a)

    @property
    def k(self) -> int:
        return len(self.u)

    @property
    def m(self) -> int:
        return len(self.u[0])

    @classmethod
    def mean(cls, values: Sequence[RationalLike], target: RationalLike) -> "LinearFamily":
        return cls(u=(tuple(values),), a=(target,))

    def u_array(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.u])

    def a_array(self) -> np.ndarray:
        return np.array([float(x) for x in self.a])

    def residuals(self, p) -> np.ndarray:
        return self.u_array() @ as_weights(p) - self.a_array()

    def as_set(self) -> "Intersection":
        return Intersection(tuple(LinearEq(row, aj) for row, aj in zip(self.u, self.a)))


# ---------------------------------------------------------------------------
# source-set expressions
# ---------------------------------------------------------------------------


def _object_safe(bound: int) -> object:
    return np.int64 if bound < 2**62 else object


class SourceSetSpec:
    """Base class of set expressions over the simplex."""

    def mask(self, counts: np.ndarray, n: int) -> np.ndarray:
        """Exact membership of each row of ``counts`` (rows sum to ``n``)."""
        raise NotImplementedError

    def contains_pmf(self, w: np.ndarray, tol: float = PMF_SET_TOL) -> bool:
        raise NotImplementedError

    def dim(self) -> int | None:
        return None

    def __and__(self, other):
        return Intersection((self, other))

    def __invert__(self):
        return Complement(self)


class _Linear(SourceSetSpec):
    u: tuple
    a: Fraction

    def _setup(self, u, a):
        u = tuple(as_fraction(x) for x in u)
        a = as_fraction(a)
        scale = _lcm_denominators(u + (a,))
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "_ui", tuple(int(x * scale) for x in u))
        object.__setattr__(self, "_ai", int(a * scale))

    def dim(self):
        return len(self.u)

    def _lhs_rhs(self, counts, n):
        counts = np.asarray(counts)
        if counts.shape[-1] != len(self.u):
            raise DimensionError(f"constraint over {len(self.u)} letters, got {counts.shape[-1]}")
        bound = (max(abs(x) for x in self._ui) + 1) * max(n, 1) + abs(self._ai) * max(n, 1)
        dt = _object_safe(bound)
        ui = np.array(self._ui, dtype=dt)
        lhs = counts.astype(dt) @ ui
        return lhs, self._ai * n

    def residual(self, w):
        w = np.asarray(w, dtype=float)
        if w.size != len(self.u):
            raise DimensionError(f"constraint over {len(self.u)} letters, got {w.size}")
        return float(np.dot([float(x) for x in self.u], w)) - float(self.a)


@dataclass(frozen=True, eq=True)
class LinearEq(_Linear):
    u: tuple
    a: Fraction

    def __post_init__(self):
        self._setup(self.u, self.a)

    def mask(self, counts, n):
        lhs, rhs = self._lhs_rhs(counts, n)
        return np.asarray(lhs == rhs, dtype=bool)

    def contains_pmf(self, w, tol=PMF_SET_TOL):
        return abs(self.residual(w)) <= tol


@dataclass(frozen=True, eq=True)
class LinearIneq(_Linear):
    """``sum u q >= a`` (``sense='>='``) or ``sum u q <= a``."""

    u: tuple
    a: Fraction
    sense: str = ">="

    def __post_init__(self):
        if self.sense not in (">=", "<="):
            raise ValueError(f"unknown sense {self.sense!r}")
        self._setup(self.u, self.a)

    def mask(self, counts, n):
        lhs, rhs = self._lhs_rhs(counts, n)
        res = lhs >= rhs if self.sense == ">=" else lhs <= rhs
        return np.asarray(res, dtype=bool)

    def contains_pmf(self, w, tol=PMF_SET_TOL):
        r = self.residual(w)
        return r >= -tol if self.sense == ">=" else r <= tol

    def as_ge(self) -> tuple:
        """Coefficients and bound normalized to the ``>=`` form."""
        if self.sense == ">=":
            return self.u, self.a
        return tuple(-x for x in self.u), -self.a


def ball_distance(x, center, convention: str = DEFAULT_BALL) -> float:
    d = float(np.abs(as_weights(x) - as_weights(center)).sum())
    return d / 2 if convention == HALF_L1 else d


@dataclass(frozen=True, eq=True)
class Ball(SourceSetSpec):
    """Closed variation ball around ``center``.

    ``convention='half-l1'`` measures ``sum|p-q|/2``; ``'l1'`` measures ``sum|p-q|``.
    """

    center: tuple
    radius: Fraction
    convention: str = DEFAULT_BALL

    def __post_init__(self):
        if self.convention not in BALL_CONVENTIONS:
            raise ValueError(f"ball convention must be one of {BALL_CONVENTIONS}")
        center = self.center
        if isinstance(center, (NType, Pmf)):
            center = as_exact(center)
        else:
            center = tuple(as_fraction(x) if not isinstance(x, Fraction) else x for x in center)
        radius = as_fraction(self.radius)
        if radius < 0:
            raise ValueError("radius must be non-negative")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", radius)
        d = _lcm_denominators(center)
        object.__setattr__(self, "_d", d)
        object.__setattr__(self, "_ci", tuple(int(c * d) for c in center))
        object.__setattr__(self, "_cf", np.array([float(c) for c in center]))

    def dim(self):
        return len(self.center)

    def _scaled_radius(self):
        return self.radius * 2 if self.convention == HALF_L1 else self.radius

    def mask(self, counts, n):
        counts = np.asarray(counts)
        if counts.shape[-1] != len(self.center):
            raise DimensionError(f"ball over {len(self.center)} letters, got {counts.shape[-1]}")
        r = self._scaled_radius()
        # float screen, then exact integer arithmetic near the boundary
        dist = np.abs(counts / n - self._cf).sum(axis=-1)
        out = dist <= float(r)
        near = np.abs(dist - float(r)) <= 1e-9 * max(1.0, float(r))
        if np.any(near):
            idx = np.flatnonzero(near)
            ci = np.array(self._ci, dtype=object)
            sub = counts[idx].astype(object) * self._d - ci * n
            lhs = np.abs(sub).sum(axis=-1) * r.denominator
            rhs = r.numerator * n * self._d
            out[idx] = np.array([v <= rhs for v in lhs], dtype=bool)
        return out

    def contains_pmf(self, w, tol=PMF_SET_TOL):
        w = np.asarray(w, dtype=float)
        if w.size != len(self.center):
            raise DimensionError(f"ball over {len(self.center)} letters, got {w.size}")
        return float(np.abs(w - self._cf).sum()) <= float(self._scaled_radius()) + tol


@dataclass(frozen=True, eq=True)
class Complement(SourceSetSpec):
    child: SourceSetSpec

    def mask(self, counts, n):
        return ~self.child.mask(counts, n)

    def contains_pmf(self, w, tol=PMF_SET_TOL):
        return not self.child.contains_pmf(w, tol)

    def dim(self):
        return self.child.dim()


@dataclass(frozen=True, eq=True)
class Intersection(SourceSetSpec):
    """Intersection of children; with no children it is the whole simplex."""

    children: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))

    def mask(self, counts, n):
        counts = np.asarray(counts)
        out = np.ones(counts.shape[:-1], dtype=bool)
        for child in self.children:
            if not out.any():
                break
            out &= child.mask(counts, n)
        return out

    def contains_pmf(self, w, tol=PMF_SET_TOL):
        return all(c.contains_pmf(w, tol) for c in self.children)

    def dim(self):
        dims = {c.dim() for c in self.children} - {None}
        if len(dims) > 1:
            raise DimensionError(f"children disagree on alphabet size: {sorted(dims)}")
        return dims.pop() if dims else None

    def atoms(self) -> tuple:
        """Children with nested intersections flattened."""
        out = []
        for c in self.children:
            if isinstance(c, Intersection):
                out.extend(c.atoms())
            else:
                out.append(c)
        return tuple(out)


SIMPLEX = Intersection(())


def flatten(spec: SourceSetSpec) -> tuple:
    if isinstance(spec, Intersection):
        return spec.atoms()
    return (spec,)


def is_polyhedral(spec: SourceSetSpec) -> bool:
    """True when ``spec`` is an intersection of linear equalities/inequalities."""
    return all(isinstance(a, (LinearEq, LinearIneq)) for a in flatten(spec))


def evaluate_set(spec: SourceSetSpec, q, tol: float = PMF_SET_TOL) -> bool:
    """Membership of an NType (exact) or a Pmf (within ``tol`` on residuals)."""
    d = spec.dim()
    if isinstance(q, NType):
        if d is not None and d != q.m:
            raise DimensionError(f"set over {d} letters, type over {q.m}")
        return bool(spec.mask(np.array([q.counts], dtype=np.int64), q.n)[0])
    w = as_weights(q)
    if d is not None and d != w.size:
        raise DimensionError(f"set over {d} letters, pmf over {w.size}")
    return bool(spec.contains_pmf(w, tol))


@dataclass(frozen=True)
class PriorSpec:
    """Prior over sources: ``uniform`` on the n-sources, or finitely many rational atoms."""

    variant: str = "uniform"
    atoms: tuple = field(default=())

    def __post_init__(self):
        if self.variant not in ("uniform", "atoms"):
            raise ValueError(f"unknown prior variant {self.variant!r}")
        if self.variant == "uniform":
            if self.atoms:
                raise ValueError("uniform prior takes no atoms")
            return
        if not self.atoms:
            raise ValueError("empty prior")
        atoms = []
        for point, weight in self.atoms:
            pt = as_exact(point)
            if any(x < 0 for x in pt) or sum(pt) != 1:
                raise ValueError(f"prior atom {point} is not an exact pmf")
            w = float(weight)
            if not w > 0:
                raise ValueError("prior atom weights must be positive")
            atoms.append((pt, w))
        total = math.fsum(w for _, w in atoms)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"prior weights sum to {total}, not 1")
        atoms = tuple((pt, w / total) for pt, w in atoms)
        dims = {len(pt) for pt, _ in atoms}
        if len(dims) != 1:
            raise DimensionError("prior atoms disagree on alphabet size")
        object.__setattr__(self, "atoms", atoms)

    @classmethod
    def uniform(cls) -> "PriorSpec":
        return cls("uniform")

    @classmethod
    def from_atoms(cls, atoms) -> "PriorSpec":
        return cls("atoms", tuple(atoms))

    @property
    def is_uniform(self) -> bool:
        return self.variant == "uniform"
