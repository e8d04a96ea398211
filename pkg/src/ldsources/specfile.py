"""Problem-spec files: YAML documents describing one instance.

Rationals are written as strings (``"17/10"``, ``"0.1"``) and parsed
exactly.  Unknown keys are rejected.  Example::

    alphabet: {values: ["1", "2", "3", "4"]}
    type: [1, 1, 1, 7]
    set: {eq: {u: values, a: "17/10"}}
    epsilon: "1/10"
    ball: l1
    prior: uniform
    schedule: {k: [5, 10, 20, 30]}

Set expressions: ``simplex``, ``{eq: {u, a}}``, ``{ge: {u, a}}``,
``{le: {u, a}}``, ``{ball: {center, radius, convention}}``, ``{not: expr}``
and ``{all: [expr, ...]}``.  ``u: values`` stands for the alphabet values.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import yaml

from .core import (
    BALL_CONVENTIONS,
    DEFAULT_BALL,
    SIMPLEX,
    Alphabet,
    Ball,
    Complement,
    Intersection,
    LinearEq,
    LinearIneq,
    NType,
    PriorSpec,
    SourceSetSpec,
    as_fraction,
)
from .partitions import PartitionSpec

TOP_KEYS = {
    "alphabet", "type", "source", "limit", "set", "epsilon", "ball", "prior",
    "schedule", "mode", "partitions", "masses", "title",
}
BUNDLED = Path(__file__).parent / "data"


class SpecError(ValueError):
    """Malformed problem-spec file."""


@dataclass
class ProblemSpec:
    alphabet: Alphabet
    set: SourceSetSpec = SIMPLEX
    type: NType | None = None
    source: tuple | None = None
    limit: tuple | None = None
    epsilon: Fraction | None = None
    ball: str = DEFAULT_BALL
    prior: PriorSpec = field(default_factory=PriorSpec.uniform)
    ks: list | None = None
    ns: list | None = None
    mode: str = "static"
    partitions: list = field(default_factory=list)
    masses: dict = field(default_factory=dict)
    title: str = ""

    @property
    def m(self) -> int:
        return self.alphabet.m

    def sample_sizes(self) -> list:
        """Requested n values (k * n0 in static mode)."""
        if self.ns is not None:
            return list(self.ns)
        if self.ks is not None:
            if self.type is None:
                raise SpecError("schedule.k needs an observed type")
            return [k * self.type.n for k in self.ks]
        if self.type is not None:
            return [self.type.n]
        raise SpecError("no schedule given")


def _check_keys(d: dict, allowed: set, where: str):
    if not isinstance(d, dict):
        raise SpecError(f"{where}: expected a mapping, got {type(d).__name__}")
    extra = set(d) - allowed
    if extra:
        raise SpecError(f"{where}: unknown key(s) {sorted(extra)}")


def _rat(x, where):
    try:
        return as_fraction(x)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise SpecError(f"{where}: cannot read {x!r} as a rational") from exc


def _vector(xs, where, m=None):
    if not isinstance(xs, (list, tuple)):
        raise SpecError(f"{where}: expected a list")
    out = tuple(_rat(x, where) for x in xs)
    if m is not None and len(out) != m:
        raise SpecError(f"{where}: expected {m} entries, got {len(out)}")
    return out


def _pmf_vector(xs, where, m):
    v = _vector(xs, where, m)
    if any(x < 0 for x in v) or sum(v) != 1:
        raise SpecError(f"{where}: entries must be non-negative and sum to exactly 1")
    return v


def parse_set(expr, alphabet: Alphabet, default_ball: str = DEFAULT_BALL) -> SourceSetSpec:
    m = alphabet.m
    if expr is None or expr == "simplex":
        return SIMPLEX
    if not isinstance(expr, dict) or len(expr) != 1:
        raise SpecError(f"set expression must be 'simplex' or a one-key mapping, got {expr!r}")
    (kind, body), = expr.items()
    if kind in ("eq", "ge", "le"):
        _check_keys(body, {"u", "a"}, f"set.{kind}")
        if "u" not in body or "a" not in body:
            raise SpecError(f"set.{kind}: needs u and a")
        u = body["u"]
        if u == "values":
            if alphabet.values is None:
                raise SpecError("u: values used but the alphabet has no values")
            u = alphabet.values
        u = _vector(u, f"set.{kind}.u", m)
        a = _rat(body["a"], f"set.{kind}.a")
        if kind == "eq":
            return LinearEq(u, a)
        return LinearIneq(u, a, ">=" if kind == "ge" else "<=")
    if kind == "ball":
        _check_keys(body, {"center", "radius", "convention"}, "set.ball")
        conv = body.get("convention", default_ball)
        if conv not in BALL_CONVENTIONS:
            raise SpecError(f"set.ball.convention must be one of {BALL_CONVENTIONS}")
        return Ball(_pmf_vector(body["center"], "set.ball.center", m), _rat(body["radius"], "set.ball.radius"), conv)
    if kind == "not":
        return Complement(parse_set(body, alphabet, default_ball))
    if kind == "all":
        if not isinstance(body, list):
            raise SpecError("set.all: expected a list")
        return Intersection(tuple(parse_set(e, alphabet, default_ball) for e in body))
    raise SpecError(f"unknown set expression {kind!r}")


def _parse_alphabet(d, doc) -> Alphabet:
    if d is None:
        for key in ("type", "source", "limit"):
            if key in doc:
                return Alphabet(tuple(str(i + 1) for i in range(len(doc[key]))))
        raise SpecError("alphabet missing and cannot be inferred")
    _check_keys(d, {"values", "letters", "m"}, "alphabet")
    values = _vector(d["values"], "alphabet.values") if "values" in d else None
    letters = d.get("letters")
    if letters is None:
        if values is not None:
            letters = tuple(str(v) for v in values)
        elif "m" in d:
            letters = tuple(str(i + 1) for i in range(int(d["m"])))
        else:
            raise SpecError("alphabet needs values, letters or m")
    try:
        return Alphabet(tuple(letters), values)
    except ValueError as exc:
        raise SpecError(f"alphabet: {exc}") from exc


def _parse_prior(d, m) -> PriorSpec:
    if d is None or d == "uniform":
        return PriorSpec.uniform()
    _check_keys(d, {"atoms"}, "prior")
    atoms = []
    for i, atom in enumerate(d["atoms"]):
        _check_keys(atom, {"point", "weight"}, f"prior.atoms[{i}]")
        atoms.append((_pmf_vector(atom["point"], f"prior.atoms[{i}].point", m), float(atom["weight"])))
    try:
        return PriorSpec.from_atoms(atoms)
    except ValueError as exc:
        raise SpecError(f"prior: {exc}") from exc


def parse_spec(doc: dict) -> ProblemSpec:
    _check_keys(doc, TOP_KEYS, "spec")
    alphabet = _parse_alphabet(doc.get("alphabet"), doc)
    m = alphabet.m
    ball = doc.get("ball", DEFAULT_BALL)
    if ball not in BALL_CONVENTIONS:
        raise SpecError(f"ball must be one of {BALL_CONVENTIONS}")
    spec = ProblemSpec(alphabet=alphabet, ball=ball, title=str(doc.get("title", "")))
    spec.set = parse_set(doc.get("set"), alphabet, ball)
    if "type" in doc:
        counts = doc["type"]
        if not isinstance(counts, list) or len(counts) != m or any(not isinstance(c, int) or c < 0 for c in counts):
            raise SpecError(f"type: expected {m} non-negative integer counts")
        if sum(counts) < 1:
            raise SpecError("type: counts must sum to at least 1")
        spec.type = NType(tuple(counts))
    if "source" in doc:
        spec.source = _pmf_vector(doc["source"], "source", m)
    if "limit" in doc:
        spec.limit = _pmf_vector(doc["limit"], "limit", m)
    if "epsilon" in doc:
        spec.epsilon = _rat(doc["epsilon"], "epsilon")
        if spec.epsilon <= 0:
            raise SpecError("epsilon must be positive")
    spec.prior = _parse_prior(doc.get("prior"), m)
    if "schedule" in doc:
        sch = doc["schedule"]
        _check_keys(sch, {"k", "n"}, "schedule")
        if ("k" in sch) == ("n" in sch):
            raise SpecError("schedule: give exactly one of k or n")
        vals = sch.get("k", sch.get("n"))
        if not isinstance(vals, list) or not vals or any(not isinstance(v, int) or v < 1 for v in vals):
            raise SpecError("schedule: expected a list of positive integers")
        if "k" in sch:
            spec.ks = vals
        else:
            spec.ns = vals
    mode = doc.get("mode", "static")
    if mode not in ("static", "dynamic"):
        raise SpecError("mode must be static or dynamic")
    spec.mode = mode
    for i, part in enumerate(doc.get("partitions", []) or []):
        _check_keys(part, {"edges"}, f"partitions[{i}]")
        try:
            spec.partitions.append(PartitionSpec(_vector(part["edges"], f"partitions[{i}].edges")))
        except ValueError as exc:
            raise SpecError(f"partitions[{i}]: {exc}") from exc
    if "masses" in doc:
        _check_keys(doc["masses"], {"Q", "P"}, "masses")
        spec.masses = {
            key: [[float(_rat(x, f"masses.{key}")) for x in row] for row in rows]
            for key, rows in doc["masses"].items()
        }
    return spec


def load_spec(path=None) -> ProblemSpec:
    """Read a spec file; ``None`` loads the bundled worked example."""
    p = BUNDLED / "example.spec" if path is None else Path(path)
    try:
        doc = yaml.safe_load(p.read_text())
    except OSError as exc:
        raise SpecError(f"cannot read {p}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise SpecError(f"{p}: not valid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise SpecError(f"{p}: top level must be a mapping")
    return parse_spec(doc)
