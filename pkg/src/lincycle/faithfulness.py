"""Zero constraints on experimental effects implied by faithfulness.

Each rule maps one minimal (in)dependence record from one experiment to
constraints of two shapes: a single effect is zero (:class:`EffectZero`) or a
product of two effects is zero (:class:`ProductZero`). Zeros propagate to every
superset of the intervention set, so the store never materialises supersets.
"""

from __future__ import annotations

import json
import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

from .experiments import EffectKey, ExperimentSpec
from .independence import MinimalRecord

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EffectZero:
    key: EffectKey
    rule: str = ""
    source: str = ""

    def to_json(self) -> str:
        return json.dumps({"variant": "effect_zero", "keys": [self.key.to_dict()],
                           "rule": self.rule, "record": self.source})


@dataclass(frozen=True)
class ProductZero:
    a: EffectKey
    b: EffectKey
    rule: str = ""
    source: str = ""

    def to_json(self) -> str:
        return json.dumps({"variant": "product_zero", "keys": [self.a.to_dict(), self.b.to_dict()],
                           "rule": self.rule, "record": self.source})


ZeroConstraint = Union[EffectZero, ProductZero]
Rule = Callable[[MinimalRecord, ExperimentSpec], Iterable[ZeroConstraint]]


def _zero(source: int, target: int, J: frozenset[int], rule: str, rec) -> Optional[EffectZero]:
    """``t(source ~> target || J u {source}) = 0`` when that key is well formed."""
    Js = J | {source}
    if target in Js or source == target:
        return None
    return EffectZero(EffectKey(source, target, Js), rule, str(rec))


def rule_no_directed_path(rec: MinimalRecord, spec: ExperimentSpec):
    """``x _||_ y | [C]`` with ``C`` inside ``J``: no directed path between x and y avoiding J.

    Covers the marginal case (``C`` empty) and the case of a minimal
    separating set made of intervened variables.
    """
    if not rec.independent or rec.D or not rec.C <= spec.J:
        return
    for s, t in ((rec.x, rec.y), (rec.y, rec.x)):
        z = _zero(s, t, spec.J, "no-directed-path", rec)
        if z is not None:
            yield z


def rule_unshielded_collider(rec: MinimalRecord, spec: ExperimentSpec):
    """``x _/||_ y | D u [w]`` with ``D`` intervened and ``w`` observed: w causes neither x nor y."""
    if rec.independent or len(rec.C) != 1 or not rec.D <= spec.J:
        return
    (w,) = rec.C
    if w not in spec.U:
        return
    for t in (rec.x, rec.y):
        z = _zero(w, t, spec.J, "unshielded-collider", rec)
        if z is not None:
            yield z


def rule_no_common_cause(rec: MinimalRecord, spec: ExperimentSpec):
    """``x _||_ y | [C]`` with ``C`` inside ``J``: no unintervened variable causes both."""
    if not rec.independent or rec.D or not rec.C <= spec.J:
        return
    x, y = rec.x, rec.y
    if x in spec.J or y in spec.J:
        return
    for u in range(spec.n):
        if u in spec.J or u in (x, y):
            continue
        Ju = spec.J | {u}
        yield ProductZero(EffectKey(u, x, Ju), EffectKey(u, y, Ju), "no-common-cause", str(rec))


DEFAULT_RULES: tuple[Rule, ...] = (rule_no_directed_path, rule_unshielded_collider, rule_no_common_cause)


def expand_products(zero: EffectZero, n: int) -> list[ProductZero]:
    """``t(x~>y||J u {x}) = 0`` splits every path through a third variable ``u``.

    Yields ``t(x~>u || J u {x}) * t(u~>y || J u {u}) = 0`` for each
    ``u`` outside ``J u {x, y}``.
    """
    key = zero.key
    x, y = key.source, key.target
    J = key.J - {x}
    out = []
    for u in range(n):
        if u in key.J or u == y:
            continue
        out.append(ProductZero(EffectKey(x, u, key.J), EffectKey(u, y, J | {u}),
                               "path-product", zero.source))
    return out


def derive_constraints(records: Sequence[MinimalRecord], spec: ExperimentSpec,
                       rules: Sequence[Rule] = DEFAULT_RULES,
                       products: bool = True) -> list[ZeroConstraint]:
    """Apply ``rules`` to every record of one experiment, plus path-product expansion."""
    revealed = spec.J | spec.U
    out: list[ZeroConstraint] = []
    seen: set = set()

    def push(c: ZeroConstraint):
        ident = (type(c), c.key) if isinstance(c, EffectZero) else (type(c), c.a, c.b)
        if ident not in seen:
            seen.add(ident)
            out.append(c)

    for rec in records:
        vars_ = {rec.x, rec.y} | rec.D | rec.C
        if not vars_ <= revealed:
            raise ValueError(f"record {rec} refers to variables hidden in {spec}")
        for rule in rules:
            for c in rule(rec, spec):
                push(c)
    if products:
        for c in [c for c in out if isinstance(c, EffectZero)]:
            for p in expand_products(c, spec.n):
                push(p)
    return out


class ConstraintConflict(RuntimeError):
    pass


class ConstraintStore:
    """Explicit zeros and product zeros with lazy superset closure."""

    def __init__(self, constraints: Iterable[ZeroConstraint] = ()):
        self._zeros: dict[tuple[int, int], list[frozenset[int]]] = defaultdict(list)
        self._products: dict[tuple[tuple[int, int], tuple[int, int]], list] = defaultdict(list)
        self.zero_constraints: list[EffectZero] = []
        self.product_constraints: list[ProductZero] = []
        self.conflicts: list[tuple[ProductZero, float, float]] = []
        self._resolved: set[ProductZero] = set()
        for c in constraints:
            self.add(c)

    def __len__(self):
        return len(self.zero_constraints) + len(self.product_constraints)

    def add(self, c: ZeroConstraint) -> bool:
        """Store ``c``; returns False when it was already implied."""
        if isinstance(c, EffectZero):
            if self.implied_zero(c.key):
                return False
            k = (c.key.source, c.key.target)
            # keep only minimal intervention sets
            self._zeros[k] = [J for J in self._zeros[k] if not c.key.J <= J] + [c.key.J]
            self.zero_constraints.append(c)
            return True
        if self.product_implied_zero(c.a, c.b):
            return False
        a, b = sorted((c.a, c.b), key=EffectKey.sort_key)
        self._products[((a.source, a.target), (b.source, b.target))].append((a.J, b.J, c))
        self.product_constraints.append(c)
        return True

    def add_zero(self, key: EffectKey, rule: str = "recorded") -> bool:
        return self.add(EffectZero(key, rule))

    def implied_zero(self, key: EffectKey) -> bool:
        """True iff a stored zero for the same pair has an intervention set inside ``key.J``."""
        return any(J <= key.J for J in self._zeros.get((key.source, key.target), ()))

    def product_implied_zero(self, a: EffectKey, b: EffectKey) -> bool:
        """True iff ``a * b = 0`` follows from one stored product (or a zero factor)."""
        if self.implied_zero(a) or self.implied_zero(b):
            return True
        for p, q in ((a, b), (b, a)):
            for Ja, Jb, _ in self._products.get(((p.source, p.target), (q.source, q.target)), ()):
                if Ja <= p.J and Jb <= q.J:
                    return True
        return False

    def products(self) -> list[ProductZero]:
        return list(self.product_constraints)

    def resolve_products(self, values: Mapping[EffectKey, float], nonzero_tol: float = 1e-6,
                         strict: bool = False) -> list[EffectZero]:
        """Turn products with one known-nonzero factor into zeros of the other factor.

        ``values`` holds recorded effect values; a factor is known nonzero when
        its magnitude exceeds ``nonzero_tol``. Products whose factors are both
        known nonzero are recorded in :attr:`conflicts` (or raised when
        ``strict``) and otherwise skipped.
        """
        new: list[EffectZero] = []
        for p in self.product_constraints:
            if p in self._resolved:
                continue
            if self.implied_zero(p.a) or self.implied_zero(p.b):
                self._resolved.add(p)
                continue
            va, vb = values.get(p.a), values.get(p.b)
            a_nz = va is not None and abs(va) > nonzero_tol
            b_nz = vb is not None and abs(vb) > nonzero_tol
            if a_nz and b_nz:
                self.conflicts.append((p, va, vb))
                self._resolved.add(p)
                msg = f"product constraint {p.a} * {p.b} = 0 violated by values {va:.3g}, {vb:.3g}"
                if strict:
                    raise ConstraintConflict(msg)
                logger.warning(msg)
                continue
            if a_nz or b_nz:
                z = EffectZero(p.b if a_nz else p.a, "product-resolution", p.source)
                self._resolved.add(p)
                if self.add(z):
                    new.append(z)
        return new

    def to_jsonl(self) -> str:
        return "\n".join(c.to_json() for c in [*self.zero_constraints, *self.product_constraints])
