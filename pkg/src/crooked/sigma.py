"""Deterministic, budgeted generation of the witness theory.

The theory is an omega-recursion over a registry of constants k(n,m) grouped
in levels: level -1 names the base-lattice elements, level -2 (when enabled)
names the subcontinuum catalog, and level 5n+i holds the fresh witnesses
introduced at stage 5n+i.  Stage kinds cycle through meets/joins and lattice
axioms (i=1), normality (i=2), disjunctivity (i=3), the dimension schema
(i=4) and the crookedness schema (i=5).

Levels are conceptually countable; here every level is capped by a budget
and every enumeration is truncated to the tuples whose fresh witnesses fit
the budget, so generation is finite, lazy and reproducible.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass

from .errors import InputError, ResourceLimitError, UsageError
from .folang import (
    And, Const, Eq, Formula, Implies, Join, Meet, Neq, One, Or, Var, Zero,
    conj, conjuncts, conn, parse, print_formula, substitute, theta, zeta,
)
from .lattice import FiniteLattice

DEFAULT_BUDGET = 16
DEFAULT_AXIOM_CAP = 64


def constant_id(level: int, ordinal: int) -> str:
    return f"k({level},{ordinal})"


_CID_RE = re.compile(r"^k\((-?\d+),(\d+)\)$")


def constant_key(cid: str) -> tuple[int, int]:
    """The position of a registry constant in the natural order: by level,
    then by ordinal."""
    m = _CID_RE.match(cid)
    if not m:
        raise InputError(f"not a registry constant: {cid!r}")
    return int(m.group(1)), int(m.group(2))


class ConstantRegistry:
    """Budgeted levels of constants with the strict total order given by
    (level, ordinal)."""

    def __init__(self, default_budget: int = DEFAULT_BUDGET, overrides: dict[int, int] | None = None):
        if default_budget < 0:
            raise InputError("budget must be nonnegative")
        self.default_budget = default_budget
        self.overrides = dict(overrides or {})
        self.counts: dict[int, int] = {}

    def budget(self, level: int) -> int:
        return self.overrides.get(level, self.default_budget)

    def count(self, level: int) -> int:
        return self.counts.get(level, 0)

    def populate(self, level: int, count: int) -> list[str]:
        if self.count(level):
            raise UsageError(f"level {level} already populated")
        if count > self.budget(level):
            raise ResourceLimitError(
                f"level {level} needs {count} constants, budget is {self.budget(level)}"
            )
        self.counts[level] = count
        return [constant_id(level, m) for m in range(count)]

    def remaining(self, level: int) -> int:
        return self.budget(level) - self.count(level)

    def alloc(self, level: int, count: int, stage: str, index: int) -> list[str]:
        if self.remaining(level) < count:
            raise ResourceLimitError(
                f"stage {stage}: budget exhausted at l={index} "
                f"(level {level} holds {self.count(level)} of {self.budget(level)})"
            )
        start = self.count(level)
        self.counts[level] = start + count
        return [constant_id(level, start + m) for m in range(count)]

    def constants_at(self, level: int) -> list[str]:
        return [constant_id(level, m) for m in range(self.count(level))]

    def constants_upto(self, max_level: int) -> list[str]:
        out = []
        for level in sorted(self.counts):
            if level <= max_level:
                out.extend(self.constants_at(level))
        return out


@dataclass(frozen=True)
class SentenceRecord:
    stage: int                  # -1 for the subcontinuum stage, 0 for the diagram
    family: int | None
    index: int                  # enumeration index l within the family
    kind: str
    formula: Formula
    operands: tuple[str, ...] = ()
    fresh: tuple[str, ...] = ()
    ignorable: bool = False

    @property
    def token(self) -> str:
        if self.family is None:
            return f"S{self.stage}"
        return f"S{self.stage}^{self.family}"

    @property
    def text(self) -> str:
        return print_formula(self.formula)

    def line(self) -> str:
        return f"{self.token} {self.index}: {self.text}"


def stage_parts(stage: int) -> tuple[int, int]:
    """Decompose stage index sigma >= 1 as 5n+i with i in 1..5."""
    if stage < 1:
        raise UsageError(f"stage {stage} has no schema parts")
    n = (stage - 1) // 5
    return n, stage - 5 * n


def enumerate_new_tuples(registry: ConstantRegistry, n: int, k: int, limit: int | None = None) -> list[tuple[str, ...]]:
    """Size-k subsets (k=2,3) or length-4 tuples with repetition (k=4) over
    constants of levels <= 5n that use at least one constant above level
    5(n-1), in lexicographic order of the natural constant order."""
    if k not in (2, 3, 4):
        raise UsageError("tuple size must be 2, 3 or 4")
    universe = registry.constants_upto(5 * n)
    universe.sort(key=constant_key)
    old_cut = 5 * (n - 1)
    old = {c for c in universe if constant_key(c)[0] <= old_cut}
    out: list[tuple[str, ...]] = []
    if k in (2, 3):
        iterator = itertools.combinations(universe, k)
        for combo in iterator:
            if any(c not in old for c in combo):
                out.append(combo)
                if limit is not None and len(out) >= limit:
                    break
    else:
        for combo in itertools.product(universe, repeat=4):
            if any(c not in old for c in combo):
                out.append(combo)
                if limit is not None and len(out) >= limit:
                    break
    return out


class SigmaGenerator:
    """Generates the theory stage by stage over a fresh registry.

    `continuum_constants` enables the level -2 subcontinuum stage: the first
    beta constants of level -2 are declared connected and paired with the
    same-index level -1 constants; the rest are forced to 0.
    """

    def __init__(
        self,
        base: FiniteLattice,
        budget: int = DEFAULT_BUDGET,
        axiom_cap: int = DEFAULT_AXIOM_CAP,
        continuum_constants: int = 0,
        hat_size: int | None = None,
    ):
        self.base = base
        self.axiom_cap = axiom_cap
        self.continuum_constants = continuum_constants
        if continuum_constants < 0:
            raise InputError("continuum constant count must be nonnegative")
        hat = continuum_constants > 0 or (hat_size or 0) > 0
        hat_n = (hat_size if hat_size is not None else budget) if hat else 0
        if continuum_constants > hat_n:
            raise InputError("continuum constants exceed the level -2 size")
        if continuum_constants > base.size:
            raise InputError("continuum constants exceed the base lattice size")
        self.registry = ConstantRegistry(
            default_budget=budget, overrides={-1: base.size, -2: hat_n}
        )
        self.registry.populate(-1, base.size)
        if hat:
            self.registry.populate(-2, hat_n)
        self._stages: dict[int, list[SentenceRecord]] = {}
        self._done_through: int | None = None

    # ------------------------------------------------------------- helpers

    def base_constant(self, element_index: int) -> str:
        return constant_id(-1, element_index)

    def _pair_enumeration(self, n: int, per_item: int, level: int) -> list[tuple[str, ...]]:
        limit = self.registry.remaining(level) // per_item
        pairs = enumerate_new_tuples(self.registry, n, 2, limit=max(limit, 1))
        if pairs and limit == 0:
            raise ResourceLimitError(f"stage S{level}: budget exhausted at l=0")
        return pairs[:limit]

    # ------------------------------------------------------------- stages

    def diagram(self) -> list[SentenceRecord]:
        """The atomic diagram of the base lattice: named meets, joins,
        inequalities, and the bottom/top identifications."""
        recs: list[SentenceRecord] = []
        B = self.base
        for l, (i, j) in enumerate(itertools.combinations(range(B.size), 2)):
            ci, cj = Const(self.base_constant(i)), Const(self.base_constant(j))
            cm = Const(self.base_constant(B.meet_table[i][j]))
            cu = Const(self.base_constant(B.join_table[i][j]))
            recs.append(SentenceRecord(0, None, l, "diagram-meet", Eq(Meet(ci, cj), cm)))
            recs.append(SentenceRecord(0, None, l, "diagram-join", Eq(Join(ci, cj), cu)))
            recs.append(SentenceRecord(0, None, l, "diagram-neq", Neq(ci, cj)))
        kb = Const(self.base_constant(B.bottom_index))
        kt = Const(self.base_constant(B.top_index))
        if B.bottom_index == B.top_index:
            both = And(Eq(kb, Zero()), Eq(kb, One()))
            recs.append(SentenceRecord(0, None, 0, "diagram-bounds", both))
        else:
            recs.append(SentenceRecord(0, None, 0, "diagram-bounds", Eq(kb, Zero())))
            recs.append(SentenceRecord(0, None, 1, "diagram-bounds", Eq(kt, One())))
        return recs

    def subcontinuum_stage(self) -> list[SentenceRecord]:
        """Level -2 sentences: each catalog constant is connected and sits
        under its paired level -1 constant; catalog constants dominate every
        level -1 constant containing them; the others are zero."""
        beta = self.continuum_constants
        hat_n = self.registry.count(-2)
        base_n = self.registry.count(-1)
        recs: list[SentenceRecord] = []
        for alpha in range(beta):
            k2 = Const(constant_id(-2, alpha))
            k1 = Const(constant_id(-1, alpha))
            f = And(conn(k2), Eq(Meet(k2, k1), k2))
            recs.append(
                SentenceRecord(-1, 0, alpha, "hat-conn", f, operands=(k2.cid, k1.cid))
            )
        l = 0
        for alpha in range(beta):
            k2 = Const(constant_id(-2, alpha))
            k1a = Const(constant_id(-1, alpha))
            for gamma in range(base_n):
                k1g = Const(constant_id(-1, gamma))
                f = Implies(
                    And(conn(k2), Eq(Meet(k2, k1g), k2)),
                    Eq(Meet(k1a, k1g), k1a),
                )
                recs.append(
                    SentenceRecord(
                        -1, 1, l, "hat-mono", f,
                        operands=(k2.cid, k1a.cid, k1g.cid),
                    )
                )
                l += 1
        for idx, gamma in enumerate(range(beta, hat_n)):
            k2 = Const(constant_id(-2, gamma))
            recs.append(
                SentenceRecord(-1, 2, idx, "hat-zero", Eq(k2, Zero()), operands=(k2.cid,))
            )
        return recs

    def _stage_lattice_ops(self, stage: int, n: int) -> list[SentenceRecord]:
        token = f"S{stage}"
        recs: list[SentenceRecord] = []
        pairs = self._pair_enumeration(n, 2, stage)
        for l, (c1, c2) in enumerate(pairs):
            kmeet, kjoin = self.registry.alloc(stage, 2, token, l)
            recs.append(
                SentenceRecord(
                    stage, 0, l, "meet",
                    Eq(Meet(Const(c1), Const(c2)), Const(kmeet)),
                    operands=(c1, c2), fresh=(kmeet,),
                )
            )
            recs.append(
                SentenceRecord(
                    stage, 1, l, "join",
                    Eq(Join(Const(c1), Const(c2)), Const(kjoin)),
                    operands=(c1, c2), fresh=(kjoin,),
                )
            )
        universe = self.registry.constants_upto(5 * n)
        universe.sort(key=constant_key)
        idx = 0
        for c in universe:
            t = Const(c)
            recs.append(SentenceRecord(stage, 2, idx, "idem", Eq(Join(t, t), t)))
            recs.append(SentenceRecord(stage, 2, idx + 1, "idem", Eq(Meet(t, t), t)))
            idx += 2
        cap = self.axiom_cap
        idx = 0
        for a, b, c in itertools.product(universe, repeat=3):
            if idx >= cap:
                break
            ta, tb, tc = Const(a), Const(b), Const(c)
            recs.append(
                SentenceRecord(
                    stage, 3, idx, "assoc",
                    Eq(Join(ta, Join(tb, tc)), Join(Join(ta, tb), tc)), ignorable=True,
                )
            )
            recs.append(
                SentenceRecord(
                    stage, 3, idx + 1, "assoc",
                    Eq(Meet(ta, Meet(tb, tc)), Meet(Meet(ta, tb), tc)), ignorable=True,
                )
            )
            idx += 2
        idx = 0
        for a, b, c in itertools.product(universe, repeat=3):
            if idx >= cap:
                break
            ta, tb, tc = Const(a), Const(b), Const(c)
            recs.append(
                SentenceRecord(
                    stage, 4, idx, "distrib",
                    Eq(Join(ta, Meet(tb, tc)), Meet(Join(ta, tb), Join(ta, tc))),
                    ignorable=True,
                )
            )
            idx += 1
        idx = 0
        for a, b in itertools.product(universe, repeat=2):
            if idx >= cap:
                break
            ta, tb = Const(a), Const(b)
            recs.append(
                SentenceRecord(
                    stage, 5, idx, "absorb",
                    Eq(Join(ta, Meet(ta, tb)), ta), ignorable=True,
                )
            )
            recs.append(
                SentenceRecord(
                    stage, 5, idx + 1, "absorb",
                    Eq(Meet(ta, Join(ta, tb)), ta), ignorable=True,
                )
            )
            idx += 2
        idx = 0
        for a, b in itertools.product(universe, repeat=2):
            if idx >= cap:
                break
            ta, tb = Const(a), Const(b)
            recs.append(
                SentenceRecord(
                    stage, 6, idx, "guard",
                    Implies(
                        And(Eq(Join(ta, tb), One()), Eq(Meet(ta, tb), Zero())),
                        Or(Eq(ta, Zero()), Eq(ta, One())),
                    ),
                    ignorable=True,
                )
            )
            idx += 1
        return recs

    def _stage_normal(self, stage: int, n: int) -> list[SentenceRecord]:
        token = f"S{stage}"
        recs = []
        pairs = self._pair_enumeration(n, 2, stage)
        for l, (c1, c2) in enumerate(pairs):
            mn, mx = Const(c1), Const(c2)  # pairs are sorted in the constant order
            k1, k2 = self.registry.alloc(stage, 2, token, l)
            f = Implies(
                Eq(Meet(mx, mn), Zero()),
                conj(
                    Eq(Meet(mx, Const(k1)), Zero()),
                    Eq(Meet(mn, Const(k2)), Zero()),
                    Eq(Join(Const(k1), Const(k2)), One()),
                ),
            )
            recs.append(
                SentenceRecord(
                    stage, None, l, "normal", f, operands=(c1, c2), fresh=(k1, k2)
                )
            )
        return recs

    def _stage_disjunctive(self, stage: int, n: int) -> list[SentenceRecord]:
        token = f"S{stage}"
        recs = []
        pairs = self._pair_enumeration(n, 2, stage)
        for l, (c1, c2) in enumerate(pairs):
            mn, mx = Const(c1), Const(c2)
            k1, k2 = self.registry.alloc(stage, 2, token, l)
            # the nonzero conjunct is required for the sentence to actually
            # force disjunctivity; see the library note on DISJ
            f0 = Implies(
                Neq(Meet(mx, mn), mx),
                conj(
                    Eq(Meet(Const(k1), mx), Const(k1)),
                    Eq(Meet(Const(k1), mn), Zero()),
                    Neq(Const(k1), Zero()),
                ),
            )
            f1 = Implies(
                Neq(Meet(mn, mx), mn),
                conj(
                    Eq(Meet(Const(k2), mn), Const(k2)),
                    Eq(Meet(Const(k2), mx), Zero()),
                    Neq(Const(k2), Zero()),
                ),
            )
            recs.append(
                SentenceRecord(stage, 0, l, "disj0", f0, operands=(c2, c1), fresh=(k1,))
            )
            recs.append(
                SentenceRecord(stage, 1, l, "disj1", f1, operands=(c1, c2), fresh=(k2,))
            )
        return recs

    def _stage_dimension(self, stage: int, n: int) -> list[SentenceRecord]:
        token = f"S{stage}"
        recs = []
        limit = self.registry.remaining(stage) // 3
        triples = enumerate_new_tuples(self.registry, n, 3, limit=limit)
        probe = enumerate_new_tuples(self.registry, n, 3, limit=1)
        if probe and not triples:
            raise ResourceLimitError(f"stage {token}: budget exhausted at l=0")
        names = ("a", "b", "c", "x", "y", "z")
        open_zeta = zeta(*(Var(v) for v in names))
        for l, (a, b, c) in enumerate(triples):
            x, y, z = self.registry.alloc(stage, 3, token, l)
            bindings = dict(zip(names, (Const(a), Const(b), Const(c), Const(x), Const(y), Const(z))))
            f = substitute(open_zeta, bindings)
            recs.append(
                SentenceRecord(
                    stage, None, l, "zeta", f, operands=(a, b, c), fresh=(x, y, z)
                )
            )
        return recs

    def _stage_crooked(self, stage: int, n: int) -> list[SentenceRecord]:
        token = f"S{stage}"
        recs = []
        limit = self.registry.remaining(stage) // 3
        quads = enumerate_new_tuples(self.registry, n, 4, limit=limit)
        probe = enumerate_new_tuples(self.registry, n, 4, limit=1)
        if probe and not quads:
            raise ResourceLimitError(f"stage {token}: budget exhausted at l=0")
        names = ("a", "b", "c", "d", "x", "y", "z")
        open_theta = theta(*(Var(v) for v in names))
        for l, (a, b, c, d) in enumerate(quads):
            x, y, z = self.registry.alloc(stage, 3, token, l)
            bindings = dict(
                zip(names, (Const(a), Const(b), Const(c), Const(d), Const(x), Const(y), Const(z)))
            )
            f = substitute(open_theta, bindings)
            recs.append(
                SentenceRecord(
                    stage, None, l, "theta", f, operands=(a, b, c, d), fresh=(x, y, z)
                )
            )
        return recs

    def gen_stage(self, stage: int) -> list[SentenceRecord]:
        """Generate one stage; earlier stages must exist already."""
        if stage in self._stages:
            return self._stages[stage]
        if stage == -1:
            recs = self.subcontinuum_stage()
        elif stage == 0:
            recs = self.diagram()
        else:
            for earlier in range(1, stage):
                if earlier not in self._stages:
                    raise UsageError(f"stage {earlier} must be generated before {stage}")
            n, i = stage_parts(stage)
            if i == 1:
                recs = self._stage_lattice_ops(stage, n)
            elif i == 2:
                recs = self._stage_normal(stage, n)
            elif i == 3:
                recs = self._stage_disjunctive(stage, n)
            elif i == 4:
                recs = self._stage_dimension(stage, n)
            else:
                recs = self._stage_crooked(stage, n)
        self._stages[stage] = recs
        return recs

    def generate_through(self, max_stage: int) -> list[SentenceRecord]:
        """All sentences of stages up to `max_stage`, in the global order:
        stage, then enumeration index, then family."""
        out: list[SentenceRecord] = []
        if self.registry.count(-2):
            out.extend(self.gen_stage(-1))
        out.extend(self.gen_stage(0))
        for stage in range(1, max_stage + 1):
            out.extend(self.gen_stage(stage))
        return out


def fragment(records: list[SentenceRecord], size: int) -> list[SentenceRecord]:
    """The first `size` sentences in the well order, skipping the families
    that are automatically true in every set-backed model (stage-5n+1
    associativity, distributivity, absorption, and connectivity guards)."""
    usable = [r for r in records if not r.ignorable]
    if size > len(usable):
        raise InputError(f"fragment size {size} exceeds the {len(usable)} generated sentences")
    return usable[:size]


# --------------------------------------------------------------------------
# Dumps
# --------------------------------------------------------------------------

def dump_sentences(records: list[SentenceRecord]) -> str:
    return "\n".join(r.line() for r in records) + ("\n" if records else "")


_LINE_RE = re.compile(r"^S(-?\d+)(?:\^(\d+))? (\d+): (.*)$")

_KIND_BY_STAGE_FAMILY = {
    (1, 0): "meet", (1, 1): "join", (1, 2): "idem", (1, 3): "assoc",
    (1, 4): "distrib", (1, 5): "absorb", (1, 6): "guard",
    (3, 0): "disj0", (3, 1): "disj1",
}


def _classify(stage: int, family: int | None, f: Formula) -> str:
    if stage == -1:
        return {0: "hat-conn", 1: "hat-mono", 2: "hat-zero"}[family]
    if stage == 0:
        if isinstance(f, Neq):
            return "diagram-neq"
        if isinstance(f, And):
            return "diagram-bounds"
        if isinstance(f, Eq):
            if isinstance(f.left, Meet):
                return "diagram-meet"
            if isinstance(f.left, Join):
                return "diagram-join"
            return "diagram-bounds"
        raise InputError("unrecognized diagram sentence")
    n, i = stage_parts(stage)
    if i in (1, 3):
        return _KIND_BY_STAGE_FAMILY[(i, family)]
    return {2: "normal", 4: "zeta", 5: "theta"}[i]


def _cid(t) -> str:
    if not isinstance(t, Const):
        raise InputError(f"expected a constant, found {t!r}")
    return t.cid


def _extract(kind: str, f: Formula) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """Recover (operands, fresh) from a generated sentence shape."""
    if kind == "meet" or kind == "join":
        op = f.left
        return (_cid(op.left), _cid(op.right)), (_cid(f.right),)
    if kind == "normal":
        mx = _cid(f.left.left.left)
        mn = _cid(f.left.left.right)
        cs = conjuncts(f.right)
        k1 = _cid(cs[0].left.right)
        k2 = _cid(cs[1].left.right)
        return (mn, mx), (k1, k2)
    if kind in ("disj0", "disj1"):
        a = _cid(f.left.left.left)
        b = _cid(f.left.left.right)
        k = _cid(conjuncts(f.right)[0].left.left)
        return (a, b), (k,)
    if kind == "zeta":
        m = f.left.left
        a, b, c = _cid(m.left.left), _cid(m.left.right), _cid(m.right)
        cs = conjuncts(f.right)
        x = _cid(cs[0].left.right)
        y = _cid(cs[1].left.right)
        z = _cid(cs[2].left.right)
        return (a, b, c), (x, y, z)
    if kind == "theta":
        pre = conjuncts(f.left)
        a = _cid(pre[0].left.left)
        b = _cid(pre[0].left.right)
        d = _cid(pre[1].left.right)
        c = _cid(pre[2].left.right)
        j = conjuncts(f.right)[0].left  # x v y v z
        x, y, z = _cid(j.left.left), _cid(j.left.right), _cid(j.right)
        return (a, b, c, d), (x, y, z)
    if kind == "hat-conn":
        eq = conjuncts(f)[1]
        return (_cid(eq.left.left), _cid(eq.left.right)), ()
    if kind == "hat-mono":
        pre = conjuncts(f.left)
        k2 = _cid(pre[1].left.left)
        k1g = _cid(pre[1].left.right)
        k1a = _cid(f.right.left.left)
        return (k2, k1a, k1g), ()
    if kind == "hat-zero":
        return (_cid(f.left),), ()
    return (), ()


def parse_sentence_dump(text: str) -> list[SentenceRecord]:
    """Reconstruct sentence records from the dump format; provenance is
    recovered from the stage token and the sentence shape."""
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        m = _LINE_RE.match(line)
        if not m:
            raise InputError(f"line {lineno}: not a sentence dump line")
        stage = int(m.group(1))
        family = int(m.group(2)) if m.group(2) is not None else None
        index = int(m.group(3))
        f = parse(m.group(4))
        kind = _classify(stage, family, f)
        try:
            operands, fresh = _extract(kind, f)
        except (AttributeError, InputError) as exc:
            raise InputError(f"line {lineno}: malformed {kind} sentence: {exc}") from exc
        ignorable = kind in ("assoc", "distrib", "absorb", "guard")
        records.append(
            SentenceRecord(stage, family, index, kind, f, operands, fresh, ignorable)
        )
    return records
