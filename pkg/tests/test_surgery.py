from fractions import Fraction as F

import pytest

from crooked.errors import DegeneracyError, InvariantViolationError, PreconditionError
from crooked.folang import Const, Var, eval_formula, psi, zeta
from crooked.lattice import generate_sublattice
from crooked.metric_graph import (
    ClosedSet, Edge, MetricGraph, PLFunction, extract_sublattice, unit_segment,
)
from crooked.sigma import SentenceRecord, SigmaGenerator, fragment
from crooked.surgery import (
    CrookedStep, TriangleStep, check_monotone, crooked_step,
    eval_ground_geometric, lift_connected, nudge_edge_length,
    reinterpret_simple, triangle_step, verify_on_sublattice, witness_fragment,
)


def seg():
    return unit_segment()


def y_graph():
    return MetricGraph(
        ["c", "ta", "tb", "tc"],
        [Edge("la", "c", "ta", F(1)), Edge("lb", "c", "tb", F(1)), Edge("lc", "c", "tc", F(1))],
    )


def zeta_ground():
    return zeta(*(Const(k) for k in ("a", "b", "c", "x", "y", "z")))


def psi_ground():
    return psi(*(Const(k) for k in ("a", "b", "c", "d", "x", "y", "z")))


# ------------------------------------------------------------- triangle

def test_triangle_radial_identities():
    from crooked.surgery import triangle_radial
    for xi in ((F(0), F(1), F(0)), (F(1, 2), F(1, 2), F(0)), (F(0), F(1, 4), F(3, 4))):
        assert triangle_radial(xi, 1) == (F(1, 3), F(1, 3), F(1, 3))
        assert triangle_radial(xi, 0) == xi
        mid = triangle_radial(xi, F(1, 2))
        assert sum(mid) == 1


def test_triangle_no_locus_reinterprets_in_place():
    g = seg()
    a = g.point_closed_set([("v", "a")])
    b = g.point_closed_set([("v", "b")])
    c = g.point_closed_set([("e", "seg", F(1, 2))])
    step = triangle_step(g, a, b, c, {"a0": a})
    assert step.output_graph is g
    assert step.locus == []
    assert step.witnesses["x"].intervals["seg"] == ((F(0), F(1, 4)),)
    assert step.witnesses["y"].intervals["seg"] == ((F(3, 4), F(1)),)
    assert step.witnesses["z"].intervals["seg"] == ((F(1, 4), F(3, 4)),)
    assert step.interpretation["a0"] == a


def test_triangle_inserts_fiber_on_y_graph():
    g = y_graph()
    a = g.point_closed_set([("v", "ta")])
    b = g.point_closed_set([("v", "tb")])
    c = g.point_closed_set([("v", "tc")])
    step = triangle_step(g, a, b, c, {"A": a, "B": b, "C": c})
    out = step.output_graph
    assert step.locus == [("v", "c")]
    assert len(out.edges) == 9  # three legs plus a six-edge circle
    assert len(out.vertices) == 9
    assert step.bonding.is_surjective()
    assert check_monotone(step)
    # the leg toward each tip closes up at the matching side midpoint
    assert out.edges["la"].v == "ta" and out.edges["la"].u == "fib0.mA"
    assert out.edges["lb"].u == "fib0.mB"
    assert out.edges["lc"].u == "fib0.mC"
    # independent check of the dimension schema
    sets = {
        "a": step.interpretation["A"],
        "b": step.interpretation["B"],
        "c": step.interpretation["C"],
        "x": step.witnesses["x"],
        "y": step.witnesses["y"],
        "z": step.witnesses["z"],
    }
    assert verify_on_sublattice(zeta_ground(), sets, out)
    assert ((sets["x"] & sets["y"]) & sets["z"]).is_empty()


def test_triangle_preserves_prior_sentences():
    g = y_graph()
    a = g.point_closed_set([("v", "ta")])
    b = g.point_closed_set([("v", "tb")])
    c = g.point_closed_set([("v", "tc")])
    interp = {"A": a, "B": b, "C": c, "AB": a | b}
    from crooked.folang import And, Eq, Join, Meet, Zero
    prior = [
        Eq(Meet(Const("A"), Const("B")), Zero()),
        Eq(Join(Const("A"), Const("B")), Const("AB")),
    ]
    for f in prior:
        assert eval_ground_geometric(f, interp, g)
    step = triangle_step(g, a, b, c, interp)
    for f in prior:
        assert eval_ground_geometric(f, step.interpretation, step.output_graph)
        assert verify_on_sublattice(f, step.interpretation, step.output_graph)


def test_triangle_two_fibers_on_barbell():
    # symmetric barbell: both junction vertices are barycenter points
    g = MetricGraph(
        ["u", "v", "ta", "tb", "tc", "td"],
        [
            Edge("m", "u", "v", F(2)),
            Edge("la", "u", "ta", F(1)),
            Edge("lb", "u", "tb", F(1)),
            Edge("lc", "v", "tc", F(1)),
            Edge("ld", "v", "td", F(1)),
        ],
    )
    a = g.point_closed_set([("v", "ta"), ("v", "tc")])
    b = g.point_closed_set([("v", "tb"), ("v", "td")])
    c = g.point_closed_set([("e", "m", F(1))])
    step = triangle_step(g, a, b, c, {"A": a, "B": b, "C": c})
    assert step.locus == [("v", "u"), ("v", "v")]
    assert len(step.fibers) == 2
    assert step.bonding.is_surjective()
    assert check_monotone(step)
    sets = {
        "a": step.interpretation["A"],
        "b": step.interpretation["B"],
        "c": step.interpretation["C"],
        "x": step.witnesses["x"],
        "y": step.witnesses["y"],
        "z": step.witnesses["z"],
    }
    assert verify_on_sublattice(zeta_ground(), sets, step.output_graph)


def test_triangle_fiber_ids_skip_existing():
    # a graph that already carries fiber-style names (from an earlier step)
    # must get fresh fiber indices, not duplicates
    g = MetricGraph(
        ["c", "ta", "tb", "tc", "u", "w"],
        [
            Edge("la", "c", "ta", F(1)),
            Edge("lb", "c", "tb", F(1)),
            Edge("lc", "c", "tc", F(1)),
            Edge("fib0.A0", "ta", "u", F(1)),
            Edge("x1", "u", "w", F(1)),
        ],
    )
    a = g.point_closed_set([("v", "ta")])
    b = g.point_closed_set([("v", "tb")])
    c = g.point_closed_set([("v", "tc")])
    step = triangle_step(g, a, b, c, {})
    assert step.locus == [("v", "c")]
    out = step.output_graph
    assert "fib0.A0" in out.edges  # the pre-existing edge is untouched
    assert any(eid.startswith("fib1.") for eid in out.edges)
    assert check_monotone(step)


def test_triangle_requires_nonempty_inputs():
    g = seg()
    with pytest.raises(PreconditionError):
        triangle_step(g, g.empty_set(), g.whole_set(), g.whole_set(), {})


def test_triangle_degenerate_locus_reports_edge():
    # three unit legs at a hub plus a long tail: all three distances grow in
    # lockstep along the tail, so the barycenter locus contains the tail
    g = MetricGraph(
        ["u", "w1", "w2", "w3", "v"],
        [
            Edge("k1", "u", "w1", F(1)),
            Edge("k2", "u", "w2", F(1)),
            Edge("k3", "u", "w3", F(1)),
            Edge("tail", "u", "v", F(5)),
        ],
    )
    a = g.point_closed_set([("v", "w1")])
    b = g.point_closed_set([("v", "w2")])
    c = g.point_closed_set([("v", "w3")])
    with pytest.raises(DegeneracyError) as exc:
        triangle_step(g, a, b, c, {})
    assert exc.value.edge_id == "tail"
    # the documented denominator-doubling nudge on a symmetry-breaking edge
    g2 = nudge_edge_length(g, "k1")
    assert g2.edges["k1"].length == F(3, 2)
    a2 = g2.point_closed_set([("v", "w1")])
    b2 = g2.point_closed_set([("v", "w2")])
    c2 = g2.point_closed_set([("v", "w3")])
    step = triangle_step(g2, a2, b2, c2, {})
    assert len(step.locus) == 1
    assert check_monotone(step)


# ------------------------------------------------------------- crooked

def crooked_identity_instance():
    g = seg()
    a = g.point_closed_set([("v", "a")])
    b = g.point_closed_set([("v", "b")])
    c = ClosedSet(g, {"seg": [(F(0), F(1, 2))]}, set())
    d = ClosedSet(g, {"seg": [(F(1, 2), F(1))]}, set())
    return g, a, b, c, d


def test_crooked_identity_reproduces_staircase():
    g, a, b, c, d = crooked_identity_instance()
    step = crooked_step(g, a, b, c, d, {"A": a, "B": b, "C": c, "D": d})
    # the separating function on this instance is the identity
    assert step.separating.per_edge["seg"] == ((F(0), F(0)), (F(1), F(1)))
    out = step.output_graph
    assert step.component_count == 1
    assert len(out.edges) == 5  # five maximal segments
    degs = sorted(len(out.adjacency[v]) for v in out.vertices)
    assert degs.count(1) == 2 and set(degs) <= {1, 2}  # an arc
    assert step.bonding.is_surjective()


def test_crooked_membership_fiber_over_zero_level():
    g, a, b, c, d = crooked_identity_instance()
    step = crooked_step(g, a, b, c, d, {})
    # points with separating value 0 lift only to the first vertical level
    lifted_a = step.bonding.preimage_of(a)
    assert len(lifted_a.vertices) == 1
    (v,) = lifted_a.vertices
    assert v.startswith("t14|")
    assert not lifted_a.intervals


def test_crooked_witnesses_satisfy_psi():
    g, a, b, c, d = crooked_identity_instance()
    step = crooked_step(g, a, b, c, d, {"A": a, "B": b, "C": c, "D": d})
    out = step.output_graph
    sets = {
        "a": step.interpretation["A"],
        "b": step.interpretation["B"],
        "c": step.interpretation["C"],
        "d": step.interpretation["D"],
        "x": step.witnesses["x"],
        "y": step.witnesses["y"],
        "z": step.witnesses["z"],
    }
    assert verify_on_sublattice(psi_ground(), sets, out)
    # a's lift sits inside x and misses y and z
    assert sets["a"].is_subset_of(sets["x"])
    assert (sets["a"] & (sets["y"] | sets["z"])).is_empty()


def test_crooked_t_band_witnesses_fail_psi():
    # The staircase bands cut by the new coordinate hit the pinned sets in
    # the double intersections; this pins the choice of value-cut witnesses.
    g, a, b, c, d = crooked_identity_instance()
    step = crooked_step(g, a, b, c, d, {"A": a, "B": b, "C": c, "D": d})
    out = step.output_graph
    t_of_prefix = {"t14": F(1, 4), "t12": F(1, 2), "t34": F(3, 4)}

    def t_band(lo, hi):
        intervals = {}
        verts = set()
        for eid, e in out.edges.items():
            prefix = eid.split("|", 1)[0]
            if prefix in t_of_prefix:
                t = t_of_prefix[prefix]
                if lo <= t <= hi:
                    intervals[eid] = [(F(0), e.length)]
                    verts.update((e.u, e.v))
            else:  # horizontal edge: parameter runs over the new coordinate
                t0 = F(1, 4) if prefix == "h23" else F(1, 2)
                seg_lo, seg_hi = max(lo - t0, F(0)), min(hi - t0, F(1, 4))
                if seg_lo <= seg_hi:
                    intervals[eid] = [(seg_lo, seg_hi)]
        return ClosedSet(out, intervals, verts)

    bands = {
        "x": t_band(F(0), F(3, 8)),
        "y": t_band(F(3, 8), F(5, 8)),
        "z": t_band(F(5, 8), F(1)),
    }
    sets = {
        "a": step.interpretation["A"],
        "b": step.interpretation["B"],
        "c": step.interpretation["C"],
        "d": step.interpretation["D"],
        **bands,
    }
    assert not verify_on_sublattice(psi_ground(), sets, out)
    assert not ((bands["x"] & bands["y"]) & sets["d"]).is_empty()


def test_crooked_unique_onto_component_among_many():
    # A valley dipping from above 2/3 to 2/5 and back creates an isolated
    # low+mid cycle in the staircase with no contact with the 1/3 level.
    g = seg()
    a = g.point_closed_set([("v", "a")])
    b = g.point_closed_set([("v", "b")])
    f = PLFunction(
        g,
        {"seg": [(F(0), F(0)), (F(1, 4), F(1)), (F(3, 8), F(2, 5)),
                 (F(1, 2), F(1)), (F(1), F(1))]},
    )
    step = crooked_step(g, a, b, g.empty_set(), g.empty_set(), {}, separating=f)
    assert step.component_count == 2
    assert step.bonding.is_surjective()


def test_crooked_degenerate_level_set():
    g = seg()
    a = g.point_closed_set([("v", "a")])
    b = g.point_closed_set([("v", "b")])
    f = PLFunction(
        g, {"seg": [(F(0), F(0)), (F(1, 4), F(1, 3)), (F(1, 2), F(1, 3)), (F(1), F(1))]}
    )
    with pytest.raises(DegeneracyError) as exc:
        crooked_step(g, a, b, g.empty_set(), g.empty_set(), {}, separating=f)
    assert exc.value.edge_id == "seg"


def test_crooked_phi_precondition():
    g, a, b, c, d = crooked_identity_instance()
    with pytest.raises(PreconditionError):
        crooked_step(g, a, b, d, c, {})  # swapped pins violate a # d


# ------------------------------------------------------------- lifts

def test_lift_connected_whole_and_point():
    g, a, b, c, d = crooked_identity_instance()
    step = crooked_step(g, a, b, c, d, {})
    whole = lift_connected(step, g.whole_set())
    assert whole == step.output_graph.whole_set()
    pt = lift_connected(step, a)
    assert step.bonding.image_of(pt) == a


def test_lift_connected_case_one_interval():
    g, a, b, c, d = crooked_identity_instance()
    step = crooked_step(g, a, b, c, d, {})
    low = ClosedSet(g, {"seg": [(F(0), F(1, 4))]}, set())
    lifted = lift_connected(step, low)
    assert step.bonding.image_of(lifted) == low
    assert len(step.output_graph.components_of(lifted)) == 1
    # the lift lives on the first vertical level
    assert all(eid.startswith("t14|") for eid in lifted.intervals)


def test_lift_connected_triangle_full_preimage():
    g = y_graph()
    a = g.point_closed_set([("v", "ta")])
    b = g.point_closed_set([("v", "tb")])
    c = g.point_closed_set([("v", "tc")])
    step = triangle_step(g, a, b, c, {})
    sub = ClosedSet(g, {"la": [(F(0), F(1, 2))], "lb": [(F(0), F(1, 2))]}, {"c"})
    lifted = lift_connected(step, sub)
    assert step.bonding.image_of(lifted) == sub
    assert len(step.output_graph.components_of(lifted)) == 1
    with pytest.raises(PreconditionError):
        lift_connected(step, a | b)  # disconnected input


# ------------------------------------------------------------- requests

def test_reinterpret_meet_join():
    g = seg()
    s = ClosedSet(g, {"seg": [(F(0), F(1, 2))]}, set())
    t = ClosedSet(g, {"seg": [(F(1, 4), F(1))]}, set())
    interp = reinterpret_simple(g, {"s": s, "t": t}, ("meet", "s", "t", "k"))
    assert interp["k"] == (s & t)
    interp = reinterpret_simple(g, interp, ("join", "s", "t", "j"))
    assert interp["j"] == (s | t)


def test_reinterpret_normality_bisectors():
    g = seg()
    a = g.point_closed_set([("v", "a")])
    b = g.point_closed_set([("v", "b")])
    interp = reinterpret_simple(g, {"a": a, "b": b}, ("normal", "a", "b", "k1", "k2"))
    # k1 misses b (the larger constant), k2 misses a
    assert interp["k1"] == ClosedSet(g, {"seg": [(F(0), F(1, 2))]}, set())
    assert interp["k2"] == ClosedSet(g, {"seg": [(F(1, 2), F(1))]}, set())
    assert (interp["k1"] | interp["k2"]) == g.whole_set()


def test_reinterpret_normality_vacuous():
    g = seg()
    s = ClosedSet(g, {"seg": [(F(0), F(1, 2))]}, set())
    interp = reinterpret_simple(g, {"a": s, "b": s}, ("normal", "a", "b", "k1", "k2"))
    assert interp["k1"].is_empty() and interp["k2"].is_empty()


def test_reinterpret_disjunctivity_point():
    g = seg()
    a = ClosedSet(g, {"seg": [(F(0), F(1, 2))]}, set())
    b = g.point_closed_set([("v", "a")])
    interp = reinterpret_simple(g, {"a": a, "b": b}, ("disj", "a", "b", "k"))
    k = interp["k"]
    assert not k.is_empty()
    assert k.is_subset_of(a)
    assert (k & b).is_empty()


# ------------------------------------------------------------- fragments

def chain3_setup():
    base = generate_sublattice({1, 2}, [{1}, {1, 2}])
    g = seg()
    gen_sets = {
        "0": ClosedSet(g, {"seg": [(F(0), F(1, 2))]}, set()),
        "1": g.whole_set(),
    }
    from crooked.surgery import base_interpretation
    interp0 = base_interpretation(base, gen_sets, g)
    return base, g, interp0


def test_base_interpretation_replays_derivations():
    base, g, interp0 = chain3_setup()
    assert len(interp0) == base.size
    assert interp0[f"k(-1,{base.bottom_index})"].is_empty()
    assert interp0[f"k(-1,{base.top_index})"] == g.whole_set()


def test_witness_fragment_full_pipeline():
    base, g, interp0 = chain3_setup()
    gen = SigmaGenerator(base, budget=16)
    records = gen.generate_through(5)
    frag = fragment(records, 38)
    kinds = {r.kind for r in frag}
    assert "zeta" in kinds and "theta" in kinds
    result = witness_fragment(frag, g, interp0)
    assert result.ok, [line for line, ok in result.report if not ok]
    # determinism: a second run produces identical report and trace
    result2 = witness_fragment(frag, g, interp0)
    assert result.report == result2.report
    assert result.trace == result2.trace


def test_witness_fragment_surgery_rich_pipeline():
    # diagram through both schemata with enough budget that satisfiable
    # instances exist: two fiber insertions and two staircases, everything
    # re-verified true, deterministic across runs
    base = generate_sublattice({0, 1, 2}, [{0}, {2}, {0, 1, 2}], names=["g0", "g1", "g2"])
    g = seg()
    gen_sets = {
        "g0": g.point_closed_set([("v", "a")]),
        "g1": g.point_closed_set([("v", "b")]),
        "g2": g.whole_set(),
    }
    from crooked.surgery import base_interpretation
    from crooked.sigma import SigmaGenerator, fragment as take_fragment
    interp0 = base_interpretation(base, gen_sets, g)
    gen = SigmaGenerator(base, budget=96)
    records = gen.generate_through(5)
    usable = len([r for r in records if not r.ignorable])
    frag = take_fragment(records, usable)
    result = witness_fragment(frag, g, interp0, cap=8192)
    assert result.ok, [line for line, ok in result.report if not ok][:3]
    actions = [t["action"] for t in result.trace]
    assert actions.count("triangle") >= 2
    assert actions.count("crooked") >= 2
    assert result.graph.meta.get("fibers")
    result2 = witness_fragment(frag, g, interp0, cap=8192)
    assert result.report == result2.report and result.trace == result2.trace


def test_witness_fragment_triangle_trace():
    g = y_graph()
    interp0 = {
        "A": g.point_closed_set([("v", "ta")]),
        "B": g.point_closed_set([("v", "tb")]),
        "C": g.point_closed_set([("v", "tc")]),
    }
    rec = SentenceRecord(
        4, None, 0, "zeta",
        zeta(Const("A"), Const("B"), Const("C"), Const("x0"), Const("y0"), Const("z0")),
        operands=("A", "B", "C"), fresh=("x0", "y0", "z0"),
    )
    result = witness_fragment([rec], g, interp0)
    assert result.ok
    assert [t["action"] for t in result.trace] == ["triangle"]
    assert len(result.graph.edges) == 9


def test_witness_fragment_crooked_trace_and_eval():
    g, a, b, c, d = crooked_identity_instance()
    interp0 = {"A": a, "B": b, "C": c, "D": d}
    from crooked.folang import theta
    rec = SentenceRecord(
        5, None, 0, "theta",
        theta(*(Const(k) for k in ("A", "B", "C", "D", "x0", "y0", "z0"))),
        operands=("A", "B", "C", "D"), fresh=("x0", "y0", "z0"),
    )
    result = witness_fragment([rec], g, interp0)
    assert result.ok
    assert [t["action"] for t in result.trace] == ["crooked"]


def test_witness_fragment_vacuous_and_shortcut():
    g = seg()
    s = ClosedSet(g, {"seg": [(F(0), F(1, 2))]}, set())
    interp0 = {"A": g.empty_set(), "B": s, "C": g.whole_set()}
    rec = SentenceRecord(
        4, None, 0, "zeta",
        zeta(Const("A"), Const("B"), Const("C"), Const("x0"), Const("y0"), Const("z0")),
        operands=("A", "B", "C"), fresh=("x0", "y0", "z0"),
    )
    result = witness_fragment([rec], g, interp0)
    assert result.ok
    assert result.trace == []  # shortcut, no surgery
    assert result.interpretation["x0"].is_empty()
    assert result.interpretation["y0"] == g.whole_set()


def test_witness_fragment_hat_constant_lifts_connected():
    from crooked.folang import And, Eq, Meet, conn, theta
    g, a, b, c, d = crooked_identity_instance()
    sub = ClosedSet(g, {"seg": [(F(0), F(1, 4))]}, set())
    holder = ClosedSet(g, {"seg": [(F(0), F(1, 2))]}, set())
    interp0 = {
        "A": a, "B": b, "C": c, "D": d,
        "k(-2,0)": sub, "k(-1,0)": holder,
    }
    hat = SentenceRecord(
        -1, 0, 0, "hat-conn",
        And(conn(Const("k(-2,0)")),
            Eq(Meet(Const("k(-2,0)"), Const("k(-1,0)")), Const("k(-2,0)"))),
        operands=("k(-2,0)", "k(-1,0)"),
    )
    thet = SentenceRecord(
        5, None, 0, "theta",
        theta(*(Const(k) for k in ("A", "B", "C", "D", "x0", "y0", "z0"))),
        operands=("A", "B", "C", "D"), fresh=("x0", "y0", "z0"),
    )
    result = witness_fragment([hat, thet], g, interp0)
    assert result.ok, result.report
    lifted = result.interpretation["k(-2,0)"]
    # the catalog constant stays connected and under its holder
    assert len(result.graph.components_of(lifted)) == 1
    assert lifted.is_subset_of(result.interpretation["k(-1,0)"])
    # plain pullback of the subcontinuum would be disconnected here: the
    # staircase puts two verticals over [0, 1/4]
    pulled = result.interpretation["C"] & result.interpretation["k(-1,0)"]
    assert not lifted == pulled


def test_surgery_outputs_model_connectivity_sentence():
    from crooked.folang import LIBRARY
    from crooked.metric_graph import extract_sublattice
    g, a, b, c, d = crooked_identity_instance()
    step = crooked_step(g, a, b, c, d, {"A": a, "B": b, "C": c, "D": d})
    named = dict(step.interpretation)
    named.update(step.witnesses)
    res = extract_sublattice(step.output_graph, named)
    assert eval_formula(LIBRARY["CONN1"], res.lattice).value
    assert step.output_graph.is_connected()


def test_witness_fragment_nudges_degenerate_instance():
    g = MetricGraph(
        ["u", "w1", "w2", "w3", "v"],
        [
            Edge("k1", "u", "w1", F(1)),
            Edge("k2", "u", "w2", F(1)),
            Edge("k3", "u", "w3", F(1)),
            Edge("tail", "u", "v", F(5)),
        ],
    )
    interp0 = {
        "A": g.point_closed_set([("v", "w1")]),
        "B": g.point_closed_set([("v", "w2")]),
        "C": g.point_closed_set([("v", "w3")]),
    }
    rec = SentenceRecord(
        4, None, 0, "zeta",
        zeta(Const("A"), Const("B"), Const("C"), Const("x0"), Const("y0"), Const("z0")),
        operands=("A", "B", "C"), fresh=("x0", "y0", "z0"),
    )
    result = witness_fragment([rec], g, interp0)
    assert result.ok
    assert any(t["action"] == "nudge" for t in result.trace)
    assert any(t["action"] == "triangle" for t in result.trace)
