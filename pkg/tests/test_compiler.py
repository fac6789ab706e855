"""Lowering: structural counts, determinism, dual-rail, block semantics."""

import math

import pytest

from sculpt import fock
from sculpt.bigraph import Edge, InternalState, SculptingBigraph, ghz, type5, w
from sculpt.circuit import (DUAL_RAIL, CircuitSchemaError, Multiport,
                            parse_circuit, serialize_circuit, circuit_to_dot,
                            validate)
from sculpt.compiler import CompileError, compile_graph, to_dual_rail
from sculpt.fock import FockState
from sculpt import sim

R2 = 1.0 / math.sqrt(2.0)


def test_ghz_structural_counts():
    for n in (2, 3, 4, 5):
        c = compile_graph(ghz(n))
        assert c.count_elements("pbs") == 3 * n
        assert len(c.detector_wires()) == 2 * n
        assert c.count_elements("bs") == 0
        assert c.count_elements("multiport") == 0
        assert len(c.detector_groups) == n
        assert validate(c) == []


def test_w_structural_counts():
    n = 3
    c = compile_graph(w(n))
    # one n-partite Fourier port fans the ancilla photon out
    assert c.count_elements("multiport", stage="split", ports=n) == 1
    assert len(c.detector_groups) == n + 1
    assert validate(c) == []


def test_type5_structural_counts():
    c = compile_graph(type5())
    assert c.count_elements("bs", stage="split") == 1
    assert c.count_elements("multiport", stage="split", ports=3) == 2
    assert len(c.detector_groups) == 6
    assert validate(c) == []


def test_source_and_prep_counts():
    g = w(3)
    c = compile_graph(g)
    assert c.count_elements("source") == 2 * 3 + 1
    assert c.count_elements("hwp", stage="prep") == 3 + 1
    # one merge marker per main mode
    assert c.count_elements("merge") == 3


def test_compile_deterministic():
    for g in (ghz(3), w(3), type5()):
        assert serialize_circuit(compile_graph(g)) == serialize_circuit(compile_graph(g))


def test_compile_rejects_non_epm():
    edges = list(ghz(3).edges)
    edges[0] = Edge(edges[0].mode, edges[0].dot, edges[0].amplitude,
                    InternalState.zero())
    bad = SculptingBigraph(3, (), tuple(edges))
    with pytest.raises(CompileError) as err:
        compile_graph(bad)
    assert any("circle" in d for d in err.value.diagnostics)


def test_compile_rejects_unequal_magnitudes():
    edges = (Edge("1", 1, 0.6, InternalState.plus()),
             Edge("2", 1, -0.8, InternalState.minus()),
             Edge("2", 2, 0.8, InternalState.plus()),
             Edge("1", 2, -0.6, InternalState.minus()))
    g = SculptingBigraph(2, (), edges)
    with pytest.raises(CompileError) as err:
        compile_graph(g)
    assert any("magnitude" in d for d in err.value.diagnostics)


def test_photon_budget_structure():
    for g in (ghz(3), w(3), type5()):
        c = compile_graph(g)
        n, k = g.n_main, g.n_ancilla
        sourced = sum(el.photons for el in c.elements if el.kind == "source")
        assert sourced == 2 * n + k
        assert sum(grp.required for grp in c.detector_groups) == n + k
        assert len(c.detector_groups) == g.n_dots
        assert len(c.outputs) == 2 * n  # one H and one V rail per output mode


def test_compile_rejects_mixed_return_styles():
    # mode 1 feeds an optimized subtractor with its |+> edge and a general
    # (ancilla-sharing) subtractor with its |-> edge; both returns would
    # land on the same location, which has no known realization
    edges = (Edge("1", 1, R2, InternalState.plus()),
             Edge("2", 1, -R2, InternalState.minus()),
             Edge("2", 2, R2, InternalState.plus()),
             Edge("X", 2, R2, InternalState.zero()),
             Edge("1", 3, -R2, InternalState.minus()),
             Edge("X", 3, R2, InternalState.zero()))
    g = SculptingBigraph(2, ("X",), edges)
    with pytest.raises(CompileError) as err:
        compile_graph(g)
    assert any("collides" in d for d in err.value.diagnostics)


def test_roundtrip_serialization():
    for g in (ghz(3), w(3), type5()):
        c = compile_graph(g)
        text = serialize_circuit(c)
        c2 = parse_circuit(text)
        assert serialize_circuit(c2) == text
        assert validate(c2) == []


def test_parse_rejects_unknown_kind():
    c = compile_graph(ghz(2))
    text = serialize_circuit(c).replace('"kind": "hwp"', '"kind": "wat"', 1)
    with pytest.raises(CircuitSchemaError):
        parse_circuit(text)


def test_validate_flags_overlapping_groups():
    c = compile_graph(ghz(2))
    g0 = c.detector_groups[0]
    c.detector_groups.append(g0)
    assert any("overlaps" in d for d in validate(c))


def test_validate_flags_undeclared_wire():
    c = compile_graph(ghz(2))
    c.elements.append(Multiport(((998,), (999,)), "mix"))
    assert any("undeclared" in d for d in validate(c))


def test_dual_rail_w3():
    c = compile_graph(w(3))
    d = to_dual_rail(c)
    assert d.count_elements("pbs") == 0
    assert d.encoding == DUAL_RAIL
    assert validate(d) == []
    # every wave plate becomes exactly one balanced splitter
    plates = c.count_elements("hwp") + c.count_elements("uhwp")
    two_ports = c.count_elements("bs")
    assert d.count_elements("bs") == plates + two_ports
    with pytest.raises(ValueError):
        to_dual_rail(d)


def test_dual_rail_channels_renamed():
    d = to_dual_rail(compile_graph(ghz(2)))
    assert {w.channel for w in d.wires} == {"0", "1"}


def test_compile_dual_rail_flag():
    d = compile_graph(w(2), encoding=DUAL_RAIL)
    assert d.encoding == DUAL_RAIL and d.count_elements("pbs") == 0


def test_circuit_dot_export():
    c = compile_graph(ghz(2))
    dot = circuit_to_dot(c)
    assert "digraph" in dot and "pbs" in dot and "detect" in dot


def _isolated_block_outcomes(g, dot, feed):
    """Build a mini circuit exercising one subtractor block on custom input.

    ``feed`` maps circle labels to the photon monomials entering the block's
    legs; returns herald outcomes of the lone detector group."""
    c = compile_graph(g)
    layout = c.layout
    blk = layout.blocks[dot]
    keep = [el for el in c.elements
            if el.stage in ("subtract", "merge", "mix")
            and set(el.wires_used()) & _block_wires(layout, blk)]
    groups = [grp for grp in c.detector_groups if grp.gid == dot]
    mini = type(c)(c.wires, keep, groups, c.outputs, c.output_modes,
                   c.encoding, layout=layout)
    state = feed
    for el in keep:
        state = sim.apply_element(state, el)
    det = sorted(groups[0].wires)
    outcomes = []
    for sig, comp in fock.group_by_counts(state, det):
        if sum(n for _, n in sig) == groups[0].required:
            outcomes.append((sig, comp))
    return outcomes


def _block_wires(layout, blk):
    locs = set(blk.tap_locs)
    for leg in blk.main_legs:
        locs |= {leg.leg_loc, leg.tap_loc, leg.ret_loc, leg.circle}
    for leg in blk.anc_legs:
        locs.add(leg.leg_loc)
    wires = set()
    for loc in locs:
        if loc:
            wires |= set(layout.loc_wires[loc].values())
    return wires


def test_optimized_block_acts_like_its_dot():
    # feed dot 1's block of the two-mode ring the paired-bunch input and
    # check the heralded action matches (a_{1,+} - a_{2,-})/r2 applied to
    # the bunches, mode by mode, up to per-pattern phases
    g = ghz(2)
    c = compile_graph(g)
    layout = c.layout
    blk = layout.blocks[1]
    t = blk.main_legs[0].leg_loc      # red leg: carries H photons of mode 1
    b = blk.main_legs[1].leg_loc      # blue leg: carries V photons of mode 2
    th = layout.wire(t, "H")
    bv = layout.wire(b, "V")
    # input (a†²_{t,H} - a†²_{b,V})/2: the relevant two-photon content
    feed = fock.add_scaled(
        fock.scale(FockState.from_counts({th: 2}), 0.5 * math.sqrt(2)),
        -0.5 * math.sqrt(2), FockState.from_counts({bv: 2}))
    outcomes = _isolated_block_outcomes(g, 1, feed)
    assert len(outcomes) == 2
    for sig, comp in outcomes:
        # one photon detected, one survives on the block's return location
        residual = fock.strip_wires(comp, dict(sig))
        kept = {w for w, _ in next(residual.terms())[0]}
        assert kept <= {layout.wire(t, "H"), layout.wire(t, "V")}
        assert abs(fock.norm2(residual) - 0.25) < 1e-9
