"""Exact Fock-space simulation of circuits with heralded post-selection.

The propagated state is held sparsely; every element is either a wire
permutation or a linear substitution on creation operators, so propagation
is exact up to floating point.  Heralding buckets the final state by its
detector-wire occupation signature: each signature that meets every
detector group's required count becomes one outcome with an exact
conditional residual state and probability.

Feed-forward classification searches, per outcome, for local corrections of
the form X^a * diag(1, e^{i phi}) per output mode (bit flip optional,
diagonal phase solved exactly) that map the residual onto the target; an
outcome is identity-correct when no correction is needed.
"""

from __future__ import annotations

import cmath
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import fock
from .circuit import (Circuit, HWP, Multiport, PBS, ReturnMerge, Source,
                      STAGES, Swap, UHWP, validate)
from .fock import FockState
from .sculpting import QubitState, to_qubit_state

_R2 = 1.0 / math.sqrt(2.0)


class SimulationError(RuntimeError):
    pass


def _fourier(n: int) -> list[list[complex]]:
    return [[cmath.exp(2j * math.pi * j * k / n) / math.sqrt(n)
             for j in range(n)] for k in range(n)]


def apply_element(state: FockState, el, *, _dft_cache: dict = {}) -> FockState:
    """Apply one element's action; unknown elements raise."""
    if isinstance(el, Source):
        out = state
        for _ in range(el.photons):
            out = fock.create(out, el.wire)
        return fock.scale(out, 1.0 / math.sqrt(math.factorial(el.photons)))
    if isinstance(el, HWP):
        rules = {el.h: ((el.h, _R2), (el.v, _R2)),
                 el.v: ((el.h, _R2), (el.v, -_R2))}
        return fock.substitute(state, rules)
    if isinstance(el, UHWP):
        rules = {el.h: ((el.h, -_R2), (el.v, _R2)),
                 el.v: ((el.h, _R2), (el.v, _R2))}
        return fock.substitute(state, rules)
    if isinstance(el, PBS):
        return fock.relabel(state, {el.a_v: el.b_v, el.b_v: el.a_v})
    if isinstance(el, Multiport):
        n = el.n
        if n not in _dft_cache:
            _dft_cache[n] = _fourier(n)
        u = _dft_cache[n]
        rules: dict[int, tuple] = {}
        arity = len(el.ports[0])
        for slot in range(arity):
            for j in range(n):
                rules[el.ports[j][slot]] = tuple(
                    (el.ports[k][slot], u[k][j]) for k in range(n))
        return fock.substitute(state, rules)
    if isinstance(el, (Swap, ReturnMerge)):
        if not el.mapping:
            return state
        return fock.relabel(state, dict(el.mapping))
    raise SimulationError(f"unknown element {el!r}")


def run(circuit: Circuit, through_stage: str | None = None) -> FockState:
    """Propagate the sources through the elements, optionally stopping after
    the named pipeline stage (inclusive)."""
    state = FockState.vacuum()
    limit = STAGES.index(through_stage) if through_stage is not None else len(STAGES)
    for el in circuit.elements:
        stage_idx = STAGES.index(el.stage) if el.stage in STAGES else 0
        if stage_idx > limit:
            continue
        state = apply_element(state, el)
    return state


def filtered_state(circuit: Circuit) -> FockState:
    """Heralding filter applied before the which-path mixers: the component
    of the post-merge state whose pre-mix tap wires hold exactly the required
    photon count per subtractor.  Unnormalized."""
    layout = circuit.layout
    if layout is None:
        raise SimulationError("circuit carries no layout metadata")
    state = run(circuit, "merge")
    for grp in circuit.detector_groups:
        blk = layout.blocks[grp.gid]
        state, _ = fock.project_count(state, blk.pre_mix_wires, grp.required)
    return state


# ---------------------------------------------------------------------------
# Heralded outcomes
# ---------------------------------------------------------------------------

@dataclass
class HeraldOutcome:
    """One detector pattern with its conditional residual state."""

    pattern: tuple[tuple[int, int], ...]   # (wire, count), detected wires only
    probability: float
    residual: FockState                    # normalized, on output wires
    correction: tuple[str, ...] | None = None
    corrected_fidelity: float | None = None
    identity: bool = False

    def pattern_dict(self) -> dict[int, int]:
        return dict(self.pattern)


def _mix_closures(circuit: Circuit, tail: list) -> dict[int, set[int]] | None:
    """Backward data-flow closure of each detector group over the trailing
    mixer elements.  Valid (returned) only when every trailing element acts
    within a single group's cone and the cones are pairwise disjoint; then
    the heralding count filter commutes with the trailing elements."""
    cones = {grp.gid: set(grp.wires) for grp in circuit.detector_groups}
    for el in reversed(tail):
        used = set(el.wires_used())
        touched = [gid for gid, cone in cones.items() if cone & used]
        if len(touched) > 1:
            return None
        if touched:
            cones[touched[0]] |= used
    everything: set[int] = set()
    for cone in cones.values():
        if everything & cone:
            return None
        everything |= cone
    if everything & set(circuit.outputs):
        return None
    return cones


def run_heralded(circuit: Circuit, check: bool = True) -> list[HeraldOutcome]:
    """Enumerate every detector signature meeting all group requirements.

    Outcome probabilities sum to the scheme's total heralding probability.
    Signatures violating any group's required count are dropped; a detector
    budget exceeding the photon supply therefore yields an empty list.

    The required-count filter is applied before the trailing which-path
    mixers whenever that provably commutes (it always does for compiled
    circuits); this only prunes terms that every group would reject.
    """
    if check:
        diags = validate(circuit)
        if diags:
            raise SimulationError("invalid circuit: " + "; ".join(diags))
    split = next((i for i, el in enumerate(circuit.elements) if el.stage == "mix"),
                 len(circuit.elements))
    tail = circuit.elements[split:]
    cones = _mix_closures(circuit, tail) if tail else None
    if cones is not None:
        final = FockState.vacuum()
        for el in circuit.elements[:split]:
            final = apply_element(final, el)
        for grp in circuit.detector_groups:
            final, _ = fock.project_count(final, cones[grp.gid], grp.required)
        for el in tail:
            final = apply_element(final, el)
    else:
        final = run(circuit)
    det_wires = sorted(circuit.detector_wires())
    out_wires = set(circuit.outputs)
    outcomes: list[HeraldOutcome] = []
    for sig, comp in fock.group_by_counts(final, det_wires):
        counts = dict(sig)
        if any(sum(counts.get(w, 0) for w in grp.wires) != grp.required
               for grp in circuit.detector_groups):
            continue
        prob = fock.norm2(comp)
        residual = fock.strip_wires(comp, det_wires)
        stray = residual.wires() - out_wires
        if stray:
            raise SimulationError(
                f"herald left photons on non-output wires {sorted(stray)}")
        residual = fock.scale(residual, 1.0 / math.sqrt(prob))
        outcomes.append(HeraldOutcome(sig, prob, residual))
    return outcomes


def signature_distribution(circuit: Circuit) -> dict[tuple, float]:
    """Full probability distribution over detector signatures (accepted or
    not); the values sum to one for a normalized source state."""
    final = run(circuit)
    det_wires = sorted(circuit.detector_wires())
    return {sig: fock.norm2(comp)
            for sig, comp in fock.group_by_counts(final, det_wires)}


def residual_qubits(outcome: HeraldOutcome, circuit: Circuit,
                    basis: str = "diagonal") -> QubitState:
    """Read an outcome's residual into qubit amplitudes.

    Output rails are polarization H/V (or rails 0/1), which encode the
    diagonal +/- pair."""
    rails = []
    for mode in circuit.output_modes:
        pair = circuit.mode_wires(mode)
        key0, key1 = ("H", "V") if "H" in pair else ("0", "1")
        rails.append((pair[key0], pair[key1]))
    return to_qubit_state(outcome.residual, rails, rails="diagonal", basis=basis)


# ---------------------------------------------------------------------------
# Feed-forward classification
# ---------------------------------------------------------------------------

_ANGLE_TOL = 1e-7


def _wrap(a: float) -> float:
    return (a + math.pi) % (2.0 * math.pi) - math.pi


def _phase_solutions(rows: list[np.ndarray], angles: list[float], n: int):
    """Solutions x of sum_k rows[i][k] x_k = angles[i] (mod 2pi), free vars 0.

    Integer coefficient matrix; eliminates with unit pivots, branches on
    single-variable rows with larger coefficients, rejects anything else.
    Yields candidate x vectors (possibly none).
    """
    eqs = [(r.astype(float).copy(), float(a)) for r, a in zip(rows, angles)]
    pivots: list[tuple[int, np.ndarray, float]] = []
    while True:
        pick = None
        for i, (r, a) in enumerate(eqs):
            units = np.where(np.abs(np.abs(r) - 1.0) < 1e-9)[0]
            if units.size:
                pick = (i, int(units[0]))
                break
        if pick is None:
            break
        i, k = pick
        r, a = eqs.pop(i)
        if r[k] < 0:
            r, a = -r, -a
        pivots.append((k, r, a))
        for j, (rj, aj) in enumerate(eqs):
            m = rj[k]
            if m:
                eqs[j] = (rj - m * r, aj - m * a)

    branch_vars: list[tuple[int, int, float]] = []
    for r, a in eqs:
        nz = np.where(np.abs(r) > 1e-9)[0]
        if nz.size == 0:
            if abs(_wrap(a)) > _ANGLE_TOL:
                return
            continue
        if nz.size == 1:
            d = int(round(abs(r[nz[0]])))
            if d == 0 or abs(r[nz[0]] - round(r[nz[0]])) > 1e-9 or d > 6:
                return
            branch_vars.append((int(nz[0]), d, a / r[nz[0]]))
        else:
            return

    def assemble(choices: list[int]):
        x = np.zeros(n)
        for (k, d, base), c in zip(branch_vars, choices):
            x[k] = base + 2.0 * math.pi * c / d
        for k, r, a in reversed(pivots):
            x[k] = a - (float(r @ x) - r[k] * x[k])
        return x

    def rec(i: int, choices: list[int]):
        if i == len(branch_vars):
            yield assemble(choices)
            return
        for c in range(branch_vars[i][1]):
            yield from rec(i + 1, choices + [c])

    yield from rec(0, [])


def solve_correction(residual: QubitState, target: QubitState,
                     atol: float = 1e-9) -> tuple[tuple[str, ...], float] | None:
    """Per-mode correction X^a * diag(1, e^{i phi}) mapping residual onto
    target (up to global phase), or None when no such correction exists.

    Returns the per-mode labels and the corrected fidelity (>= 1 - atol).
    """
    if residual.basis != target.basis:
        target = target.in_basis(residual.basis)
    r = residual.normalized().amps
    t = target.normalized().amps
    if r.size != t.size:
        raise ValueError("qubit counts differ")
    n = residual.n_qubits
    supp = np.where(np.abs(t) > 1e-10)[0]
    off_supp = np.setdiff1d(np.arange(r.size), supp)
    all_bits = ((np.arange(r.size)[:, None] >> np.arange(n - 1, -1, -1)) & 1).astype(int)
    for a_mask in range(2 ** n):
        perm = r[np.arange(r.size) ^ a_mask]
        if np.any(np.abs(np.abs(perm[supp]) - np.abs(t[supp])) > 1e-7):
            continue
        if np.any(np.abs(perm[off_supp]) > 1e-7):
            continue
        q = np.angle(t[supp] / perm[supp])
        bits = all_bits[supp]
        rows = [bits[i] - bits[0] for i in range(1, len(supp))]
        angles = [_wrap(q[i] - q[0]) for i in range(1, len(supp))]
        for x in _phase_solutions(rows, angles, n):
            corrected = np.exp(1j * (all_bits @ x)) * perm
            fid = abs(np.vdot(t, corrected)) ** 2 / float(np.vdot(corrected, corrected).real)
            if fid >= 1.0 - atol:
                return _labels(a_mask, x, n), float(fid)
    return None


def _labels(a_mask: int, x: np.ndarray, n: int) -> tuple[str, ...]:
    out = []
    for k in range(n):
        flip = (a_mask >> (n - 1 - k)) & 1
        phi = _wrap(float(x[k]))
        if abs(phi) <= 1e-7:
            p = ""
        elif abs(abs(phi) - math.pi) <= 1e-7:
            p = "Z"
        else:
            frac = Fraction(phi / math.pi).limit_denominator(12)
            if abs(phi - float(frac) * math.pi) <= 1e-7:
                p = f"P({frac}pi)" if frac != 1 else "Z"
            else:
                p = f"P({phi:.6f})"
        f = "X" if flip else ""
        label = (f + p) or "I"
        out.append(label)
    return tuple(out)


def classify_feedforward(outcomes: Sequence[HeraldOutcome], target: QubitState,
                         circuit: Circuit, atol: float = 1e-9,
                         threads: int | None = None) -> list[HeraldOutcome]:
    """Populate correction labels on a copy of each outcome.

    Outcomes split into identity-correct (no correction needed, up to global
    phase), correctable (a local correction reaches the target exactly), and
    failed (correction is None).
    """

    def one(oc: HeraldOutcome) -> HeraldOutcome:
        qs = residual_qubits(oc, circuit, basis=target.basis)
        found = solve_correction(qs, target, atol)
        if found is None:
            return replace(oc, correction=None, corrected_fidelity=None,
                           identity=False)
        labels, fid = found
        identity = all(l == "I" for l in labels)
        return replace(oc, correction=labels, corrected_fidelity=fid,
                       identity=identity)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, outcomes))
    return [one(oc) for oc in outcomes]


def success_probability(outcomes: Iterable[HeraldOutcome],
                        mode: str = "with_ff") -> float:
    """Total probability of accepted outcomes.

    ``with_ff`` sums every correctable outcome (identity included);
    ``without_ff`` sums only identity-correct outcomes."""
    if mode == "with_ff":
        return sum(oc.probability for oc in outcomes if oc.correction is not None)
    if mode == "without_ff":
        return sum(oc.probability for oc in outcomes if oc.identity)
    raise ValueError(f"unknown mode {mode!r}")
