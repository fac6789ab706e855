"""Exact sparse second-quantized state algebra.

States live in the bosonic Fock space over an arbitrary set of integer wire
ids (one id per single-mode channel, e.g. one spatial path with one
polarization).  A state is a sparse complex superposition of occupation
vectors; all operations are pure and return new states, so values can be
shared freely across threads.

Conventions:
    * amplitudes below ``DROP_TOL`` are dropped at insertion,
    * comparisons use absolute tolerance ``ATOL``,
    * an empty term map is the zero state.
"""

from __future__ import annotations

import math
from typing import Callable, Iterable, Iterator, Mapping, Sequence

WireId = int

# Occupation vector: sorted tuple of (wire, count) pairs with count >= 1.
Occupation = tuple[tuple[WireId, int], ...]

DROP_TOL = 1e-12
ATOL = 1e-9


class WireTable:
    """Deterministic bijection between opaque labels and dense wire ids.

    Ids are assigned in interning order, so constructors that intern their
    wires in a fixed order produce reproducible universes.
    """

    def __init__(self) -> None:
        self._by_label: dict = {}
        self._by_id: list = []

    def intern(self, label) -> WireId:
        wid = self._by_label.get(label)
        if wid is None:
            wid = len(self._by_id)
            self._by_label[label] = wid
            self._by_id.append(label)
        return wid

    def id_of(self, label) -> WireId:
        return self._by_label[label]

    def label_of(self, wid: WireId):
        return self._by_id[wid]

    def __len__(self) -> int:
        return len(self._by_id)

    def __contains__(self, label) -> bool:
        return label in self._by_label

    def labels(self) -> list:
        return list(self._by_id)


class FockState:
    """Sparse superposition of boson occupation vectors.

    Terms map occupation vectors to complex amplitudes.  Physical states have
    squared norm <= 1; sub-normalized states represent post-selected branches.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[Occupation, complex] | None = None) -> None:
        data: dict[Occupation, complex] = {}
        if terms:
            for occ, amp in terms.items():
                if abs(amp) >= DROP_TOL:
                    data[occ] = complex(amp)
        self._terms = data

    # -- construction -----------------------------------------------------

    @staticmethod
    def vacuum() -> "FockState":
        return FockState({(): 1.0 + 0.0j})

    @staticmethod
    def zero() -> "FockState":
        return FockState()

    @staticmethod
    def from_counts(counts: Mapping[WireId, int], amplitude: complex = 1.0) -> "FockState":
        occ = tuple(sorted((w, n) for w, n in counts.items() if n))
        if any(n < 0 for _, n in occ):
            raise ValueError("negative occupation")
        return FockState({occ: amplitude})

    # -- inspection --------------------------------------------------------

    def terms(self) -> Iterator[tuple[Occupation, complex]]:
        return iter(self._terms.items())

    def amplitude(self, counts: Mapping[WireId, int]) -> complex:
        occ = tuple(sorted((w, n) for w, n in counts.items() if n))
        return self._terms.get(occ, 0.0 + 0.0j)

    def num_terms(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def wires(self) -> set[WireId]:
        used: set[WireId] = set()
        for occ in self._terms:
            used.update(w for w, _ in occ)
        return used

    def total_photons(self) -> set[int]:
        """Set of total photon numbers present across terms."""
        return {sum(n for _, n in occ) for occ in self._terms} or {0}

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        parts = []
        for occ, amp in sorted(self._terms.items()):
            ket = " ".join(f"{n}_{w}" for w, n in occ) or "vac"
            parts.append(f"({amp:.4g})|{ket}>")
        return " + ".join(parts) if parts else "0"


def norm2(state: FockState) -> float:
    """Squared norm <state|state>."""
    return sum(abs(a) ** 2 for _, a in state.terms())


def inner(a: FockState, b: FockState) -> complex:
    """<a|b> over the orthonormal occupation basis."""
    if a.num_terms() > b.num_terms():
        return complex(sum(a._terms[occ].conjugate() * amp
                           for occ, amp in b.terms() if occ in a._terms))
    return complex(sum(amp.conjugate() * b._terms[occ]
                       for occ, amp in a.terms() if occ in b._terms))


def scale(state: FockState, c: complex) -> FockState:
    return FockState({occ: c * amp for occ, amp in state.terms()})


def add_scaled(a: FockState, c: complex, b: FockState) -> FockState:
    """Termwise a + c*b with dropout of negligible amplitudes."""
    out = dict(a._terms)
    for occ, amp in b.terms():
        out[occ] = out.get(occ, 0.0) + c * amp
    return FockState(out)


def _occ_set(occ: Occupation, w: WireId, n: int) -> Occupation:
    items = [(wi, ni) for wi, ni in occ if wi != w]
    if n:
        items.append((w, n))
    items.sort()
    return tuple(items)


def _occ_get(occ: Occupation, w: WireId) -> int:
    for wi, ni in occ:
        if wi == w:
            return ni
    return 0


def create(state: FockState, w: WireId) -> FockState:
    """Apply the creation operator a†_w: amplitude picks up sqrt(n+1)."""
    out: dict[Occupation, complex] = {}
    for occ, amp in state.terms():
        n = _occ_get(occ, w)
        key = _occ_set(occ, w, n + 1)
        out[key] = out.get(key, 0.0) + amp * math.sqrt(n + 1)
    return FockState(out)


def annihilate(state: FockState, w: WireId) -> FockState:
    """Apply a_w: terms with no photon at w vanish; amplitude picks up sqrt(n)."""
    out: dict[Occupation, complex] = {}
    for occ, amp in state.terms():
        n = _occ_get(occ, w)
        if n == 0:
            continue
        key = _occ_set(occ, w, n - 1)
        out[key] = out.get(key, 0.0) + amp * math.sqrt(n)
    return FockState(out)


def number_expectation(state: FockState, w: WireId) -> float:
    """<n_w> for a normalized state (unnormalized: weighted by norm^2)."""
    return sum(abs(amp) ** 2 * _occ_get(occ, w) for occ, amp in state.terms())


def relabel(state: FockState, mapping: Mapping[WireId, WireId]) -> FockState:
    """Re-key every occupation vector through a wire bijection.

    Wires absent from ``mapping`` stay put.  The mapping must be injective and
    must not collide with fixed wires.
    """
    targets = list(mapping.values())
    if len(set(targets)) != len(targets):
        raise ValueError("relabel mapping is not injective")
    moved = set(mapping)
    out: dict[Occupation, complex] = {}
    for occ, amp in state.terms():
        items = []
        for wi, ni in occ:
            nw = mapping.get(wi, wi)
            if nw != wi and nw not in moved and _occ_get(occ, nw):
                raise ValueError(f"relabel collides on occupied fixed wire {nw}")
            items.append((nw, ni))
        items.sort()
        key = tuple(items)
        if key in out:
            raise ValueError("relabel mapping is not a bijection on the state")
        out[key] = amp
    return FockState(out)


def project_count(state: FockState, wires: Iterable[WireId], n: int) -> tuple[FockState, float]:
    """Component whose total photon count over ``wires`` equals n.

    Returns the sub-normalized component and its probability (squared norm of
    the component, assuming a normalized input).
    """
    wset = set(wires)
    comp: dict[Occupation, complex] = {}
    for occ, amp in state.terms():
        tot = sum(ni for wi, ni in occ if wi in wset)
        if tot == n:
            comp[occ] = amp
    out = FockState(comp)
    return out, norm2(out)


def group_by_counts(state: FockState, wires: Iterable[WireId]):
    """Split a state by its exact occupation signature on ``wires``.

    Yields ``(signature, component)`` pairs where signature is a sorted tuple
    of (wire, count) restricted to ``wires`` (zero counts omitted).  The
    components partition the state, so their squared norms sum to norm2.
    """
    wset = set(wires)
    buckets: dict[Occupation, dict[Occupation, complex]] = {}
    for occ, amp in state.terms():
        sig = tuple((wi, ni) for wi, ni in occ if wi in wset)
        buckets.setdefault(sig, {})[occ] = amp
    for sig in sorted(buckets):
        yield sig, FockState(buckets[sig])


def strip_wires(state: FockState, wires: Iterable[WireId]) -> FockState:
    """Drop the given wires from every occupation vector (they must carry a
    definite, term-independent photon pattern, e.g. after group_by_counts)."""
    wset = set(wires)
    out: dict[Occupation, complex] = {}
    for occ, amp in state.terms():
        key = tuple((wi, ni) for wi, ni in occ if wi not in wset)
        if key in out:
            raise ValueError("stripped wires were entangled with the rest")
        out[key] = amp
    return FockState(out)


def _compositions(n: int, k: int) -> Iterator[tuple[int, ...]]:
    """All k-tuples of non-negative ints summing to n."""
    if k == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in _compositions(n - first, k - 1):
            yield (first,) + rest


def substitute(state: FockState, rules: Mapping[WireId, Sequence[tuple[WireId, complex]]]) -> FockState:
    """Apply a linear substitution on creation operators.

    ``rules[w] = [(w', c'), ...]`` means a†_w -> sum c' a†_{w'}; wires not in
    ``rules`` are untouched.  The substitution is lifted to multi-photon terms
    multilinearly, with the sqrt(n!) occupation normalization handled here, so
    unitary rules preserve the squared norm exactly.
    """
    out: dict[Occupation, complex] = {}
    for occ, amp in state.terms():
        # Polynomial coefficient of the creation monomial for this term.
        polys: dict[Occupation, complex] = {(): amp}
        for wi, ni in occ:
            polys = {occ_p: a / math.sqrt(math.factorial(ni)) for occ_p, a in polys.items()}
            images = rules.get(wi)
            if images is None:
                images = ((wi, 1.0 + 0.0j),)
            new_polys: dict[Occupation, complex] = {}
            k = len(images)
            for powers in _compositions(ni, k):
                coeff = math.factorial(ni)
                mono: dict[WireId, int] = {}
                cval = 1.0 + 0.0j
                for (wj, cj), p in zip(images, powers):
                    if p == 0:
                        continue
                    coeff //= math.factorial(p)
                    cval *= cj ** p
                    mono[wj] = mono.get(wj, 0) + p
                if abs(cval) < DROP_TOL:
                    continue
                for occ_p, a in polys.items():
                    merged = dict(occ_p)
                    for wj, p in mono.items():
                        merged[wj] = merged.get(wj, 0) + p
                    key = tuple(sorted(merged.items()))
                    new_polys[key] = new_polys.get(key, 0.0) + a * coeff * cval
            polys = new_polys
        for occ_p, a in polys.items():
            renorm = 1.0
            for _, p in occ_p:
                renorm *= math.sqrt(math.factorial(p))
            out[occ_p] = out.get(occ_p, 0.0) + a * renorm
    return FockState(out)


def allclose(a: FockState, b: FockState, atol: float = ATOL) -> bool:
    """Termwise comparison within absolute tolerance."""
    keys = set(a._terms) | set(b._terms)
    return all(abs(a._terms.get(k, 0.0) - b._terms.get(k, 0.0)) <= atol for k in keys)


def apply_operator(state: FockState, legs: Sequence[tuple[WireId, complex]],
                   kind: Callable[[FockState, WireId], FockState] = annihilate) -> FockState:
    """Apply sum_i c_i op(w_i) to a state (op defaults to annihilation)."""
    out = FockState.zero()
    for w, c in legs:
        if abs(c) < DROP_TOL:
            continue
        out = add_scaled(out, c, kind(state, w))
    return out


def rationalize(p: float, max_two: int = 16, max_three: int = 4, tol: float = 1e-9) -> str | None:
    """Render a probability as an exact small fraction n / (2^k 3^m) if one fits.

    Returns e.g. "1/32" or "5/1152", or None when no small denominator matches
    within tolerance.  Raw floats remain the source of truth; this is for
    human-readable reports only.
    """
    if p < 0 or p > 1 + tol:
        return None
    best: tuple[int, int, int] | None = None
    for m in range(max_three + 1):
        for k in range(max_two + 1):
            den = (2 ** k) * (3 ** m)
            num = round(p * den)
            if num == 0 and p > tol:
                continue
            if abs(p - num / den) <= tol:
                g = math.gcd(num, den) if num else 1
                cand = (num // g, den // g, k + m)
                if best is None or cand[1] < best[1]:
                    best = cand
                break
    if best is None:
        return None
    num, den, _ = best
    if den == 1:
        return str(num)
    return f"{num}/{den}"
