"""Set systems over an interned taxon universe and their excess measures.

A `SetSystem` is a finite collection of distinct non-empty subsets of a
taxon universe.  This module provides the surplus-style measures on
member selections (uniform and general excess, sigma, gamma), exhaustive
thin/slim verdicts with minimizing witnesses, the submodular-inequality
check used as a testing primitive, and the patchwork closure check on
the zero-excess subset family.  Everything here is exact integer
combinatorics; the polynomial-time counterparts of the exhaustive scans
live in `graphopt`.

Taxa are interned: the universe is the lexicographically sorted tuple of
labels and a taxon id is its position in that tuple.  Members are stored
as sorted id tuples and iterated in sorted order, which makes every
downstream report deterministic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, NamedTuple

from .errors import (
    CapExceededError,
    InputError,
    MemberSizeError,
    ParseError,
    PreconditionError,
)

DEFAULT_EXHAUSTIVE_CAP = 16

_FORBIDDEN_LABEL_CHARS = set("(),;:")


class Taxon(NamedTuple):
    id: int
    label: str


def check_label(label: str) -> str:
    """Validate a taxon label: non-empty, no whitespace, no ( ) , ; : characters."""
    if not isinstance(label, str) or not label:
        raise InputError(f"taxon label must be a non-empty string, got {label!r}")
    if any(c.isspace() or c in _FORBIDDEN_LABEL_CHARS for c in label):
        raise InputError(
            f"taxon label {label!r} contains whitespace or one of ( ) , ; :"
        )
    return label


class SetSystem:
    """A collection of distinct non-empty taxon subsets over a shared universe.

    `sets` is an iterable of label iterables; `extra_taxa` adds taxa to the
    universe that appear in no member (representation constructions may
    attach them).  Duplicate members are rejected.
    """

    __slots__ = ("_universe", "_label_to_id", "_members", "_bits")

    def __init__(self, sets: Iterable[Iterable[str]], extra_taxa: Iterable[str] = ()):
        raw_members = [tuple(s) for s in sets]
        labels: set[str] = set()
        for member in raw_members:
            for label in member:
                labels.add(check_label(label))
        for label in extra_taxa:
            labels.add(check_label(label))
        universe = tuple(sorted(labels))
        label_to_id = {lab: i for i, lab in enumerate(universe)}

        members: list[tuple[int, ...]] = []
        for member in raw_members:
            ids = sorted({label_to_id[lab] for lab in member})
            if len(ids) != len(member):
                raise InputError(f"member {member!r} repeats a taxon")
            if not ids:
                raise InputError("empty member sets are not allowed")
            members.append(tuple(ids))
        members.sort()
        for a, b in zip(members, members[1:]):
            if a == b:
                raise InputError(
                    "duplicate member "
                    + "{" + ",".join(universe[i] for i in a) + "}"
                )

        self._universe = universe
        self._label_to_id = label_to_id
        self._members = tuple(members)
        self._bits = tuple(
            sum(1 << i for i in member) for member in self._members
        )

    # -- basic accessors ------------------------------------------------

    @property
    def universe(self) -> tuple[str, ...]:
        return self._universe

    @property
    def members(self) -> tuple[tuple[int, ...], ...]:
        return self._members

    @property
    def member_count(self) -> int:
        return len(self._members)

    @property
    def taxa(self) -> tuple[Taxon, ...]:
        return tuple(Taxon(i, lab) for i, lab in enumerate(self._universe))

    def label_of(self, taxon_id: int) -> str:
        try:
            return self._universe[taxon_id]
        except IndexError:
            raise InputError(f"taxon id {taxon_id} out of range") from None

    def id_of(self, label: str) -> int:
        try:
            return self._label_to_id[label]
        except KeyError:
            raise InputError(f"unknown taxon {label!r}") from None

    def member_labels(self, index: int) -> tuple[str, ...]:
        return tuple(self._universe[i] for i in self._members[index])

    def member_label_sets(self) -> list[frozenset[str]]:
        return [frozenset(self.member_labels(i)) for i in range(self.member_count)]

    def member_bits(self) -> tuple[int, ...]:
        return self._bits

    def sizes(self) -> tuple[int, ...]:
        return tuple(len(m) for m in self._members)

    def uniform_size(self) -> int | None:
        """The common member size, or None if members have mixed sizes."""
        sizes = set(self.sizes())
        if len(sizes) == 1:
            return sizes.pop()
        return None

    def leaf_labels(self) -> tuple[str, ...]:
        """Sorted labels of taxa that occur in at least one member."""
        present = set()
        for m in self._members:
            present.update(m)
        return tuple(self._universe[i] for i in sorted(present))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SetSystem)
            and self._universe == other._universe
            and self._members == other._members
        )

    def __hash__(self) -> int:
        return hash((self._universe, self._members))

    def __repr__(self) -> str:
        inner = "; ".join(
            ",".join(self.member_labels(i)) for i in range(self.member_count)
        )
        return f"SetSystem[{inner}]"


def normalize_selection(
    system: SetSystem, indices: Iterable[int], *, allow_empty: bool
) -> tuple[int, ...]:
    """Validate member indices: in range, no duplicates; returns them sorted."""
    sel = sorted(indices)
    for a, b in zip(sel, sel[1:]):
        if a == b:
            raise InputError(f"selection repeats member index {a}")
    for i in sel:
        if not 0 <= i < system.member_count:
            raise InputError(f"member index {i} out of range")
    if not sel and not allow_empty:
        raise InputError("selection must be non-empty")
    return tuple(sel)


# -- reports -------------------------------------------------------------


@dataclass(frozen=True)
class ExcessReport:
    """A measure value together with the selection that achieves it."""

    value: int
    witness: tuple[int, ...]
    leaf_count: int


@dataclass
class CheckReport:
    """Verdict plus certificate for a decision procedure.

    `method` is one of exhaustive/mincut/bruteforce/forest; the
    certificate (when present) can be re-verified by the library call
    named in `recheck`.
    """

    verdict: bool
    method: str
    certificate: object | None = None
    stats: dict = field(default_factory=dict)
    recheck: str | None = None


# -- measures -------------------------------------------------------------


def leaf_union(system: SetSystem, selection: Iterable[int]) -> frozenset[int]:
    """Union of the selected members, as taxon ids.  Empty selection is empty."""
    sel = normalize_selection(system, selection, allow_empty=True)
    out: set[int] = set()
    for i in sel:
        out.update(system.members[i])
    return frozenset(out)


def _union_bits(system: SetSystem, sel: tuple[int, ...]) -> int:
    bits = 0
    for i in sel:
        bits |= system.member_bits()[i]
    return bits


def excess_uniform(system: SetSystem, selection: Iterable[int], r: int) -> int:
    """|L(sel)| - |sel| - (r-1) for a selection of uniformly size-r members."""
    sel = normalize_selection(system, selection, allow_empty=False)
    if r < 2:
        raise InputError(f"uniform size r must be >= 2, got {r}")
    for i in sel:
        if len(system.members[i]) != r:
            raise MemberSizeError(
                f"member {','.join(system.member_labels(i))} does not have size {r}"
            )
    return _union_bits(system, sel).bit_count() - len(sel) - (r - 1)


def excess_general(system: SetSystem, selection: Iterable[int]) -> int:
    """|L(sel)| - 2 - sum(|s|-2) over the selection; members must have size >= 3."""
    sel = normalize_selection(system, selection, allow_empty=False)
    total = 0
    for i in sel:
        size = len(system.members[i])
        if size < 3:
            raise MemberSizeError(
                f"member {','.join(system.member_labels(i))} has size {size} < 3"
            )
        total += size - 2
    return _union_bits(system, sel).bit_count() - 2 - total


def sigma(system: SetSystem, selection: Iterable[int]) -> int:
    """|L(sel)| - |sel|; the empty selection gives 0."""
    sel = normalize_selection(system, selection, allow_empty=True)
    if not sel:
        return 0
    return _union_bits(system, sel).bit_count() - len(sel)


def gamma(system: SetSystem, selection: Iterable[int]) -> int:
    """|L(sel)| - sum(|s|-2); members must have size >= 2; empty gives 0."""
    sel = normalize_selection(system, selection, allow_empty=True)
    if not sel:
        return 0
    total = 0
    for i in sel:
        size = len(system.members[i])
        if size < 2:
            raise MemberSizeError(
                f"member {','.join(system.member_labels(i))} has size {size} < 2"
            )
        total += size - 2
    return _union_bits(system, sel).bit_count() - total


def occurrence_count(system: SetSystem, x: int | str) -> int:
    """Number of members containing taxon x (given as id or label)."""
    tid = system.id_of(x) if isinstance(x, str) else x
    if not 0 <= tid < len(system.universe):
        raise InputError(f"taxon id {tid} out of range")
    return sum(1 for m in system.members if tid in m)


# -- exhaustive thin/slim -------------------------------------------------


def _check_cap(system: SetSystem, cap: int, hint: str) -> None:
    if system.member_count > cap:
        raise CapExceededError(
            f"{system.member_count} members exceed the exhaustive cap {cap}; "
            f"use {hint} instead"
        )


def is_thin_exhaustive(
    system: SetSystem, r: int, cap: int = DEFAULT_EXHAUSTIVE_CAP
) -> CheckReport:
    """Scan all non-empty selections for negative uniform excess.

    The witness (reported only on a false verdict) is the selection of
    minimal excess, ties broken by smallest cardinality and then by
    sorted index order.  For r=3 selections of size <= 2 are skipped:
    their excess is never negative.
    """
    size = system.uniform_size()
    if size != r:
        raise MemberSizeError(f"system is not uniformly of size {r}")
    if r < 2:
        raise InputError(f"r must be >= 2, got {r}")
    _check_cap(system, cap, "graphopt.is_thin")

    k = system.member_count
    bits = system.member_bits()
    lo = 3 if r == 3 else 1
    best: tuple[int, tuple[int, ...], int] | None = None
    checked = 0
    for n_sel in range(lo, k + 1):
        for combo in combinations(range(k), n_sel):
            u = 0
            for i in combo:
                u |= bits[i]
            value = u.bit_count() - n_sel - (r - 1)
            checked += 1
            if best is None or value < best[0]:
                best = (value, combo, u.bit_count())
    verdict = best is None or best[0] >= 0
    certificate = None
    if not verdict:
        certificate = ExcessReport(value=best[0], witness=best[1], leaf_count=best[2])
    return CheckReport(
        verdict=verdict,
        method="exhaustive",
        certificate=certificate,
        stats={"subsets_checked": checked, "min_excess_scanned": None if best is None else best[0]},
        recheck="setflex.setsys.excess_uniform",
    )


def is_slim_exhaustive(
    system: SetSystem, cap: int = DEFAULT_EXHAUSTIVE_CAP
) -> CheckReport:
    """Scan all non-empty selections for negative general excess."""
    for i, m in enumerate(system.members):
        if len(m) < 3:
            raise MemberSizeError(
                f"member {','.join(system.member_labels(i))} has size {len(m)} < 3"
            )
    _check_cap(system, cap, "graphopt.is_slim")

    k = system.member_count
    bits = system.member_bits()
    weights = [len(m) - 2 for m in system.members]
    best: tuple[int, tuple[int, ...], int] | None = None
    checked = 0
    for n_sel in range(1, k + 1):
        for combo in combinations(range(k), n_sel):
            u = 0
            w = 0
            for i in combo:
                u |= bits[i]
                w += weights[i]
            value = u.bit_count() - 2 - w
            checked += 1
            if best is None or value < best[0]:
                best = (value, combo, u.bit_count())
    verdict = best is None or best[0] >= 0
    certificate = None
    if not verdict:
        certificate = ExcessReport(value=best[0], witness=best[1], leaf_count=best[2])
    return CheckReport(
        verdict=verdict,
        method="exhaustive",
        certificate=certificate,
        stats={"subsets_checked": checked, "min_excess_scanned": None if best is None else best[0]},
        recheck="setflex.setsys.excess_general",
    )


# -- submodularity and patchwork -------------------------------------------


def check_submodular_pair(
    measure: str,
    system: SetSystem,
    sel1: Iterable[int],
    sel2: Iterable[int],
) -> tuple[bool, tuple[int, int, int, int]]:
    """Evaluate f(A)+f(B) >= f(A|B)+f(A&B) for f in {sigma, gamma}.

    Returns the verdict and the four evaluated values (A, B, union,
    intersection).  Holds for every input; used as a property-test hook.
    """
    if measure == "sigma":
        fn = sigma
    elif measure == "gamma":
        fn = gamma
    else:
        raise InputError(f"measure must be 'sigma' or 'gamma', got {measure!r}")
    a = normalize_selection(system, sel1, allow_empty=True)
    b = normalize_selection(system, sel2, allow_empty=True)
    union = tuple(sorted(set(a) | set(b)))
    inter = tuple(sorted(set(a) & set(b)))
    fa, fb = fn(system, a), fn(system, b)
    fu, fi = fn(system, union), fn(system, inter)
    return fa + fb >= fu + fi, (fa, fb, fu, fi)


def patchwork_check(
    system: SetSystem, cap: int = DEFAULT_EXHAUSTIVE_CAP
) -> CheckReport:
    """Check that the zero-general-excess subset family is a patchwork.

    The system must be slim (verified first).  The family P of non-empty
    selections with general excess 0 is enumerated; the verdict is true
    iff for every intersecting pair A,B in P both the union and the
    intersection are again in P.  For slim inputs a counterexample must
    not occur.
    """
    slim = is_slim_exhaustive(system, cap=cap)
    if not slim.verdict:
        raise PreconditionError(
            "patchwork_check requires a slim system", certificate=slim.certificate
        )
    k = system.member_count
    bits = system.member_bits()
    weights = [len(m) - 2 for m in system.members]

    # Low-bit DP over selection masks gives leaf counts and weight sums.
    union_bits = [0] * (1 << k)
    weight_sum = [0] * (1 << k)
    family: list[int] = []
    for mask in range(1, 1 << k):
        low = (mask & -mask).bit_length() - 1
        rest = mask & (mask - 1)
        union_bits[mask] = union_bits[rest] | bits[low]
        weight_sum[mask] = weight_sum[rest] + weights[low]
        if union_bits[mask].bit_count() - 2 - weight_sum[mask] == 0:
            family.append(mask)

    in_family = set(family)
    counterexample = None
    for pos, m1 in enumerate(family):
        for m2 in family[pos + 1:]:
            if m1 & m2:
                if (m1 | m2) not in in_family or (m1 & m2) not in in_family:
                    counterexample = (_mask_to_sel(m1), _mask_to_sel(m2))
                    break
        if counterexample:
            break
    return CheckReport(
        verdict=counterexample is None,
        method="exhaustive",
        certificate=counterexample,
        stats={"family_size": len(family)},
        recheck="setflex.setsys.excess_general",
    )


def _mask_to_sel(mask: int) -> tuple[int, ...]:
    return tuple(i for i in range(mask.bit_length()) if mask >> i & 1)


# -- text and JSON formats --------------------------------------------------


def parse_sets_text(text: str) -> SetSystem:
    """One member per line as comma-separated labels; # comments, blanks ignored."""
    sets = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        labels = [part.strip() for part in line.split(",")]
        if any(not lab for lab in labels):
            raise ParseError(f"line {lineno}: empty label in {raw!r}")
        sets.append(labels)
    return SetSystem(sets)


def format_sets_text(system: SetSystem) -> str:
    lines = [",".join(system.member_labels(i)) for i in range(system.member_count)]
    return "\n".join(lines) + ("\n" if lines else "")


def parse_sets_json(text: str) -> SetSystem:
    """JSON form: {"sets": [["a","b","c"], ...], "extra_taxa": [...]}."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    if not isinstance(data, dict) or "sets" not in data:
        raise ParseError('JSON set system must be an object with a "sets" key')
    return SetSystem(data["sets"], extra_taxa=data.get("extra_taxa", ()))


def format_sets_json(system: SetSystem) -> str:
    payload: dict = {
        "sets": [list(system.member_labels(i)) for i in range(system.member_count)]
    }
    extras = sorted(set(system.universe) - set(system.leaf_labels()))
    if extras:
        payload["extra_taxa"] = extras
    return json.dumps(payload, sort_keys=True)


def parse_sets(text: str) -> SetSystem:
    """Auto-detect between the text and JSON set-system formats."""
    if text.lstrip().startswith("{"):
        return parse_sets_json(text)
    return parse_sets_text(text)
