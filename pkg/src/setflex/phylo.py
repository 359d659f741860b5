"""Rooted and unrooted phylogenetic trees, rooted triples, and supertrees.

Rooted trees are stored as canonical nested tuples: a leaf is its label,
an interior vertex is the tuple of its child subtrees sorted by smallest
contained label.  Equality of canonical forms decides leaf-labeled
isomorphism, and Newick output of a canonical tree round-trips to the
byte.  Vertices are addressed by preorder index over the canonical form.

Newick here is deliberately restricted: no branch lengths, no quoted
labels, no internal labels.  Unrooted trees are serialized by rooting at
the interior vertex adjacent to the smallest leaf label (the root then
carries degree-many children).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Mapping, NamedTuple

from .errors import InputError, ParseError
from .setsys import check_label

Shape = str | tuple


def _canonical(shape, seen: dict[str, None]):
    """Validate a nested shape and return (canonical shape, min leaf)."""
    if isinstance(shape, str):
        check_label(shape)
        if shape in seen:
            raise InputError(f"duplicate leaf label {shape!r}")
        seen[shape] = None
        return shape, shape
    children = tuple(shape)
    if len(children) < 2:
        raise InputError("interior vertices must have out-degree at least 2")
    # Child leaf sets are disjoint, so the smallest contained label is a
    # total order on the children.
    canon = sorted((_canonical(c, seen) for c in children), key=lambda p: p[1])
    return tuple(c for c, _ in canon), canon[0][1]


class RootedPhyloTree:
    """A rooted phylogenetic tree with labeled leaves.

    Construct from a nested shape such as (("a", "b"), "c").  The shape
    is canonicalized on construction; two trees are equal iff they are
    isomorphic as leaf-labeled trees.
    """

    __slots__ = ("_shape", "_leaves", "_index")

    def __init__(self, shape: Shape):
        seen: dict[str, None] = {}
        self._shape, _ = _canonical(shape, seen)
        self._leaves = tuple(sorted(seen))
        self._index = None

    @property
    def shape(self) -> Shape:
        return self._shape

    @property
    def leaves(self) -> tuple[str, ...]:
        return self._leaves

    @property
    def leaf_count(self) -> int:
        return len(self._leaves)

    def __eq__(self, other) -> bool:
        return isinstance(other, RootedPhyloTree) and self._shape == other._shape

    def __hash__(self) -> int:
        return hash(self._shape)

    def __repr__(self) -> str:
        return f"RootedPhyloTree({self.newick()})"

    def newick(self) -> str:
        def render(shape) -> str:
            if isinstance(shape, str):
                return shape
            return "(" + ",".join(render(c) for c in shape) + ")"

        return render(self._shape) + ";"

    def is_binary(self) -> bool:
        def ok(shape) -> bool:
            if isinstance(shape, str):
                return True
            return len(shape) == 2 and all(ok(c) for c in shape)

        return ok(self._shape)

    # -- vertex indexing (preorder over the canonical form) ------------
    # Clusters are stored as integer leaf bitmasks; bit i stands for
    # self._leaves[i].

    def _ensure_index(self):
        if self._index is None:
            shapes: list = []
            parents: list[int] = []
            child_ids: list[tuple[int, ...]] = []
            masks: list[int] = []
            bit_of = {lab: 1 << i for i, lab in enumerate(self._leaves)}

            def walk(shape, parent: int) -> int:
                vid = len(shapes)
                shapes.append(shape)
                parents.append(parent)
                child_ids.append(())
                masks.append(0)
                if isinstance(shape, str):
                    masks[vid] = bit_of[shape]
                else:
                    kids = tuple(walk(child, vid) for child in shape)
                    child_ids[vid] = kids
                    acc = 0
                    for k in kids:
                        acc |= masks[k]
                    masks[vid] = acc
                return vid

            walk(self._shape, -1)
            self._index = (shapes, parents, child_ids, masks, bit_of)
        return self._index

    @property
    def vertex_count(self) -> int:
        return len(self._ensure_index()[0])

    def parent(self, v: int) -> int:
        return self._ensure_index()[1][v]

    def children_ids(self, v: int) -> tuple[int, ...]:
        return self._ensure_index()[2][v]

    def cluster(self, v: int) -> frozenset[str]:
        mask = self._ensure_index()[3][v]
        return frozenset(
            lab for i, lab in enumerate(self._leaves) if mask >> i & 1
        )

    def depth(self, v: int) -> int:
        parents = self._ensure_index()[1]
        d = 0
        while parents[v] != -1:
            v = parents[v]
            d += 1
        return d

    def interior_ids(self) -> tuple[int, ...]:
        shapes = self._ensure_index()[0]
        return tuple(v for v, s in enumerate(shapes) if not isinstance(s, str))

    def _want_mask(self, taxa: Iterable[str]) -> int:
        bit_of = self._ensure_index()[4]
        want = 0
        for lab in taxa:
            bit = bit_of.get(lab)
            if bit is None:
                raise InputError(f"taxon {lab!r} not in tree")
            want |= bit
        if not want:
            raise InputError("need at least one taxon")
        return want

    def _descend(self, want: int) -> int:
        _, _, child_ids, masks, _ = self._ensure_index()
        v = 0
        while True:
            for c in child_ids[v]:
                if masks[c] & want == want:
                    v = c
                    break
            else:
                return v

    def lca(self, taxa: Iterable[str]) -> int:
        """Deepest vertex whose cluster contains all the given leaves."""
        return self._descend(self._want_mask(taxa))

    def leaf_bits(self) -> dict[str, int]:
        """The leaf-to-bit mapping of this tree's cluster masks.

        Trees over the same leaf set share the mapping, so triple masks
        can be prepared once and checked against many trees.
        """
        return self._ensure_index()[4]

    def resolve_mask(self, want: int) -> int:
        """Mask variant of `resolve`: the cherry-pair bits at the join, or 0."""
        _, _, child_ids, masks, _ = self._ensure_index()
        v = 0
        while True:
            for c in child_ids[v]:
                if masks[c] & want == want:
                    v = c
                    break
            else:
                break
        for child in child_ids[v]:
            overlap = want & masks[child]
            if overlap.bit_count() == 2:
                return overlap
        return 0

    def resolve(self, a: str, b: str, c: str) -> frozenset[str] | None:
        """The cherry pair among {a,b,c} in this tree, or None if unresolved.

        Returns frozenset({x,y}) when the tree displays xy|z for the
        remaining leaf z.
        """
        want = self._want_mask((a, b, c))
        _, _, child_ids, masks, bit_of = self._ensure_index()
        v = self._descend(want)
        for child in child_ids[v]:
            overlap = want & masks[child]
            if overlap.bit_count() == 2:
                return frozenset(
                    x for x in (a, b, c) if bit_of[x] & overlap
                )
        return None


class RootedTriple(NamedTuple):
    """The rooted tree xy|z on three leaves; the cherry pair is sorted."""

    first: str
    second: str
    out: str

    @classmethod
    def of(cls, a: str, b: str, c: str) -> "RootedTriple":
        for lab in (a, b, c):
            check_label(lab)
        if len({a, b, c}) != 3:
            raise InputError(f"rooted triple needs three distinct taxa, got {a, b, c}")
        a, b = sorted((a, b))
        return cls(a, b, c)

    @property
    def cherry(self) -> frozenset[str]:
        return frozenset((self.first, self.second))

    @property
    def taxa(self) -> frozenset[str]:
        return frozenset((self.first, self.second, self.out))

    def compact(self) -> str:
        return f"{self.first},{self.second}|{self.out}"

    def as_tree(self) -> RootedPhyloTree:
        return RootedPhyloTree(((self.first, self.second), self.out))


def parse_triple(text: str) -> RootedTriple:
    """Parse the compact form a,b|c (labels may be multi-character)."""
    body = text.strip()
    if body.count("|") != 1:
        raise ParseError(f"triple must contain exactly one '|': {text!r}")
    pair, out = body.split("|")
    parts = [p.strip() for p in pair.split(",")]
    if len(parts) != 2:
        raise ParseError(f"triple cherry must be two comma-separated labels: {text!r}")
    return RootedTriple.of(parts[0], parts[1], out.strip())


def parse_triples_text(text: str) -> list[RootedTriple]:
    """Parse triples, one per line, as a,b|c or as 3-leaf Newick trees.

    Lines ending in ';' are parsed as Newick; larger Newick trees are
    rejected here (expand them with `triples_of` instead).
    """
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.endswith(";"):
            tree = parse_newick(line)
            if tree.leaf_count != 3 or not tree.is_binary():
                raise ParseError(f"line {lineno}: not a rooted triple: {line!r}")
            (t,) = triples_of(tree)
            out.append(t)
        else:
            out.append(parse_triple(line))
    return out


# -- Newick -------------------------------------------------------------------


def parse_newick(text: str) -> RootedPhyloTree:
    """Strict Newick parser: no branch lengths, quotes, or internal labels."""
    s = text
    pos = 0

    def skip_ws():
        nonlocal pos
        while pos < len(s) and s[pos].isspace():
            pos += 1

    def parse_clade():
        nonlocal pos
        skip_ws()
        if pos >= len(s):
            raise ParseError("unexpected end of input", pos)
        if s[pos] == "(":
            pos += 1
            children = [parse_clade()]
            skip_ws()
            while pos < len(s) and s[pos] == ",":
                pos += 1
                children.append(parse_clade())
                skip_ws()
            if pos >= len(s) or s[pos] != ")":
                raise ParseError("expected ')'", pos)
            pos += 1
            skip_ws()
            if pos < len(s) and s[pos] == ":":
                raise ParseError("branch lengths are not supported", pos)
            if pos < len(s) and s[pos] not in "(),;":
                raise ParseError("internal labels are not supported", pos)
            if len(children) < 2:
                raise ParseError("interior vertex with out-degree < 2", pos)
            return tuple(children)
        if s[pos] in "'\"":
            raise ParseError("quoted labels are not supported", pos)
        start = pos
        while pos < len(s) and s[pos] not in "(),;:" and not s[pos].isspace():
            pos += 1
        if pos == start:
            raise ParseError(f"expected a label, found {s[pos]!r}", pos)
        if pos < len(s) and s[pos] == ":":
            raise ParseError("branch lengths are not supported", pos)
        return s[start:pos]

    shape = parse_clade()
    skip_ws()
    if pos >= len(s) or s[pos] != ";":
        raise ParseError("missing terminating ';'", pos)
    pos += 1
    skip_ws()
    if pos != len(s):
        raise ParseError("trailing characters after ';'", pos)
    try:
        return RootedPhyloTree(shape)
    except InputError as exc:
        raise ParseError(str(exc)) from None


def write_newick(tree: RootedPhyloTree) -> str:
    return tree.newick()


# -- display relation ---------------------------------------------------------


def displays_triple(tree: RootedPhyloTree, t: RootedTriple) -> bool:
    """True iff the cherry pair of t joins strictly below the triple's lca."""
    missing = t.taxa - set(tree.leaves)
    if missing:
        raise InputError(f"taxa not in tree: {sorted(missing)}")
    return tree.resolve(t.first, t.second, t.out) == t.cherry


def triples_of(tree: RootedPhyloTree) -> frozenset[RootedTriple]:
    """All rooted triples displayed by the tree, over all leaf 3-subsets."""
    out = []
    for a, b, c in combinations(tree.leaves, 3):
        pair = tree.resolve(a, b, c)
        if pair is not None:
            (z,) = {a, b, c} - pair
            x, y = sorted(pair)
            out.append(RootedTriple(x, y, z))
    return frozenset(out)


def displays_tree(host: RootedPhyloTree, guest: RootedPhyloTree) -> bool:
    """True iff every rooted triple of the binary guest is displayed by host."""
    if not guest.is_binary():
        raise InputError("guest tree must be binary")
    missing = set(guest.leaves) - set(host.leaves)
    if missing:
        raise InputError(f"guest leaves not in host: {sorted(missing)}")
    for t in triples_of(guest):
        if host.resolve(t.first, t.second, t.out) != t.cherry:
            return False
    return True


def restrict(tree: RootedPhyloTree, taxa: Iterable[str]) -> RootedPhyloTree:
    """Minimal subtree spanning the given leaves, degree-2 vertices suppressed."""
    want = set(taxa)
    if not want:
        raise InputError("cannot restrict to an empty leaf set")
    missing = want - set(tree.leaves)
    if missing:
        raise InputError(f"taxa not in tree: {sorted(missing)}")

    def prune(shape):
        if isinstance(shape, str):
            return shape if shape in want else None
        kept = [p for c in shape if (p := prune(c)) is not None]
        if not kept:
            return None
        if len(kept) == 1:
            return kept[0]
        return tuple(kept)

    return RootedPhyloTree(prune(tree.shape))


def make_binary(tree: RootedPhyloTree) -> RootedPhyloTree:
    """Deterministic binary refinement: fold children left-leaning in canonical order."""

    def refine(shape):
        if isinstance(shape, str):
            return shape
        kids = [refine(c) for c in shape]
        acc = kids[0]
        for nxt in kids[1:]:
            acc = (acc, nxt)
        return acc

    return RootedPhyloTree(refine(tree.shape))


# -- cluster graph and BUILD ---------------------------------------------------


def cluster_graph(
    triples: Iterable[RootedTriple], taxa: Iterable[str]
) -> dict[str, tuple[str, ...]]:
    """The graph on `taxa` with an edge {a,b} for each triple ab|c inside it.

    Only triples with all three leaves in `taxa` contribute.
    """
    nodes = sorted(set(taxa))
    node_set = set(nodes)
    adj: dict[str, set[str]] = {v: set() for v in nodes}
    for t in triples:
        if t.taxa <= node_set:
            adj[t.first].add(t.second)
            adj[t.second].add(t.first)
    return {v: tuple(sorted(adj[v])) for v in nodes}


def _components(adj: dict[str, tuple[str, ...]]) -> list[tuple[str, ...]]:
    seen: set[str] = set()
    comps = []
    for start in sorted(adj):
        if start in seen:
            continue
        comp = []
        queue = deque([start])
        seen.add(start)
        while queue:
            v = queue.popleft()
            comp.append(v)
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        comps.append(tuple(sorted(comp)))
    return sorted(comps)


@dataclass(frozen=True)
class BuildResult:
    """Outcome of the recursive supertree construction.

    Either `tree` is the minimally resolved supertree displaying every
    input triple, or `witness` is the first leaf set (in recursion
    order) whose cluster graph is connected.
    """

    tree: RootedPhyloTree | None
    witness: tuple[str, ...] | None

    @property
    def compatible(self) -> bool:
        return self.tree is not None


class _Incompatible(Exception):
    def __init__(self, witness: tuple[str, ...]):
        self.witness = witness


def build_supertree(
    triples: Iterable[RootedTriple], taxa: Iterable[str] | None = None
) -> BuildResult:
    """Recursive supertree construction from rooted triples.

    On leaf set S the cluster graph is computed; a connected graph on
    |S| >= 2 vertices stops the recursion with S as the incompatibility
    witness, otherwise each component becomes a child subtree.  With no
    triples the result is the star tree on `taxa`.
    """
    tr = list(triples)
    leaf_set = set()
    for t in tr:
        leaf_set |= t.taxa
    if taxa is not None:
        extra = set(taxa)
        if not leaf_set <= extra:
            raise InputError("triples mention taxa outside the given leaf set")
        leaf_set = extra
    if not leaf_set:
        raise InputError("supertree needs at least one taxon")

    def rec(scope: tuple[str, ...]):
        if len(scope) == 1:
            return scope[0]
        inside = [t for t in tr if t.taxa <= set(scope)]
        comps = _components(cluster_graph(inside, scope))
        if len(comps) == 1:
            raise _Incompatible(scope)
        return tuple(rec(c) for c in comps)

    try:
        shape = rec(tuple(sorted(leaf_set)))
    except _Incompatible as stop:
        return BuildResult(tree=None, witness=stop.witness)
    return BuildResult(tree=RootedPhyloTree(shape), witness=None)


# -- unrooted trees -------------------------------------------------------------


class UnrootedPhyloTree:
    """An unrooted phylogenetic tree: leaves labeled, interior degree >= 3."""

    __slots__ = ("_adj", "_labels", "_label_to_v")

    def __init__(
        self,
        edges: Iterable[tuple[int, int]],
        leaf_labels: Mapping[int, str],
    ):
        adj: dict[int, list[int]] = {}
        for u, v in edges:
            if u == v:
                raise InputError("self-loops are not allowed")
            adj.setdefault(u, []).append(v)
            adj.setdefault(v, []).append(u)
        for v, nb in adj.items():
            if len(nb) != len(set(nb)):
                raise InputError(f"parallel edges at vertex {v}")
        labels = dict(leaf_labels)
        for v, lab in labels.items():
            check_label(lab)
            if v not in adj:
                raise InputError(f"labeled vertex {v} has no edges")
        if len(set(labels.values())) != len(labels):
            raise InputError("duplicate leaf labels")
        for v, nb in adj.items():
            if len(nb) == 1 and v not in labels:
                raise InputError(f"degree-1 vertex {v} is unlabeled")
            if len(nb) > 1 and v in labels:
                raise InputError(f"labeled vertex {v} is not a leaf")
            if 1 < len(nb) < 3:
                raise InputError(f"interior vertex {v} has degree {len(nb)} < 3")
        # Connectivity and acyclicity.
        if adj:
            start = next(iter(adj))
            seen = {start}
            queue = deque([start])
            edge_count = 0
            while queue:
                u = queue.popleft()
                edge_count += len(adj[u])
                for w in adj[u]:
                    if w not in seen:
                        seen.add(w)
                        queue.append(w)
            if len(seen) != len(adj):
                raise InputError("tree is not connected")
            if edge_count // 2 != len(adj) - 1:
                raise InputError("edge count does not match a tree")
        self._adj = {v: tuple(sorted(nb)) for v, nb in adj.items()}
        self._labels = labels
        self._label_to_v = {lab: v for v, lab in labels.items()}

    @property
    def vertices(self) -> tuple[int, ...]:
        return tuple(sorted(self._adj))

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self._adj[v]

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    @property
    def leaves(self) -> tuple[str, ...]:
        return tuple(sorted(self._labels.values()))

    def leaf_vertex(self, label: str) -> int:
        try:
            return self._label_to_v[label]
        except KeyError:
            raise InputError(f"unknown leaf {label!r}") from None

    def label(self, v: int) -> str | None:
        return self._labels.get(v)

    def interior_vertices(self) -> tuple[int, ...]:
        return tuple(v for v in self.vertices if v not in self._labels)

    def is_binary(self) -> bool:
        return all(len(self._adj[v]) == 3 for v in self.interior_vertices())

    def cherry_count(self) -> int:
        """Number of leaf pairs sharing a neighbor."""
        count = 0
        for v in self.interior_vertices():
            leafy = sum(1 for w in self._adj[v] if w in self._labels)
            count += leafy * (leafy - 1) // 2
        return count

    def _path(self, u: int, v: int) -> list[int]:
        prev = {u: None}
        queue = deque([u])
        while queue:
            w = queue.popleft()
            if w == v:
                break
            for x in self._adj[w]:
                if x not in prev:
                    prev[x] = w
                    queue.append(x)
        path = [v]
        while path[-1] != u:
            path.append(prev[path[-1]])
        path.reverse()
        return path

    def median(self, taxa: Iterable[str]) -> int:
        """The unique vertex shared by the three pairwise leaf paths."""
        labs = sorted(set(taxa))
        if len(labs) != 3:
            raise InputError(f"median needs exactly three taxa, got {labs}")
        a, b, c = (self.leaf_vertex(x) for x in labs)
        shared = (
            set(self._path(a, b)) & set(self._path(a, c)) & set(self._path(b, c))
        )
        if len(shared) != 1:
            raise InputError("paths do not meet in a single vertex")
        return shared.pop()

    def newick(self) -> str:
        """Serialize by rooting at the interior vertex next to the smallest leaf."""
        if len(self._adj) == 2:
            a, b = sorted(self._labels.values())
            return f"({a},{b});"
        root = self._adj[self.leaf_vertex(min(self._labels.values()))][0]

        def render(v: int, came: int | None):
            if v in self._labels:
                return self._labels[v], self._labels[v]
            parts = sorted(
                (render(w, v) for w in self._adj[v] if w != came),
                key=lambda p: p[1],
            )
            return "(" + ",".join(p for p, _ in parts) + ")", parts[0][1]

        text, _ = render(root, None)
        return text + ";"


def median(tree: UnrootedPhyloTree, taxa: Iterable[str]) -> int:
    return tree.median(taxa)


def lca(tree: RootedPhyloTree, taxa: Iterable[str]) -> int:
    return tree.lca(taxa)
