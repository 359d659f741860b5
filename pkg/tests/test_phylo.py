import random
from itertools import combinations

import pytest

from setflex import (
    InputError,
    ParseError,
    RootedPhyloTree,
    RootedTriple,
    UnrootedPhyloTree,
    build_supertree,
    cluster_graph,
    displays_tree,
    displays_triple,
    enumerate_binary_trees,
    make_binary,
    parse_newick,
    parse_triple,
    parse_triples_text,
    restrict,
    triples_of,
    write_newick,
)
from conftest import component_count


def T(text: str) -> RootedPhyloTree:
    return parse_newick(text)


def trip(text: str) -> RootedTriple:
    return parse_triple(text)


class TestNewick:
    def test_rooted_triple(self):
        tree = T("((a,b),c);")
        assert tree.leaves == ("a", "b", "c")
        assert tree.is_binary()

    def test_star_is_legal(self):
        tree = T("(a,b,c);")
        assert not tree.is_binary()
        assert tree.leaf_count == 3

    def test_canonical_round_trip(self):
        assert T("((a,b),(c,d));").newick() == "((a,b),(c,d));"
        assert T("((d,c),(b,a));").newick() == "((a,b),(c,d));"

    def test_write_parse_write_is_write(self):
        for tree in enumerate_binary_trees("abcde"):
            text = write_newick(tree)
            assert write_newick(parse_newick(text)) == text

    def test_parse_errors(self):
        bad = [
            "((a,b),c)",        # missing ;
            "((a,b),c); x",      # trailing
            "((a,b):1,c);",      # branch length
            "((a,b)x,c);",       # internal label
            "(('a',b),c);",      # quoted label
            "((a,b),a);",        # duplicate leaf
            "((a),b);",          # out-degree 1
            "(,a);",             # empty clade
            "();",
        ]
        for text in bad:
            with pytest.raises(ParseError):
                parse_newick(text)

    def test_whitespace_tolerated(self):
        assert T(" ( (a, b) , c ) ; ").newick() == "((a,b),c);"

    def test_multichar_labels(self):
        tree = T("((taxon_1,taxon_2),outgroup);")
        assert tree.leaves == ("outgroup", "taxon_1", "taxon_2")


class TestTripleParsing:
    def test_compact(self):
        t = trip("a,b|c")
        assert t.cherry == {"a", "b"} and t.out == "c"
        assert t.compact() == "a,b|c"

    def test_cherry_order_normalized(self):
        assert trip("b,a|c") == trip("a,b|c")

    def test_newick_line(self):
        (t,) = parse_triples_text("((a,b),c);\n")
        assert t == trip("a,b|c")

    def test_distinct_taxa_required(self):
        with pytest.raises(InputError):
            RootedTriple.of("a", "a", "b")


class TestDisplay:
    def test_fig2_tree_displays_ab_c(self):
        host = T("((a,(b,c)),(d,(e,f)));")
        assert displays_triple(host, trip("b,c|a"))
        assert not displays_triple(host, trip("a,b|c"))

    def test_three_leaf_exclusivity(self):
        host = T("((a,b),c);")
        assert displays_triple(host, trip("a,b|c"))
        assert not displays_triple(host, trip("a,c|b"))
        assert not displays_triple(host, trip("b,c|a"))

    def test_star_displays_nothing(self):
        host = T("(a,b,c);")
        assert not displays_triple(host, trip("a,b|c"))

    def test_missing_taxon(self):
        with pytest.raises(InputError):
            displays_triple(T("((a,b),c);"), trip("a,b|z"))

    def test_trichotomy_on_binary_trees(self):
        rng = random.Random(3)
        trees = enumerate_binary_trees("abcdef")
        for tree in rng.sample(trees, 40):
            for a, b, c in combinations(tree.leaves, 3):
                shown = [
                    displays_triple(tree, RootedTriple.of(*order))
                    for order in ((a, b, c), (a, c, b), (b, c, a))
                ]
                assert sum(shown) == 1


class TestTriplesOf:
    def test_single_triple(self):
        assert triples_of(T("((a,b),c);")) == {trip("a,b|c")}

    def test_caterpillar(self):
        got = triples_of(T("(((a,b),c),d);"))
        assert got == {trip("a,b|c"), trip("a,b|d"), trip("a,c|d"), trip("b,c|d")}

    def test_star_has_none(self):
        assert triples_of(T("(a,b,c,d);")) == frozenset()

    def test_binary_tree_is_fully_resolved(self):
        for tree in enumerate_binary_trees("abcde"):
            assert len(triples_of(tree)) == 10


class TestDisplaysTree:
    def test_guest_triple(self):
        host = T("((a,(b,c)),(d,(e,f)));")
        assert displays_tree(host, trip("b,c|a").as_tree())

    def test_self_display(self):
        for tree in enumerate_binary_trees("abcd"):
            assert displays_tree(tree, tree)

    def test_negative(self):
        assert not displays_tree(T("((a,b),(c,d));"), T("((a,c),b);"))

    def test_nonbinary_guest_rejected(self):
        with pytest.raises(InputError):
            displays_tree(T("((a,b),(c,d));"), T("(a,b,c);"))

    def test_guest_leaves_checked(self):
        with pytest.raises(InputError):
            displays_tree(T("((a,b),c);"), T("((a,z),b);"))


class TestRestrict:
    def test_two_leaves(self):
        assert restrict(T("((a,b),c);"), {"a", "c"}).newick() == "(a,c);"

    def test_fig2_restriction(self):
        host = T("((a,(b,c)),(d,(e,f)));")
        assert restrict(host, {"a", "b", "c"}).newick() == "(a,(b,c));"

    def test_idempotent(self):
        host = T("((a,(b,c)),(d,(e,f)));")
        once = restrict(host, {"a", "c", "e", "f"})
        assert restrict(once, set(once.leaves)) == once

    def test_triples_commute_with_restriction(self):
        rng = random.Random(9)
        for tree in rng.sample(enumerate_binary_trees("abcdef"), 25):
            sub = rng.sample(tree.leaves, 4)
            small = restrict(tree, sub)
            expect = {t for t in triples_of(tree) if t.taxa <= set(sub)}
            assert triples_of(small) == expect


class TestMakeBinary:
    def test_star(self):
        assert make_binary(T("(a,b,c);")).newick() == "((a,b),c);"

    def test_already_binary_unchanged(self):
        tree = T("((a,b),(c,d));")
        assert make_binary(tree) == tree

    def test_refinement_displays_original_triples(self):
        tree = T("((a,b,c),(d,e),f);")
        refined = make_binary(tree)
        assert refined.is_binary()
        assert triples_of(tree) <= triples_of(refined)


class TestClusterGraph:
    def test_fig1_ii_connected(self):
        triples = [trip(x) for x in ("a,b|c", "b,d|a", "b,c|e", "d,f|e", "b,e|d")]
        adj = cluster_graph(triples, "abcdef")
        assert component_count(adj) == 1

    def test_outgroup_outside_scope(self):
        assert cluster_graph([trip("a,b|c")], {"a", "b"}) == {"a": (), "b": ()}

    def test_edge_inside_scope(self):
        adj = cluster_graph([trip("a,b|c")], {"a", "b", "c"})
        assert adj["a"] == ("b",) and adj["b"] == ("a",) and adj["c"] == ()


class TestBuild:
    def test_single_triple(self):
        assert build_supertree([trip("a,b|c")]).tree.newick() == "((a,b),c);"

    def test_chain(self):
        result = build_supertree([trip("a,b|c"), trip("b,c|d")])
        assert result.tree.newick() == "(((a,b),c),d);"
        for t in (trip("a,b|c"), trip("b,c|d")):
            assert displays_triple(result.tree, t)

    def test_fig1_ii_incompatible(self):
        triples = [trip(x) for x in ("a,b|c", "b,d|a", "b,c|e", "d,f|e", "b,e|d")]
        result = build_supertree(triples)
        assert not result.compatible
        assert result.witness == ("a", "b", "c", "d", "e", "f")

    def test_empty_triples_star(self):
        result = build_supertree([], taxa={"a", "b", "c", "d"})
        assert result.tree.newick() == "(a,b,c,d);"

    def test_soundness_random(self):
        rng = random.Random(19)
        taxa = "abcdef"
        for _ in range(80):
            triples = {
                RootedTriple.of(*rng.sample(taxa, 3)) for _ in range(rng.randint(1, 6))
            }
            result = build_supertree(triples)
            if result.compatible:
                for t in triples:
                    assert displays_triple(result.tree, t)

    def test_completeness_against_enumeration_4taxa(self):
        # Every subset of the 12 possible triples on four taxa.
        taxa = "abcd"
        pool = [
            RootedTriple.of(*order)
            for combo in combinations(taxa, 3)
            for order in (
                (combo[0], combo[1], combo[2]),
                (combo[0], combo[2], combo[1]),
                (combo[1], combo[2], combo[0]),
            )
        ]
        hosts = enumerate_binary_trees(taxa)
        for mask in range(1 << len(pool)):
            triples = [pool[i] for i in range(len(pool)) if mask >> i & 1]
            result = build_supertree(triples, taxa=set(taxa))
            displayable = any(
                all(displays_triple(h, t) for t in triples) for h in hosts
            )
            assert result.compatible == displayable

    def test_completeness_random_6taxa(self):
        rng = random.Random(21)
        hosts = enumerate_binary_trees("abcdef")
        for _ in range(40):
            triples = {
                RootedTriple.of(*rng.sample("abcdef", 3))
                for _ in range(rng.randint(1, 7))
            }
            result = build_supertree(triples, taxa=set("abcdef"))
            displayable = any(
                all(displays_triple(h, t) for t in triples) for h in hosts
            )
            assert result.compatible == displayable

    def test_binary_identifiability(self):
        rng = random.Random(25)
        for m in range(3, 8):
            trees = enumerate_binary_trees("abcdefg"[:m])
            sample = trees if m <= 6 else rng.sample(trees, 200)
            for tree in sample:
                rebuilt = build_supertree(triples_of(tree))
                assert rebuilt.tree == tree


class TestLcaSupport:
    def test_lca_examples(self):
        tree = T("((a,b),c);")
        cherry = tree.lca({"a", "b"})
        root = tree.lca({"a", "c"})
        assert tree.cluster(cherry) == {"a", "b"}
        assert tree.cluster(root) == {"a", "b", "c"}
        assert root == 0

    def test_lemma_two_components(self):
        # Triples supporting every non-root interior vertex of a binary
        # tree, jointly covering the leaves, split the cluster graph in
        # exactly two components.
        rng = random.Random(33)
        for m in range(3, 8):
            trees = enumerate_binary_trees("abcdefg"[:m])
            for tree in rng.sample(trees, min(12, len(trees))):
                triples = _supporting_triples(tree, rng)
                covered = set()
                for t in triples:
                    covered |= t.taxa
                assert covered == set(tree.leaves)
                adj = cluster_graph(triples, tree.leaves)
                assert component_count(adj) == 2


def _supporting_triples(tree, rng):
    triples = []
    leaves = set(tree.leaves)
    for v in tree.interior_ids():
        if v == 0:
            continue
        kids = tree.children_ids(v)
        a = rng.choice(sorted(tree.cluster(kids[0])))
        b = rng.choice(sorted(tree.cluster(kids[1])))
        c = rng.choice(sorted(leaves - tree.cluster(v)))
        triples.append(RootedTriple.of(a, b, c))
    missing = leaves - {x for t in triples for x in t.taxa}
    for z in sorted(missing):
        v = next(
            v for v in tree.interior_ids()
            if v != 0 and z not in tree.cluster(v)
        )
        kids = tree.children_ids(v)
        a = min(tree.cluster(kids[0]))
        b = min(tree.cluster(kids[1]))
        triples.append(RootedTriple.of(a, b, z))
    return triples


class TestUnrooted:
    def quartet(self) -> UnrootedPhyloTree:
        edges = [(4, 0), (4, 1), (5, 2), (5, 3), (4, 5)]
        return UnrootedPhyloTree(edges, {0: "a", 1: "b", 2: "c", 3: "d"})

    def test_median_quartet(self):
        tree = self.quartet()
        assert tree.median({"a", "b", "c"}) == 4
        assert tree.median({"a", "c", "d"}) == 5

    def test_median_needs_three(self):
        with pytest.raises(InputError):
            self.quartet().median({"a", "b"})

    def test_degree_validation(self):
        with pytest.raises(InputError):
            UnrootedPhyloTree([(0, 1), (1, 2)], {0: "a", 2: "b"})

    def test_disconnected_rejected(self):
        with pytest.raises(InputError):
            UnrootedPhyloTree([(0, 1), (2, 3)], {0: "a", 1: "b", 2: "c", 3: "d"})

    def test_newick(self):
        assert self.quartet().newick() == "(a,b,(c,d));"

    def test_cherries(self):
        assert self.quartet().cherry_count() == 2
        assert self.quartet().is_binary()
