import json

import pytest

from setflex.cli import main


@pytest.fixture
def fig1(tmp_path):
    path = tmp_path / "fig1.sets"
    path.write_text("a,b,c\na,b,d\nb,c,e\nd,e,f\n")
    return str(path)


@pytest.fixture
def fig1p(tmp_path):
    path = tmp_path / "fig1p.sets"
    path.write_text("a,b,c\na,b,d\nb,c,e\nd,e,f\nb,d,e\n")
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def run_json(capsys, *argv):
    code, out = run(capsys, *argv, "--json", "--no-stats")
    return code, json.loads(out)


class TestCheck:
    def test_thin_fig1(self, capsys, fig1):
        code, payload = run_json(capsys, "check", "thin", fig1, "--r", "3")
        assert code == 0
        assert payload["verdict"] is True
        assert payload["sigma_star"] == 2
        assert payload["method"] == "mincut"

    def test_thin_infers_r(self, capsys, fig1):
        code, payload = run_json(capsys, "check", "thin", fig1)
        assert code == 0 and payload["r"] == 3

    def test_thin_exhaustive_fig1p(self, capsys, fig1p):
        code, payload = run_json(
            capsys, "check", "thin", fig1p, "--method", "exhaustive"
        )
        assert code == 1
        assert payload["certificate"]["excess"] == -1

    def test_slim(self, capsys, tmp_path):
        path = tmp_path / "quads.sets"
        path.write_text("a,b,c,d\nc,d,e,f\n")
        code, payload = run_json(capsys, "check", "slim", str(path))
        assert code == 0 and payload["gamma_star"] == 2

    def test_flexible_bruteforce_fig1p(self, capsys, fig1p):
        code, payload = run_json(
            capsys, "check", "flexible", fig1p, "--method", "bruteforce"
        )
        assert code == 1
        assert all("|" in line for line in payload["certificate"])

    def test_flexible_counterexample_printed_as_lines(self, capsys, fig1p):
        code, out = run(
            capsys, "check", "flexible", fig1p, "--method", "bruteforce",
            "--no-stats",
        )
        assert code == 1
        lines = out.splitlines()
        assert "counterexample:" in lines
        triple_lines = lines[lines.index("counterexample:") + 1:]
        assert len(triple_lines) == 5 and all("|" in t for t in triple_lines)

    def test_flexible_mincut(self, capsys, fig1):
        code, payload = run_json(capsys, "check", "flexible", fig1)
        assert code == 0 and payload["method"] == "mincut"

    def test_order_flexible_triangle(self, capsys, tmp_path):
        path = tmp_path / "pairs.sets"
        path.write_text("a,b\nb,c\na,c\n")
        code, payload = run_json(capsys, "check", "order-flexible", str(path))
        assert code == 1 and payload["method"] == "forest"
        code2, payload2 = run_json(
            capsys, "check", "order-flexible", str(path), "--method", "bruteforce"
        )
        assert code2 == 1
        assert payload2["certificate"]["cycle"] == ["a", "b", "c"]

    def test_budget_exceeded_exit_3(self, capsys, fig1, monkeypatch):
        monkeypatch.setenv("SETFLEX_BUDGET", "10")
        code, out = run(capsys, "check", "flexible", fig1, "--method", "bruteforce")
        assert code == 3

    def test_bad_budget_env_exit_2(self, capsys, fig1, monkeypatch):
        monkeypatch.setenv("SETFLEX_BUDGET", "lots")
        code, _ = run(capsys, "check", "flexible", fig1, "--method", "bruteforce")
        assert code == 2

    def test_budget_flag_overrides(self, capsys, fig1):
        code, _ = run_json(
            capsys, "check", "flexible", fig1, "--method", "bruteforce",
            "--budget", "100",
        )
        assert code == 0

    def test_mixed_sizes_need_slim(self, capsys, tmp_path):
        path = tmp_path / "mixed.sets"
        path.write_text("a,b,c\na,b,c,d\n")
        code, _ = run(capsys, "check", "thin", str(path))
        assert code == 2

    def test_cap_exceeded_exit_3(self, capsys, fig1):
        code, _ = run(
            capsys, "check", "thin", fig1, "--method", "exhaustive", "--cap", "3"
        )
        assert code == 3

    def test_orientation_cap_default_is_20(self, capsys, tmp_path):
        # 17 pairs exceed the exhaustive cap but fit the orientation cap;
        # the leading triangle makes the scan fail fast.
        labels = [f"t{i:02d}" for i in range(15)]
        lines = "a,b\na,c\nb,c\n" + "".join(
            f"{labels[i]},{labels[i + 1]}\n" for i in range(14)
        )
        path = tmp_path / "pairs.sets"
        path.write_text(lines)
        code, _ = run_json(
            capsys, "check", "order-flexible", str(path), "--method", "bruteforce"
        )
        assert code == 1

        over = path.with_name("over.sets")
        over.write_text(lines + "x,y\ny,z\nx,z\nw,x\n")
        code, _ = run(
            capsys, "check", "order-flexible", str(over), "--method", "bruteforce"
        )
        assert code == 3


class TestSupertree:
    def test_chain(self, capsys, tmp_path):
        path = tmp_path / "triples.txt"
        path.write_text("a,b|c\nb,c|d\n")
        code, out = run(capsys, "supertree", str(path), "--no-stats")
        assert code == 0
        assert out.strip() == "(((a,b),c),d);"

    def test_single_triple(self, capsys, tmp_path):
        path = tmp_path / "one.txt"
        path.write_text("a,b|c\n")
        code, out = run(capsys, "supertree", str(path), "--no-stats")
        assert code == 0 and out.strip() == "((a,b),c);"

    def test_fig1_ii_witness(self, capsys, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("a,b|c\nb,d|a\nb,c|e\nd,f|e\nb,e|d\n")
        code, payload = run_json(capsys, "supertree", str(path))
        assert code == 1
        assert payload["witness"] == ["a", "b", "c", "d", "e", "f"]

    def test_newick_input_expanded(self, capsys, tmp_path):
        path = tmp_path / "trees.txt"
        path.write_text("((a,b),c);\n((c,d),e);\n")
        code, payload = run_json(capsys, "supertree", str(path))
        assert code == 0

    def test_binary_flag(self, capsys, tmp_path):
        path = tmp_path / "sparse.txt"
        path.write_text("a,b|c\nd,e|f\n")
        code, payload = run_json(capsys, "supertree", str(path), "--binary")
        assert code == 0
        tree = payload["newick"]
        assert tree.count("(") == 5  # binary on six leaves


class TestRepresent:
    def test_median_fig3(self, capsys, tmp_path):
        path = tmp_path / "fig3.sets"
        path.write_text("a,b,c\nc,d,e\na,e,f\nb,e,g\na,d,g\n")
        code, payload = run_json(capsys, "represent", "median-caterpillar", str(path))
        assert code == 0
        assert payload["verified"] is True
        assert len(payload["vertex_map"]) == 5
        assert len(set(payload["vertex_map"].values())) == 5

    def test_single_triple_extra(self, capsys, tmp_path):
        path = tmp_path / "one.sets"
        path.write_text("a,b,c\n")
        code, payload = run_json(
            capsys, "represent", "median-caterpillar", str(path), "--extra", "d"
        )
        assert code == 0
        assert payload["appended_taxa"] == ["d"]
        assert len(payload["vertex_map"]) == 1

    def test_not_thin_exit_2(self, capsys, fig1p):
        code, out = run(
            capsys, "represent", "median-caterpillar", fig1p, "--json"
        )
        assert code == 2
        payload = json.loads(out)
        assert payload["sigma_star"] == 1
        assert "witness_indices" in payload

    def test_lca(self, capsys, tmp_path):
        path = tmp_path / "pairs.sets"
        path.write_text("a,b\nb,c\n")
        code, payload = run_json(capsys, "represent", "lca-caterpillar", str(path))
        assert code == 0 and payload["verified"] is True


class TestCount:
    def test_enumerated(self, capsys, tmp_path):
        path = tmp_path / "tr.txt"
        path.write_text("a,b|c\nd,e|f\n")
        code, payload = run_json(capsys, "count", str(path))
        assert code == 0 and payload == {
            "command": "count", "count": 105, "method": "enumeration",
        }

    def test_formula_only(self, capsys):
        code, payload = run_json(capsys, "count", "--formula-n", "9")
        assert code == 0 and payload["count"] == 75075

    def test_cross_checked(self, capsys, tmp_path):
        path = tmp_path / "tr.txt"
        path.write_text("a,b|c\nd,e|f\n")
        code, payload = run_json(capsys, "count", str(path), "--formula-n", "6")
        assert code == 0 and payload["method"] == "both"

    def test_mismatch_is_error(self, capsys, tmp_path):
        path = tmp_path / "tr.txt"
        path.write_text("a,b|c\nb,d|e\n")  # overlapping, not disjoint
        code, _ = run(capsys, "count", str(path), "--formula-n", "6")
        assert code == 2

    def test_single_triple(self, capsys, tmp_path):
        path = tmp_path / "tr.txt"
        path.write_text("a,b|c\n")
        code, payload = run_json(capsys, "count", str(path))
        assert payload["count"] == 1


class TestSdr:
    def test_fig1(self, capsys, fig1):
        code, payload = run_json(capsys, "sdr", fig1, "--B", "a,b")
        assert code == 0
        assert payload["assignment"] == {
            "a,b,c": "c", "a,b,d": "d", "b,c,e": "e", "d,e,f": "f",
        }

    def test_failure(self, capsys, fig1p):
        code, payload = run_json(capsys, "sdr", fig1p, "--B", "a,c")
        assert code == 1
        assert payload["violator_derived"] == [["b"], ["b", "d"], ["b", "e"], ["b", "d", "e"]]

    def test_bad_b_size(self, capsys, fig1):
        code, _ = run(capsys, "sdr", fig1, "--B", "a")
        assert code == 2


class TestOrder:
    def test_chain(self, capsys, tmp_path):
        path = tmp_path / "orient.txt"
        path.write_text("a,b\nb,c\n")
        code, payload = run_json(capsys, "order", str(path))
        assert code == 0 and payload["order"] == ["a", "b", "c"]

    def test_cycle(self, capsys, tmp_path):
        path = tmp_path / "orient.txt"
        path.write_text("a,b\nb,c\nc,a\n")
        code, payload = run_json(capsys, "order", str(path))
        assert code == 1 and payload["cycle"] == ["a", "b", "c"]


class TestGenDefining:
    def test_caterpillar(self, capsys, tmp_path):
        path = tmp_path / "tree.nwk"
        path.write_text("(((a,b),c),d);\n")
        code, out = run(capsys, "gen-defining", str(path), "--no-stats")
        assert code == 0
        assert out.splitlines() == ["b,c|d", "a,b|c"]

    def test_triple(self, capsys, tmp_path):
        path = tmp_path / "tree.nwk"
        path.write_text("((a,b),c);\n")
        code, out = run(capsys, "gen-defining", str(path), "--no-stats")
        assert out.strip() == "a,b|c"

    def test_round_trip_through_supertree(self, capsys, tmp_path):
        source = "((((a,(b,c)),d),(e,f)),g);"
        path = tmp_path / "tree.nwk"
        path.write_text(source + "\n")
        code, out = run(capsys, "gen-defining", str(path), "--no-stats")
        assert code == 0
        triples = tmp_path / "triples.txt"
        triples.write_text(out)
        code2, rebuilt = run(capsys, "supertree", str(triples), "--no-stats")
        assert code2 == 0
        assert rebuilt.strip() == source


class TestDeterminism:
    def test_json_outputs_are_byte_stable(self, capsys, fig1, fig1p, tmp_path):
        orient = tmp_path / "o.txt"
        orient.write_text("a,b\nb,c\n")
        invocations = [
            ("check", "thin", fig1),
            ("check", "flexible", fig1p, "--method", "bruteforce"),
            ("sdr", fig1, "--B", "a,b"),
            ("order", str(orient)),
            ("represent", "median-caterpillar", fig1),
        ]
        for argv in invocations:
            _, first = run(capsys, *argv, "--json", "--no-stats")
            _, second = run(capsys, *argv, "--json", "--no-stats")
            assert first == second

    def test_unknown_file_exit_2(self, capsys):
        code, _ = run(capsys, "check", "thin", "/nonexistent/path.sets")
        assert code == 2
