"""CLI: commands, exit statuses, determinism of emitted artifacts."""

import numpy as np
import pytest

from helpers import dense_to_sparse
from linfflow.cli import main
from linfflow.core import write_matrix_file


@pytest.fixture
def identity_instance(tmp_path):
    path = tmp_path / "id.linf"
    write_matrix_file(path, dense_to_sparse(np.eye(2)), b=None)
    return str(path)


@pytest.fixture
def path_graph(tmp_path):
    path = tmp_path / "path.dimacs"
    path.write_text(
        "c undirected\np max 3 2\nn 1 s\nn 3 t\na 1 2 1\na 2 3 1\n"
    )
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestRegress:
    def test_zero_rhs_identity(self, identity_instance, capsys, tmp_path):
        out_path = str(tmp_path / "x.txt")
        code, out, _ = run(capsys, "regress", "--input", identity_instance,
                           "--eps", "0.01", "--output", out_path)
        assert code == 0
        assert out.splitlines()[0] == "value 0.0"
        xs = [float(v) for v in open(out_path).read().split()]
        assert xs == [0.0, 0.0]

    @pytest.mark.parametrize("solver", ["cd-l2", "cd-diag", "mirror-prox",
                                        "gd", "plain-cd"])
    def test_all_regress_solvers_run(self, tmp_path, capsys, solver):
        rng = np.random.default_rng(0)
        a = rng.normal(size=(3, 3)) * 0.3
        path = tmp_path / "m.linf"
        write_matrix_file(path, dense_to_sparse(a), b=rng.normal(size=3) * 0.3)
        code, out, _ = run(capsys, "regress", "--input", str(path),
                           "--eps", "0.1", "--solver", solver, "--seed", "3")
        assert code == 0
        assert out.startswith("value ")

    def test_parse_failure_status(self, tmp_path, capsys):
        bad = tmp_path / "bad.linf"
        bad.write_text("linf-matrix v1 2 2 1\n0 0 oops\n")
        code, _, err = run(capsys, "regress", "--input", str(bad))
        assert code == 2
        assert "bad.linf:2" in err

    def test_byte_identical_reruns(self, tmp_path, capsys):
        rng = np.random.default_rng(1)
        path = tmp_path / "m.linf"
        write_matrix_file(path, dense_to_sparse(rng.normal(size=(3, 2))),
                          b=rng.normal(size=3))
        outs = []
        for k in range(2):
            trace = tmp_path / f"t{k}.csv"
            code, out, _ = run(capsys, "regress", "--input", str(path),
                               "--eps", "0.05", "--seed", "7",
                               "--trace", str(trace))
            assert code == 0
            outs.append((out, trace.read_bytes()))
        assert outs[0] == outs[1]


class TestFlowCommands:
    def test_maxflow_path_graph(self, path_graph, capsys, tmp_path):
        flow_out = str(tmp_path / "f.txt")
        code, out, _ = run(capsys, "maxflow", "--input", path_graph,
                           "--eps", "0.1", "--output", flow_out)
        assert code == 0
        lines = dict(l.split(" ", 1) for l in out.splitlines())
        assert float(lines["value"]) >= 0.9
        body = open(flow_out).read()
        assert body.startswith("e 1 2 ") and "value" in body

    def test_exact_flow(self, path_graph, capsys):
        code, out, _ = run(capsys, "exact-flow", "--input", path_graph)
        assert code == 0
        assert float(out.splitlines()[0].split()[1]) == 1.0

    def test_dinic_solver_choice(self, path_graph, capsys):
        code, out, _ = run(capsys, "maxflow", "--input", path_graph,
                           "--solver", "dinic")
        assert code == 0
        assert float(out.splitlines()[0].split()[1]) == 1.0


class TestBench:
    def test_bench_rows(self, identity_instance, capsys, tmp_path):
        trace = tmp_path / "bench.csv"
        code, out, _ = run(capsys, "bench", "--input", identity_instance,
                           "--eps-grid", "0.1,0.05,0.025",
                           "--trace", str(trace))
        assert code == 0
        rows = trace.read_text().splitlines()
        assert rows[0] == "eps,iterations,elapsed_ns,value"
        assert len(rows) == 4
        for row in rows[1:]:
            assert row.split(",")[2] == "0"  # deterministic by default

    def test_bad_eps_rejected(self, identity_instance, capsys):
        code, _, err = run(capsys, "bench", "--input", identity_instance,
                           "--eps-grid", "2.0")
        assert code == 2


class TestVerify:
    def test_matrix_checks(self, identity_instance, capsys):
        code, out, _ = run(capsys, "verify", "--input", identity_instance)
        assert code == 0
        assert "check softmax-sandwich ok" in out

    def test_graph_checks(self, path_graph, capsys):
        code, out, _ = run(capsys, "verify", "--input", path_graph)
        assert code == 0
        assert "check dinic-vs-augmenting ok" in out
        assert "check approximator-sandwich ok" in out
