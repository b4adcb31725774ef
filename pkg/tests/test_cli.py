import csv
import json

import numpy as np
import pytest

from rfa import _kernels
from rfa.cli import main
from rfa.engine import init_noise
from rfa.io import read_embedding_bin, read_embedding_csv


@pytest.fixture(autouse=True)
def _restore_threads():
    before = _kernels.get_threads()
    yield
    _kernels.set_threads(before)


def run(*argv):
    return main([str(a) for a in argv])


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestGen:
    def test_barbell(self, tmp_path, capsys):
        out = tmp_path / "b.txt"
        assert run("gen", "barbell", "--n", 6, "--c", 3, "--out", out) == 0
        assert "n=15 m=34" in capsys.readouterr().out
        lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
        assert len(lines) == 34

    def test_er_edge_count(self, tmp_path, capsys):
        out = tmp_path / "er.txt"
        assert run("gen", "er", "--n", 100_000, "--avg-deg", 10, "--seed", 7, "--out", out) == 0
        m = int(capsys.readouterr().out.split("m=")[1].split()[0])
        assert abs(m - 500_000) < 5 * np.sqrt(500_000)

    def test_sbm_writes_labels(self, tmp_path):
        out = tmp_path / "s.txt"
        assert run("gen", "sbm", "--blocks", "100,100,100", "--pin", 0.1, "--pout", 0.01,
                   "--seed", 1, "--out", out) == 0
        labels = np.loadtxt(str(out) + ".labels", dtype=int)
        assert labels.shape == (300, 2)
        assert sorted(set(labels[:, 1])) == [0, 1, 2]

    def test_role_ring(self, tmp_path):
        out = tmp_path / "r.txt"
        assert run("gen", "role-ring", "--stars", 10, "--leaves", 5, "--out", out) == 0
        assert (tmp_path / "r.txt.labels").exists()

    def test_bad_params_nonzero(self, tmp_path):
        assert run("gen", "barbell", "--n", 2, "--c", 1, "--out", tmp_path / "x") == 2

    def test_missing_params_is_usage_error(self, tmp_path):
        assert run("gen", "er", "--out", tmp_path / "x") == 1


class TestEmbed:
    @pytest.fixture
    def graph(self, tmp_path):
        p = tmp_path / "b.txt"
        run("gen", "barbell", "--n", 6, "--c", 3, "--out", p)
        return p

    def test_zero_iterations_is_noise(self, tmp_path, graph):
        out = tmp_path / "z.csv"
        assert run("embed", graph, "--filter", "low", "--dim", 8, "--iters", 0, "--seed", 5,
                   "--out", out) == 0
        ids, z = read_embedding_csv(out)
        assert ids.tolist() == list(range(15))
        assert np.array_equal(z, init_noise(15, 8, 5))

    def test_preset_recorded(self, tmp_path, graph):
        out = tmp_path / "z.csv"
        assert run("embed", graph, "--preset", "europe", "--out", out) == 0
        man = json.loads((tmp_path / "z.csv.manifest.json").read_text())
        rfa = man["config"]["rfa"]
        assert (rfa["dim"], rfa["filter"]["tau"], rfa["iters"], rfa["activation"],
                rfa["normalization"], rfa["filter"]["alpha"]) == (64, 20.0, 3, "exp",
                                                                   "zscore_col", -1.0)
        assert read_embedding_csv(out)[1].shape == (15, 64)

    def test_preset_overrides_flags(self, tmp_path, graph):
        out = tmp_path / "z.csv"
        run("embed", graph, "--preset", "usa", "--dim", 5, "--out", out)
        assert read_embedding_csv(out)[1].shape[1] == 64

    def test_manifest_contents(self, tmp_path, graph, capsys):
        out = tmp_path / "z.csv"
        run("embed", graph, "--iters", 2, "--out", out)
        assert "inference_time_sec=" in capsys.readouterr().out
        man = json.loads((tmp_path / "z.csv.manifest.json").read_text())
        assert man["command"] == "embed"
        assert str(graph) in man["inputs"]
        assert {"load", "embed", "write"} <= set(man["timings_sec"])
        assert man["seed"] == 0 and "version" in man

    def test_rerun_byte_identical(self, tmp_path, graph):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run("embed", graph, "--filter", "high", "--iters", 3, "--threads", 1, "--out", a)
        run("embed", graph, "--filter", "high", "--iters", 3, "--threads", 4, "--out", b)
        assert a.read_bytes() == b.read_bytes()

    def test_config_replay(self, tmp_path, graph):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run("embed", graph, "--filter", "high", "--tau", 3, "--dim", 12, "--iters", 4,
            "--norm", "l2_row", "--seed", 9, "--out", a)
        run("embed", graph, "--config", str(a) + ".manifest.json", "--out", b)
        assert a.read_bytes() == b.read_bytes()

    def test_binary_output(self, tmp_path, graph):
        out = tmp_path / "z.bin"
        run("embed", graph, "--format", "bin", "--iters", 1, "--out", out)
        assert read_embedding_bin(out).shape == (15, 64)
        assert np.loadtxt(str(out) + ".ids").tolist() == list(range(15))

    def test_disconnected_uses_lcc_with_original_ids(self, tmp_path, caplog):
        p = tmp_path / "g.txt"
        p.write_text("10 11\n11 12\n12 10\n50 51\n")
        out = tmp_path / "z.csv"
        assert run("embed", p, "--dim", 4, "--iters", 2, "--out", out) == 0
        assert read_embedding_csv(out)[0].tolist() == [10, 11, 12]
        assert "components" in caplog.text

    def test_parse_error_exit_and_phase(self, tmp_path, capsys):
        p = tmp_path / "bad.txt"
        p.write_text("0 1\n1 x\n")
        assert run("embed", p, "--out", tmp_path / "z.csv") == 2
        err = capsys.readouterr().err
        assert "phase 'load'" in err and ":2:" in err

    def test_missing_file(self, tmp_path, capsys):
        assert run("embed", tmp_path / "nope.txt", "--out", tmp_path / "z.csv") == 2
        assert "phase 'load'" in capsys.readouterr().err

    def test_numeric_error_exit(self, tmp_path, graph, monkeypatch, capsys):
        def poison(x):
            x[:] = np.inf

        monkeypatch.setattr(_kernels, "tanh_inplace", poison)
        assert run("embed", graph, "--act", "tanh", "--out", tmp_path / "z.csv") == 3
        assert "phase 'embed'" in capsys.readouterr().err

    def test_usage_error(self):
        with pytest.raises(SystemExit) as info:
            run("embed", "--dim", "x")
        assert info.value.code == 1


class TestSpectrum:
    def test_barbell(self, tmp_path):
        g = tmp_path / "b.txt"
        run("gen", "barbell", "--n", 6, "--c", 3, "--out", g)
        out = tmp_path / "spec"
        assert run("spectrum", g, "--tau", 0, 1, 5, 10, 50, 100, "--eigenvectors",
                   "--out", out) == 0
        rows = _rows(out / "summary.csv")
        spreads = [float(r["spread"]) for r in rows]
        assert all(b <= a for a, b in zip(spreads, spreads[1:]))
        assert all(float(r["spread"]) <= float(r["gershgorin_radius"]) for r in rows)
        eig = _rows(out / "eigenvalues_tau0.csv")
        assert abs(float(eig[0]["eigenvalue"])) < 1e-10
        assert spreads[0] == pytest.approx(1.0, abs=1e-12)
        assert np.loadtxt(out / "eigenvectors_tau0.csv", delimiter=",").shape == (15, 15)

    def test_cap(self, tmp_path, capsys):
        g = tmp_path / "b.txt"
        run("gen", "barbell", "--n", 6, "--c", 3, "--out", g)
        assert run("spectrum", g, "--cap", 10, "--out", tmp_path / "s") == 2
        assert "subsample" in capsys.readouterr().err


class TestEval:
    def _onehot(self, tmp_path):
        labels = np.arange(60) % 3
        emb = tmp_path / "e.csv"
        lab = tmp_path / "l.txt"
        with open(emb, "w") as fh:
            fh.write("node_id,v0,v1,v2\n")
            for i, c in enumerate(labels):
                row = [0, 0, 0]
                row[c] = 1
                fh.write(f"{i},{row[0]},{row[1]},{row[2]}\n")
        lab.write_text("".join(f"{i} {c}\n" for i, c in enumerate(labels)))
        return emb, lab

    def test_one_hot_perfect(self, tmp_path):
        emb, lab = self._onehot(tmp_path)
        out = tmp_path / "r.json"
        assert run("eval", "--embeddings", emb, "--labels", lab, "--out", out) == 0
        rep = json.loads(out.read_text())
        assert rep["micro_f1"]["mean"] == 1.0 and rep["macro_f1"]["mean"] == 1.0
        assert rep["trials"] == 10 and rep["train_ratio"] == 0.2

    def test_id_mismatch(self, tmp_path, capsys):
        emb, lab = self._onehot(tmp_path)
        with open(lab, "a") as fh:
            fh.write("500 1\n")
        assert run("eval", "--embeddings", emb, "--labels", lab, "--out",
                   tmp_path / "r.json") == 2
        assert "500" in capsys.readouterr().err
        assert run("eval", "--embeddings", emb, "--labels", lab, "--allow-missing",
                   "--out", tmp_path / "r.json") == 0

    def test_shuffled_labels_near_chance(self, tmp_path):
        rng = np.random.default_rng(0)
        g = tmp_path / "s.txt"
        run("gen", "sbm", "--blocks", "100,100,100", "--pin", 0.1, "--pout", 0.01,
            "--seed", 1, "--out", g)
        emb = tmp_path / "e.csv"
        run("embed", g, "--dim", 32, "--out", emb)
        lab = np.loadtxt(str(g) + ".labels", dtype=int)
        lab[:, 1] = rng.permutation(lab[:, 1])
        np.savetxt(tmp_path / "shuffled.txt", lab, fmt="%d")
        out = tmp_path / "r.json"
        run("eval", "--embeddings", emb, "--labels", tmp_path / "shuffled.txt", "--out", out)
        assert abs(json.loads(out.read_text())["micro_f1"]["mean"] - 1 / 3) <= 0.05

    def test_inference_time_from_manifest(self, tmp_path):
        g = tmp_path / "r.txt"
        run("gen", "role-ring", "--stars", 10, "--leaves", 3, "--out", g)
        emb = tmp_path / "e.csv"
        run("embed", g, "--dim", 8, "--iters", 2, "--out", emb)
        out = tmp_path / "r.json"
        run("eval", "--embeddings", emb, "--labels", str(g) + ".labels", "--trials", 2,
            "--out", out)
        man = json.loads((tmp_path / "e.csv.manifest.json").read_text())
        rep = json.loads(out.read_text())
        assert rep["inference_time_sec"] == man["timings_sec"]["embed"]


def test_ntos(tmp_path):
    table = tmp_path / "t.csv"
    table.write_text("method,time_sec,metric\nfast,1,0.4\nmid,5,0.6\nslow,10,0.8\n")
    out = tmp_path / "n.csv"
    assert run("ntos", table, "--out", out) == 0
    got = {r["method"]: float(r["ntos"]) for r in _rows(out)}
    assert got["fast"] == 0 and got["slow"] == 0
    assert got["mid"] == pytest.approx(0.2778, abs=1e-4)


def test_ntos_degenerate(tmp_path):
    table = tmp_path / "t.csv"
    table.write_text("method,time_sec,metric\na,1,0.4\n")
    assert run("ntos", table, "--out", tmp_path / "n.csv") == 2


class TestBench:
    def test_rows_and_repeat_determinism(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        common = ["--n-list", 1000, 5000, "--avg-deg", 10, "--dim", 8, "--iters", 2]
        assert run("bench", *common, "--repeat", 1, "--out", a) == 0
        assert run("bench", *common, "--repeat", 3, "--out", b) == 0
        ra, rb = _rows(a), _rows(b)
        assert [r["n"] for r in ra] == ["1000", "5000"]
        assert [r["m"] for r in ra] == [r["m"] for r in rb]
        assert all(r["status"] == "ok" for r in ra + rb)
        man = json.loads((tmp_path / "b.csv.manifest.json").read_text())
        assert man["config"]["repeat"] == 3

    def test_bad_row_marked_others_run(self, tmp_path):
        out = tmp_path / "b.csv"
        assert run("bench", "--n-list", 1, 500, "--avg-deg", 4, "--dim", 4, "--iters", 1,
                   "--out", out) == 0
        rows = _rows(out)
        assert rows[0]["status"].startswith("error")
        assert rows[1]["status"] == "ok"

    def test_defaults(self, tmp_path):
        out = tmp_path / "b.csv"
        run("bench", "--n-list", 300, "--avg-deg", 4, "--repeat", 1, "--out", out)
        cfg = json.loads((tmp_path / "b.csv.manifest.json").read_text())["config"]["rfa"]
        assert (cfg["dim"], cfg["iters"], cfg["filter"]["tau"]) == (64, 10, 20.0)
