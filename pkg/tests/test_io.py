import json

import numpy as np
import pytest

from qdtree import ModelParams, WeightedEnsemble
from qdtree import io as qio
from qdtree.coarse import coarse_evolve
from qdtree.errors import ConfigError


def test_snapshot_roundtrip_is_bit_exact(tmp_path, rng):
    u = rng.uniform(-0.7, 0.7, 50)
    v = rng.uniform(-0.7, 0.7, 50)
    w = rng.random(50)
    e = WeightedEnsemble(w / w.sum(), u, v, t=4)
    f = tmp_path / "snap.txt"
    qio.write_snapshot(f, e, "random", 0.3, 2, {"a": 1}, seed=9)
    lines = f.read_text().splitlines()
    assert lines[0].startswith("# qdtree ") and lines[2] == "# seed=9"
    assert lines[3] == "t=4 variant=random J=0.29999999999999999 k=2"
    back, hdr = qio.read_snapshot(f)
    assert hdr == {"t": 4, "variant": "random", "J": 0.3, "k": 2}
    assert np.array_equal(back.w, e.w) and np.array_equal(back.u, e.u) and np.array_equal(back.v, e.v)


def test_snapshot_missing_header(tmp_path):
    f = tmp_path / "bad.txt"
    f.write_text("# only comments\n")
    with pytest.raises(ConfigError):
        qio.read_snapshot(f)


def test_csv_table_header_and_rows(tmp_path):
    f = tmp_path / "o.csv"
    with qio.CsvTable(f, qio.OBSERVABLE_COLUMNS, {"x": 1}, seed=3) as tab:
        tab.write({"variant": "random", "J": 0.3, "k": 1, "t": 0, "purity": 1.0})
    rows = qio.read_csv(f)
    assert list(rows[0]) == list(qio.OBSERVABLE_COLUMNS)
    assert rows[0]["lambda_d"] == "" and float(rows[0]["J"]) == 0.3
    text = f.read_text()
    assert f"# config_hash={qio.config_hash({'x': 1})}" in text
    with qio.CsvTable(f, qio.OBSERVABLE_COLUMNS, append=True) as tab:
        tab.write(("random", 0.4, 1, 1, 0, 0, 0.5, 0.1, 1.0, ""))
    assert len(qio.read_csv(f)) == 2


def test_triple_roundtrip(tmp_path):
    tr = coarse_evolve(ModelParams(0.3, "deterministic", 2), 5)
    f = tmp_path / "tr.csv"
    qio.write_triple(f, tr)
    back = qio.read_triple(f)
    assert back.t == 5
    assert np.array_equal(back.p, tr.p) and np.array_equal(back.a, tr.a)


def test_histogram(tmp_path):
    e = WeightedEnsemble([0.25, 0.75], [-0.999, 0.5], [0.0, 0.5])
    H = qio.write_histogram(tmp_path / "h.csv", e)
    assert H.shape == (200, 200) and H.sum() == pytest.approx(1.0)
    data = np.loadtxt(tmp_path / "h.csv", delimiter=",", comments="#")
    assert data.shape == (200, 200)
    assert data[0, 100] == 0.25


def test_metadata_jsonl(tmp_path):
    f = tmp_path / "m.jsonl"
    qio.append_metadata(f, {"a": np.float64(1.5)})
    qio.append_metadata(f, {"b": np.arange(2)})
    recs = [json.loads(x) for x in f.read_text().splitlines()]
    assert recs == [{"a": 1.5}, {"b": [0, 1]}]


def test_config_file(tmp_path):
    f = tmp_path / "c.cfg"
    f.write_text("# comment\nJ = 0.3\nsnapshot-every=2  # inline\n\n")
    assert qio.read_config(f) == {"J": "0.3", "snapshot_every": "2"}
    f.write_text("nonsense\n")
    with pytest.raises(ConfigError):
        qio.read_config(f)


def test_parse_grid():
    assert qio.parse_grid("0.1:0.3:0.1") == [0.1, 0.2, 0.3]
    assert qio.parse_grid("2:5", int) == [2, 3, 4, 5]
    assert qio.parse_grid("1,4,9", int) == [1, 4, 9]
    assert qio.parse_grid("") == []
    with pytest.raises(ConfigError):
        qio.parse_grid("a,b")
    with pytest.raises(ConfigError):
        qio.parse_grid("0:1:0")


def test_default_outdir(monkeypatch, tmp_path):
    monkeypatch.setenv(qio.OUTDIR_ENV, str(tmp_path))
    assert qio.default_outdir() == tmp_path
    monkeypatch.delenv(qio.OUTDIR_ENV)
    assert str(qio.default_outdir()) == "qdtree_out"


def test_config_hash_is_order_independent():
    assert qio.config_hash({"a": 1, "b": 2}) == qio.config_hash({"b": 2, "a": 1})
    assert qio.config_hash({"a": 1}) != qio.config_hash({"a": 2})


def test_json_carries_provenance(tmp_path):
    cfg = {"J": 0.3, "k": 1}
    qio.write_json(tmp_path / "s.json", {"x": 1}, cfg, 7)
    d = json.loads((tmp_path / "s.json").read_text())
    assert d["x"] == 1
    assert d["provenance"] == {"tool": f"qdtree {qio.__version__}",
                               "config_hash": qio.config_hash(cfg), "seed": 7}
