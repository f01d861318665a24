import json
import math
import re

import numpy as np
import pytest

from qcdma.cli import main, svg_polylines

NETWORK = {
    "schema_version": 1,
    "kind": "network",
    "n_chips": 8,
    "seed": 4,
    "coupler": "balanced2x2",
    "transmitters": [
        {"state": "glauber", "alpha": 1.0, "code": {"kind": "walsh", "index": 1}},
        {"state": "glauber", "alpha": [0.0, 1.0], "code": {"kind": "random"}, "t_offset": 2.0},
    ],
}

OOK = {
    "schema_version": 1,
    "kind": "ook",
    "bits": [[1, 0, 1], [0, 1, 1]],
    "n_chips": 15,
    "state": "fock",
    "async": True,
    "oversample": 2,
}


def write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


class TestSimulate:
    def test_network(self, tmp_path):
        cfg = write(tmp_path, "net.json", NETWORK)
        out = tmp_path / "out"
        assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["schema_version"] == 1
        assert summary["energy_residual"] < 1e-9
        assert sum(summary["receiver_energy"]) == pytest.approx(2.0, abs=1e-9)
        lines = (out / "traces.csv").read_text().splitlines()
        assert lines[0] == "t,I_0,I_1"
        assert len(lines) == 8192 + 1
        assert not (out / "plot.svg").exists()

    def test_csv_round_trip(self, tmp_path):
        cfg = write(tmp_path, "net.json", NETWORK)
        out = tmp_path / "out"
        main(["simulate", "--config", cfg, "--out", str(out)])
        data = np.loadtxt(out / "traces.csv", delimiter=",", skiprows=1)
        row = (out / "traces.csv").read_text().splitlines()[100].split(",")
        assert [repr(float(x)) for x in row] == row
        assert np.all(data[:, 1:] >= 0)

    def test_ook_with_svg(self, tmp_path):
        cfg = write(tmp_path, "ook.json", OOK)
        out = tmp_path / "o"
        rc = main(["simulate", "--config", cfg, "--out", str(out), "--format", "csv",
                   "--format", "json", "--format", "svg"])
        assert rc == 0
        summary = json.loads((out / "summary.json").read_text())
        assert len(summary["slot_peak_normalized"]) == 2
        assert summary["offsets"][0] == 0.0
        svg = (out / "plot.svg").read_text()
        assert svg.startswith("<svg") and svg.count("<polyline") == 2

    def test_seed_override(self, tmp_path):
        cfg = write(tmp_path, "ook.json", OOK)
        main(["simulate", "--config", cfg, "--out", str(tmp_path / "a"), "--seed", "1"])
        main(["simulate", "--config", cfg, "--out", str(tmp_path / "b"), "--seed", "2"])
        a = json.loads((tmp_path / "a" / "summary.json").read_text())
        b = json.loads((tmp_path / "b" / "summary.json").read_text())
        assert a["seed"] == 1 and b["seed"] == 2
        assert a["offsets"] != b["offsets"]

    def test_non_unitary_exit_3(self, tmp_path, capsys):
        doc = dict(NETWORK, coupler={"entries": [[[1, 0], [1, 0]], [[0, 0], [1, 0]]]})
        cfg = write(tmp_path, "bad.json", doc)
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "x")]) == 3
        err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert err["error"] == "non_unitary_coupler"
        assert err["residual"] == pytest.approx(1.0)

    @pytest.mark.parametrize(
        "doc",
        [
            {"kind": "network", "transmitters": []},
            {"kind": "teleport"},
            {"kind": "ook", "bits": [[1, 0], [1]]},
            {"kind": "ook", "bits": [[1], [1]], "n_chips": 31, "bit_period": 1.0},
            {"schema_version": 99, "kind": "network"},
            dict(NETWORK, transmitters=[{"state": "glauber"}, {"state": "fock"}]),
            dict(NETWORK, n_chips=1000),
            {"kind": "ook"},
        ],
    )
    def test_config_errors_exit_2(self, tmp_path, doc, capsys):
        cfg = write(tmp_path, "c.json", doc)
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "x")]) == 2
        assert json.loads(capsys.readouterr().err)["error"] == "invalid_config"

    def test_unreadable(self, tmp_path):
        p = tmp_path / "broken.json"
        p.write_text("{")
        assert main(["simulate", "--config", str(p), "--out", str(tmp_path / "x")]) == 2
        assert main(["simulate", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 2


class TestCodes:
    def test_walsh_table(self, capsys, tmp_path):
        out = tmp_path / "codes.json"
        assert main(["codes", "--nc", "4", "--kind", "walsh", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["inner_products"] == (4 * np.eye(4, dtype=int)).tolist()
        table = capsys.readouterr().out.split()
        assert [int(x) for x in table] == (4 * np.eye(4, dtype=int)).ravel().tolist()

    def test_random(self, capsys):
        assert main(["codes", "--nc", "7", "--kind", "random", "--seed", "5"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["code"]["n_chips"] == 7
        assert set(doc["code"]["phases_over_pi"]) <= {0.0, 1.0}

    def test_bad_walsh_length(self):
        assert main(["codes", "--nc", "6", "--kind", "walsh"]) == 2


class TestCoupler:
    def test_balanced(self, capsys):
        assert main(["coupler", "--m", "2", "--kind", "balanced2x2"]) == 0
        doc = json.loads(capsys.readouterr().out)
        s = 1 / math.sqrt(2)
        assert doc["entries"] == [[[s, 0.0], [s, 0.0]], [[-s, 0.0], [s, 0.0]]]
        assert doc["unitarity_residual"] < 1e-15

    def test_dft_to_dir(self, tmp_path):
        assert main(["coupler", "--m", "4", "--kind", "dft", "--out", str(tmp_path)]) == 0
        doc = json.loads((tmp_path / "coupler.json").read_text())
        assert doc["m"] == 4

    def test_bad_hadamard(self):
        assert main(["coupler", "--m", "3", "--kind", "hadamard"]) == 2


class TestMc:
    def test_peak(self, capsys):
        assert main(["mc", "peak", "--nc", "7", "--trials", "200", "--seed", "1"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["stat"] == "peak" and "ratio_se" in doc
        assert doc["checks"]["ratio_vs_exact"] is True

    def test_receiver(self, capsys):
        assert main(["mc", "receiver", "--nc", "7", "--trials", "200", "--state", "fock"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["state_kind"] == "fock"

    def test_spreading(self, tmp_path):
        out = tmp_path / "s.json"
        assert main(["mc", "spreading", "--nc", "31", "--trials", "20", "--out", str(out)]) == 0
        assert json.loads(out.read_text())["fraction_within_band"] >= 0.9

    def test_too_few_trials(self):
        assert main(["mc", "peak", "--nc", "7", "--trials", "10"]) == 2


def test_svg_scaling():
    t = np.linspace(0, 10, 11)
    v = np.vstack([t, 10 - t])
    svg = svg_polylines(t, v, width=100, height=110)
    pts = re.findall(r'points="([^"]+)"', svg)
    first = [tuple(map(float, p.split(","))) for p in pts[0].split()]
    assert first[0] == (0.0, 110.0) and first[-1] == (100.0, 10.0)
