import csv
import json

import numpy as np
import pytest

from duallink.cli import main
from duallink.network import NetworkSpec


def _siso(tmp_path, P=5.0):
    spec = NetworkSpec.from_stacked(np.ones((1, 1, 1, 1)), [1.0], P)
    p = tmp_path / "siso.json"
    p.write_text(spec.to_json())
    return p


def test_gen_is_reproducible(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["gen", "--seed", "3", "--links", "3", "-o", str(a)]) == 0
    assert main(["gen", "--seed", "3", "--links", "3", "-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert NetworkSpec.from_json(a.read_text()).L == 3


def test_solve_siso(tmp_path):
    net = _siso(tmp_path)
    out, tr = tmp_path / "sol.json", tmp_path / "trace.csv"
    assert main(["solve", str(net), "-o", str(out), "--trace", str(tr)]) == 0
    sol = json.loads(out.read_text())
    assert sol["wsr"] == pytest.approx(np.log(6.0), rel=1e-12)
    assert sol["units"] == "nats"
    rows = list(csv.reader(tr.open()))
    assert rows[0] == ["iteration", "forward_wsr", "reverse_wsr", "kkt_residual", "elapsed_us"]


def test_solve_bits(tmp_path):
    net = _siso(tmp_path, P=7.0)
    out = tmp_path / "sol.json"
    assert main(["solve", str(net), "--bits", "-o", str(out)]) == 0
    assert json.loads(out.read_text())["wsr"] == pytest.approx(3.0, rel=1e-12)


@pytest.mark.parametrize("alg", ["pwf", "wmmse"])
def test_solve_baselines(tmp_path, alg):
    net = tmp_path / "net.json"
    main(["gen", "--links", "3", "-o", str(net)])
    out = tmp_path / "sol.json"
    assert main(["solve", str(net), "--algorithm", alg, "-o", str(out)]) == 0
    assert json.loads(out.read_text())["algorithm"] == alg


def test_solve_colored_network(tmp_path):
    spec = NetworkSpec.from_stacked(np.full((1, 1, 1, 1), 2.0), [1.0], 1.0)
    d = spec.to_dict()
    d["noise"] = [[[{"re": 4.0, "im": 0.0}]]]
    d["power_weights"] = [[[{"re": 0.5, "im": 0.0}]]]
    net = tmp_path / "net.json"
    net.write_text(json.dumps(d))
    out = tmp_path / "sol.json"
    assert main(["solve", str(net), "-o", str(out)]) == 0
    sol = json.loads(out.read_text())
    assert sol["colored_wsr"] == pytest.approx(np.log(3.0), rel=1e-10)
    assert sol["weighted_power"] == pytest.approx(1.0, rel=1e-12)


def test_diag(tmp_path):
    net = tmp_path / "net.json"
    main(["gen", "--links", "2", "--gain", "-10", "-o", str(net)])
    out = tmp_path / "diag.json"
    assert main(["diag", str(net), "-o", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["saddle_point"]["passed"]
    assert rep["gradient_check"]["max_rel_error_sigma"] < 1e-4


def test_bench(tmp_path):
    out, csv_out = tmp_path / "bench.json", tmp_path / "bench.csv"
    assert main(["bench", "--realizations", "2", "--gain", "0", "--algorithm", "dual_link",
                 "-o", str(out), "--csv", str(csv_out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["config"]["realizations"] == 2
    assert [c["algorithm"] for c in rep["cells"]] == ["dual_link", "dual_link"]
    assert csv_out.read_text().startswith("algorithm,")


def test_errors_exit_nonzero(tmp_path, capsys):
    assert main(["solve", str(tmp_path / "missing.json")]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    assert main(["solve", str(bad)]) == 1
    assert "error" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        main(["solve"])
