import json
import subprocess
import sys

import numpy as np
import pytest

from hgrefactor.cli import main
from hgrefactor.grid import uniform_hierarchy
from hgrefactor.refactor import decompose, recompose


def _json_line(out):
    return json.loads(out.strip().splitlines()[-1])


@pytest.fixture
def raw33(tmp_path, rng):
    path = tmp_path / "in.raw"
    data = rng.standard_normal((33, 33, 33))
    data.astype("<f8").tofile(path)
    return path, data


def test_decompose_recompose_error(tmp_path, raw33, capsys):
    src, data = raw33
    hg = tmp_path / "out.hg"
    assert main(["decompose", "--input", str(src), "--dims", "33,33,33", "--output", str(hg), "--json"]) == 0
    rep = _json_line(capsys.readouterr().out)
    assert rep["class_count"] == 6
    assert sum(rep["class_bytes"]) == 33 ** 3 * 8

    back = tmp_path / "back.raw"
    assert main(["recompose", "--input", str(hg), "--classes", "5", "--output", str(back), "--json"]) == 0
    rep = _json_line(capsys.readouterr().out)
    assert rep["bytes_read"] == rep["file_bytes"]

    assert main(["error", "--original", str(src), "--reconstruction", str(back),
                 "--dims", "33,33,33", "--json"]) == 0
    assert _json_line(capsys.readouterr().out)["l2_rel"] <= 1e-12


def test_prefix_recompose_reads_less(tmp_path, raw33, capsys):
    src, data = raw33
    hg = tmp_path / "out.hg"
    main(["decompose", "--input", str(src), "--dims", "33,33,33", "--output", str(hg)])
    capsys.readouterr()
    out = tmp_path / "c0.raw"
    assert main(["recompose", "--input", str(hg), "--classes", "0", "--output", str(out), "--json"]) == 0
    rep = _json_line(capsys.readouterr().out)
    main(["info", "--input", str(hg), "--json"])
    summary = _json_line(capsys.readouterr().out)
    assert rep["bytes_read"] == summary["header_bytes"] + 8 * 8
    h = uniform_hierarchy([33] * 3)
    expect = recompose(decompose(data, h), 0)
    np.testing.assert_array_equal(np.fromfile(out, dtype="<f8").reshape(33, 33, 33), expect)


def test_outputs_deterministic(tmp_path, raw33, capsys):
    src, _ = raw33
    outs = []
    for name in ("a.hg", "b.hg"):
        main(["decompose", "--input", str(src), "--dims", "33,33,33", "--output", str(tmp_path / name)])
        outs.append(capsys.readouterr().out.replace(name, ""))
    assert outs[0] == outs[1]
    assert (tmp_path / "a.hg").read_bytes() == (tmp_path / "b.hg").read_bytes()


def test_single_precision_and_coords_file(tmp_path, rng, capsys):
    data = rng.standard_normal((9, 5)).astype("<f4")
    src = tmp_path / "f.raw"
    data.tofile(src)
    coords = tmp_path / "coords.txt"
    xs = np.concatenate([np.cumsum(rng.uniform(0.5, 1.5, 9)), np.cumsum(rng.uniform(0.5, 1.5, 5))])
    coords.write_text("# dim 0 then dim 1\n" + "\n".join(repr(float(v)) for v in xs) + "\n")
    hg = tmp_path / "f.hg"
    assert main(["decompose", "--input", str(src), "--dims", "9,5", "--precision", "f32",
                 "--coords-file", str(coords), "--output", str(hg)]) == 0
    back = tmp_path / "b.raw"
    assert main(["recompose", "--input", str(hg), "--output", str(back)]) == 0
    got = np.fromfile(back, dtype="<f4").reshape(9, 5)
    assert np.abs(got - data).max() <= 1e-5 * np.abs(data).max()


def test_non_dyadic_dims(tmp_path, capsys):
    src = tmp_path / "x.raw"
    np.zeros(100).tofile(src)
    code = main(["decompose", "--input", str(src), "--dims", "10,10", "--output", str(tmp_path / "x.hg")])
    assert code == 2
    assert "dimension size must be 2^k+1" in capsys.readouterr().err


def test_size_mismatch(tmp_path, capsys):
    src = tmp_path / "x.raw"
    np.zeros(24).tofile(src)
    assert main(["decompose", "--input", str(src), "--dims", "5,5", "--output", str(tmp_path / "x.hg")]) == 2
    assert "does not match" in capsys.readouterr().err


def test_usage_errors(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["decompose", "--input", "x"])
    assert exc.value.code == 1
    assert main(["decompose", "--input", "x", "--dims", "a,b", "--output", "y"]) == 1
    capsys.readouterr()


def test_bad_file_and_missing_file(tmp_path, capsys):
    bad = tmp_path / "bad.hg"
    bad.write_bytes(b"nope")
    assert main(["info", "--input", str(bad)]) == 2
    assert main(["info", "--input", str(tmp_path / "absent.hg")]) == 2
    capsys.readouterr()


def test_rank_configs_reference(capsys):
    assert main(["rank-configs", "--n", "513", "--bytes-per-element", "8", "--compare-reference",
                 "--top", "3", "--json"]) == 0
    out = capsys.readouterr().out
    rep = _json_line(out)
    last = [r for r in rep["rows"] if r["config"] == [2, 2, 2]][0]
    assert last["rank"] == {"GPK": 7, "LPK": 7, "IPK": 7}
    assert "top 3 IPK: (4,4,4) (8,4,4) (16,4,4)" in out


def test_rank_configs_file(tmp_path, capsys):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("# bx by bz\n8,8,8\n32 4 4\n")
    assert main(["rank-configs", "--n", "257", "--configs", str(cfg), "--kernel", "LPK", "--json"]) == 0
    rep = _json_line(capsys.readouterr().out)
    assert sorted(r["rank"]["LPK"] for r in rep["rows"]) == [1, 2]
    cfg.write_text("1 2\n")
    assert main(["rank-configs", "--n", "257", "--configs", str(cfg)]) == 2
    assert main(["rank-configs", "--n", "257", "--bytes-per-element", "3"]) == 1
    capsys.readouterr()


def test_console_module_entry(tmp_path):
    res = subprocess.run([sys.executable, "-m", "hgrefactor", "rank-configs", "--n", "65"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert "GPK" in res.stdout
