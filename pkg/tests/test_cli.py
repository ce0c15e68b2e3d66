import json

import pytest

from multicarrier import cli


def test_usage_errors(tmp_path, capsys):
    assert cli.main(["fig6", f"out={tmp_path / 'a.csv'}", "bogus=1"]) == 2
    assert cli.main(["fig6"]) == 2
    assert cli.main(["fig6", f"out={tmp_path / 'missing' / 'a.csv'}"]) == 2
    assert cli.main(["fig3", f"out={tmp_path / 'a.csv'}", "n=2", "l=4"]) == 2
    assert cli.main(["fig6", f"out={tmp_path / 'a.csv'}", "points=zero"]) == 2
    assert cli.main(["validate", "suites=nothing"]) == 2
    assert "error" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        cli.main(["unknown"])


def test_precedence_of_parameter_sources(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# points from file\npoints = 11\nchi=0.5\n")
    env = {"MULTICARRIER_POINTS": "21", "MULTICARRIER_UNRELATED": "x"}
    p = cli.resolve_params("fig6", [f"out={tmp_path / 'a.csv'}"], str(cfg), environ={})
    assert p["points"] == 11 and p["chi"] == (0.5,)
    p = cli.resolve_params("fig6", [f"out={tmp_path / 'a.csv'}"], str(cfg), environ=env)
    assert p["points"] == 21
    p = cli.resolve_params("fig6", [f"out={tmp_path / 'a.csv'}", "points=31"], str(cfg), environ=env)
    assert p["points"] == 31
    cfg.write_text("nonsense\n")
    with pytest.raises(cli.UsageError):
        cli.resolve_params("fig6", [f"out={tmp_path / 'a.csv'}"], str(cfg), environ={})


def test_environment_override_end_to_end(tmp_path, monkeypatch):
    monkeypatch.setenv("MULTICARRIER_POINTS", "5")
    out = tmp_path / "mp.csv"
    assert cli.main(["fig6", f"out={out}", "chi=0.5"]) == 0
    assert len(out.read_text().splitlines()) == 6


def test_fig6_outputs_and_sidecar(tmp_path):
    out = tmp_path / "mp.csv"
    assert cli.main(["fig6", f"out={out}", "chi=0.2,0.5,1", "points=9", "plot=yes"]) == 0
    for tag in ("chi0.2", "chi0.5", "chi1"):
        lines = (tmp_path / f"mp_{tag}.csv").read_text().splitlines()
        assert lines[0] == "x,f_chi" and len(lines) == 10
    meta = json.loads((tmp_path / "mp.csv.meta.json").read_text())
    assert meta["command"] == "fig6" and meta["points"] == 9
    assert (tmp_path / "mp.gp").exists()


@pytest.mark.parametrize("kind,header", [
    ("transform", "gamma,eta,nu"),
    ("spectrum", "lambda"),
    ("selection", "trial,operator,iterations,a_j_sq,selected_count"),
    ("histogram", "bin_lo,bin_hi,count"),
    ("density", "x,pdf"),
    ("transmittance", "index,re,im,mag_norm"),
])
def test_sweep_kinds_are_reproducible(tmp_path, kind, header):
    args = ["sweep", f"kind={kind}", "K=16", "l=4", "n=8", "trials=50", "points=11", "bins=5"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(args + [f"out={a}", "seed=3"]) == 0
    assert cli.main(args + [f"out={b}", "seed=3"]) == 0
    assert a.read_text().splitlines()[0] == header
    assert a.read_bytes() == b.read_bytes()


def test_sweep_density_variants(tmp_path):
    for which in ("lth_largest", "partial_sum", "top_sum"):
        out = tmp_path / f"{which}.csv"
        assert cli.main(["sweep", "kind=density", f"density={which}", "n=5", "l=2", "points=6",
                         f"out={out}"]) == 0
        assert len(out.read_text().splitlines()) == 7


def test_fig5_table(tmp_path):
    out = tmp_path / "f5.csv"
    assert cli.main(["fig5", f"out={out}", "l=16", "K=8", "snr=0,5", "r=0.5,1"]) == 0
    rows = [line.split(",") for line in out.read_text().splitlines()[1:]]
    assert len(rows) == 4
    assert all(float(r[2]) == 0.0 for r in rows if float(r[0]) == 0.0)


def test_validate_subset_writes_report(tmp_path, capsys):
    out = tmp_path / "v.csv"
    assert cli.main(["validate", "suites=channel", "trials=2000", f"out={out}"]) == 0
    assert out.read_text().splitlines()[0] == "suite,check,residual,tolerance,passed"
    assert capsys.readouterr().out
