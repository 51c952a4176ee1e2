import io
import re

import pytest

from invsq import cli
from invsq.config import ConfigError, load_config, validate


def write(tmp_path, text, name="c.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def diags(tmp_path, text):
    with pytest.raises(ConfigError) as ei:
        load_config(write(tmp_path, text))
    return ei.value.diagnostics


def test_default_config_is_clean():
    cfg = load_config()
    assert validate(cfg) == []
    assert cfg.seed == 20240601
    assert re.fullmatch(r"[0-9a-f]{16}", cfg.hash)


def test_critical_hardy_constant_rejected(tmp_path):
    # n = 3: (n-2)^2/8 = 1/8
    d = diags(tmp_path, "[sector]\nLambda = 0.125\n")
    assert len(d) == 1
    assert "c.ini:2" in d[0] and "sector.Lambda" in d[0] and "Lambda exceeds" in d[0]


def test_sigma_above_quarter_rejected(tmp_path):
    d = diags(tmp_path, "# comment\n\n[profile]\nsigma1 = 0.3\n")
    assert len(d) == 1 and "c.ini:4" in d[0] and "sigma1" in d[0]


def test_each_violation_reported(tmp_path):
    d = diags(tmp_path, "[profile]\nsigma1 = 0.3\n[nls]\ntheta = 2.0\ndt = -1\n")
    assert len(d) == 3
    assert any("nls.theta" in x for x in d) and any("nls.dt" in x for x in d)


def test_unknown_and_unparsable(tmp_path):
    d = diags(tmp_path, "[bogus]\nx = 1\n[basis]\nK = many\nfoo = 2\n")
    assert any("unknown section [bogus]" in x for x in d)
    assert any("basis.foo: unknown key" in x for x in d)
    assert any("c.ini:4" in x and "cannot parse" in x for x in d)


def test_grid_and_sector_rules(tmp_path):
    d = diags(tmp_path, "[strichartz]\nT = 32, 50\n")
    assert any("T=50" in x for x in d)
    with pytest.raises(ConfigError, match="radial"):
        load_config(write(tmp_path, "[sector]\nell = 1\n"), command="nls")
    load_config(write(tmp_path, "[sector]\nell = 1\n"), command="evolve")


def test_unreadable_config(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.ini")


def test_seed_override_changes_hash():
    a, b = load_config(), load_config(seed=7)
    assert b.seed == 7 and a.hash != b.hash
    assert load_config(seed=7).hash == b.hash


def test_exit_codes(tmp_path, capsys):
    assert cli.main(["no-such-command", "--out", str(tmp_path)]) == 2
    bad = write(tmp_path, "[profile]\nsigma1 = 0.3\n")
    assert cli.main(["check-assumptions", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert "sigma1" in capsys.readouterr().err
    assert cli.main(["check-assumptions", "--out", str(tmp_path)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines and all(x.startswith("PASS check-assumptions: ") for x in lines)


def test_csv_format(tmp_path):
    out = io.StringIO()
    assert cli.run("basis-info", out_dir=tmp_path, stream=out) == 0
    cfg = load_config()
    csv = (tmp_path / "basis.csv").read_text().splitlines()
    assert csv[0] == f"# invsq basis-info table=basis config_hash={cfg.hash} seed={cfg.seed}"
    cols = csv[1].split(",")
    assert all(re.fullmatch(r"\w+\[[^\]]+\]", c) for c in cols)
    assert len(csv) == 2 + 256
    row = csv[2].split(",")
    assert row[0] == "1"
    assert re.fullmatch(r"-?\d\.\d{16}e[+-]\d\d", row[1])
    dat = (tmp_path / "basis.dat").read_text().splitlines()
    assert dat[0] == csv[0] and dat[1] == "# " + " ".join(cols)
    assert dat[2].split() == row


def test_compare_oracle_shrinks_by_four(tmp_path):
    assert cli.run("compare-oracle", out_dir=tmp_path, stream=io.StringIO()) == 0
    rows = (tmp_path / "compare_oracle.csv").read_text().splitlines()[2:]
    d = [float(r.split(",")[1]) for r in rows]
    assert d[0] / d[1] == pytest.approx(4.0, rel=0.2)


def test_failing_check_gives_exit_one(tmp_path):
    # demanding the oracle ratio at dt values where time error is swamped by space error
    cfg = write(tmp_path, "[oracle]\nM = 64\ndt = 0.002, 0.001\n")
    out = io.StringIO()
    assert cli.run("compare-oracle", cfg, tmp_path, stream=out) == 1
    assert out.getvalue().startswith("FAIL compare-oracle:")
