import json
from pathlib import Path

import pytest

from epicount.cli import build_parser, main
from epicount.config import load_config, parse_config_text, render_config
from epicount.errors import ConfigError

MINIMAL = """\
version=1
instance=subsets
measure=constant:0.5
ordering=singletons
n_grid=5,10
trials=12
seed=99
"""


# ---------------------------------------------------------------------------
# config parsing


def test_parse_minimal_config_defaults():
    cfg = parse_config_text(MINIMAL)
    assert cfg.instance == "subsets"
    assert cfg.n_grid == (5, 10)
    assert cfg.k == 2
    assert cfg.threads == 1
    assert cfg.gamma == "power:2"
    assert cfg.horizon is None
    assert cfg.corollary_eps is None


def test_parse_ignores_comments_and_blanks():
    text = "# experiment\n\nversion=1\n# body\n" + MINIMAL.split("\n", 1)[1]
    assert parse_config_text(text) == parse_config_text(MINIMAL)


def test_missing_version_header():
    with pytest.raises(ConfigError, match=r"x\.cfg: missing version header"):
        parse_config_text("# only comments\n\n", source="x.cfg")
    with pytest.raises(ConfigError, match=r"x\.cfg:1: first entry must be the version"):
        parse_config_text("instance=subsets\n", source="x.cfg")


def test_version_must_come_first():
    with pytest.raises(ConfigError, match=r"x\.cfg:2: first entry must be the version"):
        parse_config_text("# hi\ninstance=subsets\nversion=1\n", source="x.cfg")


def test_unsupported_version():
    with pytest.raises(ConfigError, match="version 2 is not supported"):
        parse_config_text("version=2\n" + MINIMAL.split("\n", 1)[1])


def test_non_integer_version():
    with pytest.raises(ConfigError, match="version must be an integer"):
        parse_config_text("version=one\n")


def test_unknown_key_reports_line():
    text = MINIMAL + "colour=blue\n"
    with pytest.raises(ConfigError, match=r"cfg:8: unknown key 'colour'"):
        parse_config_text(text, source="cfg")


def test_duplicate_key_reports_both_lines():
    text = MINIMAL + "trials=20\n"
    with pytest.raises(ConfigError,
                       match=r"cfg:8: duplicate key 'trials' \(first set on line 6\)"):
        parse_config_text(text, source="cfg")


def test_bad_value_reports_line():
    text = MINIMAL.replace("trials=12", "trials=a dozen")
    with pytest.raises(ConfigError, match=r"cfg:6: bad value for 'trials'"):
        parse_config_text(text, source="cfg")


def test_bad_grid_entry():
    text = MINIMAL.replace("n_grid=5,10", "n_grid=5,,10")
    with pytest.raises(ConfigError, match="bad value for 'n_grid'"):
        parse_config_text(text)


def test_line_without_equals():
    with pytest.raises(ConfigError, match=r"cfg:2: expected key=value"):
        parse_config_text("version=1\njust words\n", source="cfg")


def test_missing_required_keys_listed():
    with pytest.raises(ConfigError, match="missing required keys: ordering, seed"):
        parse_config_text(
            "version=1\ninstance=subsets\nmeasure=cramer\nn_grid=5\ntrials=4\n"
        )


def test_semantic_error_carries_source():
    text = MINIMAL.replace("trials=12", "trials=1")
    with pytest.raises(ConfigError, match=r"^my\.cfg: trials must be at least 2"):
        parse_config_text(text, source="my.cfg")


def test_render_round_trip():
    cfg = parse_config_text(MINIMAL)
    assert parse_config_text(render_config(cfg)) == cfg
    full = parse_config_text(
        MINIMAL + "k=3\ngamma=psi-power:0.5\nhorizon=1000\nmatrix_dim=16\n"
        "threads=2\nbound_tolerance=12.5\nliminf_floor=0.25\ncorollary_eps=0.5\n"
    )
    assert parse_config_text(render_config(full)) == full


def test_bundled_configs_parse():
    root = Path(__file__).resolve().parents[1] / "configs"
    for name in ("cramer.cfg", "maximal-subgroups.cfg"):
        cfg = load_config(str(root / name))
        assert cfg.trials == 200
        assert cfg.seed == 20260815
        assert parse_config_text(render_config(cfg)) == cfg


# ---------------------------------------------------------------------------
# CLI: moments / epi-product / check-measure


def test_moments_abgroups_golden(capsys):
    rc = main(["moments", "--instance", "abgroups", "--measure", "ones",
               "--ordering", "maximal-subgroups", "--n", "10"])
    assert rc == 0
    out = capsys.readouterr().out
    assert out == "n=10  moment=1.916667  abs_moment=1.916667  bound_2=3.256944\n"


def test_moments_cramer_golden(capsys):
    rc = main(["moments", "--instance", "subsets", "--measure", "cramer",
               "--ordering", "singletons", "--n", "100"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "moment=29.548743" in out
    assert "bound_2=28.548743" in out


def test_moments_multiple_n(capsys):
    rc = main(["moments", "--ordering", "singletons", "--n", "4,8"])
    assert rc == 0
    lines = capsys.readouterr().out.strip().split("\n")
    assert lines[0].startswith("n=4  moment=2.000000")
    assert lines[1].startswith("n=8  moment=4.000000")


def test_moments_bad_n_list(capsys):
    assert main(["moments", "--ordering", "singletons", "--n", "x"]) == 1
    assert main(["moments", "--ordering", "singletons", "--n", ","]) == 1


def test_moments_abgroups_measure_guard(capsys):
    rc = main(["moments", "--instance", "abgroups", "--measure", "constant:0.5",
               "--ordering", "maximal-subgroups", "--n", "10"])
    assert rc == 1
    assert "ones" in capsys.readouterr().err


def test_epi_product_coprime_renders_invariant_factors(capsys):
    assert main(["epi-product", "C2", "C3"]) == 0
    assert capsys.readouterr().out == "C6\n"


def test_epi_product_refutation_witness(capsys):
    assert main(["epi-product", "C2", "C2", "--bound", "100"]) == 0
    out = capsys.readouterr().out
    assert out == ("not found up to bound 100; witness K=C2 requires 1 "
                   "epi-pair count, observed 0 on candidate C2xC2\n")


def test_epi_product_subsets_union(capsys):
    assert main(["epi-product", "--instance", "subsets", "{1,2}", "{2,3}"]) == 0
    assert capsys.readouterr().out == "{1,2,3}\n"


def test_epi_product_bad_handle(capsys):
    assert main(["epi-product", "--instance", "subsets", "C2", "C3"]) == 1


def test_check_measure_golden(capsys):
    rc = main(["check-measure", "--measure", "constant:0.25",
               "--level", "1,2,3"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "level D={1,2,3} with 8 objects" in out
    assert "min v = 0.015625 at B={1,2,3}" in out


def test_check_measure_capacity_cap(capsys):
    level = ",".join(str(i) for i in range(1, 14))
    assert main(["check-measure", "--measure", "constant:0.5",
                 "--level", level]) == 3


def test_table_preset_horizon_is_scope_error(tmp_path, capsys):
    table = tmp_path / "r.txt"
    table.write_text("0.5\n0.5\n0.5\n0.5\n0.5\n", encoding="utf-8")
    rc = main(["moments", "--instance", "subsets",
               "--measure", f"table:{table}",
               "--ordering", "singletons", "--n", "10"])
    assert rc == 2
    assert "5 entries" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# CLI: simulate


@pytest.fixture()
def small_config(tmp_path):
    path = tmp_path / "combo.cfg"
    path.write_text(MINIMAL, encoding="utf-8")
    return path


def test_simulate_writes_artifacts(small_config, tmp_path, capsys):
    out = tmp_path / "out"
    rc = main(["simulate", str(small_config), "--out", str(out)])
    assert rc == 0
    printed = capsys.readouterr().out
    assert f"wrote {out / 'combo.csv'}" in printed
    assert f"wrote {out / 'combo.json'}" in printed
    assert "classification: SLLN-ii" in printed
    payload = json.loads((out / "combo.json").read_text(encoding="utf-8"))
    assert payload["classification"]["label"] == "SLLN-ii"
    csv_text = (out / "combo.csv").read_text(encoding="utf-8")
    assert csv_text.startswith("n,")
    assert len(csv_text.strip().split("\n")) == 3


def test_simulate_threads_do_not_change_bytes(small_config, tmp_path, capsys):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", str(small_config), "--out", str(out1),
                 "--threads", "1"]) == 0
    assert main(["simulate", str(small_config), "--out", str(out2),
                 "--threads", "2"]) == 0
    assert (out1 / "combo.csv").read_bytes() == (out2 / "combo.csv").read_bytes()
    assert (out1 / "combo.json").read_bytes() == (out2 / "combo.json").read_bytes()


def test_simulate_seed_override_changes_samples(small_config, tmp_path, capsys):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    main(["simulate", str(small_config), "--out", str(out1)])
    main(["simulate", str(small_config), "--out", str(out2),
          "--seed-override", "100"])
    a = (out1 / "combo.csv").read_text(encoding="utf-8")
    b = (out2 / "combo.csv").read_text(encoding="utf-8")
    assert a != b
    assert a.split("\n")[0] == b.split("\n")[0]


def test_simulate_missing_file(capsys):
    assert main(["simulate", "/nonexistent/path.cfg"]) == 1
    assert capsys.readouterr().err != ""


def test_simulate_bad_config_version(tmp_path, capsys):
    path = tmp_path / "old.cfg"
    path.write_text("version=0\n" + MINIMAL.split("\n", 1)[1], encoding="utf-8")
    assert main(["simulate", str(path)]) == 1
    assert "version 0 is not supported" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# CLI: parser wiring


def test_usage_errors_exit_1(capsys):
    with pytest.raises(SystemExit) as ei:
        main(["frobnicate"])
    assert ei.value.code == 1
    with pytest.raises(SystemExit) as ei:
        main(["moments", "--ordering", "singletons"])  # missing --n
    assert ei.value.code == 1
    with pytest.raises(SystemExit) as ei:
        main([])
    assert ei.value.code == 1


def test_verify_parser_defaults():
    parser = build_parser()
    args = parser.parse_args(["verify"])
    assert args.suite == "fast"
    args = parser.parse_args(["verify", "full"])
    assert args.suite == "full"
    with pytest.raises(SystemExit) as ei:
        parser.parse_args(["verify", "slow"])
    assert ei.value.code == 1
