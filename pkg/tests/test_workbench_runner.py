import pytest

from workbench_runner import parse_factors, parse_points, run
from MainFiles import report_renderer, workbench_config
from MainFiles.plane_geometry import PlaneCurve
from MainFiles.workbench_errors import UsageError


@pytest.fixture
def config_file(tmp_path):
    def write(text="cache_dir: none\n"):
        path = tmp_path / "workbench.yaml"
        path.write_text(text)
        return str(path)
    return write


def test_argument_helpers():
    assert parse_factors("1^4,5^4") == [(1, 4), (5, 4)]
    assert parse_factors("2") == [(2, 1)]
    assert parse_points("1:2:3; 0:1:5") == ["1:2:3", "0:1:5"]
    with pytest.raises(UsageError):
        parse_factors("x^2")
    with pytest.raises(UsageError):
        parse_points(" ; ")


def test_ap_prints_the_coefficient(config_file):
    assert run(["--config", config_file(), "ap", "--level", "1", "--weight", "12", "--n", "2"]) == (0, "-24\n")


def test_euler_factor(config_file):
    code, report = run(["--config", config_file(), "euler", "--level", "11", "--weight", "2", "--prime", "3"])
    assert code == 0
    assert "T" in report


def test_hecke_check_passes(config_file):
    code, report = run(["--config", config_file(), "hecke", "--level", "11", "--weight", "2", "--prec", "100"])
    assert code == 0
    assert report.startswith("11.2: 100 coefficients, 0 violations")


def test_usage_errors(config_file):
    assert run([])[0] == 2
    assert run(["ap", "--bogus"])[0] == 2
    code, report = run(["--config", config_file(), "suite", "bogus"])
    assert code == 2
    assert report.startswith("error: unknown suite 'bogus'")
    assert run(["--config", config_file(), "ap", "--level", "7", "--weight", "3", "--n", "2"])[0] == 2


def test_bad_prime_is_a_degenerate_input(config_file):
    code, report = run(["--config", config_file(), "scan", "--family", "level5_cubic", "--prime", "5"])
    assert code == 3
    assert report.startswith("error:")


def test_config_errors(config_file):
    assert run(["--config", config_file("colour: blue\n"), "registry"])[0] == 2
    assert run(["--config", config_file("todd_bound: -1\n"), "registry"])[0] == 2
    assert run(["--config", config_file("- a\n- b\n"), "registry"])[0] == 2


def test_kummer_report(config_file):
    code, report = run(["--config", config_file(), "kummer", "--A", "1", "--B", "0", "--prime", "5"])
    assert code == 0
    assert "  f2: 16" in report.splitlines()
    assert "  smooth model: 120 (orbits 120)" in report.splitlines()


def test_todd_polynomial(config_file):
    code, report = run(["--config", config_file(), "todd", "--m", "2"])
    assert (code, report) == (0, "Todd_2 = 1/12*c1^2 + 1/12*c2\n")
    assert run(["--config", config_file(), "todd"])[0] == 2
    assert run(["--config", config_file("todd_bound: 3\n"), "todd", "--m", "4"])[0] == 2


def test_detcy_rank(config_file):
    code, report = run(["--config", config_file(), "detcy", "--action", "rank",
                        "--points", "1:2:3;2:4:6", "--prime", "101"])
    assert (code, report) == (0, "rank 1\n")
    assert run(["--config", config_file(), "detcy", "--action", "rank", "--points", "1:1:1"])[0] == 3


def test_linear_system_report(config_file):
    code, report = run(["--config", config_file(), "linsys", "--system", "level5_cubic", "--prime", "7"])
    assert code == 0
    assert report.startswith("P2 linear system of dimension 2")
    assert "over F_7:" in report


def test_conditions_from_config(config_file):
    path = config_file("cache_dir: none\nconditions_frame: pass 1:0:0; pass 0:1:0; pass 0:0:1; pass 1:1:1\n")
    code, report = run(["--config", path, "linsys", "--conditions-key", "frame"])
    assert code == 0
    assert report.startswith("P2 linear system of dimension 6")
    assert run(["--config", path, "linsys", "--conditions-key", "missing"])[0] == 2


def test_registry_lists_everything(config_file):
    code, report = run(["--config", config_file(), "registry"])
    assert code == 0
    assert "level5_cubic" in report
    assert report.rstrip().splitlines()[-1].startswith("suites: hecke")


def test_kummer_suite(config_file):
    code, report = run(["--config", config_file("cache_dir: none\nkummer_bound: 7\n"), "verify", "--suite", "kummer"])
    assert code == 0
    assert report.rstrip().splitlines()[-1] == "suite kummer: pass"


def test_reports_are_deterministic(config_file):
    argv = ["--config", config_file(), "scan", "--family", "level5_cubic", "--prime", "7"]
    first = run(argv)
    assert first[0] == 0
    assert run(argv) == first


def test_scan_uses_the_configured_cache(tmp_path, config_file):
    path = config_file(f"cache_dir: {tmp_path / 'cache'}\n")
    argv = ["--config", path, "scan", "--family", "level5_cubic", "--prime", "7"]
    first, second = run(argv), run(argv)
    assert first[0] == second[0] == 0
    assert (tmp_path / "cache" / "level5_cubic.csv").exists()
    assert "cache_hits: 8" in second[1]


def test_hasse_suite(config_file):
    code, report = run(["--config", config_file("cache_dir: none\nhasse_bound: 11\n"), "suite", "hasse"])
    assert code == 0
    lines = report.rstrip().splitlines()
    assert lines[-1] == "suite hasse: pass"
    assert any(line.startswith("level5_cubic:") for line in lines)


def test_no_unused_helpers():
    assert not hasattr(workbench_config, "config_keys")
    assert not hasattr(report_renderer, "render_rows")
    assert not hasattr(PlaneCurve, "proportional_to")
