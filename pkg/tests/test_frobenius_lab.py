import logging
from fractions import Fraction

import pytest
import sympy

from MainFiles.curve_families import select_family
from MainFiles.frobenius_lab import (
    TraceRecord,
    TraceTable,
    basis_value,
    fit,
    fit_moments,
    kummer_counts,
    kummer_orbit_count,
    moment,
    rankin_euler_factor,
    rankin_trace,
    rankin_weight,
    scan,
    shimura_check,
    sym_euler_factor,
    sym_trace,
    validate,
    validate_moments,
)
from MainFiles.power_series import NEWFORM_REGISTRY, ap
from MainFiles.stat_generator import StatGenerator
from MainFiles.trace_cache import HEADER, TraceCache
from MainFiles.workbench_errors import (
    BadPrime,
    BadReduction,
    CacheCorrupt,
    InconsistentFit,
    SingularFit,
    UsageError,
)


def table(traces):
    records = tuple(TraceRecord(str(i), 8 - a, a, False) for i, a in enumerate(traces))
    return TraceTable("synthetic", 7, records)


# ---------- Scans ----------

def test_scan_of_the_level_five_pencil():
    result = scan(select_family("level5_cubic"), 7)
    assert len(result.records) == 8
    assert all(record.count + record.trace == 8 for record in result.records)


def test_scan_of_the_weierstrass_plane():
    result = scan(select_family("level1_weierstrass"), 7)
    assert len(result.records) == 42
    assert not any(record.singular for record in result.records)


def test_scan_rejects_a_bad_prime():
    with pytest.raises(BadPrime):
        scan(select_family("level5_cubic"), 5)


@pytest.mark.parametrize("family_id", ["level5_cubic", "level4_22", "level1_weierstrass"])
def test_bookkeeping_identity(family_id):
    family = select_family(family_id)
    p = family.good_primes(40)[0]
    result = scan(family, p)
    counts = sum(record.count for record in result.records)
    assert counts == len(result.records) * (p + 1) - sum(result.traces())


def test_moments():
    assert moment(table([0, 0, 0]), 3).total == 0
    assert moment(table([1, -1, 1, -1, -1]), 2).total == 5
    report = moment(scan(select_family("level5_cubic"), 7), 2)
    traces = scan(select_family("level5_cubic"), 7).traces()
    assert report.total == sum(a * a for a in traces)
    assert report.fibres == 8
    assert report.smooth <= report.total
    with pytest.raises(UsageError):
        moment(table([1]), 0)


# ---------- Count cache ----------

def test_cache_round_trip(tmp_path):
    family = select_family("level5_cubic")
    cache = TraceCache(tmp_path)
    first = scan(family, 7, cache, StatGenerator())
    assert cache.path("level5_cubic").read_text().splitlines()[0] == HEADER
    stats = StatGenerator()
    second = scan(family, 7, cache, stats)
    assert second == first
    assert stats.cache_hits == 8
    assert stats.cache_misses == 0
    assert cache.load("level5_cubic", 11) == {}


def test_partial_cache_is_completed(tmp_path, caplog):
    family = select_family("level5_cubic")
    cache = TraceCache(tmp_path)
    full = scan(family, 7, cache)
    path = cache.path("level5_cubic")
    path.write_text("\n".join(path.read_text().splitlines()[:4]) + "\n")
    with caplog.at_level(logging.WARNING):
        again = scan(family, 7, cache)
    assert again == full
    assert "partial" in caplog.text
    assert len(cache.load("level5_cubic", 7)) == 8


def test_cache_corruption(tmp_path):
    family = select_family("level5_cubic")
    cache = TraceCache(tmp_path)
    cache.path("level5_cubic").write_text("family,prime\n")
    with pytest.raises(CacheCorrupt):
        scan(family, 7, cache)

    cache.path("level5_cubic").write_text(f"{HEADER}\nlevel5_cubic,7,0:1,abc\n")
    with pytest.raises(CacheCorrupt):
        cache.load("level5_cubic", 7)

    cache.path("level5_cubic").unlink()
    cache.append("level5_cubic", 7, [("0:1", 3), ("0:1", 4)])
    with pytest.raises(CacheCorrupt):
        cache.load("level5_cubic", 7)

    cache.path("level5_cubic").unlink()
    cache.append("level5_cubic", 7, [("9:9:9", 1)])
    with pytest.raises(CacheCorrupt):
        scan(family, 7, cache)


def test_cache_quotes_awkward_parameters(tmp_path):
    cache = TraceCache(tmp_path)
    assert cache.append("synthetic", 7, [("1,2", 5), ('say "3"', 6)]) == 2
    lines = cache.path("synthetic").read_text().splitlines()
    assert lines[1] == 'synthetic,7,"1,2",5'
    assert cache.load("synthetic", 7) == {"1,2": 5, 'say "3"': 6}

    cache.path("synthetic").write_text(f'{HEADER}\nsynthetic,7,1,2,5\n')
    with pytest.raises(CacheCorrupt):
        cache.load("synthetic", 7)


def test_scan_statistics():
    stats = StatGenerator()
    scan(select_family("level5_cubic"), 7, None, stats)
    scan(select_family("level5_cubic"), 11, None, stats)
    summary = stats.get_performance_stats_summary()
    assert summary["scans_total"] == 2
    assert summary["fibres_total"] == 20
    assert summary["fibres_max"] == 12
    assert summary["curves_counted"] == 20
    assert summary["trace_abs_max"] <= 11 + 1
    stats.reset_stats()
    assert stats.get_performance_stats_summary()["fibres_total"] == 0


def test_trace_bound_skips_singular_fibres():
    # the pencil contains a triangle of lines, whose trace is -(2p - 1)
    stats = StatGenerator()
    result = scan(select_family("level5_cubic"), 11, None, stats)
    assert any(record.singular and abs(record.trace) == 21 for record in result.records)
    assert stats.get_performance_stats_summary()["trace_abs_max"] <= 11 + 1


# ---------- Fitting ----------

def test_basis_values():
    newform = NEWFORM_REGISTRY["5.4"]
    assert basis_value("1", 7, newform) == 1
    assert basis_value("p^2", 7, newform) == 49
    assert basis_value("ap", 7, newform) == 6
    assert basis_value("p*ap", 7, newform) == 42
    assert basis_value("chi5", 7, newform) == -1
    assert basis_value("chi5", 11, newform) == 1
    assert basis_value("p*chi5", 7, newform) == -7
    assert basis_value("ap@3.7", 7, newform) == -286
    assert basis_value("p*ap@3.7", 5, newform) == 0
    assert basis_value("p^2*ap@2.10", 3, newform) == -156 * 9
    with pytest.raises(UsageError):
        basis_value("ap@9.9", 7, newform)
    with pytest.raises(UsageError):
        basis_value("q^2", 7, newform)


def test_exact_fit_recovers_a_known_model():
    newform = NEWFORM_REGISTRY["5.4"]
    moments = {p: 3 + 2 * p - ap(newform, p) for p in (7, 11, 13)}
    model = fit_moments("synthetic", 2, "5.4", ("ap", "1", "p"), moments)
    assert model.coefficients == (Fraction(-1), Fraction(3), Fraction(2))
    assert model.evaluate(17) == 3 + 34 - ap(newform, 17)
    report = validate_moments(model, {17: 3 + 34 - ap(newform, 17), 19: 3 + 38 - ap(newform, 19)})
    assert report.success
    broken = validate_moments(model.perturbed(1), {17: 3 + 34 - ap(newform, 17)})
    assert broken.first_failure() == (17, Fraction(-1))


def test_fit_failures():
    with pytest.raises(InconsistentFit):
        fit_moments("synthetic", 2, "5.4", ("1",), {7: 1, 11: 2})
    with pytest.raises(SingularFit):
        fit_moments("synthetic", 2, "5.4", ("1", "p"), {7: 1})
    with pytest.raises(SingularFit):
        fit_moments("synthetic", 2, "5.4", ("p", "p^1"), {7: 1, 11: 2})


def test_validation_primes_must_be_fresh():
    model = fit_moments("level5_cubic", 2, "5.4", ("1",), {7: 0})
    with pytest.raises(UsageError):
        validate(model, [7, 11])


def test_level_five_second_moment_closed_form():
    family, newform = select_family("level5_cubic"), NEWFORM_REGISTRY["5.4"]
    for p in family.good_primes(23):
        expected = -ap(newform, p) + 6 * p ** 2 - 8 * p - p * sympy.jacobi_symbol(p, 5)
        assert moment(scan(family, p), 2).total == expected


def test_weierstrass_tenth_moment_closed_form():
    family, delta = select_family("level1_weierstrass"), NEWFORM_REGISTRY["1.12"]
    for p in (7, 11, 13):
        expected = ((1 - p) * ap(delta, p) + 42 * p ** 7 - 42 * p ** 6 - 90 * p ** 5 + 15 * p ** 4
                    + 40 * p ** 3 + 26 * p ** 2 + 8 * p + 1)
        assert moment(scan(family, p), 10).total == expected


@pytest.mark.slow
def test_pinned_level_five_model_validates():
    family = select_family("level5_cubic")
    fixture = family.fixture
    model = fit(family, fixture.basis, fixture.fit_primes)
    assert model.coefficients == (Fraction(-1), Fraction(-8), Fraction(6), Fraction(-1))
    primes = [p for p in family.good_primes(fixture.validate_max) if p not in fixture.fit_primes]
    assert validate(model, primes).success


@pytest.mark.slow
def test_pinned_weierstrass_model_validates():
    family = select_family("level1_weierstrass")
    fixture = family.fixture
    model = fit(family, fixture.basis, fixture.fit_primes)
    assert model.coefficients == tuple(Fraction(c) for c in (1, -1, 1, 8, 26, 40, 15, -90, -42, 42))
    primes = [p for p in family.good_primes(fixture.validate_max) if p not in fixture.fit_primes]
    assert len(primes) >= 10
    assert validate(model, primes).success


@pytest.mark.slow
@pytest.mark.parametrize("family_id", ["level4_cubic", "level3_cubic", "level2_cubic"])
def test_pinned_cubic_models_validate(family_id):
    family = select_family(family_id)
    fixture = family.fixture
    model = fit(family, fixture.basis, fixture.fit_primes)
    assert model.coefficient("ap") != 0
    primes = [p for p in family.good_primes(fixture.validate_max) if p not in fixture.fit_primes]
    assert len(primes) >= 10
    assert validate(model, primes).success


# ---------- Symmetric powers and Rankin-Selberg ----------

def test_symmetric_power_traces():
    assert sym_trace(2, 5, 2, 0) == 1
    assert sym_trace(2, 5, 2, 1) == 2
    assert sym_trace(2, 5, 2, 2) == -1
    assert sym_trace(2, 5, 2, 3) == -12


@pytest.mark.parametrize("a, p, k", [(2, 5, 2), (-24, 2, 12), (6, 7, 4)])
def test_symmetric_power_recursion(a, p, k):
    for m in range(1, 8):
        assert sym_trace(a, p, k, 1) * sym_trace(a, p, k, m) == \
            sym_trace(a, p, k, m + 1) + p ** (k - 1) * sym_trace(a, p, k, m - 1)


def test_symmetric_power_euler_factors():
    assert sym_euler_factor(2, 5, 2, 0) == (1, -1)
    assert sym_euler_factor(2, 5, 2, 1) == (1, -2, 5)
    assert sym_euler_factor(2, 5, 2, 2) == (1, 1, -5, -125)
    for m in range(1, 5):
        factor = sym_euler_factor(6, 7, 4, m)
        assert len(factor) == m + 2
        assert factor[1] == -sym_trace(6, 7, 4, m)
        assert factor[-1] == (-1) ** (m + 1) * 7 ** (3 * m * (m + 1) // 2)


def test_rankin_selberg():
    assert rankin_trace(0, 17) == 0
    assert rankin_weight(2, 4) == 4
    g, h = NEWFORM_REGISTRY["11.2"], NEWFORM_REGISTRY["5.4"]
    assert rankin_trace(ap(g, 2), ap(h, 2)) == 8
    factor = rankin_euler_factor(ap(g, 3), 2, ap(h, 3), 4, 3)
    assert factor[0] == 1
    assert factor[1] == -rankin_trace(ap(g, 3), ap(h, 3))
    assert factor[4] == 3 ** 2 * 3 ** 6


# ---------- Kummer surfaces and the Shimura check ----------

def test_kummer_counts():
    counts = kummer_counts(1, 0, 5)
    assert (counts.a, counts.f2, counts.singular_quotient_count, counts.smooth_model_count) == (2, 16, 40, 120)
    assert kummer_orbit_count(1, 0, 5) == (40, 120)
    with pytest.raises(BadReduction):
        kummer_counts(0, 0, 5)


def test_kummer_without_rational_two_torsion():
    counts = kummer_counts(1, 1, 7)
    assert counts.f2 == 1
    assert counts.smooth_model_count == 8 ** 2 + counts.a ** 2 + 7
    assert kummer_orbit_count(1, 1, 7) == (counts.singular_quotient_count, counts.smooth_model_count)


@pytest.mark.parametrize("p", [3, 7, 11, 13])
def test_kummer_closed_form_matches_enumeration(p):
    for A, B in ((1, 0), (2, 3), (-1, 1)):
        if (4 * A ** 3 + 27 * B ** 2) % p:
            counts = kummer_counts(A, B, p)
            assert kummer_orbit_count(A, B, p) == (counts.singular_quotient_count, counts.smooth_model_count)


def test_conductor_eleven_model():
    assert shimura_check(60) == []
