import logging
import random
from typing import Callable, Dict, List, Optional

import numpy as np
import sympy

from .curve_families import FAMILY_REGISTRY, Family, cubic_families, select_family
from .determinantal_cy import (
    SECTIONS,
    anticanonical_basis,
    fibre_cubic,
    fibre_group,
    random_point,
    rank_profile,
    sample_general_points,
    sample_smooth_fibre,
    v6_member,
)
from .frobenius_lab import fit, kummer_counts, kummer_orbit_count, scan, shimura_check, validate
from .plane_geometry import CubicWithOrigin, extension_singular_flags, hasse_holds, rational_points
from .power_series import NEWFORM_REGISTRY, ap, deligne_bound_holds, hecke_check
from .report_renderer import render_model, render_residuals
from .stat_generator import StatGenerator
from .todd_lab import (
    odd_vanishing_table,
    power_sum,
    todd_genus_projective,
    todd_polynomial,
    todd_polynomial_direct,
    top_chern_coefficient,
)
from .trace_cache import TraceCache
from .workbench_config import WorkbenchConfig
from .workbench_errors import DegenerateInput, NotFound, UsageError, VerificationFailed

logger = logging.getLogger(__name__)

FIT_SUITES: Dict[str, str] = {
    "delta-birch": "level1_weierstrass",
    "level5-weight4": "level5_cubic",
    "level4-weight6": "level4_cubic",
    "level3-weight6": "level3_cubic",
    "level2-weight8": "level2_cubic",
}
KUMMER_CURVES = ((1, 0), (0, 1), (1, 1), (2, 3), (-1, 1))
DETCY_PRIME = 101
TAU_PRIME = 11


class SuiteResult:
    """
    Outcome of one acceptance suite: report lines and the first failing identity, if any.
    """

    def __init__(self, name: str):
        self.name: str = name
        self.lines: List[str] = []
        self.failure: Optional[str] = None

    def add(self, line: str) -> None:
        self.lines.append(line)

    def fail(self, message: str) -> None:
        """
        Record a failure; only the first one is named in the summary.
        """
        self.lines.append(f"FAIL {message}")
        if self.failure is None:
            self.failure = message

    @property
    def passed(self) -> bool:
        return self.failure is None

    def summary(self) -> str:
        return f"suite {self.name}: " + ("pass" if self.passed else f"FAIL ({self.failure})")

    def raise_for_failure(self) -> None:
        if not self.passed:
            raise VerificationFailed(f"suite {self.name}: {self.failure}")


class AcceptanceSuites:
    """
    The named acceptance suites, each an exact check of one family of identities.
    """

    def __init__(self, config: WorkbenchConfig, stat_generator: StatGenerator,
                 cache: Optional[TraceCache] = None):
        """
        :param config: Bounds, seeds and fit fixtures.
        :param stat_generator: Scan statistics accumulator.
        :param cache: Optional count store shared by all scans.
        """
        self.config: WorkbenchConfig = config
        self.stat_generator: StatGenerator = stat_generator
        self.cache: Optional[TraceCache] = cache
        self.suites: Dict[str, Callable[[], SuiteResult]] = {
            "hecke": self.hecke_suite,
            "shimura": self.shimura_suite,
            "delta-birch": lambda: self.fit_suite("delta-birch"),
            "level5-weight4": lambda: self.fit_suite("level5-weight4"),
            "level4-weight6": lambda: self.fit_suite("level4-weight6"),
            "level3-weight6": lambda: self.fit_suite("level3-weight6"),
            "level2-weight8": lambda: self.fit_suite("level2-weight8"),
            "torsion": self.torsion_suite,
            "hasse": self.hasse_suite,
            "kummer": self.kummer_suite,
            "detcy": self.detcy_suite,
            "todd": self.todd_suite,
        }

    def select_suite(self, suite_name: str) -> Callable[[], SuiteResult]:
        """
        Select the suite method by name.

        :param suite_name: One of the registered names.
        :return: The suite method; UsageError for an unknown name.
        """
        suite = self.suites.get(suite_name)
        if suite is None:
            raise UsageError(f"unknown suite '{suite_name}', choose from {', '.join(self.suites)}")
        return suite

    def run(self, suite_name: str) -> SuiteResult:
        result = self.select_suite(suite_name)()
        logger.info(result.summary())
        return result

    # ---------- Modular forms ----------

    def hecke_suite(self) -> SuiteResult:
        result = SuiteResult("hecke")
        prec = self.config["hecke_prec"]
        for label, spec in NEWFORM_REGISTRY.items():
            violations = hecke_check(spec, prec)
            result.add(f"{label}: {prec} coefficients, {len(violations)} violations, "
                       f"a_2={ap(spec, 2)} a_3={ap(spec, 3)} a_5={ap(spec, 5)}")
            if violations:
                result.fail(f"{label} {violations[0]}")
            bad = [p for p in sympy.primerange(2, min(prec, 200)) if not deligne_bound_holds(spec, p)]
            if bad:
                result.fail(f"{label} exceeds the Deligne bound at p={bad[0]}")
        return result

    def shimura_suite(self) -> SuiteResult:
        result = SuiteResult("shimura")
        bound = self.config["shimura_bound"]
        mismatches = shimura_check(bound)
        checked = sum(1 for p in sympy.primerange(2, bound) if p != 11)
        result.add(f"primes below {bound} (p != 11): {checked} checked, {len(mismatches)} mismatches")
        if mismatches:
            result.fail(f"trace differs from a_p of 11.2 at p={mismatches[0]}")
        return result

    # ---------- Moment fits ----------

    def fit_suite(self, suite_name: str) -> SuiteResult:
        result = SuiteResult(suite_name)
        family = select_family(FIT_SUITES[suite_name])
        fixture = self.config.fit_fixture(family)
        model = fit(family, fixture.basis, fixture.fit_primes, self.cache, self.stat_generator)
        result.lines.extend(render_model(model))
        primes = [p for p in family.good_primes(fixture.validate_max) if p not in fixture.fit_primes]
        report = validate(model, primes, self.cache, self.stat_generator)
        result.lines.extend(render_residuals(report))
        failure = report.first_failure()
        if failure is not None:
            result.fail(f"{family.family_id} residual {failure[1]} at p={failure[0]}")
        if "ap" in model.basis and model.coefficient("ap") == 0:
            result.fail(f"{family.family_id} fit does not involve a_p")
        return result

    # ---------- Fibrewise geometry ----------

    def _smooth_indices(self, family: Family, p: int) -> List[int]:
        """
        Fibres without F_p-singular points inside the Hasse interval: the smooth members.
        """
        table = scan(family, p, self.cache, self.stat_generator)
        return [i for i, record in enumerate(table.records)
                if not record.singular and hasse_holds(record.trace, p)]

    def torsion_suite(self) -> SuiteResult:
        result = SuiteResult("torsion")
        bound = self.config["torsion_bound"]
        for family in cubic_families():
            checked = 0
            primes = family.good_primes(bound)
            for p in primes:
                fibres = family.fibre_set(p)
                origin, marked = family.origin_point(p), family.marked_point(p)
                for i in self._smooth_indices(family, p):
                    curve = family.fibre_curve(fibres, i, p)
                    try:
                        order = CubicWithOrigin(curve, origin).order(marked, family.torsion)
                    except NotFound:
                        order = None
                    checked += 1
                    if order != family.torsion:
                        result.fail(f"{family.family_id} fibre {fibres.params[i]} at p={p}: "
                                    f"order {order}, expected {family.torsion}")
            span = f"primes {primes[0]}..{primes[-1]}" if primes else "no good primes"
            result.add(f"{family.family_id}: order {family.torsion} on {checked} smooth fibres, {span}")
        return result

    def hasse_suite(self) -> SuiteResult:
        result = SuiteResult("hasse")
        bound = self.config["hasse_bound"]
        limit = self.config["diagnostic_limit"]
        for family in FAMILY_REGISTRY.values():
            certified = 0
            confirmed_singular = 0
            for p in family.good_primes(min(bound, limit)):
                table = scan(family, p, self.cache, self.stat_generator)
                fibres = family.fibre_set(p)
                outside = []
                for i, record in enumerate(table.records):
                    if record.singular:
                        continue
                    if hasse_holds(record.trace, p):
                        certified += 1
                    else:
                        outside.append(i)
                if not outside:
                    continue
                coeffs = np.stack([family.fibre_curve(fibres, i, p).coefficient_array(p) for i in outside])
                flags = extension_singular_flags(family.ambient, p, coeffs)
                confirmed_singular += int(flags.sum())
                for i, flag in zip(outside, flags.tolist()):
                    if not flag:
                        record = table.records[i]
                        result.fail(f"{family.family_id} fibre {record.param} at p={p}: "
                                    f"smooth with a={record.trace}")
            result.add(f"{family.family_id}: {certified} smooth fibres within the bound, "
                       f"{confirmed_singular} out-of-bound fibres singular over F_p^2")
        return result

    def kummer_suite(self) -> SuiteResult:
        result = SuiteResult("kummer")
        bound = self.config["kummer_bound"]
        for p in sympy.primerange(3, bound + 1):
            good = [(A, B) for A, B in KUMMER_CURVES if (4 * A ** 3 + 27 * B ** 2) % p]
            if len(good) < 3:
                result.fail(f"only {len(good)} good curves at p={p}")
            for A, B in good:
                counts = kummer_counts(A, B, p)
                oracle = kummer_orbit_count(A, B, p)
                if (counts.singular_quotient_count, counts.smooth_model_count) != oracle:
                    result.fail(f"A={A} B={B} p={p}: closed form "
                                f"{counts.singular_quotient_count}/{counts.smooth_model_count}, "
                                f"enumeration {oracle[0]}/{oracle[1]}")
                if counts.smooth_model_count - (p + 1) ** 2 - counts.a ** 2 != p * counts.f2:
                    result.fail(f"A={A} B={B} p={p}: blow-up correction is not p*f2")
            result.add(f"p={p}: {len(good)} curves agree")
        return result

    def detcy_suite(self) -> SuiteResult:
        result = SuiteResult("detcy")
        rng = random.Random(self.config["detcy_seed"])
        limit = self.config["diagnostic_limit"]
        result.add(f"anticanonical sections: {len(anticanonical_basis())}")
        for n in range(1, SECTIONS + 1):
            try:
                points = sample_general_points(n, DETCY_PRIME, rng)
                result.add(f"n={n}: rank {rank_profile(points, DETCY_PRIME)}, corank {SECTIONS - n}")
            except DegenerateInput as error:
                result.fail(f"rank genericity for n={n}: {error}")
        trials = self.config["detcy_trials"]
        agreements = 0
        for trial in range(trials):
            fixed5 = sample_general_points(5, DETCY_PRIME, rng)
            curve = fibre_cubic(fixed5, DETCY_PRIME)
            if trial % 2 == 0:
                on_curve = [q for q in rational_points(curve, DETCY_PRIME)
                            if not anticanonical_basis().is_base_point(q)]
                Q = on_curve[rng.randrange(len(on_curve))]
            else:
                Q = random_point(DETCY_PRIME, rng)
            if v6_member(list(fixed5) + [Q], DETCY_PRIME) == curve.contains(Q):
                agreements += 1
            else:
                result.fail(f"trial {trial}: v6 membership of {Q} disagrees with the fibre cubic")
        result.add(f"v6 membership matches the fibre cubic in {agreements}/{trials} trials over F_{DETCY_PRIME}")
        fibres = self.config["detcy_fibres"]
        for index in range(fibres):
            fixed5 = sample_smooth_fibre(TAU_PRIME, rng, diagnostic_limit=limit)
            group = fibre_group(fixed5, TAU_PRIME, limit)
            points = rational_points(group.curve, TAU_PRIME)
            fixed = [q for q in points if group.neg(q) == q]
            if group.neg(group.origin) != group.origin:
                result.fail(f"fibre {index}: tau moves the origin")
            for q in points:
                if group.neg(group.neg(q)) != q:
                    result.fail(f"fibre {index}: tau is not an involution at {q}")
            sample = points[:6]
            for P in sample:
                for Q in sample:
                    if group.neg(group.add(P, Q)) != group.add(group.neg(P), group.neg(Q)):
                        result.fail(f"fibre {index}: tau is not a homomorphism at {P}, {Q}")
            if len(fixed) not in (1, 2, 4):
                result.fail(f"fibre {index}: {len(fixed)} tau-fixed points")
            result.add(f"fibre {index}: {len(points)} points, {len(fixed)} fixed by tau")
        return result

    # ---------- Todd classes ----------

    def todd_suite(self) -> SuiteResult:
        result = SuiteResult("todd")
        bound = self.config["todd_bound"]
        for m, top, psum in odd_vanishing_table(19, bound):
            result.add(f"m={m}: top Chern coefficient {top}, power sum {psum}")
            if top != 0 or psum != 0:
                result.fail(f"coefficient of c_{m} in Todd_{m} is {top}, not 0")
        for m in range(1, 13):
            if top_chern_coefficient(m, bound) != power_sum(m):
                result.fail(f"m={m}: top Chern coefficient differs from the power sum")
        for m in range(1, min(6, bound) + 1):
            todd = todd_polynomial(m, bound)
            result.add(f"Todd_{m} = {todd}")
            if todd != todd_polynomial_direct(m, bound):
                result.fail(f"Todd_{m} differs from the root expansion")
            genus = todd_genus_projective(m, bound)
            if genus != 1:
                result.fail(f"Todd genus of P^{m} is {genus}")
        return result
