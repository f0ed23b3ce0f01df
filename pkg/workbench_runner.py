import argparse
import logging
import sys
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from MainFiles.acceptance_suites import AcceptanceSuites
from MainFiles.curve_families import FAMILY_REGISTRY, select_family
from MainFiles.determinantal_cy import (
    anticanonical_basis,
    det6,
    fibre_cubic,
    rank_profile,
    tau_fibre,
    tau_fixed_points,
    v6_member,
)
from MainFiles.finite_fields import PrimeField
from MainFiles.frobenius_lab import (
    fit,
    kummer_counts,
    kummer_orbit_count,
    moment,
    rankin_euler_factor,
    rankin_trace,
    rankin_weight,
    scan,
    sym_euler_factor,
    sym_trace,
    validate,
)
from MainFiles.linear_systems import named_system, parse_conditions, reduce_mod_p, solve_conditions
from MainFiles.power_series import (
    NEWFORM_REGISTRY,
    EtaQuotient,
    admissible_pairs,
    ap,
    eta_expand,
    euler_factor,
    hecke_check,
    select_newform,
)
from MainFiles.report_renderer import (
    join_report,
    render_kummer,
    render_mapping,
    render_model,
    render_moment,
    render_polynomial,
    render_residuals,
    render_table,
)
from MainFiles.stat_generator import StatGenerator
from MainFiles.todd_lab import odd_vanishing_table, td_series, todd_polynomial
from MainFiles.workbench_config import WorkbenchConfig, split_integers, split_names
from MainFiles.workbench_errors import UsageError, VerificationFailed, WorkbenchError

logger = logging.getLogger("workbench_runner")


class WorkbenchArgumentParser(argparse.ArgumentParser):
    """
    An ArgumentParser that reports bad command lines as UsageError instead of exiting.
    """

    def error(self, message: str) -> None:
        raise UsageError(message)


def parse_factors(text: str) -> List[Tuple[int, int]]:
    """
    Parse "1^4,5^4" into [(1, 4), (5, 4)].
    """
    factors = []
    for part in split_names(text):
        d, caret, r = part.partition("^")
        try:
            factors.append((int(d), int(r) if caret else 1))
        except ValueError:
            raise UsageError(f"cannot parse eta factor '{part}'")
    return factors


def parse_points(text: str) -> List[str]:
    points = [part.strip() for part in text.split(";") if part.strip()]
    if not points:
        raise UsageError("no points given")
    return points


def build_parser() -> WorkbenchArgumentParser:
    parser = WorkbenchArgumentParser(prog="workbench_runner", description="Calabi-Yau modularity workbench")
    parser.add_argument("--config", help="YAML config file")
    commands = parser.add_subparsers(dest="command", required=True)

    eta = commands.add_parser("eta", help="expand an eta quotient")
    eta.add_argument("--factors", required=True, help='divisor^exponent list, e.g. "1^4,5^4"')
    eta.add_argument("--prec", type=int, default=10)

    for name in ("ap", "euler", "hecke"):
        sub = commands.add_parser(name)
        sub.add_argument("--level", type=int, required=True)
        sub.add_argument("--weight", type=int, required=True)
        if name == "ap":
            sub.add_argument("--n", type=int, required=True)
        elif name == "euler":
            sub.add_argument("--prime", type=int, required=True)
        else:
            sub.add_argument("--prec", type=int)

    linsys = commands.add_parser("linsys", help="solve a linear system of curves")
    source = linsys.add_mutually_exclusive_group(required=True)
    source.add_argument("--system", help="built-in condition set")
    source.add_argument("--conditions", help='e.g. "pass 1:0:0; tangent 0:0:1 @ 1:0:0"')
    source.add_argument("--conditions-key", help="conditions_<name> entry of the config")
    linsys.add_argument("--ambient", default="P2", choices=("P2", "P1xP1"))
    linsys.add_argument("--prime", type=int)

    scan_parser = commands.add_parser("scan", help="count points on every fibre of a family")
    scan_parser.add_argument("--family", required=True)
    scan_parser.add_argument("--prime", type=int, required=True)
    scan_parser.add_argument("--no-cache", action="store_true")

    moments = commands.add_parser("moments", help="moment sums of a family")
    moments.add_argument("--family", required=True)
    moments.add_argument("--primes", required=True)
    moments.add_argument("--exponent", type=int)

    fit_parser = commands.add_parser("fit", help="fit the moment of a family exactly")
    fit_parser.add_argument("--family", required=True)
    fit_parser.add_argument("--basis")
    fit_parser.add_argument("--primes")

    validate_parser = commands.add_parser("validate", help="fit, then check residuals on further primes")
    validate_parser.add_argument("--family", required=True)
    validate_parser.add_argument("--basis")
    validate_parser.add_argument("--fit-primes")
    validate_parser.add_argument("--primes")
    validate_parser.add_argument("--max", type=int)

    verify = commands.add_parser("verify", help="run an acceptance suite")
    verify.add_argument("--suite", required=True)
    suite = commands.add_parser("suite", help="run an acceptance suite")
    suite.add_argument("name")

    kummer = commands.add_parser("kummer", help="Kummer surface counts for y^2 = x^3 + Ax + B")
    kummer.add_argument("--A", type=int, required=True)
    kummer.add_argument("--B", type=int, required=True)
    kummer.add_argument("--prime", type=int, required=True)

    detcy = commands.add_parser("detcy", help="anticanonical section matrices and the fibre involution")
    detcy.add_argument("--action", required=True, choices=("basis", "rank", "det", "fibre", "tau", "fixed"))
    detcy.add_argument("--points", help='semicolon-separated "x:y:z" points')
    detcy.add_argument("--point", help="the point moved by tau")
    detcy.add_argument("--prime", type=int)

    todd = commands.add_parser("todd", help="Todd polynomials and the odd vanishing table")
    todd.add_argument("--m", type=int)
    todd.add_argument("--table", type=int, help="largest odd m of the vanishing table")
    todd.add_argument("--series", type=int, help="number of td(t) coefficients to print")

    sym = commands.add_parser("sym", help="symmetric power traces and Euler factors")
    sym.add_argument("--a", type=int, required=True)
    sym.add_argument("--prime", type=int, required=True)
    sym.add_argument("--weight", type=int, required=True)
    sym.add_argument("--m", type=int, required=True)

    rankin = commands.add_parser("rankin", help="Rankin-Selberg trace of two registry forms")
    rankin.add_argument("--g", required=True, help="registry label, e.g. 11.2")
    rankin.add_argument("--h", required=True, help="registry label, e.g. 5.4")
    rankin.add_argument("--prime", type=int, required=True)

    commands.add_parser("registry", help="list forms, admissible levels and families")
    return parser


class WorkbenchRunner:
    """
    Runs one parsed command against a configuration and collects its report lines.
    """

    def __init__(self, config: WorkbenchConfig):
        """
        :param config: The loaded configuration.
        """
        self.config: WorkbenchConfig = config
        self.stat_generator: StatGenerator = StatGenerator()
        self.cache = config.cache()
        self.suites = AcceptanceSuites(config, self.stat_generator, self.cache)
        self.lines: List[str] = []
        self.commands: Dict[str, Callable[[argparse.Namespace], None]] = {
            "eta": self.eta_command,
            "ap": self.ap_command,
            "euler": self.euler_command,
            "hecke": self.hecke_command,
            "linsys": self.linsys_command,
            "scan": self.scan_command,
            "moments": self.moments_command,
            "fit": self.fit_command,
            "validate": self.validate_command,
            "verify": lambda args: self.suite_command(args.suite),
            "suite": lambda args: self.suite_command(args.name),
            "kummer": self.kummer_command,
            "detcy": self.detcy_command,
            "todd": self.todd_command,
            "sym": self.sym_command,
            "rankin": self.rankin_command,
            "registry": self.registry_command,
        }

    def execute(self, args: argparse.Namespace) -> List[str]:
        self.lines = []
        self.commands[args.command](args)
        return self.lines

    # ---------- Modular forms ----------

    def eta_command(self, args: argparse.Namespace) -> None:
        recipe = EtaQuotient(parse_factors(args.factors))
        self.lines.append(f"{recipe}: weight {recipe.weight}, q-order {recipe.q_order}")
        self.lines.append(str(eta_expand(recipe, args.prec)))

    def ap_command(self, args: argparse.Namespace) -> None:
        self.lines.append(str(ap(select_newform(args.level, args.weight), args.n)))

    def euler_command(self, args: argparse.Namespace) -> None:
        spec = select_newform(args.level, args.weight)
        self.lines.append(render_polynomial(euler_factor(spec, args.prime)))

    def hecke_command(self, args: argparse.Namespace) -> None:
        spec = select_newform(args.level, args.weight)
        prec = args.prec or self.config["hecke_prec"]
        violations = hecke_check(spec, prec)
        self.lines.append(f"{spec.label}: {prec} coefficients, {len(violations)} violations")
        self.lines.extend(str(violation) for violation in violations)
        if violations:
            raise VerificationFailed(f"{spec.label}: {violations[0]}")

    # ---------- Curves ----------

    def linsys_command(self, args: argparse.Namespace) -> None:
        if args.system:
            system = named_system(args.system)
        else:
            text = args.conditions if args.conditions else self.config.conditions(args.conditions_key)
            system = solve_conditions(args.ambient, parse_conditions(text, args.ambient))
        self.lines.append(str(system))
        for curve in system.curves():
            self.lines.append(f"  {curve}")
        self.lines.append("bad primes: " + ",".join(str(p) for p in sorted(system.bad_primes)))
        if args.prime is not None:
            self.lines.append(f"over F_{args.prime}:")
            for curve in reduce_mod_p(system, args.prime):
                self.lines.append(f"  {curve}")

    def scan_command(self, args: argparse.Namespace) -> None:
        family = select_family(args.family)
        table = scan(family, args.prime, None if args.no_cache else self.cache, self.stat_generator)
        self.lines.extend(render_table(table))
        self.lines.extend(render_mapping("stats", self.stat_generator.get_performance_stats_summary()))

    def moments_command(self, args: argparse.Namespace) -> None:
        family = select_family(args.family)
        exponent = args.exponent or family.exponent
        for p in split_integers(args.primes):
            table = scan(family, p, self.cache, self.stat_generator)
            self.lines.extend(render_moment(moment(table, exponent)))

    def _fit(self, family_id: str, basis: Optional[str], primes: Optional[str]):
        family = select_family(family_id)
        fixture = self.config.fit_fixture(family)
        model = fit(
            family,
            split_names(basis) if basis else fixture.basis,
            split_integers(primes) if primes else fixture.fit_primes,
            self.cache,
            self.stat_generator,
        )
        return family, fixture, model

    def fit_command(self, args: argparse.Namespace) -> None:
        _, _, model = self._fit(args.family, args.basis, args.primes)
        self.lines.extend(render_model(model))

    def validate_command(self, args: argparse.Namespace) -> None:
        family, fixture, model = self._fit(args.family, args.basis, args.fit_primes)
        if args.primes:
            primes: Sequence[int] = split_integers(args.primes)
        else:
            upto = args.max or fixture.validate_max
            primes = [p for p in family.good_primes(upto) if p not in model.fit_primes]
        report = validate(model, primes, self.cache, self.stat_generator)
        self.lines.extend(render_model(model))
        self.lines.extend(render_residuals(report))
        failure = report.first_failure()
        if failure is not None:
            raise VerificationFailed(f"residual {failure[1]} at p={failure[0]}")

    def suite_command(self, name: str) -> None:
        result = self.suites.run(name)
        self.lines.extend(result.lines)
        self.lines.append(result.summary())
        result.raise_for_failure()

    def kummer_command(self, args: argparse.Namespace) -> None:
        counts = kummer_counts(args.A, args.B, args.prime)
        oracle = kummer_orbit_count(args.A, args.B, args.prime)
        self.lines.extend(render_kummer(args.A, args.B, args.prime, counts, oracle))

    def detcy_command(self, args: argparse.Namespace) -> None:
        if args.action == "basis":
            basis = anticanonical_basis()
            self.lines.append("base points: " + " ".join(str(point) for point in basis.base_points))
            self.lines.extend(f"  {curve}" for curve in basis.basis)
            return
        if not args.points:
            raise UsageError(f"detcy --action {args.action} needs --points")
        points = parse_points(args.points)
        if args.action == "rank":
            self.lines.append(f"rank {rank_profile(points, args.prime)}")
        elif args.action == "det":
            value = det6(points, args.prime)
            member = "yes" if v6_member(points, args.prime) else "no"
            self.lines.append(f"det {value}")
            self.lines.append(f"v6 member: {member}")
        elif args.action == "fibre":
            self.lines.append(str(fibre_cubic(points, args.prime)))
        else:
            if args.prime is None:
                raise UsageError("the fibre involution needs --prime")
            PrimeField(args.prime)
            if args.action == "tau":
                if not args.point:
                    raise UsageError("detcy --action tau needs --point")
                limit = self.config["diagnostic_limit"]
                self.lines.append(str(tau_fibre(points, args.point, args.prime, limit)))
            else:
                fixed = tau_fixed_points(points, args.prime, self.config["diagnostic_limit"])
                self.lines.append(f"{len(fixed)} fixed points: " + " ".join(str(point) for point in fixed))

    # ---------- Todd classes and traces ----------

    def todd_command(self, args: argparse.Namespace) -> None:
        bound = self.config["todd_bound"]
        if args.m is None and args.table is None and args.series is None:
            raise UsageError("todd needs --m, --table or --series")
        if args.series is not None:
            self.lines.append(f"td(t) = {td_series(args.series)}")
        if args.m is not None:
            self.lines.append(f"Todd_{args.m} = {todd_polynomial(args.m, bound)}")
        if args.table is not None:
            self.lines.append("m top_chern_coefficient power_sum")
            for m, top, psum in odd_vanishing_table(args.table, bound):
                self.lines.append(f"{m} {top} {psum}")

    def sym_command(self, args: argparse.Namespace) -> None:
        PrimeField(args.prime)
        self.lines.append(f"trace {sym_trace(args.a, args.prime, args.weight, args.m)}")
        self.lines.append("euler " + render_polynomial(sym_euler_factor(args.a, args.prime, args.weight, args.m)))

    def rankin_command(self, args: argparse.Namespace) -> None:
        g, h = NEWFORM_REGISTRY.get(args.g), NEWFORM_REGISTRY.get(args.h)
        if g is None or h is None:
            raise UsageError(f"unknown registry label, choose from {', '.join(NEWFORM_REGISTRY)}")
        p = args.prime
        PrimeField(p)
        a_g, a_h = ap(g, p), ap(h, p)
        self.lines.append(f"a_p: {a_g} {a_h}")
        self.lines.append(f"trace {rankin_trace(a_g, a_h)}")
        self.lines.append(f"weight {rankin_weight(g.weight, h.weight)}")
        if g.level % p and h.level % p:
            self.lines.append("euler " + render_polynomial(rankin_euler_factor(a_g, g.weight, a_h, h.weight, p)))

    def registry_command(self, args: argparse.Namespace) -> None:
        self.lines.append("forms:")
        self.lines.extend(f"  {spec}" for spec in NEWFORM_REGISTRY.values())
        self.lines.append("levels with at most one form:")
        for level, weights, realised in admissible_pairs():
            self.lines.append(f"  N={level}: k {weights}" + (f" (registry {', '.join(realised)})" if realised else ""))
        self.lines.append("families:")
        self.lines.extend(f"  {family}" for family in FAMILY_REGISTRY.values())
        self.lines.append("suites: " + ", ".join(self.suites.suites))


def run(argv: Sequence[str]) -> Tuple[int, str]:
    """
    Run one command line.

    :param argv: Arguments without the program name.
    :return: (exit code, report text).
    """
    runner: Optional[WorkbenchRunner] = None
    try:
        args = build_parser().parse_args(list(argv))
        config = WorkbenchConfig.load(args.config)
        logging.basicConfig(level=config.log_level, stream=sys.stderr,
                            format="%(levelname)s %(name)s: %(message)s")
        logger.debug("running %s", args.command)
        runner = WorkbenchRunner(config)
        return 0, join_report(runner.execute(args))
    except WorkbenchError as error:
        lines = list(runner.lines) if runner is not None else []
        lines.append(f"error: {error}")
        return error.exit_code, join_report(lines)


def main() -> None:
    code, report = run(sys.argv[1:])
    sys.stdout.write(report)
    sys.exit(code)


if __name__ == "__main__":
    main()
