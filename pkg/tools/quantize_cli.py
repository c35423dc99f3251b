import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from condensation_quantizer import __version__
from condensation_quantizer.api import CondensationAPI
from condensation_quantizer.bounds import upper_bound
from condensation_quantizer.config import AnalysisConfig
from condensation_quantizer.errors import InvalidSystemError
from condensation_quantizer.fixtures import two_map_uniform
from condensation_quantizer.measure import default_resolution
from condensation_quantizer.partition import format_exponent, summary_rows
from condensation_quantizer.cache import export_bundle
from condensation_quantizer.powers import (
    DEFAULT_GUARD_BAND,
    EXACT_DENOMINATOR_LIMIT,
    GUARD_PRECISION_DIGITS,
    Exponent,
    normalize_exponent,
)
from condensation_quantizer.quantizer import eval_codebook, geometric_grid, lloyd
from condensation_quantizer.system import DEFAULT_REFINE_DEPTH, CondensationSystem
from modules.report import (
    print_comparison,
    print_summary,
    save_codebook_csv,
    save_csv,
    save_error,
    save_json,
    save_manifest,
)

SEEDED_COMMANDS = ("estimate", "fit")

DEMO_SAMPLES = 20_000
DEMO_N = 16


#
# Configuration & Setup
#

@dataclass
class RunConfig:
    """Settings of one command line run"""
    command: str
    system: Optional[str]
    output_dir: Path
    r: Exponent = Fraction(2)
    k: int = 1
    k_max: Optional[int] = None
    n_grid: List[int] = field(default_factory=lambda: [16, 64, 256])
    seed: Optional[int] = None
    budget: int = 10_000_000
    tol: float = 1e-12
    samples: int = 200_000
    restarts: int = 5
    r_max: float = 10.0
    scan_r0: bool = False
    exhaustive: bool = False
    verbose: bool = False

    @property
    def k_values(self) -> List[int]:
        """k..k_max when a range is given, otherwise just k"""
        return list(range(self.k, (self.k_max or self.k) + 1))

    def analysis_config(self) -> AnalysisConfig:
        return AnalysisConfig(
            tol=self.tol,
            node_budget=self.budget,
            k_max=self.k_max or self.k,
            sample_count=self.samples,
            restarts=self.restarts,
            r_max=self.r_max
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            'command': self.command,
            'system': self.system,
            'r': format_exponent(self.r),
            'k': self.k,
            'k_max': self.k_max,
            'n_grid': self.n_grid,
            'seed': self.seed,
            'budget': self.budget,
            'tol': self.tol,
            'samples': self.samples,
            'restarts': self.restarts,
            'r_max': self.r_max,
            'scan_r0': self.scan_r0,
            'exhaustive': self.exhaustive
        }


def parse_exponent(text: str) -> Exponent:
    """Exact when the text is an integer, a ratio a/b or a short decimal"""
    try:
        return normalize_exponent(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError) as e:
        raise argparse.ArgumentTypeError(f"invalid exponent {text!r}: {e}")


def parse_grid(text: str) -> List[int]:
    """A:B:GEOM → A, A·GEOM, … ≤ B"""
    try:
        start, stop, factor = (int(part) for part in text.split(':'))
        return geometric_grid(start, stop, factor)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"invalid n-grid {text!r}: {e}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--system", help="System JSON file or built-in name (ex315, nonuniform-a, ...)")
    common.add_argument("--r", type=parse_exponent, default=Fraction(2), help="Order r of the quantization error")
    common.add_argument("--k", type=int, default=1, help="First (or only) level k")
    common.add_argument("--k-max", type=int, default=None, help="Last level of a k range")
    common.add_argument("--n-grid", type=parse_grid, default=[16, 64, 256], help="Codebook sizes A:B:GEOM")
    common.add_argument("--seed", type=int, default=None, help="Seed for all sampling")
    common.add_argument("--out", type=Path, default=Path.cwd() / "quantizer_results", help="Output directory")
    common.add_argument("--budget", type=int, default=10_000_000, help="Node budget for enumerations")
    common.add_argument("--tol", type=float, default=1e-12, help="Root-finding tolerance")
    common.add_argument("--samples", type=int, default=200_000, help="Monte-Carlo sample count")
    common.add_argument("--restarts", type=int, default=5, help="Lloyd restarts")
    common.add_argument("-v", "--verbose", action="store_true", help="Enable verbose output")

    parser = argparse.ArgumentParser(description="Quantization analyses of condensation measures")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="Check the in-homogeneous open set condition")
    dims = sub.add_parser("dims", parents=[common], help="Solve for s_r, t_r and ξ_r")
    dims.add_argument("--scan-r0", action="store_true", help="Also locate the crossover r_0")
    dims.add_argument("--r-max", type=float, default=10.0, help="Upper end of the r_0 scan")
    sub.add_parser("partition", parents=[common], help="Build Γ_{k,r}, Ψ_{k,r} and φ_{k,r}")
    bounds = sub.add_parser("bounds", parents=[common], help="Analytic upper bound, lower sum and test family")
    bounds.add_argument("--exhaustive", action="store_true", help="Check separation on every pair")
    sub.add_parser("estimate", parents=[common], help="Lloyd estimates of e_{n,r}")
    sub.add_parser("fit", parents=[common], help="Fit the quantization dimension")
    sub.add_parser("demo315", parents=[common], help="Full pipeline on the two-map example")
    return parser


def parse_arguments(argv: Sequence[str]) -> RunConfig:
    """Parse command line arguments"""
    args = build_parser().parse_args(list(argv))
    return RunConfig(
        command=args.command,
        system=args.system,
        output_dir=args.out,
        r=args.r,
        k=args.k,
        k_max=args.k_max,
        n_grid=args.n_grid,
        seed=args.seed,
        budget=args.budget,
        tol=args.tol,
        samples=args.samples,
        restarts=args.restarts,
        r_max=getattr(args, 'r_max', 10.0),
        scan_r0=getattr(args, 'scan_r0', False),
        exhaustive=getattr(args, 'exhaustive', False),
        verbose=args.verbose
    )


def setup_logging(output_dir: Path, verbose: bool) -> logging.Logger:
    """Setup logging"""
    output_dir.mkdir(parents=True, exist_ok=True)

    log_level = logging.DEBUG if verbose else logging.INFO
    logger = logging.getLogger("condensation_quantizer")
    logger.setLevel(log_level)

    file_handler = logging.FileHandler(output_dir / "run.log")
    file_handler.setFormatter(
        logging.Formatter('%(asctime)s - %(levelname)s - %(message)s')
    )
    logger.addHandler(file_handler)

    console_handler = logging.StreamHandler()
    console_handler.setFormatter(
        logging.Formatter('%(levelname)s: %(message)s')
    )
    logger.addHandler(console_handler)

    return logger


def close_logging(logger: logging.Logger) -> None:
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()


#
# Commands
#

Outputs = List[Path]


def _check_config(config: RunConfig) -> None:
    if config.k < 1:
        raise ValueError(f"--k must be at least 1, got {config.k}")
    if config.k_max is not None and config.k_max < config.k:
        raise ValueError(f"--k-max {config.k_max} is below --k {config.k}")
    if config.command in SEEDED_COMMANDS and config.seed is None:
        raise ValueError(f"{config.command} needs an explicit --seed")
    if config.command != "demo315" and not config.system:
        raise ValueError(f"{config.command} needs --system")


def cmd_validate(api: CondensationAPI, system: CondensationSystem, config: RunConfig,
                 logger: logging.Logger) -> Outputs:
    report = api.validate(system)
    outputs = [save_json(report, config.output_dir, "iosc_report.json")]
    print_summary("IOSC check", {v.name: v.status.value for v in report.verdicts})
    if not report.passed:
        witnesses = "; ".join(f"{v.name}: {v.witness}" for v in report.failures())
        raise InvalidSystemError(f"IOSC check failed ({witnesses})")
    logger.info("IOSC check passed")
    return outputs


def cmd_dims(api: CondensationAPI, system: CondensationSystem, config: RunConfig,
             logger: logging.Logger) -> Outputs:
    result = api.dims(system, config.r)
    data: Dict[str, Any] = result.to_dict()
    if config.scan_r0:
        data['r0'] = api.crossover(system, config.r_max)
    print_summary("Quantization dimension", {k: v for k, v in data.items() if k != 'residuals'})
    return [save_json(data, config.output_dir, "dims.json")]


def _bundles(api: CondensationAPI, system: CondensationSystem, config: RunConfig) -> List[Any]:
    return [api.partition(system, config.r, k) for k in config.k_values]


def cmd_partition(api: CondensationAPI, system: CondensationSystem, config: RunConfig,
                  logger: logging.Logger) -> Outputs:
    bundles = _bundles(api, system, config)
    s = api.dims(system, config.r).s_r
    outputs = [export_bundle(b, config.output_dir / f"bundle_k{b.k}.json") for b in bundles]
    rows = summary_rows(system, bundles, s)
    outputs.append(save_csv(rows, ["k", "N_kr", "phi_kr", "l1", "l2", "I_k"], config.output_dir, "partition.csv"))
    for row in rows:
        logger.info(f"k={row['k']}: N={row['N_kr']}, φ={row['phi_kr']}, l1={row['l1']}, l2={row['l2']}")
    return outputs


def cmd_bounds(api: CondensationAPI, system: CondensationSystem, config: RunConfig,
               logger: logging.Logger) -> Outputs:
    reports = [api.bounds(system, config.r, k, config.exhaustive) for k in config.k_values]
    outputs = [save_codebook_csv(report.upper.codebook.to_list(), config.output_dir, f"codebook_k{report.k}.csv")
               for report in reports]
    coefficients, sums = api.coefficients(system, config.r, config.k_max or config.k)
    data = {
        'reports': [report.to_dict() for report in reports],
        'coefficients': coefficients,
        'sum_growth': sums
    }
    outputs.append(save_json(data, config.output_dir, "bounds.json"))
    for report in reports:
        print_summary(f"Bounds k={report.k}", {
            'phi': report.phi,
            'upper': float(report.upper.value),
            'lower_sum': float(report.lower_sum),
            'delta': report.markers.delta,
            'd4': report.d4,
            'separation': 'pass' if report.separation.passed else 'fail',
            'energy band': 'pass' if report.energies.passed else 'fail'
        })
    return outputs


def _matching_upper(system: CondensationSystem, config: RunConfig, api: CondensationAPI,
                    n: int, k_limit: int) -> Optional[float]:
    """upper_bound^{1/r} at the largest k ≤ k_limit with φ_{k,r} ≤ n"""
    best = None
    for k in range(1, k_limit + 1):
        bundle = api.partition(system, config.r, k)
        if bundle.phi > n:
            break
        best = bundle
    if best is None:
        return None
    value = upper_bound(system, config.r, best.k, best).value
    return float(value) ** (1.0 / float(config.r))


def cmd_estimate(api: CondensationAPI, system: CondensationSystem, config: RunConfig,
                 logger: logging.Logger) -> Outputs:
    assert config.seed is not None
    samples = api.sample(system, config.seed)
    xi = api.dims(system, config.r).xi_r
    k_limit = config.k_max or api.config.k_max
    rows = []
    for codebook, estimate in api.estimate(system, config.r, config.n_grid, config.seed, samples):
        rows.append({
            'n': estimate.n,
            'e_hat': estimate.value,
            'se': estimate.se,
            'upper_bound_at_matching_phi': _matching_upper(system, config, api, estimate.n, k_limit),
            'coefficient_proxy': estimate.n ** (1.0 / xi) * estimate.value
        })
        logger.info(f"n={estimate.n}: ê={estimate.value:.6g} ± {estimate.se:.2g}")
    columns = ["n", "e_hat", "se", "upper_bound_at_matching_phi", "coefficient_proxy"]
    return [save_csv(rows, columns, config.output_dir, "estimate.csv")]


def cmd_fit(api: CondensationAPI, system: CondensationSystem, config: RunConfig,
            logger: logging.Logger) -> Outputs:
    assert config.seed is not None
    result = api.fit(system, config.r, config.n_grid, config.seed)
    rows = [row.__dict__ for row in result.rows]
    print_summary("Dimension fit", {'slope': result.slope, 'xi_r': result.xi_r,
                                    'relative error': result.relative_error})
    return [
        save_json(result, config.output_dir, "fit.json"),
        save_csv(rows, ["n", "e_hat", "se", "coefficient_proxy"], config.output_dir, "fit.csv")
    ]


def _comparison(quantity: str, expected: Any, computed: Any, match: Optional[bool]) -> Dict[str, Any]:
    return {'quantity': quantity, 'expected': expected, 'computed': computed, 'match': match}


def cmd_demo315(api: CondensationAPI, system: CondensationSystem, config: RunConfig,
                logger: logging.Logger) -> Outputs:
    report = api.validate(system)
    if not report.passed:
        raise InvalidSystemError("The demo system fails the IOSC check")
    dims = api.dims(system, config.r)
    bundle = api.partition(system, config.r, 1)
    bounds = api.bounds(system, config.r, 1)
    seed = config.seed if config.seed is not None else 0
    samples = api.sample(system, seed, DEMO_SAMPLES)
    estimate = None
    if float(config.r) >= 1:
        _, estimate = api.estimate(system, config.r, [DEMO_N], seed, samples)[0]

    reference = system == two_map_uniform()
    if not reference:
        logger.warning("Demo system differs from the built-in two-map example; reference values are skipped")
    at_two = reference and config.r == 2
    t_two = 2 * math.log(2) / math.log(24)
    rows = [
        _comparison("IOSC", "pass", "pass" if report.passed else "fail", report.passed),
        _comparison("s_r", "1/3" if at_two else None, dims.s_r,
                    abs(dims.s_r - 1 / 3) < 1e-10 if at_two else None),
        _comparison("t_r", t_two if at_two else None, dims.t_r,
                    abs(dims.t_r - t_two) < 1e-10 if at_two else None),
        _comparison("xi_r", t_two if at_two else None, dims.xi_r,
                    abs(dims.xi_r - t_two) < 1e-10 if at_two else None),
        _comparison("phi_1", 12 if at_two else None, bundle.phi, bundle.phi == 12 if at_two else None),
        _comparison("tau0", "(1,2)" if reference else None, str(bounds.markers.tau0),
                    str(bounds.markers.tau0) == "(1,2)" if reference else None),
        _comparison("delta", "5/192" if reference else None, bounds.markers.delta,
                    bounds.markers.delta == Fraction(5, 192) if reference else None),
        _comparison("separation", "pass", "pass" if bounds.separation.passed else "fail", bounds.separation.passed),
        _comparison("energy band", "pass", "pass" if bounds.energies.passed else "fail", bounds.energies.passed),
        _comparison("mass(G_1) >= d4", "true", bounds.family_mass >= bounds.d4, bounds.family_mass >= bounds.d4),
    ]
    if estimate is not None:
        explicit_codebook = bounds.upper.codebook
        explicit = eval_codebook(samples, explicit_codebook, float(config.r))
        _, refined = lloyd(samples, explicit_codebook.n, float(config.r), restarts=1, seed=seed,
                           bootstrap=0, initial=explicit_codebook)
        rows.append(_comparison(f"e_hat(n={explicit_codebook.n}) <= explicit codebook", explicit, refined.value,
                                refined.value <= explicit * (1 + 1e-12)))
    print_comparison(rows)

    data = {
        'r': format_exponent(config.r),
        'seed': seed,
        'reference': reference,
        'comparison': rows,
        'dims': dims,
        'bounds': bounds,
        'estimate': estimate
    }
    return [save_json(data, config.output_dir, "demo315.json")]


HANDLERS: Dict[str, Callable[[CondensationAPI, CondensationSystem, RunConfig, logging.Logger], Outputs]] = {
    'validate': cmd_validate,
    'dims': cmd_dims,
    'partition': cmd_partition,
    'bounds': cmd_bounds,
    'estimate': cmd_estimate,
    'fit': cmd_fit,
    'demo315': cmd_demo315,
}


def write_manifest(config: RunConfig, api: CondensationAPI, system: CondensationSystem,
                   outputs: Outputs) -> Path:
    manifest = {
        'version': __version__,
        'run': config.to_dict(),
        'analysis': api.config.to_dict(),
        'constants': {
            'exact_denominator_limit': EXACT_DENOMINATOR_LIMIT,
            'guard_band': DEFAULT_GUARD_BAND,
            'guard_precision_digits': GUARD_PRECISION_DIGITS,
            'refine_depth': DEFAULT_REFINE_DEPTH,
            'sample_resolution': default_resolution(system)
        },
        'system': system.to_dict(),
        'outputs': sorted(path.name for path in outputs)
    }
    return save_manifest(manifest, config.output_dir)


#
# Main Program Flow
#

def run(argv: Sequence[str]) -> int:
    """Run one command; returns the process exit code"""
    config = parse_arguments(argv)
    logger = setup_logging(config.output_dir, config.verbose)
    try:
        _check_config(config)
        api = CondensationAPI(config.analysis_config())
        system = api.load(config.system or "ex315")
        outputs = HANDLERS[config.command](api, system, config, logger)
        write_manifest(config, api, system, outputs)
        logger.info(f"{config.command} completed. Results saved to {config.output_dir}")
        return 0

    except KeyboardInterrupt:
        print("\nRun interrupted by user")
        return 1
    except Exception as e:
        payload = save_error(e, config.command, config.output_dir, logger)
        print(json.dumps(payload, sort_keys=True), file=sys.stderr)
        logger.debug("Failure details", exc_info=True)
        return 1
    finally:
        close_logging(logger)


def main() -> int:
    """Main entry point"""
    return run(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
