import argparse
import os
import sys
from typing import List, Optional, Sequence

import structlog
from dotenv import load_dotenv

from cli import commands, exit_codes
from cli.config import (
    DEFAULT_FORMAT,
    DEFAULT_SEED,
    RunConfig,
    _str_to_bool,
    build_config,
    explicit_flags,
    read_config_file,
)
from cli.manifest import ManifestRecorder, default_manifest_path
from cli.reports import write_report
from deform.bounds import DEFAULT_TOLERANCE
from deform.cache import DEFAULT_CACHE_DIR, StateCache
from numlab.slow import DEFAULT_H_LIST, DEFAULT_ORDERS
from numlab.theta import DEFAULT_LIMIT_H
from poisson.checks import DEFAULT_TRIALS, SUITES
from shared import logging_config, run_ids
from shared.errors import ExitCode, UsageError
from shared.logging_config import DEFAULT_LOG_LEVEL
from shared.workers import WorkerPool

load_dotenv()
logger = structlog.get_logger(__name__)

DEFAULT_KDV_N = "1,2,3"
DEFAULT_TODA_K = "1,2,3"
DEFAULT_ORDER = 8
DEFAULT_RESIDUAL_K = "2,3"
DEFAULT_CHARNUM_FLOWS = 3
DEFAULT_MAX_N = 12
DEFAULT_MIN_N = 1
DEFAULT_ISO_N = 16
DEFAULT_ISO_K = "1,2"
DEFAULT_ISO_T_END = 1.0
DEFAULT_ISO_STEPS = 10000
DEFAULT_ISO_M_MAX = 6
DEFAULT_ISO_TOLERANCE = 1e-8
DEFAULT_THETA_SAMPLES = 100
DEFAULT_THETA_B = 1
DEFAULT_THETA_S = "0.35+0.2j"
DEFAULT_THETA_BETA = "1j"
DEFAULT_POISSON_N = 5
DEFAULT_BRACKETS = "p1,p2"

OPTION_ALIASES = {"cache": "cache_dir"}


def _fractions(values: Sequence[float]) -> str:
    return ",".join(f"1/{round(1 / h)}" for h in values)


class _Parser(argparse.ArgumentParser):
    """argparse that raises UsageError instead of exiting with status 2."""

    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def _common_options() -> argparse.ArgumentParser:
    parser = _Parser(add_help=False)
    parser.add_argument(
        "--config",
        type=str,
        default=None,
        help="key=value file supplying defaults for any flag",
    )
    parser.add_argument(
        "--cache-dir", "--cache",
        dest="cache_dir",
        type=str,
        default=DEFAULT_CACHE_DIR,
        help="Directory of cached deformation states (env TODAKDV_CACHE_DIR)",
    )
    parser.add_argument(
        "--workers",
        type=int,
        default=None,
        help="Worker pool size (env TODAKDV_WORKERS; default: available cores)",
    )
    parser.add_argument(
        "--format",
        choices=("tsv", "json"),
        default=DEFAULT_FORMAT,
        help="Report format",
    )
    parser.add_argument(
        "--out",
        type=str,
        default=None,
        help="Write the report to this file instead of stdout",
    )
    parser.add_argument(
        "--manifest",
        type=str,
        default=None,
        help="Run manifest path (default: <cache-dir>/manifests/<run id>.json)",
    )
    parser.add_argument(
        "--seed",
        type=int,
        default=DEFAULT_SEED,
        help="Seed for every randomized operation",
    )
    parser.add_argument(
        "--log-level",
        type=str,
        default=DEFAULT_LOG_LEVEL,
        help="Diagnostic level on stderr (env TODAKDV_LOG_LEVEL)",
    )
    return parser


def _gauge_options() -> argparse.ArgumentParser:
    parser = _Parser(add_help=False)
    parser.add_argument(
        "--slow-sign",
        type=int,
        choices=(1, -1),
        default=1,
        help="Sign of the normalized defining flow",
    )
    parser.add_argument(
        "--recursion-constant",
        type=str,
        default=None,
        help="Pin the recursion constant c instead of trying the candidates",
    )
    return parser


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    gauge = _gauge_options()
    leaf = dict(parents=[common], formatter_class=argparse.ArgumentDefaultsHelpFormatter)

    parser = _Parser(
        prog="todakdv",
        description="ε-deformation of the KdV hierarchy from the Toda lattice: construction and checks",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    groups = parser.add_subparsers(dest="command", required=True)

    gen = groups.add_parser("gen", help="Emit hierarchy generators as canonical JSON").add_subparsers(
        dest="subcommand", required=True
    )
    p = gen.add_parser("kdv", help="KdV flows K_n", **leaf)
    p.add_argument("--n", type=str, default=DEFAULT_KDV_N, help="Comma separated KdV indices")
    p = gen.add_parser("toda", help="Toda flows T_k", **leaf)
    p.add_argument("--k", type=str, default=DEFAULT_TODA_K, help="Comma separated Toda indices")

    deform = groups.add_parser("deform", help="Build and query the deformation").add_subparsers(
        dest="subcommand", required=True
    )
    deform_leaf = dict(parents=[common, gauge], formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p = deform.add_parser("run", help="Extend Q order by order", **deform_leaf)
    p.add_argument("--order", type=int, default=DEFAULT_ORDER, help="Target ε-order")
    p = deform.add_parser("residual", help="Ideal residual of Toda flows", **deform_leaf)
    p.add_argument("--k", type=str, default=DEFAULT_RESIDUAL_K, help="Flows: positive integers or 'slow'")
    p.add_argument("--n", type=int, default=DEFAULT_ORDER, help="Truncation ε^N")
    p = deform.add_parser("charnums", help="Characteristic numbers of the induced flows", **deform_leaf)
    p.add_argument("--flows", type=int, default=DEFAULT_CHARNUM_FLOWS, help="Number of flows T_1..T_k")
    p.add_argument("--n", type=int, default=DEFAULT_ORDER, help="Truncation ε^N")
    p = deform.add_parser("bounds", help="Coefficient bounds K_n", **deform_leaf)
    p.add_argument("--max-n", type=int, default=DEFAULT_MAX_N, help="Largest n")
    p.add_argument("--min-n", type=int, default=DEFAULT_MIN_N, help="Smallest n")
    p.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE, help="Allowed gap to the printed table")
    p.add_argument(
        "--reconcile",
        type=_str_to_bool,
        default=True,
        help="Compare with the printed table and audit on mismatch",
    )

    verify = groups.add_parser("verify", help="Run the identity checks").add_subparsers(
        dest="subcommand", required=True
    )
    for name, text in (
        ("all", "Every check group"),
        ("commute", "Ideal preservation and commutation of the induced flows"),
        ("lattice", "Toda generators, lattice brackets, isospectrality"),
        ("kdv", "Commutation of the KdV flows"),
        ("charnums", "Pivots and leading-term span of the induced flows"),
        ("bounds", "K_n against the printed table"),
        ("numlab", "Slow-manifold slopes and the theta closed forms"),
        ("poisson", "Jacobi, Casimir, Fourier and Hamiltonian suites at N = 5"),
    ):
        p = verify.add_parser(name, help=text, **deform_leaf)
        p.add_argument("--fast", action="store_true", help="Smaller orders and lattices")
        p.add_argument("--order", type=int, default=None, help="Deformation order for the commute, charnums, bounds and numlab groups")

    numlab = groups.add_parser("numlab", help="Numerical experiments").add_subparsers(
        dest="subcommand", required=True
    )
    p = numlab.add_parser("slow", help="Slow manifold tangency defect", **deform_leaf)
    p.add_argument("--g-spec", type=str, default=None, help="JSON trig spec of g (default cos 2πx)")
    p.add_argument("--orders", type=str, default=",".join(map(str, DEFAULT_ORDERS)), help="Truncation orders of Q")
    p.add_argument("--h", type=str, default=_fractions(DEFAULT_H_LIST), help="Lattice spacings")
    p = numlab.add_parser("iso", help="Trace invariants along Toda flows", **leaf)
    p.add_argument("--N", dest="N", type=int, default=DEFAULT_ISO_N, help="Lattice period")
    p.add_argument("--k", type=str, default=DEFAULT_ISO_K, help="Toda flows to integrate")
    p.add_argument("--t-end", type=float, default=DEFAULT_ISO_T_END, help="Integration time")
    p.add_argument("--steps", type=int, default=DEFAULT_ISO_STEPS, help="RK4 steps")
    p.add_argument("--m-max", type=int, default=DEFAULT_ISO_M_MAX, help="Largest trace power")
    p.add_argument("--tolerance", type=float, default=DEFAULT_ISO_TOLERANCE, help="Allowed drift")
    p = numlab.add_parser("theta", help="Degenerate theta closed forms", **leaf)
    p.add_argument("--samples", type=int, default=DEFAULT_THETA_SAMPLES, help="Random comparison points")
    p.add_argument("--b", type=int, default=DEFAULT_THETA_B, help="Integer b in v0 = exp(iπbh)")
    p.add_argument("--s", type=str, default=DEFAULT_THETA_S, help="Complex s")
    p.add_argument("--beta", type=str, default=DEFAULT_THETA_BETA, help="Complex β = x/s")
    p.add_argument("--h", type=str, default=",".join(map(str, DEFAULT_LIMIT_H)), help="Spacings for the h -> 0 limit")

    poisson = groups.add_parser("poisson", help="Finite-N Poisson algebras").add_subparsers(
        dest="subcommand", required=True
    )
    p = poisson.add_parser("check", help="Jacobi, Casimir, Fourier and Hamiltonian suites", **leaf)
    p.add_argument("--N", dest="N", type=int, default=DEFAULT_POISSON_N, help="Number of sites")
    p.add_argument("--bracket", type=str, default=DEFAULT_BRACKETS, help="p1, p2 or both")
    p.add_argument("--suite", type=str, default=",".join(SUITES), help="Suites to run")
    p.add_argument("--trials", type=int, default=DEFAULT_TRIALS, help="Random triples per Jacobi check")
    return parser


def _parse_args(argv: Sequence[str]) -> RunConfig:
    parsed = vars(build_parser().parse_args(argv))
    file_values = read_config_file(parsed.get("config"))
    return build_config(parsed, explicit_flags(argv, OPTION_ALIASES), file_values, os.environ)


def run(config: RunConfig) -> int:
    """Dispatch one command and return its exit code."""
    run_id = run_ids.generate_run_id()
    run_ids.set_run_id(run_id)
    recorder = ManifestRecorder(run_id, config.echo())
    exit_code = ExitCode.OK
    logger.info("Run started", command=config.name, seed=config.seed, workers=config.workers)
    try:
        handler = commands.HANDLERS[(config.command, config.subcommand)]
        with WorkerPool(config.workers, name=config.command) as pool:
            ctx = commands.RunContext(config, pool, StateCache(config.cache_dir), recorder)
            report = handler(ctx)
        path = write_report(report, config.format, config.out)
        if path is not None:
            recorder.produced(path)
        if report.failures:
            raise report.failures[0]
    except Exception as exc:
        try:
            exit_code = exit_codes.report_error(exc)
        except KeyError:
            exit_code = 1
            logger.error("Unhandled error", error=type(exc).__name__, detail=str(exc))
            raise exc
    finally:
        recorder.finish(int(exit_code))
        manifest = config.manifest or default_manifest_path(config.cache_dir, run_id)
        recorder.write(manifest)
        logger.info("Run finished", command=config.name, exit_code=int(exit_code))
        run_ids.clear_run_id()
    return int(exit_code)


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    exit_codes.register_exit_codes()
    json_logs = not sys.stderr.isatty()
    logging_config.configure_structlog(DEFAULT_LOG_LEVEL, json_logs)
    try:
        config = _parse_args(argv)
    except UsageError as exc:
        return int(exit_codes.report_error(exc))
    logging_config.configure_structlog(config.log_level, json_logs)
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
