#!/usr/bin/env python3
"""
Command-line harness for randomized sparsification experiments.

Every run is described by a ``RunConfig``; the harness checks its
preconditions, routes it to a command group, writes the artifact (JSON
envelope or CSV) and exits 0 iff the property under test held.
"""

import asyncio
import json
import time
import traceback
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import click
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from commands import ConstructCommands, SampleCommands, SweepCommands, VerifyCommands
from config import Config, RunConfig
from core import __version__
from core.linalg import configure_linalg
from core.serialization import dumps, envelope, write_csv, write_json
from utils.logger import get_logger, setup_logger
from utils.metrics import MetricsCollector
from utils.validation import PreconditionError, PreconditionGuard

logger = get_logger(__name__)

EXIT_HELD = 0
EXIT_FAILED = 1
EXIT_INVALID = 2

_console = Console(stderr=True)


@dataclass
class HarnessState:
    """Harness state management."""
    metrics: MetricsCollector = field(default_factory=MetricsCollector)
    guard: PreconditionGuard = field(default_factory=PreconditionGuard)

    construct_commands: Optional[ConstructCommands] = None
    sample_commands: Optional[SampleCommands] = None
    verify_commands: Optional[VerifyCommands] = None
    sweep_commands: Optional[SweepCommands] = None


@dataclass
class RunOutcome:
    exit_code: int
    response: Dict[str, Any]
    artifact: Optional[str] = None


class Harness:
    """Routes commands to their groups and turns results into artifacts."""

    def __init__(self, config: Config):
        self.config = config
        self.state = HarnessState()
        configure_linalg(**config.linalg_settings())
        self._initialize_commands()

    def _initialize_commands(self):
        """Initialize all command groups."""
        try:
            self.state.construct_commands = ConstructCommands(self.config)
            self.state.sample_commands = SampleCommands(self.config)
            self.state.verify_commands = VerifyCommands(self.config)
            self.state.sweep_commands = SweepCommands(self.config)
            logger.debug("All command groups initialized")
        except Exception as e:
            logger.error(f"Error initializing command groups: {e}")
            raise

    def get_commands(self) -> List[Dict[str, Any]]:
        """Get all available commands."""
        commands: List[Dict[str, Any]] = []
        commands.extend(self.state.construct_commands.get_commands())
        commands.extend(self.state.sample_commands.get_commands())
        commands.extend(self.state.verify_commands.get_commands())
        commands.extend(self.state.sweep_commands.get_commands())
        return commands

    async def handle_command(self, command: str, arguments: Dict[str, Any]) -> Dict[str, Any]:
        """Check, route and time one command; failures come back as result dicts."""
        start_time = time.time()
        self.state.metrics.record_request("command", command)
        try:
            self.state.guard.check(command, arguments)
            result = await self._route_command(command, arguments)
            self.state.metrics.record_success("command", command, time.time() - start_time)
            self.state.metrics.increment("properties_held" if result.get("holds") else "properties_failed")
            return result
        except PreconditionError as e:
            self.state.metrics.record_error("command", command, str(e), time.time() - start_time)
            logger.debug(f"precondition failed for '{command}': {e}")
            return {"success": False, "error": str(e), "error_type": "precondition"}
        except Exception as e:
            self.state.metrics.record_error("command", command, str(e), time.time() - start_time)
            logger.error(f"Error in command '{command}': {e}")
            logger.debug(traceback.format_exc())
            return {"success": False, "error": str(e), "error_type": type(e).__name__}

    async def _route_command(self, command: str, arguments: Dict[str, Any]) -> Dict[str, Any]:
        """Route command to the appropriate group."""
        if command.startswith("construct_"):
            return await self.state.construct_commands.handle_command(command, arguments)
        elif command.startswith("sample_"):
            return await self.state.sample_commands.handle_command(command, arguments)
        elif command.startswith("verify_"):
            return await self.state.verify_commands.handle_command(command, arguments)
        elif command.startswith("sweep_"):
            return await self.state.sweep_commands.handle_command(command, arguments)
        else:
            raise ValueError(f"Unknown command: {command}")

    async def execute(self, run_config: RunConfig) -> RunOutcome:
        """Run one configured command and render its artifact."""
        arguments = run_config.model_dump(exclude={"command", "output", "format"})
        response = await self.handle_command(run_config.command, arguments)
        if not response.get("success"):
            return RunOutcome(EXIT_INVALID, response)

        if run_config.format == "csv":
            if "csv" not in response:
                error = f"'{run_config.command}' has no CSV form; use --format json"
                return RunOutcome(EXIT_INVALID, {"success": False, "error": error, "error_type": "precondition"})
            artifact = self._write_csv(run_config, response["csv"])
        else:
            embedded = run_config.embedded(self.config.result_settings())
            document = envelope(response["kind"], response["result"], embedded, __version__)
            artifact = write_json(document, run_config.output)
        exit_code = EXIT_HELD if response.get("holds") else EXIT_FAILED
        return RunOutcome(exit_code, response, artifact)

    def _write_csv(self, run_config: RunConfig, table: Dict[str, Any]) -> str:
        embedded = run_config.embedded(self.config.result_settings())
        preamble = (f"# version={__version__}\n"
                    f"# run_config={json.dumps(embedded, sort_keys=True, separators=(',', ':'))}\n")
        body = write_csv(table["header"], table["rows"])
        text = preamble + body
        if run_config.output is not None:
            with open(run_config.output, "w", encoding="utf-8", newline="") as f:
                f.write(text)
        return text


def render_summary(command: str, response: Dict[str, Any], exit_code: int):
    """Human-readable table on stderr; stdout stays reserved for artifacts."""
    table = Table(title=command.replace("_", " "))
    table.add_column("quantity")
    table.add_column("value", justify="right")
    for key, value in response.get("summary", {}).items():
        table.add_row(str(key), f"{value:.6g}" if isinstance(value, float) else str(value))
    _console.print(table)
    status = "[green]property held[/green]" if exit_code == EXIT_HELD else "[red]property FAILED[/red]"
    _console.print(status)


def run(run_config: RunConfig, config: Optional[Config] = None, metrics_out: Optional[str] = None,
        quiet: bool = False) -> int:
    """Execute ``run_config`` and return the exit status (0 iff the property held)."""
    harness = Harness(config or Config())
    outcome = asyncio.run(harness.execute(run_config))
    if metrics_out:
        harness.state.metrics.save_metrics(metrics_out)

    if outcome.exit_code == EXIT_INVALID:
        click.echo(f"error: {outcome.response['error']}", err=True)
        return outcome.exit_code
    if run_config.output is None and outcome.artifact is not None:
        click.echo(outcome.artifact, nl=False)
    if not quiet:
        render_summary(run_config.command, outcome.response, outcome.exit_code)
    return outcome.exit_code


# ---------------------------------------------------------------------------
# click surface
# ---------------------------------------------------------------------------

def _int_list(ctx, param, value):
    if value is None:
        return None
    try:
        return [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter("expected a comma-separated list of integers")


def _validation_message(error: ValidationError) -> str:
    first = error.errors()[0]
    location = ".".join(str(part) for part in first.get("loc", ())) or "config"
    return f"--{location.replace('_', '-')}: {first.get('msg')}"


def _dispatch(ctx: click.Context, command: str, **params: Any):
    options = ctx.obj or {}
    values = {k: v for k, v in params.items() if v is not None}
    try:
        run_config = RunConfig(command=command, **values)
    except ValidationError as e:
        click.echo(f"error: {_validation_message(e)}", err=True)
        ctx.exit(EXIT_INVALID)
    code = run(run_config, options.get("config"), options.get("metrics_out"), options.get("quiet", False))
    ctx.exit(code)


def output_options(f):
    f = click.option("--format", "format", type=click.Choice(["json", "csv"]), default="json",
                     help="Artifact format")(f)
    f = click.option("--out", "output", type=click.Path(dir_okay=False), default=None,
                     help="Artifact path (stdout when omitted)")(f)
    f = click.option("--seed", type=int, default=0, show_default=True, help="Master seed")(f)
    return f


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON or YAML harness configuration")
@click.option("--log-level", default=None, help="Logging level (overrides the config file)")
@click.option("--metrics-out", type=click.Path(dir_okay=False), default=None,
              help="Write request metrics and timings to this file")
@click.option("--quiet", is_flag=True, help="Do not print the summary table")
@click.version_option(__version__)
@click.pass_context
def main(ctx: click.Context, config_path: Optional[str], log_level: Optional[str], metrics_out: Optional[str],
         quiet: bool):
    """Randomized sparsification of matrix decompositions."""
    try:
        config = Config.load_from_file(config_path) if config_path else Config()
    except (ValueError, OSError) as e:
        click.echo(f"error: invalid config file: {e}", err=True)
        ctx.exit(EXIT_INVALID)
    level = log_level or config.logging.level
    setup_logger(None, level, config.logging.file, config.logging.max_size_mb, config.logging.backup_count)
    ctx.obj = {"config": config, "metrics_out": metrics_out or config.metrics.metrics_file, "quiet": quiet}


@main.group()
def construct():
    """Emit explicit constructions."""


@construct.command("log-needed")
@click.option("--dim", type=int, required=True)
@click.option("--gamma", type=float, required=True)
@click.option("--eps", type=float, required=True)
@click.option("--padding", type=click.Choice(["zero", "identity"]), default="zero", show_default=True)
@output_options
@click.pass_context
def construct_log_needed(ctx, **params):
    """Diagonal PSD family with a logarithmic sample-size lower bound."""
    _dispatch(ctx, "construct_log_needed", **params)


@construct.command("cube-simplex")
@click.option("--dim", type=int, required=True)
@click.option("--delta", type=float, required=True)
@output_options
@click.pass_context
def construct_cube_simplex(ctx, **params):
    """Regular simplices around the facet centres of the cube."""
    _dispatch(ctx, "construct_cube_simplex", **params)


@construct.command("symm-counterexample")
@click.option("--dim", type=int, required=True)
@click.option("--delta", type=float, default=0.1, show_default=True)
@output_options
@click.pass_context
def construct_symm_counterexample(ctx, **params):
    """Family whose PSD symmetrisation has b > 1."""
    _dispatch(ctx, "construct_symm_counterexample", **params)


@main.group()
def sample():
    """Randomized sparsification experiments."""


@sample.command("rudelson")
@click.option("--dim", type=int)
@click.option("--k", type=int)
@click.option("--eps", type=float)
@click.option("--c", type=float, help="Constant of the sample-size rule when --k is omitted")
@click.option("--gamma", type=float, help="Norm scale for the log-needed family")
@click.option("--delta", type=float)
@click.option("--replicates", type=int)
@click.option("--max-attempts", type=int)
@click.option("--family", type=click.Choice(["cross-polytope", "log-needed", "symm-counterexample"]),
              default="cross-polytope", show_default=True)
@click.option("--in", "input", type=click.Path(exists=True, dir_okay=False))
@output_options
@click.pass_context
def sample_rudelson(ctx, **params):
    """Monte Carlo error of k-sample averages."""
    _dispatch(ctx, "sample_rudelson", **params)


@sample.command("nonsymm")
@click.option("--dim", type=int, required=True)
@click.option("--eps", type=float, required=True)
@click.option("--c", type=float)
@click.option("--k", type=int)
@click.option("--delta", type=float)
@click.option("--max-attempts", type=int)
@click.option("--family", type=click.Choice(["ball-in-cube", "near-ball", "symm-counterexample"]),
              default="ball-in-cube", show_default=True)
@output_options
@click.pass_context
def sample_nonsymm(ctx, **params):
    """Sample lifted contact pairs until the diad and balance bounds hold."""
    _dispatch(ctx, "sample_nonsymm", **params)


@sample.command("lust-piquard")
@click.option("--dim", type=int, required=True)
@click.option("--k", type=int, help="Number of random diads (default d)")
@click.option("--p", type=float, help="Schatten exponent (default max(2, ln d))")
@click.option("--trials", type=int)
@output_options
@click.pass_context
def sample_lust_piquard(ctx, **params):
    """Empirical constant of the Rademacher Schatten-norm inequality."""
    _dispatch(ctx, "sample_lust_piquard", **params)


@sample.command("symmetrization")
@click.option("--dim", type=int)
@click.option("--k", type=int, required=True)
@click.option("--gamma", type=float)
@click.option("--eps", type=float)
@click.option("--delta", type=float)
@click.option("--replicates", type=int)
@click.option("--family", type=click.Choice(["cross-polytope", "log-needed", "symm-counterexample"]),
              default="cross-polytope", show_default=True)
@click.option("--in", "input", type=click.Path(exists=True, dir_okay=False))
@output_options
@click.pass_context
def sample_symmetrization(ctx, **params):
    """Both sides of the Rademacher symmetrization bound."""
    _dispatch(ctx, "sample_symmetrization", **params)


@main.group()
def verify():
    """Certify lower bounds on small instances."""


@verify.command("log-needed")
@click.option("--in", "input", type=click.Path(exists=True, dir_okay=False))
@click.option("--dim", type=int)
@click.option("--gamma", type=float)
@click.option("--eps", type=float)
@click.option("--padding", type=click.Choice(["zero", "identity"]))
@click.option("--mode", type=click.Choice(["auto", "exhaustive", "random"]), default="auto", show_default=True)
@click.option("--samples", type=int)
@output_options
@click.pass_context
def verify_log_needed(ctx, **params):
    """Minimum sample error over every multiset below the size bound."""
    _dispatch(ctx, "verify_log_needed", **params)


@verify.command("bm")
@click.option("--dim", type=int, required=True)
@click.option("--delta", type=float, required=True)
@click.option("--eps", type=float, required=True)
@click.option("--supports", type=int)
@click.option("--support-size", type=int)
@click.option("--iterations", type=int)
@output_options
@click.pass_context
def verify_bm(ctx, **params):
    """Support-size lower bound for cube-simplex contact pairs."""
    _dispatch(ctx, "verify_bm", **params)


@verify.command("lemma41")
@click.option("--t", type=int, required=True)
@click.option("--k", type=int, required=True)
@output_options
@click.pass_context
def verify_lemma41(ctx, **params):
    """Exact l_1 gap over every multiset of size at most 3k."""
    _dispatch(ctx, "verify_lemma41", **params)


@main.group()
def sweep():
    """Parameter grids."""


@sweep.command("rudelson")
@click.option("--dims", callback=_int_list, required=True, help="Comma-separated dimensions")
@click.option("--ks", callback=_int_list, required=True, help="Comma-separated sample sizes")
@click.option("--replicates", type=int)
@output_options
@click.pass_context
def sweep_rudelson(ctx, **params):
    """Mean error of cross-polytope averages over a (d, k) grid."""
    _dispatch(ctx, "sweep_rudelson", **params)


@main.command("calibrate")
@click.option("--dims", callback=_int_list, required=True, help="Comma-separated dimensions")
@click.option("--eps", type=float, required=True)
@click.option("--quantile", type=float, default=0.5, show_default=True)
@click.option("--replicates", type=int)
@output_options
@click.pass_context
def calibrate(ctx, **params):
    """Estimate the constant of the sample-size rule by doubling search."""
    _dispatch(ctx, "sweep_calibrate", **params)


@main.command("commands")
@click.pass_context
def list_commands(ctx):
    """Describe every harness command as JSON."""
    click.echo(dumps({"commands": Harness(ctx.obj["config"]).get_commands()}), nl=False)


if __name__ == "__main__":
    main()
