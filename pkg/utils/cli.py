"""The `relic` command line: compose, verify, order, sat, range and serve."""
import json
import logging
import sys
from dataclasses import replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import click

from models import system_order_bound
from utils import rangeprop
from utils.errors import RelicError, SpecError
from utils.induction import InductionConfig, compose_system, is_static, verify_all
from utils.report import Report
from utils.settings import Settings, load_settings
from utils.smt_bridge import check_sat, parse_smtlib
from utils.spec_parser import build_model, composed_spec, parse_spec
from utils.verdict import exit_code

logger = logging.getLogger(__name__)

EXIT_ERROR = 3


def induction_config(settings: Settings, k_max: Optional[int] = None) -> InductionConfig:
    return InductionConfig(k_max=k_max or settings.k_max, parallel=settings.parallel,
                           cap=settings.cooper_cap, rounds=settings.concretize_rounds,
                           progress=settings.progress)


# ---------------------------------------------------------------------------
# Commands as plain functions, shared with the HTTP routes


def compose_report(text: str, subject: str, settings: Settings) -> Report:
    report = Report("compose", subject)
    with report.phase("parse"):
        model, postulates = build_model(parse_spec(text))
    with report.phase("compose"):
        report.composition = compose_system(model, induction_config(settings), is_static(model, postulates))
    return report


def verify_report(text: str, subject: str, settings: Settings, k_max: Optional[int] = None) -> Report:
    report = Report("verify", subject)
    with report.phase("parse"):
        model, postulates = build_model(parse_spec(text))
    if not postulates:
        raise SpecError(f"System {model.name} has no postulate to verify")
    with report.phase("verify"):
        verdicts, result = verify_all(model, postulates, induction_config(settings, k_max))
    report.composition = result
    report.postulates = [p.name or p.source for p in postulates]
    report.verdicts = verdicts
    report.exit_code = exit_code(verdicts)
    return report


def order_report(text: str, subject: str, settings: Settings) -> Report:
    report = Report("order", subject)
    with report.phase("parse"):
        model, postulates = build_model(parse_spec(text))
    with report.phase("compose"):
        result = compose_system(model, induction_config(settings), is_static(model, postulates))
    report.composition = result
    report.order = {"order_bound": system_order_bound(model), "pruned_order": result.pruned_order}
    return report


def sat_report(text: str, subject: str, settings: Settings, logic: str = "auto") -> Report:
    report = Report("sat", subject)
    with report.phase("parse"):
        problem = parse_smtlib(text)
    with report.phase("solve"):
        report.sat = check_sat(problem, settings.cooper_cap, settings.concretize_rounds, logic,
                               settings.refine_cap, settings.mixed_enum_cap)
    if not problem.wants_model and report.sat.model:
        report.sat = replace(report.sat, model=None)
    report.exit_code = report.sat.exit_code
    return report


def range_report(doc: Dict[str, Any], subject: str, settings: Settings, output: str,
                 baseline: bool = False, plot: Optional[str] = None) -> Report:
    report = Report("range", subject)
    with report.phase("parse"):
        graph = rangeprop.load_relu_net(doc) if "layers" in doc else rangeprop.graph_from_dict(doc)
    if output not in {b.name for b in graph.blocks}:
        raise SpecError(f"Graph {graph.name} has no block named {output}")
    with report.phase("range"):
        report.range_formula = rangeprop.output_range(graph, output, settings.cooper_cap)
        report.range_interval = rangeprop.range_interval(report.range_formula,
                                                         rangeprop.pin_var(graph.block(output)))
    if baseline:
        with report.phase("baseline"):
            report.baseline = rangeprop.naive_interval_range(graph, output)
    if plot:
        with report.phase("plot"):
            report.plot = rangeprop.plot_ranges(graph, output, plot, report.range_interval, report.baseline)
    return report


# ---------------------------------------------------------------------------
# click surface


def _emit(report: Report, fmt: str) -> None:
    click.echo(report.to_json() if fmt == "structured" else report.to_text())


def _read(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return f.read()
    except OSError as e:
        raise RelicError(f"Failed to read {path}: {str(e)}")


@click.group()
@click.option('--format', 'fmt', type=click.Choice(['text', 'structured']), default='text',
              help='Report format')
@click.option('--log-level', type=click.Choice(['DEBUG', 'INFO', 'WARNING', 'ERROR'], case_sensitive=False),
              default=None, help='Overrides RELIC_LOG_LEVEL')
@click.option('--progress/--no-progress', default=None, help='Show progress bars')
@click.pass_context
def relic(ctx: click.Context, fmt: str, log_level: Optional[str], progress: Optional[bool]):
    """Compositional verification of component contracts by quantifier elimination."""
    settings = load_settings().override(log_level=log_level.upper() if log_level else None, progress=progress)
    logging.getLogger().setLevel(settings.log_level)
    ctx.obj = {"settings": settings, "format": fmt}


@relic.command()
@click.argument('spec', type=click.Path(dir_okay=False))
@click.option('--emit', type=click.Path(dir_okay=False), default=None,
              help='Write the composed system as a specification fragment')
@click.pass_obj
def compose(obj: Dict[str, Any], spec: str, emit: Optional[str]):
    """Print the strongest system-property and initial condition."""
    text = _read(spec)
    report = compose_report(text, spec, obj["settings"])
    if emit:
        model, _ = build_model(parse_spec(text))
        c = report.composition
        with open(emit, "w", encoding="utf-8") as f:
            f.write(composed_spec(model, c.ssp, c.init))
        logger.info(f"Wrote composed specification to {emit}")
    _emit(report, obj["format"])
    return report


@relic.command()
@click.argument('spec', type=click.Path(dir_okay=False))
@click.option('--k-max', type=click.IntRange(min=1), default=None, help='Largest induction depth')
@click.pass_obj
def verify(obj: Dict[str, Any], spec: str, k_max: Optional[int]):
    """Verify every postulate of a system."""
    report = verify_report(_read(spec), spec, obj["settings"], k_max)
    _emit(report, obj["format"])
    return report


@relic.command()
@click.argument('spec', type=click.Path(dir_okay=False))
@click.pass_obj
def order(obj: Dict[str, Any], spec: str):
    """Print the order bound and the order after pruning."""
    report = order_report(_read(spec), spec, obj["settings"])
    _emit(report, obj["format"])
    return report


@relic.command()
@click.argument('script', type=click.File('r'), default='-')
@click.option('--logic', type=click.Choice(['auto', 'real', 'int', 'mixed']), default='auto')
@click.pass_obj
def sat(obj: Dict[str, Any], script, logic: str):
    """Decide an SMT-LIB 2 script over linear arithmetic."""
    report = sat_report(script.read(), script.name, obj["settings"], logic)
    _emit(report, obj["format"])
    return report


@relic.command('range')
@click.argument('graph', type=click.Path(dir_okay=False))
@click.option('--output', 'output', required=True, help='Output block to bound')
@click.option('--baseline', is_flag=True, help='Also run naive interval propagation')
@click.option('--plot', type=click.Path(dir_okay=False), default=None, help='Save a range plot')
@click.pass_obj
def range_(obj: Dict[str, Any], graph: str, output: str, baseline: bool, plot: Optional[str]):
    """Exact range of a dataflow graph output."""
    try:
        doc = json.loads(_read(graph))
    except json.JSONDecodeError as e:
        raise RelicError(f"Failed to parse graph {graph}: {str(e)}")
    report = range_report(doc, graph, obj["settings"], output, baseline, plot)
    _emit(report, obj["format"])
    return report


@relic.command()
@click.option('--host', default=None)
@click.option('--port', type=int, default=None)
@click.pass_obj
def serve(obj: Dict[str, Any], host: Optional[str], port: Optional[int]):
    """Serve the JSON API."""
    from app import app
    settings = obj["settings"].override(host=host, port=port)
    app.run(host=settings.host, port=settings.port, debug=False, use_reloader=False)
    return Report("serve")


# ---------------------------------------------------------------------------
# Entry


def _requested_format(argv: Sequence[str]) -> str:
    args = list(argv)
    for i, a in enumerate(args):
        if a == "--format" and i + 1 < len(args):
            return args[i + 1]
        if a.startswith("--format="):
            return a.split("=", 1)[1]
    return "text"


def _command(argv: Sequence[str]) -> str:
    return next((a for a in argv if a in relic.commands), "")


def dispatch(argv: Sequence[str]) -> Tuple[int, Report]:
    """Run one command line; returns the exit code and the report"""
    argv: List[str] = list(argv)
    try:
        result = relic.main(args=argv, prog_name="relic", standalone_mode=False)
    except click.ClickException as e:
        return _failed(argv, e.format_message())
    except click.Abort:
        return _failed(argv, "aborted")
    except (RelicError, ValueError, OSError) as e:
        return _failed(argv, str(e))
    if not isinstance(result, Report):
        # --help and friends
        return int(result or 0), Report(_command(argv) or "help")
    return result.exit_code, result


def _failed(argv: List[str], message: str) -> Tuple[int, Report]:
    logger.error(f"relic failed: {message}")
    report = Report(_command(argv), errors=[message], exit_code=EXIT_ERROR)
    click.echo(f"error: {message}", err=True)
    if _requested_format(argv) == "structured":
        click.echo(report.to_json())
    return EXIT_ERROR, report


def main(argv: Optional[Sequence[str]] = None) -> None:
    code, _ = dispatch(sys.argv[1:] if argv is None else argv)
    sys.exit(code)
