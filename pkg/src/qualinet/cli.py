"""Command-line front end.

Machine output is canonical JSON on stdout or at -o; --pretty switches the
human renderings on.  Exit codes: 0 success, 1 domain errors (diagnostics
on stderr), 2 usage errors.
"""

from __future__ import annotations

import json
import logging
import os
import sys
from pathlib import Path

import click

from .analysis import (
    AnalysisError,
    Scenario,
    compare_scenarios,
    explain_target,
    run_scenario,
    scenario_from_obj,
    sensitivity,
)
from .compile import CompileError, compile_model
from .inference import InferenceError, UnknownNodeError
from .model import ModelError, QualityModel, export_matrix, parse_model
from .network import CompiledNetwork, NetworkFormatError, canonical_json, network_from_json

log = logging.getLogger("qualinet")

_LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}

_MODEL_PATH = click.Path(exists=True, dir_okay=False, path_type=Path)


def _configure_logging() -> None:
    level = os.environ.get("QUALINET_LOG", "warn").lower()
    logging.basicConfig(level=_LOG_LEVELS.get(level, logging.WARNING), stream=sys.stderr)
    if level not in _LOG_LEVELS:
        log.warning("unknown QUALINET_LOG level %r, using 'warn'", level)


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _load_model(path: Path) -> QualityModel:
    try:
        return parse_model(path.read_text(encoding="utf-8"))
    except ModelError as exc:
        for diag in exc.diagnostics:
            click.echo(f"{path}:{diag}", err=True)
        sys.exit(1)


def _load_network(path: Path) -> CompiledNetwork:
    try:
        return network_from_json(path.read_text(encoding="utf-8"))
    except NetworkFormatError as exc:
        _fail(f"{path}: {exc}")


def _load_scenario(path: Path) -> Scenario:
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
        return scenario_from_obj(obj)
    except (json.JSONDecodeError, AnalysisError) as exc:
        _fail(f"{path}: {exc}")


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        click.echo(text, nl=not text.endswith("\n"))
    else:
        out.write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")


def _emit_json(obj, out: Path | None) -> None:
    _emit(canonical_json(obj) + "\n", out)


_seed_option = click.option(
    "--seed", type=int, default=None, hidden=False,
    help="Reserved; exact inference ignores it.",
)


@click.group()
def main() -> None:
    """Quality-model networks: validate, compile, infer, explore."""
    _configure_logging()


@main.command()
@click.argument("model_path", metavar="MODEL", type=_MODEL_PATH)
@click.option("--pretty", is_flag=True, help="Human summary instead of JSON.")
def validate(model_path: Path, pretty: bool) -> None:
    """Parse and validate a model, reporting element counts."""
    model = _load_model(model_path)
    summary = (
        f"{len(model.activities)} activities, {len(model.facts)} facts, "
        f"{len(model.impacts)} impacts, {len(model.indicators)} indicators"
    )
    if pretty:
        click.echo(summary)
        return
    _emit_json(
        {
            "name": model.name,
            "summary": summary,
            "entities": len(model.entities),
            "activities": len(model.activities),
            "facts": len(model.facts),
            "impacts": len(model.impacts),
            "indicators": len(model.indicators),
            "goals": len(model.goals),
        },
        None,
    )


@main.command()
@click.argument("model_path", metavar="MODEL", type=_MODEL_PATH)
@click.option("-o", "out", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--pretty", is_flag=True, help="Aligned text grid instead of JSON.")
def matrix(model_path: Path, out: Path | None, pretty: bool) -> None:
    """Impact matrix: facts as rows, activities as columns."""
    model = _load_model(model_path)
    view = export_matrix(model)
    if pretty:
        _emit(view.to_text() + "\n", out)
    else:
        _emit_json(view.to_json_obj(), out)


@main.command()
@click.argument("model_path", metavar="MODEL", type=_MODEL_PATH)
@click.option("--goal", default=None, help="Goal name or target activity (case-insensitive).")
@click.option("-o", "out", type=click.Path(dir_okay=False, path_type=Path), default=None)
def compile(model_path: Path, goal: str | None, out: Path | None) -> None:
    """Compile a model and goal into a network JSON file."""
    model = _load_model(model_path)
    try:
        net = compile_model(model, goal)
    except CompileError as exc:
        _fail(str(exc))
    _emit(net.to_json() + "\n", out)


@main.command()
@click.argument("net_path", metavar="NETWORK", type=_MODEL_PATH)
@click.option("--evidence", "evidence_path", type=_MODEL_PATH, default=None,
              help="Scenario file supplying the observations.")
@click.option("-o", "out", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--pretty", is_flag=True)
@_seed_option
def infer(net_path: Path, evidence_path: Path | None, out: Path | None,
          pretty: bool, seed: int | None) -> None:
    """Posterior marginals and moments, optionally under evidence."""
    net = _load_network(net_path)
    scenario = _load_scenario(evidence_path) if evidence_path else Scenario(None, {})
    try:
        report = run_scenario(net, scenario)
    except (AnalysisError, InferenceError, UnknownNodeError) as exc:
        _fail(str(exc))
    for warning in report.warnings:
        log.warning("%s", warning)
    if pretty:
        _emit(report.to_text(net) + "\n", out)
    else:
        _emit_json(report.to_json_obj(), out)


@main.command()
@click.argument("net_path", metavar="NETWORK", type=_MODEL_PATH)
@click.argument("scenario_path", metavar="SCENARIO", type=_MODEL_PATH)
@click.option("-o", "out", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--figures", "figures_dir", type=click.Path(file_okay=False, path_type=Path),
              default=None, help="Directory for chart renderings.")
@click.option("--pretty", is_flag=True)
@_seed_option
def scenario(net_path: Path, scenario_path: Path, out: Path | None,
             figures_dir: Path | None, pretty: bool, seed: int | None) -> None:
    """Run a scenario file against a compiled network."""
    net = _load_network(net_path)
    spec = _load_scenario(scenario_path)
    try:
        report = run_scenario(net, spec)
    except (AnalysisError, InferenceError, UnknownNodeError) as exc:
        _fail(str(exc))
    for warning in report.warnings:
        log.warning("%s", warning)
    if figures_dir is not None:
        from .figures import scenario_figure

        figures_dir.mkdir(parents=True, exist_ok=True)
        name = report.scenario or "scenario"
        scenario_figure(net, report, figures_dir / f"scenario_{name}.png")
    if pretty:
        _emit(report.to_text(net) + "\n", out)
    else:
        _emit_json(report.to_json_obj(), out)


@main.command()
@click.argument("net_path", metavar="NETWORK", type=_MODEL_PATH)
@click.argument("scenario_paths", metavar="SCENARIOS...", type=_MODEL_PATH, nargs=-1)
@click.option("-o", "out", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--figures", "figures_dir", type=click.Path(file_okay=False, path_type=Path), default=None)
@click.option("--pretty", is_flag=True)
@_seed_option
def compare(net_path: Path, scenario_paths: tuple[Path, ...], out: Path | None,
            csv_path: Path | None, figures_dir: Path | None, pretty: bool,
            seed: int | None) -> None:
    """Compare two or more scenario files side by side."""
    if len(scenario_paths) < 2:
        raise click.UsageError("compare needs at least 2 scenario files")
    net = _load_network(net_path)
    scenarios = [_load_scenario(p) for p in scenario_paths]
    try:
        report = compare_scenarios(net, scenarios)
    except (AnalysisError, InferenceError, UnknownNodeError) as exc:
        _fail(str(exc))
    if csv_path is not None:
        csv_path.write_text(report.to_csv(net), encoding="utf-8")
    if figures_dir is not None:
        from .figures import compare_figure

        figures_dir.mkdir(parents=True, exist_ok=True)
        compare_figure(net, report, figures_dir / "compare.png")
    if pretty:
        _emit(report.to_text(net) + "\n", out)
    else:
        _emit_json(report.to_json_obj(), out)


@main.command("sensitivity")
@click.argument("net_path", metavar="NETWORK", type=_MODEL_PATH)
@click.option("--target", required=True, help="Node whose statistic is swept.")
@click.option("--state", "target_state", default=None,
              help="Designated target state for a probability swing.")
@click.option("--candidate", "candidates", multiple=True,
              help="Candidate node id (repeatable); defaults to the fact indicators.")
@click.option("--evidence", "evidence_path", type=_MODEL_PATH, default=None)
@click.option("-o", "out", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--figures", "figures_dir", type=click.Path(file_okay=False, path_type=Path), default=None)
@click.option("--pretty", is_flag=True)
@_seed_option
def sensitivity_cmd(net_path: Path, target: str, target_state: str | None,
                    candidates: tuple[str, ...], evidence_path: Path | None,
                    out: Path | None, csv_path: Path | None,
                    figures_dir: Path | None, pretty: bool, seed: int | None) -> None:
    """Rank candidate observations by their swing on a target statistic."""
    net = _load_network(net_path)
    evidence = _load_scenario(evidence_path).evidence if evidence_path else {}
    try:
        report = sensitivity(
            net,
            target,
            candidates=list(candidates) or None,
            evidence=evidence,
            target_state=target_state,
        )
    except (AnalysisError, InferenceError, UnknownNodeError) as exc:
        _fail(str(exc))
    if csv_path is not None:
        csv_path.write_text(report.to_csv(), encoding="utf-8")
    if figures_dir is not None:
        from .figures import tornado_figure

        figures_dir.mkdir(parents=True, exist_ok=True)
        tornado_figure(report, figures_dir / "tornado.png")
    if pretty:
        _emit(report.to_text() + "\n", out)
    else:
        _emit_json(report.to_json_obj(), out)


@main.command()
@click.argument("net_path", metavar="NETWORK", type=_MODEL_PATH)
@click.option("--target", required=True, help="Indicator or activity node to pin.")
@click.option("--state", required=True,
              help="Desired state label, or a raw value for indicator targets.")
@click.option("--evidence", "evidence_path", type=_MODEL_PATH, default=None)
@click.option("-o", "out", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--pretty", is_flag=True)
@_seed_option
def explain(net_path: Path, target: str, state: str, evidence_path: Path | None,
            out: Path | None, pretty: bool, seed: int | None) -> None:
    """Most probable fact-indicator values that reach a target state."""
    net = _load_network(net_path)
    extra = _load_scenario(evidence_path).evidence if evidence_path else {}
    desired: float | str
    try:
        desired = float(state)
    except ValueError:
        desired = state
    try:
        report = explain_target(net, target, desired, extra)
    except (AnalysisError, InferenceError, UnknownNodeError) as exc:
        _fail(str(exc))
    if pretty:
        _emit(report.to_text() + "\n", out)
    else:
        _emit_json(report.to_json_obj(), out)


@main.command()
@click.argument("net_path", metavar="NETWORK", type=_MODEL_PATH)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--ui", "ui_dir", type=click.Path(file_okay=False, exists=True, path_type=Path),
              default=None, help="Directory with built UI assets to serve at /.")
def serve(net_path: Path, port: int, host: str, ui_dir: Path | None) -> None:
    """Serve the network and inference endpoints over HTTP."""
    import uvicorn

    from .server import create_app

    net = _load_network(net_path)
    app = create_app(net, ui_dir=ui_dir)
    level = os.environ.get("QUALINET_LOG", "warn").lower()
    uvicorn_level = {"error": "error", "info": "info", "debug": "debug"}.get(level, "warning")
    uvicorn.run(app, host=host, port=port, log_level=uvicorn_level)


if __name__ == "__main__":
    main()
