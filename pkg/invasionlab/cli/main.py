"""InvasionLab CLI – Typer multi-command application."""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import typer
from rich.panel import Panel
from rich.table import Table
from rich.text import Text

from invasionlab.config.settings import LabSettings, load_settings
from invasionlab.core.engine import LabEngine
from invasionlab.core.errors import InvasionLabError
from invasionlab.utils.logger import (
    configure_logging,
    console,
    create_panel,
    create_progress,
    create_table,
    format_estimate,
    print_error,
    print_info,
    print_success,
    print_warning,
)

__all__ = ["app"]

app = typer.Typer(
    name="invasionlab",
    help="Invasion percolation simulation lab: traces, outlet ensembles and limit-law checks.",
    no_args_is_help=True,
    rich_markup_mode="rich",
)

_STATUS_COLOR = {"PASS": "green", "FAIL": "red", "ERROR": "yellow"}


def _load_settings(config: Path | None) -> LabSettings:
    return load_settings(config_path=config)


def _load_engine(settings: LabSettings, out: Path | None, threads: int | None) -> LabEngine:
    return LabEngine(settings=settings, output_dir=out, threads=threads)


def _banner() -> None:
    console.print(Panel(
        Text("InvasionLab", style="bold magenta", justify="center"),
        subtitle="invasion percolation on Z²",
        border_style="magenta", expand=False, padding=(0, 4),
    ))
    console.print()


def _parse_truncated(value: str) -> tuple[int, int, int]:
    """``"k=5,l=2,m=4"`` -> ``(5, 2, 4)``."""
    parts: dict[str, int] = {}
    for item in value.split(","):
        key, sep, raw = item.partition("=")
        if not sep or key.strip() not in ("k", "l", "m"):
            raise typer.BadParameter(f"expected k=..,l=..,m=.., got {value!r}")
        try:
            parts[key.strip()] = int(raw)
        except ValueError:
            raise typer.BadParameter(f"{key.strip()} must be an integer, got {raw!r}") from None
    if set(parts) != {"k", "l", "m"}:
        raise typer.BadParameter(f"all of k, l and m are required, got {value!r}")
    return parts["k"], parts["l"], parts["m"]


def _print_paths(paths: list[Path]) -> None:
    for path in paths:
        console.print(f"  [dim]wrote[/dim] {path}")


@app.command()
def simulate(
    seed: int = typer.Option(..., "--seed", "-s", min=0, help="Master seed of the weight field"),
    replica: int = typer.Option(0, "--replica", "-r", min=0, help="Replica index within the master seed"),
    stop_radius: Optional[int] = typer.Option(None, "--stop-radius", min=1, help="Stop when the invasion reaches this radius"),
    steps: Optional[int] = typer.Option(None, "--steps", min=1, help="Stop after this many invaded edges"),
    truncated: Optional[str] = typer.Option(None, "--truncated", help="Truncated run G(k,l,m), e.g. k=5,l=2,m=4"),
    config: Optional[Path] = typer.Option(None, "--config", "-c", help="Path to invasionlab.yaml"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Output directory"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging"),
) -> None:
    """Run one invasion and write its trace and outlets."""
    configure_logging(verbose)
    _banner()
    shape = _parse_truncated(truncated) if truncated else None
    if shape is None and stop_radius is None and steps is None:
        print_error("Give --stop-radius, --steps or --truncated.")
        raise typer.Exit(code=2)
    engine = _load_engine(_load_settings(config), out, None)
    try:
        with console.status("[bold cyan]Invading…"):
            result = engine.run_simulate(seed, replica, stop_radius=stop_radius, stop_steps=steps, truncated=shape)
    except InvasionLabError as exc:
        print_error(str(exc))
        raise typer.Exit(code=1)
    except ValueError as exc:
        print_error(str(exc))
        raise typer.Exit(code=2)

    dec = result.decomposition
    cfg = result.trace.config
    seed_region = f"B({cfg.seed_radius})" if cfg.seed_radius is not None else "origin"
    console.print(create_panel(
        {
            "Invaded edges": len(result.trace),
            "Seed region": seed_region,
            "Stop reason": result.trace.stop_reason.value,
            "Outlets": f"{len(dec.outlets)} (certified to scale {dec.certified_scale})",
        },
        "Invasion Summary",
    ))
    if dec.counts:
        rows = [[str(k), str(c)] for k, c in sorted(dec.counts.items())]
        console.print(create_table("Outlets per dyadic annulus", ["k", "O_k"], rows))
    _print_paths(result.paths)
    for problem in result.problems:
        print_warning(problem)
    if result.exit_code == 0:
        print_success("Trace and outlets written.")
    raise typer.Exit(code=result.exit_code)


@app.command()
def ensemble(
    seed: Optional[int] = typer.Option(None, "--seed", "-s", min=0, help="Master seed"),
    replicas: Optional[int] = typer.Option(None, "--replicas", "-n", min=1, help="Number of replicas"),
    n_max: Optional[int] = typer.Option(None, "--n-max", min=1, help="Largest recorded dyadic scale"),
    buffer: Optional[int] = typer.Option(None, "--buffer", min=4, help="Certification buffer m"),
    resume: bool = typer.Option(False, "--resume", help="Continue from the last persisted replica"),
    threads: Optional[int] = typer.Option(None, "--threads", "-t", min=1, help="Worker processes"),
    config: Optional[Path] = typer.Option(None, "--config", "-c", help="Path to invasionlab.yaml"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Output directory"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging"),
) -> None:
    """Run a replica ensemble and tabulate outlet-count moments."""
    configure_logging(verbose)
    _banner()
    settings = _load_settings(config)
    cfg = settings.ensemble
    if seed is not None:
        cfg.master_seed = seed
    if replicas is not None:
        cfg.replicas = replicas
    if n_max is not None:
        cfg.n_max = n_max
    if buffer is not None:
        cfg.buffer = buffer
    engine = _load_engine(settings, out, threads)

    try:
        with create_progress() as progress:
            task = progress.add_task("Replicas", total=cfg.replicas)
            result = engine.run_ensemble(resume=resume, on_record=lambda _rec: progress.advance(task))
    except InvasionLabError as exc:
        print_error(str(exc))
        raise typer.Exit(code=1)
    except ValueError as exc:
        print_error(str(exc))
        raise typer.Exit(code=2)

    est = result.estimators
    rows = [
        [
            str(k),
            format_estimate(est.a(k), float(est.a_se[k - 1])),
            format_estimate(est.A(k), float(est.A_se[k - 1])),
            format_estimate(float(est.b2_hat[k - 1]), float(est.b2_se[k - 1])),
        ]
        for k in range(1, est.n_max + 1)
    ]
    console.print(create_table(
        f"Outlet counts over {est.replicas} replicas", ["k", "a_hat(k)", "A_hat(k)", "b_hat(k)^2"], rows
    ))
    _print_paths(result.paths)
    for problem in result.problems:
        print_warning(problem)
    if result.exit_code == 0:
        print_success(f"Ensemble of {len(result.dataset)} replicas complete.")
    raise typer.Exit(code=result.exit_code)


@app.command()
def verify(
    dataset: Optional[Path] = typer.Option(None, "--dataset", "-d", help="Ensemble JSONL (default: <out>/ensemble.jsonl)"),
    threads: Optional[int] = typer.Option(None, "--threads", "-t", min=1, help="Worker processes"),
    config: Optional[Path] = typer.Option(None, "--config", "-c", help="Path to invasionlab.yaml"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Output directory"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging"),
) -> None:
    """Evaluate every limit-law claim on an ensemble and write the verdict report."""
    configure_logging(verbose)
    _banner()
    engine = _load_engine(_load_settings(config), out, threads)
    path = dataset or engine.dataset_path()
    if not path.is_file():
        print_error(f"No ensemble dataset at {path}; run `invasionlab ensemble` first.")
        raise typer.Exit(code=2)
    try:
        with console.status("[bold cyan]Checking claims…"):
            result = engine.run_verify(path)
    except InvasionLabError as exc:
        print_error(str(exc))
        raise typer.Exit(code=1)

    table = Table(title="Claim verdicts", show_lines=True, expand=True)
    table.add_column("Claim", style="bold")
    table.add_column("Status", justify="center")
    table.add_column("Statistic", justify="right")
    table.add_column("Threshold", justify="right")
    table.add_column("Detail")
    for v in result.report.verdicts:
        color = _STATUS_COLOR.get(v.status.value, "white")
        table.add_row(
            v.claim_id,
            f"[{color}]{v.status.value}[/{color}]",
            format_estimate(v.statistic),
            format_estimate(v.threshold),
            v.message,
        )
    console.print(table)
    _print_paths(result.paths)
    failures = len(result.report.failures)
    if failures:
        print_error(f"{failures} of {len(result.report.verdicts)} verdicts did not pass.")
    else:
        print_success(f"All {len(result.report.verdicts)} verdicts passed.")
    raise typer.Exit(code=result.exit_code)


@app.command()
def correlation(
    epsilon: Optional[float] = typer.Option(None, "--epsilon", "-e", min=0.0, max=1.0, help="Crossing defect epsilon"),
    p_grid: Optional[list[float]] = typer.Option(None, "--p", help="Probabilities for L(p, eps); repeatable"),
    n_values: Optional[list[int]] = typer.Option(None, "--n", help="Square sides for p_n; repeatable"),
    replicas: Optional[int] = typer.Option(None, "--replicas", "-n", min=1, help="Replicas per probe"),
    threads: Optional[int] = typer.Option(None, "--threads", "-t", min=1, help="Worker processes"),
    config: Optional[Path] = typer.Option(None, "--config", "-c", help="Path to invasionlab.yaml"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Output directory"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging"),
) -> None:
    """Estimate correlation lengths L(p, eps) and near-critical probabilities p_n."""
    configure_logging(verbose)
    _banner()
    settings = _load_settings(config)
    corr = settings.correlation
    if epsilon is not None:
        if not 0.0 < epsilon < 1.0:
            print_error("epsilon must lie strictly between 0 and 1.")
            raise typer.Exit(code=2)
        corr.epsilon = epsilon
    if p_grid:
        corr.p_grid = list(p_grid)
    if n_values:
        corr.n_values = list(n_values)
    if replicas is not None:
        corr.replicas_per_probe = replicas
    engine = _load_engine(settings, out, threads)
    try:
        with console.status("[bold cyan]Probing crossings…"):
            result = engine.run_correlation()
    except InvasionLabError as exc:
        print_error(str(exc))
        raise typer.Exit(code=1)

    rows = [[f"{cl.p:g}", str(cl.length), "yes" if cl.confident else "[yellow]no[/yellow]"] for cl in result.lengths]
    console.print(create_table(f"L(p, {corr.epsilon:g})", ["p", "L_hat", "confident"], rows))

    rows = [[str(e.n), f"{e.p_hat:.4f}", f"[{e.ci_lo:.4f}, {e.ci_hi:.4f}]"] for e in result.pn]
    console.print(create_table(f"p_n at epsilon={corr.epsilon:g}", ["n", "p_n_hat", "ci"], rows))
    if result.scaling is not None:
        fit = result.scaling.fit
        print_info(
            f"log(p_n - p_c) vs log n: slope {fit.slope:.3f} (95% CI {fit.ci_lo:.3f}..{fit.ci_hi:.3f}); "
            f"pairwise log ratios in [{result.scaling.min_ratio:.3f}, {result.scaling.max_ratio:.3f}]"
        )
    _print_paths(result.paths)
    if result.exit_code:
        print_warning("p_n estimates are not all in (1/2, 1) or not nonincreasing in n.")
    else:
        print_success("Correlation tables written.")
    raise typer.Exit(code=result.exit_code)


if __name__ == "__main__":
    app()
