"""Rich-based structured logging and terminal output for InvasionLab."""

from __future__ import annotations

import logging

from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.progress import BarColumn, MofNCompleteColumn, Progress, TextColumn, TimeRemainingColumn
from rich.table import Table
from rich.theme import Theme

__all__ = [
    "console",
    "configure_logging",
    "print_success",
    "print_warning",
    "print_error",
    "print_info",
    "create_table",
    "create_panel",
    "create_progress",
    "format_estimate",
]

_THEME = Theme(
    {
        "success": "bold green",
        "warning": "bold yellow",
        "error": "bold red",
        "info": "bold cyan",
        "muted": "dim",
        "accent": "bold magenta",
    }
)

console = Console(theme=_THEME)


def configure_logging(verbose: bool = False) -> None:
    """Route the ``invasionlab`` loggers through a Rich handler."""
    logger = logging.getLogger("invasionlab")
    logger.setLevel(logging.DEBUG if verbose else logging.INFO)
    if not any(isinstance(h, RichHandler) for h in logger.handlers):
        handler = RichHandler(console=console, show_path=False, rich_tracebacks=True)
        handler.setFormatter(logging.Formatter("%(message)s"))
        logger.addHandler(handler)
    logger.propagate = False


def print_success(message: str) -> None:
    """Print a success message with a checkmark."""
    console.print(f"[success]✔[/success] {message}")


def print_warning(message: str) -> None:
    """Print a warning message with a caution sign."""
    console.print(f"[warning]⚠[/warning] {message}")


def print_error(message: str) -> None:
    """Print an error message with a cross."""
    console.print(f"[error]✖[/error] {message}")


def print_info(message: str) -> None:
    """Print an informational message."""
    console.print(f"[info]ℹ[/info] {message}")


def create_table(
    title: str,
    columns: list[str],
    rows: list[list[str]],
    *,
    left: int = 0,
    show_lines: bool = False,
) -> Table:
    """Table whose first *left* columns are left-aligned and the rest right-aligned numbers."""
    table = Table(title=title, show_lines=show_lines, expand=True, header_style="accent")
    for i, header in enumerate(columns):
        table.add_column(header, justify="left" if i < left else "right")
    for row in rows:
        table.add_row(*row)
    return table


def create_panel(fields: dict[str, object], title: str, style: str = "cyan") -> Panel:
    """Key/value summary panel."""
    width = max((len(k) for k in fields), default=0) + 1
    body = "\n".join(f"[bold]{f'{key}:':<{width}}[/bold] {value}" for key, value in fields.items())
    return Panel(body, title=title, border_style=style, expand=False, padding=(0, 2))


def create_progress() -> Progress:
    """Progress bar used for replica loops."""
    return Progress(
        TextColumn("[info]{task.description}"),
        BarColumn(),
        MofNCompleteColumn(),
        TimeRemainingColumn(),
        console=console,
        transient=True,
    )


def format_estimate(value: float | None, stderr: float | None = None, digits: int = 4) -> str:
    """Render ``value ± stderr`` for tables; a dash for absent values."""
    if value is None:
        return "—"
    if stderr is None:
        return f"{value:.{digits}g}"
    return f"{value:.{digits}g} ± {stderr:.2g}"
