"""List registry models CLI for twigkit"""

import argparse
import logging
import sys
from typing import Optional

from rich import box
from rich.console import Console
from rich.table import Table
from rich.text import Text

from .exceptions import TwigError
from .models import MODEL_REGISTRY, ModelSystem, ParameterKind

console = Console()


def setup_logging(verbose: bool = False) -> None:
    """Setup logging configuration"""
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(
        level=level,
        format='%(message)s'
    )


def create_parser() -> argparse.ArgumentParser:
    """Create command-line argument parser"""
    parser = argparse.ArgumentParser(
        prog='twig-models',
        description='List the dynamical systems available to twig',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  twig-models                  # All models with default parameters
  twig-models --order 2        # Include two higher-order terms where supported
        """
    )

    parser.add_argument(
        '--order',
        type=int,
        default=0,
        help='Number of higher-order terms to show (capped per model)'
    )

    parser.add_argument(
        '--verbose',
        action='store_true',
        help='Verbose output'
    )

    parser.add_argument(
        '--version',
        action='version',
        version=f'%(prog)s {__import__("twigkit").__version__}'
    )

    return parser


def format_parameters(model: ModelSystem) -> Text:
    """name=value list; initial conditions dimmed, fixed parameters marked"""
    text = Text()
    for i, p in enumerate(model.parameters):
        if i:
            text.append(", ")
        label = f"{p.name}={p.value:.6g}" + ("" if p.free else " (fixed)")
        text.append(label, style="dim" if p.kind == ParameterKind.INITIAL_CONDITION else "")
    return text


def list_models(out: Optional[Console] = None, order: int = 0) -> None:
    """Print every registry model in a stable order"""
    out = out or console
    table = Table(title="[bold cyan]twig model registry[/bold cyan]", box=box.ROUNDED)
    table.add_column("NAME", style="bold", no_wrap=True)
    table.add_column("STATE", justify="center")
    table.add_column("PARAMETERS")
    table.add_column("BIFURCATION", justify="center")
    table.add_column("ORIGIN", style="dim")

    for name, entry in MODEL_REGISTRY.items():
        try:
            model = entry.factory(min(order, entry.max_order))
        except TwigError as e:
            raise TwigError(f"Failed to build {name}: {e}")
        state = ", ".join(model.state_names)
        if model.coordinate_kind.value == 'polar':
            state += " (polar)"
        table.add_row(name, state, format_parameters(model), model.bifurcation_param or "-", entry.origin)

    out.print(table)


def main() -> int:
    """Main CLI entry point"""
    parser = create_parser()
    args = parser.parse_args()

    setup_logging(args.verbose)

    try:
        list_models(console, args.order)
        return 0

    except TwigError as e:
        logging.error(f"twig-models error: {e}")
        return 1
    except KeyboardInterrupt:
        logging.info("Interrupted by user")
        return 130
    except Exception as e:
        logging.error(f"Unexpected error: {e}")
        if args.verbose:
            import traceback
            traceback.print_exc()
        return 1


if __name__ == '__main__':
    sys.exit(main())
