import sys
from typing import Callable, Optional, Tuple

import click

from src.config import DEFAULT_OUT_DIR, get_log_level, load_run_config
from src.errors import FaceRespError
from src.logger import logger
from src import commands
from src.utils.synth import SUITES

LOG_LEVEL_CHOICES = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]


def _run(command: Callable[..., int], *args, **kwargs) -> None:
    """Run a command and exit with its code; setup failures (bad manifest, config) exit with 2."""
    try:
        code = command(*args, **kwargs)
    except (FaceRespError, OSError) as e:
        logger.error(f"{command.__name__} failed: {e}")
        sys.exit(2)
    sys.exit(code)


@click.group()
@click.option('--config', 'config_path', type=click.Path(dir_okay=False), default=None,
              help='key=value run config file')
@click.option('--out', 'out_dir', type=click.Path(file_okay=False), default=DEFAULT_OUT_DIR, show_default=True,
              help='Output directory')
@click.option('--jobs', type=click.IntRange(min=1), default=None, help='Worker threads (overrides config)')
@click.option('--seed', type=int, default=None, help='Random seed (overrides config)')
@click.option('--log-level', type=click.Choice(LOG_LEVEL_CHOICES, case_sensitive=False), default=None,
              help='Set logging level')
@click.pass_context
def cli(ctx: click.Context, config_path: Optional[str], out_dir: str, jobs: Optional[int],
        seed: Optional[int], log_level: Optional[str]) -> None:
    """Facial-expression intensity responses from tracked landmark sequences."""
    logger.set_level(log_level or get_log_level())
    try:
        config = load_run_config(config_path).with_overrides(jobs=jobs, seed=seed)
    except FaceRespError as e:
        raise click.BadParameter(str(e), param_hint='--config')
    ctx.obj = {'config': config, 'out': out_dir}


@cli.command()
@click.argument('manifest', type=click.Path(exists=True, dir_okay=False))
@click.pass_obj
def respond(obj, manifest: str) -> None:
    """Final response and weights per sequence."""
    _run(commands.respond, manifest, obj['config'], obj['out'])


@cli.command()
@click.argument('manifest', type=click.Path(exists=True, dir_okay=False))
@click.pass_obj
def align(obj, manifest: str) -> None:
    """Warp responses onto the template and export transitions."""
    _run(commands.align, manifest, obj['config'], obj['out'])


@cli.command('eval')
@click.argument('manifest', type=click.Path(exists=True, dir_okay=False))
@click.argument('truth', type=click.Path(exists=True, dir_okay=False))
@click.pass_obj
def eval_(obj, manifest: str, truth: str) -> None:
    """MAE, PCC and ICC against ground-truth intensities."""
    _run(commands.evaluate_command, manifest, truth, obj['config'], obj['out'])


@cli.command()
@click.argument('manifest', type=click.Path(exists=True, dir_okay=False))
@click.option('-k', '--clusters', 'k', type=int, default=None, help='Clusters per label (overrides cluster_k)')
@click.pass_obj
def cluster(obj, manifest: str, k: Optional[int]) -> None:
    """Ward subclusters of weight vectors per label."""
    _run(commands.cluster, manifest, obj['config'], obj['out'], k)


@cli.command()
@click.argument('manifest', type=click.Path(exists=True, dir_okay=False))
@click.argument('annotations', type=click.Path(exists=True, dir_okay=False))
@click.pass_obj
def au(obj, manifest: str, annotations: str) -> None:
    """Per-AU responses and their errors against the AU approximated response."""
    _run(commands.au, manifest, annotations, obj['config'], obj['out'])


@cli.command()
@click.option('--suite', type=click.Choice(SUITES), default='default', show_default=True)
@click.option('--count', type=click.IntRange(min=1), default=10, show_default=True)
@click.option('--format', 'fmt', type=click.Choice(['long', 'wide', 'json']), default='long', show_default=True)
@click.option('--spec', 'spec_path', type=click.Path(exists=True, dir_okay=False), default=None,
              help='SynthSpec JSON used instead of a named suite')
@click.pass_obj
def synth(obj, suite: str, count: int, fmt: str, spec_path: Optional[str]) -> None:
    """Generate synthetic sequences with ground truth."""
    _run(commands.synth, obj['out'], suite, count, obj['config'].seed, fmt, spec_path)


@cli.command()
@click.argument('csv_files', nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.pass_obj
def plot(obj, csv_files: Tuple[str, ...]) -> None:
    """Render emitted CSVs as SVG charts."""
    _run(commands.plot, list(csv_files), obj['out'])


def main() -> None:
    """Main application function."""
    cli(prog_name='faceresp')


if __name__ == "__main__":
    main()
