import logging

import click
import fsspec

from lrdtest import __version__
from lrdtest.core import VARIANCE_MODES, TestConfig, run_test
from lrdtest.errors import ConfigurationError, LRDError
from lrdtest.ingest import TRANSFORMS, read_series
from lrdtest.periodogram import LAYOUTS, MEAN_EDGES
from lrdtest.simulate import NAMED_MODELS, MonteCarloResult, monte_carlo, sample_acvf, simulate_named_model
from lrdtest.spectral import D_MAX
from lrdtest.whittle import PENALTIES, default_workers

logger = logging.getLogger("lrdtest.cli")


def _order(value):
    if value == "aic":
        return value
    try:
        return int(value)
    except ValueError:
        raise ConfigurationError(f"--k must be an integer or 'aic', got {value!r}") from None


def _emit(text, out):
    if out is None:
        click.echo(text, nl=False)
    else:
        with fsspec.open(out, "w") as f:
            f.write(text)


def _fail(e):
    click.echo(f"error: {e}", err=True)
    raise SystemExit(2)


@click.group()
@click.option(
    "-v",
    "--verbose",
    count=True,
    help="Set logging level. '-v' for 'lrdtest' logging."
    "'-v -v' for complete debug logging.",
)
@click.version_option(__version__, prog_name="lrd")
def main(verbose):
    """Test a time series for long-range dependence."""
    fmt = "%(asctime)s %(name)-12s %(levelname)-8s %(message)s"
    if verbose == 1:
        logging.basicConfig(level=logging.WARNING, format=fmt)
        logging.getLogger("lrdtest").setLevel(logging.INFO)
    if verbose > 1:
        logging.basicConfig(level=logging.DEBUG, format=fmt)


def test_options(func):
    options = [
        click.option("--M", "n_blocks", type=int, default=None, help="Number of blocks"),
        click.option("--N", "block_length", type=int, default=None, help="Block length (even)"),
        click.option("--k", "order", default="aic", help="Sieve order, or 'aic'"),
        click.option("--k-max", type=int, default=5, help="Largest order tried by AIC"),
        click.option("--L", "window", type=int, default=None, help="Local mean window (even)"),
        click.option("--d-min", type=float, default=-D_MAX, help="Lower bound of d"),
        click.option("--layout", type=click.Choice(LAYOUTS), default="centered"),
        click.option("--mean-edge", type=click.Choice(MEAN_EDGES), default="linear"),
        click.option("--penalty", type=click.Choice(sorted(PENALTIES)), default="unit"),
        click.option(
            "--profile/--no-profile", default=True, help="Profile the innovation scale"
        ),
        click.option("--threads", type=int, default=None, help="Worker cap (LRD_THREADS)"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _config(
    n_blocks, block_length, order, k_max, window, d_min, layout, mean_edge, penalty, profile, **kw
):
    return TestConfig(
        N=block_length,
        M=n_blocks,
        k=_order(order),
        k_max=k_max,
        L=window,
        d_min=d_min,
        layout=layout,
        mean_edge=mean_edge,
        aic_penalty=penalty,
        profile=profile,
        **kw,
    )


@main.command("test")
@click.option("--input", "location", required=True, help="CSV path, URL or fixture:NAME")
@click.option("--column", default=None, help="Column name or zero-based index")
@click.option("--transform", type=click.Choice(TRANSFORMS), default="none")
@click.option("--alpha", type=float, default=0.05)
@click.option("--variance-mode", type=click.Choice(VARIANCE_MODES), default="auto")
@test_options
@click.option("--out", default=None, help="Report destination (default stdout)")
@click.option("--format", "fmt", type=click.Choice(["json", "tsv"]), default="json")
def cmd_test(location, column, transform, alpha, variance_mode, threads, out, fmt, **options):
    """Run the long-range dependence test on a series."""
    try:
        series = read_series(location, column, transform)
        workers = threads or default_workers()
        config = _config(
            alpha=alpha, variance_mode=variance_mode, workers=workers, **options
        )
        report = run_test(series, config)
    except LRDError as e:
        _fail(e)
    text = report.to_json(indent=2) + "\n" if fmt == "json" else report.to_tsv()
    _emit(text, out)
    click.echo(report.summary(), err=out is None)


@main.command("simulate")
@click.option("--model", type=click.Choice(sorted(NAMED_MODELS)), required=True)
@click.option("--T", "lengths", type=int, multiple=True, required=True, help="Sample size(s)")
@click.option("--reps", type=int, default=1, help="1: write the path; more: Monte Carlo")
@click.option("--seed", type=int, default=0)
@click.option("--variance-mode", type=click.Choice(VARIANCE_MODES), default="gaussian")
@test_options
@click.option("--out", default=None, help="Destination (default stdout)")
def cmd_simulate(model, lengths, reps, seed, variance_mode, threads, out, **options):
    """Simulate a named model, or its rejection frequencies over --reps runs."""
    try:
        if reps == 1:
            if len(lengths) != 1:
                raise ConfigurationError("a single path needs exactly one --T")
            series = simulate_named_model(model, lengths[0], seed)
            text = "x\n" + "".join(f"{v!r}\n" for v in series.values.tolist())
        else:
            config = _config(variance_mode=variance_mode, **options)
            rows = ["\t".join(MonteCarloResult.COLUMNS)]
            for T in lengths:
                result = monte_carlo(model, T, config, reps, seed, workers=threads)
                logger.info(f"{model} T={T}: {result}")
                rows.append(result.to_row())
            text = "\n".join(rows) + "\n"
    except LRDError as e:
        _fail(e)
    _emit(text, out)


@main.command("acvf")
@click.option("--input", "location", required=True, help="CSV path, URL or fixture:NAME")
@click.option("--column", default=None)
@click.option("--transform", type=click.Choice(TRANSFORMS), default="none")
@click.option("--max-lag", type=int, required=True)
@click.option("--out", default=None)
def cmd_acvf(location, column, transform, max_lag, out):
    """Sample autocovariances, as lag / gamma_hat TSV."""
    try:
        series = read_series(location, column, transform)
        acvf = sample_acvf(series, max_lag)
    except LRDError as e:
        _fail(e)
    text = "lag\tgamma_hat\n" + "".join(f"{h}\t{g!r}\n" for h, g in enumerate(acvf.tolist()))
    _emit(text, out)


if __name__ == "__main__":
    main()
