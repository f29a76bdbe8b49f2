"""Command line interface.

`segrl train` and `segrl experiment` mirror the training command flags of
the upstream pipeline this package reimplements.  Both run in-process by
default; pass --server URL to submit the same config to a running
`segrl serve` instance instead.
"""

from __future__ import annotations

import os
import time
from dataclasses import asdict

import click

from . import __version__
from .envs import ENV_IDS, make
from .envs.taxonomy import TAXONOMY, taxonomy_lookup
from .harness import (
    RunConfig,
    dump_frame,
    format_report_csv,
    format_report_table,
    improvement_report,
    random_baseline,
    read_ppm,
    run_experiment,
    run_training,
)
from .harness.corpus import write_corpus
from .remote import serve_segmenter
from .segmenter import SegmenterConfig, segment_frame, segment_labels

_DEFAULTS = RunConfig()


def train_options(f):
    """Flags shared by train and experiment; names mirror the upstream CLI."""
    options = [
        click.option("--env-id", default=_DEFAULTS.env_id, show_default=True),
        click.option("--seed", type=int, default=_DEFAULTS.seed, show_default=True),
        click.option("--clip-coef", type=float, default=_DEFAULTS.clip_coef, show_default=True),
        click.option(
            "--learning-rate", type=float, default=_DEFAULTS.learning_rate, show_default=True
        ),
        click.option("--num-envs", type=int, default=_DEFAULTS.num_envs, show_default=True),
        click.option(
            "--num-minibatches", type=int, default=_DEFAULTS.num_minibatches, show_default=True
        ),
        click.option("--num-steps", type=int, default=_DEFAULTS.num_steps, show_default=True),
        click.option(
            "--update-epochs", type=int, default=_DEFAULTS.update_epochs, show_default=True
        ),
        click.option(
            "--total-timesteps", type=int, default=_DEFAULTS.total_timesteps, show_default=True
        ),
        click.option(
            "--segmenter",
            type=click.Choice(["none", "builtin", "remote"]),
            default=_DEFAULTS.segmenter,
            show_default=True,
            help="segmentation stage of the observation pipeline",
        ),
        click.option(
            "--seg-mode",
            type=click.Choice(["replace", "overlay"]),
            default=_DEFAULTS.seg_mode,
            show_default=True,
        ),
        click.option("--seg-alpha", type=float, default=_DEFAULTS.seg_alpha, show_default=True),
        click.option("--seg-bits", type=int, default=_DEFAULTS.seg_bits, show_default=True),
        click.option(
            "--seg-min-area", type=int, default=_DEFAULTS.seg_min_area, show_default=True
        ),
        click.option(
            "--seg-endpoint",
            default=None,
            metavar="HOST:PORT",
            help="remote segmentation server; the SEG_ENDPOINT environment "
            "variable overrides this flag",
        ),
        click.option("--metrics-out", default=None, help="metrics CSV path"),
        click.option(
            "--frames-out", default=None, help="directory for periodic PPM frame dumps"
        ),
        click.option(
            "--frames-interval",
            type=int,
            default=_DEFAULTS.frames_interval,
            show_default=True,
            help="dump every Nth aggregated frame",
        ),
        click.option("--out-dir", default=_DEFAULTS.out_dir, show_default=True),
    ]
    for option in reversed(options):
        f = option(f)
    return f


def build_config(**kw) -> RunConfig:
    # the environment variable wins over the flag by contract
    kw["seg_endpoint"] = os.environ.get("SEG_ENDPOINT") or kw.get("seg_endpoint")
    return RunConfig(**kw)


@click.group()
@click.version_option(__version__)
def main():
    """Segmentation-augmented pixel RL: training, experiments, tools."""


@main.command()
@train_options
@click.option("--server", default=None, metavar="URL", help="submit to a running service")
@click.option("--quiet", is_flag=True, help="suppress per-update progress")
def train(server, quiet, **kw):
    """Train one agent; write metrics CSV and final weights."""
    config = build_config(**kw)
    if server:
        result = _submit_and_wait(server, "/runs", asdict(config), quiet)
        _echo_train_summary(result)
        return

    def progress(update, num_updates, step, sps):
        click.echo(f"update {update}/{num_updates} step {step} sps {sps:.0f}", err=True)

    result = run_training(config, progress=None if quiet else progress)
    _echo_train_summary(
        {
            "episodes": result.episodes,
            "ema_end": result.ema_end,
            "sps": result.sps,
            "elapsed_seconds": result.elapsed_seconds,
            "metrics_path": result.metrics_path,
            "weights_path": result.weights_path,
        }
    )


def _echo_train_summary(d):
    click.echo(f"episodes: {d['episodes']}")
    if d["ema_end"] is not None:
        click.echo(f"ema end result: {d['ema_end']:.4f}")
    click.echo(f"sps: {d['sps']:.1f}  elapsed: {d['elapsed_seconds']:.1f}s")
    click.echo(f"metrics: {d['metrics_path']}")
    click.echo(f"weights: {d['weights_path']}")


@main.command()
@train_options
@click.option("--server", default=None, metavar="URL", help="submit to a running service")
@click.option(
    "--baseline-episodes",
    type=int,
    default=100,
    show_default=True,
    help="random-policy episodes for the no-learning check; 0 disables",
)
@click.option("--quiet", is_flag=True, help="suppress per-update progress")
def experiment(server, baseline_episodes, quiet, **kw):
    """Paired raw-vs-segmented training; emits an improvement report."""
    config = build_config(**kw)
    if server:
        payload = dict(asdict(config), baseline_episodes=baseline_episodes)
        result = _submit_and_wait(server, "/experiments", payload, quiet)
        click.echo(result["report_table"])
        return

    baseline = None
    if baseline_episodes > 0:
        baseline = random_baseline(config.env_id, episodes=baseline_episodes, seed=config.seed)

    def progress(arm, update, num_updates, step, sps):
        click.echo(f"[{arm}] update {update}/{num_updates} step {step} sps {sps:.0f}", err=True)

    result = run_experiment(config, baseline=baseline, progress=None if quiet else progress)
    click.echo(format_report_table(result.report))
    click.echo(
        f"\nraw sps {result.raw.sps:.1f} ({result.raw.elapsed_seconds:.1f}s), "
        f"seg sps {result.seg.sps:.1f} ({result.seg.elapsed_seconds:.1f}s)"
    )
    click.echo(f"report: {config.out_dir}/report.csv, {config.out_dir}/report.txt")


@main.command()
@click.option(
    "--pair",
    "pairs",
    multiple=True,
    required=True,
    metavar="GAME:RAW:SEG[:no-learning]",
    help="repeatable score triple",
)
@click.option(
    "--format",
    "fmt",
    type=click.Choice(["table", "csv"]),
    default="table",
    show_default=True,
)
def report(pairs, fmt):
    """Improvement report from (game, raw score, segmented score) triples."""
    entries = []
    for raw_pair in pairs:
        parts = raw_pair.split(":")
        if len(parts) not in (3, 4):
            raise click.BadParameter(f"expected GAME:RAW:SEG[:no-learning], got {raw_pair!r}")
        try:
            entry = (parts[0], float(parts[1]), float(parts[2]))
        except ValueError:
            raise click.BadParameter(f"scores must be numbers in {raw_pair!r}") from None
        if len(parts) == 4:
            if parts[3] != "no-learning":
                raise click.BadParameter(f"unknown flag {parts[3]!r} in {raw_pair!r}")
            entry = entry + (True,)
        entries.append(entry)
    rep = improvement_report(entries)
    click.echo(format_report_table(rep) if fmt == "table" else format_report_csv(rep), nl=False)
    click.echo()


@main.command()
@click.option(
    "--input",
    "input_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="PPM frame to segment",
)
@click.option("--output", "output_path", required=True, type=click.Path(dir_okay=False))
@click.option("--seg-bits", type=int, default=3, show_default=True)
@click.option("--seg-min-area", type=int, default=4, show_default=True)
@click.option(
    "--seg-mode",
    type=click.Choice(["replace", "overlay"]),
    default="replace",
    show_default=True,
)
@click.option("--seg-alpha", type=float, default=1.0, show_default=True)
def segment(input_path, output_path, seg_bits, seg_min_area, seg_mode, seg_alpha):
    """Segment one PPM frame; write the recolored PPM."""
    frame = read_ppm(input_path)
    config = SegmenterConfig(
        bits=seg_bits, min_area=seg_min_area, mode=seg_mode, alpha=seg_alpha
    ).validate()
    seg = segment_labels(frame, config)
    dump_frame(segment_frame(frame, config), output_path)
    click.echo(f"{seg.count} segments -> {output_path}")


@main.command()
@click.argument("game", required=False)
def taxonomy(game):
    """Benchmark game taxonomy: exploration, reward type, object count."""
    if game:
        try:
            entries = [taxonomy_lookup(game)]
        except KeyError as e:
            raise click.ClickException(str(e)) from None
    else:
        entries = list(TAXONOMY.values())
    width = max(len(e.game_id) for e in entries)
    for e in entries:
        click.echo(f"{e.game_id:<{width}}  {e.exploration:<4}  {e.reward:<13}  {e.objects}")


@main.command("random-baseline")
@click.option("--env-id", default="MiniCatch-v0", show_default=True)
@click.option("--episodes", type=int, default=100, show_default=True)
@click.option("--seed", type=int, default=47, show_default=True)
def random_baseline_cmd(env_id, episodes, seed):
    """Random-policy baseline: mean/std and EMA end result."""
    res = random_baseline(env_id, episodes=episodes, seed=seed)
    click.echo(f"env: {res.env_id}  episodes: {res.episodes}")
    click.echo(f"mean return: {res.mean:.4f}  std: {res.std:.4f}")
    click.echo(f"ema end result: {res.ema_end:.4f}  ema std: {res.ema_std:.4f}")


@main.command("seg-server")
@click.option("--listen", default="127.0.0.1:5555", show_default=True, metavar="HOST:PORT")
@click.option("--seg-bits", type=int, default=3, show_default=True)
@click.option("--seg-min-area", type=int, default=4, show_default=True)
def seg_server(listen, seg_bits, seg_min_area):
    """Serve the builtin segmenter over the binary wire protocol."""
    host, port = _parse_endpoint(listen)
    config = SegmenterConfig(bits=seg_bits, min_area=seg_min_area).validate()
    click.echo(f"builtin segmenter listening on {host}:{port}", err=True)
    try:
        serve_segmenter(host, port, lambda frame: segment_labels(frame, config))
    except OSError as e:
        raise click.ClickException(f"cannot bind {listen}: {e}") from None


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP experiment service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


@main.command("golden-corpus")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--count", type=int, default=100, show_default=True)
@click.option("--seed", type=int, default=47, show_default=True)
@click.option("--seg-bits", type=int, default=3, show_default=True)
@click.option("--seg-min-area", type=int, default=4, show_default=True)
def golden_corpus(out_dir, count, seed, seg_bits, seg_min_area):
    """Write wire-format request/response pairs from the builtin segmenter.

    Other protocol implementations validate against these bytes.
    """
    pairs = write_corpus(out_dir, count=count, seed=seed, bits=seg_bits, min_area=seg_min_area)
    click.echo(f"wrote {len(pairs)} request/response pairs to {out_dir}")


@main.command()
def envs():
    """List the bundled environments."""
    for env_id in ENV_IDS:
        env = make(env_id)
        click.echo(f"{env_id}  actions={env.action_count}  objects={env.object_count}")


def _parse_endpoint(value: str) -> tuple[str, int]:
    host, sep, port = value.rpartition(":")
    if not sep or not host:
        raise click.BadParameter(f"expected HOST:PORT, got {value!r}")
    try:
        return host, int(port)
    except ValueError:
        raise click.BadParameter(f"bad port in {value!r}") from None


def _submit_and_wait(server: str, path: str, payload: dict, quiet: bool) -> dict:
    import httpx

    with httpx.Client(base_url=server, timeout=30.0) as client:
        resp = client.post(path, json=payload)
        resp.raise_for_status()
        job_id = resp.json()["job_id"]
        last = None
        while True:
            job = client.get(f"/jobs/{job_id}").json()
            if job["state"] == "done":
                return job["result"]
            if job["state"] == "error":
                raise click.ClickException(f"job {job_id} failed: {job['error']}")
            if not quiet and job.get("progress") != last:
                last = job.get("progress")
                if last:
                    click.echo(f"job {job_id}: {last}", err=True)
            time.sleep(1.0)


if __name__ == "__main__":
    main()
