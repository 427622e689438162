"""Command-line benchmark harness.

Subcommands generate synthetic data, build streaming sketches, train
hash models (single machine or distributed), merge worker summaries,
and evaluate retrieval quality round by round.  Inputs are streamed in
m-row chunks; every artifact gets a ``<path>.manifest.json`` recording
the full parameter set, effective seeds, library version, per-phase
wall-clock timings, and a peak-memory reading.  Report paths write the
metrics as JSON plus CSV and render matplotlib figures next to them.

Exit codes: 0 success, 2 bad arguments, 3 unreadable or malformed
files, 4 numerical failure.
"""
from __future__ import annotations

import csv
import functools
import json
import resource
import time
from dataclasses import replace
from pathlib import Path

import click
import numpy as np

from . import __version__, io
from .datagen import SynthConfig, synth_clusters, synth_lowrank
from .dfrosh import WorkerSummary, _worker_seed, merge, train_distributed, worker_sketch
from .fd import fd_insert, new_sketch
from .ffd import FfdSketcher
from .frosh import StreamTrainer, TrainConfig, _next_pow2, extract_model, lsh_model
from .evaluate import evaluate_map, make_task, pr_curve, task_rankings
from .matrix import SvdError, spectral_norm, svd

EVAL_ROUND_SCHEMA = {
    "type": "object",
    "required": ["round", "bits", "method", "map", "time_ms"],
    "properties": {
        "round": {"type": "integer", "minimum": 1},
        "bits": {"type": "integer", "minimum": 1},
        "method": {"type": "string"},
        "map": {"type": "number", "minimum": 0.0, "maximum": 1.0},
        "time_ms": {"type": "number", "minimum": 0.0},
    },
    "additionalProperties": False,
}


class _ExitError(click.ClickException):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.exit_code = code


def _guarded(fn):
    """Map library failures onto the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except io.FormatError as exc:
            raise _ExitError(str(exc), 3) from exc
        except OSError as exc:
            raise _ExitError(str(exc), 3) from exc
        except SvdError as exc:
            raise _ExitError(str(exc), 4) from exc
        except ValueError as exc:
            raise _ExitError(str(exc), 2) from exc

    return wrapper


def _seed_option(fn):
    return click.option(
        "--seed",
        type=click.IntRange(min=0),
        default=0,
        envvar="FROSKETCH_SEED",
        show_default=True,
        help="Master seed; FROSKETCH_SEED is the fallback.",
    )(fn)


def _write_manifest(out_path, command: str, params: dict, seeds: dict, timings_ms: dict) -> None:
    manifest = {
        "command": command,
        "params": params,
        "seeds": seeds,
        "library_version": __version__,
        "timings_ms": {k: round(v, 3) for k, v in timings_ms.items()},
        "peak_rss_kb": resource.getrusage(resource.RUSAGE_SELF).ru_maxrss,
    }
    with open(str(out_path) + ".manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)


def _stream_chunks(path, chunk_rows: int):
    """(rows, cols, chunk iterator) for a matrix file, streaming FSK1."""
    if str(path).endswith(".csv"):
        a = io.load_matrix_csv(path)

        def gen():
            for s in range(0, a.shape[0], chunk_rows):
                yield a[s : s + chunk_rows]

        return a.shape[0], a.shape[1], gen()
    rows, cols = io.fsk1_shape(path)
    return rows, cols, io.iter_matrix_fsk1(path, chunk_rows)


@click.group()
@click.version_option(__version__)
def main() -> None:
    """Streaming matrix sketching and online hashing benchmarks."""


@main.command()
@click.option("--n", type=click.IntRange(min=1), required=True, help="Row count.")
@click.option("--d", type=click.IntRange(min=1), required=True, help="Column count.")
@click.option("--k", type=click.IntRange(min=1), default=10, show_default=True,
              help="Dominant directions of the low-rank generator.")
@click.option("--gamma", type=float, default=10.0, show_default=True,
              help="Noise attenuation of the low-rank generator.")
@click.option("--clusters", type=click.IntRange(min=0), default=0, show_default=True,
              help="If positive, draw a Gaussian mixture with this many clusters instead.")
@_seed_option
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@_guarded
def synth(n, d, k, gamma, clusters, seed, out_path):
    """Generate a synthetic matrix file (FSK1, or CSV by extension)."""
    t0 = time.perf_counter()
    if clusters:
        a = synth_clusters(n, d, clusters=clusters, seed=seed)
    else:
        a = synth_lowrank(SynthConfig(n=n, d=d, k=k, gamma=gamma, seed=seed))
    gen_ms = (time.perf_counter() - t0) * 1e3
    io.save_matrix(a, out_path)
    _write_manifest(
        out_path,
        "synth",
        {"n": n, "d": d, "k": k, "gamma": gamma, "clusters": clusters, "out": str(out_path)},
        {"seed": seed},
        {"generate": gen_ms},
    )
    click.echo(f"wrote {out_path} ({n}x{d})")


@main.command()
@click.option("--in", "in_path", type=click.Path(exists=False, dir_okay=False), required=True)
@click.option("--method", type=click.Choice(["fd", "ffd"]), required=True)
@click.option("--ell", type=click.IntRange(min=2), required=True, help="Sketch rows (even).")
@click.option("--m", "m_opt", type=click.IntRange(min=1), default=None,
              help="Buffer/chunk rows; defaults to the next power of two >= 4d.")
@_seed_option
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@click.option("--report", type=click.Choice(["basic", "exact"]), default="basic",
              show_default=True, help="'exact' adds a second pass for the relative error.")
@click.option("--figures/--no-figures", default=True, show_default=True,
              help="Render report figures (exact mode only).")
@_guarded
def sketch(in_path, method, ell, m_opt, seed, out_path, report, figures):
    """Sketch a matrix file, streaming it in m-row chunks."""
    rows, d, _ = _stream_chunks(in_path, 1)
    m = m_opt if m_opt is not None else _next_pow2(4 * d)
    _, _, chunks = _stream_chunks(in_path, m)
    if method == "ffd":
        sk = FfdSketcher(ell, m, d, seed)
        t0 = time.perf_counter()
        for chunk in chunks:
            sk.insert(chunk)
        b = sk.finalize()
        sketch_ms = (time.perf_counter() - t0) * 1e3
        checkpoint = sk
    else:
        state = new_sketch(ell, d)
        t0 = time.perf_counter()
        for chunk in chunks:
            fd_insert(state, chunk)
        sketch_ms = (time.perf_counter() - t0) * 1e3
        b = state.b.copy()
        checkpoint = state
    io.save_sketch(checkpoint, out_path)

    relative = None
    report_ms = 0.0
    if report == "exact":
        t0 = time.perf_counter()
        gram = np.zeros((d, d))
        fro2 = 0.0
        for chunk in _stream_chunks(in_path, m)[2]:
            gram += chunk.T @ chunk
            fro2 += float((chunk * chunk).sum())
        relative = float(spectral_norm(gram - b.T @ b, tol=1e-9) / fro2)
        report_ms = (time.perf_counter() - t0) * 1e3
        if figures:
            from .figures import save_spectrum_figure

            data_sigma = np.sqrt(np.clip(np.linalg.eigvalsh(gram)[::-1], 0.0, None))
            save_spectrum_figure(
                data_sigma[: min(ell, d)], svd(b).sigma, str(out_path) + ".spectrum.png"
            )

    report_row = {
        "method": method,
        "ell": ell,
        "m": m,
        "relative_error": relative,
        "time_ms": round(sketch_ms, 3),
    }
    with open(str(out_path) + ".report.json", "w") as fh:
        json.dump(report_row, fh, indent=2)
    with open(str(out_path) + ".report.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(report_row))
        writer.writeheader()
        writer.writerow(report_row)
    _write_manifest(
        out_path,
        "sketch",
        {"in": str(in_path), "method": method, "ell": ell, "m": m,
         "rows": rows, "d": d, "report": report, "out": str(out_path)},
        {"seed": seed},
        {"sketch": sketch_ms, "report": report_ms},
    )
    click.echo(json.dumps(report_row))


def _train_stream_file(in_path, cfg: TrainConfig, model_out, eta):
    """Shared single-machine training loop for the train command."""
    rows, d, _ = _stream_chunks(in_path, 1)
    resolved = cfg.resolved(d)
    _, _, chunks = _stream_chunks(in_path, resolved.m)
    trainer = StreamTrainer(resolved, d)
    round_paths = []
    train_s = 0.0
    emitted = 0
    for chunk in chunks:
        t0 = time.perf_counter()
        trainer.absorb(chunk)
        train_s += time.perf_counter() - t0
        if eta is not None and trainer.chunks_seen % eta == 0:
            emitted += 1
            path = f"{model_out}.round{emitted:04d}"
            io.save_model(trainer.current_model(), path)
            round_paths.append(path)
    model = trainer.current_model()
    io.save_model(model, model_out)
    return resolved, rows, train_s * 1e3, round_paths


@main.command()
@click.option("--in", "in_path", type=click.Path(dir_okay=False), required=True)
@click.option("--method", type=click.Choice(["lsh", "osh", "frosh"]), required=True)
@click.option("--bits", type=click.IntRange(min=1), required=True, help="Code width r.")
@click.option("--ell", type=click.IntRange(min=2), default=None, help="Sketch rows; defaults to 2*bits.")
@click.option("--m", "m_opt", type=click.IntRange(min=1), default=None,
              help="Buffer/chunk rows; defaults to the next power of two >= 4d.")
@click.option("--eta", type=click.IntRange(min=1), default=None,
              help="Also write a model snapshot every eta chunks.")
@_seed_option
@click.option("--model-out", type=click.Path(dir_okay=False), required=True)
@_guarded
def train(in_path, method, bits, ell, m_opt, eta, seed, model_out):
    """Train a hash model from a matrix file."""
    if method == "lsh":
        _, d, _ = _stream_chunks(in_path, 1)
        model = lsh_model(d, bits, seed)
        io.save_model(model, model_out)
        _write_manifest(
            model_out,
            "train",
            {"in": str(in_path), "method": method, "bits": bits,
             "ell": None, "m": None, "eta": None, "model_out": str(model_out)},
            {"seed": seed},
            {"train": 0.0},
        )
        click.echo(f"wrote {model_out} (lsh, {bits} bits)")
        return
    cfg = TrainConfig(r=bits, ell=ell, m=m_opt, eta=eta or 1, seed=seed,
                      sketcher="fd" if method == "osh" else "ffd")
    resolved, rows, train_ms, round_paths = _train_stream_file(in_path, cfg, model_out, eta)
    _write_manifest(
        model_out,
        "train",
        {"in": str(in_path), "method": method, "bits": bits, "ell": resolved.ell,
         "m": resolved.m, "eta": eta, "rows": rows, "rounds_written": len(round_paths),
         "model_out": str(model_out)},
        {"seed": seed},
        {"train": train_ms},
    )
    click.echo(f"wrote {model_out} ({method}, {bits} bits, ell={resolved.ell}, m={resolved.m})")


@main.command()
@click.option("--in", "in_path", type=click.Path(dir_okay=False), required=True)
@click.option("--workers", type=click.IntRange(min=1), default=5, show_default=True)
@click.option("--bits", type=click.IntRange(min=1), required=True)
@click.option("--ell", type=click.IntRange(min=2), default=None, help="Defaults to 2*bits.")
@click.option("--m", "m_opt", type=click.IntRange(min=1), default=None)
@_seed_option
@click.option("--model-out", type=click.Path(dir_okay=False), required=True)
@click.option("--summaries-out", type=click.Path(file_okay=False), default=None,
              help="Also write one worker summary file per worker to this directory.")
@click.option("--threads", type=click.IntRange(min=1), default=1, show_default=True,
              help="Worker threads; 1 keeps the run single-threaded.")
@_guarded
def dfrosh(in_path, workers, bits, ell, m_opt, seed, model_out, summaries_out, threads):
    """Train distributed: per-worker sketches merged into one model."""
    a = io.load_matrix(in_path)
    n = a.shape[0]
    if workers > n:
        raise ValueError(f"more workers ({workers}) than rows ({n})")
    cfg = TrainConfig(r=bits, ell=ell, m=m_opt, seed=seed, sketcher="ffd").resolved(a.shape[1])
    size = n // workers
    bounds = [(i * size, (i + 1) * size if i < workers - 1 else n) for i in range(workers)]
    parts = [a[lo:hi] for lo, hi in bounds]
    t0 = time.perf_counter()
    summaries = [worker_sketch(p, cfg, i) for i, p in enumerate(parts)] if threads == 1 else None
    if summaries is None:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            summaries = list(pool.map(
                lambda iw: worker_sketch(iw[1], cfg, iw[0]), enumerate(parts)
            ))
    worker_ms = (time.perf_counter() - t0) * 1e3
    if summaries_out is not None:
        Path(summaries_out).mkdir(parents=True, exist_ok=True)
        for s in summaries:
            io.save_summary(s, str(Path(summaries_out) / f"worker_{s.worker_id:04d}.summary"))
    t0 = time.perf_counter()
    b, phi, _tau = merge(summaries, cfg.ell)
    model = extract_model(b, cfg.r, phi)
    merge_ms = (time.perf_counter() - t0) * 1e3
    io.save_model(model, model_out)
    _write_manifest(
        model_out,
        "dfrosh",
        {"in": str(in_path), "workers": workers, "bits": bits, "ell": cfg.ell,
         "m": cfg.m, "rows": n, "threads": threads, "model_out": str(model_out),
         "summaries_out": summaries_out and str(summaries_out)},
        {"seed": seed, "worker_seeds": [_worker_seed(seed, i) for i in range(workers)]},
        {"workers": worker_ms, "merge": merge_ms},
    )
    click.echo(f"wrote {model_out} (dfrosh, {workers} workers)")


@main.command("merge")
@click.argument("summaries", nargs=-1, required=True, type=click.Path(dir_okay=False))
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@click.option("--bits", type=click.IntRange(min=1), default=None,
              help="Code width; defaults to ell/2 of the summaries.")
@_guarded
def merge_cmd(summaries, out_path, bits):
    """Merge worker summary files into a hash model."""
    loaded = [io.load_summary(p) for p in summaries]
    ell = loaded[0].b.shape[0]
    r = bits if bits is not None else ell // 2
    t0 = time.perf_counter()
    b, phi, tau = merge(loaded, ell)
    model = extract_model(b, r, phi)
    merge_ms = (time.perf_counter() - t0) * 1e3
    io.save_model(model, out_path)
    _write_manifest(
        out_path,
        "merge",
        {"summaries": [str(p) for p in summaries], "bits": r, "ell": ell,
         "rows_merged": tau, "out": str(out_path)},
        {},
        {"merge": merge_ms},
    )
    click.echo(f"wrote {out_path} (merged {len(loaded)} summaries, {tau} rows)")


class _RoundDistributedTrainer:
    """Long-lived per-worker trainers for round-by-round evaluation."""

    def __init__(self, cfg: TrainConfig, d: int, workers: int):
        self.cfg = cfg.resolved(d)
        self.workers = [
            StreamTrainer(replace(self.cfg, seed=_worker_seed(self.cfg.seed, i)), d)
            for i in range(workers)
        ]

    def absorb(self, part: np.ndarray) -> None:
        for trainer, sub in zip(self.workers, np.array_split(part, len(self.workers))):
            for s in range(0, sub.shape[0], self.cfg.m):
                trainer.absorb(sub[s : s + self.cfg.m])

    def current_model(self):
        summaries = [
            WorkerSummary(b=t.sketch_snapshot(), mu=t.phi, n=t.tau, worker_id=i)
            for i, t in enumerate(self.workers)
            if t.tau
        ]
        b, phi, _ = merge(summaries, self.cfg.ell)
        return extract_model(b, self.cfg.r, phi)


@main.command("eval")
@click.option("--db", "db_path", type=click.Path(dir_okay=False), required=True)
@click.option("--queries", "queries_path", type=click.Path(dir_okay=False), required=True)
@click.option("--model", "model_path", type=click.Path(dir_okay=False), default=None,
              help="Evaluate this pretrained model (single shot).")
@click.option("--method", type=click.Choice(["lsh", "osh", "frosh", "dfrosh"]), default=None,
              help="Train this method round by round instead.")
@click.option("--bits", type=click.IntRange(min=1), default=None, help="Code width for --method.")
@click.option("--ell", type=click.IntRange(min=2), default=None)
@click.option("--m", "m_opt", type=click.IntRange(min=1), default=None)
@click.option("--workers", type=click.IntRange(min=1), default=5, show_default=True,
              help="Worker count for --method dfrosh.")
@click.option("--rounds", type=click.IntRange(min=1), default=10, show_default=True)
@click.option("--fraction", type=float, default=0.02, show_default=True,
              help="True-neighbor fraction for the ground truth.")
@_seed_option
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
              help="Write rounds.jsonl/.csv, the PR curve, and figures here.")
@click.option("--figures/--no-figures", default=True, show_default=True)
@_guarded
def eval_cmd(db_path, queries_path, model_path, method, bits, ell, m_opt, workers,
             rounds, fraction, seed, out_dir, figures):
    """Retrieval evaluation: mean average precision per round, plus a
    final precision-recall curve."""
    if (model_path is None) == (method is None):
        raise click.UsageError("pass exactly one of --model or --method")
    if method is not None and method != "lsh" and bits is None:
        raise click.UsageError(f"--method {method} requires --bits")
    db = io.load_matrix(db_path)
    queries = io.load_matrix(queries_path)
    task = make_task(db, queries, fraction)
    n = db.shape[0]

    rows_out: list[dict] = []
    if model_path is not None:
        model = io.load_model(model_path)
        final_model = model
        method_name = "pretrained"
        rows_out.append({
            "round": 1, "bits": model.r, "method": method_name,
            "map": evaluate_map(model, task), "time_ms": 0.0,
        })
    else:
        method_name = method
        if rounds > n:
            raise ValueError(f"more rounds ({rounds}) than database rows ({n})")
        parts = np.array_split(db, rounds)
        if method == "lsh":
            model = lsh_model(db.shape[1], bits if bits is not None else 32, seed)
            score = evaluate_map(model, task)
            for j in range(1, rounds + 1):
                rows_out.append({"round": j, "bits": model.r, "method": method_name,
                                 "map": score, "time_ms": 0.0})
            final_model = model
        else:
            cfg = TrainConfig(r=bits, ell=ell, m=m_opt, seed=seed,
                              sketcher="fd" if method == "osh" else "ffd")
            if method == "dfrosh":
                trainer = _RoundDistributedTrainer(cfg, db.shape[1], workers)
                m_eff = trainer.cfg.m
            else:
                cfg = cfg.resolved(db.shape[1])
                trainer = StreamTrainer(cfg, db.shape[1])
                m_eff = cfg.m
            for j, part in enumerate(parts, start=1):
                t0 = time.perf_counter()
                if method == "dfrosh":
                    trainer.absorb(part)
                else:
                    for s in range(0, part.shape[0], m_eff):
                        trainer.absorb(part[s : s + m_eff])
                train_ms = (time.perf_counter() - t0) * 1e3
                model = trainer.current_model()
                rows_out.append({"round": j, "bits": model.r, "method": method_name,
                                 "map": evaluate_map(model, task), "time_ms": round(train_ms, 3)})
            final_model = model

    cuts = sorted(set(np.geomspace(1, n, num=20).astype(int).tolist()))
    rankings = task_rankings(final_model, task)
    curve = pr_curve(rankings, list(task.truth), cuts)

    lines = [json.dumps(row) for row in rows_out]
    if out_dir is None:
        for line in lines:
            click.echo(line)
    else:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "rounds.jsonl").write_text("\n".join(lines) + "\n")
        with open(out / "rounds.csv", "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=["round", "bits", "method", "map", "time_ms"])
            writer.writeheader()
            writer.writerows(rows_out)
        with open(out / "pr_curve.json", "w") as fh:
            json.dump({"method": method_name, "cuts": cuts,
                       "points": [[r, p] for r, p in curve]}, fh, indent=2)
        with open(out / "pr_curve.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["method", "cut", "recall", "precision"])
            for cut, (rec, prec) in zip(cuts, curve):
                writer.writerow([method_name, cut, f"{rec:.17g}", f"{prec:.17g}"])
        if figures:
            from .figures import save_pr_figure, save_rounds_figure

            save_rounds_figure(rows_out, out / "map_by_round.png")
            save_pr_figure({method_name: curve}, out / "pr_curve.png")
        _write_manifest(
            out / "eval",
            "eval",
            {"db": str(db_path), "queries": str(queries_path),
             "model": model_path and str(model_path), "method": method,
             "bits": bits, "ell": ell, "m": m_opt, "workers": workers,
             "rounds": rounds, "fraction": fraction, "out": str(out_dir)},
            {"seed": seed},
            {"total": sum(row["time_ms"] for row in rows_out)},
        )
        click.echo(f"wrote {out / 'rounds.jsonl'} ({len(rows_out)} rows)")


if __name__ == "__main__":
    main()
