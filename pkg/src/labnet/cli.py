"""Command-line entry points: simulate, train, evaluate, separate, locate.

Human-readable logs go to stderr; machine-readable summaries go to files (or
stdout for the small textual outputs of simulate and locate). Exit code 0 on
success, 1 on failure, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from labnet import datagen
from labnet.audio_io import read_wav, write_wav
from labnet.checkpoint import load_checkpoint, model_from_checkpoint
from labnet.dsp import AudioSegment
from labnet.errors import LabnetError
from labnet.evaluate import evaluate_dataset
from labnet.metrics import save_report
from labnet.model.net import labnet_forward
from labnet.profiles import PROFILES, load_run_config
from labnet.spatial import decode_doa_frames, triangulate
from labnet.errors import TriangulationDegenerateError
from labnet.training import BEST_CHECKPOINT, Trainer

log = logging.getLogger("labnet")


def _add_config_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--profile", choices=PROFILES, help="base profile (default desk)")
    parser.add_argument("--seed", type=int, help="override the configured seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="labnet", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a simulated dataset")
    _add_config_args(p)
    p.add_argument("--out", required=True, help="dataset root directory")
    p.add_argument("--n", type=int, help="training example count")
    p.add_argument("--n-val", type=int, default=0, help="validation example count")
    p.add_argument("--n-test", type=int, default=0, help="test example count")
    p.add_argument("--corpus", help="dry source corpus directory (default synthetic)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", help="train a model on a simulated dataset")
    _add_config_args(p)
    p.add_argument("--data", required=True, help="dataset root directory")
    p.add_argument("--out", required=True, help="run output directory")
    p.add_argument("--resume", action="store_true", help="continue from last checkpoint")
    p.add_argument("--max-steps", type=int, help="stop once this many optimizer steps ran")
    p.add_argument("--epochs", type=int, help="override the configured epoch count")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint on a dataset split")
    _add_config_args(p)
    p.add_argument("--data", required=True)
    p.add_argument("--split", default="test")
    p.add_argument("--checkpoint", help="trained checkpoint (omit for --passthrough)")
    p.add_argument("--report", required=True, help="JSON report path")
    p.add_argument("--csv", help="scatter record CSV path")
    p.add_argument("--plot", help="scatter plot image path")
    p.add_argument(
        "--passthrough", choices=("oracle", "mixture"),
        help="score references (oracle) or the raw mixture channel (mixture) "
             "instead of a model",
    )
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("separate", help="separate one 6-channel recording")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True, help="multichannel WAV file")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_separate)

    p = sub.add_parser("locate", help="per-frame angles and coordinates as CSV")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True, help="multichannel WAV file")
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_locate)
    return parser


def cmd_simulate(args) -> int:
    cfg = load_run_config(args.config, args.profile, args.seed)
    data = cfg.data
    counts = {
        "train": data.train_count if args.n is None else args.n,
        "val": args.n_val,
        "test": args.n_test,
    }
    corpus = args.corpus or data.corpus_dir
    pool = datagen.CorpusSourcePool(corpus) if corpus else datagen.SyntheticSourcePool()
    geometry = cfg.geometry
    all_meta = []
    for stream, (split, count) in enumerate(counts.items()):
        examples = datagen.generate_examples(
            cfg.train.seed, count, data.constraints, geometry, pool,
            cfg.sample_rate, data.duration_s, id_prefix=f"{split}-", stream=stream,
        )
        written = []

        def _tap(gen):
            for ex in gen:
                written.append(ex.metadata)
                yield ex

        datagen.write_dataset(_tap(examples), args.out, split)
        all_meta.extend(written)
        log.info("wrote %d %s examples", len(written), split)

    counts_by_bucket = datagen.bucket_counts(all_meta)
    total = max(1, len(all_meta))
    lines = [f"examples: {len(all_meta)}"]
    for label in datagen.BUCKET_LABELS:
        n = counts_by_bucket.get(label, 0)
        lines.append(f"bucket {label:>6} deg: {n:5d}  ({100.0 * n / total:.1f}%)")
    print("\n".join(lines))
    return 0


def cmd_train(args) -> int:
    cfg = load_run_config(args.config, args.profile, args.seed)
    from dataclasses import replace

    train_cfg = cfg.train
    if args.max_steps is not None:
        train_cfg = replace(train_cfg, max_steps=args.max_steps)
    if args.epochs is not None:
        train_cfg = replace(train_cfg, epochs=args.epochs)
    cfg = replace(cfg, train=train_cfg)

    train_examples = datagen.read_dataset(args.data, "train", cfg.sample_rate)
    try:
        val_examples = datagen.read_dataset(args.data, "val", cfg.sample_rate)
    except LabnetError:
        log.warning("no validation split found; validating on the training split")
        val_examples = train_examples
    trainer = Trainer(cfg, args.out)
    history = trainer.fit(train_examples, val_examples, resume=args.resume)
    log.info("finished at epoch %d after %d steps", trainer.epoch, trainer.steps_done)
    summary = {
        "epochs_run": len(history),
        "steps_done": trainer.steps_done,
        "best_val": trainer.best_val,
    }
    with open(os.path.join(args.out, "train_summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, sort_keys=True)
    return 0


def cmd_evaluate(args) -> int:
    if args.passthrough:
        cfg = load_run_config(args.config, args.profile, args.seed)
        model = None
        mode = args.passthrough
    else:
        if not args.checkpoint:
            raise LabnetError("evaluate needs --checkpoint unless --passthrough is used")
        model, cfg = model_from_checkpoint(load_checkpoint(args.checkpoint))
        mode = "model"
    examples = datagen.read_dataset(args.data, args.split, cfg.sample_rate)
    report = evaluate_dataset(examples, model, mode)
    save_report(report, args.report, args.csv, args.plot)
    if report.average:
        log.info(
            "%d examples: SI-SDR %.2f dB", report.total_examples,
            report.average["si_sdr_db"],
        )
    else:
        log.info("empty dataset split; wrote an empty report")
    return 0


def _load_model_input(args, model):
    samples, _ = read_wav(
        args.input,
        expected_rate=model.sample_rate,
        expected_channels=model.cfg.channels,
    )
    return AudioSegment(samples, model.sample_rate)


def cmd_separate(args) -> int:
    model, _ = model_from_checkpoint(load_checkpoint(args.checkpoint))
    segment = _load_model_input(args, model)
    result = labnet_forward(model, segment)
    os.makedirs(args.out, exist_ok=True)
    stem = os.path.splitext(os.path.basename(args.input))[0]
    for s in range(result.waveforms.shape[0]):
        path = os.path.join(args.out, f"{stem}.est{s}.wav")
        write_wav(path, result.waveforms[s].detach().numpy(), model.sample_rate)
        log.info("wrote %s", path)
    return 0


def cmd_locate(args) -> int:
    model, cfg = model_from_checkpoint(load_checkpoint(args.checkpoint))
    if not model.cfg.use_locator:
        raise LabnetError("this checkpoint was trained without the locator")
    if cfg.codec.observers != 2:
        raise LabnetError("locate requires a two-observer model")
    segment = _load_model_input(args, model)
    result = labnet_forward(model, segment)
    spectrums = result.spectrums.detach().numpy()  # [S, N, T, bins]
    angles = decode_doa_frames(spectrums, cfg.codec)  # [S, N, T]
    baseline = cfg.geometry.baseline_c

    rows = ["source,frame,theta1_deg,theta2_deg,x_m,y_m"]
    for s in range(angles.shape[0]):
        carried = (0.0, 10.0)
        for t in range(angles.shape[2]):
            t1, t2 = float(angles[s, 0, t]), float(angles[s, 1, t])
            try:
                point = triangulate(t1, t2, baseline)
                carried = (point.x, point.y)
            except TriangulationDegenerateError:
                pass  # keep the last valid coordinates, broadside default before one exists
            rows.append(f"{s},{t},{t1:.3f},{t2:.3f},{carried[0]:.4f},{carried[1]:.4f}")
    text = "\n".join(rows) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def main(argv=None) -> int:
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(name)s: %(message)s"
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except LabnetError as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
