"""Pipeline orchestration: staged runs with provenance, plus per-module commands.

Exit codes: 0 success, 1 stage failure (partial outputs quarantined),
2 usage or missing dependency.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__, corpus, demo, evalmetrics, lexicon, split as split_mod
from .features import FileFeatureProvider, SyntheticFeatureProvider, export_features
from .ioutil import dump_json, sha256_file, stable_seed, write_jsonl
from .model import (
    ModelConfig,
    Trainer,
    Vocab,
    clip_frames,
    load_checkpoint,
    new_state,
    save_checkpoint,
)
from .model.scorer import MamCandidateScorer
from .model.training import mem_instance_correctness, predict_verb_tokens

log = logging.getLogger("cae")

STAGES = ("verbs", "extract", "split", "features", "pretrain", "eval", "probe")

EXIT_OK = 0
EXIT_STAGE_FAILURE = 1
EXIT_USAGE = 2


class DependencyError(RuntimeError):
    pass


class PipelineContext:
    def __init__(self, config: dict, config_dir: Path, seed: int | None):
        self.config = config
        self.config_dir = config_dir
        self.seed = seed if seed is not None else int(config.get("seed", 42))
        paths = config.get("paths", {})
        self.out_dir = self._resolve(paths.get("out_dir", "cae-out"))
        self.out_dir.mkdir(parents=True, exist_ok=True)

    def _resolve(self, value: str) -> Path:
        path = Path(value)
        return path if path.is_absolute() else (self.config_dir / path)

    def input_path(self, key: str) -> Path:
        paths = self.config.get("paths", {})
        if key not in paths:
            raise DependencyError(f"config has no paths.{key}")
        path = self._resolve(paths[key])
        if not path.exists():
            raise DependencyError(f"input {key} not found: {path}")
        return path

    def artifact(self, name: str) -> Path:
        return self.out_dir / name

    def require_artifact(self, name: str, producer: str) -> Path:
        path = self.artifact(name)
        if not path.exists():
            raise DependencyError(
                f"artifact {name} is missing; run the '{producer}' stage first"
            )
        return path

    def write_provenance(self, artifact: Path, inputs: list[Path], params: dict) -> None:
        record = {
            "artifact": artifact.name,
            "version": __version__,
            "seed": self.seed,
            "inputs": {p.name: sha256_file(p) for p in sorted(inputs)},
            "params": params,
        }
        dump_json(Path(str(artifact) + ".prov.json"), record)


def stage_verbs(ctx: PipelineContext) -> list[Path]:
    snapshot_path = ctx.input_path("snapshot")
    snap = lexicon.load_snapshot(snapshot_path)
    verbs = lexicon.identify_result_verbs(snap)
    if not verbs:
        raise RuntimeError("snapshot produced no result-verb candidates")
    verbs_path = ctx.artifact("result_verbs.jsonl")
    lexicon.write_result_verbs(verbs_path, verbs)
    index = lexicon.verb_frame_index(verbs)
    index_path = ctx.artifact("frame_index.json")
    dump_json(index_path, {frame: sorted(lemmas) for frame, lemmas in index.items()})
    for path in (verbs_path, index_path):
        ctx.write_provenance(path, [snapshot_path], {"n_verbs": len(verbs)})
    return [verbs_path, index_path]


def stage_extract(ctx: PipelineContext) -> list[Path]:
    corpus_path = ctx.input_path("corpus")
    snapshot_path = ctx.input_path("snapshot")
    verbs_path = ctx.require_artifact("result_verbs.jsonl", "verbs")
    verbs = lexicon.read_result_verbs(verbs_path)
    lemmas = lexicon.sure_lemmas(verbs)
    snap = lexicon.load_snapshot(snapshot_path)

    pool_cfg = ctx.config.get("pool_filter", {})
    extract_cfg = ctx.config.get("extract", {})
    records = list(corpus.read_subtitles(corpus_path))
    kept_videos = corpus.filter_video_pool(
        records,
        lemmas,
        min_verb_types=int(pool_cfg.get("min_verb_types", 15)),
        min_clips_per_verb=int(pool_cfg.get("min_clips_per_verb", 100)),
        top_k_per_task=int(pool_cfg.get("top_k_per_task", 15)),
    )
    pooled = [r for r in records if r.video_id in kept_videos]
    clips = sorted(
        corpus.extract_cae_clips(
            pooled, lemmas, snap.concreteness,
            min_gap_s=float(extract_cfg.get("min_gap_s", 5.0)),
        ),
        key=lambda c: (c.video_id, c.start_s),
    )
    if not clips:
        raise RuntimeError("extraction produced no clips")
    clips_path = ctx.artifact("clips.jsonl")
    corpus.write_clips(clips_path, clips)
    stats_path = ctx.artifact("corpus_stats.json")
    dump_json(stats_path, {
        category: stats.to_dict()
        for category, stats in corpus.corpus_stats(clips).items()
    })
    params = {"n_clips": len(clips), "n_videos_kept": len(kept_videos),
              **pool_cfg, **extract_cfg}
    for path in (clips_path, stats_path):
        ctx.write_provenance(path, [corpus_path, verbs_path, snapshot_path], params)
    return [clips_path, stats_path]


def stage_split(ctx: PipelineContext) -> list[Path]:
    clips_path = ctx.require_artifact("clips.jsonl", "extract")
    index_path = ctx.require_artifact("frame_index.json", "verbs")
    snapshot_path = ctx.input_path("snapshot")
    clips = corpus.read_clips(clips_path)
    with open(index_path, "r", encoding="utf-8") as fh:
        frame_index = {k: set(v) for k, v in json.load(fh).items()}
    snap = lexicon.load_snapshot(snapshot_path)

    split_cfg = ctx.config.get("split", {})
    cfg = split_mod.SplitConfig(
        seed=int(split_cfg.get("seed", ctx.seed)),
        excluded_seen_lemmas=set(snap.kinetics_verbs),
    )
    verb_class = split_mod.assign_verb_classes(frame_index, cfg)
    manifest = split_mod.assign_clip_splits(clips, verb_class, cfg)
    manifest_path = ctx.artifact("manifest.jsonl")
    split_mod.write_manifest(manifest_path, manifest)
    ctx.write_provenance(
        manifest_path, [clips_path, index_path, snapshot_path],
        {"seed": cfg.seed, "n_clips": len(clips)},
    )
    return [manifest_path]


def stage_features(ctx: PipelineContext) -> list[Path]:
    clips_path = ctx.require_artifact("clips.jsonl", "extract")
    clips = corpus.read_clips(clips_path)
    dim = int(ctx.config.get("features", {}).get("dim", 64))
    provider = SyntheticFeatureProvider(dim=dim)
    features_path = ctx.artifact("features.caef")
    n_rows = export_features(
        features_path, [(c.video_id, c.start_s, c.end_s) for c in clips], provider
    )
    ctx.write_provenance(features_path, [clips_path], {"dim": dim, "n_rows": n_rows})
    return [features_path]


def _assemble_items(clips, clip_ids, provider, cfg):
    wanted = set(clip_ids)
    items = []
    for clip in clips:
        if clip.clip_id not in wanted:
            continue
        cf = clip_frames(clip, provider)
        if clip.verb_token_index >= cfg.max_text_len or len(cf) > cfg.max_video_len:
            log.warning("skipping clip %s: exceeds model length limits", clip.clip_id)
            continue
        items.append((clip, cf))
    return items


def stage_pretrain(ctx: PipelineContext) -> list[Path]:
    import torch

    torch.set_num_threads(1)
    clips_path = ctx.require_artifact("clips.jsonl", "extract")
    manifest_path = ctx.require_artifact("manifest.jsonl", "split")
    features_path = ctx.require_artifact("features.caef", "features")

    clips = corpus.read_clips(clips_path)
    manifest = split_mod.read_manifest(manifest_path)
    provider = FileFeatureProvider(features_path)

    model_cfg_dict = dict(ctx.config.get("model", {}))
    pretrain_cfg = ctx.config.get("pretrain", {})
    task_mode = model_cfg_dict.get("task_mode", "MULTI")

    train_ids = manifest.clips_in("train")
    val_ids = manifest.clips_in("val")
    vocab = Vocab.build(
        " ".join(t.surface for t in clip.tokens)
        for clip in clips if clip.clip_id in train_ids
    )
    model_cfg_dict.setdefault("feature_dim", provider.dim)
    if model_cfg_dict["feature_dim"] != provider.dim:
        raise RuntimeError(
            f"model feature_dim {model_cfg_dict['feature_dim']} does not match "
            f"the feature file dimension {provider.dim}"
        )
    model_cfg_dict["vocab_size"] = len(vocab)
    model_cfg_dict.setdefault("model_seed", ctx.seed)
    model_cfg_dict["task_mode"] = task_mode
    cfg = ModelConfig.from_dict(model_cfg_dict)

    train_items = _assemble_items(clips, train_ids, provider, cfg)
    val_items = _assemble_items(clips, val_ids, provider, cfg)
    if not train_items:
        raise RuntimeError("no train items after assembly")

    train_dir = ctx.out_dir / "train"
    trainer = Trainer(
        state=new_state(cfg, vocab),
        train_items=train_items,
        vocab=vocab,
        seed=ctx.seed,
        batch_size=int(pretrain_cfg.get("batch_size", 8)),
        val_items=val_items,
        out_dir=train_dir,
    )
    eval_every = int(pretrain_cfg.get("eval_every", 0))
    history = trainer.run(int(pretrain_cfg.get("steps", 50)), eval_every=eval_every)
    final_metrics = trainer.evaluate()
    ckpt_path = ctx.artifact("model.ckpt")
    best = train_dir / "best.ckpt"
    if eval_every and best.exists():
        # keep the checkpoint with the best validation accuracy
        save_checkpoint(load_checkpoint(best), ckpt_path)
    else:
        save_checkpoint(trainer.state, ckpt_path)
    log_path = ctx.artifact("training_log.json")
    dump_json(log_path, {
        "history": [record.__dict__ for record in history],
        "final_metrics": final_metrics,
    })
    params = {"task_mode": task_mode, "steps": len(history)}
    for path in (ckpt_path, Path(str(ckpt_path) + ".json"), log_path):
        ctx.write_provenance(path, [clips_path, manifest_path, features_path], params)
    return [ckpt_path, Path(str(ckpt_path) + ".json"), log_path]


def stage_eval(ctx: PipelineContext) -> list[Path]:
    import torch

    torch.set_num_threads(1)
    ckpt_path = ctx.require_artifact("model.ckpt", "pretrain")
    clips_path = ctx.require_artifact("clips.jsonl", "extract")
    manifest_path = ctx.require_artifact("manifest.jsonl", "split")
    features_path = ctx.require_artifact("features.caef", "features")
    index_path = ctx.require_artifact("frame_index.json", "verbs")
    snapshot_path = ctx.input_path("snapshot")

    state = load_checkpoint(ckpt_path)
    clips = corpus.read_clips(clips_path)
    manifest = split_mod.read_manifest(manifest_path)
    provider = FileFeatureProvider(features_path)
    with open(index_path, "r", encoding="utf-8") as fh:
        frame_index = {k: set(v) for k, v in json.load(fh).items()}
    hypernyms = lexicon.load_snapshot(snapshot_path).hypernym_map()

    eval_split = str(ctx.config.get("eval", {}).get("split", "test"))
    items = _assemble_items(clips, manifest.clips_in(eval_split), provider, state.config)
    if not items:
        raise RuntimeError(f"no items in evaluation split {eval_split!r}")

    # predicted tokens are compared against the verb lemma; corpora whose verb
    # surfaces differ from their lemmas will deflate these accuracies
    verb_predictions = predict_verb_tokens(state, items, state.vocab)
    predictions = [
        (clip.result_verb, predicted)
        for (clip, _), (_ref, predicted) in zip(items, verb_predictions)
    ]
    map_result = evalmetrics.map_metrics(predictions, manifest.verb_class)

    vectors = mem_instance_correctness(
        state, items, state.vocab, seed=stable_seed(ctx.seed, "eval-mem")
    )
    mep_result = evalmetrics.mep_metrics(vectors)

    false_unseen = [
        (ref, pred) for ref, pred in predictions
        if ref != pred and manifest.verb_class.get(ref) == "unseen"
    ]
    generalization = evalmetrics.generalization_analysis(
        false_unseen, frame_index, hypernyms
    )

    report = evalmetrics.EvalReport(
        map_metrics=map_result,
        mep_accuracy=mep_result,
        generalization=generalization,
    )
    report_path = ctx.artifact("eval_report.json")
    dump_json(report_path, report.to_dict())
    ctx.artifact("eval_report.txt").write_text(report.render(), encoding="utf-8")
    predictions_path = ctx.artifact("eval_predictions.jsonl")
    write_jsonl(predictions_path, [
        {"clip_id": clip.clip_id, "reference": ref, "predicted": pred,
         "mem_frames_correct": vec}
        for (clip, _), (ref, pred), vec in zip(items, predictions, vectors)
    ])
    params = {"split": eval_split, "n_items": len(items)}
    for path in (report_path, predictions_path):
        ctx.write_provenance(
            path,
            [ckpt_path, clips_path, manifest_path, features_path, index_path],
            params,
        )
    return [report_path, predictions_path]


def stage_probe(ctx: PipelineContext) -> list[Path]:
    import torch

    torch.set_num_threads(1)
    ckpt_path = ctx.require_artifact("model.ckpt", "pretrain")
    probe_path = ctx.input_path("probe")
    state = load_checkpoint(ckpt_path)

    items = [
        evalmetrics.ProbeItem.from_dict(json.loads(line))
        for line in probe_path.read_text(encoding="utf-8").splitlines() if line.strip()
    ]
    scorer = MamCandidateScorer(state)
    choices = evalmetrics.probe_cloze(items, scorer)
    robustness = evalmetrics.probe_robustness(choices)

    choices_path = ctx.artifact("probe_choices.jsonl")
    write_jsonl(choices_path, [
        {"item": c.item.to_dict(), "chosen_index": c.chosen_index,
         "probabilities": [round(p, 6) for p in c.probabilities]}
        for c in choices
    ])
    accuracy = 100.0 * sum(c.correct for c in choices) / max(len(choices), 1)
    report_path = ctx.artifact("probe_report.json")
    dump_json(report_path, {
        "n_items": len(choices),
        "accuracy": round(accuracy, 4),
        **robustness.to_dict(),
    })
    rendered = evalmetrics.EvalReport(probe=robustness.to_dict()).render()
    ctx.artifact("probe_report.txt").write_text(
        f"Probe items: {len(choices)}\nOverall accuracy: {accuracy:.1f}%\n\n" + rendered,
        encoding="utf-8",
    )
    for path in (choices_path, report_path):
        ctx.write_provenance(path, [ckpt_path, probe_path], {"n_items": len(items)})
    return [choices_path, report_path]


STAGE_FUNCS = {
    "verbs": stage_verbs,
    "extract": stage_extract,
    "split": stage_split,
    "features": stage_features,
    "pretrain": stage_pretrain,
    "eval": stage_eval,
    "probe": stage_probe,
}


def run_pipeline(config_path: str, stages: list[str], seed: int | None) -> int:
    config_file = Path(config_path)
    if not config_file.exists():
        print(f"error: config not found: {config_file}", file=sys.stderr)
        return EXIT_USAGE
    with open(config_file, "r", encoding="utf-8") as fh:
        config = json.load(fh)
    ctx = PipelineContext(config, config_file.parent, seed)

    for stage in stages:
        func = STAGE_FUNCS[stage]
        planned: list[Path] = []
        try:
            log.info("running stage %s", stage)
            planned = func(ctx)
        except DependencyError as exc:
            print(f"error: stage {stage}: {exc}", file=sys.stderr)
            return EXIT_USAGE
        except Exception as exc:  # noqa: BLE001 - quarantine then report
            for path in _stage_outputs(ctx, stage):
                if path.exists():
                    path.rename(Path(str(path) + ".quarantine"))
            print(f"error: stage {stage} failed: {exc}", file=sys.stderr)
            return EXIT_STAGE_FAILURE
        for path in planned:
            log.info("stage %s wrote %s", stage, path)
    return EXIT_OK


def _stage_outputs(ctx: PipelineContext, stage: str) -> list[Path]:
    names = {
        "verbs": ["result_verbs.jsonl", "frame_index.json"],
        "extract": ["clips.jsonl", "corpus_stats.json"],
        "split": ["manifest.jsonl"],
        "features": ["features.caef"],
        "pretrain": ["model.ckpt", "model.ckpt.json", "training_log.json"],
        "eval": ["eval_report.json", "eval_report.txt", "eval_predictions.jsonl"],
        "probe": ["probe_choices.jsonl", "probe_report.json", "probe_report.txt"],
    }[stage]
    return [ctx.artifact(n) for n in names]


def _cmd_run(args) -> int:
    stages = [s.strip() for s in args.stages.split(",") if s.strip()]
    unknown = [s for s in stages if s not in STAGES]
    if unknown:
        print(f"error: unknown stages {unknown}; valid: {','.join(STAGES)}",
              file=sys.stderr)
        return EXIT_USAGE
    ordered = [s for s in STAGES if s in stages]
    return run_pipeline(args.config, ordered, args.seed)


def _cmd_demo(args) -> int:
    written = demo.write_demo_fixtures(args.out)
    for path in written:
        print(path)
    return EXIT_OK


def _cmd_extract(args) -> int:
    verbs = lexicon.read_result_verbs(args.verbs)
    lemmas = lexicon.sure_lemmas(verbs)
    with open(args.concreteness, "r", encoding="utf-8") as fh:
        concreteness = {k: float(v) for k, v in json.load(fh).items()}
    records = corpus.read_subtitles(args.pool)
    clips = sorted(
        corpus.extract_cae_clips(records, lemmas, concreteness, min_gap_s=args.min_gap),
        key=lambda c: (c.video_id, c.start_s),
    )
    corpus.write_clips(args.out, clips)
    print(f"wrote {len(clips)} clips to {args.out}")
    return EXIT_OK


def _cmd_split(args) -> int:
    clips = corpus.read_clips(args.clips)
    with open(args.frames, "r", encoding="utf-8") as fh:
        frame_index = {k: set(v) for k, v in json.load(fh).items()}
    excluded: set[str] = set()
    if args.kinetics:
        with open(args.kinetics, "r", encoding="utf-8") as fh:
            excluded = set(json.load(fh))
    cfg = split_mod.SplitConfig(seed=args.seed, excluded_seen_lemmas=excluded)
    verb_class = split_mod.assign_verb_classes(frame_index, cfg)
    manifest = split_mod.assign_clip_splits(clips, verb_class, cfg)
    split_mod.write_manifest(args.out, manifest)
    print(f"wrote manifest for {len(clips)} clips to {args.out}")
    return EXIT_OK


def _cmd_features(args) -> int:
    clips = corpus.read_clips(args.clips)
    provider = SyntheticFeatureProvider(dim=args.dim)
    n = export_features(args.out, [(c.video_id, c.start_s, c.end_s) for c in clips],
                        provider)
    print(f"wrote {n} feature rows to {args.out}")
    return EXIT_OK


def _cmd_pretrain(args) -> int:
    import torch

    torch.set_num_threads(1)
    with open(args.config, "r", encoding="utf-8") as fh:
        model_cfg_dict = json.load(fh)
    clips = corpus.read_clips(args.clips)
    manifest = split_mod.read_manifest(Path(args.data))
    provider = FileFeatureProvider(args.features)

    train_ids = manifest.clips_in("train")
    vocab = Vocab.build(
        " ".join(t.surface for t in clip.tokens)
        for clip in clips if clip.clip_id in train_ids
    )
    model_cfg_dict.setdefault("feature_dim", provider.dim)
    model_cfg_dict["vocab_size"] = len(vocab)
    model_cfg_dict["task_mode"] = args.task.upper()
    cfg = ModelConfig.from_dict(model_cfg_dict)

    train_items = _assemble_items(clips, train_ids, provider, cfg)
    val_items = _assemble_items(clips, manifest.clips_in("val"), provider, cfg)
    trainer = Trainer(
        state=new_state(cfg, vocab), train_items=train_items, vocab=vocab,
        seed=args.seed, batch_size=args.batch_size, val_items=val_items,
    )
    trainer.run(args.steps)
    save_checkpoint(trainer.state, args.out)
    print(f"wrote checkpoint to {args.out}")
    return EXIT_OK


def _read_jsonl_file(path: str) -> list[dict]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out


def _cmd_eval(args) -> int:
    records = _read_jsonl_file(args.pred)
    if args.metric == "map":
        manifest = split_mod.read_manifest(Path(args.manifest))
        predictions = [(r["reference"], r["predicted"]) for r in records]
        report = evalmetrics.EvalReport(
            map_metrics=evalmetrics.map_metrics(predictions, manifest.verb_class)
        )
    elif args.metric == "mep":
        vectors = [r["correct"] for r in records]
        report = evalmetrics.EvalReport(mep_accuracy=evalmetrics.mep_metrics(vectors))
    else:  # probe
        choices = [
            evalmetrics.ProbeChoice(
                item=evalmetrics.ProbeItem.from_dict(r["item"]),
                chosen_index=int(r["chosen_index"]),
                probabilities=list(r.get("probabilities", [0.25] * 4)),
            )
            for r in records
        ]
        robustness = evalmetrics.probe_robustness(choices)
        report = evalmetrics.EvalReport(probe=robustness.to_dict())
    dump_json(args.out, report.to_dict())
    Path(str(args.out) + ".txt").write_text(report.render(), encoding="utf-8")
    print(f"wrote report to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cae",
        description="Causal action-effect pipeline: mine verbs, extract clips, "
                    "split, pretrain, and evaluate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run pipeline stages from a config file")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--stages", default=",".join(STAGES))
    p_run.add_argument("--seed", type=int, default=None)
    p_run.set_defaults(func=_cmd_run)

    p_demo = sub.add_parser("demo", help="write demo fixture files")
    p_demo.add_argument("--out", required=True)
    p_demo.set_defaults(func=_cmd_demo)

    p_extract = sub.add_parser("extract", help="extract clips from subtitles")
    p_extract.add_argument("--pool", required=True)
    p_extract.add_argument("--verbs", required=True)
    p_extract.add_argument("--concreteness", required=True,
                           help="JSON map of lemma to rating")
    p_extract.add_argument("--min-gap", type=float, default=5.0)
    p_extract.add_argument("--out", required=True)
    p_extract.set_defaults(func=_cmd_extract)

    p_split = sub.add_parser("split", help="build the zero-shot split manifest")
    p_split.add_argument("--clips", required=True)
    p_split.add_argument("--frames", required=True, help="frame index JSON")
    p_split.add_argument("--seed", type=int, default=42)
    p_split.add_argument("--kinetics", default=None,
                         help="JSON list of lemmas excluded from seen classes")
    p_split.add_argument("--out", required=True)
    p_split.set_defaults(func=_cmd_split)

    p_features = sub.add_parser("features", help="write synthetic features (CAEF)")
    p_features.add_argument("--clips", required=True)
    p_features.add_argument("--dim", type=int, default=64)
    p_features.add_argument("--out", required=True)
    p_features.set_defaults(func=_cmd_features)

    p_pretrain = sub.add_parser("pretrain", help="train a model on a manifest")
    p_pretrain.add_argument("--task", required=True, choices=["mam", "mem", "multi"])
    p_pretrain.add_argument("--config", required=True, help="model config JSON")
    p_pretrain.add_argument("--data", required=True, help="split manifest")
    p_pretrain.add_argument("--features", required=True, help="CAEF feature file")
    p_pretrain.add_argument("--clips", required=True, help="clip records JSONL")
    p_pretrain.add_argument("--steps", type=int, default=100)
    p_pretrain.add_argument("--batch-size", type=int, default=8)
    p_pretrain.add_argument("--seed", type=int, default=42)
    p_pretrain.add_argument("--out", required=True)
    p_pretrain.set_defaults(func=_cmd_pretrain)

    p_eval = sub.add_parser("eval", help="compute metrics from prediction files")
    p_eval.add_argument("metric", choices=["map", "mep", "probe"])
    p_eval.add_argument("--pred", required=True)
    p_eval.add_argument("--manifest", default=None)
    p_eval.add_argument("--out", required=True)
    p_eval.set_defaults(func=_cmd_eval)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if args.command == "eval" and args.metric == "map" and not args.manifest:
        print("error: eval map requires --manifest", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE_FAILURE


if __name__ == "__main__":
    sys.exit(main())
