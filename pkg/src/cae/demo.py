"""Deterministic demo fixtures: a snapshot, a subtitle corpus, and probe items.

The bundled files under fixtures/demo/ were produced by write_demo_fixtures;
regenerating with the same seed reproduces them byte for byte.
"""

from __future__ import annotations

import json
from pathlib import Path

APR = ["Agent", "Patient", "Result"]

DEMO_VERBS = ["chop", "grill", "simmer", "tie", "attach", "split", "stretch", "bend"]
DEMO_OBJECTS = [
    "carrot", "garlic", "onion", "dough", "wire", "rope", "ribbon", "board",
    "steak", "sauce", "fabric", "pipe",
]
FILLER_NOUNS = ["time", "idea"]  # low concreteness: never annotated as objects


def snapshot_records() -> list[dict]:
    records: list[dict] = []

    def vn(lemma, sense, roles, restrictions=None):
        records.append({
            "kind": "verbnet", "lemma": lemma, "sense_id": sense,
            "thematic_roles": roles,
            "selectional_restrictions": restrictions or {},
        })

    def fn(lemma, frames, elements=None):
        records.append({
            "kind": "framenet", "lemma": lemma, "frames": frames,
            "frame_elements": elements or {},
        })

    concrete = {"Patient": ["concrete"]}
    vn("chop", "chop-18.2", APR)
    records.append({"kind": "imsitu", "lemma": "chop", "roles": ["agent", "item"]})
    fn("chop", ["Cutting"], {"Cutting": ["Result"]})
    vn("grill", "grill-45.3", APR, concrete)
    fn("grill", ["Apply_heat"], {"Apply_heat": ["Result"]})
    vn("simmer", "simmer-45.3", APR, concrete)
    fn("simmer", ["Apply_heat"])
    vn("tie", "tie-22.4", APR)
    records.append({"kind": "imsitu", "lemma": "tie", "roles": ["agent", "item"]})
    fn("tie", ["Attaching"], {"Attaching": ["Result"]})
    vn("attach", "attach-22.3-2-1", APR)
    records.append({"kind": "imsitu", "lemma": "attach", "roles": ["agent", "item"]})
    fn("attach", ["Attaching"])
    vn("split", "break-45.1", APR)
    records.append({"kind": "imsitu", "lemma": "split", "roles": ["agent", "item"]})
    fn("split", ["Cause_to_fragment"], {"Cause_to_fragment": ["Result"]})
    vn("stretch", "stretch-45.2", APR, concrete)
    fn("stretch", ["Reshaping"], {"Reshaping": ["Result"]})
    vn("bend", "bend-45.2", APR, concrete)
    fn("bend", ["Reshaping"])
    # phrasal verb: mined, flagged, excluded from extraction
    vn("warm up", "warm_up-45.4-1", APR, concrete)
    fn("warm up", ["Cause_temperature_change"],
       {"Cause_temperature_change": ["Result"]})

    for lemma, hypernyms in {
        "chop": ["separate.v.01"], "split": ["separate.v.01"],
        "grill": ["cook.v.01"], "simmer": ["cook.v.01"],
        "tie": ["fasten.v.01"], "attach": ["fasten.v.01"],
        "stretch": ["change_shape.v.01"], "bend": ["change_shape.v.01"],
    }.items():
        records.append({"kind": "wordnet", "lemma": lemma, "hypernyms": hypernyms})

    for noun in DEMO_OBJECTS:
        records.append({"kind": "concreteness", "lemma": noun, "rating": 4.6})
    records.append({"kind": "concreteness", "lemma": "time", "rating": 2.0})
    records.append({"kind": "concreteness", "lemma": "idea", "rating": 1.6})
    # stretch overlaps the video-backbone training verbs: forced unseen
    records.append({"kind": "kinetics", "lemma": "stretch"})
    records.append({"kind": "kinetics", "lemma": "situp"})
    return records


def _token(surface, lemma, upos, dep):
    return {"surface": surface, "lemma": lemma, "upos": upos, "dep_label": dep}


def subtitle_records() -> list[dict]:
    records: list[dict] = []
    video_index = 0
    for v, verb in enumerate(DEMO_VERBS):
        category = "food" if v % 2 == 0 else "hobbies"
        for c in range(10):
            if c % 5 == 0:
                video_index += 1
            video_id = f"demo-vid-{video_index:03d}"
            start = 40.0 * (c % 5)
            obj = DEMO_OBJECTS[(v * 3 + c) % len(DEMO_OBJECTS)]
            filler = FILLER_NOUNS[c % len(FILLER_NOUNS)]
            tokens = [
                _token("now", "now", "ADV", "advmod"),
                _token(verb, verb, "VERB", "ROOT"),
                _token("the", "the", "DET", "det"),
                _token(obj, obj, "NOUN", "dobj"),
                _token("with", "with", "ADP", "prep"),
                _token(filler, filler, "NOUN", "pobj"),
            ]
            records.append({
                "video_id": video_id,
                "category": category,
                "task_id": f"task-{v}",
                "view_count": 100 + c,
                "start_s": start,
                "end_s": start + 8.0 + (c % 3) * 2.0,
                "text": " ".join(t["surface"] for t in tokens),
                "tokens": tokens,
            })
    # rejection exercises: double verb, adjacency, phrasal
    records.append({
        "video_id": "demo-vid-001", "category": "food", "task_id": "task-0",
        "view_count": 1, "start_s": 200.0, "end_s": 208.0,
        "text": "chop and split it",
        "tokens": [
            _token("chop", "chop", "VERB", "ROOT"),
            _token("and", "and", "CCONJ", "cc"),
            _token("split", "split", "VERB", "conj"),
            _token("it", "it", "PRON", "dobj"),
        ],
    })
    records.append({
        "video_id": "demo-vid-001", "category": "food", "task_id": "task-0",
        "view_count": 1, "start_s": 2.0, "end_s": 9.0,
        "text": "chop the onion",
        "tokens": [
            _token("chop", "chop", "VERB", "ROOT"),
            _token("the", "the", "DET", "det"),
            _token("onion", "onion", "NOUN", "dobj"),
        ],
    })
    records.append({
        "video_id": "demo-vid-002", "category": "food", "task_id": "task-0",
        "view_count": 1, "start_s": 300.0, "end_s": 306.0,
        "text": "warm up the sauce",
        "tokens": [
            _token("warm_up", "warm_up", "VERB", "ROOT"),
            _token("the", "the", "DET", "det"),
            _token("sauce", "sauce", "NOUN", "dobj"),
        ],
    })
    records.sort(key=lambda r: (r["video_id"], r["start_s"]))
    return records


def probe_records() -> list[dict]:
    groups = [
        ("chopable", "chop", ["carrot", "wire", "rope", "board"], 0),
        ("tieable", "tie", ["pipe", "rope", "steak", "dough"], 1),
        ("grillable", "grill", ["onion", "fabric", "steak", "ribbon"], 2),
        ("bendable", "bend", ["sauce", "garlic", "dough", "wire"], 3),
    ]
    items = []
    for group, verb, candidates, answer_index in groups:
        items.append({
            "template": f"now {verb} the [MASK]",
            "candidates": candidates,
            "answer_index": answer_index,
            "affordance_group": group,
            "polarity": "original",
            "answer_position": answer_index + 1,
        })
        inverse = list(reversed(candidates))
        items.append({
            "template": f"never {verb} the [MASK]",
            "candidates": inverse,
            "answer_index": 3 - answer_index,
            "affordance_group": group,
            "polarity": "inverse",
            "answer_position": 3 - answer_index + 1,
        })
    return items


def default_pipeline_config(out_dir: str = "demo-out") -> dict:
    return {
        "seed": 42,
        "paths": {
            "snapshot": "snapshot.jsonl",
            "corpus": "subtitles.jsonl",
            "probe": "probe.jsonl",
            "out_dir": out_dir,
        },
        "pool_filter": {"min_verb_types": 0, "min_clips_per_verb": 0,
                        "top_k_per_task": 15},
        "extract": {"min_gap_s": 5.0},
        "split": {"seed": 42},
        "features": {"dim": 16},
        "model": {
            "hidden_dim": 16,
            "n_cross_layers": 1,
            "n_temporal_layers": 1,
            "n_heads": 2,
            "max_text_len": 16,
            "max_video_len": 12,
            "feature_dim": 16,
            "candidate_cap": 16,
            "lr": 2e-3,
            "warmup_steps": 5,
            "grad_accum": 1,
            "task_mode": "MULTI",
            "masking_strategy": "verb_random_joint",
            "neg_sampling": "video_based",
        },
        "pretrain": {"steps": 160, "batch_size": 8, "eval_every": 40},
        "eval": {"split": "test"},
    }


def write_demo_fixtures(directory: str | Path) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, records in (
        ("snapshot.jsonl", snapshot_records()),
        ("subtitles.jsonl", subtitle_records()),
        ("probe.jsonl", probe_records()),
    ):
        path = directory / name
        with open(path, "w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(json.dumps(rec, sort_keys=True, separators=(",", ":")))
                fh.write("\n")
        written.append(path)
    config_path = directory / "config.json"
    with open(config_path, "w", encoding="utf-8") as fh:
        json.dump(default_pipeline_config(), fh, sort_keys=True, indent=2)
        fh.write("\n")
    written.append(config_path)
    return written
