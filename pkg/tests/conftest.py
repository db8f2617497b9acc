import json
import random

import pytest

from cae.corpus import ClipRecord, SubtitleRecord, Token


def vn(lemma, sense_id, roles, restrictions=None):
    return {
        "kind": "verbnet",
        "lemma": lemma,
        "sense_id": sense_id,
        "thematic_roles": roles,
        "selectional_restrictions": restrictions or {},
    }


def ims(lemma, roles):
    return {"kind": "imsitu", "lemma": lemma, "roles": roles}


def fn(lemma, frames, frame_elements=None):
    return {
        "kind": "framenet",
        "lemma": lemma,
        "frames": frames,
        "frame_elements": frame_elements or {},
    }


def wn(lemma, hypernyms):
    return {"kind": "wordnet", "lemma": lemma, "hypernyms": hypernyms}


def conc(lemma, rating):
    return {"kind": "concreteness", "lemma": lemma, "rating": rating}


def kin(lemma):
    return {"kind": "kinetics", "lemma": lemma}


APR = ["Agent", "Patient", "Result"]
CONCRETE = {"Patient": ["concrete"]}
SOLID = {"Patient": ["solid"]}


def table_snapshot_records():
    """Snapshot mirroring the published sure/unsure example rows.

    Sure: attach, bend, chop, stretch, tie, split, grill, simmer.
    Unsure: block, activate, carve, sniff, warm.
    """
    return [
        # -- sure cases: visualness and effect-causing both established
        vn("attach", "attach-22.3-2-1", APR),
        ims("attach", ["agent", "item"]),
        fn("attach", ["Attaching"], {"Attaching": ["Result", "Goal"]}),
        vn("bend", "bend-45.2", APR, CONCRETE),
        fn("bend", ["Reshaping"], {"Reshaping": ["Result", "Undergoer"]}),
        vn("chop", "chop-18.2", APR),
        vn("chop", "chop-21.2-2", ["Agent", "Patient", "Instrument"]),
        ims("chop", ["agent", "item"]),
        fn("chop", ["Cutting"], {"Cutting": ["Result", "Pieces"]}),
        vn("stretch", "stretch-45.2", APR, SOLID),
        ims("stretch", ["agent", "item"]),
        fn("stretch", ["Reshaping"]),
        vn("tie", "tie-22.4", APR),
        vn("tie", "tie-22.1-2", ["Agent", "Patient", "Co-Patient"]),
        ims("tie", ["agent", "item"]),
        fn("tie", ["Attaching"]),
        vn("split", "break-45.1", APR),
        ims("split", ["agent", "item"]),
        fn("split", ["Cause_to_fragment"], {"Cause_to_fragment": ["Result"]}),
        vn("grill", "grill-45.3", APR, CONCRETE),
        vn("grill", "grill-26.3-2", ["Agent", "Patient", "Beneficiary"]),
        fn("grill", ["Apply_heat"], {"Apply_heat": ["Result", "Food"]}),
        vn("simmer", "simmer-45.3", APR, CONCRETE),
        fn("simmer", ["Apply_heat"]),
        # -- unsure cases: exactly one property established
        ims("block", ["agent", "blocked"]),
        fn("block", ["Eclipse"], {"Eclipse": ["Obstruction"]}),
        vn("activate", "activate-45.4", APR),
        fn("activate", ["Change_operational_state"],
           {"Change_operational_state": ["Effect", "Device"]}),
        vn("carve", "carve-23.3", ["Agent", "Patient", "Co-Patient"]),
        vn("carve", "carve-21.2-2", ["Agent", "Patient", "Instrument"]),
        ims("carve", ["agent", "item"]),
        fn("carve", ["Cutting"]),
        ims("sniff", ["agent", "item"]),
        vn("warm", "warm-45.4", APR),
        fn("warm", ["Cause_temperature_change"],
           {"Cause_temperature_change": ["Result"]}),
        # -- no positive evidence at all: must not become a candidate
        ims("travel", ["agent", "place"]),
        # -- phrasal verb mined but excluded downstream
        vn("warm up", "warm_up-45.4-1", APR, CONCRETE),
        fn("warm up", ["Cause_temperature_change"]),
        # -- auxiliary resources
        wn("roast", ["cook.v.01"]),
        wn("fry", ["cook.v.01"]),
        wn("put", ["move.v.02"]),
        conc("water", 4.8),
        conc("carrot", 4.9),
        conc("garlic", 4.9),
        conc("time", 2.0),
        kin("stretch"),
        kin("situp"),
    ]


@pytest.fixture
def snapshot_path(tmp_path):
    path = tmp_path / "snapshot.jsonl"
    with open(path, "w", encoding="utf-8") as fh:
        for rec in table_snapshot_records():
            fh.write(json.dumps(rec) + "\n")
    return path


def tok(surface, lemma=None, upos="NOUN", dep="dep"):
    return Token(surface=surface, lemma=lemma or surface, upos=upos, dep_label=dep)


def verb_tok(lemma):
    return tok(lemma, lemma, upos="VERB", dep="ROOT")


def subtitle(video_id, start, end, tokens, category="food", task_id="t0", views=0):
    return SubtitleRecord(
        video_id=video_id,
        category=category,
        start_s=start,
        end_s=end,
        tokens=tokens,
        text=" ".join(t.surface for t in tokens),
        task_id=task_id,
        view_count=views,
    )


def make_clip(video_id, start, verb, obj, category="food", duration=10.0, extra_objects=()):
    tokens = [
        tok("now", "now", upos="ADV", dep="advmod"),
        verb_tok(verb),
        tok("the", "the", upos="DET", dep="det"),
        tok(obj, obj, upos="NOUN", dep="dobj"),
    ]
    return ClipRecord(
        video_id=video_id,
        category=category,
        start_s=start,
        end_s=start + duration,
        result_verb=verb,
        verb_token_index=1,
        objects={obj, *extra_objects},
        tokens=tokens,
    )


@pytest.fixture
def rng():
    return random.Random(42)


def model_setup(
    n_videos=2,
    clips_per_video=2,
    feature_dim=8,
    hidden_dim=8,
    n_heads=2,
    layers=1,
    **cfg_kwargs,
):
    """Tiny clips + matching vocab/config/items for model-level tests."""
    from cae.features import SyntheticFeatureProvider
    from cae.model import ModelConfig, Vocab, clip_frames

    verbs = ["chop", "whip", "cut", "mix"]
    clips = []
    for v in range(n_videos):
        for c in range(clips_per_video):
            verb = verbs[(v * clips_per_video + c) % len(verbs)]
            clips.append(make_clip(f"vid{v}", 40.0 * c + 10.0, verb, f"obj{v}x{c}"))
    provider = SyntheticFeatureProvider(dim=feature_dim)
    items = [(clip, clip_frames(clip, provider)) for clip in clips]
    vocab = Vocab.build([" ".join(t.surface for t in clip.tokens) for clip in clips])
    cfg = ModelConfig(
        vocab_size=len(vocab),
        hidden_dim=hidden_dim,
        feature_dim=feature_dim,
        n_heads=n_heads,
        n_cross_layers=layers,
        n_temporal_layers=layers,
        **cfg_kwargs,
    )
    return cfg, vocab, items
