import math
import random

import pytest

from cae.split import (
    SplitConfig,
    assign_clip_splits,
    assign_verb_classes,
    read_manifest,
    write_manifest,
)
from conftest import make_clip


def clips_for(verb, n, videos=4, category="food", obj=None):
    clips = []
    for i in range(n):
        clips.append(make_clip(
            f"{verb}-vid{i % videos}", 100.0 * (i // videos), verb,
            obj or f"{verb}-obj", category=category))
    return clips


class TestAssignVerbClasses:
    def test_five_lemmas_give_four_seen_one_unseen(self):
        index = {"Cutting": {"chop", "cut", "slice", "mince", "carve"}}
        classes = assign_verb_classes(index, SplitConfig(seed=42))
        assert sorted(classes.values()).count("seen") == 4
        assert sorted(classes.values()).count("unseen") == 1

    def test_kinetics_lemma_forced_unseen(self):
        index = {"Reshaping": {f"verb{i}" for i in range(10)}}
        base = assign_verb_classes(index, SplitConfig(seed=42))
        seen_lemma = next(lemma for lemma, c in base.items() if c == "seen")
        forced = assign_verb_classes(
            index, SplitConfig(seed=42, excluded_seen_lemmas={seen_lemma}))
        assert forced[seen_lemma] == "unseen"
        others = {k: v for k, v in base.items() if k != seen_lemma}
        assert others == {k: v for k, v in forced.items() if k != seen_lemma}

    def test_deterministic(self):
        index = {"Apply_heat": {"roast", "fry", "bake", "grill", "simmer"},
                 "Cutting": {"chop", "cut", "slice"}}
        a = assign_verb_classes(index, SplitConfig(seed=42))
        b = assign_verb_classes(index, SplitConfig(seed=42))
        assert a == b

    def test_multi_frame_lemma_assigned_once(self):
        index = {"Cutting": {"chop"}, "Cause_harm": {"chop"}}
        classes = assign_verb_classes(index, SplitConfig(seed=42))
        assert list(classes) == ["chop"]

    def test_adding_a_frame_does_not_perturb_others(self):
        index = {"Cutting": {"chop", "cut", "slice", "mince", "carve"}}
        before = assign_verb_classes(index, SplitConfig(seed=42))
        index["Placing"] = {"put", "place", "insert", "set", "rest"}
        after = assign_verb_classes(index, SplitConfig(seed=42))
        assert {k: after[k] for k in before} == before

    def test_empty_index(self):
        assert assign_verb_classes({}, SplitConfig()) == {}

    def test_ceil_rule_per_frame(self):
        for n in (1, 2, 3, 4, 5, 7, 10):
            index = {"F": {f"v{i}" for i in range(n)}}
            classes = assign_verb_classes(index, SplitConfig(seed=7))
            n_seen = sum(1 for c in classes.values() if c == "seen")
            assert n_seen == math.ceil(0.8 * n)


class TestAssignClipSplits:
    def test_seen_verb_100_clips_80_10_10(self):
        clips = clips_for("chop", 100)
        manifest = assign_clip_splits(clips, {"chop": "seen"}, SplitConfig(seed=42))
        counts = {s: 0 for s in ("train", "val", "test")}
        for split in manifest.clip_assignment.values():
            counts[split] += 1
        assert counts == {"train": 80, "val": 10, "test": 10}

    def test_unseen_verb_10_clips_0_5_5(self):
        clips = clips_for("mince", 10)
        manifest = assign_clip_splits(clips, {"mince": "unseen"}, SplitConfig(seed=42))
        counts = {s: 0 for s in ("train", "val", "test")}
        for split in manifest.clip_assignment.values():
            counts[split] += 1
        assert counts == {"train": 0, "val": 5, "test": 5}

    def test_verb_without_class_is_hard_error(self):
        clips = clips_for("chop", 3) + clips_for("mystery", 2)
        with pytest.raises(ValueError, match="mystery"):
            assign_clip_splits(clips, {"chop": "seen"}, SplitConfig())

    def test_partition_and_no_unseen_in_train(self):
        rng = random.Random(5)
        clips, classes = [], {}
        for v in range(12):
            verb = f"verb{v}"
            classes[verb] = "seen" if v % 3 else "unseen"
            clips.extend(clips_for(verb, rng.randrange(4, 40)))
        manifest = assign_clip_splits(clips, classes, SplitConfig(seed=42))
        assert set(manifest.clip_assignment) == {c.clip_id for c in clips}
        for clip in clips:
            if classes[clip.result_verb] == "unseen":
                assert manifest.clip_assignment[clip.clip_id] != "train"

    def test_ratio_tolerance_for_seen_verbs(self):
        for n in range(10, 60, 7):
            clips = clips_for("bake", n)
            manifest = assign_clip_splits(clips, {"bake": "seen"}, SplitConfig(seed=42))
            counts = {s: 0 for s in ("train", "val", "test")}
            for split in manifest.clip_assignment.values():
                counts[split] += 1
            for share, split in ((0.8, "train"), (0.1, "val"), (0.1, "test")):
                assert abs(counts[split] - share * n) <= 1.0, (n, counts)

    def test_manifest_bytes_identical_across_runs(self, tmp_path):
        clips = clips_for("chop", 23) + clips_for("mince", 8)
        classes = {"chop": "seen", "mince": "unseen"}
        paths = []
        for run in (0, 1):
            manifest = assign_clip_splits(clips, classes, SplitConfig(seed=42))
            path = tmp_path / f"manifest{run}.jsonl"
            write_manifest(path, manifest)
            paths.append(path.read_bytes())
        assert paths[0] == paths[1]

    def test_manifest_independent_of_clip_order(self):
        clips = clips_for("chop", 23) + clips_for("mince", 8)
        classes = {"chop": "seen", "mince": "unseen"}
        a = assign_clip_splits(clips, classes, SplitConfig(seed=42))
        b = assign_clip_splits(list(reversed(clips)), classes, SplitConfig(seed=42))
        assert a.clip_assignment == b.clip_assignment

    def test_manifest_round_trip(self, tmp_path):
        clips = clips_for("chop", 12) + clips_for("mince", 4)
        classes = {"chop": "seen", "mince": "unseen"}
        manifest = assign_clip_splits(clips, classes, SplitConfig(seed=42))
        path = tmp_path / "manifest.jsonl"
        write_manifest(path, manifest)
        loaded = read_manifest(path)
        assert loaded.clip_assignment == manifest.clip_assignment
        assert loaded.verb_class == manifest.verb_class
        assert loaded.stats == manifest.stats

    def test_zero_shot_action_percentage_hand_count(self):
        # 11 seen verbs with 10 clips each (8/1/1) and 9 unseen verbs with
        # 2 clips each (0/1/1): the test split holds 20 items of 20 distinct
        # verbs, 9 of them unseen-only, i.e. 45.0 % zero-shot actions.
        clips, classes = [], {}
        for v in range(11):
            verb = f"seen{v}"
            classes[verb] = "seen"
            clips.extend(clips_for(verb, 10))
        for v in range(9):
            verb = f"unseen{v}"
            classes[verb] = "unseen"
            clips.extend(clips_for(verb, 2))
        manifest = assign_clip_splits(clips, classes, SplitConfig(seed=42))
        assert manifest.stats["n_clips"]["test"] == 20
        assert manifest.stats["pct_zero_shot_test"]["actions"] == 45.0
        assert manifest.stats["pct_zero_shot_val"]["actions"] == 45.0

    def test_zero_shot_video_and_object_stats(self):
        # seen verb: 12 clips across 4 videos sharing one object; unseen verb:
        # 2 clips on fresh videos with a fresh object. Every unseen-verb item
        # is zero-shot in video, action, and object.
        clips = clips_for("chop", 12, videos=4, obj="carrot")
        clips += clips_for("mince", 2, videos=2, obj="shallot")
        classes = {"chop": "seen", "mince": "unseen"}
        manifest = assign_clip_splits(clips, classes, SplitConfig(seed=42))
        for split in ("val", "test"):
            stats = manifest.stats[f"pct_zero_shot_{split}"]
            n = manifest.stats["n_clips"][split]
            assert stats["actions"] == pytest.approx(100.0 / n, abs=5e-4)
            assert stats["objects"] == pytest.approx(100.0 / n, abs=5e-4)

    def test_val_test_stratified_by_category(self):
        clips = []
        for i, category in enumerate(("food", "cars")):
            for j in range(10):
                clips.append(make_clip(f"v-{category}-{j}", 0.0, "mince", "ice",
                                       category=category))
        manifest = assign_clip_splits(clips, {"mince": "unseen"}, SplitConfig(seed=42))
        for category in ("food", "cars"):
            for split in ("val", "test"):
                n = sum(
                    1 for c in clips
                    if c.category == category
                    and manifest.clip_assignment[c.clip_id] == split
                )
                assert n == 5


class TestSplitConfig:
    def test_ratio_must_sum_to_one(self):
        with pytest.raises(ValueError):
            SplitConfig(seen_clip_ratio=(0.7, 0.2, 0.2))

    def test_fraction_bounds(self):
        with pytest.raises(ValueError):
            SplitConfig(seen_fraction_per_frame=1.2)


class TestRatioToleranceStress:
    def test_seen_ratio_within_one_clip_across_sizes_and_seeds(self):
        for seed in (0, 1, 2, 3):
            for n in range(10, 200, 13):
                clips = clips_for("bake", n)
                manifest = assign_clip_splits(
                    clips, {"bake": "seen"}, SplitConfig(seed=seed))
                counts = {"train": 0, "val": 0, "test": 0}
                for split in manifest.clip_assignment.values():
                    counts[split] += 1
                assert abs(counts["train"] - 0.8 * n) <= 1.0, (seed, n, counts)
                assert abs(counts["val"] - 0.1 * n) <= 1.0, (seed, n, counts)
                assert abs(counts["test"] - 0.1 * n) <= 1.0, (seed, n, counts)

    def test_unseen_within_one_clip_any_parity(self):
        for n in (7, 10, 13, 24):
            clips = clips_for("mince", n)
            manifest = assign_clip_splits(
                clips, {"mince": "unseen"}, SplitConfig(seed=3))
            counts = {"train": 0, "val": 0, "test": 0}
            for split in manifest.clip_assignment.values():
                counts[split] += 1
            assert counts["train"] == 0
            assert abs(counts["val"] - counts["test"]) <= 1
