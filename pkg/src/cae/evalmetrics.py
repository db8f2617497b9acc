"""Intrinsic metrics, generalization analysis, and cloze-style probing.

Action prediction is scored with macro accuracy over seen/unseen verb
classes, their harmonic mean, and micro accuracy. Effect prediction uses
all-frames-per-instance micro accuracy. False predictions on unseen classes
are analyzed for shared frames and co-hyponymy. The probing harness scores
four named candidates at a mask slot and reports per-position accuracy plus
original/inverse template deltas.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Protocol, Sequence

log = logging.getLogger(__name__)

MASK_SLOT = "[MASK]"


def harmonic_mean(a: float, b: float) -> float:
    """2ab/(a+b), zero when both inputs are zero."""
    if a + b == 0:
        return 0.0
    return 2.0 * a * b / (a + b)


def map_metrics(
    predictions: Sequence[tuple[str, str]],
    verb_class: dict[str, str],
) -> dict[str, float]:
    """Macro seen/unseen accuracy, their harmonic mean, and micro accuracy (%).

    ``predictions`` holds (reference lemma, predicted lemma) pairs; every
    reference lemma must have a seen/unseen class.
    """
    if not predictions:
        raise ValueError("map_metrics needs at least one prediction")
    missing = sorted({ref for ref, _ in predictions if ref not in verb_class})
    if missing:
        raise ValueError(f"reference lemmas without a class: {missing}")
    bad_labels = sorted({c for c in verb_class.values() if c not in ("seen", "unseen")})
    if bad_labels:
        raise ValueError(f"verb classes must be seen/unseen, got {bad_labels}")

    per_class: dict[str, list[bool]] = {}
    correct_total = 0
    for reference, predicted in predictions:
        hit = reference == predicted
        per_class.setdefault(reference, []).append(hit)
        correct_total += hit

    def macro(class_label: str) -> float:
        accs = [
            100.0 * sum(hits) / len(hits)
            for lemma, hits in per_class.items()
            if verb_class[lemma] == class_label
        ]
        return sum(accs) / len(accs) if accs else 0.0

    macro_seen = macro("seen")
    macro_unseen = macro("unseen")
    return {
        "macro_seen": macro_seen,
        "macro_unseen": macro_unseen,
        "harmonic_mean": harmonic_mean(macro_seen, macro_unseen),
        "micro": 100.0 * correct_total / len(predictions),
    }


def mep_metrics(instances: Sequence[Sequence[bool]]) -> float:
    """Micro accuracy (%): an instance counts only if every frame is correct."""
    if not instances:
        raise ValueError("mep_metrics needs at least one instance")
    for i, vector in enumerate(instances):
        if len(vector) == 0:
            raise ValueError(f"instance {i} has no frames")
    correct = sum(1 for vector in instances if all(vector))
    return 100.0 * correct / len(instances)


def _expand_ancestors(
    direct: set[str],
    parent_of: dict[str, set[str] | list[str]],
    depth: int,
) -> set[str]:
    ancestors = set(direct)
    frontier = set(direct)
    for _ in range(depth - 1):
        frontier = {
            parent for node in frontier for parent in parent_of.get(node, ())
        } - ancestors
        if not frontier:
            break
        ancestors |= frontier
    return ancestors


def generalization_analysis(
    false_predictions: Sequence[tuple[str, str]],
    frame_index: dict[str, set[str] | list[str]],
    hypernym_map: dict[str, set[str] | list[str]],
    hypernym_closure_depth: int = 1,
    hypernym_parents: dict[str, set[str] | list[str]] | None = None,
) -> dict[str, float]:
    """Share-a-frame and co-hyponymy proportions (%) over false predictions.

    Inputs must be (reference, predicted) pairs with reference != predicted on
    unseen classes; lemmas absent from a resource count as non-sharing and are
    logged. The two buckets may overlap. Co-hyponymy uses direct (depth-1)
    shared hypernyms; passing hypernym_closure_depth > 1 together with a
    hypernym_parents graph widens the comparison to deeper ancestors.
    """
    offenders = [(r, p) for r, p in false_predictions if r == p]
    if offenders:
        raise ValueError(f"pairs with reference == predicted: {offenders[:5]}")
    if not false_predictions:
        log.warning("generalization_analysis called with no false predictions")
        return {"pct_shared_frame": 0.0, "pct_co_hyponym": 0.0}

    frames_of: dict[str, set[str]] = {}
    for frame, lemmas in frame_index.items():
        for lemma in lemmas:
            frames_of.setdefault(lemma, set()).add(frame)
    hypernyms = {lemma: set(h) for lemma, h in hypernym_map.items()}
    if hypernym_closure_depth > 1:
        parents = hypernym_parents or {}
        hypernyms = {
            lemma: _expand_ancestors(direct, parents, hypernym_closure_depth)
            for lemma, direct in hypernyms.items()
        }

    shared_frame = 0
    co_hyponym = 0
    for reference, predicted in false_predictions:
        if reference not in frames_of and reference not in hypernyms:
            log.warning("lemma %r missing from both resources", reference)
        if predicted not in frames_of and predicted not in hypernyms:
            log.warning("lemma %r missing from both resources", predicted)
        if frames_of.get(reference, set()) & frames_of.get(predicted, set()):
            shared_frame += 1
        if hypernyms.get(reference, set()) & hypernyms.get(predicted, set()):
            co_hyponym += 1
    n = len(false_predictions)
    return {
        "pct_shared_frame": 100.0 * shared_frame / n,
        "pct_co_hyponym": 100.0 * co_hyponym / n,
    }


@dataclass
class ProbeItem:
    """One cloze item: a template with a mask slot and four candidates."""

    template: str
    candidates: list[str]
    answer_index: int
    affordance_group: str
    polarity: str  # "original" | "inverse"
    answer_position: int  # 1-based, equals answer_index + 1

    def __post_init__(self):
        if self.polarity not in ("original", "inverse"):
            raise ValueError(f"bad polarity {self.polarity!r}")
        if len(set(self.candidates)) != len(self.candidates):
            raise ValueError("candidates must be distinct")
        if self.answer_position != self.answer_index + 1:
            raise ValueError(
                f"answer_position {self.answer_position} inconsistent with "
                f"answer_index {self.answer_index}"
            )
        if MASK_SLOT not in self.template:
            raise ValueError("template must contain one mask slot")

    def to_dict(self) -> dict:
        return {
            "template": self.template,
            "candidates": list(self.candidates),
            "answer_index": self.answer_index,
            "affordance_group": self.affordance_group,
            "polarity": self.polarity,
            "answer_position": self.answer_position,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ProbeItem":
        return cls(
            template=d["template"],
            candidates=list(d["candidates"]),
            answer_index=int(d["answer_index"]),
            affordance_group=d["affordance_group"],
            polarity=d["polarity"],
            answer_position=int(d["answer_position"]),
        )


class CandidateScorer(Protocol):
    """Returns one logit per candidate for the template's mask slot."""

    def __call__(self, template: str, candidates: list[str]) -> list[float]: ...


@dataclass
class ProbeChoice:
    item: ProbeItem
    chosen_index: int
    probabilities: list[float]

    @property
    def correct(self) -> bool:
        return self.chosen_index == self.item.answer_index


def _softmax(logits: Sequence[float]) -> list[float]:
    top = max(logits)
    exps = [math.exp(x - top) for x in logits]
    total = sum(exps)
    return [e / total for e in exps]


def probe_cloze(items: Iterable[ProbeItem], scorer: CandidateScorer) -> list[ProbeChoice]:
    """Score each item's four candidates; argmax of their softmax wins.

    Items with fewer than four candidates are rejected with a diagnostic and
    skipped. Exact ties resolve to the lowest candidate index.
    """
    choices: list[ProbeChoice] = []
    for item in items:
        if len(item.candidates) < 4:
            log.warning(
                "rejecting probe item with %d candidates: %r",
                len(item.candidates), item.template,
            )
            continue
        logits = list(scorer(item.template, item.candidates))
        if not any(math.isfinite(x) for x in logits):
            log.warning("rejecting probe item with no scorable candidate: %r",
                        item.template)
            continue
        probs = _softmax(logits)
        best = max(probs)
        chosen = next(i for i, p in enumerate(probs) if p == best)
        choices.append(ProbeChoice(item=item, chosen_index=chosen, probabilities=probs))
    return choices


@dataclass
class RobustnessReport:
    per_group_accuracy: dict[str, float]
    per_position_accuracy: dict[int, float]
    per_group_delta: dict[str, float]
    macro_delta: float

    def to_dict(self) -> dict:
        return {
            "per_group_accuracy": dict(sorted(self.per_group_accuracy.items())),
            "per_position_accuracy": {str(k): v for k, v in sorted(self.per_position_accuracy.items())},
            "per_group_delta": dict(sorted(self.per_group_delta.items())),
            "macro_delta": self.macro_delta,
        }


def probe_robustness(choices: Sequence[ProbeChoice]) -> RobustnessReport:
    """Accuracy per answer position and |original - inverse| per group.

    All four answer positions must be represented. Groups missing one
    polarity are skipped from the delta table with a warning.
    """
    positions = {c.item.answer_position for c in choices}
    if positions != {1, 2, 3, 4}:
        raise ValueError(f"answer positions 1..4 must all occur, got {sorted(positions)}")

    def accuracy(subset: list[ProbeChoice]) -> float:
        return 100.0 * sum(c.correct for c in subset) / len(subset)

    per_position = {
        pos: accuracy([c for c in choices if c.item.answer_position == pos])
        for pos in (1, 2, 3, 4)
    }

    groups = sorted({c.item.affordance_group for c in choices})
    per_group = {
        g: accuracy([c for c in choices if c.item.affordance_group == g]) for g in groups
    }

    per_group_delta: dict[str, float] = {}
    for group in groups:
        original = [c for c in choices
                    if c.item.affordance_group == group and c.item.polarity == "original"]
        inverse = [c for c in choices
                   if c.item.affordance_group == group and c.item.polarity == "inverse"]
        if not original or not inverse:
            log.warning("group %r lacks a polarity pair; skipped from deltas", group)
            continue
        per_group_delta[group] = abs(accuracy(original) - accuracy(inverse))

    macro_delta = (
        sum(per_group_delta.values()) / len(per_group_delta) if per_group_delta else 0.0
    )
    return RobustnessReport(
        per_group_accuracy=per_group,
        per_position_accuracy=per_position,
        per_group_delta=per_group_delta,
        macro_delta=macro_delta,
    )


@dataclass
class EvalReport:
    """Aggregate report mirroring the intrinsic and probing tables."""

    map_metrics: dict[str, float] = field(default_factory=dict)
    mep_accuracy: float | None = None
    generalization: dict[str, float] = field(default_factory=dict)
    probe: dict | None = None

    def to_dict(self) -> dict:
        out: dict = {}
        if self.map_metrics:
            out["map_metrics"] = {k: round(v, 4) for k, v in self.map_metrics.items()}
        if self.mep_accuracy is not None:
            out["mep_accuracy"] = round(self.mep_accuracy, 4)
        if self.generalization:
            out["generalization"] = {k: round(v, 4) for k, v in self.generalization.items()}
        if self.probe is not None:
            out["probe"] = self.probe
        return out

    def render(self) -> str:
        """Plain-text table dump of whatever sections the report carries."""
        lines: list[str] = []
        if self.map_metrics:
            m = self.map_metrics
            lines += [
                "Action prediction (%)",
                "  seen    unseen  harmonic  micro",
                f"  {m['macro_seen']:<7.1f} {m['macro_unseen']:<7.1f} "
                f"{m['harmonic_mean']:<9.1f} {m['micro']:.1f}",
                "",
            ]
        if self.mep_accuracy is not None:
            lines += ["Effect prediction (%)",
                      f"  all-frames micro accuracy: {self.mep_accuracy:.1f}", ""]
        if self.generalization:
            g = self.generalization
            lines += [
                "False predictions on unseen classes (%)",
                f"  shared frame: {g['pct_shared_frame']:.1f}"
                f"   co-hyponym: {g['pct_co_hyponym']:.1f}",
                "",
            ]
        if self.probe is not None:
            lines.append("Probe accuracy by affordance group (%)")
            for group, acc in self.probe.get("per_group_accuracy", {}).items():
                lines.append(f"  {group:<12} {acc:.1f}")
            lines.append("Probe accuracy by answer position (%)")
            positions = self.probe.get("per_position_accuracy", {})
            lines.append("  " + "  ".join(
                f"{pos}: {positions[pos]:.1f}" for pos in sorted(positions)))
            lines.append("Original vs inverse template gap (pp, lower is better)")
            for group, delta in self.probe.get("per_group_delta", {}).items():
                lines.append(f"  {group:<12} {delta:.1f}")
            lines.append(f"  macro average: {self.probe.get('macro_delta', 0.0):.1f}")
            lines.append("")
        return "\n".join(lines)
