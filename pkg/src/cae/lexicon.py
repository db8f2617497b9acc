"""Result-verb mining from normalized lexical-resource snapshots.

The pipeline never parses upstream resource distributions (VerbNet XML,
FrameNet XML, imSitu JSON); it consumes a pre-normalized JSON-lines snapshot
and applies two heuristics per verb lemma:

* visualness: the verb's situation is visually perceivable,
* effect-causing: the verb produces a physical result on its patient.

A lemma with both properties established is a "sure" result verb; a lemma
with partial evidence stays "unsure".
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .ioutil import read_jsonl

# Second-position semantic roles that disqualify an imSitu verb from the
# visualness heuristic. Two historical misspellings ("reciever", "adressee")
# are part of the published list and kept verbatim.
DEFAULT_INVALID_SECOND_ROLES: frozenset[str] = frozenset(
    {
        "place", "tool", "location", "manner", "instrument", "listener",
        "container", "model", "suspect", "victimpart", "addressee",
        "confronted", "start", "message", "skill", "ailment", "focus",
        "resource", "experiencer", "phenomenon", "agentpart", "coagent",
        "end", "recipient", "audience", "blow", "supported", "interviewee",
        "destination", "source", "carrier", "entityhelped", "center",
        "reciever", "event", "naggedperson", "obstacle", "stake",
        "coparticipant", "seller", "performer", "student", "giver",
        "reference", "adressee", "competition", "occasion", "image",
        "coagentpart", "bodypart", "boringthing", "victim", "follower",
        "perceiver", "imitation", "admired", "chasee", "undergoer", "path",
        "shelter", "restrained",
    }
)

# Selectional-restriction tags on the Patient role that establish visualness.
DEFAULT_CONCRETE_TAGS: frozenset[str] = frozenset({"concrete", "solid"})

EFFECT_FRAME_ELEMENTS: frozenset[str] = frozenset({"Result", "Effect"})

RESULT_ROLE_TRIPLE: tuple[str, ...] = ("Agent", "Patient", "Result")

SNAPSHOT_KINDS = ("verbnet", "imsitu", "framenet", "wordnet", "concreteness", "kinetics")


class SnapshotError(ValueError):
    """Schema violation in a snapshot file; message carries line and field."""

    def __init__(self, lineno: int, field_name: str, message: str):
        super().__init__(f"line {lineno}, field '{field_name}': {message}")
        self.lineno = lineno
        self.field = field_name


def normalize_lemma(raw: str) -> str:
    """Lowercase and underscore-join multiword lemmas ("Warm up" -> "warm_up")."""
    return "_".join(raw.strip().lower().split())


def is_phrasal(lemma: str) -> bool:
    return "_" in lemma


@dataclass
class VerbNetEntry:
    lemma: str
    sense_id: str
    thematic_roles: list[str]
    selectional_restrictions: dict[str, set[str]]


@dataclass
class ImSituEntry:
    lemma: str
    roles: list[str]


@dataclass
class FrameNetEntry:
    lemma: str
    frames: set[str]
    frame_elements: dict[str, set[str]]


@dataclass
class LexicalSnapshot:
    """Normalized view over the lexical resources the miner consumes."""

    verbnet_entries: list[VerbNetEntry] = field(default_factory=list)
    imsitu_entries: list[ImSituEntry] = field(default_factory=list)
    framenet_entries: list[FrameNetEntry] = field(default_factory=list)
    wordnet_entries: dict[str, set[str]] = field(default_factory=dict)
    concreteness: dict[str, float] = field(default_factory=dict)
    kinetics_verbs: set[str] = field(default_factory=set)

    def frame_ids(self) -> set[str]:
        ids: set[str] = set()
        for entry in self.framenet_entries:
            ids |= entry.frames
        return ids

    def frame_elements(self) -> dict[str, set[str]]:
        merged: dict[str, set[str]] = {}
        for entry in self.framenet_entries:
            for frame, elements in entry.frame_elements.items():
                merged.setdefault(frame, set()).update(elements)
        return merged

    def hypernym_map(self) -> dict[str, set[str]]:
        return {lemma: set(h) for lemma, h in self.wordnet_entries.items()}


@dataclass
class ResultVerb:
    """A mined verb with its evidence trail.

    ``visualness`` and ``effect_causing`` are ternary: True when the heuristic
    established the property, None when the resources gave no verdict. The
    verdict is "sure" exactly when both properties are True.
    """

    lemma: str
    senses: list[tuple[str, str]]  # (sense id, source resource)
    visualness: Optional[bool]
    effect_causing: Optional[bool]
    verdict: str
    frames: set[str]
    phrasal: bool = False

    def to_dict(self) -> dict:
        return {
            "lemma": self.lemma,
            "senses": [list(s) for s in self.senses],
            "visualness": self.visualness,
            "effect_causing": self.effect_causing,
            "verdict": self.verdict,
            "frames": sorted(self.frames),
            "phrasal": self.phrasal,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ResultVerb":
        return cls(
            lemma=d["lemma"],
            senses=[tuple(s) for s in d["senses"]],
            visualness=d["visualness"],
            effect_causing=d["effect_causing"],
            verdict=d["verdict"],
            frames=set(d["frames"]),
            phrasal=d.get("phrasal", False),
        )


def _require(record: dict, keys: Iterable[str], lineno: int) -> None:
    for key in keys:
        if key not in record:
            raise SnapshotError(lineno, key, "missing required field")


def load_snapshot(path: str | Path) -> LexicalSnapshot:
    """Parse and validate a snapshot file (JSON lines, "kind"-discriminated).

    Raises SnapshotError with the offending line and field on any schema
    violation: unknown kind, missing field, concreteness rating outside
    [1, 5], duplicate sense id, or empty role list.
    """
    snap = LexicalSnapshot()
    seen_sense_ids: set[str] = set()
    for lineno, record in read_jsonl(path):
        if not isinstance(record, dict):
            raise SnapshotError(lineno, "-", "record is not an object")
        kind = record.get("kind")
        if kind not in SNAPSHOT_KINDS:
            raise SnapshotError(lineno, "kind", f"unknown kind {kind!r}")
        _require(record, ["lemma"], lineno)
        lemma = normalize_lemma(str(record["lemma"]))

        if kind == "verbnet":
            _require(record, ["sense_id", "thematic_roles"], lineno)
            sense_id = str(record["sense_id"])
            if sense_id in seen_sense_ids:
                raise SnapshotError(lineno, "sense_id", f"duplicate sense id {sense_id!r}")
            seen_sense_ids.add(sense_id)
            roles = list(record["thematic_roles"])
            if not roles:
                raise SnapshotError(lineno, "thematic_roles", "role list is empty")
            restrictions = {
                str(role): set(tags)
                for role, tags in record.get("selectional_restrictions", {}).items()
            }
            snap.verbnet_entries.append(VerbNetEntry(lemma, sense_id, roles, restrictions))
        elif kind == "imsitu":
            _require(record, ["roles"], lineno)
            roles = list(record["roles"])
            if not roles:
                raise SnapshotError(lineno, "roles", "role list is empty")
            snap.imsitu_entries.append(ImSituEntry(lemma, roles))
        elif kind == "framenet":
            _require(record, ["frames"], lineno)
            frames = {str(f) for f in record["frames"]}
            elements = {
                str(f): set(els) for f, els in record.get("frame_elements", {}).items()
            }
            unknown = set(elements) - frames
            if unknown:
                raise SnapshotError(
                    lineno, "frame_elements",
                    f"elements listed for undeclared frames {sorted(unknown)}",
                )
            snap.framenet_entries.append(FrameNetEntry(lemma, frames, elements))
        elif kind == "wordnet":
            _require(record, ["hypernyms"], lineno)
            snap.wordnet_entries.setdefault(lemma, set()).update(
                str(h) for h in record["hypernyms"]
            )
        elif kind == "concreteness":
            _require(record, ["rating"], lineno)
            rating = float(record["rating"])
            if not (1.0 <= rating <= 5.0):
                raise SnapshotError(
                    lineno, "rating", f"rating out of range [1, 5]: {rating}"
                )
            if lemma in snap.concreteness and snap.concreteness[lemma] != rating:
                raise SnapshotError(lineno, "lemma", f"conflicting rating for {lemma!r}")
            snap.concreteness[lemma] = rating
        elif kind == "kinetics":
            snap.kinetics_verbs.add(lemma)
    return snap


def identify_result_verbs(
    snap: LexicalSnapshot,
    invalid_second_roles: frozenset[str] | set[str] = DEFAULT_INVALID_SECOND_ROLES,
    concrete_tags: frozenset[str] | set[str] = DEFAULT_CONCRETE_TAGS,
) -> list[ResultVerb]:
    """Mine result-verb candidates, merging evidence across senses per lemma.

    Visualness holds when the lemma has an imSitu frame whose second role is
    valid, or any VerbNet sense restricts its Patient role to a concrete/solid
    tag. Effect-causing holds when some VerbNet sense carries exactly the
    (Agent, Patient, Result) role triple AND the lemma evokes a frame with a
    Result or Effect element. Lemmas with no positive evidence are dropped;
    evidence that cannot be established stays unknown (None), which demotes
    the verdict to "unsure".
    """
    by_lemma_vn: dict[str, list[VerbNetEntry]] = {}
    for entry in snap.verbnet_entries:
        by_lemma_vn.setdefault(entry.lemma, []).append(entry)
    by_lemma_imsitu: dict[str, list[ImSituEntry]] = {}
    for ims in snap.imsitu_entries:
        by_lemma_imsitu.setdefault(ims.lemma, []).append(ims)
    by_lemma_frames: dict[str, set[str]] = {}
    for fn in snap.framenet_entries:
        by_lemma_frames.setdefault(fn.lemma, set()).update(fn.frames)
    elements = snap.frame_elements()

    lemmas = sorted(set(by_lemma_vn) | set(by_lemma_imsitu) | set(by_lemma_frames))
    out: list[ResultVerb] = []
    for lemma in lemmas:
        vn_senses = sorted(by_lemma_vn.get(lemma, []), key=lambda e: e.sense_id)
        in_imsitu = lemma in by_lemma_imsitu
        frames = set(by_lemma_frames.get(lemma, set()))

        imsitu_visual = any(
            len(ims.roles) >= 2 and ims.roles[1] not in invalid_second_roles
            for ims in by_lemma_imsitu.get(lemma, [])
        )
        verbnet_visual = any(
            entry.selectional_restrictions.get("Patient", set()) & set(concrete_tags)
            for entry in vn_senses
        )
        visualness: Optional[bool] = True if (imsitu_visual or verbnet_visual) else None

        has_result_triple = any(
            tuple(entry.thematic_roles) == RESULT_ROLE_TRIPLE for entry in vn_senses
        )
        evokes_effect_frame = any(
            elements.get(frame, set()) & EFFECT_FRAME_ELEMENTS for frame in frames
        )
        effect: Optional[bool] = True if (has_result_triple and evokes_effect_frame) else None

        if visualness is not True and effect is not True:
            continue

        senses = [(entry.sense_id, "verbnet") for entry in vn_senses]
        if in_imsitu:
            senses.append((lemma, "imsitu"))
        verdict = "sure" if (visualness is True and effect is True) else "unsure"
        out.append(
            ResultVerb(
                lemma=lemma,
                senses=senses,
                visualness=visualness,
                effect_causing=effect,
                verdict=verdict,
                frames=frames,
                phrasal=is_phrasal(lemma),
            )
        )
    return out


def verb_frame_index(verbs: list[ResultVerb]) -> dict[str, set[str]]:
    """Invert verbs to a frame -> lemmas index; frameless verbs are absent."""
    if not verbs:
        raise ValueError("verb_frame_index requires a non-empty verb list")
    index: dict[str, set[str]] = {}
    for verb in verbs:
        for frame in verb.frames:
            index.setdefault(frame, set()).add(verb.lemma)
    return index


def write_result_verbs(path: str | Path, verbs: list[ResultVerb]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for verb in verbs:
            fh.write(json.dumps(verb.to_dict(), sort_keys=True, separators=(",", ":")))
            fh.write("\n")


def read_result_verbs(path: str | Path) -> list[ResultVerb]:
    return [ResultVerb.from_dict(rec) for _, rec in read_jsonl(path)]


def sure_lemmas(verbs: list[ResultVerb]) -> set[str]:
    """Lemmas usable for clip extraction: sure verdict, phrasal verbs excluded."""
    return {v.lemma for v in verbs if v.verdict == "sure" and not v.phrasal}
