"""Per-participant linguistic features and the assembled feature matrix.

The canonical schema has 52 named features:

* 6 demographic: ``age_months``, ``sex``, ``ethnicity``, ``parent_education``,
  ``n_sessions``, ``adult_interlocutor``;
* 7 child speech statistics: total words, utterance count, mean/median words
  per utterance, mean length of utterance in morphemes (MLU), the mean-turn-
  length ratio between the adult and the child (values above 1.0 mean the
  adult dominated the conversation), and the child's turn count;
* 10 + 10 part-of-speech percentages for the child and the adult;
* 1 child type-token ratio (distinct stems over total tokens);
* 18 lexical slots: the child's relative frequency of the corpus-wide
  top-18 child stems (slot-to-stem assignment is emitted with the matrix).

Values that cannot be computed (no %mor tiers, absent demographics, missing
adult) are masked, not substituted.
"""

from __future__ import annotations

import json
import statistics
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .chat import MorToken, Transcript, morpheme_count
from .corpus import RawCorpus
from .errors import FeatureError, MissingMorphologyError, UnknownSpeakerError

POS_CATEGORIES = (
    "pronoun",
    "noun",
    "verb",
    "adjective",
    "adverb",
    "conjunction",
    "determiner",
    "preposition",
    "negation",
    "other",
)

N_LEXICAL_SLOTS = 18


def load_default_pos_map() -> dict[str, str]:
    with resources.files("asdscreen.data").joinpath("pos_categories.json").open(
        "r", encoding="utf-8"
    ) as fh:
        return json.load(fh)["exact"]


def pos_category(code: str, pos_map: dict[str, str] | None = None) -> str:
    """Map a %mor pos code to a feature category (exact, then ':'-prefix)."""
    pos_map = pos_map if pos_map is not None else _DEFAULT_POS_MAP
    if code in pos_map:
        return pos_map[code]
    prefix = code.split(":", 1)[0]
    return pos_map.get(prefix, "other")


_DEFAULT_POS_MAP = load_default_pos_map()


@dataclass(frozen=True)
class SpeakerStats:
    total_words: int
    n_utterances: int
    mean_words_per_utterance: float
    median_words_per_utterance: float
    mlu: float | None
    n_turns: int
    mean_turn_len_utterances: float


@dataclass(frozen=True)
class PosBreakdown:
    percentages: dict[str, float]
    n_tokens: int

    @property
    def empty(self) -> bool:
        return self.n_tokens == 0


@dataclass(frozen=True)
class FeatureSchema:
    names: tuple[str, ...]
    kinds: tuple[str, ...]  # "numeric" | "categorical"

    def __post_init__(self):
        if len(self.names) != len(set(self.names)):
            raise FeatureError("schema names must be unique")
        if len(self.kinds) != len(self.names):
            raise FeatureError("schema kinds must align with names")

    def kind_of(self, name: str) -> str:
        return self.kinds[self.names.index(name)]


@dataclass
class FeatureMatrix:
    """Rows = participants; values hold floats, category strings, or masked cells."""

    schema: FeatureSchema
    participant_ids: tuple[str, ...]
    values: np.ndarray  # object dtype, shape (n, d)
    missing: np.ndarray  # bool, shape (n, d)
    labels: tuple[str, ...]
    metadata: dict = field(default_factory=dict)

    def column(self, name: str) -> int:
        return self.schema.names.index(name)

    def take_rows(self, indices) -> "FeatureMatrix":
        idx = list(indices)
        return FeatureMatrix(
            schema=self.schema,
            participant_ids=tuple(self.participant_ids[i] for i in idx),
            values=self.values[idx].copy(),
            missing=self.missing[idx].copy(),
            labels=tuple(self.labels[i] for i in idx),
            metadata=dict(self.metadata),
        )


def canonical_schema() -> FeatureSchema:
    names: list[str] = []
    kinds: list[str] = []

    def add(name, kind="numeric"):
        names.append(name)
        kinds.append(kind)

    add("age_months")
    add("sex", "categorical")
    add("ethnicity", "categorical")
    add("parent_education", "categorical")
    add("n_sessions")
    add("adult_interlocutor", "categorical")
    add("child_total_words")
    add("child_n_utterances")
    add("child_mean_words_per_utterance")
    add("child_median_words_per_utterance")
    add("child_mlu")
    add("mlt_ratio")
    add("child_n_turns")
    for cat in POS_CATEGORIES:
        add(f"pos_child_{cat}")
    for cat in POS_CATEGORIES:
        add(f"pos_adult_{cat}")
    add("child_type_token_ratio")
    for slot in range(1, N_LEXICAL_SLOTS + 1):
        add(f"lex_top{slot:02d}")
    return FeatureSchema(names=tuple(names), kinds=tuple(kinds))


def _require_speaker(transcript: Transcript, speaker: str) -> None:
    if speaker not in transcript.speakers():
        raise UnknownSpeakerError(
            f"speaker {speaker!r} is not declared in the transcript "
            f"(declared: {transcript.speakers()})"
        )


def _turn_lengths(transcript: Transcript, speaker: str) -> list[int]:
    """Lengths (in utterances) of the speaker's maximal consecutive runs."""
    lengths = []
    run_speaker = None
    run_len = 0
    for utt in transcript.utterances:
        if utt.speaker == run_speaker:
            run_len += 1
            continue
        if run_speaker == speaker and run_len:
            lengths.append(run_len)
        run_speaker = utt.speaker
        run_len = 1
    if run_speaker == speaker and run_len:
        lengths.append(run_len)
    return lengths


def _flatten_mor(tokens) -> list[MorToken]:
    flat = []
    for token in tokens:
        flat.append(token)
        flat.extend(_flatten_mor(token.clitics))
    return flat


def _pooled(transcripts, speaker):
    utterances = []
    turn_lengths = []
    for t in transcripts:
        utterances.extend(t.utterances_by(speaker))
        turn_lengths.extend(_turn_lengths(t, speaker))
    return utterances, turn_lengths


def speaker_stats(
    transcript: Transcript | list[Transcript],
    speaker: str,
    compound_counts_as: str = "1",
) -> SpeakerStats:
    """Word and turn statistics for one speaker; MLU filled when %mor is complete.

    Accepts a single transcript or a list (multi-session pooling: utterances
    and per-session turn runs are concatenated).
    """
    transcripts = transcript if isinstance(transcript, list) else [transcript]
    for t in transcripts:
        _require_speaker(t, speaker)
    utterances, turn_lengths = _pooled(transcripts, speaker)

    word_counts = [len(u.words) for u in utterances]
    total = sum(word_counts)
    n = len(utterances)
    mean = total / n if n else 0.0
    median = float(statistics.median(word_counts)) if word_counts else 0.0
    mlu = None
    if n and all(u.mor is not None for u in utterances):
        morphemes = sum(
            morpheme_count(tok, compound_counts_as) for u in utterances for tok in u.mor
        )
        mlu = morphemes / n
    return SpeakerStats(
        total_words=total,
        n_utterances=n,
        mean_words_per_utterance=mean,
        median_words_per_utterance=median,
        mlu=mlu,
        n_turns=len(turn_lengths),
        mean_turn_len_utterances=(
            sum(turn_lengths) / len(turn_lengths) if turn_lengths else 0.0
        ),
    )


def compute_mlu(
    transcript: Transcript | list[Transcript],
    speaker: str,
    compound_counts_as: str = "1",
) -> float:
    """Total morphemes over total utterances for one speaker.

    Every one of the speaker's utterances must carry a %mor tier.
    """
    transcripts = transcript if isinstance(transcript, list) else [transcript]
    for t in transcripts:
        _require_speaker(t, speaker)
    utterances, _ = _pooled(transcripts, speaker)
    if not utterances:
        raise FeatureError(f"MLU undefined: speaker {speaker!r} has zero utterances")
    for u in utterances:
        if u.mor is None:
            raise MissingMorphologyError(
                f"utterance at line {u.line_no} by {speaker!r} has no %mor tier",
                line_no=u.line_no,
            )
    morphemes = sum(
        morpheme_count(tok, compound_counts_as) for u in utterances for tok in u.mor
    )
    return morphemes / len(utterances)


def compute_mlt_ratio(
    transcript: Transcript | list[Transcript], child: str, adult: str
) -> float:
    """Mean turn length of the adult over the child's: > 1.0 = adult dominated."""
    transcripts = transcript if isinstance(transcript, list) else [transcript]
    for t in transcripts:
        _require_speaker(t, child)
        _require_speaker(t, adult)
    _, child_turns = _pooled(transcripts, child)
    _, adult_turns = _pooled(transcripts, adult)
    if not child_turns or not adult_turns:
        raise FeatureError(
            f"MLT ratio undefined: child has {len(child_turns)} turns, "
            f"adult has {len(adult_turns)}"
        )
    return (sum(adult_turns) / len(adult_turns)) / (sum(child_turns) / len(child_turns))


def compute_pos_percentages(
    transcript: Transcript | list[Transcript],
    speaker: str,
    pos_map: dict[str, str] | None = None,
) -> PosBreakdown:
    """Percentage of tokens (clitics included) per POS category for one speaker."""
    transcripts = transcript if isinstance(transcript, list) else [transcript]
    for t in transcripts:
        _require_speaker(t, speaker)
    utterances, _ = _pooled(transcripts, speaker)
    for u in utterances:
        if u.mor is None:
            raise MissingMorphologyError(
                f"utterance at line {u.line_no} by {speaker!r} has no %mor tier",
                line_no=u.line_no,
            )
    tokens = [tok for u in utterances for tok in _flatten_mor(u.mor)]
    counts = Counter(pos_category(tok.pos, pos_map) for tok in tokens)
    total = len(tokens)
    if total == 0:
        return PosBreakdown({cat: 0.0 for cat in POS_CATEGORIES}, 0)
    return PosBreakdown(
        {cat: 100.0 * counts.get(cat, 0) / total for cat in POS_CATEGORIES}, total
    )


def type_token_ratio(
    transcript: Transcript | list[Transcript], speaker: str
) -> float | None:
    """Distinct stems over total tokens; None when there are no tokens."""
    transcripts = transcript if isinstance(transcript, list) else [transcript]
    utterances, _ = _pooled(transcripts, speaker)
    lemmas = [
        tok.lemma
        for u in utterances
        if u.mor is not None
        for tok in _flatten_mor(u.mor)
    ]
    if not lemmas:
        return None
    return len(set(lemmas)) / len(lemmas)


def _child_lemmas(transcripts, child):
    utterances, _ = _pooled(transcripts, child)
    if not utterances or any(u.mor is None for u in utterances):
        return None
    return [tok.lemma for u in utterances for tok in _flatten_mor(u.mor)]


def detect_adult(transcripts, child: str) -> str | None:
    """The non-child speaker with the most utterances (ties: lexicographic)."""
    counts: Counter = Counter()
    for t in transcripts:
        for u in t.utterances:
            if u.speaker != child:
                counts[u.speaker] += 1
    if not counts:
        return None
    return min(counts, key=lambda code: (-counts[code], code))


@dataclass(frozen=True)
class FeatureOptions:
    child_code: str = "CHI"
    compound_counts_as: str = "1"
    pos_map: dict[str, str] | None = None


def _lexical_slots(corpus_lemma_counts: Counter) -> list[str]:
    ranked = sorted(corpus_lemma_counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return [lemma for lemma, _ in ranked[:N_LEXICAL_SLOTS]]


def build_feature_matrix(
    corpus: RawCorpus,
    parsed: dict[str, list[Transcript]],
    schema: FeatureSchema | None = None,
    options: FeatureOptions | None = None,
) -> FeatureMatrix:
    """One row per participant, in corpus order; unavailable cells are masked."""
    schema = schema or canonical_schema()
    options = options or FeatureOptions()
    child = options.child_code

    for p in corpus.participants:
        if not parsed.get(p.participant_id):
            raise FeatureError(
                f"participant {p.participant_id!r} has no parsed sessions"
            )

    # corpus-wide child stem frequencies drive the lexical slot assignment
    corpus_lemmas: Counter = Counter()
    per_child_lemmas: dict[str, list[str] | None] = {}
    for p in corpus.participants:
        lemmas = _child_lemmas(parsed[p.participant_id], child)
        per_child_lemmas[p.participant_id] = lemmas
        if lemmas:
            corpus_lemmas.update(lemmas)
    slot_stems = _lexical_slots(corpus_lemmas)

    producers = set(canonical_schema().names)
    for name in schema.names:
        if name not in producers:
            raise FeatureError(f"schema name {name!r} has no producer")

    n, d = len(corpus.participants), len(schema.names)
    values = np.empty((n, d), dtype=object)
    missing = np.zeros((n, d), dtype=bool)
    labels = []

    for row, p in enumerate(corpus.participants):
        transcripts = parsed[p.participant_id]
        cells: dict[str, object] = {}

        cells["age_months"] = None if p.age_months is None else float(p.age_months)
        cells["sex"] = p.sex
        cells["ethnicity"] = p.ethnicity
        cells["parent_education"] = p.parent_education
        cells["n_sessions"] = float(len(transcripts))

        child_present = all(child in t.speakers() for t in transcripts)
        adult = detect_adult(transcripts, child) if child_present else None
        cells["adult_interlocutor"] = adult

        if child_present:
            stats = speaker_stats(transcripts, child, options.compound_counts_as)
            cells["child_total_words"] = float(stats.total_words)
            cells["child_n_utterances"] = float(stats.n_utterances)
            cells["child_mean_words_per_utterance"] = stats.mean_words_per_utterance
            cells["child_median_words_per_utterance"] = stats.median_words_per_utterance
            cells["child_n_turns"] = float(stats.n_turns)
            cells["child_mlu"] = stats.mlu
        else:
            for name in (
                "child_total_words",
                "child_n_utterances",
                "child_mean_words_per_utterance",
                "child_median_words_per_utterance",
                "child_n_turns",
                "child_mlu",
            ):
                cells[name] = None

        try:
            cells["mlt_ratio"] = (
                compute_mlt_ratio(transcripts, child, adult) if adult else None
            )
        except FeatureError:
            cells["mlt_ratio"] = None

        for prefix, code in (("pos_child", child), ("pos_adult", adult)):
            breakdown = None
            if code is not None:
                try:
                    breakdown = compute_pos_percentages(transcripts, code, options.pos_map)
                except (MissingMorphologyError, UnknownSpeakerError):
                    breakdown = None
            for cat in POS_CATEGORIES:
                if breakdown is None or breakdown.empty:
                    cells[f"{prefix}_{cat}"] = None
                else:
                    cells[f"{prefix}_{cat}"] = breakdown.percentages[cat]

        lemmas = per_child_lemmas[p.participant_id]
        cells["child_type_token_ratio"] = (
            len(set(lemmas)) / len(lemmas) if lemmas else None
        )
        lemma_counts = Counter(lemmas) if lemmas else None
        for slot in range(1, N_LEXICAL_SLOTS + 1):
            name = f"lex_top{slot:02d}"
            if lemma_counts is None:
                cells[name] = None
            elif slot <= len(slot_stems):
                cells[name] = lemma_counts.get(slot_stems[slot - 1], 0) / len(lemmas)
            else:
                cells[name] = 0.0

        for col, name in enumerate(schema.names):
            value = cells[name]
            if value is None:
                missing[row, col] = True
                values[row, col] = None
            else:
                values[row, col] = value
        labels.append(p.group)

    return FeatureMatrix(
        schema=schema,
        participant_ids=tuple(p.participant_id for p in corpus.participants),
        values=values,
        missing=missing,
        labels=tuple(labels),
        metadata={
            "lexical_slots": {
                f"lex_top{i + 1:02d}": stem for i, stem in enumerate(slot_stems)
            },
            "child_code": child,
        },
    )


def matrix_to_csv(matrix: FeatureMatrix) -> str:
    """CSV view: participant_id column then schema columns; empty cell = missing."""
    lines = ["participant_id," + ",".join(matrix.schema.names)]
    for row, pid in enumerate(matrix.participant_ids):
        cells = [pid]
        for col in range(len(matrix.schema.names)):
            if matrix.missing[row, col]:
                cells.append("")
            else:
                value = matrix.values[row, col]
                cells.append(repr(value) if isinstance(value, float) else str(value))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def matrix_to_json(matrix: FeatureMatrix) -> dict:
    return {
        "schema": {"names": list(matrix.schema.names), "kinds": list(matrix.schema.kinds)},
        "participant_ids": list(matrix.participant_ids),
        "labels": list(matrix.labels),
        "values": [
            [None if matrix.missing[r, c] else _jsonable_cell(matrix.values[r, c])
             for c in range(matrix.values.shape[1])]
            for r in range(matrix.values.shape[0])
        ],
        "missing": [[bool(x) for x in row] for row in matrix.missing],
        "metadata": matrix.metadata,
    }


def _jsonable_cell(value):
    if isinstance(value, (float, int)):
        return float(value)
    return value


def matrix_from_json(obj: dict) -> FeatureMatrix:
    schema = FeatureSchema(
        names=tuple(obj["schema"]["names"]), kinds=tuple(obj["schema"]["kinds"])
    )
    raw_values = obj["values"]
    n, d = len(raw_values), len(schema.names)
    values = np.empty((n, d), dtype=object)
    missing = np.zeros((n, d), dtype=bool)
    for r in range(n):
        for c in range(d):
            cell = raw_values[r][c]
            if obj["missing"][r][c]:
                missing[r, c] = True
                values[r, c] = None
            else:
                values[r, c] = float(cell) if isinstance(cell, (int, float)) else cell
    return FeatureMatrix(
        schema=schema,
        participant_ids=tuple(obj["participant_ids"]),
        values=values,
        missing=missing,
        labels=tuple(obj["labels"]),
        metadata=dict(obj.get("metadata", {})),
    )


def dumps_matrix(matrix: FeatureMatrix) -> str:
    return json.dumps(matrix_to_json(matrix), sort_keys=True, indent=2) + "\n"
