"""Corpus acquisition: remote HTTP source with on-disk cache, or local fixtures.

Both paths normalize into one :class:`RawCorpus`. The remote protocol makes
four logical GET requests per corpus (participant details, word tokens, word
utterances, transcript information); each response body is cached verbatim,
one file per endpoint, keyed by corpus name. A warm cache satisfies a fetch
with zero network requests; a partial cache is treated as cold.

Local fixture layout::

    <dir>/manifest.json   participants + sessions arrays (schema below)
    <dir>/*.cha           UTF-8 CHAT transcripts referenced by the manifest

Manifest schema: ``{"source_id": str, "participants": [{"participant_id",
"group", "sex", "age_months", "ethnicity", "parent_education"}],
"sessions": [{"participant_id", "file"}]}`` with null for missing fields.
"""

from __future__ import annotations

import json
import urllib.error
import urllib.request
from dataclasses import dataclass
from pathlib import Path

from .errors import CorpusError, FetchError, PayloadError

GROUPS = ("TD", "ASD", "DD")
SEXES = ("M", "F")

# logical endpoint key -> (path template, human-readable payload name)
DEFAULT_ENDPOINTS = {
    "participants": ("{corpus}/participants", "participant details"),
    "tokens": ("{corpus}/tokens", "word tokens"),
    "utterances": ("{corpus}/utterances", "word utterances"),
    "transcripts": ("{corpus}/transcripts", "transcript information"),
}
ENDPOINT_ORDER = ("participants", "tokens", "utterances", "transcripts")


@dataclass(frozen=True)
class ParticipantRecord:
    participant_id: str
    group: str
    sex: str
    age_months: int | None = None
    ethnicity: str | None = None
    parent_education: str | None = None

    def __post_init__(self):
        if self.group not in GROUPS:
            raise CorpusError(
                f"participant {self.participant_id!r}: group must be one of "
                f"{GROUPS}, got {self.group!r}"
            )
        if self.sex not in SEXES:
            raise CorpusError(
                f"participant {self.participant_id!r}: sex must be one of "
                f"{SEXES}, got {self.sex!r}"
            )
        if self.age_months is not None and self.age_months <= 0:
            raise CorpusError(
                f"participant {self.participant_id!r}: age_months must be > 0 "
                f"when present, got {self.age_months}"
            )


@dataclass(frozen=True)
class RawCorpus:
    """Normalized corpus: participant roster plus (participant_id, chat_text) sessions."""

    source_id: str
    participants: tuple[ParticipantRecord, ...]
    sessions: tuple[tuple[str, str], ...]

    def __post_init__(self):
        ids = [p.participant_id for p in self.participants]
        seen = set()
        for pid in ids:
            if pid in seen:
                raise CorpusError(f"duplicate participant id {pid!r}")
            seen.add(pid)
        for pid, _ in self.sessions:
            if pid not in seen:
                raise CorpusError(f"session references unknown participant {pid!r}")

    def group_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for p in self.participants:
            counts[p.group] = counts.get(p.group, 0) + 1
        return counts


def _participant_from_obj(obj: dict, where: str) -> ParticipantRecord:
    try:
        return ParticipantRecord(
            participant_id=obj["participant_id"],
            group=obj["group"],
            sex=obj["sex"],
            age_months=obj.get("age_months"),
            ethnicity=obj.get("ethnicity"),
            parent_education=obj.get("parent_education"),
        )
    except KeyError as exc:
        raise CorpusError(f"{where}: participant entry missing key {exc}") from exc


def load_local_corpus(directory) -> RawCorpus:
    """Read a fixture directory (manifest.json + .cha files) into a RawCorpus."""
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.is_file():
        raise CorpusError(f"missing manifest file {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CorpusError(f"manifest {manifest_path} is not valid JSON: {exc}") from exc

    participants = tuple(
        _participant_from_obj(p, str(manifest_path)) for p in manifest.get("participants", [])
    )
    sessions = []
    for entry in manifest.get("sessions", []):
        cha_path = directory / entry["file"]
        if not cha_path.is_file():
            raise CorpusError(
                f"manifest references absent transcript file {entry['file']!r}"
            )
        sessions.append((entry["participant_id"], cha_path.read_text(encoding="utf-8")))
    return RawCorpus(
        source_id=manifest.get("source_id", directory.name),
        participants=participants,
        sessions=tuple(sessions),
    )


def export_local_corpus(corpus: RawCorpus, directory) -> None:
    """Write a RawCorpus as a loadable fixture directory (the bundled exporter)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    session_entries = []
    for index, (pid, chat_text) in enumerate(corpus.sessions):
        filename = f"s{index:03d}_{pid}.cha"
        (directory / filename).write_text(chat_text, encoding="utf-8")
        session_entries.append({"participant_id": pid, "file": filename})
    manifest = {
        "source_id": corpus.source_id,
        "participants": [
            {
                "participant_id": p.participant_id,
                "group": p.group,
                "sex": p.sex,
                "age_months": p.age_months,
                "ethnicity": p.ethnicity,
                "parent_education": p.parent_education,
            }
            for p in corpus.participants
        ],
        "sessions": session_entries,
    }
    (directory / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def corpus_to_json(corpus: RawCorpus) -> dict:
    return {
        "source_id": corpus.source_id,
        "participants": [
            {
                "participant_id": p.participant_id,
                "group": p.group,
                "sex": p.sex,
                "age_months": p.age_months,
                "ethnicity": p.ethnicity,
                "parent_education": p.parent_education,
            }
            for p in corpus.participants
        ],
        "sessions": [
            {"participant_id": pid, "chat_text": text} for pid, text in corpus.sessions
        ],
    }


def corpus_from_json(obj: dict) -> RawCorpus:
    return RawCorpus(
        source_id=obj["source_id"],
        participants=tuple(
            _participant_from_obj(p, "corpus json") for p in obj["participants"]
        ),
        sessions=tuple((s["participant_id"], s["chat_text"]) for s in obj["sessions"]),
    )


def dumps_corpus(corpus: RawCorpus) -> str:
    return json.dumps(corpus_to_json(corpus), sort_keys=True, indent=2) + "\n"


def _cache_path(cache_dir: Path, corpus_name: str, key: str) -> Path:
    return cache_dir / f"{corpus_name}__{key}.json"


def _normalize_payloads(payloads: dict[str, bytes], endpoints) -> RawCorpus:
    parsed = {}
    for key in ENDPOINT_ORDER:
        title = endpoints[key][1]
        try:
            parsed[key] = json.loads(payloads[key].decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            offset = getattr(exc, "pos", None)
            if offset is None:
                offset = getattr(exc, "start", None)
            raise PayloadError(
                f"{title} payload is malformed at byte offset {offset}: {exc}",
                endpoint=title,
                byte_offset=offset,
            ) from exc
        if not isinstance(parsed[key], dict):
            raise PayloadError(
                f"{title} payload is not a JSON object", endpoint=title, byte_offset=0
            )

    part_payload = parsed["participants"]
    if "participants" not in part_payload:
        raise PayloadError(
            "participant details payload has no 'participants' section",
            endpoint=endpoints["participants"][1],
        )
    participants = tuple(
        _participant_from_obj(p, "participant details payload")
        for p in part_payload["participants"]
    )

    tx_payload = parsed["transcripts"]
    if "sessions" not in tx_payload:
        raise PayloadError(
            "transcript information payload has no 'sessions' section",
            endpoint=endpoints["transcripts"][1],
        )
    sessions = tuple(
        (s["participant_id"], s["chat_text"]) for s in tx_payload["sessions"]
    )
    source_id = part_payload.get("source_id") or tx_payload.get("source_id") or "remote"
    return RawCorpus(source_id=source_id, participants=participants, sessions=sessions)


def fetch_remote_corpus(
    base_url: str,
    corpus_name: str,
    cache_dir,
    endpoints: dict[str, tuple[str, str]] | None = None,
    timeout: float = 10.0,
) -> RawCorpus:
    """Fetch the four corpus payloads over HTTP, caching each verbatim.

    When all four cache files exist the corpus is rebuilt from disk without
    touching the network; otherwise every endpoint is (re)fetched.
    """
    endpoints = endpoints or DEFAULT_ENDPOINTS
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)

    paths = {key: _cache_path(cache_dir, corpus_name, key) for key in ENDPOINT_ORDER}
    if all(p.is_file() for p in paths.values()):
        payloads = {key: paths[key].read_bytes() for key in ENDPOINT_ORDER}
        return _normalize_payloads(payloads, endpoints)

    payloads = {}
    for key in ENDPOINT_ORDER:
        template, title = endpoints[key]
        url = base_url.rstrip("/") + "/" + template.format(corpus=corpus_name)
        try:
            with urllib.request.urlopen(url, timeout=timeout) as resp:
                payloads[key] = resp.read()
        except (urllib.error.URLError, OSError) as exc:
            raise FetchError(
                f"request for {title} ({url}) failed: {exc}",
                endpoint=title,
                retriable=True,
            ) from exc
    corpus = _normalize_payloads(payloads, endpoints)
    for key in ENDPOINT_ORDER:
        paths[key].write_bytes(payloads[key])
    return corpus
