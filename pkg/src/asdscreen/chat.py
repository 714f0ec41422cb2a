"""Parser for a documented subset of the CHAT transcript format ("CHAT-subset v1").

Supported structure:

* header lines: ``@Keyword:<TAB>value`` or bare flags like ``@Begin`` / ``@End``;
* main tiers: ``*SPK:<TAB>utterance text`` where ``SPK`` is a 1-3 character
  uppercase speaker code declared in ``@Participants``;
* dependent tiers: ``%name:<TAB>text``; ``%mor`` is parsed into morphology
  tokens, every other dependent tier is retained uninterpreted;
* continuation lines: a leading tab extends the nearest preceding tier.

Tokenization drops the unintelligible marker ``xxx``, nonverbal events
(``&=...``), and any bracketed annotation; the retracing markers ``[/]`` and
``[//]`` additionally drop the immediately preceding word so only the final
occurrence of a repeated word survives. Terminators are the standalone
tokens ``.``, ``?``, ``!``.

A ``%mor`` item is ``pos|lemma`` followed by ``-SUFFIX`` repetitions;
``~`` attaches clitics, each again of the same shape. Compound lemmas
(``snow+man``) count as one morpheme by default; pass
``compound_counts_as="parts"`` to count each ``+``-part.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field

from .errors import ChatParseError, MorParseError

logger = logging.getLogger(__name__)

TERMINATORS = {".": "period", "?": "question", "!": "exclamation"}
TERMINATOR_CHARS = {v: k for k, v in TERMINATORS.items()}

_MAIN_RE = re.compile(r"^\*([A-Z][A-Z0-9]{0,2}):(.*)$")
_DEP_RE = re.compile(r"^%([a-z][a-z0-9]*):(.*)$")
_HEADER_RE = re.compile(r"^@([A-Za-z][A-Za-z0-9 _-]*)(?::(.*))?$")


@dataclass(frozen=True)
class MorToken:
    """One morphology item: part-of-speech code, lemma, suffixes, clitics."""

    pos: str
    lemma: str
    suffixes: tuple[str, ...] = ()
    clitics: tuple["MorToken", ...] = ()


@dataclass(frozen=True)
class Utterance:
    speaker: str
    words: tuple[str, ...]
    terminator: str  # period | question | exclamation | none
    mor: tuple[MorToken, ...] | None = None
    extra_tiers: tuple[tuple[str, str], ...] = ()
    line_no: int = field(default=0, compare=False)


@dataclass
class Transcript:
    """Parsed CHAT document: ordered headers plus utterances in source order."""

    header: dict[str, str]
    utterances: list[Utterance]

    def speakers(self) -> tuple[str, ...]:
        """Speaker codes declared in the @Participants header, in order."""
        decl = self.header.get("Participants", "")
        codes = []
        for entry in decl.split(","):
            entry = entry.strip()
            if entry:
                codes.append(entry.split()[0])
        return tuple(codes)

    def utterances_by(self, speaker: str) -> list[Utterance]:
        return [u for u in self.utterances if u.speaker == speaker]


def morpheme_count(token: MorToken, compound_counts_as: str = "1") -> int:
    """Number of morphemes in one token: stem + suffixes + clitics, recursively."""
    if compound_counts_as == "parts":
        stem = len(token.lemma.split("+"))
    else:
        stem = 1
    return (
        stem
        + len(token.suffixes)
        + sum(morpheme_count(c, compound_counts_as) for c in token.clitics)
    )


def _is_terminator_item(item: str) -> bool:
    # standalone utterance terminators and trailing-off marks on a %mor tier
    return bool(item) and all(ch in "+.!?/" for ch in item)


def _parse_mor_unit(part: str, index: int, line_no=None) -> tuple[str, str, tuple[str, ...]]:
    if "|" not in part:
        raise MorParseError(
            f"%mor item {index} ({part!r}) has no '|' separator", index, line_no=line_no
        )
    pos, rest = part.split("|", 1)
    segments = rest.split("-")
    lemma, suffixes = segments[0], segments[1:]
    if not pos or not lemma or any(not s for s in suffixes):
        raise MorParseError(
            f"%mor item {index} ({part!r}) has an empty pos, lemma, or suffix",
            index,
            line_no=line_no,
        )
    return pos, lemma, tuple(suffixes)


def parse_mor_item(item: str, index: int = 0, line_no=None) -> MorToken:
    units = [_parse_mor_unit(p, index, line_no) for p in item.split("~")]
    tokens = [MorToken(pos, lemma, suffixes) for pos, lemma, suffixes in units]
    host = tokens[0]
    return MorToken(host.pos, host.lemma, host.suffixes, tuple(tokens[1:]))


def parse_mor_tier(raw: str, line_no=None) -> list[MorToken]:
    """Parse the text after ``%mor:`` into tokens; terminator items are dropped."""
    tokens = []
    for index, item in enumerate(raw.split()):
        if _is_terminator_item(item):
            continue
        tokens.append(parse_mor_item(item, index, line_no))
    return tokens


def tokenize_utterance(raw: str) -> tuple[tuple[str, ...], str]:
    """Split a main-tier text into surface words and a terminator.

    Returns ``(words, terminator)`` where terminator is one of
    ``period``, ``question``, ``exclamation``, ``none``.
    """
    tokens = raw.split()
    terminator = "none"
    if tokens and tokens[-1] in TERMINATORS:
        terminator = TERMINATORS[tokens.pop()]
    words: list[str] = []
    bracket_depth = 0
    for tok in tokens:
        if bracket_depth > 0:
            bracket_depth += tok.count("[") - tok.count("]")
            if bracket_depth < 0:
                bracket_depth = 0
            continue
        if tok.startswith("["):
            if tok.endswith("]"):
                if tok in ("[/]", "[//]") and words:
                    words.pop()
            else:
                bracket_depth = 1
            continue
        if tok == "xxx" or tok.startswith("&="):
            continue
        tok = tok.strip("<>")
        if tok:
            words.append(tok)
    return tuple(words), terminator


def _decode(text) -> str:
    if isinstance(text, bytes):
        return text.decode("utf-8", errors="replace")
    return text


def parse_transcript(text, strict_speakers: bool = False) -> Transcript:
    """Parse CHAT text into a Transcript.

    Every line is classified as header (``@``), main tier (``*SPK:``),
    dependent tier (``%name:``), or continuation (leading tab). Dependent
    tiers attach to the nearest preceding main tier. With
    ``strict_speakers=True`` an utterance by a speaker not declared in
    ``@Participants`` raises; the default logs a warning and keeps it.
    """
    text = _decode(text)
    if not text.strip():
        raise ChatParseError("empty transcript")

    # Fold continuation lines into their tier line, remembering line numbers.
    records: list[tuple[int, str]] = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if line[0] in ("\t", " ") and records:
            prev_no, prev = records[-1]
            records[-1] = (prev_no, prev + " " + line.strip())
            continue
        records.append((line_no, line))

    header: dict[str, str] = {}
    utterances: list[Utterance] = []
    declared: set[str] = set()
    participants_seen = False
    # accumulate one utterance at a time so dependent tiers can attach
    current: dict | None = None

    def flush():
        nonlocal current
        if current is None:
            return
        mor = None
        extra = []
        for name, value, tier_line in current["tiers"]:
            if name == "mor":
                mor = tuple(parse_mor_tier(value, line_no=tier_line))
            else:
                extra.append((name, value))
        utterances.append(
            Utterance(
                speaker=current["speaker"],
                words=current["words"],
                terminator=current["terminator"],
                mor=mor,
                extra_tiers=tuple(extra),
                line_no=current["line_no"],
            )
        )
        current = None

    for line_no, line in records:
        kind = line[0]
        if kind == "@":
            m = _HEADER_RE.match(line)
            if not m:
                raise ChatParseError(f"malformed header line: {line!r}", line_no=line_no)
            keyword = m.group(1).strip()
            value = (m.group(2) or "").strip()
            header[keyword] = value
            if keyword == "Participants":
                participants_seen = True
                for entry in value.split(","):
                    entry = entry.strip()
                    if entry:
                        declared.add(entry.split()[0])
        elif kind == "*":
            m = _MAIN_RE.match(line)
            if not m:
                raise ChatParseError(f"malformed main tier marker: {line!r}", line_no=line_no)
            speaker = m.group(1)
            if not participants_seen or speaker not in declared:
                msg = f"speaker {speaker!r} not declared in @Participants (line {line_no})"
                if strict_speakers:
                    raise ChatParseError(msg, line_no=line_no)
                logger.warning(msg)
            flush()
            words, terminator = tokenize_utterance(m.group(2).strip())
            current = {
                "speaker": speaker,
                "words": words,
                "terminator": terminator,
                "tiers": [],
                "line_no": line_no,
            }
        elif kind == "%":
            m = _DEP_RE.match(line)
            if not m:
                raise ChatParseError(
                    f"malformed dependent tier marker: {line!r}", line_no=line_no
                )
            if current is None:
                raise ChatParseError(
                    f"dependent tier before main tier at line {line_no}", line_no=line_no
                )
            current["tiers"].append((m.group(1), m.group(2).strip(), line_no))
        else:
            raise ChatParseError(f"unclassifiable line: {line!r}", line_no=line_no)
    flush()
    return Transcript(header=header, utterances=utterances)


def mor_token_to_text(token: MorToken) -> str:
    out = token.pos + "|" + token.lemma + "".join("-" + s for s in token.suffixes)
    for clitic in token.clitics:
        out += "~" + mor_token_to_text(clitic)
    return out


def emit_transcript(transcript: Transcript) -> str:
    """Render a Transcript back to CHAT text that reparses to an equal value."""
    lines = []
    for keyword, value in transcript.header.items():
        lines.append(f"@{keyword}:\t{value}" if value else f"@{keyword}")
    for utt in transcript.utterances:
        body = " ".join(utt.words)
        if utt.terminator != "none":
            body = (body + " " if body else "") + TERMINATOR_CHARS[utt.terminator]
        lines.append(f"*{utt.speaker}:\t{body}")
        if utt.mor is not None:
            mor_body = " ".join(mor_token_to_text(t) for t in utt.mor)
            if utt.terminator != "none":
                mor_body = (mor_body + " " if mor_body else "") + TERMINATOR_CHARS[
                    utt.terminator
                ]
            lines.append(f"%mor:\t{mor_body}" if mor_body else "%mor:\t.")
        for name, value in utt.extra_tiers:
            lines.append(f"%{name}:\t{value}")
    return "\n".join(lines) + "\n"


def _mor_to_json(token: MorToken) -> dict:
    return {
        "pos": token.pos,
        "lemma": token.lemma,
        "suffixes": list(token.suffixes),
        "clitics": [_mor_to_json(c) for c in token.clitics],
    }


def _mor_from_json(obj: dict) -> MorToken:
    return MorToken(
        pos=obj["pos"],
        lemma=obj["lemma"],
        suffixes=tuple(obj["suffixes"]),
        clitics=tuple(_mor_from_json(c) for c in obj["clitics"]),
    )


def transcript_to_json(transcript: Transcript) -> dict:
    """Canonical JSON form (stable key order via sorted-key serialization)."""
    return {
        "header": dict(transcript.header),
        "utterances": [
            {
                "speaker": u.speaker,
                "words": list(u.words),
                "terminator": u.terminator,
                "mor": None if u.mor is None else [_mor_to_json(t) for t in u.mor],
                "extra_tiers": [[n, v] for n, v in u.extra_tiers],
                "line_no": u.line_no,
            }
            for u in transcript.utterances
        ],
    }


def transcript_from_json(obj: dict) -> Transcript:
    return Transcript(
        header=dict(obj["header"]),
        utterances=[
            Utterance(
                speaker=u["speaker"],
                words=tuple(u["words"]),
                terminator=u["terminator"],
                mor=None if u["mor"] is None else tuple(_mor_from_json(t) for t in u["mor"]),
                extra_tiers=tuple((n, v) for n, v in u["extra_tiers"]),
                line_no=u["line_no"],
            )
            for u in obj["utterances"]
        ],
    )


def dumps_transcript(transcript: Transcript) -> str:
    return json.dumps(transcript_to_json(transcript), sort_keys=True, indent=2) + "\n"
