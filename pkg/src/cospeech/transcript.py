"""Timestamped transcripts and parameter-token time windows."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .errors import OrderingError, SchemaError

DEFAULT_PADDING_MS = 300

_STRIP = re.compile(r"^[^\w$]+|[^\w]+$", re.UNICODE)


@dataclass(frozen=True)
class WordSpan:
    text: str
    start_ms: int
    end_ms: int

    @property
    def norm(self) -> str:
        """Lower-cased word without surrounding punctuation."""
        return _STRIP.sub("", self.text).casefold()

    @property
    def clean(self) -> str:
        return _STRIP.sub("", self.text)


@dataclass(frozen=True)
class TokenSpan:
    """Inclusive word-index range ``[first, last]``."""

    first: int
    last: int

    def __post_init__(self):
        if self.first < 0 or self.last < self.first:
            raise ValueError(f"invalid token span [{self.first}, {self.last}]")

    def to_list(self) -> list[int]:
        return [self.first, self.last]


@dataclass(frozen=True)
class TimeInterval:
    start_ms: int
    end_ms: int

    def __post_init__(self):
        if self.end_ms < self.start_ms:
            raise ValueError("interval end precedes start")

    def contains(self, t_ms) -> bool:
        return self.start_ms <= t_ms <= self.end_ms


@dataclass(frozen=True)
class Transcript:
    words: tuple[WordSpan, ...] = field(default_factory=tuple)
    utterance_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "words", tuple(self.words))
        prev = None
        for w in self.words:
            if w.end_ms < w.start_ms:
                raise OrderingError(f"word {w.text!r} ends before it starts")
            if prev is not None:
                if w.start_ms < prev.start_ms:
                    raise OrderingError(f"word {w.text!r} is out of order")
                if w.start_ms < prev.end_ms:
                    raise OrderingError(f"words {prev.text!r} and {w.text!r} overlap")
            prev = w

    def __len__(self):
        return len(self.words)

    @property
    def is_empty(self) -> bool:
        return not self.words

    @property
    def text(self) -> str:
        return " ".join(w.text for w in self.words)

    def check_span(self, span: TokenSpan):
        if span.last >= len(self.words):
            raise ValueError(
                f"token span [{span.first}, {span.last}] outside a {len(self.words)}-word transcript"
            )

    def span_text(self, span: TokenSpan) -> str:
        self.check_span(span)
        return " ".join(w.clean for w in self.words[span.first : span.last + 1])

    def to_data(self) -> dict:
        return {
            "utterance_id": self.utterance_id,
            "words": [
                {"text": w.text, "start_ms": w.start_ms, "end_ms": w.end_ms} for w in self.words
            ],
        }


def transcript_from_data(data) -> Transcript:
    if not isinstance(data, dict) or not isinstance(data.get("words"), list):
        raise SchemaError("transcript must be an object with a 'words' array")
    uid = data.get("utterance_id", "")
    if not isinstance(uid, str):
        raise SchemaError("'utterance_id' must be a string")
    words = []
    for i, w in enumerate(data["words"]):
        if not isinstance(w, dict):
            raise SchemaError(f"word {i} is not an object")
        text, start, end = w.get("text"), w.get("start_ms"), w.get("end_ms")
        if not isinstance(text, str):
            raise SchemaError(f"word {i}: 'text' must be a string")
        for key, value in (("start_ms", start), ("end_ms", end)):
            if isinstance(value, bool) or not isinstance(value, int):
                raise SchemaError(f"word {i}: {key!r} must be an integer")
        words.append(WordSpan(text, start, end))
    return Transcript(tuple(words), uid)


def parse_transcript(text: str) -> Transcript:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"transcript is not valid JSON: {exc}") from exc
    return transcript_from_data(data)


def token_window(t: Transcript, span: TokenSpan, padding_ms: int = DEFAULT_PADDING_MS) -> TimeInterval:
    """Spoken interval of ``span`` widened by ``padding_ms`` on both sides."""
    if padding_ms < 0:
        raise ValueError("padding_ms must be >= 0")
    t.check_span(span)
    start = t.words[span.first].start_ms - padding_ms
    end = t.words[span.last].end_ms + padding_ms
    return TimeInterval(max(0, start), max(0, end))
