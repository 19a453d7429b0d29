"""From a transcript to a plan of function calls.

A plan binds each parameter of each call either to a literal read from the
words (``text_params``) or to an :class:`AmbiguousParam` that the gesture
extractor fills later. The two sets never overlap and together cover the
function's signature.

Two planners share that contract: :func:`plan_rules`, a fixed keyword
grammar that needs no network, and :func:`plan_llm`, which asks a language
model backend and validates its JSON reply.
"""

from __future__ import annotations

import json
import logging
import os
import re
from dataclasses import dataclass, field
from typing import Protocol

import httpx
import numpy as np
from scipy.spatial.transform import Rotation

from .errors import (
    BackendTimeout,
    BackendUnreachable,
    EmptyTranscript,
    MalformedReply,
    NoFunctionMatched,
)
from .fitting import SHAPE_TYPES
from .functions import (
    COLOR_ALIASES,
    COLORS,
    DEFAULT_CATALOG,
    FunctionCatalog,
    ParamKind,
    ResultRef,
    general_error_message,
)
from .geometry import euler_to_rotation, rotation_to_euler
from .scene import Scene, serialize_scene
from .transcript import TokenSpan, Transcript

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AmbiguousParam:
    name: str
    kind: ParamKind
    token: TokenSpan
    ignore_objects: tuple[str, ...] = ()


@dataclass
class PlannedCall:
    function: str
    text_params: dict = field(default_factory=dict)
    amb_params: list[AmbiguousParam] = field(default_factory=list)
    # words that produced each text parameter, when known
    text_spans: dict = field(default_factory=dict)

    def partition_errors(self, catalog: FunctionCatalog = DEFAULT_CATALOG) -> list[str]:
        """Violations of the text/ambiguous partition for this call (empty if valid)."""
        expected = set(catalog[self.function].param_names)
        text = set(self.text_params)
        amb_names = [a.name for a in self.amb_params]
        amb = set(amb_names)
        problems = []
        if len(amb_names) != len(amb):
            problems.append("a parameter is listed twice as ambiguous")
        if text & amb:
            problems.append(f"bound both ways: {sorted(text & amb)}")
        if text | amb != expected:
            missing, extra = expected - (text | amb), (text | amb) - expected
            if missing:
                problems.append(f"unbound: {sorted(missing)}")
            if extra:
                problems.append(f"not in signature: {sorted(extra)}")
        return problems


@dataclass
class Plan:
    calls: list[PlannedCall]
    # source words, needed to turn token spans into time windows
    transcript: Transcript | None = field(default=None, repr=False, compare=False)

    def __len__(self):
        return len(self.calls)

    def to_data(self) -> dict:
        return {"calls": [
            {
                "function": c.function,
                "text_params": {k: encode_value(v) for k, v in c.text_params.items()},
                "amb_params": [
                    {"name": a.name, "kind": a.kind.value, "token": a.token.to_list(),
                     "ignore_objects": list(a.ignore_objects)}
                    for a in c.amb_params
                ],
            }
            for c in self.calls
        ]}


def encode_value(value):
    """JSON-friendly form of a parameter value."""
    if isinstance(value, ResultRef):
        return {"result_of": value.call_index}
    if isinstance(value, Rotation):
        return [float(v) for v in rotation_to_euler(value)]
    if isinstance(value, np.ndarray):
        return [float(v) for v in value]
    if isinstance(value, (list, tuple)):
        return [encode_value(v) for v in value]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if hasattr(value, "polyline"):
        return {"points": [[float(c) for c in p] for p in value.polyline]}
    return value


# ================================================================ metaprompt

_PROMPT_HEADER = """\
You turn spoken requests into function calls that change a 3D scene.
The user speaks while gesturing with their hands. Work in three steps:
1. Split the request into the sequence of function calls it needs, one call per sub-request, in the order they should run.
2. For every call, fill each parameter whose value is stated in the words or can be read from the scene information (object names, colors, numbers with units, shape names).
3. A parameter whose value only the user's gesture can give ("here", "there", "this way", "like this", "this large", "that one") is ambiguous. Do not guess it. List it under amb_params with its kind and the word indices [first, last] of the phrase that refers to it.
A parameter goes either in text_params or in amb_params, never both, and every parameter of the function must appear in one of them.
If the user mentions an object to look past (for example "behind the table"), put that object's name in ignore_objects of the position parameter.
"""

_PROMPT_HEADER_VOICE_ONLY = """\
You turn spoken requests into function calls that change a 3D scene.
Work in two steps:
1. Split the request into the sequence of function calls it needs, one call per sub-request, in the order they should run.
2. For every call, determine the value of every parameter from the words and the scene information alone. Estimate positions, directions, rotations and sizes numerically from the scene when the words are vague.
Every parameter must be in text_params; amb_params must always be an empty list.
"""

_KIND_FORMATS = {
    ParamKind.POSITION: "[x, y, z] in meters",
    ParamKind.OBJECT: 'object name from the scene, or {"result_of": i} for the result of call i',
    ParamKind.OBJECT_LIST: 'list of object names, or {"result_of": i}',
    ParamKind.DIRECTION: "[x, y, z] unit vector (y is up)",
    ParamKind.ROTATION: "[x, y, z] Euler angles in degrees",
    ParamKind.SIZE: "number in meters (largest extent)",
    ParamKind.PATH: "gesture only; always ambiguous",
    ParamKind.COLOR: "color name (" + ", ".join(COLORS) + ")",
    ParamKind.SHAPE_TYPE: " | ".join(SHAPE_TYPES),
}

_REPLY_SCHEMA = """\
Reply with JSON only, no prose, in exactly this form:
{"calls": [{"function": "<name>", "text_params": {"<param>": <value>}, "amb_params": [{"name": "<param>", "kind": "<kind>", "token": [<first word index>, <last word index>], "ignore_objects": ["<object name>"]}]}]}
If no available function fits the request, reply {"calls": []}.
"""

TEMPLATES = ("gesture", "voice-only")


def render_function_block(sig) -> str:
    lines = [f"- {sig.render()}: {sig.description}".rstrip()]
    for pname, kind in sig.params:
        lines.append(f"    {pname} ({kind.value}): {_KIND_FORMATS[kind]}")
    return "\n".join(lines)


def render_metaprompt(catalog: FunctionCatalog = DEFAULT_CATALOG, scene: Scene | None = None,
                      template: str = "gesture") -> str:
    if template not in TEMPLATES:
        raise ValueError(f"unknown template {template!r}; expected one of {TEMPLATES}")
    header = _PROMPT_HEADER if template == "gesture" else _PROMPT_HEADER_VOICE_ONLY
    blocks = "\n".join(render_function_block(sig) for sig in catalog)
    scene_json = serialize_scene(scene if scene is not None else Scene())
    return (
        f"{header}\nAvailable functions:\n{blocks}\n\n"
        f"Scene information (positions and scales in meters, rotations in degrees):\n"
        f"{scene_json}\n\n{_REPLY_SCHEMA}"
    )


def render_user_message(t: Transcript) -> str:
    indexed = " ".join(f"[{i}]{w.text}" for i, w in enumerate(t.words))
    return f"Request: {t.text}\nWords with indices: {indexed}"


# ================================================================ rule grammar

_MOVE_VERBS = {"move", "put", "place", "hang", "bring", "set", "drag", "position"}
_ROTATE_VERBS = {"rotate", "turn", "spin", "twist"}
_FACE_VERBS = {"face", "point", "orient", "aim"}
_RESIZE_VERBS = {"resize", "enlarge", "shrink", "scale", "grow"}
_SELECT_VERBS = {"select", "pick", "choose"}
_COLOR_VERBS = {"color", "colour", "paint", "recolor", "recolour"}
_DRAW_VERBS = {"draw", "sketch", "trace"}
VERBS = (_MOVE_VERBS | _ROTATE_VERBS | _FACE_VERBS | _RESIZE_VERBS | _SELECT_VERBS
         | _COLOR_VERBS | _DRAW_VERBS | {"make"})

_CONJUNCTIONS = {"and", "then"}
_FILLERS = {"then", "also", "please", "now", "just"}
_DETERMINERS = {"the", "a", "an", "my", "all", "of", "every", "each", "some"}
_DEMONSTRATIVES = {"this", "that", "these", "those"}
_PRONOUNS = {"it", "them", "they", "one"}
_PROFORM_PLACES = {"here", "there"}
_STOPS = {
    "to", "on", "onto", "in", "into", "at", "from", "toward", "towards", "along", "like",
    "by", "with", "behind", "above", "below", "under", "over", "near", "next", "across",
    "around", "facing", "so", "until", "up", "down", "upward", "upwards", "downward",
    "downwards", "back", "as", "bigger", "smaller", "larger", "big", "large", "small",
    "this", "that", "here", "there", "and", "then", "way", "direction",
} | _PROFORM_PLACES
_SIZE_ADJ = {"large", "big", "small", "tall", "wide", "long", "high", "size", "much", "short"}
_MAKE_SIZE = {"bigger", "smaller", "larger", "big", "large", "small", "size", "taller",
              "shorter", "wider", "this", "that"}
_ROT_DIR_CUES = {"toward", "towards", "facing", "face", "direction", "way", "up", "upward",
                 "upwards", "down", "downward", "downwards"}
_PATH_CUES = {"along", "path", "trajectory", "like"}
_TEXT_DIRECTIONS = {
    "up": (0.0, 1.0, 0.0), "upward": (0.0, 1.0, 0.0), "upwards": (0.0, 1.0, 0.0),
    "down": (0.0, -1.0, 0.0), "downward": (0.0, -1.0, 0.0), "downwards": (0.0, -1.0, 0.0),
}
_SHAPES = {"line": "line", "straight": "line", "circle": "circle", "round": "circle",
           "ring": "circle", "sine": "sine", "wave": "sine", "wavy": "sine",
           "sinusoid": "sine"}
_UNITS = {"m": 1.0, "meter": 1.0, "meters": 1.0, "metre": 1.0, "metres": 1.0,
          "cm": 0.01, "centimeter": 0.01, "centimeters": 0.01, "centimetre": 0.01,
          "centimetres": 0.01, "mm": 0.001, "millimeter": 0.001, "millimeters": 0.001}
_NUMBER = re.compile(r"^(\d+(?:\.\d+)?)([a-z]*)$")
_IGNORE_PREPS = (("behind",), ("in", "front", "of"), ("beyond",), ("past",))


def _is_color(word: str) -> bool:
    return word in COLORS or word in COLOR_ALIASES


def _norm_name(name: str) -> str:
    return " ".join(re.sub(r"[_\-]+", " ", name.casefold()).split())


class _Clause:
    """Word indices of one sub-request plus bookkeeping of consumed words."""

    def __init__(self, idx, words):
        self.idx = idx
        self.words = words  # normalized words of the whole transcript
        self.used = set()

    def w(self, i):
        return self.words[i]

    @property
    def span(self) -> TokenSpan:
        return TokenSpan(self.idx[0], self.idx[-1])

    def free(self, start_pos=0):
        return [i for i in self.idx[start_pos:] if i not in self.used]

    def find_phrase(self, phrases, after=None) -> TokenSpan | None:
        """First unused occurrence of any phrase (tuples of words), longest first."""
        for phrase in sorted(phrases, key=len, reverse=True):
            n = len(phrase)
            for k in range(len(self.idx) - n + 1):
                window = self.idx[k : k + n]
                if after is not None and window[0] <= after:
                    continue
                if window[-1] - window[0] != n - 1:
                    continue
                if any(i in self.used for i in window):
                    continue
                if tuple(self.w(i) for i in window) == phrase:
                    return TokenSpan(window[0], window[-1])
        return None

    def take(self, span: TokenSpan):
        self.used.update(range(span.first, span.last + 1))


def _split_clauses(t: Transcript) -> list[list[int]]:
    words = [w.norm for w in t.words]
    clauses, current = [], []
    for i, w in enumerate(t.words):
        norm = words[i]
        if norm in _CONJUNCTIONS and current:
            j = i + 1
            while j < len(words) and words[j] in _FILLERS | _CONJUNCTIONS:
                j += 1
            if j < len(words) and words[j] in VERBS:
                clauses.append(current)
                current = []
                continue
        if norm:
            current.append(i)
        if re.search(r"[.!?;]$", w.text.strip()) and current:
            clauses.append(current)
            current = []
    if current:
        clauses.append(current)
    return clauses


def _choose_function(c: _Clause, verb_pos: int) -> str:
    verb = c.w(c.idx[verb_pos])
    rest = {c.w(i) for i in c.idx[verb_pos + 1:]}
    rest_list = [c.w(i) for i in c.idx[verb_pos + 1:]]
    has_color = any(_is_color(w) for w in rest)
    if verb in _MOVE_VERBS:
        if rest & _PATH_CUES or "forth" in rest:
            return "move_path"
        return "move"
    if verb in _ROTATE_VERBS:
        if verb == "turn" and rest_list and _is_color(rest_list[-1]):
            return "set_color"
        return "rotate_dir" if rest & _ROT_DIR_CUES else "rotate"
    if verb in _FACE_VERBS:
        return "rotate_dir"
    if verb in _RESIZE_VERBS:
        return "resize"
    if verb in _SELECT_VERBS:
        return "select"
    if verb in _COLOR_VERBS:
        return "set_color"
    if verb in _DRAW_VERBS:
        return "draw_path"
    if verb == "make":
        if has_color and rest_list and _is_color(rest_list[-1]):
            return "set_color"
        if rest & _MAKE_SIZE or any(_NUMBER.match(w) for w in rest):
            return "resize"
        if has_color:
            return "set_color"
    raise NoFunctionMatched(f"no function for verb {verb!r}")


def _noun_phrase(c: _Clause, start_pos: int, function: str) -> list[int]:
    """Indices of the object noun phrase starting at clause position ``start_pos``."""
    out = []
    idx = c.idx[start_pos:]
    last_color = None
    if function == "set_color":
        colors = [i for i in idx if _is_color(c.w(i))]
        last_color = colors[-1] if colors else None
    for k, i in enumerate(idx):
        w = c.w(i)
        if i in c.used or i == last_color:
            break
        if k == 0 and (w in _DEMONSTRATIVES or w in _PRONOUNS):
            out.append(i)
            if w in _PRONOUNS:
                break
            continue
        if w in _STOPS or w in VERBS:
            break
        if _NUMBER.match(w) and not _is_ordinal_label(c, k, idx, out):
            break
        out.append(i)
    return out


def _is_ordinal_label(c: _Clause, k: int, idx: list[int], so_far: list[int]) -> bool:
    # "cube 2": a bare integer right after a noun, with no unit following it
    if not so_far or not c.w(idx[k]).isdigit():
        return False
    return k + 1 >= len(idx) or c.w(idx[k + 1]) not in _UNITS


def _name_candidates(words: list[str], scene: Scene) -> list[str]:
    content = [w for w in words if w not in _DETERMINERS | _DEMONSTRATIVES]
    attempts = [content, [w for w in content if not _is_color(w)]]
    for ws in attempts:
        if not ws:
            continue
        forms = {" ".join(ws)}
        if ws[-1].endswith("s") and len(ws[-1]) > 1:
            forms.add(" ".join(ws[:-1] + [ws[-1][:-1]]))
        exact, partial = [], []
        for obj in scene:
            nm = _norm_name(obj.name)
            for form in forms:
                if nm == form:
                    exact.append(obj.name)
                    break
                if f" {nm} " in f" {form} " or f" {form} " in f" {nm} ":
                    partial.append(obj.name)
                    break
        if exact:
            return exact
        if partial:
            return partial
    return []


def _find_number(c: _Clause) -> tuple[float, TokenSpan] | None:
    for k, i in enumerate(c.idx):
        if i in c.used:
            continue
        m = _NUMBER.match(c.w(i))
        if not m:
            continue
        value, unit = float(m.group(1)), m.group(2)
        last = i
        if not unit and k + 1 < len(c.idx) and c.w(c.idx[k + 1]) in _UNITS:
            unit, last = c.w(c.idx[k + 1]), c.idx[k + 1]
        if unit in _UNITS and value > 0:
            return value * _UNITS[unit], TokenSpan(i, last)
    return None


def _ignore_objects(c: _Clause, scene: Scene) -> tuple[str, ...]:
    names = []
    for prep in _IGNORE_PREPS:
        span = c.find_phrase([prep])
        while span is not None:
            c.take(span)
            pos = c.idx.index(span.last) + 1
            np_idx = []
            for i in c.idx[pos:]:
                w = c.w(i)
                if w in _STOPS - {"that", "this"} or w in VERBS:
                    break
                np_idx.append(i)
            for name in _name_candidates([c.w(i) for i in np_idx], scene):
                if name not in names:
                    names.append(name)
            c.used.update(np_idx)
            span = c.find_phrase([prep])
    return tuple(names)


_POSITION_PHRASES = [("here",), ("there",)] + [
    (d, n) for d in ("this", "that") for n in ("spot", "place", "position", "location", "point", "side")
]
_DIRECTION_PHRASES = [("this", "way"), ("that", "way"), ("this", "direction"),
                      ("that", "direction"), ("there",), ("here",), ("this",), ("that",)]
_ROTATION_PHRASES = [("like", "this"), ("like", "that"), ("this", "much"), ("that", "much"),
                     ("this", "way"), ("that", "way"), ("this",), ("that",)]
_SIZE_PHRASES = ([(d, a) for d in ("this", "that") for a in sorted(_SIZE_ADJ)]
                 + [("like", "this"), ("like", "that"), ("this",), ("that",)])
_PATH_PHRASES = [(d, n) for d in ("this", "that") for n in ("path", "way", "trajectory", "shape", "route")]
_PATH_PHRASES += [("like", "this"), ("like", "that"), ("this",), ("that",)]
_LIST_PHRASES = [("over", "there"), ("over", "here"), ("there",), ("here",)]


def _plan_clause(c: _Clause, scene: Scene, catalog: FunctionCatalog, previous: list[PlannedCall]):
    verb_pos = next((k for k, i in enumerate(c.idx) if c.w(i) in VERBS), None)
    if verb_pos is None:
        raise NoFunctionMatched("no known action verb in: "
                                + " ".join(c.w(i) for i in c.idx))
    function = _choose_function(c, verb_pos)
    if function not in catalog:
        raise NoFunctionMatched(general_error_message(catalog))
    sig = catalog[function]
    c.used.update(c.idx[: verb_pos + 1])
    call = PlannedCall(function)
    ignore = _ignore_objects(c, scene) if function == "move" else ()

    def amb(name, span):
        call.amb_params.append(AmbiguousParam(
            name, sig.kind_of(name), span,
            ignore if sig.kind_of(name) is ParamKind.POSITION else ()))

    def text(name, value, span=None):
        call.text_params[name] = value
        if span is not None:
            call.text_spans[name] = span

    for pname, kind in sig.params:
        if kind in (ParamKind.OBJECT, ParamKind.OBJECT_LIST):
            _fill_object(c, scene, call, pname, kind, verb_pos, function, previous, amb, text)
        elif kind is ParamKind.COLOR:
            # a color adjective inside the noun phrase still counts for select
            colors = [i for i in c.idx[verb_pos + 1:] if _is_color(c.w(i))]
            if colors:
                i = colors[-1]
                word = c.w(i)
                text(pname, COLOR_ALIASES.get(word, word), TokenSpan(i, i))
            else:
                amb(pname, c.span)
        elif kind is ParamKind.POSITION:
            span = c.find_phrase(_POSITION_PHRASES)
            amb(pname, span or c.span)
            if span:
                c.take(span)
        elif kind is ParamKind.DIRECTION:
            word = next((i for i in c.free() if c.w(i) in _TEXT_DIRECTIONS), None)
            if word is not None:
                text(pname, np.array(_TEXT_DIRECTIONS[c.w(word)]), TokenSpan(word, word))
                c.used.add(word)
                continue
            span = c.find_phrase(_DIRECTION_PHRASES)
            amb(pname, span or c.span)
            if span:
                c.take(span)
        elif kind is ParamKind.ROTATION:
            span = c.find_phrase(_ROTATION_PHRASES)
            amb(pname, span or c.span)
            if span:
                c.take(span)
        elif kind is ParamKind.SIZE:
            number = _find_number(c)
            if number is not None:
                text(pname, number[0], number[1])
                c.take(number[1])
                continue
            span = c.find_phrase(_SIZE_PHRASES)
            amb(pname, span or c.span)
            if span:
                c.take(span)
        elif kind is ParamKind.PATH:
            span = c.find_phrase(_PATH_PHRASES)
            amb(pname, span or c.span)
            if span:
                c.take(span)
        elif kind is ParamKind.SHAPE_TYPE:
            word = next((i for i in c.idx if c.w(i) in _SHAPES), None)
            if word is not None:
                text(pname, _SHAPES[c.w(word)], TokenSpan(word, word))
            else:
                amb(pname, c.span)
    return call


def _fill_object(c, scene, call, pname, kind, verb_pos, function, previous, amb, text):
    np_idx = _noun_phrase(c, verb_pos + 1, function)
    c.used.update(np_idx)
    words = [c.w(i) for i in np_idx]
    span = TokenSpan(np_idx[0], np_idx[-1]) if np_idx else None
    head = words[0] if words else None

    if head in _PRONOUNS:
        sel = next((k for k in range(len(previous) - 1, -1, -1)
                    if previous[k].function == "select"), None)
        if sel is not None:
            text(pname, ResultRef(sel), span)
            return
        if head == "it" and previous:
            prev = previous[-1]
            for v in prev.text_params.values():
                if isinstance(v, (str, ResultRef)) and (isinstance(v, ResultRef) or v in scene):
                    text(pname, v, span)
                    return
        amb(pname, span)
        return

    if kind is ParamKind.OBJECT_LIST:
        deictic = c.find_phrase(_LIST_PHRASES)
        if deictic is not None:
            c.take(deictic)
            amb(pname, deictic)
            return
        if head in _DEMONSTRATIVES:
            amb(pname, span)
            return
        names = _name_candidates(words, scene)
        if names:
            text(pname, names, span)
        else:
            amb(pname, span or c.span)
        return

    if words and not (head in _DEMONSTRATIVES and len(words) == 1):
        names = _name_candidates(words, scene)
        if len(names) == 1:
            text(pname, names[0], span)
            return
    amb(pname, span or c.span)


def plan_rules(t: Transcript, scene: Scene, catalog: FunctionCatalog = DEFAULT_CATALOG) -> Plan:
    """Deterministic keyword planner.

    Raises :class:`NoFunctionMatched` when any sub-request has no known verb
    or maps to a function outside ``catalog``.
    """
    if t.is_empty:
        raise EmptyTranscript("cannot plan an empty transcript")
    words = [w.norm for w in t.words]
    calls: list[PlannedCall] = []
    for idx in _split_clauses(t):
        content = [i for i in idx if words[i] not in _FILLERS]
        if not content:
            continue
        calls.append(_plan_clause(_Clause(content, words), scene, catalog, calls))
    if not calls:
        raise NoFunctionMatched(general_error_message(catalog))
    return Plan(calls, t)


# ================================================================ backend replies


def _decode_text(kind: ParamKind, value, where):
    def bad(msg):
        raise MalformedReply(f"{where}: {msg}")

    if isinstance(value, dict):
        if kind in (ParamKind.OBJECT, ParamKind.OBJECT_LIST) and set(value) == {"result_of"}:
            ref = value["result_of"]
            if isinstance(ref, bool) or not isinstance(ref, int) or ref < 0:
                bad("result_of must be a non-negative call index")
            return ResultRef(ref)
        bad("unexpected object value")
    if kind is ParamKind.OBJECT:
        if not isinstance(value, str) or not value.strip():
            bad("object must be a name")
        return value
    if kind is ParamKind.OBJECT_LIST:
        if not isinstance(value, list) or not value or not all(isinstance(v, str) for v in value):
            bad("object list must be a non-empty list of names")
        return list(value)
    if kind in (ParamKind.POSITION, ParamKind.DIRECTION, ParamKind.ROTATION):
        if (not isinstance(value, list) or len(value) != 3
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
            bad(f"{kind.value} must be three numbers")
        arr = np.array(value, dtype=float)
        if not np.all(np.isfinite(arr)):
            bad("non-finite number")
        if kind is ParamKind.DIRECTION and np.linalg.norm(arr) == 0:
            bad("zero direction")
        return euler_to_rotation(arr) if kind is ParamKind.ROTATION else arr
    if kind is ParamKind.SIZE:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
            bad("size must be a positive number")
        return float(value)
    if kind is ParamKind.COLOR:
        if isinstance(value, str) and (value.casefold() in COLORS or value.casefold() in COLOR_ALIASES):
            return value.casefold()
        if (isinstance(value, list) and len(value) == 3
                and all(isinstance(v, (int, float)) and 0 <= v <= 1 for v in value)):
            return tuple(float(v) for v in value)
        bad("unknown color")
    if kind is ParamKind.SHAPE_TYPE:
        if value not in SHAPE_TYPES:
            bad(f"shape_type must be one of {SHAPE_TYPES}")
        return value
    bad(f"{kind.value} cannot be given as text")


def parse_backend_reply(text: str, catalog: FunctionCatalog = DEFAULT_CATALOG,
                        n_words: int | None = None) -> Plan:
    """Strictly parse a backend reply; anything off-schema raises MalformedReply."""
    try:
        data = json.loads(text)
    except (json.JSONDecodeError, TypeError) as exc:
        raise MalformedReply(f"reply is not JSON: {exc}", raw=text) from None
    try:
        return _parse_reply_data(data, catalog, n_words)
    except MalformedReply as exc:
        exc.raw = text
        raise


def _parse_reply_data(data, catalog, n_words):
    if not isinstance(data, dict) or set(data) != {"calls"} or not isinstance(data["calls"], list):
        raise MalformedReply('reply must be an object with exactly one key "calls" holding a list')
    calls = []
    for ci, raw in enumerate(data["calls"]):
        where = f"call {ci}"
        if not isinstance(raw, dict) or not set(raw) <= {"function", "text_params", "amb_params"}:
            raise MalformedReply(f"{where}: unexpected structure")
        fname = raw.get("function")
        if fname not in catalog:
            raise MalformedReply(f"{where}: unknown function {fname!r}")
        sig = catalog[fname]
        tp = raw.get("text_params", {})
        ap = raw.get("amb_params", [])
        if not isinstance(tp, dict) or not isinstance(ap, list):
            raise MalformedReply(f"{where}: text_params must be an object and amb_params a list")
        call = PlannedCall(fname)
        for pname, value in tp.items():
            if pname not in sig.param_names:
                raise MalformedReply(f"{where}: {fname} has no parameter {pname!r}")
            value = _decode_text(sig.kind_of(pname), value, f"{where}.{pname}")
            if isinstance(value, ResultRef) and value.call_index >= ci:
                raise MalformedReply(f"{where}.{pname}: result_of must point to an earlier call")
            call.text_params[pname] = value
        for entry in ap:
            if not isinstance(entry, dict) or not {"name", "kind", "token"} <= set(entry):
                raise MalformedReply(f"{where}: ambiguous parameter needs name, kind and token")
            pname = entry["name"]
            if pname not in sig.param_names:
                raise MalformedReply(f"{where}: {fname} has no parameter {pname!r}")
            try:
                kind = ParamKind.parse(entry["kind"])
            except ValueError:
                raise MalformedReply(f"{where}.{pname}: unknown kind {entry['kind']!r}") from None
            if kind is not sig.kind_of(pname):
                raise MalformedReply(f"{where}.{pname}: kind {kind.value} does not match "
                                     f"{sig.kind_of(pname).value}")
            tok = entry["token"]
            if (not isinstance(tok, list) or len(tok) != 2
                    or not all(isinstance(v, int) and not isinstance(v, bool) for v in tok)
                    or tok[0] < 0 or tok[1] < tok[0]):
                raise MalformedReply(f"{where}.{pname}: token must be [first, last] word indices")
            if n_words is not None and tok[1] >= n_words:
                raise MalformedReply(f"{where}.{pname}: token {tok} outside the transcript")
            ignore = entry.get("ignore_objects", [])
            if not isinstance(ignore, list) or not all(isinstance(v, str) for v in ignore):
                raise MalformedReply(f"{where}.{pname}: ignore_objects must be a list of names")
            call.amb_params.append(AmbiguousParam(pname, kind, TokenSpan(*tok), tuple(ignore)))
        problems = call.partition_errors(catalog)
        if problems:
            raise MalformedReply(f"{where}: " + "; ".join(problems))
        calls.append(call)
    return Plan(calls)


class IntentBackend(Protocol):
    def complete(self, system_prompt: str, user_message: str) -> str: ...


class HttpIntentBackend:
    """POSTs the prompt to an HTTP endpoint and returns the reply text.

    Request body: ``{"system": ..., "input": ..., "model": ...}``. The reply is
    the response body, or its ``"reply"`` field when the body is a JSON
    object carrying one.
    """

    def __init__(self, endpoint: str, token: str | None = None, timeout: float = 30.0,
                 model: str | None = None):
        self.endpoint = endpoint
        self.token = token
        self.timeout = timeout
        self.model = model

    @classmethod
    def from_config(cls, path=None, env=None) -> HttpIntentBackend:
        """Settings from an optional JSON file, overridden by COSPEECH_LLM_* variables."""
        env = os.environ if env is None else env
        cfg = {}
        if path is not None:
            with open(path, encoding="utf-8") as fh:
                cfg = json.load(fh)
        for key in ("endpoint", "token", "timeout", "model"):
            value = env.get(f"COSPEECH_LLM_{key.upper()}")
            if value:
                cfg[key] = value
        if not cfg.get("endpoint"):
            raise BackendUnreachable("no LLM endpoint configured (COSPEECH_LLM_ENDPOINT)")
        return cls(cfg["endpoint"], cfg.get("token"), float(cfg.get("timeout", 30.0)),
                   cfg.get("model"))

    def complete(self, system_prompt: str, user_message: str) -> str:
        headers = {"Authorization": f"Bearer {self.token}"} if self.token else {}
        body = {"system": system_prompt, "input": user_message}
        if self.model:
            body["model"] = self.model
        try:
            resp = httpx.post(self.endpoint, json=body, headers=headers, timeout=self.timeout)
        except httpx.TimeoutException as exc:
            raise BackendTimeout(f"intent backend timed out after {self.timeout} s") from exc
        except httpx.HTTPError as exc:
            raise BackendUnreachable(f"intent backend unreachable: {exc}") from exc
        if resp.status_code >= 400:
            raise BackendUnreachable(f"intent backend returned HTTP {resp.status_code}")
        text = resp.text
        try:
            data = json.loads(text)
        except json.JSONDecodeError:
            return text
        if isinstance(data, dict) and isinstance(data.get("reply"), str):
            return data["reply"]
        return text


def plan_llm(t: Transcript, scene: Scene, catalog: FunctionCatalog = DEFAULT_CATALOG,
             client: IntentBackend | None = None, template: str = "gesture") -> Plan:
    if t.is_empty:
        raise EmptyTranscript("cannot plan an empty transcript")
    if client is None:
        client = HttpIntentBackend.from_config()
    reply = client.complete(render_metaprompt(catalog, scene, template), render_user_message(t))
    log.debug("backend reply: %s", reply)
    plan = parse_backend_reply(reply, catalog, n_words=len(t))
    for ci, call in enumerate(plan.calls):
        for pname, value in call.text_params.items():
            kind = catalog[call.function].kind_of(pname)
            names = [value] if kind is ParamKind.OBJECT and isinstance(value, str) else (
                value if kind is ParamKind.OBJECT_LIST and isinstance(value, list) else [])
            for name in names:
                if name not in scene:
                    raise MalformedReply(f"call {ci}.{pname}: no object named {name!r}", raw=reply)
        if template == "voice-only" and call.amb_params:
            raise MalformedReply(f"call {ci}: voice-only replies cannot leave parameters ambiguous",
                                 raw=reply)
    if not plan.calls:
        raise NoFunctionMatched(general_error_message(catalog))
    plan.transcript = t
    return plan
