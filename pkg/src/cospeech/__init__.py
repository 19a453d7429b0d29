"""Gesture-assisted spoken commands for a 3D scene, without a headset.

Typical use::

    from cospeech import load_scene, parse_transcript, load_trace, plan_rules, resolve

    plan = plan_rules(transcript, scene)
    outcome = resolve(plan, trace, scene)
"""

from .errors import (
    BackendError,
    BackendTimeout,
    BackendUnreachable,
    CospeechError,
    MalformedReply,
    NoFunctionMatched,
)
from .extraction import GestureExtractor, build_cone, extract_object
from .fitting import CircleFit, LineFit, SineFit, dtw_similarity, fit_shape
from .functions import DEFAULT_CATALOG, FunctionCall, FunctionCatalog, ParamKind, execute_call
from .gesture import GestureTrace, load_trace, segment
from .intent import Plan, parse_backend_reply, plan_llm, plan_rules, render_metaprompt
from .pipeline import (
    ClarificationRequest,
    CommandResolver,
    ExecutedResult,
    clarification_message,
    resolve,
    run_utterance,
)
from .scene import Scene, SceneObject, load_scene, serialize_scene
from .transcript import Transcript, parse_transcript, token_window

__version__ = "0.1.0"

__all__ = [
    "BackendError", "BackendTimeout", "BackendUnreachable", "CircleFit", "ClarificationRequest",
    "CommandResolver", "CospeechError", "DEFAULT_CATALOG", "ExecutedResult", "FunctionCall",
    "FunctionCatalog", "GestureExtractor", "GestureTrace", "LineFit", "MalformedReply",
    "NoFunctionMatched", "ParamKind", "Plan", "Scene", "SceneObject", "SineFit", "Transcript",
    "build_cone", "clarification_message", "dtw_similarity", "execute_call", "extract_object",
    "fit_shape", "load_scene", "load_trace", "parse_backend_reply", "parse_transcript",
    "plan_llm", "plan_rules", "render_metaprompt", "resolve", "run_utterance", "segment",
    "serialize_scene", "token_window",
]
