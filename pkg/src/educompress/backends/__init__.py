"""Pluggable producers of structure trees and relevance scores."""

from .base import InferenceEndpointConfig, PromptTemplate, TokenUsage
from .layout import layout_extract
from .mockserver import MockInferenceServer, ScriptedResponse, chat_payload, rerank_payload
from .prompts import DECOMPOSE_TEMPLATE, QA_TEMPLATE
from .refine import AuditConfig, CritiqueReport, RefineOutcome, solver_critic_refine
from .remote import RemoteClient, decompose_remote, generate, score_remote, strip_reply

__all__ = [
    "AuditConfig",
    "CritiqueReport",
    "DECOMPOSE_TEMPLATE",
    "InferenceEndpointConfig",
    "MockInferenceServer",
    "PromptTemplate",
    "QA_TEMPLATE",
    "RefineOutcome",
    "RemoteClient",
    "ScriptedResponse",
    "TokenUsage",
    "chat_payload",
    "decompose_remote",
    "generate",
    "layout_extract",
    "rerank_payload",
    "score_remote",
    "solver_critic_refine",
    "strip_reply",
]
