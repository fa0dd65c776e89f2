"""LLM access: agent matrix, prompt catalog, and remote/mock backends."""

from .agents import AGENTS, MUTATOR_TEMPERATURE, AgentConfig, agent
from .gateway import (
    AuthError, CompletionRequest, CompletionResponse, Gateway, LLMError,
    RemoteBackend, RemoteUnavailable, complete,
)
from .mock import MockBackend, strip_fences
from .templates import TEMPLATES, PromptTemplate, TemplateError, get_template, render, sections

__all__ = [
    "AGENTS", "AgentConfig", "AuthError", "CompletionRequest", "CompletionResponse",
    "Gateway", "LLMError", "MUTATOR_TEMPERATURE", "MockBackend", "PromptTemplate",
    "RemoteBackend", "RemoteUnavailable", "TEMPLATES", "TemplateError", "agent",
    "complete", "get_template", "render", "sections", "strip_fences",
]
