"""The five generation agents: one prompt strategy and temperature each."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class AgentConfig:
    agent_id: str
    temperature: float
    system_prompt: str  # template id
    strategy: str
    purpose: str


AGENTS = (
    AgentConfig("A1", 0.3, "gen_A1", "Standard unit testing", "Reliable structure"),
    AgentConfig("A2", 0.6, "gen_A2", "Emphasize assertion diversity", "Broader observation"),
    AgentConfig("A3", 0.8, "gen_A3", "'Try hard' creative agent", "Path and value exploration"),
    AgentConfig("A4", 0.5, "gen_A4", "Focus on edge conditions", "Boundary case detection"),
    AgentConfig("A5", 0.4, "gen_A5", "Uses long object chains", "Deeper semantic chains"),
)

MUTATOR_TEMPERATURE = 0.5


def agent(agent_id: str) -> AgentConfig:
    for a in AGENTS:
        if a.agent_id == agent_id:
            return a
    raise KeyError(f"unknown agent {agent_id!r}")
