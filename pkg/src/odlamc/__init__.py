"""Link adaptation simulator comparing OLLA with online-learned MCS selection."""

from .agents import Agent, AgentConfig
from .channel import Channel, ChannelConfig
from .engine import ScenarioConfig, compare, run_episode, sweep
from .mcs_model import CqiTable, McsTable

__all__ = [
    "Agent", "AgentConfig", "Channel", "ChannelConfig", "CqiTable", "McsTable",
    "ScenarioConfig", "compare", "run_episode", "sweep",
]
