"""Reward-decomposed tabular agents, policy summaries and their explanations."""

from .core import HyperParams, Observation, Trace, TraceStep, greedy_action, q_sum, sum_components
from .learner import DecomposedQ, hra_update, select_action, train
from .recorder import record
from .summarizer import Metric, Selection, Summary, SummaryItem, SummarySpec, summarize

__all__ = [
    "DecomposedQ", "HyperParams", "Metric", "Observation", "Selection", "Summary",
    "SummaryItem", "SummarySpec", "Trace", "TraceStep", "greedy_action", "hra_update",
    "q_sum", "record", "select_action", "sum_components", "summarize", "train",
]
