"""Discrete-event simulation and algorithm library for parallel-task scheduling.

Workload classes: gangs, DAGs, bags of tasks and periodic imprecise tasks.
``run`` simulates one of them on a platform under a policy string.
"""
from .engine import FaultConfig, MetricsReport, RunResult, run
from .platform import Platform, PowerModel, Processor, load_platform
from .policies import parse_policy
from .report import compare_trace, metrics_from_trace
from .workload import BotApp, DagApp, Edge, Gang, PeriodicTask, Task, Workload, load_workload

__all__ = [
    "BotApp",
    "DagApp",
    "Edge",
    "FaultConfig",
    "Gang",
    "MetricsReport",
    "PeriodicTask",
    "Platform",
    "PowerModel",
    "Processor",
    "RunResult",
    "Task",
    "Workload",
    "compare_trace",
    "load_platform",
    "load_workload",
    "metrics_from_trace",
    "parse_policy",
    "run",
]
