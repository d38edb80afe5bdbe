"""Emulated partitioned executive."""

from . import calls
from .calls import INFINITE, Call, ProcessAttributes
from .config import (
    ChannelSpec,
    ErrorCode,
    HealthAction,
    HealthMonitorTable,
    PartitionDescriptor,
    PartitionSchedule,
    PortKind,
    ScheduleWindow,
    SystemConfig,
    load_config,
    parse_config,
    single_partition_config,
    validate_config,
)
from .core import (
    Kernel,
    PartitionMode,
    ProcessState,
    SchedulingDecision,
    TraceEvent,
    boot_system,
    exclusive_execution_violations,
)
from .ipc import PortDirection, SamplingMessage

__all__ = [
    "INFINITE", "Call", "ChannelSpec", "ErrorCode", "HealthAction", "HealthMonitorTable", "Kernel",
    "PartitionDescriptor", "PartitionMode", "PartitionSchedule", "PortDirection", "PortKind",
    "ProcessAttributes", "ProcessState", "SamplingMessage", "ScheduleWindow", "SchedulingDecision",
    "SystemConfig", "TraceEvent", "boot_system", "calls", "exclusive_execution_violations",
    "load_config", "parse_config", "single_partition_config", "validate_config",
]
