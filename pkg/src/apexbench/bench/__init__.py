"""The benchmark applications, their workloads and datasets."""

from .catalog import BY_NAME, CATALOG, DEFAULT_ITERATIONS, BenchDescriptor, Group, in_group, names, resolve
from .datasets import DEFAULT_SEED, WorkloadData

__all__ = [
    "BY_NAME", "CATALOG", "DEFAULT_ITERATIONS", "DEFAULT_SEED", "BenchDescriptor", "Group",
    "WorkloadData", "in_group", "names", "resolve",
]
