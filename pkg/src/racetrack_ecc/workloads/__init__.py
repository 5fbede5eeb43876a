"""Workload drivers compiled to protected CIM instructions."""

from .aes import encrypt_block, run_aes
from .counter import run_counter
from .machine import CimMachine, LintError, WorkloadReport, make_engine
from .mmm import run_mmm
from .synthetic import (SyntheticResult, Trace, TraceError, gen_synthetic_trace,
                        measure_op_error_rates, run_trace, simulate_synthetic)

__all__ = [
    "CimMachine", "LintError", "SyntheticResult", "Trace", "TraceError", "WorkloadReport",
    "encrypt_block", "gen_synthetic_trace", "make_engine", "measure_op_error_rates",
    "run_aes", "run_counter", "run_mmm", "run_trace", "simulate_synthetic",
]
