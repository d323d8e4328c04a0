"""wasisurf - map WASI/WASIX interface implementations to reachable syscalls/APIs.

The pipeline parses whole-program textual SSA IR of a Wasm runtime, links it
into a single module, discovers trait-object dispatch tables, resolves indirect
calls by fixed-point iteration, and walks the resulting call graph from the
WASI/WASIX interface entry points down to OS-boundary sinks.  The result is an
attack-surface report: per interface, the syscalls and external APIs it can
reach, with call-chain slices, parameter-taint facts, and recovered constant
arguments, classified by resource-exhaustion strategy.
"""

__version__ = "0.1.0"
