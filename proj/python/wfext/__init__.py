"""Wait-free resizable extendible hash table.

The heavy lifting lives in the `_wfext` extension module; this package
re-exports its public surface.
"""

from ._wfext import (
    LockedTable,
    Table,
    key_bits,
    run_lincheck,
    run_resize_benchmark,
    run_throughput,
    __version__,
)

__all__ = [
    "LockedTable",
    "Table",
    "key_bits",
    "run_lincheck",
    "run_resize_benchmark",
    "run_throughput",
    "__version__",
]
