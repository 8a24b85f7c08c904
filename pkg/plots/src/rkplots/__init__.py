from .figures import (
    EmptyInputError,
    SchemaError,
    plot_convergence,
    plot_work_precision,
    read_rows,
)

__all__ = [
    "SchemaError",
    "EmptyInputError",
    "read_rows",
    "plot_convergence",
    "plot_work_precision",
]
