from walkopt.export.cp import CpModelText, build_cp, export_cp
from walkopt.export.milp import ExportSummary, MilpModel, build_milp, export_milp, render_lp
from walkopt.export.solution import ImportResult, import_solution, parse_solution

__all__ = [
    "CpModelText",
    "ExportSummary",
    "ImportResult",
    "MilpModel",
    "build_cp",
    "build_milp",
    "export_cp",
    "export_milp",
    "import_solution",
    "parse_solution",
    "render_lp",
]
