# contagio_hipergrafo/services/errors.py
from __future__ import annotations
from typing import Any

__all__ = ["AssumptionViolation", "NotConverged"]


class AssumptionViolation(ValueError):
    """
    Uma hipótese de modelagem (1–8 ou simplex do bi-vírus) não vale.
    A CLI traduz para código de saída 2.
    """

    def __init__(self, message: str, report: Any | None = None):
        super().__init__(message)
        self.report = report


class NotConverged(RuntimeError):
    """
    Método iterativo esgotou o orçamento de iterações.
    Guarda o melhor iterado e o resíduo correspondente (CLI: código 3).
    """

    def __init__(self, message: str, best: Any = None, residual: float = float("nan"), iterations: int = 0):
        super().__init__(message)
        self.best = best
        self.residual = residual
        self.iterations = iterations
