"""Diagnostics shared by the parser and the checker."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Optional

from psamathe.syntax import Span


@dataclass(frozen=True)
class Diagnostic:
    message: str
    span: Optional[Span]
    severity: str = "error"
    code: Optional[str] = None

    def format(self, path: str, color: Optional[bool] = None) -> str:
        if color is None:
            color = os.environ.get("PSAMATHE_COLOR", "0") == "1"
        label = self.severity if self.code is None else f"{self.severity}[{self.code}]"
        if color:
            label = f"\x1b[31m{label}\x1b[0m"
        line, col = (self.span.line, self.span.col) if self.span else (0, 0)
        return f"{path}:{line}:{col}: {label}: {self.message}"

    def to_json(self, path: str) -> str:
        line, col = (self.span.line, self.span.col) if self.span else (0, 0)
        return json.dumps({
            "code": self.code or "ParseError",
            "severity": self.severity,
            "message": self.message,
            "file": path,
            "line": line,
            "col": col,
        }, sort_keys=True)
