"""Loading line and tree spec files."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .chain import chain_from_dict, coefficients_from_dict
from .errors import SpecParseError
from .report import file_digest
from .tree import tree_from_dict

KINDS = ("line", "tree")


@dataclass
class LoadedSpec:
    kind: str
    data: dict
    digest: str

    def chain(self, normalize=False):
        if self.kind != "line":
            raise SpecParseError(f"expected a line spec, got kind {self.kind!r}")
        if "rows" not in self.data:
            raise SpecParseError("line spec has no 'rows'")
        return chain_from_dict(self.data, normalize=normalize)

    def tree(self, normalize=False):
        if self.kind != "tree":
            raise SpecParseError(f"expected a tree spec, got kind {self.kind!r}")
        return tree_from_dict(self.data, normalize=normalize)

    def model(self, normalize=False) -> Any:
        return self.chain(normalize) if self.kind == "line" else self.tree(normalize)

    def coefficients(self):
        if "coefficients" not in self.data:
            raise SpecParseError("spec has no 'coefficients' entry to classify")
        return coefficients_from_dict(self.data["coefficients"])


def parse_spec(raw: bytes) -> LoadedSpec:
    try:
        data = json.loads(raw.decode("utf-8"))
    except json.JSONDecodeError as exc:
        raise SpecParseError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from None
    except UnicodeDecodeError as exc:
        raise SpecParseError(f"spec is not UTF-8: {exc}") from None
    if not isinstance(data, dict):
        raise SpecParseError("spec must be a JSON object")
    kind = data.get("kind", "line")
    if kind not in KINDS:
        raise SpecParseError(f"unknown kind {kind!r}; expected one of {KINDS}")
    return LoadedSpec(kind, data, file_digest(raw))


def load_spec(path) -> LoadedSpec:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise SpecParseError(f"cannot read {path}: {exc.strerror}") from None
    return parse_spec(raw)
