"""The persisted causal-model artifact.

A CausalModel bundles the retained links (each with test statistics and
provenance) together with the full inference matrix of the run that last
produced or updated it. The matrix rides along because the stationarity
check and the p-value-minimizing merge both need every cell, not only the
significant ones. Models serialize to a single self-describing JSON
document whose floats round-trip bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import CorruptFile, RangeError, SchemaVersionUnsupported
from .pcmci import InferenceMatrix, LinkKey, LinkStats, significant_links
from .timeseries import VariableSet

SCHEMA_VERSION = 1


@dataclass(frozen=True, eq=False)
class CausalModel:
    """Immutable model value: links, their stats, and the producing matrix."""

    variables: VariableSet
    tau_max: int
    alpha_link: float
    links: Mapping[LinkKey, LinkStats]
    inference: InferenceMatrix
    run_counter: int
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha_link < 1.0:
            raise RangeError(f"alpha_link must lie in (0, 1), got {self.alpha_link}")
        if self.run_counter < 0:
            raise RangeError("run_counter must be >= 0")
        if self.inference.variables != self.variables or self.inference.tau_max != self.tau_max:
            raise RangeError("inference matrix does not match the model's variables/tau_max")
        n = self.variables.count
        for key, stats in self.links.items():
            if not (0 <= key.cause < n and 0 <= key.effect < n):
                raise RangeError(f"link {key} references a variable outside the set")
            if key.lag > self.tau_max:
                raise RangeError(f"link {key} exceeds tau_max {self.tau_max}")
            if stats.p_value > self.alpha_link:
                raise RangeError(
                    f"link {key} has p {stats.p_value} above alpha_link {self.alpha_link}"
                )
        object.__setattr__(self, "links", dict(sorted(self.links.items())))

    @property
    def link_count(self) -> int:
        return len(self.links)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CausalModel):
            return NotImplemented
        return (
            self.variables == other.variables
            and self.tau_max == other.tau_max
            and self.alpha_link == other.alpha_link
            and self.run_counter == other.run_counter
            and self.schema_version == other.schema_version
            and dict(self.links) == dict(other.links)
            and self.inference == other.inference
        )


def build_model(matrix: InferenceMatrix, alpha_link: float, run_id: int) -> CausalModel:
    """Retain the matrix's significant cells as the model's links."""
    return CausalModel(
        variables=matrix.variables,
        tau_max=matrix.tau_max,
        alpha_link=alpha_link,
        links=significant_links(matrix, alpha_link, run_id),
        inference=matrix,
        run_counter=run_id,
    )


def _model_to_obj(model: CausalModel) -> dict:
    return {
        "schema_version": model.schema_version,
        "variables": list(model.variables.names),
        "tau_max": model.tau_max,
        "alpha_link": model.alpha_link,
        "run_counter": model.run_counter,
        "links": [
            {
                "cause": key.cause,
                "effect": key.effect,
                "lag": key.lag,
                "statistic": stats.statistic,
                "p_value": stats.p_value,
                "source_run": stats.source_run,
                "sample_count": stats.sample_count,
            }
            for key, stats in model.links.items()
        ],
        "inference": {
            "statistic": model.inference.statistic.tolist(),
            "p_value": model.inference.p_value.tolist(),
            "sample_count": model.inference.sample_count,
            "produced_at": model.inference.produced_at,
        },
    }


def _model_from_obj(obj: dict) -> CausalModel:
    if not isinstance(obj, dict):
        raise CorruptFile("model document must be a JSON object")
    if "schema_version" not in obj:
        raise CorruptFile("model document lacks a schema_version field")
    version = obj["schema_version"]
    if version != SCHEMA_VERSION:
        raise SchemaVersionUnsupported(version)
    try:
        variables = VariableSet(tuple(obj["variables"]))
        tau_max = int(obj["tau_max"])
        inference = InferenceMatrix(
            variables=variables,
            tau_max=tau_max,
            statistic=np.array(obj["inference"]["statistic"], dtype=np.float64),
            p_value=np.array(obj["inference"]["p_value"], dtype=np.float64),
            sample_count=int(obj["inference"]["sample_count"]),
            produced_at=int(obj["inference"]["produced_at"]),
        )
        links = {}
        for entry in obj["links"]:
            key = LinkKey(int(entry["cause"]), int(entry["effect"]), int(entry["lag"]))
            links[key] = LinkStats(
                statistic=float(entry["statistic"]),
                p_value=float(entry["p_value"]),
                source_run=int(entry["source_run"]),
                sample_count=int(entry["sample_count"]),
            )
        return CausalModel(
            variables=variables,
            tau_max=tau_max,
            alpha_link=float(obj["alpha_link"]),
            links=links,
            inference=inference,
            run_counter=int(obj["run_counter"]),
        )
    except (KeyError, TypeError, ValueError, RangeError) as exc:
        raise CorruptFile(f"malformed model document: {exc}") from exc


def save(model: CausalModel, path: str | Path) -> None:
    text = json.dumps(_model_to_obj(model), indent=1, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def load(path: str | Path) -> CausalModel:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CorruptFile(f"cannot read model file {path}: {exc}") from exc
    if not text.strip():
        raise CorruptFile(f"model file {path} is empty")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorruptFile(f"model file {path} is not valid JSON: {exc}") from exc
    return _model_from_obj(obj)


def export_dot(model: CausalModel) -> str:
    """Render the link graph as DOT text, deterministically ordered."""
    lines = ["digraph causal_model {", "  rankdir=LR;"]
    for name in model.variables.names:
        lines.append(f'  "{name}";')
    for key in sorted(model.links):
        stats = model.links[key]
        cause = model.variables.names[key.cause]
        effect = model.variables.names[key.effect]
        label = f"lag={key.lag}, p={stats.p_value:#.3g}"
        lines.append(f'  "{cause}" -> "{effect}" [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
