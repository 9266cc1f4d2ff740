"""Layered anatomy rendering: record -> region statuses -> composed SVG.

A blank base figure is stacked with one colored fragment per anatomical
region. Geometry comes from an external asset file so the artwork can be
replaced without touching code; this module only decides colors and order.
Output is byte-deterministic for a given scene.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .model import (
    DrainStatus,
    OperationRecord,
    Preservation,
    RemovalStatus,
    ResectionKind,
    mentioned,
)


class RegionStatus(Enum):
    RESECTED = "resected"
    PRESERVED = "preserved"
    NOT_MENTIONED = "not-mentioned"


#: Fixed layering order; every scene carries every region exactly once.
REGION_INVENTORY: tuple[str, ...] = (
    "THYROID_LOBE_RIGHT",
    "THYROID_LOBE_LEFT",
    "ISTHMUS",
    "CENTRAL_LN_RIGHT",
    "CENTRAL_LN_LEFT",
    "LATERAL_LN_RIGHT",
    "LATERAL_LN_LEFT",
    "PARATHYROID_UR",
    "PARATHYROID_LR",
    "PARATHYROID_UL",
    "PARATHYROID_LL",
    "RLN_RIGHT",
    "RLN_LEFT",
    "DRAIN",
)

STATUS_COLORS: dict[RegionStatus, str] = {
    RegionStatus.RESECTED: "#C0392B",
    RegionStatus.PRESERVED: "#27AE60",
    RegionStatus.NOT_MENTIONED: "#BDC3C7",
}


@dataclass(frozen=True)
class AnatomyScene:
    """Ordered region -> status map; the only input the renderer needs."""

    regions: tuple[tuple[str, RegionStatus], ...]

    def __post_init__(self) -> None:
        ids = tuple(region_id for region_id, _ in self.regions)
        if ids != REGION_INVENTORY:
            raise ValueError("scene must list every region exactly once, in inventory order")

    def status(self, region_id: str) -> RegionStatus:
        for rid, status in self.regions:
            if rid == region_id:
                return status
        raise KeyError(region_id)


# ---------------------------------------------------------------------------
# Record -> scene
# ---------------------------------------------------------------------------

_PRESERVATION_TO_STATUS = {
    Preservation.PRESERVED: RegionStatus.PRESERVED,
    Preservation.NOT_PRESERVED: RegionStatus.RESECTED,
    # a gland that was never seen has no displayable fate
    Preservation.NOT_IDENTIFIED: RegionStatus.NOT_MENTIONED,
}

_LATERAL_NOTE_RE = re.compile(r"during (left|right) lateral neck dissection", re.IGNORECASE)
_CENTRAL_SIDE_RE = re.compile(r"\b(bilateral|left|right) central lymph node dissection", re.IGNORECASE)


def _note_texts(record: OperationRecord) -> list[str]:
    return [note.text for note in record.notes]


def build_scene(record: OperationRecord) -> AnatomyScene:
    """Deterministic field-by-field mapping; transcript text plays no part.

    Drain semantics: INSERTED marks the drain layer "resected" (an
    intervention present), NOT_INSERTED marks it "preserved" (site intact).
    """
    status: dict[str, RegionStatus] = {rid: RegionStatus.NOT_MENTIONED for rid in REGION_INVENTORY}

    rng = record.thyroid_resection_range
    if mentioned(rng):
        if rng.kind is ResectionKind.TOTAL:
            status["THYROID_LOBE_RIGHT"] = RegionStatus.RESECTED
            status["THYROID_LOBE_LEFT"] = RegionStatus.RESECTED
            status["ISTHMUS"] = RegionStatus.RESECTED
        elif rng.kind is ResectionKind.LOBECTOMY_LEFT:
            status["THYROID_LOBE_LEFT"] = RegionStatus.RESECTED
            status["THYROID_LOBE_RIGHT"] = RegionStatus.PRESERVED
        elif rng.kind is ResectionKind.LOBECTOMY_RIGHT:
            status["THYROID_LOBE_RIGHT"] = RegionStatus.RESECTED
            status["THYROID_LOBE_LEFT"] = RegionStatus.PRESERVED
        elif rng.kind is ResectionKind.ISTHMUSECTOMY:
            status["ISTHMUS"] = RegionStatus.RESECTED
            status["THYROID_LOBE_RIGHT"] = RegionStatus.PRESERVED
            status["THYROID_LOBE_LEFT"] = RegionStatus.PRESERVED
        # OTHER carries free text the scene cannot interpret

    removal = record.lymph_node_removal
    if mentioned(removal):
        if removal is RemovalStatus.PERFORMED:
            sides = set()
            for text in [record.surgery_method if mentioned(record.surgery_method) else ""] \
                    + _note_texts(record):
                for m in _CENTRAL_SIDE_RE.finditer(text or ""):
                    word = m.group(1).lower()
                    if word == "bilateral":
                        sides.update({"RIGHT", "LEFT"})
                    else:
                        sides.add(word.upper())
            if not sides:
                sides = {"RIGHT", "LEFT"}
            for side in sides:
                status[f"CENTRAL_LN_{side}"] = RegionStatus.RESECTED
        else:
            status["CENTRAL_LN_RIGHT"] = RegionStatus.PRESERVED
            status["CENTRAL_LN_LEFT"] = RegionStatus.PRESERVED

    # lateral compartments are only ever described in notes
    for text in _note_texts(record):
        m = _LATERAL_NOTE_RE.search(text)
        if m:
            status[f"LATERAL_LN_{m.group(1).upper()}"] = RegionStatus.RESECTED

    gland_fields = {
        "PARATHYROID_UR": record.parathyroid_upper_right,
        "PARATHYROID_LR": record.parathyroid_lower_right,
        "PARATHYROID_UL": record.parathyroid_upper_left,
        "PARATHYROID_LL": record.parathyroid_lower_left,
        "RLN_RIGHT": record.rln_right,
        "RLN_LEFT": record.rln_left,
    }
    for region_id, value in gland_fields.items():
        if mentioned(value):
            status[region_id] = _PRESERVATION_TO_STATUS[value]

    drain = record.drain_insertion
    if mentioned(drain):
        status["DRAIN"] = (
            RegionStatus.RESECTED if drain is DrainStatus.INSERTED else RegionStatus.PRESERVED
        )

    return AnatomyScene(tuple((rid, status[rid]) for rid in REGION_INVENTORY))


# ---------------------------------------------------------------------------
# Scene -> SVG
# ---------------------------------------------------------------------------

_BASE_RE = re.compile(r"<!-- base -->\n(.*?)\n<!-- /base -->", re.DOTALL)
_REGION_RE = re.compile(r"<!-- region:(\w+) -->\n(.*?)\n<!-- /region -->", re.DOTALL)


@dataclass(frozen=True)
class _Asset:
    base: str
    regions: dict[str, str]


@lru_cache(maxsize=4)
def _load_asset(path: str | None = None) -> _Asset:
    if path is None:
        text = (resources.files("thyrostruct.assets") / "anatomy.svg").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    base_match = _BASE_RE.search(text)
    if not base_match:
        raise ValueError("asset file lacks a base block")
    regions = {name: body for name, body in _REGION_RE.findall(text)}
    missing = set(REGION_INVENTORY) - set(regions)
    if missing:
        raise ValueError(f"asset file lacks regions: {sorted(missing)}")
    return _Asset(base_match.group(1), regions)


_SVG_HEADER = (
    '<?xml version="1.0" encoding="UTF-8"?>\n'
    '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="800" height="600" '
    'viewBox="0 0 800 600">\n'
)


def render_svg(scene: AnatomyScene, asset_path: str | None = None) -> str:
    """Compose base + fragments. Identical scenes yield identical bytes."""
    asset = _load_asset(asset_path)
    parts = [_SVG_HEADER, asset.base, "\n"]
    for region_id, status in scene.regions:
        content = asset.regions[region_id].replace("currentColor", STATUS_COLORS[status])
        parts.append(
            f'<g id="region-{region_id}" class="region layer" data-status="{status.value}">\n'
            f"{content}\n</g>\n"
        )
    parts.append("</svg>\n")
    return "".join(parts)


def render_record(record: OperationRecord, asset_path: str | None = None) -> str:
    return render_svg(build_scene(record), asset_path)
