"""Scenario value types and their JSON file format."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from typing import Optional

from .kinematics import NeedlePose
from .optimizer import CostWeights
from .regions import Region, RegionMap, RegionType, Workspace

N_CRS = (0, 1, 2, 5, 10, 20)
CR_SIZES = (1.0, 2.0, 3.0, 4.0, 5.0, 10.0)
ASSUMED_SIZES = (1.0, 2.0, 3.0, 4.0, 5.0, 10.0)
TR_DISTS = (10.0, 20.0, 30.0, 40.0, 50.0)
KNOWN_PCTS = (0, 20, 40, 60, 80, 100)

AXES = {
    "n_crs": N_CRS,
    "cr_size_mm": CR_SIZES,
    "assumed_cr_size_mm": ASSUMED_SIZES,
    "tr_dist_mm": TR_DISTS,
    "known_pct": KNOWN_PCTS,
}


@dataclass(frozen=True)
class ScenarioParams:
    n_crs: int = 5
    cr_size_mm: float = 3.0
    assumed_cr_size_mm: float = 3.0
    tr_dist_mm: float = 30.0
    known_pct: int = 0
    tr_radius_mm: float = 4.0

    def check(self) -> None:
        for name, allowed in AXES.items():
            if getattr(self, name) not in allowed:
                raise ValueError(f"{name}={getattr(self, name)} not in {allowed}")


@dataclass(frozen=True)
class Scenario:
    params: ScenarioParams
    seed: int
    insertion: NeedlePose
    true_map: RegionMap
    known: tuple = ()
    reference_path: tuple = ()
    weights: Optional[CostWeights] = None

    @property
    def assumed_radius(self) -> float:
        return self.params.assumed_cr_size_mm

    def model_map(self) -> RegionMap:
        """The model's initial knowledge: the known CRs and the target."""
        crs = tuple(r for r, k in zip(self.true_map.crs, self.known) if k)
        return replace(self.true_map, crs=crs, known_safe=frozenset())

    def to_dict(self) -> dict:
        m = self.true_map
        ws = m.workspace
        out = {
            "seed": self.seed,
            "params": {f.name: getattr(self.params, f.name) for f in fields(self.params)},
            "workspace": [ws.x0, ws.y0, ws.x1, ws.y1],
            "cell": m.cell,
            "dr_width": m.dr_width,
            "safety_margin": m.safety_margin,
            "insertion": _pose_dict(self.insertion),
            "crs": [{"x": r.center[0], "y": r.center[1], "r": r.radius, "known": bool(k)}
                    for r, k in zip(m.crs, self.known)],
            "tr": None if m.tr is None else {"x": m.tr.center[0], "y": m.tr.center[1], "r": m.tr.radius},
            "reference_path": [_pose_dict(p) for p in self.reference_path],
        }
        if self.weights is not None:
            w = self.weights
            out["weights"] = {"rot": w.w_rot, "len": w.w_len, "clear": w.w_clear,
                              "ur": w.w_ur, "center": w.w_center}
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        ws = Workspace(*d["workspace"])
        crs = tuple(Region((c["x"], c["y"]), c["r"], RegionType.CR) for c in d.get("crs", []))
        known = tuple(bool(c.get("known", False)) for c in d.get("crs", []))
        tr = d.get("tr")
        tr_region = None if tr is None else Region((tr["x"], tr["y"]), tr["r"], RegionType.TR)
        rmap = RegionMap(ws, crs, tr_region, frozenset(), d.get("dr_width", 5.0),
                         d.get("safety_margin", 3.5), d.get("cell", 1.0))
        weights = None
        if "weights" in d:
            w = d["weights"]
            weights = CostWeights(w.get("rot", 5.0), w.get("len", 1.0), w.get("clear", 3.0),
                                  w.get("ur", 10.0), w.get("center", 2.0))
        params = ScenarioParams(**d.get("params", {}))
        return cls(params, int(d.get("seed", 0)), _pose_from(d["insertion"]), rmap, known,
                   tuple(_pose_from(p) for p in d.get("reference_path", [])), weights)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def load(cls, path) -> "Scenario":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _pose_dict(p: NeedlePose) -> dict:
    return {"x": p.x, "y": p.y, "theta": p.theta, "bevel": p.bevel}


def _pose_from(d: dict) -> NeedlePose:
    return NeedlePose(d["x"], d["y"], d.get("theta", 0.0), d.get("bevel", 1))
