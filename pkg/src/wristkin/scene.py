"""Plot-ready scene files: labeled points and segments for one or more
assembled poses, as minimal self-describing JSON consumable by any
plotting tool."""

from __future__ import annotations

import json
import math

import numpy as np

from .mechanism import MechanismParams, PoseSolution

SCENE_FORMAT = "wristkin-scene/1"


def build_scene(m: MechanismParams, poses, labels=None, scale_mm=None) -> dict:
    """Scene dict for the given poses.

    Points carry pose-index suffixes when more than one pose is given;
    segments reference point labels.  Coordinates are multiplied by
    scale_mm (default: the mechanism's) for physical output.
    """
    poses = list(poses)
    scale = m.scale_mm if scale_mm is None else float(scale_mm)
    labels = labels or [f"pose{k}" for k in range(len(poses))]
    points: dict[str, list[float]] = {"O": [0.0, 0.0, 0.0]}
    segments: list[dict] = []
    axis_len = 0.4 * m.link_length

    def put(name, p):
        v = [float(x) * scale for x in p]
        if not all(math.isfinite(x) for x in v):
            raise ValueError(f"non-finite coordinate for point {name}")
        points[name] = v
        return name

    for tag, pose in zip(labels, poses):
        sfx = "" if len(poses) == 1 else f"_{tag}"
        names = {}
        for key, p in (("A1", pose.a1), ("A2", pose.a2), ("B1", pose.b1),
                       ("B2", pose.b2), ("C1", pose.c1), ("C2", pose.c2)):
            names[key] = put(key + sfx, p)
        for leg in (1, 2):
            segments.append({"from": names[f"A{leg}"], "to": names[f"B{leg}"],
                             "kind": "link"})
            segments.append({"from": names[f"B{leg}"], "to": names[f"C{leg}"],
                             "kind": "rod"})
            segments.append({"from": "O", "to": names[f"C{leg}"],
                             "kind": "platform"})
        segments.append({"from": names["C1"], "to": names["C2"],
                         "kind": "platform"})
        for leg, axis in ((1, m.i1), (2, m.i2)):
            a = pose.a1 if leg == 1 else pose.a2
            put(f"A{leg}x{sfx}", a + axis_len * axis)
            segments.append({"from": names[f"A{leg}"], "to": f"A{leg}x{sfx}",
                             "kind": "axis"})

    for seg in segments:
        if seg["from"] not in points or seg["to"] not in points:
            raise ValueError(f"segment references undefined point: {seg}")

    meta_poses = []
    for tag, pose in zip(labels, poses):
        meta_poses.append({
            "label": tag,
            "joints": list(pose.joints.as_array()),
            "orientation": list(pose.orientation.as_tuple()),
            "elbow_signs": list(pose.elbow_signs),
            "platform_sign": pose.platform_sign,
        })
    return {
        "format": SCENE_FORMAT,
        "metadata": {"variant": m.variant.value, "scale_mm": scale,
                     "poses": meta_poses},
        "points": points,
        "segments": segments,
    }


def write_scene(scene: dict, path) -> None:
    with open(path, "w") as f:
        json.dump(scene, f, indent=2)
        f.write("\n")
