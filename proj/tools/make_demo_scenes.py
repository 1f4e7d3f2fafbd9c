#!/usr/bin/env python3
"""Regenerates data/demo_scenes/ (24 small tabletop scenes, scene/v1)."""

import argparse
import json
import random
from pathlib import Path

AFFORDANCES = {
    "apple": ["pickable"],
    "banana": ["pickable"],
    "carrot": ["pickable"],
    "spoon": ["pickable"],
    "cup": ["pickable", "stackable"],
    "block": ["pickable", "stackable"],
    "can": ["pickable", "placeable-target"],
    "ball": ["pickable", "pushable"],
    "bowl": ["pickable", "placeable-target"],
    "plate": ["placeable-target"],
    "tray": ["placeable-target", "pushable", "wipeable-surface"],
    "counter": ["wipeable-surface"],
    "drawer": ["openable", "closable", "placeable-target"],
    "box": ["openable", "closable", "placeable-target", "pushable"],
    "towel": ["pickable", "foldable", "tool"],
    "cloth": ["pickable", "foldable"],
    "sponge": ["pickable", "tool"],
    "brush": ["pickable", "tool"],
    "crumbs": ["pushable"],
    "bag": ["pickable", "zippable"],
    "stove_knob": ["knob"],
    "light_switch": ["switch"],
    "faucet_lever": ["lever"],
}

# (categories, regions, containment pairs (item, container, relation))
THEMES = [
    (["apple", "bowl", "plate", "stove_knob"], ["shelf"], []),
    (["banana", "plate", "light_switch"], ["bin_area"], []),
    (["cup", "block", "tray"], ["shelf"], [("cup", "tray", "on")]),
    (["crumbs", "brush", "counter"], ["bin_area"], []),
    (["towel", "cloth", "bag"], ["basket"], []),
    (["sponge", "counter", "faucet_lever"], [], []),
    (["carrot", "drawer", "spoon"], [], []),
    (["ball", "box", "apple"], ["corner"], []),
    (["can", "banana", "light_switch"], [], []),
    (["block", "cup", "stove_knob"], ["shelf"], []),
    (["bag", "spoon", "bowl"], [], [("spoon", "bowl", "in")]),
    (["tray", "brush", "crumbs"], ["bin_area"], []),
]


def build_scene(index, rng):
    cats, regions, links = THEMES[index % len(THEMES)]
    cells = [(x, y) for x in range(7) for y in range(7)]
    rng.shuffle(cells)
    objects, relations = [], []
    positions = {}
    for cat in cats:
        oid = cat
        positions[oid] = cells.pop()
    for item, container, kind in links:
        positions[item] = positions[container]
        relations.append({"subject": item, "kind": kind, "object": container})
    contained = {item: container for item, container, _ in links}
    for cat in cats:
        obj = {
            "id": cat,
            "category": cat,
            "affordances": AFFORDANCES[cat],
            "position": list(positions[cat]),
            "containment": contained.get(cat),
        }
        if cat == "stove_knob" and rng.random() < 0.5:
            obj["state"] = "90"
        if cat == "light_switch" and rng.random() < 0.5:
            obj["state"] = "on"
        objects.append(obj)
    ids = list(positions)
    a, b = ids[0], ids[-1]
    relations.append({"subject": a, "kind": "near", "object": b})
    used = set(positions.values())
    free = [c for c in cells if c not in used]
    region_list = [{"name": r, "cell": list(free.pop())} for r in regions]
    return {
        "schema": "scene/v1",
        "scene_id": f"demo_{index:02d}",
        "grid": {"width": 7, "height": 7},
        "objects": objects,
        "relations": relations,
        "regions": region_list,
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data" / "demo_scenes"))
    ap.add_argument("--count", type=int, default=24)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i in range(args.count):
        scene = build_scene(i, rng)
        (out / f"{scene['scene_id']}.json").write_text(json.dumps(scene, indent=2) + "\n")


if __name__ == "__main__":
    main()
