#!/usr/bin/env python3
# Copyright 2026 The zoomcot Authors
# SPDX-License-Identifier: Apache-2.0
"""Regenerates the committed test fixtures under tests/fixtures.

Deterministic: the same numpy/opencv versions produce the same bytes.
Expected values in the protocol and grounding fixtures are computed here,
independently of the C++ code.
"""

import argparse
import json
import math
import struct
from pathlib import Path

import cv2
import numpy as np

CATEGORIES = ["cup", "lamp", "chair", "book", "plant", "sign", "clock", "bottle"]
COLORS = {
    "red": (40, 40, 200),
    "green": (60, 170, 60),
    "blue": (200, 90, 40),
    "yellow": (40, 210, 230),
    "purple": (160, 50, 140),
    "orange": (30, 140, 240),
}
TOOL = "image_zoom_in_tool"


def dump_jsonl(path, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for r in rows:
            f.write(json.dumps(r, sort_keys=True) + "\n")


def write_dpr(path, values):
    h, w = values.shape
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(b"DPR1")
        f.write(struct.pack("<II", w, h))
        f.write(values.astype("<f4").tobytes())


def rle(mask):
    flat = mask.reshape(-1)
    runs = []
    i = 0
    n = flat.size
    while i < n:
        if flat[i]:
            j = i
            while j < n and flat[j]:
                j += 1
            runs += [int(i), int(j - i)]
            i = j
        else:
            i += 1
    return runs


# Pixel geometry, mirrored from the box conventions: half-open boxes, ratio
# boxes rounded outward with a small snap.
def snap(v):
    r = round(v)
    return r if abs(v - r) <= 1e-9 * max(1.0, abs(v)) else v


def ensure_span(lo, hi, limit):
    lo = min(max(lo, 0), limit)
    hi = min(max(hi, 0), limit)
    if hi > lo:
        return lo, hi
    if lo < limit:
        return lo, lo + 1
    return limit - 1, limit


def ratio_to_px(b, w, h):
    x1, x2 = ensure_span(math.floor(snap(b[0] * w)), math.ceil(snap(b[2] * w)), w)
    y1, y2 = ensure_span(math.floor(snap(b[1] * h)), math.ceil(snap(b[3] * h)), h)
    return [x1, y1, x2, y2]


def local_to_global(b, parent):
    pw, ph = parent[2] - parent[0], parent[3] - parent[1]
    p = ratio_to_px(b, pw, ph)
    return [parent[0] + p[0], parent[1] + p[1], parent[0] + p[2], parent[1] + p[3]]


def area(b):
    return max(0, b[2] - b[0]) * max(0, b[3] - b[1])


def union(a, b):
    return [min(a[0], b[0]), min(a[1], b[1]), max(a[2], b[2]), max(a[3], b[3])]


def clip(b, w, h):
    return [min(max(b[0], 0), w), min(max(b[1], 0), h), min(max(b[2], 0), w), min(max(b[3], 0), h)]


def adjust(prop, gt, w, h):
    c = clip(prop, w, h)
    if c[2] <= c[0] or c[3] <= c[1]:
        return list(gt)
    return union(c, gt)


def to_local(g, parent):
    pw, ph = parent[2] - parent[0], parent[3] - parent[1]
    v = [(g[0] - parent[0]) / pw, (g[1] - parent[1]) / ph, (g[2] - parent[0]) / pw, (g[3] - parent[1]) / ph]
    return [round(min(max(x, 0.0), 1.0), 4) for x in v]


def make_scene(rng, idx):
    w = int(rng.integers(96, 193))
    h = int(rng.integers(72, 145))
    img = np.full((h, w, 3), 128, np.uint8)
    noise = rng.integers(0, 12, size=(h, w, 1), dtype=np.uint8)
    img = cv2.add(img, np.repeat(noise, 3, axis=2))
    depth = np.full((h, w), 0.95, np.float32)
    depth += rng.uniform(-0.01, 0.01, size=(h, w)).astype(np.float32)
    large = idx % 6 == 5
    cats = list(rng.permutation(CATEGORIES)[: int(rng.integers(3, 5))])
    objects = []
    occupied = np.zeros((h, w), bool)
    for k, cat in enumerate(cats):
        for _ in range(50):
            if large and k == 0:
                bw, bh = int(w * rng.uniform(0.62, 0.8)), int(h * rng.uniform(0.62, 0.8))
            else:
                bw, bh = int(rng.integers(24, max(26, w // 4))), int(rng.integers(24, max(26, h // 4)))
            x1, y1 = int(rng.integers(0, w - bw)), int(rng.integers(0, h - bh))
            if not occupied[y1:y1 + bh, x1:x1 + bw].any():
                break
        else:
            continue
        color = list(COLORS)[int(rng.integers(0, len(COLORS)))]
        occupied[y1:y1 + bh, x1:x1 + bw] = True
        img[y1:y1 + bh, x1:x1 + bw] = COLORS[color]
        d = float(rng.uniform(0.1, 0.8))
        depth[y1:y1 + bh, x1:x1 + bw] = d + rng.uniform(-0.02, 0.02, size=(bh, bw))
        objects.append({"category": cat, "color": color, "box": [x1, y1, x1 + bw, y1 + bh], "depth": d})
    masks = []
    for oid, o in enumerate(objects, start=1):
        m = np.zeros((h, w), bool)
        x1, y1, x2, y2 = o["box"]
        m[y1:y2, x1:x2] = True
        masks.append({"object_id": oid, "category": o["category"], "rle": rle(m)})
    # A sliver next to the first object with matching depth; it is below the
    # area floor and should be absorbed.
    x1, y1, x2, y2 = objects[0]["box"]
    if x2 + 3 <= w:
        m = np.zeros((h, w), bool)
        m[y1:y1 + 3, x2:x2 + 3] = True
        depth[y1:y1 + 3, x2:x2 + 3] = objects[0]["depth"]
        masks.append({"object_id": len(masks) + 1, "category": "sliver", "rle": rle(m)})
    depth = np.clip(depth, 0.0, 1.0)
    return w, h, img, depth, objects, masks


def triplet(desc, box, reasoning):
    return {"description": desc, "aoi": box, "reasoning": reasoning}


def oracle_script(gt, w, h, cat, color, r_max=3, n=2.0):
    pads = [0.8, 0.35, 0.05, 0.0]
    prev = [0, 0, w, h]
    responses = []
    gw, gh = gt[2] - gt[0], gt[3] - gt[1]
    for r in range(r_max):
        p = pads[min(r, len(pads) - 1)]
        target = [gt[0] - p * gw, gt[1] - p * gh, gt[2] + p * gw, gt[3] + p * gh]
        local = to_local(target, prev)
        responses.append(triplet(
            "A cluttered indoor scene with several objects on a gray floor.",
            local,
            f"The {cat} is the object the question asks about, so the region around it holds the answer."))
        roi = adjust(local_to_global(local, prev), gt, w, h)
        prev = roi
        if area(roi) <= n * area(gt):
            break
    responses.append(f"The {cat} is painted {color}, which answers the question directly.")
    return responses


def build_e2e(root, rng):
    out = root / "e2e"
    raw_rows = []
    oracle_rows = []
    bench_rows = []
    for i in range(50):
        sid = f"s{i:03d}"
        w, h, img, depth, objects, masks = make_scene(rng, i)
        (out / "images").mkdir(parents=True, exist_ok=True)
        cv2.imwrite(str(out / "images" / f"{sid}.png"), img)
        write_dpr(out / "depth" / f"{sid}.dpr", depth)
        (out / "masks").mkdir(parents=True, exist_ok=True)
        with open(out / "masks" / f"{sid}.masks.json", "w") as f:
            json.dump(masks, f)
        target = objects[0] if i % 6 == 5 else objects[int(rng.integers(0, len(objects)))]
        gt = target["box"]
        fmt = ["xyxy", "xywh", "xyxy", "xywh"][i % 4]
        space = "ratio" if i % 4 >= 2 else "pixel"
        b = list(gt)
        if fmt == "xywh":
            b = [b[0], b[1], b[2] - b[0], b[3] - b[1]]
        if space == "ratio":
            b = [b[0] / w, b[1] / h, b[2] / w, b[3] / h]
        if i == 4:
            b = [b[2], b[1], b[0], b[3]]
        row = {
            "id": sid,
            "image": f"images/{sid}.png",
            "question": f"What color is the {target['category']}?",
            "answer": target["color"],
            "long_answer": f"The {target['category']} is {target['color']}.",
            "dataset": ["textvqa", "gqa", "docvqa"][i % 3],
            "bbox": b,
            "bbox_format": fmt,
            "bbox_space": space,
        }
        if i % 2 == 0:
            row["image_w"], row["image_h"] = w, h
        raw_rows.append(row)
        oracle_rows.append({"id": sid, "responses": oracle_script(gt, w, h, target["category"], target["color"])})
        zoom = to_local([gt[0] - 4, gt[1] - 4, gt[2] + 4, gt[3] + 4], [0, 0, w, h])
        bench_rows.append({"id": sid, "turns": [
            "<think>The object is small, so a closer look helps.</think>"
            f"<tool_call>{json.dumps({'name': TOOL, 'arguments': {'bbox_2d': zoom}})}</tool_call>",
            f"<think>The {target['category']} is clearly visible now.</think><answer>{target['color']}</answer>",
        ]})
    # Records that ingest must skip or repair.
    raw_lines = [json.dumps(r, sort_keys=True) for r in raw_rows]
    raw_lines.append(json.dumps({"id": "missing", "image": "images/none.png", "question": "q", "answer": "a",
                                 "bbox": [1, 1, 5, 5]}))
    raw_lines.append('{"id": "broken", "image": ')
    raw_lines.append(json.dumps({"id": "short_box", "image": "images/s000.png", "question": "q", "answer": "a",
                                 "bbox": [1, 2, 3]}))
    with open(out / "raw_samples.jsonl", "w") as f:
        f.write("\n".join(raw_lines) + "\n")
    dump_jsonl(out / "oracle_2d.jsonl", oracle_rows)
    dump_jsonl(out / "oracle_distill.jsonl", [{"id": "*", "responses": [triplet(
        "A cluttered indoor scene with several objects on a gray floor.", [0, 0, 1, 1],
        "The object named in the question is visible in the marked region and its color gives the answer.")]}])
    dump_jsonl(out / "bench_script.jsonl", bench_rows)


def protocol_cases(rng):
    sizes = [(320, 240), (640, 480), (200, 300), (1024, 768), (96, 96)]
    cases = []

    def think(t):
        return f"<think>{t}</think>"

    def call(box):
        return f"<tool_call>{json.dumps({'name': TOOL, 'arguments': {'bbox_2d': box}})}</tool_call>"

    def answer(a):
        return f"<answer>{a}</answer>"

    def rand_box():
        x1, y1 = rng.uniform(0, 0.6), rng.uniform(0, 0.6)
        return [round(x1, 3), round(y1, 3), round(x1 + rng.uniform(0.2, 0.4), 3), round(y1 + rng.uniform(0.2, 0.4), 3)]

    kinds = (["answer_first"] * 6 + ["multi_zoom"] * 8 + ["mixed"] * 4 + ["invalid_box"] * 6 +
             ["budget"] * 6 + ["missing_think"] * 1 + ["no_action"] * 1)
    for n, kind in enumerate(kinds):
        w, h = sizes[n % len(sizes)]
        r_max = 6 if n % 3 == 2 else 5
        turns = []
        # Expected outcome per turn: ("answer", text) | ("zoom", box) | ("reject", None)
        plan = []
        if kind == "answer_first":
            turns.append(think("The answer is readable at this size.") + answer(f"answer {n}"))
            plan.append(("answer", f"answer {n}"))
        elif kind == "multi_zoom":
            for k in range(1 + n % 4):
                b = rand_box()
                turns.append(think(f"Looking closer, pass {k}.") + call(b))
                plan.append(("zoom", b))
            turns.append(think("Now it is clear.") + answer(f"zoomed {n}"))
            plan.append(("answer", f"zoomed {n}"))
        elif kind == "mixed":
            turns.append(think("Both at once.") + call(rand_box()) + answer("too early"))
            plan.append(("reject", None))
            b = rand_box()
            turns.append(think("One action this time.") + call(b))
            plan.append(("zoom", b))
            turns.append(think("Done.") + answer(f"mixed {n}"))
            plan.append(("answer", f"mixed {n}"))
        elif kind == "invalid_box":
            bad = [[0.5, 0.2, 0.3, 0.6], [-0.1, 0.2, 0.5, 0.6], [0.1, 0.2, 0.5], [0.2, 0.2, 1.4, 0.9],
                   [0.3, 0.4, 0.3, 0.8], [0.1, 0.2, 0.3, 0.4, 0.5]][n % 6]
            turns.append(think("Zoom on the corner.") + call(bad))
            plan.append(("reject", None))
            b = rand_box()
            turns.append(think("Corrected box.") + call(b))
            plan.append(("zoom", b))
            turns.append(think("Readable now.") + answer(f"fixed {n}"))
            plan.append(("answer", f"fixed {n}"))
        elif kind == "budget":
            for k in range(r_max + 2):
                b = rand_box()
                turns.append(think(f"Still unsure, pass {k}.") + call(b))
                plan.append(("zoom", b))
        elif kind == "missing_think":
            turns.append(answer("no reasoning"))
            plan.append(("reject", None))
            turns.append(think("Proper format.") + answer(f"late {n}"))
            plan.append(("answer", f"late {n}"))
        elif kind == "no_action":
            turns.append(think("I am thinking but not acting."))
            plan.append(("reject", None))
            turns.append(think("Answering now.") + answer(f"acted {n}"))
            plan.append(("answer", f"acted {n}"))

        view = [0, 0, w, h]
        accepted = []
        final_answer = None
        termination = "budget_exhausted"
        zoomed = False
        used = 0
        for step, (what, val) in enumerate(plan[:r_max]):
            used += 1
            if what == "answer":
                accepted.append(False)
                final_answer = val
                termination = "answered"
                break
            if what == "zoom":
                view = local_to_global(val, view)
                zoomed = True
                accepted.append(True)
            else:
                accepted.append(False)
        cases.append({
            "id": f"p{n:02d}_{kind}",
            "kind": kind,
            "image_w": w,
            "image_h": h,
            "r_max": r_max,
            "question": f"What does the label in case {n} say?",
            "turns": turns,
            "expect": {
                "termination": termination,
                "turns": used,
                "accepted": accepted,
                "final_answer": final_answer,
                "final_view": view,
                "zoomed": zoomed,
            },
        })
    return cases


def grounding_cases():
    # (text, frame, vocabulary, expected {name: (box, depth)}, expected diagnostic count)
    return [
        ("cup: ([0.1, 0.2, 0.3, 0.4], 0.5)", None, [], {"cup": ([0.1, 0.2, 0.3, 0.4], 0.5)}, 0),
        ("The red cup ([0.1,0.2,0.3,0.4], near) is on the table.", None, [],
         {"red cup": ([0.1, 0.2, 0.3, 0.4], 0.2)}, 0),
        ("lamp: ([10, 20, 30, 40], far)", None, [], {"lamp": ([0.1, 0.2, 0.3, 0.4], 0.8)}, 0),
        ("chair: ([20, 10, 180, 90], mid)", [200, 100], [], {"chair": ([0.1, 0.1, 0.9, 0.9], 0.5)}, 0),
        ("chair: ([20, 10, 180, 90], mid)", None, [], {}, 1),
        ("book: ([0.1; 0.2; 0.3; 0.4]; 0.25)", None, [], {"book": ([0.1, 0.2, 0.3, 0.4], 0.25)}, 0),
        ("plant: ([0.1 0.2 0.3 0.4], 0.7)", None, [], {"plant": ([0.1, 0.2, 0.3, 0.4], 0.7)}, 0),
        ("cup: ([0.1,0.1,0.2,0.2], 0.3)\ncup: ([0.5,0.5,0.6,0.6], 0.4)", None, [],
         {"cup": ([0.5, 0.5, 0.6, 0.6], 0.4)}, 0),
        ("cup: ([a, b, c, d], 0.3)", None, [], {}, 1),
        ("cup: ([0.1, 0.2, 0.3], 0.3)", None, [], {}, 1),
        ("sign: ([0.1,0.2,0.3,0.4])", None, [], {"sign": ([0.1, 0.2, 0.3, 0.4], None)}, 0),
        ("sign: ([0.1,0.2,0.3,0.4], depth: 0.35)", None, [], {"sign": ([0.1, 0.2, 0.3, 0.4], 0.35)}, 0),
        ("sign: ([0.1,0.2,0.3,0.4], d=0.6)", None, [], {"sign": ([0.1, 0.2, 0.3, 0.4], 0.6)}, 0),
        ("sign: ([0.1,0.2,0.3,0.4], 45%)", None, [], {"sign": ([0.1, 0.2, 0.3, 0.4], 0.45)}, 0),
        ("sign: ([0.1,0.2,0.3,0.4], 60)", None, [], {"sign": ([0.1, 0.2, 0.3, 0.4], 0.6)}, 0),
        ("sign: ([0.1,0.2,0.3,0.4], -0.2)", None, [], {"sign": ([0.1, 0.2, 0.3, 0.4], 0.0)}, 0),
        ("sign: ([0.1,0.2,0.3,0.4], blue)", None, [], {"sign": ([0.1, 0.2, 0.3, 0.4], None)}, 1),
        ("vase: ([0.4, 0.2, 0.1, 0.5], 0.3)", None, [], {"vase": ([0.1, 0.2, 0.4, 0.5], 0.3)}, 0),
        ("vase: ([-0.1, 0.2, 1.2, 0.5], 0.3)", None, [], {"vase": ([0.0, 0.2, 1.0, 0.5], 0.3)}, 0),
        ("vase: ([0.3, 0.3, 0.3, 0.5], 0.3)", None, [], {}, 1),
        ("vase: ([0.5, 0.5, 120, 130])", None, [], {"vase": ([0.005, 0.005, 1.0, 1.0], None)}, 0),
        ("Coffee Mug: ([0.1,0.1,0.2,0.2], near)", None, [], {"coffee mug": ([0.1, 0.1, 0.2, 0.2], 0.2)}, 0),
        ("- bottle: ([0.1,0.1,0.2,0.2], 0.1)", None, [], {"bottle": ([0.1, 0.1, 0.2, 0.2], 0.1)}, 0),
        ("**clock**: ([0.2,0.2,0.4,0.4], 0.3)", None, [], {"clock": ([0.2, 0.2, 0.4, 0.4], 0.3)}, 0),
        ("The lamp: ([0.2,0.2,0.4,0.4], 0.3)", None, [], {"lamp": ([0.2, 0.2, 0.4, 0.4], 0.3)}, 0),
        ("cup ([0.1,0.1,0.2,0.2], 0.3) and lamp ([0.5,0.5,0.7,0.7], 0.6)", None, [],
         {"cup": ([0.1, 0.1, 0.2, 0.2], 0.3), "lamp": ([0.5, 0.5, 0.7, 0.7], 0.6)}, 0),
        ("I see a wooden dining table ([0.1,0.5,0.9,0.9], far)", None, ["dining table"],
         {"dining table": ([0.1, 0.5, 0.9, 0.9], 0.8)}, 0),
        ("I see a wooden dining table ([0.1,0.5,0.9,0.9], far)", None, [],
         {"wooden dining table": ([0.1, 0.5, 0.9, 0.9], 0.8)}, 0),
        ("a big old red wooden chair ([0.1,0.5,0.9,0.9], 0.4)", None, [],
         {"old red wooden chair": ([0.1, 0.5, 0.9, 0.9], 0.4)}, 0),
        ("([0.1,0.2,0.3,0.4], 0.5)", None, [], {}, 1),
        ("window: ([64, 48, 320, 240], near)", [640, 480], [], {"window": ([0.1, 0.1, 0.5, 0.5], 0.2)}, 0),
        ("cup : ( [ 0.1 , 0.2 , 0.3 , 0.4 ] , 0.5 )", None, [], {"cup": ([0.1, 0.2, 0.3, 0.4], 0.5)}, 0),
        ("cup: ([+0.1, 0.2, 0.3, 0.4], 0.5)", None, [], {"cup": ([0.1, 0.2, 0.3, 0.4], 0.5)}, 0),
        ("cup: ([0.1, 0.2, 0.3, 0.4], Near)", None, [], {"cup": ([0.1, 0.2, 0.3, 0.4], 0.2)}, 0),
        ("cup: ([0.1, 0.2, 0.3, 0.4], middle)", None, [], {"cup": ([0.1, 0.2, 0.3, 0.4], 0.5)}, 0),
        ("cup: ([0.1, 0.2, 0.3, 0.4], 'far')", None, [], {"cup": ([0.1, 0.2, 0.3, 0.4], 0.8)}, 0),
        ("cup ([[0.1,0.2],[0.3,0.4]])", None, [], {}, 0),
        ("There are no annotations in this sentence at all.", None, [], {}, 0),
        ("tray: ([10%, 20%, 30%, 40%], 0.5)", None, [], {"tray": ([0.1, 0.2, 0.3, 0.4], 0.5)}, 0),
        ("tray: ([0.2, 0.2, 1.5, 0.8], 0.5)", None, [], {"tray": ([0.2, 0.2, 1.0, 0.8], 0.5)}, 0),
        ("tray: ([15, 30, 150, 90], 0.5)", None, [], {"tray": ([0.15, 0.3, 1.0, 0.9], 0.5)}, 0),
        ("tray: ([30.2, 20, 151, 100], 0.5)", [302, 200], [], {"tray": ([0.1, 0.1, 0.5, 0.5], 0.5)}, 0),
        ("the small blue ceramic coffee cup holder: ([0.1,0.1,0.3,0.3], 0.2)", None, [],
         {"small blue ceramic coffee cup holder": ([0.1, 0.1, 0.3, 0.3], 0.2)}, 0),
        ("cup: ([0.1,0.1,0.2,0.2], near)\nlamp: ([0.3,0.3,0.4,0.4], mid)\nbed: ([0.5,0.5,0.9,0.9], far)", None, [],
         {"cup": ([0.1, 0.1, 0.2, 0.2], 0.2), "lamp": ([0.3, 0.3, 0.4, 0.4], 0.5),
          "bed": ([0.5, 0.5, 0.9, 0.9], 0.8)}, 0),
        ("t-shirt: ([0.1,0.1,0.2,0.2], 0.9)", None, [], {"t-shirt": ([0.1, 0.1, 0.2, 0.2], 0.9)}, 0),
        ("vase: ([0.1,0.2,0.3,0.4], depth 0.4)", None, [], {"vase": ([0.1, 0.2, 0.3, 0.4], 0.4)}, 0),
        ("café sign: ([0.1,0.2,0.3,0.4], 0.4)", None, [], {"café sign": ([0.1, 0.2, 0.3, 0.4], 0.4)}, 0),
        ("cup:\t([0.1\t0.2\t0.3\t0.4],\t0.5)", None, [], {"cup": ([0.1, 0.2, 0.3, 0.4], 0.5)}, 0),
        ("On the shelf, plant ([0.1,0.2,0.3,0.4], 0.2) grows.", None, [], {"plant": ([0.1, 0.2, 0.3, 0.4], 0.2)}, 0),
        ("Cup: ([0.1,0.1,0.2,0.2], 0.3) then cup: ([0.6,0.6,0.8,0.8], 0.7)", None, [],
         {"cup": ([0.6, 0.6, 0.8, 0.8], 0.7)}, 0),
    ]


def build_grounding(root):
    rows = []
    for n, (text, frame, vocab, expected, diags) in enumerate(grounding_cases()):
        rows.append({
            "case": n,
            "text": text,
            "frame": frame,
            "vocabulary": vocab,
            "expected": {k: {"bbox": v[0], "depth": v[1]} for k, v in expected.items()},
            "diagnostics": diags,
        })
    dump_jsonl(root / "grounding" / "cases.jsonl", rows)


def build_store(root):
    d = root / "store"
    write_dpr(d / "clamp.dpr", np.array([[-0.1, 0.25], [0.5, 1.2]], np.float32))
    write_dpr(d / "ok_2x2.dpr", np.array([[0.0, 0.25], [0.5, 1.0]], np.float32))
    full = (d / "ok_2x2.dpr").read_bytes()
    (d / "truncated.dpr").write_bytes(full[:-3])
    (d / "bad_magic.dpr").write_bytes(b"DPR2" + full[4:])
    with open(d / "masks_2x2.json", "w") as f:
        json.dump([{"object_id": 1, "category": "cup", "rle": [0, 2]},
                   {"object_id": 2, "category": "lamp", "rle": [2, 2]}], f)
    with open(d / "masks_oob.json", "w") as f:
        json.dump([{"object_id": 1, "category": "cup", "rle": [3, 4]}], f)
    raw = [
        {"id": "a", "image": "img.png", "image_w": 100, "image_h": 80, "question": "q", "answer": "x",
         "bbox": [10, 10, 30, 40], "bbox_format": "xywh"},
        {"id": "b", "image": "img.png", "image_w": 100, "image_h": 80, "question": "q", "answer": "x",
         "bbox": [10, 10, 40, 50]},
        {"id": "c", "image": "img.png", "image_w": 100, "image_h": 80, "question": "q", "answer": "x",
         "bbox": [40, 50, 10, 10]},
        {"id": "d", "image": "img.png", "image_w": 100, "image_h": 80, "question": "q", "answer": "x",
         "bbox": [0.1, 0.125, 0.4, 0.625], "bbox_space": "ratio"},
        {"id": "e", "image": "img.png", "question": "q", "answer": "x", "bbox": [90, 70, 20, 20],
         "bbox_format": "xywh"},
        {"id": "f", "image": "gone.png", "question": "q", "answer": "x", "bbox": [1, 1, 2, 2]},
        {"id": "g", "image": "img.png", "question": "q", "answer": "x", "bbox": [200, 200, 300, 300]},
    ]
    dump_jsonl(d / "raw_samples.jsonl", raw)
    cv2.imwrite(str(d / "img.png"), np.zeros((80, 100, 3), np.uint8))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "tests" / "fixtures")
    ap.add_argument("--seed", type=int, default=20260415)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    build_e2e(args.out, rng)
    dump_jsonl(args.out / "protocol" / "cases.jsonl", protocol_cases(np.random.default_rng(args.seed + 1)))
    build_grounding(args.out)
    build_store(args.out)


if __name__ == "__main__":
    main()
