"""Builds the toy head tensors and their golden detections.

Decoding and NMS here are a from-scratch brute-force re-implementation, kept
independent of the Rust code.

    python3 scripts/postprocess_oracle.py fixtures/toy_head
"""
import json
import math
import struct
import sys
from pathlib import Path

import numpy as np

INPUT = 64
CLASSES = 3
ANCHORS = [[(10, 13), (16, 30), (33, 23)], [(30, 61), (62, 45), (59, 119)], [(116, 90), (156, 198), (373, 326)]]
STRIDES = [8, 16, 32]
ALPHA, SCORE_THRESH, IOU_THRESH, MAX_DETS = 0.5, 0.01, 0.45, 100


def write_pptk(path, arr):
    arr = np.ascontiguousarray(arr, dtype="<f4")
    with open(path, "wb") as f:
        f.write(b"PPTK")
        f.write(struct.pack("<I", arr.ndim))
        f.write(struct.pack("<%dI" % arr.ndim, *arr.shape))
        f.write(arr.tobytes())


def sig(x):
    return 1.0 / (1.0 + math.exp(-x))


def iou(a, b):
    iw = max(0.0, min(a[2], b[2]) - max(a[0], b[0]))
    ih = max(0.0, min(a[3], b[3]) - max(a[1], b[1]))
    inter = iw * ih
    union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    return inter / union if union > 0 else 0.0


def main():
    out = Path(sys.argv[1])
    rng = np.random.default_rng(7)
    v = 5 + CLASSES + 1
    dets = []
    for level, (stride, anchors) in enumerate(zip(STRIDES, ANCHORS)):
        g = INPUT // stride
        head = np.zeros((1, 3 * v, g, g), dtype=np.float32)
        for a in range(3):
            base = a * v
            head[0, base:base + 2] = rng.normal(0.0, 1.0, (2, g, g))
            head[0, base + 2:base + 4] = rng.normal(0.0, 0.5, (2, g, g))
            head[0, base + 4] = rng.normal(-2.0, 2.0, (g, g))
            head[0, base + 5:base + 5 + CLASSES] = rng.normal(-1.0, 2.0, (CLASSES, g, g))
            head[0, base + 5 + CLASSES] = rng.normal(0.0, 1.0, (g, g))
        write_pptk(out / f"head_s{stride}.pptk", head)
        for a in range(3):
            for gy in range(g):
                for gx in range(g):
                    t = [float(head[0, a * v + j, gy, gx]) for j in range(v)]
                    cx = (sig(t[0]) + gx) * stride
                    cy = (sig(t[1]) + gy) * stride
                    w = anchors[a][0] * math.exp(t[2])
                    h = anchors[a][1] * math.exp(t[3])
                    box = [cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2]
                    box = [min(max(c, 0.0), float(INPUT)) for c in box]
                    if (box[2] - box[0]) * (box[3] - box[1]) <= 0:
                        continue
                    obj, q = sig(t[4]), sig(t[5 + CLASSES])
                    for c in range(CLASSES):
                        score = obj ** (1 - ALPHA) * q ** ALPHA * sig(t[5 + c])
                        dets.append((box, c, score))
    idx = [i for i, d in enumerate(dets) if d[2] >= SCORE_THRESH]
    idx.sort(key=lambda i: (-dets[i][2], dets[i][1], i))
    kept = []
    for i in idx:
        if all(dets[k][1] != dets[i][1] or iou(dets[k][0], dets[i][0]) <= IOU_THRESH for k in kept):
            kept.append(i)
    kept = kept[:MAX_DETS]
    with open(out / "golden.jsonl", "w") as f:
        for i in kept:
            box, c, score = dets[i]
            row = {"image_id": 1, "category_id": c, "bbox": [box[0], box[1], box[2] - box[0], box[3] - box[1]], "score": score}
            f.write(json.dumps(row) + "\n")
    print(f"{len(kept)} detections")


if __name__ == "__main__":
    main()
