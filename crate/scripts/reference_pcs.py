#!/usr/bin/env python3
"""Independent end-to-end PCS reference.

Reimplements the detection-to-score pipeline from scratch in pure Python:
greedy per-class NMS, keypoint resolution, parallelogram completion, a raw
(unnormalized) DLT homography solve, and polar classification against the
standard board. Used to cross-check the main implementation's PCS on a
fixture dataset; the two must agree to within 0.1.

Usage: reference_pcs.py LABELS_JSONL DETECTIONS_DIR
"""

import json
import math
import os
import sys

IOU_THRESHOLD = 0.3
CONF_THRESHOLD = 0.25
MAX_DARTS = 3

R_DOUBLE_BULL = 6.35 / 170.0
R_BULL = 15.9 / 170.0
R_TREBLE_INNER = 99.4 / 170.0
R_TREBLE_OUTER = 107.4 / 170.0
R_DOUBLE_INNER = 162.0 / 170.0

SECTORS = [20, 1, 18, 4, 13, 6, 10, 15, 2, 17, 3, 19, 7, 16, 8, 11, 14, 9, 12, 5]
CAL_ANGLES = [-9.0, 81.0, 171.0, 261.0]
CAL_TARGETS = [
    (math.sin(math.radians(a)), -math.cos(math.radians(a))) for a in CAL_ANGLES
]


def token_value(tok):
    if tok == "0":
        return 0
    if tok == "B":
        return 25
    if tok == "DB":
        return 50
    mult = {"S": 1, "D": 2, "T": 3}[tok[0]]
    return mult * int(tok[1:])


def iou(a, b):
    ax0, ax1 = a["cx"] - a["w"] / 2, a["cx"] + a["w"] / 2
    ay0, ay1 = a["cy"] - a["h"] / 2, a["cy"] + a["h"] / 2
    bx0, bx1 = b["cx"] - b["w"] / 2, b["cx"] + b["w"] / 2
    by0, by1 = b["cy"] - b["h"] / 2, b["cy"] + b["h"] / 2
    iw = min(ax1, bx1) - max(ax0, bx0)
    ih = min(ay1, by1) - max(ay0, by0)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = a["w"] * a["h"] + b["w"] * b["h"] - inter
    return inter / union


def nms(boxes):
    order = sorted(range(len(boxes)), key=lambda i: (-boxes[i]["conf"], i))
    kept = []
    for i in order:
        b = boxes[i]
        if b["conf"] < CONF_THRESHOLD:
            continue
        if any(k["class"] == b["class"] and iou(k, b) > IOU_THRESHOLD for k in kept):
            continue
        kept.append(b)
    return kept


def resolve(boxes):
    """Most confident box per calibration class, top darts in order."""
    survivors = nms(boxes)  # already (conf desc, index asc)
    cal = [None] * 4
    darts = []
    for b in survivors:
        c = b["class"]
        if c < 4:
            if cal[c] is None:
                cal[c] = (b["cx"], b["cy"])
        elif len(darts) < MAX_DARTS:
            darts.append((b["cx"], b["cy"]))
    return cal, darts


def complete(cal):
    missing = [i for i, c in enumerate(cal) if c is None]
    if len(missing) == 0:
        return cal
    if len(missing) > 1:
        return None
    i = missing[0]
    prev, nxt, opp = cal[(i + 3) % 4], cal[(i + 1) % 4], cal[(i + 2) % 4]
    cal = list(cal)
    cal[i] = (prev[0] + nxt[0] - opp[0], prev[1] + nxt[1] - opp[1])
    return cal


def solve(a, b):
    """Gaussian elimination with partial pivoting for an n-by-n system."""
    n = len(b)
    m = [row[:] + [b[i]] for i, row in enumerate(a)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(m[r][col]))
        if abs(m[piv][col]) < 1e-12:
            return None
        m[col], m[piv] = m[piv], m[col]
        for r in range(col + 1, n):
            f = m[r][col] / m[col][col]
            for c in range(col, n + 1):
                m[r][c] -= f * m[col][c]
    x = [0.0] * n
    for r in range(n - 1, -1, -1):
        s = m[r][n] - sum(m[r][c] * x[c] for c in range(r + 1, n))
        x[r] = s / m[r][r]
    return x


def homography(src, dst):
    """Raw four-point DLT with h33 pinned to 1."""
    a, b = [], []
    for (x, y), (u, v) in zip(src, dst):
        a.append([x, y, 1, 0, 0, 0, -u * x, -u * y])
        b.append(u)
        a.append([0, 0, 0, x, y, 1, -v * x, -v * y])
        b.append(v)
    h = solve(a, b)
    if h is None:
        return None
    return [[h[0], h[1], h[2]], [h[3], h[4], h[5]], [h[6], h[7], 1.0]]


def apply(h, p):
    x, y = p
    w = h[2][0] * x + h[2][1] * y + h[2][2]
    if abs(w) < 1e-12:
        return None
    return (
        (h[0][0] * x + h[0][1] * y + h[0][2]) / w,
        (h[1][0] * x + h[1][1] * y + h[1][2]) / w,
    )


def classify(p):
    x, y = p
    r = math.hypot(x, y)
    if r < R_DOUBLE_BULL:
        return 50
    if r < R_BULL:
        return 25
    if r > 1.0:
        return 0
    theta = math.degrees(math.atan2(x, -y)) % 360.0
    sector = SECTORS[int((theta + 9.0) // 18.0) % 20]
    if R_TREBLE_INNER <= r < R_TREBLE_OUTER:
        return 3 * sector
    if r >= R_DOUBLE_INNER:
        return 2 * sector
    return sector


def predicted_total(det):
    cal, darts = resolve(det["boxes"])
    cal = complete(cal)
    if cal is None:
        return 0
    h = homography(cal, CAL_TARGETS)
    if h is None:
        return 0
    mapped = [apply(h, c) for c in cal]
    if any(m is None for m in mapped):
        return 0
    cx = sum(m[0] for m in mapped) / 4.0
    cy = sum(m[1] for m in mapped) / 4.0
    radius = sum(math.hypot(m[0] - cx, m[1] - cy) for m in mapped) / 4.0
    if radius <= 0:
        return 0
    total = 0
    for d in darts:
        q = apply(h, d)
        if q is None:
            continue  # past the horizon counts as a miss
        total += classify(((q[0] - cx) / radius, (q[1] - cy) / radius))
    return total


def main():
    if len(sys.argv) != 3:
        sys.exit(__doc__.strip().splitlines()[-1])
    labels_path, det_dir = sys.argv[1], sys.argv[2]
    correct = 0
    n = 0
    with open(labels_path) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            with open(os.path.join(det_dir, rec["image"] + ".json")) as df:
                det = json.load(df)
            label_total = sum(token_value(t) for t in rec["scores"])
            n += 1
            if predicted_total(det) == label_total:
                correct += 1
    if n == 0:
        sys.exit("no samples")
    print(100.0 * correct / n)


if __name__ == "__main__":
    main()
