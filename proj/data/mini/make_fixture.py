#!/usr/bin/env python3
"""Regenerates the bundled mini dataset (manifest, detections, features,
embeddings, class list, confusion lexicon). Deterministic; outputs are
committed, so run this only when the fixture layout changes."""

import json
import os
import random
import struct

HERE = os.path.dirname(os.path.abspath(__file__))
W, H = 640, 480
CLASSES = ["car", "window", "man", "dog", "chair", "sign"]
POSITIONS = ["left", "right", "top", "bottom"]
TEMPLATES = [
    "the {c} on the {p}",
    "a big {c} near the {p}",
    "the small {c} at the {p}",
]
CONFUSIONS = [
    ("widow", "window"), ("cart", "car"), ("mad", "man"), ("dot", "dog"),
    ("choir", "chair"), ("sing", "sign"), ("teh", "the"), ("onn", "on"),
    ("lefty", "left"), ("write", "right"), ("topp", "top"), ("bottum", "bottom"),
    ("bigg", "big"), ("smal", "small"), ("neer", "near"), ("att", "at"),
]
DIM = 16          # embedding dim
FEAT_DIM = 8      # context and box feature dim

rng = random.Random(1234)


def write_feature(path, values):
    assert len(values) == FEAT_DIM
    with open(os.path.join(HERE, path), "wb") as f:
        f.write(struct.pack("<%df" % len(values), *values))


def onehot(dim, axis, value=1.0):
    v = [0.0] * dim
    v[axis] = value
    return v


def quadrant_box(q):
    # TL, TR, BL, BR with jitter
    bw = rng.uniform(130, 180)
    bh = rng.uniform(100, 140)
    x0 = rng.uniform(20, 80) + (320 if q in (1, 3) else 0)
    y0 = rng.uniform(20, 60) + (240 if q in (2, 3) else 0)
    return [round(x0, 1), round(y0, 1), round(min(x0 + bw, W - 1), 1),
            round(min(y0 + bh, H - 1), 1)]


def pos_word(q, idx):
    horizontal = ["left", "right"][1 if q in (1, 3) else 0]
    vertical = ["top", "bottom"][1 if q in (2, 3) else 0]
    return horizontal if idx % 2 == 0 else vertical


def main():
    os.makedirs(os.path.join(HERE, "features"), exist_ok=True)

    # embeddings: class words on axes 0-5, positions 6-9, fillers 10-13,
    # corrupted class words mark axis 14, corrupted fillers axis 15
    emb = {}
    for i, c in enumerate(CLASSES):
        emb[c] = onehot(DIM, i)
    for i, p in enumerate(POSITIONS):
        emb[p] = onehot(DIM, 6 + i)
    emb["the"] = onehot(DIM, 10, 0.3)
    emb["a"] = onehot(DIM, 10, 0.25)
    emb["on"] = onehot(DIM, 11, 0.3)
    emb["at"] = onehot(DIM, 11, 0.2)
    emb["big"] = onehot(DIM, 12, 0.4)
    emb["small"] = onehot(DIM, 12, -0.4)
    emb["near"] = onehot(DIM, 13, 0.4)
    for wrong, right in CONFUSIONS:
        axis, scale = (14, -1.0) if right in CLASSES else (15, -0.6)
        emb[wrong] = onehot(DIM, axis, scale)

    with open(os.path.join(HERE, "embeddings.txt"), "w") as f:
        for word in sorted(emb):
            f.write(word + "\t" + " ".join("%g" % v for v in emb[word]) + "\n")

    with open(os.path.join(HERE, "classes.txt"), "w") as f:
        f.write("\n".join(CLASSES) + "\n")

    with open(os.path.join(HERE, "confusions.txt"), "w") as f:
        for wrong, right in CONFUSIONS:
            f.write(f"{wrong}\t{right}\n")

    manifest_lines = []
    detection_lines = []
    for img in range(5):
        image_id = "img_%02d" % img
        # four objects of distinct classes, one per quadrant
        class_ids = sorted(rng.sample(range(len(CLASSES)), 4))
        context = [0.0] * FEAT_DIM
        objects = []
        for q, cid in enumerate(class_ids):
            context[cid] = 1.0
            cname = CLASSES[cid]
            box = quadrant_box(q)
            pos = pos_word(q, img + q)
            template = TEMPLATES[(img + q) % len(TEMPLATES)]
            objects.append({
                "box": {"x_min": box[0], "y_min": box[1], "x_max": box[2], "y_max": box[3]},
                "class_label": cname,
                "expressions": [{"text": template.format(c=cname, p=pos)}],
            })

            # one overlapping candidate of the right class
            dx, dy = rng.uniform(-12, 12), rng.uniform(-10, 10)
            cand_box = [round(max(0.0, box[0] + dx), 1), round(max(0.0, box[1] + dy), 1),
                        round(min(box[2] + dx, W - 1), 1), round(min(box[3] + dy, H - 1), 1)]
            feat_name = "features/det_%02d_%d.f32" % (img, q)
            feat = onehot(FEAT_DIM, cid)
            feat[6] = (cand_box[0] + cand_box[2]) / 2.0 / W
            feat[7] = (cand_box[1] + cand_box[3]) / 2.0 / H
            write_feature(feat_name, feat)
            detection_lines.append(json.dumps({
                "image_id": image_id,
                "box": cand_box,
                "class_label": cname,
                "det_score": round(rng.uniform(0.55, 0.85), 3),
                "feature_path": feat_name,
            }, sort_keys=True))

        # three distractor candidates per image
        for d in range(3):
            cid = rng.randrange(len(CLASSES))
            x0 = rng.uniform(0, W - 140)
            y0 = rng.uniform(0, H - 110)
            cand_box = [round(x0, 1), round(y0, 1),
                        round(x0 + rng.uniform(60, 130), 1), round(y0 + rng.uniform(50, 100), 1)]
            feat_name = "features/det_%02d_x%d.f32" % (img, d)
            feat = onehot(FEAT_DIM, cid)
            feat[6] = (cand_box[0] + cand_box[2]) / 2.0 / W
            feat[7] = (cand_box[1] + cand_box[3]) / 2.0 / H
            write_feature(feat_name, feat)
            detection_lines.append(json.dumps({
                "image_id": image_id,
                "box": cand_box,
                "class_label": CLASSES[cid],
                "det_score": round(rng.uniform(0.5, 0.95), 3),
                "feature_path": feat_name,
            }, sort_keys=True))

        write_feature("features/%s.f32" % image_id, context)
        manifest_lines.append(json.dumps({
            "image_id": image_id,
            "width": W,
            "height": H,
            "feature_path": "features/%s.f32" % image_id,
            "objects": objects,
        }, sort_keys=True))

    with open(os.path.join(HERE, "manifest.jsonl"), "w") as f:
        f.write("\n".join(manifest_lines) + "\n")
    with open(os.path.join(HERE, "detections.jsonl"), "w") as f:
        f.write("\n".join(detection_lines) + "\n")
    print("wrote mini fixture: 5 images, 20 objects, %d detections" % len(detection_lines))


if __name__ == "__main__":
    main()
