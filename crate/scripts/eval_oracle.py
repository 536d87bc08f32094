"""Reference metrics for the mini COCO fixture, computed with pycocotools.

Annotation areas are set to w*h so the reference buckets boxes by box area,
like the Rust evaluator.

    python3 scripts/eval_oracle.py fixtures/mini_coco
"""
import contextlib
import io
import json
import sys
from pathlib import Path

from pycocotools.coco import COCO
from pycocotools.cocoeval import COCOeval


def metrics(ann_path, res_path):
    with contextlib.redirect_stdout(io.StringIO()):
        gt = COCO(str(ann_path))
        for a in gt.dataset["annotations"]:
            a["area"] = a["bbox"][2] * a["bbox"][3]
        gt.createIndex()
        results = json.loads(Path(res_path).read_text())
        dt = gt.loadRes(results)
        ev = COCOeval(gt, dt, "bbox")
        ev.evaluate()
        ev.accumulate()
        ev.summarize()
    names = ["AP", "AP50", "AP75", "APS", "APM", "APL"]
    return {n: (None if v < 0 else float(v)) for n, v in zip(names, ev.stats[:6])}


def main():
    root = Path(sys.argv[1])
    out = {
        "imperfect": metrics(root / "annotations.json", root / "results.json"),
        "perfect": metrics(root / "annotations.json", root / "perfect_results.json"),
    }
    (root / "expected_metrics.json").write_text(json.dumps(out, indent=2) + "\n")
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
