"""Regenerate baselines/metrics.json from the canonical corpus.

The recorded numbers are frozen expectations: the pipeline is deterministic,
so any later run must reproduce them exactly. Rerun this script only when the
detector, the OCR, the font or the canonical corpus deliberately change.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from tollgate.corpus.dataset import build_scene, split_dataset
from tollgate.metrics import evaluate, iou
from tollgate.vision import NoGlyphsError, NoPlateFoundError, detect_plate, recognize

CORPUS_SEED = 7
CORPUS_COUNT = 433
TEST_COUNT = 22
NOISE_RATE = 0.02


def measure(noise_rate: float) -> dict:
    ids = [f"scene_{i:04d}" for i in range(CORPUS_COUNT)]
    split = split_dataset(ids, TEST_COUNT, seed=CORPUS_SEED)
    test_indices = sorted(int(s.rsplit("_", 1)[1]) for s in split.test)

    dets, truths = {}, {}
    exact = detected = 0
    for i in test_indices:
        scene = build_scene(CORPUS_SEED, i, noise_rate=noise_rate)
        truths[scene.image_id] = [scene.truth]
        candidates = detect_plate(scene.image)
        dets[scene.image_id] = candidates
        if candidates and iou(candidates[0].box, scene.truth) >= 0.5:
            detected += 1
        try:
            reading = recognize(scene.image, scene.image_id)
        except (NoPlateFoundError, NoGlyphsError):
            continue
        if reading.filtered_text == scene.plate_text.normalized:
            exact += 1
    return {
        "exact_ocr": exact,
        "detect_iou50": detected,
        "test_count": TEST_COUNT,
        "metrics": evaluate(dets, truths).as_dict(),
    }


def main() -> None:
    payload = {
        "corpus_seed": CORPUS_SEED,
        "corpus_count": CORPUS_COUNT,
        "test_count": TEST_COUNT,
        "noise_rate": NOISE_RATE,
        "clean": measure(0.0),
        "noisy": measure(NOISE_RATE),
    }
    out = Path(__file__).parent.parent / "baselines" / "metrics.json"
    out.parent.mkdir(exist_ok=True)
    out.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
