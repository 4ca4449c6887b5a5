"""Corpus generation, train/test splitting and the on-disk corpus layout.

A corpus directory holds `<image_id>.pgm` + `<image_id>.xml` side by side plus
a `manifest.tsv` with one `image_id<TAB>plate_text<TAB>xmin,ymin,xmax,ymax`
line per scene.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from tollgate.corpus.render import AnnotatedScene, PlateStyle, DEFAULT_STYLE, compose_scene, render_plate
from tollgate.corpus.voc import emit_voc_xml
from tollgate.geometry import BoundingBox
from tollgate.imaging import read_pgm, write_pgm
from tollgate.model import normalize_plate

MANIFEST_NAME = "manifest.tsv"
_PAD_RANGE = (8, 32)  # canvas padding drawn per side, in pixels


class TestCountTooLargeError(ValueError):
    __test__ = False  # not a pytest class, despite the name



@dataclass(frozen=True)
class DatasetSplit:
    train: tuple[str, ...]
    test: tuple[str, ...]


def split_dataset(ids: Sequence[str], test_count: int, seed: int) -> DatasetSplit:
    """Seeded-shuffle partition into (len-test_count, test_count)."""
    if test_count < 0 or test_count > len(ids):
        raise TestCountTooLargeError(f"test_count {test_count} with {len(ids)} ids")
    shuffled = list(ids)
    random.Random(seed).shuffle(shuffled)
    return DatasetSplit(train=tuple(shuffled[test_count:]), test=tuple(shuffled[:test_count]))


def scene_seed(master_seed: int, index: int) -> int:
    digest = hashlib.sha256(f"{master_seed}:scene:{index}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def build_scene(
    master_seed: int,
    index: int,
    plate_length: Optional[int] = None,
    style: PlateStyle = DEFAULT_STYLE,
    noise_rate: float = 0.0,
) -> AnnotatedScene:
    """One deterministic scene; the draw order below is part of the contract."""
    rng = random.Random(scene_seed(master_seed, index))
    length = plate_length if plate_length is not None else rng.randint(4, 8)
    digits = "".join(rng.choice("0123456789") for _ in range(length))
    render_seed = rng.getrandbits(32)
    pads = [rng.randint(*_PAD_RANGE) for _ in range(4)]  # left, top, right, bottom
    noise_seed = rng.getrandbits(32)

    plate = render_plate(digits, style, seed=render_seed)
    canvas_w = pads[0] + plate.width + pads[2]
    canvas_h = pads[1] + plate.height + pads[3]
    return compose_scene(
        plate,
        canvas_w,
        canvas_h,
        offset=(pads[0], pads[1]),
        salt_pepper_rate=noise_rate,
        noise_seed=noise_seed,
        image_id=f"scene_{index:04d}",
        plate_text=normalize_plate(digits),
    )


def generate_corpus(
    count: int,
    plate_length: Optional[int] = None,
    style: PlateStyle = DEFAULT_STYLE,
    seed: int = 0,
    out_dir: Optional[str | Path] = None,
    noise_rate: float = 0.0,
) -> list[AnnotatedScene]:
    """Generate `count` scenes; when out_dir is given also write PGM/XML/manifest."""
    if count < 1:
        raise ValueError("count must be >= 1")
    scenes = [build_scene(seed, i, plate_length, style, noise_rate) for i in range(count)]
    if out_dir is not None:
        directory = Path(out_dir)
        directory.mkdir(parents=True, exist_ok=True)
        lines = []
        for scene in scenes:
            write_pgm(scene.image, directory / f"{scene.image_id}.pgm")
            (directory / f"{scene.image_id}.xml").write_text(emit_voc_xml(scene), encoding="utf-8")
            b = scene.truth
            lines.append(
                f"{scene.image_id}\t{scene.plate_text.normalized}\t{b.xmin},{b.ymin},{b.xmax},{b.ymax}\n"
            )
        (directory / MANIFEST_NAME).write_text("".join(lines), encoding="utf-8")
    return scenes


def read_manifest(directory: str | Path) -> list[tuple[str, str, BoundingBox]]:
    """(image_id, plate_text, truth) triples in manifest order."""
    rows = []
    for line in (Path(directory) / MANIFEST_NAME).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        image_id, plate_text, coords = line.split("\t")
        xmin, ymin, xmax, ymax = (int(v) for v in coords.split(","))
        rows.append((image_id, plate_text, BoundingBox(xmin, ymin, xmax, ymax)))
    return rows


def load_scene(directory: str | Path, image_id: str, plate_text: str, truth: BoundingBox) -> AnnotatedScene:
    image = read_pgm(Path(directory) / f"{image_id}.pgm")
    return AnnotatedScene(image_id=image_id, image=image, truth=truth,
                          plate_text=normalize_plate(plate_text))
