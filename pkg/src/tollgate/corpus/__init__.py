"""Synthetic plate/scene generation with ground truth, VOC annotations and dataset splits."""

from tollgate.corpus.render import PlateStyle, render_plate, compose_scene, AnnotatedScene
from tollgate.corpus.dataset import DatasetSplit, split_dataset, generate_corpus
from tollgate.corpus.voc import emit_voc_xml, parse_voc_xml

__all__ = [
    "PlateStyle",
    "render_plate",
    "compose_scene",
    "AnnotatedScene",
    "DatasetSplit",
    "split_dataset",
    "generate_corpus",
    "emit_voc_xml",
    "parse_voc_xml",
]
