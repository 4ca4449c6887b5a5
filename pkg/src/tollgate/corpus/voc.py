"""Minimal PASCAL VOC annotation subset: one `licence` object per image."""

from __future__ import annotations

import xml.etree.ElementTree as ET
from xml.sax.saxutils import escape

from tollgate.corpus.render import AnnotatedScene
from tollgate.geometry import BoundingBox

OBJECT_NAME = "licence"


class VocError(ValueError):
    pass


class MalformedXmlError(VocError):
    pass


class MissingFieldError(VocError):
    pass


class NonIntegerCoordinateError(VocError):
    pass


class DegenerateBoxError(VocError):
    pass


def emit_voc_xml(scene: AnnotatedScene) -> str:
    b = scene.truth
    return (
        "<annotation>\n"
        f"\t<filename>{escape(scene.image_id)}.pgm</filename>\n"
        "\t<size>\n"
        f"\t\t<width>{scene.image.width}</width>\n"
        f"\t\t<height>{scene.image.height}</height>\n"
        "\t\t<depth>1</depth>\n"
        "\t</size>\n"
        "\t<object>\n"
        f"\t\t<name>{OBJECT_NAME}</name>\n"
        "\t\t<bndbox>\n"
        f"\t\t\t<xmin>{b.xmin}</xmin>\n"
        f"\t\t\t<ymin>{b.ymin}</ymin>\n"
        f"\t\t\t<xmax>{b.xmax}</xmax>\n"
        f"\t\t\t<ymax>{b.ymax}</ymax>\n"
        "\t\t</bndbox>\n"
        "\t</object>\n"
        "</annotation>\n"
    )


def parse_voc_xml(xml_text: str) -> tuple[str, BoundingBox]:
    """Return (image_id, box) from a VOC `<annotation>` document.

    image_id is the `<filename>` with its extension stripped.
    """
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        raise MalformedXmlError(str(exc)) from exc
    if root.tag != "annotation":
        raise MalformedXmlError(f"root element is <{root.tag}>, expected <annotation>")

    filename = root.findtext("filename")
    if filename is None or not filename.strip():
        raise MissingFieldError("missing <filename>")
    image_id = filename.strip().rsplit(".", 1)[0]

    obj = root.find("object")
    if obj is None:
        raise MissingFieldError("missing <object>")
    bndbox = obj.find("bndbox")
    if bndbox is None:
        raise MissingFieldError("missing <bndbox>")

    coords = {}
    for key in ("xmin", "ymin", "xmax", "ymax"):
        raw = bndbox.findtext(key)
        if raw is None:
            raise MissingFieldError(f"missing <{key}>")
        raw = raw.strip()
        try:
            coords[key] = int(raw)
        except ValueError as exc:
            raise NonIntegerCoordinateError(f"<{key}> is {raw!r}, not an integer") from exc

    if coords["xmin"] >= coords["xmax"] or coords["ymin"] >= coords["ymax"]:
        raise DegenerateBoxError(f"degenerate bndbox {coords}")
    return image_id, BoundingBox(coords["xmin"], coords["ymin"], coords["xmax"], coords["ymax"])
