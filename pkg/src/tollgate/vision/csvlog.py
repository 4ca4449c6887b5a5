"""Recognition results appended to a CSV file, one whole record per write."""

from __future__ import annotations

from pathlib import Path

from tollgate.vision.ocr import PlateReading

CSV_HEADER = "image_id,plate_text,confidence"


def format_row(reading: PlateReading) -> str:
    # scores always carry exactly 4 decimals so files diff bit-exactly
    return f"{reading.image_id},{reading.filtered_text},{reading.mean_char_score:.4f}"


def append_csv(reading: PlateReading, path: str | Path) -> None:
    """Append one record, creating the file with a header when absent.

    Callers must serialize concurrent appends to the same path; each call
    writes and flushes a whole record.
    """
    target = Path(path)
    record = format_row(reading) + "\n"
    if not target.exists():
        record = CSV_HEADER + "\n" + record
    with open(target, "a", encoding="utf-8", newline="") as fh:
        fh.write(record)
        fh.flush()
