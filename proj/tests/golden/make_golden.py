"""Regenerates the golden files from the format description alone.

    python3 tests/golden/make_golden.py

Does not import or run any of the C++ code.
"""

import hashlib
import json
import math
import struct
from pathlib import Path

HERE = Path(__file__).resolve().parent

# 2 rows x 3 columns, (dx, dy) per pixel
FLOW = [
    [(1.5, -0.25), (0.0, 2.0), (-3.75, 0.125)],
    [(1e-7, -1e-7), (65504.0, -0.5), (0.1, 7.0)],
]


def write_flow():
    h, w = len(FLOW), len(FLOW[0])
    out = bytearray(b"D2FL")
    out += struct.pack("<IIII", 1, h, w, 2)
    for row in FLOW:
        for dx, dy in row:
            out += struct.pack("<ff", dx, dy)
    (HERE / "flow_2x3.d2fl").write_bytes(bytes(out))


def fmt_float(v):
    if not math.isfinite(v):
        raise ValueError("non-finite")
    s = "%.17g" % v
    if "." not in s and "e" not in s:
        s += ".0"
    return s


def emit(v, depth=0):
    pad = "  " * (depth + 1)
    close = "  " * depth
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return fmt_float(v)
    if isinstance(v, str):
        return json.dumps(v, ensure_ascii=False)
    if isinstance(v, dict):
        if not v:
            return "{}"
        items = [pad + emit(k) + ": " + emit(v[k], depth + 1) for k in sorted(v)]
        return "{\n" + ",\n".join(items) + "\n" + close + "}"
    if isinstance(v, list):
        if not v:
            return "[]"
        return "[\n" + ",\n".join(pad + emit(x, depth + 1) for x in v) + "\n" + close + "]"
    raise TypeError(type(v))


FILES = {
    "clean.png": hashlib.sha256(b"clean").hexdigest(),
    "flow_bwd.d2fl": hashlib.sha256(b"flow").hexdigest(),
    "tilt.png": hashlib.sha256(b"tilt").hexdigest(),
    "turb.png": hashlib.sha256(b"turb").hexdigest(),
}


def content_digest(files):
    lines = "".join(name + "\0" + files[name] + "\n" for name in sorted(files))
    return hashlib.sha256(lines.encode()).hexdigest()


def write_meta():
    meta = {
        "format_version": 1,
        "sample_id": "00007_garden",
        "source_id": "garden",
        "seed": 12345678901234567890,
        "d_over_r0": 2.25,
        "category": "medium",
        "L": 1000.0,
        "s": 0.5,
        "z_max": 1000.0,
        "tilt_rms_px": 0.1,
        "kernel_size": 33,
        "psf_grid": [8, 6],
        "flat_field_mode": False,
        "engine_version": "0.1.0",
        "height": 256,
        "width": 320,
        "psf_max_energy_outside_crop": 0.0,
        "flow_hole_count": 3,
        "files": FILES,
        "content_digest": content_digest(FILES),
    }
    (HERE / "meta.json").write_text(emit(meta) + "\n", encoding="utf-8")


if __name__ == "__main__":
    write_flow()
    write_meta()
