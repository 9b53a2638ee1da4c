"""File I/O: ENVI scenes, ground truth, and result artifacts (PPM/CSV/JSON).

ENVI support is deliberately narrow: 'key = value' headers, interleaves
bsq/bil/bip, data types float32/float64/int16/uint16, both byte orders.
Integer payloads are cast to float without radiometric scaling.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .core import GroundTruth, SpectralCube, reshape_row_to_grid
from .errors import InputError

__all__ = [
    "load_envi",
    "write_envi",
    "load_ground_truth",
    "save_cluster_map",
    "load_labels_csv",
    "write_labels_csv",
    "LABEL_PALETTE",
]

# ENVI numeric codes for the supported sample formats.
_ENVI_DTYPES = {
    2: np.int16,
    4: np.float32,
    5: np.float64,
    12: np.uint16,
}
_DTYPE_CODES = {np.dtype(v): k for k, v in _ENVI_DTYPES.items()}

_INTERLEAVES = ("bsq", "bil", "bip")

_DATA_EXTENSIONS = ("", ".img", ".dat", ".raw", ".bin")


def _parse_header(text: str, path: str) -> dict:
    fields = {}
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        line = lines[i].strip()
        i += 1
        if not line or line.upper() == "ENVI" or line.startswith(";"):
            continue
        if "=" not in line:
            raise InputError(f"{path}: malformed header line: {line!r}")
        key, _, value = line.partition("=")
        key = key.strip().lower()
        value = value.strip()
        if value.startswith("{"):
            # brace values may span several lines
            while "}" not in value and i < len(lines):
                value += " " + lines[i].strip()
                i += 1
            if "}" not in value:
                raise InputError(f"{path}: unterminated brace value for '{key}'")
            value = value.strip("{}").strip()
        fields[key] = value
    return fields


def _header_int(fields: dict, key: str, path: str) -> int:
    if key not in fields:
        raise InputError(f"{path}: missing required header field '{key}'")
    try:
        value = int(fields[key])
    except ValueError as exc:
        raise InputError(f"{path}: field '{key}' is not an integer") from exc
    if value < 1 and key != "byte order" and key != "header offset":
        raise InputError(f"{path}: field '{key}' must be positive")
    return value


def _data_path_for(header_path: str) -> str:
    base = header_path[:-4] if header_path.lower().endswith(".hdr") else header_path
    for ext in _DATA_EXTENSIONS:
        candidate = base + ext
        if candidate != header_path and os.path.isfile(candidate):
            return candidate
    raise InputError(f"no data file found next to header {header_path}")


def load_envi(header_path: str) -> SpectralCube:
    """Read an ENVI header + raw binary pair into a SpectralCube.

    The cube is stored as float64; integer sample formats are cast without
    scaling. Raises InputError on missing/contradictory header fields, a
    data-file size mismatch, or non-finite samples.
    """
    if not os.path.isfile(header_path):
        raise InputError(f"header file not found: {header_path}")
    with open(header_path, "r", encoding="utf-8") as fh:
        fields = _parse_header(fh.read(), header_path)

    samples = _header_int(fields, "samples", header_path)
    lines = _header_int(fields, "lines", header_path)
    bands = _header_int(fields, "bands", header_path)
    if "data type" not in fields:
        raise InputError(f"{header_path}: missing required header field 'data type'")
    code = int(fields["data type"])
    if code not in _ENVI_DTYPES:
        raise InputError(f"{header_path}: unsupported data type code {code}")
    if "interleave" not in fields:
        raise InputError(f"{header_path}: missing required header field 'interleave'")
    interleave = fields["interleave"].lower()
    if interleave not in _INTERLEAVES:
        raise InputError(f"{header_path}: unsupported interleave '{interleave}'")
    if "byte order" not in fields:
        raise InputError(f"{header_path}: missing required header field 'byte order'")
    byte_order = int(fields["byte order"])
    if byte_order not in (0, 1):
        raise InputError(f"{header_path}: byte order must be 0 or 1")
    offset = int(fields.get("header offset", 0))

    dtype = np.dtype(_ENVI_DTYPES[code]).newbyteorder("<" if byte_order == 0 else ">")
    data_path = _data_path_for(header_path)
    raw = np.fromfile(data_path, dtype=np.uint8)
    expected = offset + samples * lines * bands * dtype.itemsize
    if raw.size != expected:
        raise InputError(
            f"{data_path}: size {raw.size} bytes, header implies {expected}"
        )
    flat = raw[offset:].view(dtype)

    if interleave == "bsq":
        cube = flat.reshape(bands, lines, samples).transpose(1, 2, 0)
    elif interleave == "bil":
        cube = flat.reshape(lines, bands, samples).transpose(0, 2, 1)
    else:  # bip
        cube = flat.reshape(lines, samples, bands)
    values = np.ascontiguousarray(cube, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise InputError(f"{data_path}: data contains NaN or Inf")

    wavelengths = None
    if "wavelength" in fields:
        try:
            wavelengths = np.array(
                [float(w) for w in fields["wavelength"].split(",") if w.strip()]
            )
        except ValueError:
            wavelengths = None
        if wavelengths is not None and wavelengths.size != bands:
            wavelengths = None
    return SpectralCube(lines, samples, bands, values, wavelengths)


def write_envi(cube: SpectralCube, header_path: str, dtype="float32",
               interleave="bsq", byte_order=0) -> str:
    """Write a cube as an ENVI header + raw pair; returns the data path."""
    dtype = np.dtype(dtype)
    if dtype not in _DTYPE_CODES:
        raise InputError(f"unsupported output dtype {dtype}")
    interleave = interleave.lower()
    if interleave not in _INTERLEAVES:
        raise InputError(f"unsupported interleave '{interleave}'")
    if byte_order not in (0, 1):
        raise InputError("byte order must be 0 or 1")

    if interleave == "bsq":
        arr = cube.values.transpose(2, 0, 1)
    elif interleave == "bil":
        arr = cube.values.transpose(0, 2, 1)
    else:
        arr = cube.values
    out_dtype = dtype.newbyteorder("<" if byte_order == 0 else ">")
    payload = np.ascontiguousarray(arr, dtype=out_dtype)

    base = header_path[:-4] if header_path.lower().endswith(".hdr") else header_path
    data_path = base + ".img"
    header_lines = [
        "ENVI",
        f"samples = {cube.cols}",
        f"lines = {cube.rows}",
        f"bands = {cube.bands}",
        "header offset = 0",
        f"data type = {_DTYPE_CODES[dtype]}",
        f"interleave = {interleave}",
        f"byte order = {byte_order}",
    ]
    if cube.wavelengths is not None:
        joined = ", ".join(repr(float(w)) for w in cube.wavelengths)
        header_lines.append("wavelength = {%s}" % joined)
    hdr_path = base + ".hdr"
    with open(hdr_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(header_lines) + "\n")
    payload.tofile(data_path)
    return data_path


def load_labels_csv(path: str) -> np.ndarray:
    """Read an integer label grid from CSV (one image row per line)."""
    if not os.path.isfile(path):
        raise InputError(f"label file not found: {path}")
    try:
        grid = np.loadtxt(path, delimiter=",", dtype=np.int64, ndmin=2)
    except ValueError as exc:
        raise InputError(f"{path}: could not parse integer CSV: {exc}") from exc
    return grid


def write_labels_csv(grid: np.ndarray, path: str) -> None:
    """Write an integer label grid as CSV with LF endings, row-major order."""
    grid = np.asarray(grid)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in grid:
            fh.write(",".join(str(int(v)) for v in row) + "\n")


def load_ground_truth(path: str, ignore_label: int = 0) -> GroundTruth:
    """Load ground truth from a row-major CSV grid or a single-band ENVI file.

    Returned labels are linearized with the package pixel convention
    (column-major), so entry j aligns with pixel matrix column j.
    """
    if path.lower().endswith(".hdr"):
        cube = load_envi(path)
        if cube.bands != 1:
            raise InputError(f"{path}: ground truth must be single-band")
        grid = np.rint(cube.values[:, :, 0]).astype(np.int64)
    else:
        grid = load_labels_csv(path)
    labels = grid.reshape(-1, order="F")
    distinct = labels[labels != ignore_label]
    num_classes = int(distinct.max()) if distinct.size else 0
    return GroundTruth(labels, num_classes, ignore_label)


# 24 visually distinct colors, cycled as (label - 1) % 24.
LABEL_PALETTE = np.array([
    (230, 25, 75), (60, 180, 75), (255, 225, 25), (0, 130, 200),
    (245, 130, 48), (145, 30, 180), (70, 240, 240), (240, 50, 230),
    (210, 245, 60), (250, 190, 212), (0, 128, 128), (220, 190, 255),
    (170, 110, 40), (255, 250, 200), (128, 0, 0), (170, 255, 195),
    (128, 128, 0), (255, 215, 180), (0, 0, 128), (128, 128, 128),
    (255, 255, 255), (0, 0, 0), (233, 216, 166), (148, 210, 189),
], dtype=np.uint8)


def write_ppm(rgb: np.ndarray, path: str) -> None:
    """Write an (Nr, Nc, 3) uint8 image as binary PPM (P6)."""
    rgb = np.ascontiguousarray(rgb, dtype=np.uint8)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise InputError("PPM image must have shape (rows, cols, 3)")
    with open(path, "wb") as fh:
        fh.write(f"P6\n{rgb.shape[1]} {rgb.shape[0]}\n255\n".encode("ascii"))
        fh.write(rgb.tobytes())


def read_ppm(path: str) -> np.ndarray:
    """Read a binary PPM (P6) file back into an (Nr, Nc, 3) uint8 array."""
    with open(path, "rb") as fh:
        data = fh.read()
    parts = data.split(b"\n", 3)
    if len(parts) < 4 or parts[0] != b"P6":
        raise InputError(f"{path}: not a P6 PPM file")
    cols, rows = (int(v) for v in parts[1].split())
    body = parts[3]
    return np.frombuffer(body[: rows * cols * 3], dtype=np.uint8).reshape(rows, cols, 3)


def labels_to_rgb(label_grid: np.ndarray) -> np.ndarray:
    idx = (np.asarray(label_grid, dtype=np.int64) - 1) % len(LABEL_PALETTE)
    return LABEL_PALETTE[idx]


def save_cluster_map(result, geometry, out_dir: str, stem: str = "clusters",
                     metrics: dict | None = None) -> dict:
    """Write the label map as PPM + CSV plus a JSON metrics/timing sidecar.

    Returns a dict of the written paths keyed by artifact kind.
    """
    labels = np.asarray(result.labels)
    if np.any(labels < 1):
        raise InputError("cluster labels must be >= 1")
    os.makedirs(out_dir, exist_ok=True)
    grid = reshape_row_to_grid(labels, geometry)

    ppm_path = os.path.join(out_dir, f"{stem}.ppm")
    write_ppm(labels_to_rgb(grid), ppm_path)

    csv_path = os.path.join(out_dir, f"{stem}.csv")
    write_labels_csv(grid, csv_path)

    params = result.params
    sidecar = {
        "geometry": list(geometry),
        "n_pixels": int(labels.size),
        "n_clusters": int(labels.max()),
        "params": params.to_dict() if hasattr(params, "to_dict") else params,
        "timings": {k: float(v) for k, v in result.timings.items()},
        "info": _jsonable(result.info),
        "metrics": _jsonable(metrics) if metrics is not None else None,
    }
    json_path = os.path.join(out_dir, f"{stem}.json")
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return {"ppm": ppm_path, "csv": csv_path, "json": json_path}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj
