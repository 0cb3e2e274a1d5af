"""ENVI raster I/O: text header plus raw BSQ/BIL/BIP payload.

Cubes are read into the canonical ``(lines, samples, bands)`` float64
layout regardless of interleave. Integer payloads are widened on read;
writing an integer type back needs ``lossy=True``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from specdet.cube import LAYOUTS, SpectralCube
from specdet.detectors import DetectionMap
from specdet.errors import (
    EnviError,
    MalformedList,
    MissingMagic,
    MissingRequiredField,
    PayloadSizeMismatch,
    UnsupportedDataType,
)

# ENVI "data type" codes
DATA_TYPES = {
    1: np.dtype("u1"),
    2: np.dtype("i2"),
    3: np.dtype("i4"),
    4: np.dtype("f4"),
    5: np.dtype("f8"),
    12: np.dtype("u2"),
    13: np.dtype("u4"),
}
FLOAT_TYPES = (4, 5)

REQUIRED_KEYS = ("samples", "lines", "bands", "data type", "interleave")
# writer emits exactly these keys, in this order, then optional lists and extras
WRITER_KEYS = ("samples", "lines", "bands", "header offset", "data type", "interleave", "byte order")

_KNOWN = set(WRITER_KEYS) | {"band names", "wavelength"}


@dataclass
class EnviHeader:
    samples: int
    lines: int
    bands: int
    data_type: int
    interleave: str
    byte_order: int = 0
    header_offset: int = 0
    band_names: list[str] | None = None
    wavelength: list[float] | None = None
    extras: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("samples", "lines", "bands"):
            if getattr(self, name) < 1:
                raise EnviError(f"{name} must be >= 1")
        if self.data_type not in DATA_TYPES:
            raise UnsupportedDataType(f"data type {self.data_type} not supported")
        self.interleave = self.interleave.lower()
        if self.interleave not in LAYOUTS:
            raise EnviError(f"unknown interleave {self.interleave!r}")
        if self.byte_order not in (0, 1):
            raise EnviError(f"byte order must be 0 or 1, got {self.byte_order}")
        if self.header_offset < 0:
            raise EnviError("header offset must be non-negative")

    @property
    def dtype(self) -> np.dtype:
        return DATA_TYPES[self.data_type].newbyteorder("<" if self.byte_order == 0 else ">")

    @property
    def payload_size(self) -> int:
        return self.header_offset + self.samples * self.lines * self.bands * self.dtype.itemsize


def _split_list(body: str) -> list[str]:
    return [item.strip() for item in body.split(",") if item.strip()]


def parse_envi_header(text: str) -> EnviHeader:
    """Parse ENVI header text.

    Keys are matched case-insensitively with runs of whitespace collapsed;
    ``{...}`` values may span lines. Unrecognized keys are kept verbatim in
    ``extras``.
    """
    lines = text.lstrip().splitlines()
    if not lines or lines[0].strip() != "ENVI":
        raise MissingMagic("header does not start with 'ENVI'")
    fields: dict[str, str] = {}
    i = 1
    while i < len(lines):
        line = lines[i]
        i += 1
        if not line.strip() or line.lstrip().startswith(";"):
            continue
        if "=" not in line:
            raise EnviError(f"cannot parse header line: {line!r}")
        key, value = line.split("=", 1)
        key = re.sub(r"\s+", " ", key.strip().lower())
        value = value.strip()
        if value.startswith("{"):
            while "}" not in value:
                if i >= len(lines):
                    raise MalformedList(f"unclosed brace in field {key!r}")
                value += "\n" + lines[i]
                i += 1
            close = value.index("}")
            value = value[: close + 1]
        fields[key] = value

    for key in REQUIRED_KEYS:
        if key not in fields:
            raise MissingRequiredField(key)

    def integer(key, default=None):
        if key not in fields:
            return default
        try:
            return int(fields[key])
        except ValueError:
            raise EnviError(f"field {key!r} is not an integer: {fields[key]!r}") from None

    def listed(key):
        if key not in fields:
            return None
        raw = fields[key]
        if not (raw.startswith("{") and raw.endswith("}")):
            raise MalformedList(f"field {key!r} is not a braced list")
        return _split_list(raw[1:-1])

    wavelength = listed("wavelength")
    if wavelength is not None:
        try:
            wavelength = [float(w) for w in wavelength]
        except ValueError:
            raise EnviError("wavelength list is not numeric") from None
    return EnviHeader(
        samples=integer("samples"),
        lines=integer("lines"),
        bands=integer("bands"),
        data_type=integer("data type"),
        interleave=fields["interleave"].strip(),
        byte_order=integer("byte order", 0),
        header_offset=integer("header offset", 0),
        band_names=listed("band names"),
        wavelength=wavelength,
        extras={k: v for k, v in fields.items() if k not in _KNOWN},
    )


def format_envi_header(header: EnviHeader) -> str:
    """Header text with keys in a fixed order (see ``WRITER_KEYS``)."""
    values = {
        "samples": header.samples,
        "lines": header.lines,
        "bands": header.bands,
        "header offset": header.header_offset,
        "data type": header.data_type,
        "interleave": header.interleave,
        "byte order": header.byte_order,
    }
    out = ["ENVI"] + [f"{k} = {values[k]}" for k in WRITER_KEYS]
    if header.band_names is not None:
        out.append("band names = {" + ", ".join(header.band_names) + "}")
    if header.wavelength is not None:
        out.append("wavelength = {" + ", ".join(repr(float(w)) for w in header.wavelength) + "}")
    for k, v in header.extras.items():
        out.append(f"{k} = {v}")
    return "\n".join(out) + "\n"


def _to_canonical(flat: np.ndarray, header: EnviHeader) -> np.ndarray:
    b, l, s = header.bands, header.lines, header.samples
    if header.interleave == "bsq":
        return flat.reshape(b, l, s).transpose(1, 2, 0)
    if header.interleave == "bil":
        return flat.reshape(l, b, s).transpose(0, 2, 1)
    return flat.reshape(l, s, b)


def _from_canonical(values: np.ndarray, interleave: str) -> np.ndarray:
    if interleave == "bsq":
        return values.transpose(2, 0, 1)
    if interleave == "bil":
        return values.transpose(0, 2, 1)
    return values


def read_cube(header: EnviHeader, payload: bytes) -> SpectralCube:
    """Decode ``payload`` (which includes ``header_offset`` leading bytes).

    Raises
    ------
    PayloadSizeMismatch
        If ``len(payload)`` differs from the size implied by the header.
    """
    if len(payload) != header.payload_size:
        raise PayloadSizeMismatch(
            f"payload has {len(payload)} bytes, header implies {header.payload_size}"
        )
    flat = np.frombuffer(payload, dtype=header.dtype, offset=header.header_offset)
    values = _to_canonical(flat, header).astype(np.float64)
    return SpectralCube(
        values,
        layout=header.interleave,
        wavelengths=tuple(header.wavelength) if header.wavelength is not None else None,
        band_names=tuple(header.band_names) if header.band_names is not None else None,
    )


def write_cube(
    cube: SpectralCube,
    data_type: int = 5,
    interleave: str = "bsq",
    byte_order: int = 0,
    header_offset: int = 0,
    lossy: bool = False,
    extras: dict[str, str] | None = None,
) -> tuple[str, bytes]:
    """Encode ``cube`` as ``(header_text, payload)``.

    Float payloads round-trip bit-exactly (float32 only for values that are
    float32-representable). Integer types require ``lossy=True``; values
    are then rounded and clipped to the type's range.
    """
    if data_type not in DATA_TYPES:
        raise UnsupportedDataType(f"data type {data_type} not supported")
    if data_type not in FLOAT_TYPES and not lossy:
        raise UnsupportedDataType(f"writing data type {data_type} is lossy; pass lossy=True")
    header = EnviHeader(
        samples=cube.cols,
        lines=cube.rows,
        bands=cube.bands,
        data_type=data_type,
        interleave=interleave,
        byte_order=byte_order,
        header_offset=header_offset,
        band_names=list(cube.band_names) if cube.band_names is not None else None,
        wavelength=list(cube.wavelengths) if cube.wavelengths is not None else None,
        extras=dict(extras or {}),
    )
    values = cube.values
    if data_type not in FLOAT_TYPES:
        info = np.iinfo(DATA_TYPES[data_type])
        values = np.clip(np.rint(values), info.min, info.max)
    arranged = _from_canonical(values, header.interleave)
    payload = np.ascontiguousarray(arranged, dtype=header.dtype).tobytes()
    return format_envi_header(header), b"\0" * header_offset + payload


# -- files -------------------------------------------------------------------

_PAYLOAD_SUFFIXES = (".img", ".dat", ".raw", ".bin", "")


def header_path(path: str | Path) -> Path:
    path = Path(path)
    return path if path.suffix.lower() == ".hdr" else path.with_suffix(".hdr")


def payload_path(path: str | Path) -> Path:
    """Locate the binary file that goes with a header or data path."""
    path = Path(path)
    if path.suffix.lower() != ".hdr" and path.exists():
        return path
    stem = path.with_suffix("")
    for suffix in _PAYLOAD_SUFFIXES:
        candidate = stem.with_suffix(suffix) if suffix else stem
        if candidate.exists() and candidate.suffix.lower() != ".hdr":
            return candidate
    raise FileNotFoundError(f"no payload file found next to {path}")


def load_cube(path: str | Path) -> SpectralCube:
    header = parse_envi_header(header_path(path).read_text())
    return read_cube(header, payload_path(path).read_bytes())


# -- detection maps ------------------------------------------------------------

MAP_FORMATS = ("envi", "csv", "pgm16")


def write_detection_map(dmap: DetectionMap, fmt: str = "envi") -> dict[str, bytes]:
    """Encode a detection map; returns ``{file suffix: content}``.

    ``envi``
        Single-band float64 BSQ, ``.hdr`` + ``.img``; round-trips exactly.
    ``csv``
        One ``row,col,score`` line per pixel (0-based, ``repr`` precision),
        no header line.
    ``pgm16``
        Binary 16-bit PGM, min-max scaled to 0..65535 (lossy). A constant
        map encodes as all zeros.
    """
    scores = np.asarray(dmap.scores, dtype=np.float64)
    rows, cols = scores.shape
    if fmt == "envi":
        text, payload = write_cube(
            SpectralCube(scores[:, :, None]), data_type=5, interleave="bsq",
            extras={"description": f"{{{dmap.kind} detection map}}"},
        )
        return {".hdr": text.encode("ascii"), ".img": payload}
    if fmt == "csv":
        lines = [f"{r},{c},{float(scores[r, c])!r}" for r in range(rows) for c in range(cols)]
        return {".csv": ("\n".join(lines) + "\n").encode("ascii")}
    if fmt == "pgm16":
        lo, hi = float(scores.min()), float(scores.max())
        if hi > lo:
            levels = np.rint((scores - lo) / (hi - lo) * 65535.0)
        else:
            levels = np.zeros_like(scores)
        body = levels.astype(">u2").tobytes()
        return {".pgm": f"P5\n{cols} {rows}\n65535\n".encode("ascii") + body}
    raise ValueError(f"unknown map format {fmt!r}; expected one of {MAP_FORMATS}")


def read_detection_map(header_text: str, payload: bytes, kind: str = "unknown") -> DetectionMap:
    cube = read_cube(parse_envi_header(header_text), payload)
    if cube.bands != 1:
        raise EnviError("detection map must be single-band")
    return DetectionMap(cube.values[:, :, 0].copy(), kind)
