"""A bit-exact NIfTI-1 single-file subset: uint8/int16/float32 payloads,
plain or gzipped, voxel data in Fortran order indexed [x, y, z].

Orientation information beyond the voxel spacing is carried opaquely and
ignored: the metrics only need consistent grids. Masks must scale to exact
{0, 1} values; anything else is an error, never a silent threshold.
"""

from __future__ import annotations

import gzip
import zlib
from pathlib import Path

import numpy as np

from .errors import NiftiError, NonBinaryMaskError, UnsupportedDataTypeError
from .grid import CtVolume, Mask, Spacing

HEADER_SIZE = 348
VOX_OFFSET = 352  # header + 4-byte extension flag
MAGIC = b"n+1\x00"

HEADER_DTYPE = np.dtype([
    ("sizeof_hdr", "i4"),        # 0; must be 348
    ("data_type", "S10"),        # 4; unused
    ("db_name", "S18"),          # 14; unused
    ("extents", "i4"),           # 32; unused
    ("session_error", "i2"),     # 36; unused
    ("regular", "S1"),           # 38; unused
    ("dim_info", "u1"),          # 39
    ("dim", "i2", (8,)),         # 40; array dimensions
    ("intent_p1", "f4"),         # 56
    ("intent_p2", "f4"),         # 60
    ("intent_p3", "f4"),         # 64
    ("intent_code", "i2"),       # 68
    ("datatype", "i2"),          # 70
    ("bitpix", "i2"),            # 72
    ("slice_start", "i2"),       # 74
    ("pixdim", "f4", (8,)),      # 76; grid spacing in mm
    ("vox_offset", "f4"),        # 108; offset to voxel data
    ("scl_slope", "f4"),         # 112
    ("scl_inter", "f4"),         # 116
    ("slice_end", "i2"),         # 120
    ("slice_code", "u1"),        # 122
    ("xyzt_units", "u1"),        # 123
    ("cal_max", "f4"),           # 124
    ("cal_min", "f4"),           # 128
    ("slice_duration", "f4"),    # 132
    ("toffset", "f4"),           # 136
    ("glmax", "i4"),             # 140; unused
    ("glmin", "i4"),             # 144; unused
    ("descrip", "S80"),          # 148
    ("aux_file", "S24"),         # 228
    ("qform_code", "i2"),        # 252
    ("sform_code", "i2"),        # 254
    ("quatern_b", "f4"),         # 256
    ("quatern_c", "f4"),         # 260
    ("quatern_d", "f4"),         # 264
    ("qoffset_x", "f4"),         # 268
    ("qoffset_y", "f4"),         # 272
    ("qoffset_z", "f4"),         # 276
    ("srow_x", "f4", (4,)),      # 280
    ("srow_y", "f4", (4,)),      # 296
    ("srow_z", "f4", (4,)),      # 312
    ("intent_name", "S16"),      # 328
    ("magic", "S4"),             # 344; 'n+1\0' for single-file
])
assert HEADER_DTYPE.itemsize == HEADER_SIZE

DATATYPES = {
    2: np.dtype(np.uint8),
    4: np.dtype(np.int16),
    16: np.dtype(np.float32),
}

UNITS_MM_SEC = 0x0A  # NIFTI_UNITS_MM | NIFTI_UNITS_SEC


def _read_bytes(path: Path) -> bytes:
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise NiftiError(f"{path}: {exc}") from exc
    if raw[:2] == b"\x1f\x8b":
        try:
            raw = gzip.decompress(raw)
        except (OSError, EOFError, zlib.error) as exc:
            raise NiftiError(f"{path}: corrupt gzip stream: {exc}") from exc
    return raw


def read_nifti(path, kind: str = "mask") -> Mask | CtVolume:
    """Read a volume from the NIfTI-1 subset.

    ``kind`` selects the result: "mask" demands exact binary values and
    returns a Mask; "ct" applies slope/intercept scaling and returns a
    CtVolume.
    """
    if kind not in ("mask", "ct"):
        raise ValueError(f"kind must be 'mask' or 'ct', got {kind!r}")
    path = Path(path)
    raw = _read_bytes(path)
    if len(raw) < HEADER_SIZE:
        raise NiftiError(f"{path}: truncated file, {len(raw)} bytes is shorter than the header")
    header = np.frombuffer(raw[:HEADER_SIZE], dtype=HEADER_DTYPE)[0]
    swapped = False
    if int(header["sizeof_hdr"]) != HEADER_SIZE:
        header = np.frombuffer(raw[:HEADER_SIZE], dtype=HEADER_DTYPE.newbyteorder())[0]
        swapped = True
        if int(header["sizeof_hdr"]) != HEADER_SIZE:
            raise NiftiError(f"{path}: bad magic (sizeof_hdr is not 348)")
    if bytes(header["magic"]) not in (MAGIC, b"n+1"):
        raise NiftiError(f"{path}: bad magic {bytes(header['magic'])!r}, expected 'n+1'")

    dim = header["dim"]
    ndim = int(dim[0])
    if not 1 <= ndim <= 7:
        raise NiftiError(f"{path}: dim[0] = {ndim} is outside 1..7")
    if ndim > 3 and any(int(d) > 1 for d in dim[4:1 + ndim]):
        raise NiftiError(f"{path}: only 3D volumes are supported, dim = {dim[:1 + ndim].tolist()}")
    shape = tuple(max(int(d), 1) for d in dim[1:4])

    code = int(header["datatype"])
    if code not in DATATYPES:
        raise UnsupportedDataTypeError(f"{path}: unsupported datatype code {code}")
    dtype = DATATYPES[code].newbyteorder() if swapped else DATATYPES[code]

    spacing_vals = [float(abs(header["pixdim"][axis])) for axis in (1, 2, 3)]
    if any(not v > 0 for v in spacing_vals):
        raise NiftiError(f"{path}: non-positive pixdim {spacing_vals}")
    spacing = Spacing(*spacing_vals)

    offset = int(header["vox_offset"])
    if offset < HEADER_SIZE:
        raise NiftiError(f"{path}: vox_offset {offset} overlaps the header")
    count = shape[0] * shape[1] * shape[2]
    need = offset + count * dtype.itemsize
    if len(raw) < need:
        raise NiftiError(f"{path}: truncated file, {len(raw)} bytes but voxel data needs {need}")
    payload = np.frombuffer(raw, dtype=dtype, count=count, offset=offset)
    grid = payload.reshape(shape, order="F")

    slope = float(header["scl_slope"])
    inter = float(header["scl_inter"])
    if slope == 0.0:
        slope = 1.0
    if kind == "ct":
        return CtVolume(intensities=grid.astype(np.float64) * slope + inter, spacing=spacing)
    scaled = grid.astype(np.float64) * slope + inter
    binary = np.isin(scaled, (0.0, 1.0))
    if not binary.all():
        offending = np.unique(scaled[~binary])[:4]
        raise NonBinaryMaskError(f"{path}: mask contains non-binary values {offending.tolist()}")
    return Mask(occupancy=scaled == 1.0, spacing=spacing)


def write_nifti(obj: Mask | CtVolume, path) -> None:
    """Write a Mask (uint8) or CtVolume (float32) as single-file NIfTI-1,
    gzipped when the path ends in .gz."""
    path = Path(path)
    if isinstance(obj, Mask):
        payload = obj.occupancy.astype("<u1")
        code = 2
    elif isinstance(obj, CtVolume):
        payload = obj.intensities.astype("<f4")
        code = 16
    else:
        raise TypeError(f"cannot write {type(obj).__name__} as NIfTI")

    header = np.zeros((), dtype=HEADER_DTYPE.newbyteorder("<"))
    header["sizeof_hdr"] = HEADER_SIZE
    header["dim"][0] = 3
    header["dim"][1:4] = payload.shape
    header["dim"][4:] = 1
    header["datatype"] = code
    header["bitpix"] = payload.dtype.itemsize * 8
    header["pixdim"][0] = 1.0
    header["pixdim"][1:4] = np.asarray(tuple(obj.spacing), dtype=np.float32)
    header["vox_offset"] = VOX_OFFSET
    header["scl_slope"] = 1.0
    header["scl_inter"] = 0.0
    header["xyzt_units"] = UNITS_MM_SEC
    header["magic"] = MAGIC

    blob = header.tobytes() + b"\x00" * (VOX_OFFSET - HEADER_SIZE)
    blob += np.asfortranarray(payload).tobytes(order="F")
    try:
        if path.suffix == ".gz":
            # mtime pinned so identical volumes produce identical bytes
            with gzip.GzipFile(path, "wb", mtime=0) as fh:
                fh.write(blob)
        else:
            path.write_bytes(blob)
    except OSError as exc:
        raise NiftiError(f"{path}: write failed: {exc}") from exc
