"""Linear image file I/O: binary PPM (P6) and a PNG subset, 8 and 16 bit.

Readers map pixel codes to linear floats in [0, 1] and flag saturated pixels;
parse failures report the byte offset that broke. The PNG side covers what
this tool writes and what cameras commonly hand over: 8/16-bit greyscale and
RGB, non-interlaced. Gamma is strictly an I/O-boundary concern: the optional
sRGB transfer is applied here and nowhere else.
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

from .errors import ImageFormatError, InvalidArgumentError

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


def srgb_decode(v: np.ndarray) -> np.ndarray:
    """Inverse sRGB transfer: display-encoded [0,1] to linear [0,1]."""
    v = np.asarray(v, dtype=float)
    return np.where(v <= 0.04045, v / 12.92, ((v + 0.055) / 1.055) ** 2.4)


def srgb_encode(v: np.ndarray) -> np.ndarray:
    """Forward sRGB transfer: linear [0,1] to display-encoded [0,1]."""
    v = np.asarray(v, dtype=float)
    v = np.clip(v, 0.0, 1.0)
    return np.where(v <= 0.0031308, 12.92 * v, 1.055 * v ** (1.0 / 2.4) - 0.055)


# ---------------------------------------------------------------------------
# PPM (binary P6)
# ---------------------------------------------------------------------------

def _ppm_token(buf: bytes, pos: int) -> tuple[bytes, int]:
    n = len(buf)
    while pos < n:
        c = buf[pos:pos + 1]
        if c == b"#":
            while pos < n and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    if pos >= n:
        raise ImageFormatError(f"PPM truncated in header at byte {pos}")
    start = pos
    while pos < n and not buf[pos:pos + 1].isspace():
        pos += 1
    return buf[start:pos], pos


def read_ppm(path) -> tuple[np.ndarray, int]:
    """Read a binary P6 file; returns (HxWx3 uint array, maxval)."""
    with open(path, "rb") as fh:
        buf = fh.read()
    if buf[:2] != b"P6":
        raise ImageFormatError(f"{path}: not a P6 PPM (magic {buf[:2]!r} at byte 0)")
    pos = 2
    fields = []
    for _ in range(3):
        tok, pos = _ppm_token(buf, pos)
        try:
            fields.append(int(tok))
        except ValueError:
            raise ImageFormatError(f"{path}: bad header token {tok!r} ending at byte {pos}") from None
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise ImageFormatError(f"{path}: bad dimensions {width}x{height}")
    if not 0 < maxval < 65536:
        raise ImageFormatError(f"{path}: maxval {maxval} out of range")
    pos += 1  # single whitespace after maxval
    bytes_per = 1 if maxval < 256 else 2
    need = width * height * 3 * bytes_per
    if len(buf) - pos < need:
        raise ImageFormatError(
            f"{path}: truncated pixel data at byte {len(buf)} (need {need} bytes from {pos})"
        )
    dtype = ">u1" if bytes_per == 1 else ">u2"
    arr = np.frombuffer(buf, dtype=dtype, count=width * height * 3, offset=pos)
    return arr.reshape(height, width, 3).astype(np.uint16 if bytes_per == 2 else np.uint8), maxval


def write_ppm(path, codes: np.ndarray, maxval: int) -> None:
    codes = np.asarray(codes)
    H, W, _ = codes.shape
    header = f"P6\n{W} {H}\n{maxval}\n".encode("ascii")
    dtype = ">u1" if maxval < 256 else ">u2"
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(codes.astype(dtype).tobytes())


# ---------------------------------------------------------------------------
# PNG subset: bit depth 8/16, colour type 0 (grey) or 2 (RGB), no interlace
# ---------------------------------------------------------------------------

def _png_chunks(buf: bytes, path):
    pos = len(PNG_SIGNATURE)
    n = len(buf)
    while pos < n:
        if n - pos < 8:
            raise ImageFormatError(f"{path}: truncated chunk header at byte {pos}")
        (length,) = struct.unpack(">I", buf[pos:pos + 4])
        ctype = buf[pos + 4:pos + 8]
        if n - pos < 12 + length:
            raise ImageFormatError(f"{path}: truncated {ctype!r} chunk at byte {pos}")
        data = buf[pos + 8:pos + 8 + length]
        (crc,) = struct.unpack(">I", buf[pos + 8 + length:pos + 12 + length])
        if zlib.crc32(ctype + data) & 0xFFFFFFFF != crc:
            raise ImageFormatError(f"{path}: CRC mismatch in {ctype!r} chunk at byte {pos}")
        yield ctype, data, pos
        pos += 12 + length


def _paeth(a: int, b: int, c: int) -> int:
    p = a + b - c
    pa, pb, pc = abs(p - a), abs(p - b), abs(p - c)
    if pa <= pb and pa <= pc:
        return a
    if pb <= pc:
        return b
    return c


def _unfilter(raw: bytes, width: int, height: int, channels: int, sample_bytes: int, path):
    stride = width * channels * sample_bytes
    bpp = channels * sample_bytes
    if len(raw) != (stride + 1) * height:
        raise ImageFormatError(
            f"{path}: decompressed stream is {len(raw)} bytes, expected {(stride + 1) * height}"
        )
    out = np.zeros((height, stride), dtype=np.uint16)  # wide ints for the arithmetic
    raw = np.frombuffer(raw, dtype=np.uint8).reshape(height, stride + 1)
    for y in range(height):
        ftype = int(raw[y, 0])
        line = raw[y, 1:].astype(np.int32)
        prev = out[y - 1].astype(np.int32) if y > 0 else np.zeros(stride, dtype=np.int32)
        if ftype == 0:
            cur = line
        elif ftype == 2:  # Up
            cur = (line + prev) & 0xFF
        elif ftype in (1, 3, 4):  # Sub, Average, Paeth need a sequential pass
            cur = np.zeros(stride, dtype=np.int32)
            for i in range(stride):
                a = cur[i - bpp] if i >= bpp else 0
                if ftype == 1:
                    cur[i] = (line[i] + a) & 0xFF
                elif ftype == 3:
                    cur[i] = (line[i] + (a + prev[i]) // 2) & 0xFF
                else:
                    c = prev[i - bpp] if i >= bpp else 0
                    cur[i] = (line[i] + _paeth(a, int(prev[i]), int(c))) & 0xFF
        else:
            raise ImageFormatError(f"{path}: unknown filter type {ftype} on row {y}")
        out[y] = cur
    return out.astype(np.uint8).tobytes()


def read_png(path) -> tuple[np.ndarray, int]:
    """Read a supported PNG; returns (HxWx3 uint array, maxval). Grey is replicated to RGB."""
    with open(path, "rb") as fh:
        buf = fh.read()
    if buf[:8] != PNG_SIGNATURE:
        raise ImageFormatError(f"{path}: not a PNG (bad signature at byte 0)")
    ihdr = None
    idat = bytearray()
    seen_end = False
    for ctype, data, pos in _png_chunks(buf, path):
        if ctype == b"IHDR":
            if len(data) != 13:
                raise ImageFormatError(f"{path}: IHDR has {len(data)} bytes at byte {pos}")
            ihdr = struct.unpack(">IIBBBBB", data)
        elif ctype == b"IDAT":
            idat.extend(data)
        elif ctype == b"IEND":
            seen_end = True
            break
    if ihdr is None:
        raise ImageFormatError(f"{path}: missing IHDR chunk")
    if not seen_end:
        raise ImageFormatError(f"{path}: missing IEND chunk (truncated at byte {len(buf)})")
    width, height, depth, ctype_id, comp, filt, interlace = ihdr
    if comp != 0 or filt != 0:
        raise ImageFormatError(f"{path}: unsupported compression/filter method")
    if interlace != 0:
        raise ImageFormatError(f"{path}: interlaced PNG not supported")
    if depth not in (8, 16) or ctype_id not in (0, 2):
        raise ImageFormatError(
            f"{path}: unsupported PNG (bit depth {depth}, colour type {ctype_id}); "
            "supported: 8/16-bit greyscale or RGB"
        )
    channels = 1 if ctype_id == 0 else 3
    sample_bytes = depth // 8
    try:
        raw = zlib.decompress(bytes(idat))
    except zlib.error as exc:
        raise ImageFormatError(f"{path}: corrupt IDAT stream ({exc})") from None
    pixels = _unfilter(raw, width, height, channels, sample_bytes, path)
    dtype = ">u2" if depth == 16 else np.uint8
    arr = np.frombuffer(pixels, dtype=dtype).reshape(height, width, channels)
    arr = arr.astype(np.uint16 if depth == 16 else np.uint8)
    if channels == 1:
        arr = np.repeat(arr[:, :, None], 3, axis=2).reshape(height, width, 3)
    maxval = (1 << depth) - 1
    return arr, maxval


def write_png(path, codes: np.ndarray, maxval: int) -> None:
    codes = np.asarray(codes)
    H, W, _ = codes.shape
    depth = 8 if maxval < 256 else 16
    dtype = ">u1" if depth == 8 else ">u2"
    rows = codes.astype(dtype).tobytes()
    stride = W * 3 * (depth // 8)
    raw = bytearray()
    for y in range(H):
        raw.append(0)  # filter type None
        raw.extend(rows[y * stride:(y + 1) * stride])
    compressed = zlib.compress(bytes(raw), 9)

    def chunk(ctype: bytes, data: bytes) -> bytes:
        return (struct.pack(">I", len(data)) + ctype + data
                + struct.pack(">I", zlib.crc32(ctype + data) & 0xFFFFFFFF))

    ihdr = struct.pack(">IIBBBBB", W, H, depth, 2, 0, 0, 0)
    with open(path, "wb") as fh:
        fh.write(PNG_SIGNATURE)
        fh.write(chunk(b"IHDR", ihdr))
        fh.write(chunk(b"IDAT", compressed))
        fh.write(chunk(b"IEND", b""))


# ---------------------------------------------------------------------------
# Linear-float front end
# ---------------------------------------------------------------------------

def load_image(path, srgb: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Load a PPM or PNG as linear floats in [0, 1].

    Returns (image, saturated) where saturated marks pixels with any channel at
    the maximum code value (unreliable for chromaticity work). With srgb=True
    the standard inverse transfer curve maps codes to linear first.
    """
    p = str(path)
    with open(p, "rb") as fh:
        magic = fh.read(8)
    if magic[:2] == b"P6":
        codes, maxval = read_ppm(p)
    elif magic == PNG_SIGNATURE:
        codes, maxval = read_png(p)
    else:
        raise ImageFormatError(f"{p}: unsupported format (magic {magic[:4]!r} at byte 0)")
    saturated = np.any(codes >= maxval, axis=-1)
    img = codes.astype(float) / float(maxval)
    if srgb:
        img = srgb_decode(img)
    return img, saturated


def save_image(path, image, bit_depth: int = 8, srgb: bool = False) -> None:
    """Save linear floats in [0, 1] as PPM or PNG (by extension) at 8 or 16 bits."""
    img = np.asarray(image, dtype=float)
    if img.ndim != 3 or img.shape[2] != 3:
        raise InvalidArgumentError("save_image expects an (H, W, 3) array")
    if bit_depth not in (8, 16):
        raise InvalidArgumentError("bit depth must be 8 or 16")
    if srgb:
        img = srgb_encode(img)
    maxval = (1 << bit_depth) - 1
    codes = np.rint(np.clip(img, 0.0, 1.0) * maxval).astype(np.uint32)
    p = str(path)
    if p.lower().endswith(".ppm"):
        write_ppm(p, codes, maxval)
    elif p.lower().endswith(".png"):
        write_png(p, codes, maxval)
    else:
        raise InvalidArgumentError(f"{p}: unsupported extension (use .ppm or .png)")
