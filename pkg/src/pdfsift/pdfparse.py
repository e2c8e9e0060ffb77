"""Fault-tolerant structural PDF parser.

Malicious PDFs are routinely malformed, so this parser never raises on
arbitrary input: every byte string yields a :class:`PdfDocument`, possibly
with zero objects and a list of warning codes describing what went wrong.

Object discovery runs in two phases:

1. a linear scan for ``N G obj ... endobj`` headers, which recovers objects
   even when the cross-reference machinery is damaged or absent;
2. the cross-reference table (or stream) reachable from the last
   ``startxref``, which is validated entry by entry and used to mark which
   objects the xref actually accounts for.

The parser extracts structure only. It does not render, decrypt, or execute
anything; streams are decoded on request through a small set of supported
filters with a hard output cap so decompression bombs cannot run away.
"""

from __future__ import annotations

import base64
import re
import zlib
from dataclasses import dataclass, field, replace

# Warning codes (recoverable anomalies; parse_document never fails hard).
NO_HEADER = "NO_HEADER"
NO_EOF = "NO_EOF"
XREF_BROKEN = "XREF_BROKEN"
DUPLICATE_OBJECT = "DUPLICATE_OBJECT"
BAD_OBJECT = "BAD_OBJECT"
OBJSTM_UNEXPANDED = "OBJSTM_UNEXPANDED"
ENCRYPTED = "ENCRYPTED"
UNSUPPORTED_FILTER = "UNSUPPORTED_FILTER"
DECODE_FAILED = "DECODE_FAILED"
DECODE_TRUNCATED = "DECODE_TRUNCATED"
PAGE_TREE_CYCLE = "PAGE_TREE_CYCLE"
PAGE_TREE_TRUNCATED = "PAGE_TREE_TRUNCATED"

#: Per-stream decoded-output cap; bounds decompression bombs.
DEFAULT_DECODE_LIMIT = 16 * 1024 * 1024

#: Page-tree walk visits at most this many nodes.
PAGE_TREE_NODE_CAP = 100_000

_MAX_DEPTH = 60
_MAX_CONTAINER_ITEMS = 100_000

_WHITESPACE = b"\x00\t\n\x0c\r "
_DELIMITERS = b"()<>[]{}/%"

# PDF whitespace between the number tokens of an object header (\s misses NUL).
_WS = rb"[\x00\t\n\x0c\r ]"
_OBJ_HEADER_RE = re.compile(rb"(\d{1,10})" + _WS + rb"+(\d{1,5})" + _WS + rb"+obj(?![0-9A-Za-z])")
_HEADER_VERSION_RE = re.compile(rb"%PDF-(\d+\.\d+)")
_NUMBER_RE = re.compile(rb"[+-]?(?:\d+\.?\d*|\.\d+)")
_REF_RE = re.compile(rb"(\d{1,10})" + _WS + rb"+R(?![0-9A-Za-z])")
_XREF_SUBSECTION_RE = re.compile(rb"(\d{1,10})" + _WS + rb"+(\d{1,10})")
_XREF_ENTRY_RE = re.compile(rb"(\d{10})" + _WS + rb"+(\d{5})" + _WS + rb"*([fn])")
_NAME_ESCAPE_RE = re.compile(rb"#([0-9A-Fa-f]{2})")


class PdfName(str):
    """A PDF name token, stored decoded (hex escapes resolved, no slash)."""

    __slots__ = ()


@dataclass(frozen=True)
class PdfRef:
    """Indirect reference ``N G R``."""

    number: int
    generation: int


@dataclass
class StreamData:
    """A stream value: its dictionary plus the raw bytes between
    ``stream``/``endstream``. ``decoded_bytes`` stays ``None`` until
    :func:`decode_stream` succeeds."""

    dictionary: dict
    raw_bytes: bytes
    filters: list[str] = field(default_factory=list)
    decoded_bytes: bytes | None = None
    warnings: list[str] = field(default_factory=list)


@dataclass
class PdfObject:
    number: int
    generation: int
    value: object
    byte_span: tuple[int, int]
    via_xref: bool = False

    @property
    def id(self) -> tuple[int, int]:
        return (self.number, self.generation)


@dataclass
class PdfDocument:
    objects: list[PdfObject]
    trailer: dict | None
    header_version: str | None
    xref_ok: bool
    eof_marker_count: int
    raw_size_bytes: int
    parse_warnings: list[str]
    encrypted: bool = False
    trailer_count: int = 0

    def find(self, number: int, generation: int = 0):
        """Resolve an object id, falling back to any generation with the
        same number (damaged files frequently get generations wrong)."""
        exact = None
        loose = None
        for obj in self.objects:
            if obj.number == number:
                if obj.generation == generation:
                    exact = obj
                elif loose is None:
                    loose = obj
        return exact if exact is not None else loose

    def resolve(self, value, _depth: int = 0):
        """Follow reference chains to a concrete value (depth-capped)."""
        while isinstance(value, PdfRef) and _depth < 32:
            obj = self.find(value.number, value.generation)
            if obj is None:
                return None
            value = obj.value
            _depth += 1
        return value


class _ParseAbort(Exception):
    """Internal: the current value cannot be parsed at this position."""


class _ValueParser:
    """Recursive-descent parser for PDF values over a byte buffer.

    Lenient by design: malformed content inside containers is skipped a byte
    at a time, containers are size-capped, recursion is depth-capped, and an
    unparseable top-level value surfaces as ``None`` plus a warning at the
    call site rather than an exception.
    """

    def __init__(self, data: bytes, pos: int = 0):
        self.data = data
        self.pos = pos
        self.end = len(data)

    def skip_whitespace(self):
        data, pos, end = self.data, self.pos, self.end
        while pos < end:
            c = data[pos]
            if c in _WHITESPACE:
                pos += 1
            elif c == 0x25:  # '%' comment runs to end of line
                nl = data.find(b"\n", pos)
                cr = data.find(b"\r", pos)
                stop = min(x for x in (nl, cr, end) if x != -1)
                pos = stop + 1 if stop < end else end
            else:
                break
        self.pos = pos

    def _peek(self) -> int:
        return self.data[self.pos] if self.pos < self.end else -1

    def parse_value(self, depth: int = 0):
        if depth > _MAX_DEPTH:
            raise _ParseAbort("depth")
        self.skip_whitespace()
        c = self._peek()
        if c == -1:
            raise _ParseAbort("eof")
        if c == 0x2F:  # '/'
            return self._parse_name()
        if c == 0x28:  # '('
            return self._parse_literal_string()
        if c == 0x3C:  # '<'
            if self.data[self.pos : self.pos + 2] == b"<<":
                return self._parse_dictionary(depth)
            return self._parse_hex_string()
        if c == 0x5B:  # '['
            return self._parse_array(depth)
        if 0x30 <= c <= 0x39 or c in (0x2B, 0x2D, 0x2E):  # digit + - .
            return self._parse_number_or_ref()
        if self.data.startswith(b"true", self.pos):
            self.pos += 4
            return True
        if self.data.startswith(b"false", self.pos):
            self.pos += 5
            return False
        if self.data.startswith(b"null", self.pos):
            self.pos += 4
            return None
        raise _ParseAbort("token")

    def _parse_name(self) -> PdfName:
        pos = self.pos + 1  # consume '/'
        data, end = self.data, self.end
        start = pos
        while pos < end:
            c = data[pos]
            if c in _WHITESPACE or c in _DELIMITERS:
                break
            pos += 1
        self.pos = pos
        raw = data[start:pos]
        if b"#" in raw:
            raw = _NAME_ESCAPE_RE.sub(lambda m: bytes([int(m.group(1), 16)]), raw)
        return PdfName(raw.decode("latin-1"))

    def _parse_number_or_ref(self):
        m = _NUMBER_RE.match(self.data, self.pos)
        if m is None:
            raise _ParseAbort("number")
        text = m.group(0)
        after = m.end()
        if b"." not in text:
            try:
                value = int(text)
            except ValueError:
                raise _ParseAbort("number") from None
            # Lookahead for "G R" making this an indirect reference.
            if value >= 0 and not text.startswith(b"+"):
                probe = _ValueParser(self.data, after)
                probe.skip_whitespace()
                rm = _REF_RE.match(self.data, probe.pos)
                if rm is not None:
                    self.pos = rm.end()
                    return PdfRef(value, int(rm.group(1)))
            self.pos = after
            return value
        self.pos = after
        try:
            return float(text)
        except ValueError:
            raise _ParseAbort("number") from None

    def _parse_literal_string(self) -> bytes:
        data, end = self.data, self.end
        pos = self.pos + 1
        out = bytearray()
        depth = 1
        while pos < end:
            c = data[pos]
            if c == 0x5C:  # backslash escape
                pos += 1
                if pos >= end:
                    break
                e = data[pos]
                if e in b"nrtbf":
                    out.append({0x6E: 10, 0x72: 13, 0x74: 9, 0x62: 8, 0x66: 12}[e])
                    pos += 1
                elif e in b"()\\":
                    out.append(e)
                    pos += 1
                elif 0x30 <= e <= 0x37:  # up to three octal digits
                    octal = 0
                    n = 0
                    while pos < end and n < 3 and 0x30 <= data[pos] <= 0x37:
                        octal = octal * 8 + (data[pos] - 0x30)
                        pos += 1
                        n += 1
                    out.append(octal & 0xFF)
                elif e in b"\r\n":  # line continuation
                    pos += 1
                    if e == 0x0D and pos < end and data[pos] == 0x0A:
                        pos += 1
                else:
                    out.append(e)
                    pos += 1
            elif c == 0x28:
                depth += 1
                out.append(c)
                pos += 1
            elif c == 0x29:
                depth -= 1
                pos += 1
                if depth == 0:
                    self.pos = pos
                    return bytes(out)
                out.append(c)
            else:
                out.append(c)
                pos += 1
        self.pos = pos  # unterminated: keep what we saw
        return bytes(out)

    def _parse_hex_string(self) -> bytes:
        pos = self.pos + 1
        close = self.data.find(b">", pos)
        if close == -1:
            close = self.end
            self.pos = self.end
        else:
            self.pos = close + 1
        digits = bytes(c for c in self.data[pos:close] if c not in _WHITESPACE)
        digits = bytes(c for c in digits if c in b"0123456789abcdefABCDEF")
        if len(digits) % 2:
            digits += b"0"
        try:
            return bytes.fromhex(digits.decode("ascii"))
        except ValueError:
            return b""

    def _parse_array(self, depth: int) -> list:
        self.pos += 1
        items: list = []
        while len(items) < _MAX_CONTAINER_ITEMS:
            self.skip_whitespace()
            c = self._peek()
            if c == -1:
                break
            if c == 0x5D:  # ']'
                self.pos += 1
                break
            try:
                items.append(self.parse_value(depth + 1))
            except _ParseAbort:
                self.pos += 1  # skip junk byte, keep going
        return items

    def _parse_dictionary(self, depth: int) -> dict:
        self.pos += 2
        entries: dict = {}
        count = 0
        while count < _MAX_CONTAINER_ITEMS:
            count += 1
            self.skip_whitespace()
            if self.data.startswith(b">>", self.pos):
                self.pos += 2
                break
            c = self._peek()
            if c == -1:
                break
            if c != 0x2F:
                self.pos += 1  # key must be a name; skip junk byte
                continue
            key = self._parse_name()
            try:
                value = self.parse_value(depth + 1)
            except _ParseAbort:
                value = None
            entries[str(key)] = value
        return entries


def _filters_from_dict(dictionary: dict) -> list[str]:
    declared = dictionary.get("Filter")
    if isinstance(declared, PdfName):
        return [str(declared)]
    if isinstance(declared, list):
        return [str(f) for f in declared if isinstance(f, PdfName)]
    return []


def _extract_stream(data: bytes, parser: _ValueParser, dictionary: dict) -> StreamData | None:
    """If the keyword ``stream`` follows, slice out its raw bytes."""
    parser.skip_whitespace()
    if not data.startswith(b"stream", parser.pos):
        return None
    pos = parser.pos + 6
    if data.startswith(b"\r\n", pos):
        pos += 2
    elif pos < len(data) and data[pos] in b"\r\n":
        pos += 1
    start = pos

    end = None
    length = dictionary.get("Length")
    if isinstance(length, int) and 0 <= length <= len(data) - start:
        probe = start + length
        # Accept the declared length only when endstream really follows it.
        lookahead = _ValueParser(data, probe)
        lookahead.skip_whitespace()
        if data.startswith(b"endstream", lookahead.pos):
            end = probe
            parser.pos = lookahead.pos + 9
    if end is None:
        found = data.find(b"endstream", start)
        if found == -1:
            end = len(data)
            parser.pos = end
        else:
            end = found
            parser.pos = found + 9
            # One trailing EOL belongs to the keyword, not the data.
            if data[start:end].endswith(b"\r\n"):
                end -= 2
            elif data[start:end].endswith((b"\n", b"\r")):
                end -= 1
    return StreamData(
        dictionary=dictionary,
        raw_bytes=data[start:end],
        filters=_filters_from_dict(dictionary),
    )


def _scan_objects(data: bytes, warnings: list[str]) -> list[PdfObject]:
    """Phase one: linear scan for ``N G obj`` headers."""
    objects: list[PdfObject] = []
    for m in _OBJ_HEADER_RE.finditer(data):
        number = int(m.group(1))
        generation = int(m.group(2))
        parser = _ValueParser(data, m.end())
        try:
            value = parser.parse_value()
        except _ParseAbort:
            value = None
            warnings.append(BAD_OBJECT)
        if isinstance(value, dict):
            stream = _extract_stream(data, parser, value)
            if stream is not None:
                value = stream
        end = parser.pos
        probe = _ValueParser(data, parser.pos)
        probe.skip_whitespace()
        if data.startswith(b"endobj", probe.pos):
            end = probe.pos + 6
        objects.append(PdfObject(number, generation, value, (m.start(), max(end, m.end()))))
    return objects


def _apply_png_predictor(decoded: bytes, predictor: int, columns: int, colors: int, bpc: int) -> bytes:
    """Undo PNG row predictors (10..15) used by xref streams."""
    bpp = max(1, (colors * bpc + 7) // 8)
    row_len = (columns * colors * bpc + 7) // 8
    stride = row_len + 1
    out = bytearray()
    prev = bytearray(row_len)
    for r in range(len(decoded) // stride):
        row = bytearray(decoded[r * stride : (r + 1) * stride])
        tag, row = row[0], row[1:]
        if tag == 1:  # Sub
            for i in range(bpp, row_len):
                row[i] = (row[i] + row[i - bpp]) & 0xFF
        elif tag == 2:  # Up
            for i in range(row_len):
                row[i] = (row[i] + prev[i]) & 0xFF
        elif tag == 3:  # Average
            for i in range(row_len):
                left = row[i - bpp] if i >= bpp else 0
                row[i] = (row[i] + (left + prev[i]) // 2) & 0xFF
        elif tag == 4:  # Paeth
            for i in range(row_len):
                a = row[i - bpp] if i >= bpp else 0
                b = prev[i]
                c = prev[i - bpp] if i >= bpp else 0
                p = a + b - c
                pa, pb, pc = abs(p - a), abs(p - b), abs(p - c)
                pred = a if (pa <= pb and pa <= pc) else (b if pb <= pc else c)
                row[i] = (row[i] + pred) & 0xFF
        out += row
        prev = row
    return bytes(out)


class _XrefResult:
    def __init__(self):
        self.entries: dict[int, tuple[int, int]] = {}  # number -> (generation, offset)
        self.compressed: dict[int, int] = {}  # number -> container ObjStm number
        self.trailers: list[dict] = []  # newest first
        self.found = False
        self.broken = False


def _parse_xref_at(data: bytes, offset: int, result: _XrefResult, decode_limit: int) -> int | None:
    """Parse one xref section (table or stream); returns the /Prev offset."""
    parser = _ValueParser(data, offset)
    parser.skip_whitespace()
    if data.startswith(b"xref", parser.pos):
        parser.pos += 4
        while True:
            parser.skip_whitespace()
            if data.startswith(b"trailer", parser.pos):
                parser.pos += 7
                try:
                    trailer = parser.parse_value()
                except _ParseAbort:
                    result.broken = True
                    return None
                if not isinstance(trailer, dict):
                    result.broken = True
                    return None
                result.trailers.append(trailer)
                prev = trailer.get("Prev")
                xref_stm = trailer.get("XRefStm")
                if isinstance(xref_stm, int):
                    _parse_xref_at(data, xref_stm, result, decode_limit)
                return prev if isinstance(prev, int) else None
            m = _XREF_SUBSECTION_RE.match(data, parser.pos)
            if m is None:
                result.broken = True
                return None
            first, count = int(m.group(1)), int(m.group(2))
            if count > 1_000_000:
                result.broken = True
                return None
            parser.pos = m.end()
            for i in range(count):
                parser.skip_whitespace()
                em = _XREF_ENTRY_RE.match(data, parser.pos)
                if em is None:
                    result.broken = True
                    return None
                parser.pos = em.end()
                if em.group(3) == b"n":
                    number = first + i
                    result.entries.setdefault(number, (int(em.group(2)), int(em.group(1))))
        # unreachable
    # Cross-reference stream.
    m = _OBJ_HEADER_RE.match(data, parser.pos)
    if m is None:
        result.broken = True
        return None
    sparser = _ValueParser(data, m.end())
    try:
        value = sparser.parse_value()
    except _ParseAbort:
        result.broken = True
        return None
    if not isinstance(value, dict):
        result.broken = True
        return None
    stream = _extract_stream(data, sparser, value)
    if stream is None or value.get("Type") != PdfName("XRef"):
        result.broken = True
        return None
    decoded_stream = decode_stream(stream, limit=decode_limit)
    body = decoded_stream.decoded_bytes
    if body is None:
        result.broken = True
        return None
    params = value.get("DecodeParms")
    if isinstance(params, list):
        params = params[0] if params and isinstance(params[0], dict) else None
    if isinstance(params, dict):
        predictor = params.get("Predictor", 1)
        if isinstance(predictor, int) and predictor >= 10:
            body = _apply_png_predictor(
                body,
                predictor,
                params.get("Columns", 1) if isinstance(params.get("Columns", 1), int) else 1,
                params.get("Colors", 1) if isinstance(params.get("Colors", 1), int) else 1,
                params.get("BitsPerComponent", 8)
                if isinstance(params.get("BitsPerComponent", 8), int)
                else 8,
            )
    widths = value.get("W")
    if not (isinstance(widths, list) and len(widths) >= 3 and all(isinstance(w, int) for w in widths[:3])):
        result.broken = True
        return None
    w1, w2, w3 = widths[:3]
    size = value.get("Size")
    index = value.get("Index")
    if not (isinstance(index, list) and all(isinstance(i, int) for i in index) and len(index) % 2 == 0):
        index = [0, size if isinstance(size, int) else 0]
    row = w1 + w2 + w3
    if row <= 0:
        result.broken = True
        return None
    pos = 0
    for k in range(0, len(index), 2):
        first, count = index[k], index[k + 1]
        for i in range(count):
            chunk = body[pos : pos + row]
            pos += row
            if len(chunk) < row:
                result.broken = True
                break
            f1 = int.from_bytes(chunk[:w1], "big") if w1 else 1
            f2 = int.from_bytes(chunk[w1 : w1 + w2], "big")
            f3 = int.from_bytes(chunk[w1 + w2 :], "big")
            number = first + i
            if f1 == 1:
                result.entries.setdefault(number, (f3, f2))
            elif f1 == 2:
                result.compressed.setdefault(number, f2)
    result.trailers.append(value)
    prev = value.get("Prev")
    return prev if isinstance(prev, int) else None


def _parse_xref_chain(data: bytes, decode_limit: int) -> _XrefResult:
    result = _XrefResult()
    idx = data.rfind(b"startxref")
    if idx == -1:
        return result
    result.found = True
    parser = _ValueParser(data, idx + 9)
    parser.skip_whitespace()
    m = _NUMBER_RE.match(data, parser.pos)
    if m is None or b"." in m.group(0):
        result.broken = True
        return result
    offset = int(m.group(0))
    visited: set[int] = set()
    while offset is not None and offset not in visited:
        visited.add(offset)
        if not (0 <= offset < len(data)):
            result.broken = True
            break
        offset = _parse_xref_at(data, offset, result, decode_limit)
    return result


def _scan_trailers(data: bytes) -> list[dict]:
    """Fallback trailer discovery when the xref chain is unusable.
    Returned newest (latest in file) first."""
    trailers: list[dict] = []
    for m in re.finditer(rb"trailer(?![0-9A-Za-z])", data):
        parser = _ValueParser(data, m.end())
        try:
            value = parser.parse_value()
        except _ParseAbort:
            continue
        if isinstance(value, dict):
            trailers.append(value)
    trailers.reverse()
    return trailers


def _expand_object_streams(
    objects: list[PdfObject],
    compressed: dict[int, int],
    warnings: list[str],
    decode_limit: int,
) -> list[PdfObject]:
    """Expand /Type /ObjStm containers into their member objects."""
    out: list[PdfObject] = []
    for obj in objects:
        out.append(obj)
        value = obj.value
        if not (isinstance(value, StreamData) and value.dictionary.get("Type") == PdfName("ObjStm")):
            continue
        decoded = decode_stream(value, limit=decode_limit)
        body = decoded.decoded_bytes
        n = value.dictionary.get("N")
        first = value.dictionary.get("First")
        if body is None or not isinstance(n, int) or not isinstance(first, int) or n < 0 or n > 10_000:
            warnings.append(OBJSTM_UNEXPANDED)
            warnings.extend(decoded.warnings)
            continue
        header = body[:first]
        pairs = re.findall(rb"(\d{1,10})" + _WS + rb"+(\d{1,10})", header)[:n]
        for number_text, rel_offset_text in pairs:
            number = int(number_text)
            rel = int(rel_offset_text)
            if first + rel >= len(body):
                warnings.append(BAD_OBJECT)
                continue
            child_parser = _ValueParser(body, first + rel)
            try:
                child_value = child_parser.parse_value()
            except _ParseAbort:
                child_value = None
                warnings.append(BAD_OBJECT)
            out.append(
                PdfObject(
                    number,
                    0,
                    child_value,
                    obj.byte_span,
                    via_xref=compressed.get(number) == obj.number,
                )
            )
    return out


def parse_document(data: bytes, *, decode_limit: int = DEFAULT_DECODE_LIMIT) -> PdfDocument:
    """Parse arbitrary bytes into a :class:`PdfDocument`. Never raises."""
    warnings: list[str] = []

    header_version = None
    m = _HEADER_VERSION_RE.search(data[:1024])
    if m is not None:
        header_version = m.group(1).decode("ascii")
    else:
        warnings.append(NO_HEADER)

    eof_count = data.count(b"%%EOF")
    if eof_count == 0:
        warnings.append(NO_EOF)

    objects = _scan_objects(data, warnings)

    xref = _parse_xref_chain(data, decode_limit)
    validated_offsets: dict[int, tuple[int, int]] = {}
    if xref.found and not xref.broken:
        for number, (generation, offset) in xref.entries.items():
            if not (0 <= offset < len(data)):
                xref.broken = True
                continue
            probe = _ValueParser(data, offset)
            probe.skip_whitespace()
            hm = _OBJ_HEADER_RE.match(data, probe.pos)
            if hm is None or int(hm.group(1)) != number or int(hm.group(2)) != generation:
                xref.broken = True
                continue
            validated_offsets[probe.pos] = (number, generation)
    xref_ok = xref.found and not xref.broken and bool(xref.trailers)
    if xref.found and xref.broken:
        warnings.append(XREF_BROKEN)

    for obj in objects:
        claimed = validated_offsets.get(obj.byte_span[0])
        if claimed is not None and claimed == (obj.number, obj.generation):
            obj.via_xref = True

    objects = _expand_object_streams(objects, xref.compressed, warnings, decode_limit)

    merged: dict[tuple[int, int], PdfObject] = {}
    for obj in objects:
        existing = merged.get(obj.id)
        if existing is None:
            merged[obj.id] = obj
            continue
        warnings.append(DUPLICATE_OBJECT)
        if existing.via_xref and not obj.via_xref:
            continue  # the xref-confirmed body wins
        merged[obj.id] = obj

    trailers = xref.trailers if xref.trailers else _scan_trailers(data)
    trailer: dict | None = None
    if trailers:
        trailer = {}
        for t in trailers:  # newest first; first writer wins
            for key, value in t.items():
                trailer.setdefault(key, value)

    encrypted = bool(trailer) and "Encrypt" in trailer
    if encrypted:
        warnings.append(ENCRYPTED)

    return PdfDocument(
        objects=list(merged.values()),
        trailer=trailer,
        header_version=header_version,
        xref_ok=xref_ok,
        eof_marker_count=eof_count,
        raw_size_bytes=len(data),
        parse_warnings=warnings,
        encrypted=encrypted,
        trailer_count=len(trailers),
    )


# Filter name aliases (inline-image short forms accepted leniently).
_FILTER_ALIASES = {
    "Fl": "FlateDecode",
    "AHx": "ASCIIHexDecode",
    "A85": "ASCII85Decode",
}

SUPPORTED_FILTERS = frozenset({"FlateDecode", "ASCIIHexDecode", "ASCII85Decode"})


def normalize_filter_name(name: str) -> str:
    return _FILTER_ALIASES.get(name, name)


def _flate_decode(data: bytes, limit: int) -> bytes:
    d = zlib.decompressobj()
    out = d.decompress(data, limit + 1)
    if len(out) > limit:
        raise _DecodeTruncated
    if d.unconsumed_tail:
        raise _DecodeTruncated
    out += d.flush()
    if len(out) > limit:
        raise _DecodeTruncated
    return out


def _ascii_hex_decode(data: bytes) -> bytes:
    stop = data.find(b">")
    if stop != -1:
        data = data[:stop]
    digits = bytes(c for c in data if c not in _WHITESPACE)
    if any(c not in b"0123456789abcdefABCDEF" for c in digits):
        raise ValueError("non-hex digit")
    if len(digits) % 2:
        digits += b"0"
    return bytes.fromhex(digits.decode("ascii"))


def _ascii85_decode(data: bytes) -> bytes:
    stop = data.find(b"~>")
    if stop != -1:
        data = data[:stop]
    if data.startswith(b"<~"):
        data = data[2:]
    return base64.a85decode(data, ignorechars=_WHITESPACE)


class _DecodeTruncated(Exception):
    pass


def decode_stream(stream: StreamData, *, limit: int = DEFAULT_DECODE_LIMIT) -> StreamData:
    """Return a copy of ``stream`` with ``decoded_bytes`` populated when the
    whole filter chain is supported and decodes cleanly.

    Unsupported filters, malformed data, and outputs beyond ``limit`` leave
    ``decoded_bytes`` absent and add a warning code instead of raising.
    """
    warnings: list[str] = []
    normalized = [normalize_filter_name(f) for f in stream.filters]
    unsupported = [f for f in normalized if f not in SUPPORTED_FILTERS]
    if unsupported:
        return replace(stream, decoded_bytes=None, warnings=[UNSUPPORTED_FILTER])

    data = stream.raw_bytes
    try:
        for name in normalized:
            if name == "FlateDecode":
                data = _flate_decode(data, limit)
            elif name == "ASCIIHexDecode":
                data = _ascii_hex_decode(data)
            elif name == "ASCII85Decode":
                data = _ascii85_decode(data)
            if len(data) > limit:
                raise _DecodeTruncated
    except _DecodeTruncated:
        return replace(stream, decoded_bytes=None, warnings=[DECODE_TRUNCATED])
    except Exception:
        return replace(stream, decoded_bytes=None, warnings=[DECODE_FAILED])
    return replace(stream, decoded_bytes=data, warnings=warnings)


def count_pages(doc: PdfDocument, warnings: list[str] | None = None) -> int:
    """Count leaf pages by walking the page tree from the trailer /Root.

    Cycle-guarded and node-capped; falls back to counting objects whose
    dictionary is /Type /Page when the tree is absent or yields nothing.
    ``warnings``, when given, collects PAGE_TREE_* codes.
    """
    if warnings is None:
        warnings = []

    def fallback() -> int:
        count = 0
        for obj in doc.objects:
            d = obj.value.dictionary if isinstance(obj.value, StreamData) else obj.value
            if isinstance(d, dict) and d.get("Type") == PdfName("Page"):
                count += 1
        return count

    trailer = doc.trailer or {}
    root = doc.resolve(trailer.get("Root"))
    if not isinstance(root, dict):
        return fallback()
    pages_ref = root.get("Pages")
    if pages_ref is None:
        return fallback()

    count = 0
    visited: set[tuple[int, int]] = set()
    nodes_seen = 0
    stack = [pages_ref]
    while stack:
        nodes_seen += 1
        if nodes_seen > PAGE_TREE_NODE_CAP:
            warnings.append(PAGE_TREE_TRUNCATED)
            break
        node = stack.pop()
        if isinstance(node, PdfRef):
            key = (node.number, node.generation)
            if key in visited:
                warnings.append(PAGE_TREE_CYCLE)
                continue
            visited.add(key)
            node = doc.resolve(node)
        if not isinstance(node, dict):
            continue
        node_type = node.get("Type")
        if node_type == PdfName("Page"):
            count += 1
            continue
        kids = node.get("Kids")
        if isinstance(kids, list):
            stack.extend(reversed(kids))
    return count if count > 0 else fallback()
