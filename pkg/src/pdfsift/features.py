"""The canonical 48-feature dictionary and its extractor.

Every PDF maps to exactly 48 finite real values, position-stable in the
order defined by :data:`FEATURES`. Booleans are encoded as 0.0/1.0 so the
vector is homogeneous. Degenerate inputs (empty files, unparseable blobs)
produce well-defined zeros, never errors.

Categories:

* ``structure``      file-level layout and cross-reference health
* ``metadata``       document information dictionary and XMP
* ``objects``        object population, filters, and action keys
* ``content-stats``  byte statistics and entropies

Name-key features (e.g. JavaScript detection) are computed on *decoded*
names, so hex-escape obfuscation such as ``/J#61vaScript`` does not evade
them; the amount of such escaping is itself a feature (F_KWOBFN).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .pdfparse import (
    DECODE_FAILED,
    DECODE_TRUNCATED,
    PdfDocument,
    PdfName,
    PdfRef,
    StreamData,
    count_pages,
    decode_stream,
    normalize_filter_name,
)

CATEGORY_STRUCTURE = "structure"
CATEGORY_METADATA = "metadata"
CATEGORY_OBJECTS = "objects"
CATEGORY_CONTENT = "content-stats"


@dataclass(frozen=True)
class FeatureDefinition:
    name: str
    category: str
    description: str
    rule: str


FEATURES: tuple[FeatureDefinition, ...] = (
    # structure (12)
    FeatureDefinition("F_SIZE", CATEGORY_STRUCTURE, "PDF file size", "length of the input in bytes"),
    FeatureDefinition("F_PGC", CATEGORY_STRUCTURE, "Page count", "leaf pages via the page tree, falling back to /Type /Page objects"),
    FeatureDefinition("F_HDRVER", CATEGORY_STRUCTURE, "Header version", "numeric %PDF-x.y version, 0 when the header is absent"),
    FeatureDefinition("F_EOFN", CATEGORY_STRUCTURE, "EOF markers", "number of %%EOF occurrences"),
    FeatureDefinition("F_XREFOK", CATEGORY_STRUCTURE, "Cross-reference health", "1 when the xref parsed and every entry resolves, else 0"),
    FeatureDefinition("F_UPDN", CATEGORY_STRUCTURE, "Incremental updates", "number of trailer dictionaries discovered"),
    FeatureDefinition("F_OBJGAP", CATEGORY_STRUCTURE, "Object-number gaps", "fraction of numbers missing from the contiguous range 1..max"),
    FeatureDefinition("F_BADOFF", CATEGORY_STRUCTURE, "Scan-only objects", "objects recovered by linear scan but not accounted for by the xref"),
    FeatureDefinition("F_TRLSZ", CATEGORY_STRUCTURE, "Trailer size", "entry count of the merged trailer"),
    FeatureDefinition("F_LINEAR", CATEGORY_STRUCTURE, "Linearized", "1 when any object dictionary carries /Linearized"),
    FeatureDefinition("F_ENCR", CATEGORY_STRUCTURE, "Encrypted", "1 when the trailer carries /Encrypt"),
    FeatureDefinition("F_WARNN", CATEGORY_STRUCTURE, "Parse warnings", "number of warnings recorded while parsing"),
    # metadata (6)
    FeatureDefinition("F_INFON", CATEGORY_METADATA, "Info entries", "entry count of the /Info dictionary"),
    FeatureDefinition("F_TITLELEN", CATEGORY_METADATA, "Title length", "byte length of /Title in /Info, 0 if absent"),
    FeatureDefinition("F_AUTHLEN", CATEGORY_METADATA, "Author length", "byte length of /Author in /Info, 0 if absent"),
    FeatureDefinition("F_PRODLEN", CATEGORY_METADATA, "Producer length", "byte length of /Producer in /Info, 0 if absent"),
    FeatureDefinition("F_XMP", CATEGORY_METADATA, "XMP metadata", "1 when an XMP metadata stream object is present"),
    FeatureDefinition("F_DATEOK", CATEGORY_METADATA, "CreationDate well-formed", "1 when /CreationDate matches the D:YYYY.. date syntax"),
    # objects (18)
    FeatureDefinition("F_OBJC", CATEGORY_OBJECTS, "Number of objects", "indirect objects after update resolution and ObjStm expansion"),
    FeatureDefinition("F_STRMN", CATEGORY_OBJECTS, "Stream count", "objects whose value is a stream"),
    FeatureDefinition("F_FILT", CATEGORY_OBJECTS, "Stream filtering", "total filter applications across all stream chains"),
    FeatureDefinition("F_FILTMAX", CATEGORY_OBJECTS, "Longest filter chain", "maximum declared chain length"),
    FeatureDefinition("F_FLATEN", CATEGORY_OBJECTS, "FlateDecode uses", "FlateDecode applications across all chains"),
    FeatureDefinition("F_HEXN", CATEGORY_OBJECTS, "ASCIIHexDecode uses", "ASCIIHexDecode applications across all chains"),
    FeatureDefinition("F_A85N", CATEGORY_OBJECTS, "ASCII85Decode uses", "ASCII85Decode applications across all chains"),
    FeatureDefinition("F_OTHFILTN", CATEGORY_OBJECTS, "Other filter uses", "applications of any other filter"),
    FeatureDefinition("F_JS", CATEGORY_OBJECTS, "PDF with JavaScript or not", "1 when any dictionary has a /JavaScript or /JS key"),
    FeatureDefinition("F_JSN", CATEGORY_OBJECTS, "JavaScript keys", "count of /JavaScript and /JS keys"),
    FeatureDefinition("F_OPENA", CATEGORY_OBJECTS, "OpenAction", "1 when any dictionary has an /OpenAction key"),
    FeatureDefinition("F_AA", CATEGORY_OBJECTS, "Additional actions", "1 when any dictionary has an /AA key"),
    FeatureDefinition("F_LAUNCH", CATEGORY_OBJECTS, "Launch actions", "dictionaries with /S /Launch or a /Launch key"),
    FeatureDefinition("F_URIN", CATEGORY_OBJECTS, "URI actions", "dictionaries with /S /URI or a /URI key"),
    FeatureDefinition("F_EMBFN", CATEGORY_OBJECTS, "Embedded files", "dictionaries typed /EmbeddedFile or holding /EmbeddedFiles"),
    FeatureDefinition("F_ACRON", CATEGORY_OBJECTS, "AcroForm", "1 when any dictionary has an /AcroForm key"),
    FeatureDefinition("F_OBJSTMN", CATEGORY_OBJECTS, "Object streams", "stream objects typed /ObjStm"),
    FeatureDefinition("F_REFN", CATEGORY_OBJECTS, "Indirect references", "total N G R references in the object graph"),
    # content-stats (12)
    FeatureDefinition("F_ENTRP1", CATEGORY_CONTENT, "Entropy of some content", "Shannon entropy of the whole file, bits per byte"),
    FeatureDefinition("F_ENTRP2", CATEGORY_CONTENT, "Entropy of some content", "mean Shannon entropy over decoded stream bodies, 0 if none decoded"),
    FeatureDefinition("F_ENTRPMAX", CATEGORY_CONTENT, "Peak stream entropy", "maximum decoded-stream entropy"),
    FeatureDefinition("F_STRMSZMEAN", CATEGORY_CONTENT, "Mean stream size", "mean raw stream length in bytes"),
    FeatureDefinition("F_STRMSZMAX", CATEGORY_CONTENT, "Largest stream", "maximum raw stream length in bytes"),
    FeatureDefinition("F_STRMRATIO", CATEGORY_CONTENT, "Stream share", "total raw stream bytes over file size, clamped to [0,1]"),
    FeatureDefinition("F_ASCIIR", CATEGORY_CONTENT, "Printable share", "fraction of printable ASCII bytes (0x20..0x7E plus tab/LF/CR)"),
    FeatureDefinition("F_NULLR", CATEGORY_CONTENT, "NUL share", "fraction of 0x00 bytes"),
    FeatureDefinition("F_KWOBFN", CATEGORY_CONTENT, "Obfuscated name escapes", "count of #xx escapes inside name tokens in the raw bytes"),
    FeatureDefinition("F_STRLMAX", CATEGORY_CONTENT, "Longest string literal", "maximum decoded string-literal length"),
    FeatureDefinition("F_STRLN", CATEGORY_CONTENT, "String literals", "count of string values in the object graph"),
    FeatureDefinition("F_DECFAILN", CATEGORY_CONTENT, "Decode failures", "streams whose decoding failed or hit the output cap"),
)

FEATURE_NAMES: tuple[str, ...] = tuple(f.name for f in FEATURES)
FEATURE_COUNT = len(FEATURES)
assert FEATURE_COUNT == 48

_NAME_TOKEN_RE = re.compile(rb"/([^\x00\t\n\x0c\r /<>\[\](){}%]+)")
_HEX_ESCAPE_RE = re.compile(rb"#[0-9A-Fa-f]{2}")
_PDF_DATE_RE = re.compile(
    rb"^D:\d{4}(\d{2})?(\d{2})?(\d{2})?(\d{2})?(\d{2})?([Zz]|[+\-]\d{2}('\d{2}'?)?)?$"
)


@dataclass
class FeatureVector:
    """The 48 features of one file, in canonical order."""

    values: np.ndarray
    feature_names: tuple[str, ...] = FEATURE_NAMES

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (FEATURE_COUNT,):
            raise ValueError(f"expected {FEATURE_COUNT} features, got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("feature values must be finite")

    def __getitem__(self, name: str) -> float:
        return float(self.values[FEATURE_NAMES.index(name)])


def shannon_entropy(data: bytes) -> float:
    """Shannon entropy in bits per byte; defined as 0 for empty input."""
    if not data:
        return 0.0
    counts = np.bincount(np.frombuffer(data, dtype=np.uint8), minlength=256)
    p = counts[counts > 0] / len(data)
    return float(-np.sum(p * np.log2(p)))


@dataclass
class _GraphStats:
    key_counts: dict = field(default_factory=dict)
    dicts: list = field(default_factory=list)
    string_lengths: list = field(default_factory=list)
    ref_count: int = 0
    streams: list = field(default_factory=list)


def _walk(value, stats: _GraphStats, depth: int = 0):
    if depth > 80:
        return
    if isinstance(value, StreamData):
        stats.streams.append(value)
        _walk(value.dictionary, stats, depth + 1)
    elif isinstance(value, dict):
        stats.dicts.append(value)
        for key, entry in value.items():
            stats.key_counts[key] = stats.key_counts.get(key, 0) + 1
            _walk(entry, stats, depth + 1)
    elif isinstance(value, list):
        for entry in value:
            _walk(entry, stats, depth + 1)
    elif isinstance(value, PdfRef):
        stats.ref_count += 1
    elif isinstance(value, bytes):
        stats.string_lengths.append(len(value))


def _info_dictionary(doc: PdfDocument) -> dict:
    info = doc.resolve((doc.trailer or {}).get("Info"))
    return info if isinstance(info, dict) else {}


def _string_length(doc: PdfDocument, value) -> int:
    value = doc.resolve(value)
    return len(value) if isinstance(value, bytes) else 0


def _date_ok(doc: PdfDocument, value) -> bool:
    value = doc.resolve(value)
    return isinstance(value, bytes) and _PDF_DATE_RE.match(value) is not None


def _dict_counts(stats: _GraphStats, marker: str, type_names: tuple[str, ...] = ()) -> int:
    count = 0
    for d in stats.dicts:
        if d.get("S") == PdfName(marker) or marker in d:
            count += 1
        elif type_names and d.get("Type") in [PdfName(t) for t in type_names]:
            count += 1
    return count


def extract_features(doc: PdfDocument, data: bytes) -> FeatureVector:
    """Map a parsed document plus its raw bytes to the canonical vector."""
    size = len(data)
    stats = _GraphStats()
    for obj in doc.objects:
        _walk(obj.value, stats)

    # Structure ------------------------------------------------------------
    numbers = {obj.number for obj in doc.objects if obj.number >= 1}
    max_number = max(numbers) if numbers else 0
    obj_gap = (max_number - len(numbers)) / max_number if max_number else 0.0
    bad_offsets = sum(1 for obj in doc.objects if not obj.via_xref)
    try:
        header_version = float(doc.header_version) if doc.header_version else 0.0
    except ValueError:
        header_version = 0.0
    linearized = any("Linearized" in d for d in stats.dicts)

    # Metadata ---------------------------------------------------------------
    info = _info_dictionary(doc)
    xmp = any(
        s.dictionary.get("Type") == PdfName("Metadata")
        or s.dictionary.get("Subtype") == PdfName("XML")
        for s in stats.streams
    )

    # Objects ----------------------------------------------------------------
    chains = [[normalize_filter_name(f) for f in s.filters] for s in stats.streams]
    all_filters = [name for chain in chains for name in chain]
    flate_n = sum(1 for f in all_filters if f == "FlateDecode")
    hex_n = sum(1 for f in all_filters if f == "ASCIIHexDecode")
    a85_n = sum(1 for f in all_filters if f == "ASCII85Decode")
    js_keys = stats.key_counts.get("JavaScript", 0) + stats.key_counts.get("JS", 0)
    objstm_n = sum(1 for s in stats.streams if s.dictionary.get("Type") == PdfName("ObjStm"))

    # Content statistics -------------------------------------------------------
    decoded_entropies: list[float] = []
    decode_failures = 0
    for stream in stats.streams:
        decoded = decode_stream(stream)
        decode_failures += sum(1 for w in decoded.warnings if w in (DECODE_FAILED, DECODE_TRUNCATED))
        if decoded.decoded_bytes is not None:
            decoded_entropies.append(shannon_entropy(decoded.decoded_bytes))
    stream_sizes = [len(s.raw_bytes) for s in stats.streams]
    if size:
        counts = np.bincount(np.frombuffer(data, dtype=np.uint8), minlength=256)
        printable = int(counts[0x20:0x7F].sum() + counts[0x09] + counts[0x0A] + counts[0x0D])
        ascii_ratio = printable / size
        null_ratio = int(counts[0]) / size
    else:
        ascii_ratio = 0.0
        null_ratio = 0.0
    obfuscated = sum(
        len(_HEX_ESCAPE_RE.findall(m.group(1))) for m in _NAME_TOKEN_RE.finditer(data)
    )

    values = [
        # structure
        float(size),
        float(count_pages(doc)),
        header_version,
        float(doc.eof_marker_count),
        1.0 if doc.xref_ok else 0.0,
        float(doc.trailer_count),
        min(max(obj_gap, 0.0), 1.0),
        float(bad_offsets),
        float(len(doc.trailer) if doc.trailer else 0),
        1.0 if linearized else 0.0,
        1.0 if doc.encrypted else 0.0,
        float(len(doc.parse_warnings)),
        # metadata
        float(len(info)),
        float(_string_length(doc, info.get("Title"))),
        float(_string_length(doc, info.get("Author"))),
        float(_string_length(doc, info.get("Producer"))),
        1.0 if xmp else 0.0,
        1.0 if _date_ok(doc, info.get("CreationDate")) else 0.0,
        # objects
        float(len(doc.objects)),
        float(len(stats.streams)),
        float(len(all_filters)),
        float(max((len(c) for c in chains), default=0)),
        float(flate_n),
        float(hex_n),
        float(a85_n),
        float(len(all_filters) - flate_n - hex_n - a85_n),
        1.0 if js_keys else 0.0,
        float(js_keys),
        1.0 if stats.key_counts.get("OpenAction") else 0.0,
        1.0 if stats.key_counts.get("AA") else 0.0,
        float(_dict_counts(stats, "Launch")),
        float(_dict_counts(stats, "URI")),
        float(_dict_counts(stats, "EmbeddedFiles", type_names=("EmbeddedFile",))),
        1.0 if stats.key_counts.get("AcroForm") else 0.0,
        float(objstm_n),
        float(stats.ref_count),
        # content-stats
        min(max(shannon_entropy(data), 0.0), 8.0),
        min(max(float(np.mean(decoded_entropies)) if decoded_entropies else 0.0, 0.0), 8.0),
        min(max(max(decoded_entropies, default=0.0), 0.0), 8.0),
        float(np.mean(stream_sizes)) if stream_sizes else 0.0,
        float(max(stream_sizes, default=0)),
        min(sum(stream_sizes) / size, 1.0) if size else 0.0,
        min(max(ascii_ratio, 0.0), 1.0),
        min(max(null_ratio, 0.0), 1.0),
        float(obfuscated),
        float(max(stats.string_lengths, default=0)),
        float(len(stats.string_lengths)),
        float(decode_failures),
    ]
    return FeatureVector(np.array(values, dtype=np.float64))
