"""Deterministic synthetic PDF corpora with planted trait distributions.

Benign files are multi-page text documents with well-formed metadata and
moderate-entropy content streams. Malicious files independently sample the
classic abuse traits -- embedded JavaScript, /OpenAction, /Launch, a
high-entropy FlateDecode stream, hex-obfuscated name tokens, and a corrupted
cross-reference table -- each present with probability ``1 - trait_overlap``.
The overlap knob therefore controls how separable the classes are from any
single feature.

Generation is reproducible byte-for-byte: every file derives its own integer
seed from (corpus seed, label, index), so the same spec always produces the
same corpus regardless of generation order.
"""

from __future__ import annotations

import random
import zlib
from dataclasses import dataclass
from pathlib import Path

from .errors import InvalidConfigError
from .ioutil import atomic_write_bytes, atomic_write_text

_WORDS = (
    "annual report revenue quarter growth market product customer service "
    "invoice total payment delivery schedule meeting agenda summary review "
    "project budget forecast analysis client contract terms policy notice "
    "update system network office travel expense approval department staff"
).split()

_TITLES = (
    "Quarterly Report",
    "Invoice",
    "Meeting Notes",
    "Project Plan",
    "Travel Summary",
    "Policy Update",
)

_AUTHORS = ("J. Smith", "A. Jones", "M. Garcia", "L. Chen", "Finance Team")

_PRODUCERS = ("TextOffice 5.2", "DocMaker 11", "PrintServer 3.0", "ReportGen 2.4")


@dataclass
class CorpusSpec:
    n_benign: int
    n_malicious: int
    seed: int = 0
    trait_overlap: float = 0.0

    def validate(self) -> "CorpusSpec":
        if self.n_benign < 1 or self.n_malicious < 1:
            raise InvalidConfigError("corpus needs at least one file per class")
        if not (0.0 <= self.trait_overlap <= 1.0):
            raise InvalidConfigError("trait_overlap must be in [0, 1]")
        return self


def _escape_string(text: str) -> str:
    return text.replace("\\", r"\\").replace("(", r"\(").replace(")", r"\)")


def _sentence(rng: random.Random, n_words: int) -> str:
    return " ".join(rng.choice(_WORDS) for _ in range(n_words))


def _text_stream_body(rng: random.Random, n_lines: int) -> bytes:
    lines = ["BT", "/F1 11 Tf", "72 720 Td", "14 TL"]
    for i in range(n_lines):
        if i:
            lines.append("T*")
        lines.append(f"({_escape_string(_sentence(rng, rng.randint(4, 10)))}) Tj")
    lines.append("ET")
    return "\n".join(lines).encode("latin-1")


def _stream_object(dict_entries: str, body: bytes) -> bytes:
    return (
        f"<< {dict_entries} /Length {len(body)} >>\nstream\n".encode("latin-1")
        + body
        + b"\nendstream"
    )


def _assemble(object_bodies: list[bytes], trailer_extra: str, *, xref_shift: int = 0) -> bytes:
    """Build a classic-xref PDF; ``xref_shift`` corrupts stored offsets."""
    out = bytearray(b"%PDF-1.5\n")
    offsets: list[int] = []
    for number, body in enumerate(object_bodies, start=1):
        offsets.append(len(out))
        out += f"{number} 0 obj\n".encode("latin-1")
        out += body
        out += b"\nendobj\n"
    xref_offset = len(out)
    out += f"xref\n0 {len(object_bodies) + 1}\n".encode("latin-1")
    out += b"0000000000 65535 f \n"
    for i, offset in enumerate(offsets):
        stored = offset + (xref_shift if i % 2 == 1 else 0)
        out += f"{stored:010d} 00000 n \n".encode("latin-1")
    out += f"trailer\n<< /Size {len(object_bodies) + 1} {trailer_extra} >>\n".encode("latin-1")
    out += f"startxref\n{xref_offset}\n".encode("latin-1")
    out += b"%%EOF\n"
    return bytes(out)


def _pdf_date(rng: random.Random) -> str:
    year = rng.randint(2012, 2018)
    month = rng.randint(1, 12)
    day = rng.randint(1, 28)
    hour = rng.randint(0, 23)
    minute = rng.randint(0, 59)
    second = rng.randint(0, 59)
    return f"D:{year:04d}{month:02d}{day:02d}{hour:02d}{minute:02d}{second:02d}Z"


def build_benign_pdf(seed: int) -> bytes:
    rng = random.Random(seed)
    n_pages = rng.randint(1, 6)
    bodies: list[bytes] = []

    use_xmp = rng.random() < 0.3
    catalog = "/Type /Catalog /Pages 2 0 R"
    # Object layout: 1 catalog, 2 pages, 3 font, then page/content pairs.
    first_page = 4
    kids = " ".join(f"{first_page + 2 * i} 0 R" for i in range(n_pages))
    info_number = first_page + 2 * n_pages
    xmp_number = info_number + 1
    if use_xmp:
        catalog += f" /Metadata {xmp_number} 0 R"
    bodies.append(f"<< {catalog} >>".encode("latin-1"))
    bodies.append(f"<< /Type /Pages /Kids [{kids}] /Count {n_pages} >>".encode("latin-1"))
    bodies.append(b"<< /Type /Font /Subtype /Type1 /BaseFont /Helvetica >>")

    for i in range(n_pages):
        content_number = first_page + 2 * i + 1
        bodies.append(
            (
                f"<< /Type /Page /Parent 2 0 R /MediaBox [0 0 612 792] "
                f"/Resources << /Font << /F1 3 0 R >> >> /Contents {content_number} 0 R >>"
            ).encode("latin-1")
        )
        text = _text_stream_body(rng, rng.randint(8, 40))
        if rng.random() < 0.5:
            bodies.append(_stream_object("/Filter /FlateDecode", zlib.compress(text)))
        else:
            bodies.append(_stream_object("", text))

    title = rng.choice(_TITLES)
    author = rng.choice(_AUTHORS)
    producer = rng.choice(_PRODUCERS)
    bodies.append(
        (
            f"<< /Title ({_escape_string(title)}) /Author ({_escape_string(author)}) "
            f"/Producer ({_escape_string(producer)}) /CreationDate ({_pdf_date(rng)}) >>"
        ).encode("latin-1")
    )
    if use_xmp:
        xml = (
            "<?xpacket begin='' id='W5M0MpCehiHzreSzNTczkc9d'?>"
            f"<x:xmpmeta xmlns:x='adobe:ns:meta/'><rdf:RDF>{title}</rdf:RDF></x:xmpmeta>"
            "<?xpacket end='w'?>"
        ).encode("latin-1")
        bodies.append(_stream_object("/Type /Metadata /Subtype /XML", xml))

    trailer = f"/Root 1 0 R /Info {info_number} 0 R"
    return _assemble(bodies, trailer)


def _js_payload(rng: random.Random) -> str:
    groups = "".join(f"%u{rng.randrange(16**4):04x}" for _ in range(rng.randint(24, 96)))
    return f"var p = unescape('{groups}'); app.alert.call(this, p.length);"


def build_malicious_pdf(seed: int, trait_overlap: float) -> bytes:
    rng = random.Random(seed)
    present = {
        trait: rng.random() >= trait_overlap
        for trait in ("javascript", "openaction", "launch", "highentropy", "obfuscation", "brokenxref")
    }

    bodies: list[bytes] = []
    catalog = "/Type /Catalog /Pages 2 0 R"
    next_number = 5  # after catalog, pages, page, contents
    js_number = launch_number = None
    if present["javascript"]:
        js_number = next_number
        next_number += 1
    if present["launch"]:
        launch_number = next_number
        next_number += 1
    if present["openaction"]:
        if js_number is not None:
            catalog += f" /OpenAction {js_number} 0 R"
        else:
            catalog += " /OpenAction [3 0 R /Fit]"

    bodies.append(f"<< {catalog} >>".encode("latin-1"))
    bodies.append(b"<< /Type /Pages /Kids [3 0 R] /Count 1 >>")
    bodies.append(
        b"<< /Type /Page /Parent 2 0 R /MediaBox [0 0 612 792] /Contents 4 0 R >>"
    )
    bodies.append(_stream_object("", _text_stream_body(rng, rng.randint(1, 4))))

    if present["javascript"]:
        bodies.append(
            f"<< /Type /Action /S /JavaScript /JS ({_js_payload(rng)}) >>".encode("latin-1")
        )
    if present["launch"]:
        target = rng.choice(("cmd.exe", "start.bat", "update.scr"))
        bodies.append(f"<< /Type /Action /S /Launch /F ({target}) >>".encode("latin-1"))
    if present["highentropy"]:
        noise = rng.randbytes(rng.randint(2048, 8192))
        bodies.append(_stream_object("/Filter /FlateDecode", zlib.compress(noise)))
    if present["obfuscation"]:
        fields = rng.randint(2, 6)
        keys = ("/Ty#70e /XObject", "/Subty#70e /Form", "/Na#6de /Fm1", "/Fil#74er#73 /None",
                "/Gro#75p /G1", "/Inter#70olate true")
        bodies.append(("<< " + " ".join(keys[:fields]) + " >>").encode("latin-1"))

    return _assemble(bodies, "/Root 1 0 R", xref_shift=9 if present["brokenxref"] else 0)


def _file_seed(spec: CorpusSpec, label: int, index: int) -> int:
    return spec.seed * 1_000_003 + index * 2 + label


def generate_corpus(spec: CorpusSpec, directory) -> list[tuple[str, int]]:
    """Write the corpus plus ``manifest.csv``; returns (filename, label) rows."""
    spec.validate()
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest: list[tuple[str, int]] = []
    for index in range(spec.n_benign):
        name = f"benign_{index:05d}.pdf"
        atomic_write_bytes(directory / name, build_benign_pdf(_file_seed(spec, 0, index)))
        manifest.append((name, 0))
    for index in range(spec.n_malicious):
        name = f"malicious_{index:05d}.pdf"
        data = build_malicious_pdf(_file_seed(spec, 1, index), spec.trait_overlap)
        atomic_write_bytes(directory / name, data)
        manifest.append((name, 1))
    text = "path,label\n" + "".join(f"{name},{label}\n" for name, label in manifest)
    atomic_write_text(directory / "manifest.csv", text)
    return manifest
