"""Synthetic payment-card corpus, image I/O, and dataset splitting.

Real samples are procedural grayscale "payment cards": a dark frame
around a guilloche of concentric rings whose center varies per sample,
full strength over the portrait disc and fading to a floor that carries
the pattern across the whole interior, plus a strip of crisp digit
glyphs spelling out a checksum of the ring center. Fakes start from a
freshly rendered template and receive one localized manipulation. Every
region of a real card is exactly consistent with every other, which is
what makes local edits detectable and the corpus a usable benchmark.

Everything here is pure Python over byte buffers, so corpora are
bit-identical regardless of which kernel backend is active.
"""

import json
import math
import os
from dataclasses import dataclass, fields

from .errors import DataError, DomainError, ParseError
from .rng import Rng, derive_seed
from .tensor import Tensor

MANIPULATIONS = ("patch_swap", "portrait_blur", "glyph_noise")
FAKE_KINDS = MANIPULATIONS + ("generated",)
SPLITS = ("train", "val", "test")

# 3x5 digit bitmaps, one string row per pixel row
_DIGITS = (
    ("111", "101", "101", "101", "111"),
    ("010", "110", "010", "010", "111"),
    ("111", "001", "111", "100", "111"),
    ("111", "001", "111", "001", "111"),
    ("101", "101", "111", "001", "001"),
    ("111", "100", "111", "001", "111"),
    ("111", "100", "111", "101", "111"),
    ("111", "101", "010", "010", "010"),
    ("111", "101", "111", "101", "111"),
    ("111", "101", "111", "001", "111"),
)

_FRAME_TONE = 34
_GLYPH_TONE = 24
_BACKDROP_TONE = 160
_RING_AMP = 68.0
_RING_PERIOD = 3.4
_BLUR_SIGMA_MAX = 1.8
_NOISE_AMP_MAX = 240.0

# every glyph cell (digit + separator ticks) carries this many dark
# pixels, so real strips share an exact per-cell mass
_GLYPH_MASS = 13
_TICK_ROWS = (0, 2, 4, 1, 3)


@dataclass(frozen=True)
class CorpusSpec:
    """Parameters of one synthetic corpus."""

    n_real: int = 2000
    n_fake: int = 2000
    height: int = 32
    width: int = 32
    seed: int = 7
    manipulation_strength: float = 0.6

    def __post_init__(self):
        if self.n_real < 0 or self.n_fake < 0:
            raise DomainError(
                f"n_real and n_fake must be >= 0, got n_real={self.n_real}, "
                f"n_fake={self.n_fake}")
        if self.height < 8 or self.width < 8:
            raise DomainError(
                f"images must be at least 8x8, got {self.height}x{self.width}")
        if not 0.0 < self.manipulation_strength <= 1.0:
            raise DomainError(
                f"manipulation_strength must lie in (0, 1], got "
                f"{self.manipulation_strength}")
        if self.seed < 0:
            raise DomainError(f"seed must be >= 0, got {self.seed}")

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, raw: dict) -> "CorpusSpec":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise DataError(f"unknown CorpusSpec keys: {', '.join(unknown)}")
        return cls(**raw)


class Dataset:
    """Labeled image corpus: real=1, fake=0, one split tag per sample."""

    __slots__ = ("images", "labels", "fake_kind", "split")

    def __init__(self, images: Tensor, labels, fake_kind, split):
        if images.rank != 3:
            raise DomainError(f"images must be [n x h x w], got {images.shape}")
        n = images.shape[0]
        labels = tuple(labels)
        fake_kind = tuple(fake_kind)
        split = tuple(split)
        if len(labels) != n or len(fake_kind) != n or len(split) != n:
            raise DomainError(
                f"{n} images vs {len(labels)} labels, {len(fake_kind)} "
                f"fake kinds, {len(split)} split tags")
        for i, label in enumerate(labels):
            if label not in (0, 1):
                raise DomainError(f"label at index {i} must be 0 or 1, got {label}")
            if label == 1 and fake_kind[i] != "n/a":
                raise DomainError(
                    f"real sample {i} carries fake_kind {fake_kind[i]!r}")
            if label == 0 and fake_kind[i] not in FAKE_KINDS:
                raise DomainError(
                    f"fake sample {i} needs a kind from {FAKE_KINDS}, "
                    f"got {fake_kind[i]!r}")
        for v in images.data:
            if not -1.0 <= v <= 1.0:
                raise DomainError(f"pixel value {v!r} outside [-1, 1]")
        self.images = images
        self.labels = labels
        self.fake_kind = fake_kind
        self.split = split

    @property
    def n(self):
        return self.images.shape[0]

    @property
    def height(self):
        return self.images.shape[1]

    @property
    def width(self):
        return self.images.shape[2]

    def indices(self, split=None, label=None):
        """Sample indices filtered by split tag and/or label."""
        return [i for i in range(self.n)
                if (split is None or self.split[i] == split)
                and (label is None or self.labels[i] == label)]

    def flat(self, rows) -> Tensor:
        """Selected images flattened to [len(rows) x height*width]."""
        return self.images.take(rows).reshape(
            (len(rows), self.height * self.width))

    def with_split_tags(self, tags) -> "Dataset":
        return Dataset(self.images, self.labels, self.fake_kind, tags)


def portrait_box(height, width):
    """(r0, r1, c0, c1) of the portrait region, half-open rows/cols."""
    r0, r1 = round(0.20 * height), round(0.70 * height)
    c0, c1 = round(0.10 * width), round(0.55 * width)
    return r0, max(r0 + 1, r1), c0, max(c0 + 1, c1)


def glyph_strip(height, width):
    """(r0, r1, c0, c1) of the digit strip, half-open rows/cols."""
    border = 2 if min(height, width) >= 24 else 1
    r1 = height - border - 1
    r0 = min(round(0.74 * height), r1 - 1)
    c0, c1 = round(0.10 * width), round(0.88 * width)
    return r0, r1, c0, max(c0 + 1, c1)


def _signature_digits(u, v):
    """Six digits encoding the portrait center at two-decimal precision."""
    a = min(99, int(u * 100.0))
    b = min(99, int(v * 100.0))
    d = [a // 10, a % 10, b // 10, b % 10]
    d.append(sum(d) % 10)
    d.append((a + b) % 10)
    return d


def render_template(height, width, rng: Rng) -> bytearray:
    """One real payment-card image as height*width raw bytes.

    The only per-sample freedom is the portrait center; the digit strip
    spells a checksum of that center, so every region of a real card is
    exactly consistent with every other.
    """
    if height < 8 or width < 8:
        raise DomainError(
            f"images must be at least 8x8, got {height}x{width}")
    border = 2 if min(height, width) >= 24 else 1
    img = bytearray([_FRAME_TONE]) * (height * width)

    pr0, pr1, pc0, pc1 = portrait_box(height, width)
    u, v = rng.uniform(), rng.uniform()
    cy = (pr0 + pr1 - 1) / 2 + (u - 0.5) * 0.36 * (pr1 - pr0)
    cx = (pc0 + pc1 - 1) / 2 + (v - 0.5) * 0.36 * (pc1 - pc0)
    period = _RING_PERIOD
    phase = 0.0
    amp = _RING_AMP
    radius = 0.95 * min(pr1 - pr0, pc1 - pc0) / 2
    for r in range(border, height - border):
        for c in range(border, width - border):
            d = math.sqrt((r - cy) ** 2 + (c - cx) ** 2)
            envelope = max(min(1.0, (radius - d) / 1.5), 0.45)
            tone = _BACKDROP_TONE + envelope * amp * math.cos(
                2.0 * math.pi * d / period + phase)
            img[r * width + c] = min(255, max(0, round(tone)))

    gr0, gr1, gc0, gc1 = glyph_strip(height, width)
    if gr1 - gr0 >= 5 and gc1 - gc0 >= 4:
        digits = _signature_digits(u, v)
        top = gr0 + (gr1 - gr0 - 5) // 2
        n_digits = (gc1 - gc0) // 4
        for k in range(n_digits):
            glyph = _DIGITS[digits[k % 6]]
            left = gc0 + 4 * k
            lit = 0
            for dr in range(5):
                for dc in range(3):
                    if glyph[dr][dc] == "1":
                        img[(top + dr) * width + left + dc] = _GLYPH_TONE
                        lit += 1
            for dr in _TICK_ROWS[:_GLYPH_MASS - lit]:
                img[(top + dr) * width + left + 3] = _GLYPH_TONE
    return img


def _patch_swap(img, donor, height, width, rng, strength):
    pr0, pr1, pc0, pc1 = portrait_box(height, width)
    ph = max(2, min(pr1 - pr0, round(0.75 * strength * (pr1 - pr0))))
    pw = max(2, min(pc1 - pc0, round(0.75 * strength * (pc1 - pc0))))
    # donor content comes from a corner of its portrait, far from its
    # ring center, and lands over the host's bullseye
    src_r = pr0 if rng.randint(2) == 0 else pr1 - ph
    src_c = pc0 if rng.randint(2) == 0 else pc1 - pw
    dst_r = pr0 + (pr1 - pr0 - ph) // 2 + rng.randint(3) - 1
    dst_c = pc0 + (pc1 - pc0 - pw) // 2 + rng.randint(3) - 1
    dst_r = min(max(dst_r, pr0), pr1 - ph)
    dst_c = min(max(dst_c, pc0), pc1 - pw)
    for dr in range(ph):
        for dc in range(pw):
            img[(dst_r + dr) * width + dst_c + dc] = \
                donor[(src_r + dr) * width + src_c + dc]
    return dst_r, dst_r + ph, dst_c, dst_c + pw


def _portrait_blur(img, height, width, rng, strength):
    r0, r1, c0, c1 = portrait_box(height, width)
    sigma = _BLUR_SIGMA_MAX * strength
    radius = max(1, math.ceil(2.0 * sigma))
    weights = [math.exp(-0.5 * (k / sigma) ** 2)
               for k in range(-radius, radius + 1)]
    # separable pass, clamped to the box so nothing outside is read
    rows = r1 - r0
    cols = c1 - c0
    horiz = [0.0] * (rows * cols)
    for r in range(rows):
        for c in range(cols):
            total = wsum = 0.0
            for k in range(-radius, radius + 1):
                cc = c + k
                if 0 <= cc < cols:
                    w = weights[k + radius]
                    total += w * img[(r0 + r) * width + c0 + cc]
                    wsum += w
            horiz[r * cols + c] = total / wsum
    for r in range(rows):
        for c in range(cols):
            total = wsum = 0.0
            for k in range(-radius, radius + 1):
                rr = r + k
                if 0 <= rr < rows:
                    w = weights[k + radius]
                    total += w * horiz[rr * cols + c]
                    wsum += w
            img[(r0 + r) * width + c0 + c] = min(255, max(0, round(total / wsum)))
    return r0, r1, c0, c1


def _glyph_noise(img, height, width, rng, strength):
    r0, r1, c0, c1 = glyph_strip(height, width)
    burst_w = max(3, round(0.6 * (c1 - c0)))
    burst_w = min(burst_w, c1 - c0)
    start = c0 + rng.randint(c1 - c0 - burst_w + 1)
    noise = rng.normals((r1 - r0) * burst_w)
    amp = _NOISE_AMP_MAX * strength
    i = 0
    for r in range(r0, r1):
        for c in range(start, start + burst_w):
            tone = img[r * width + c] + amp * noise[i]
            img[r * width + c] = min(255, max(0, round(tone)))
            i += 1
    return r0, r1, start, start + burst_w


def make_fake(base, donor, height, width, rng: Rng, strength: float):
    """Apply one seeded manipulation to a copy of base.

    Returns (image bytes, manipulation name, touched region); pixels
    outside the region are bit-identical to base. donor supplies the
    foreign portrait content for the patch swap.
    """
    if not 0.0 < strength <= 1.0:
        raise DomainError(f"strength must lie in (0, 1], got {strength}")
    img = bytearray(base)
    kind = MANIPULATIONS[rng.randint(len(MANIPULATIONS))]
    if kind == "patch_swap":
        region = _patch_swap(img, donor, height, width, rng, strength)
    elif kind == "portrait_blur":
        region = _portrait_blur(img, height, width, rng, strength)
    else:
        region = _glyph_noise(img, height, width, rng, strength)
    return img, kind, region


def normalize(raw, height, width) -> Tensor:
    """Byte image -> [height x width] tensor; 0 maps to -1, 255 to +1."""
    if len(raw) != height * width:
        raise DomainError(
            f"{len(raw)} bytes do not fill {height}x{width}")
    for b in raw:
        if not 0 <= b <= 255:
            raise DomainError(f"pixel value {b} outside 0..255")
    return Tensor((height, width), [b / 127.5 - 1.0 for b in raw])


def denormalize(image: Tensor) -> bytearray:
    """[-1, 1] tensor back to rounded bytes; inverse of normalize."""
    return bytearray(min(255, max(0, round((v + 1.0) * 127.5)))
                     for v in image.data)


def generate_corpus(spec: CorpusSpec) -> Dataset:
    """Balanced labeled corpus, deterministic per (seed, sample index).

    Fresh corpora are tagged entirely as train; run split() to assign
    validation and test portions.
    """
    h, w = spec.height, spec.width
    flat = []
    labels = []
    kinds = []
    for i in range(spec.n_real):
        img = render_template(h, w, Rng(derive_seed(spec.seed, "real", i)))
        flat.extend(b / 127.5 - 1.0 for b in img)
        labels.append(1)
        kinds.append("n/a")
    for j in range(spec.n_fake):
        base = render_template(h, w, Rng(derive_seed(spec.seed, "fake", j, "base")))
        donor = render_template(h, w, Rng(derive_seed(spec.seed, "fake", j, "donor")))
        img, kind, _ = make_fake(base, donor, h, w,
                                 Rng(derive_seed(spec.seed, "fake", j, "edit")),
                                 spec.manipulation_strength)
        flat.extend(b / 127.5 - 1.0 for b in img)
        labels.append(0)
        kinds.append(kind)
    n = spec.n_real + spec.n_fake
    images = Tensor((n, h, w), flat)
    return Dataset(images, labels, kinds, ["train"] * n)


def save_pgm(raw, height, width, path):
    """Write one byte image as a binary (P5) PGM with maxval 255."""
    if height < 1 or width < 1:
        raise DomainError(f"PGM dimensions must be >= 1, got {height}x{width}")
    if len(raw) != height * width:
        raise DomainError(f"{len(raw)} bytes do not fill {height}x{width}")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        fh.write(bytes(raw))


def _pgm_token(blob, pos):
    while pos < len(blob) and blob[pos] in b" \t\r\n":
        pos += 1
    start = pos
    while pos < len(blob) and blob[pos] not in b" \t\r\n":
        pos += 1
    if start == pos:
        raise ParseError(f"unexpected end of PGM header at byte offset {start}")
    return blob[start:pos], start, pos


def _pgm_int(blob, pos, what):
    tok, start, pos = _pgm_token(blob, pos)
    if not tok.isdigit():
        raise ParseError(
            f"invalid {what} {tok!r} at byte offset {start}")
    return int(tok), pos


def load_pgm(path):
    """Read a binary PGM; returns (bytes, height, width)."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as err:
        raise DataError(f"cannot read PGM {path}: {err}") from err
    if blob[:2] != b"P5":
        raise ParseError(
            f"{path}: not a binary PGM (magic 'P5' missing) at byte offset 0")
    width, pos = _pgm_int(blob, 2, "width")
    height, pos = _pgm_int(blob, pos, "height")
    maxval, pos = _pgm_int(blob, pos, "maxval")
    if width < 1 or height < 1:
        raise ParseError(
            f"{path}: dimensions must be positive, got {width}x{height}")
    if maxval != 255:
        raise ParseError(
            f"{path}: unsupported maxval {maxval} at byte offset "
            f"{pos - len(str(maxval))}; only 255 is accepted")
    if pos >= len(blob) or blob[pos] not in b" \t\r\n":
        raise ParseError(
            f"{path}: missing whitespace after maxval at byte offset {pos}")
    pos += 1
    need = height * width
    have = len(blob) - pos
    if have < need:
        raise ParseError(
            f"{path}: expected {need} pixel bytes at byte offset {pos}, "
            f"found {have}")
    if have > need:
        raise ParseError(
            f"{path}: {have - need} trailing bytes after pixel data at "
            f"byte offset {pos + need}")
    return bytearray(blob[pos:pos + need]), height, width


def split(dataset: Dataset, fractions, seed: int) -> Dataset:
    """Stratified train/val/test assignment; returns a re-tagged Dataset.

    Per-class counts follow the largest-remainder rule so every split is
    within one sample of its exact share, and the per-class shuffle is
    deterministic in seed.
    """
    if len(fractions) != len(SPLITS):
        raise DomainError(
            f"need {len(SPLITS)} fractions (train, val, test), got "
            f"{len(fractions)}")
    if any(f < 0 for f in fractions):
        raise DomainError(f"fractions must be >= 0, got {fractions}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise DomainError(f"fractions must sum to 1, got {sum(fractions)}")
    active = sum(1 for f in fractions if f > 0)
    tags = [None] * dataset.n
    for label in sorted(set(dataset.labels)):
        rows = [i for i in range(dataset.n) if dataset.labels[i] == label]
        if len(rows) < active:
            raise DataError(
                f"class {label} has {len(rows)} samples but {active} "
                f"splits are requested")
        counts = [math.floor(f * len(rows)) for f in fractions]
        leftover = len(rows) - sum(counts)
        remainders = sorted(
            range(len(SPLITS)),
            key=lambda k: (-(fractions[k] * len(rows) - counts[k]), k))
        for k in remainders[:leftover]:
            counts[k] += 1
        Rng(derive_seed(seed, "split", label)).shuffle(rows)
        at = 0
        for name, count in zip(SPLITS, counts):
            for i in rows[at:at + count]:
                tags[i] = name
            at += count
    return dataset.with_split_tags(tags)


def write_corpus(dataset: Dataset, out_dir, spec: CorpusSpec = None):
    """Write one PGM per sample plus a JSON manifest; returns manifest path.

    Files land at <split>/<real|fake>_<index>.pgm under out_dir.
    """
    os.makedirs(out_dir, exist_ok=True)
    samples = []
    for i in range(dataset.n):
        name = "real" if dataset.labels[i] == 1 else "fake"
        rel = os.path.join(dataset.split[i], f"{name}_{i:05d}.pgm")
        os.makedirs(os.path.join(out_dir, dataset.split[i]), exist_ok=True)
        raw = denormalize(dataset.images.take([i]))
        save_pgm(raw, dataset.height, dataset.width,
                 os.path.join(out_dir, rel))
        samples.append({"file": rel, "label": dataset.labels[i],
                        "fake_kind": dataset.fake_kind[i],
                        "split": dataset.split[i]})
    manifest = {"format": "payguard-corpus-v1", "samples": samples}
    if spec is not None:
        manifest["spec"] = spec.to_dict()
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w", encoding="ascii") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def load_corpus(corpus_dir):
    """Read a write_corpus() directory; returns (Dataset, CorpusSpec or None)."""
    path = os.path.join(corpus_dir, "manifest.json")
    try:
        with open(path, "r", encoding="ascii") as fh:
            manifest = json.load(fh)
    except OSError as err:
        raise DataError(f"cannot read corpus manifest {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise ParseError(f"malformed corpus manifest {path}: {err}") from err
    if manifest.get("format") != "payguard-corpus-v1":
        raise DataError(
            f"{path}: unknown corpus format {manifest.get('format')!r}")
    if "samples" not in manifest:
        raise DataError(f"{path}: manifest lists no samples")
    flat = []
    labels, kinds, tags = [], [], []
    height = width = None
    for pos, entry in enumerate(manifest["samples"]):
        missing = [key for key in ("file", "label", "fake_kind", "split")
                   if key not in entry]
        if missing:
            raise DataError(
                f"{path}: sample {pos} is missing {', '.join(missing)}")
        raw, h, w = load_pgm(os.path.join(corpus_dir, entry["file"]))
        if height is None:
            height, width = h, w
        elif (h, w) != (height, width):
            raise DataError(
                f"{entry['file']}: image is {h}x{w} but the corpus is "
                f"{height}x{width}")
        flat.extend(b / 127.5 - 1.0 for b in raw)
        labels.append(entry["label"])
        kinds.append(entry["fake_kind"])
        tags.append(entry["split"])
    if height is None:
        raise DataError(f"{path}: corpus is empty")
    images = Tensor((len(labels), height, width), flat)
    spec = None
    if "spec" in manifest:
        spec = CorpusSpec.from_dict(manifest["spec"])
    return Dataset(images, labels, kinds, tags), spec
