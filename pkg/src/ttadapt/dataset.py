"""Synthetic continual-domain datasets: drifting colored shapes over texture.

A dataset is a schedule of segments, each a short video of one domain
condition (clean, fog at a level, or low light at an exponent). Every segment
draws a fresh scene: a smooth textured background and 1-5 non-overlapping
shapes whose class is carried by their color (class 0 red rectangles, class 1
green disks, class 2 blue triangles; further classes cycle hues). Objects
drift with constant velocity and bounce off the borders. Ground truth is the
tight bounding box of each shape's rendered pixels, recorded before the
segment's corruption is applied.

Everything is reproducible: one seeded generator drives the scene draws, and
the manifest stores enough to rebuild or verify the tree.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .boxes import BBox
from .corruption import FogParams, LowLightParams, synthesize_fog, synthesize_low_light
from .errors import ParameterError
from .io import read_image, write_image, write_text_atomic

MANIFEST_MAGIC = "ttadapt-manifest v1"

CLASS_COLORS = [
    np.array([0.85, 0.15, 0.12]),
    np.array([0.15, 0.80, 0.20]),
    np.array([0.18, 0.25, 0.85]),
    np.array([0.85, 0.75, 0.15]),
    np.array([0.75, 0.20, 0.80]),
]

SHAPE_KINDS = ("rectangle", "disk", "triangle")


def parse_domain(tag: str):
    """Parse a domain tag: "clean", "fog:<level>", or "lowlight:<exponent>"."""
    if tag == "clean":
        return ("clean", None)
    kind, _, value = tag.partition(":")
    if kind == "fog" and value:
        return ("fog", FogParams(level=int(value)))
    if kind == "lowlight" and value:
        return ("lowlight", LowLightParams(exponent=float(value)))
    raise ParameterError(f"unknown domain tag {tag!r}")


def format_domain(tag: str) -> str:
    parse_domain(tag)  # validate
    return tag


@dataclass(frozen=True)
class SegmentInfo:
    domain: str
    frame_ids: tuple

    @property
    def is_clean(self) -> bool:
        return self.domain == "clean"


@dataclass
class DatasetManifest:
    root: Path
    seed: int
    width: int
    height: int
    num_classes: int
    segments: list
    frame_paths: dict
    ground_truth: dict

    @property
    def frame_ids(self):
        return [fid for seg in self.segments for fid in seg.frame_ids]

    def load_frame(self, frame_id: int) -> np.ndarray:
        return read_image(self.root / self.frame_paths[frame_id])


@dataclass
class _SceneObject:
    class_id: int
    kind: str
    color: np.ndarray
    half_w: float
    half_h: float
    x: float
    y: float
    vx: float
    vy: float


def _smooth_background(rng: np.random.Generator, width: int, height: int) -> np.ndarray:
    """Bilinearly upsampled coarse noise: smooth, mid-dark, slightly tinted."""
    coarse_h = max(2, height // 8 + 1)
    coarse_w = max(2, width // 8 + 1)
    coarse = rng.uniform(0.08, 0.45, size=(coarse_h, coarse_w, 3))
    ys = np.linspace(0, coarse_h - 1, height)
    xs = np.linspace(0, coarse_w - 1, width)
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    y1 = np.minimum(y0 + 1, coarse_h - 1)
    x1 = np.minimum(x0 + 1, coarse_w - 1)
    wy = (ys - y0)[:, None, None]
    wx = (xs - x0)[None, :, None]
    top = coarse[y0][:, x0] * (1 - wx) + coarse[y0][:, x1] * wx
    bottom = coarse[y1][:, x0] * (1 - wx) + coarse[y1][:, x1] * wx
    return top * (1 - wy) + bottom * wy


def _object_mask(obj: _SceneObject, width: int, height: int) -> np.ndarray:
    xs = np.arange(width, dtype=np.float64)[None, :] - obj.x
    ys = np.arange(height, dtype=np.float64)[:, None] - obj.y
    if obj.kind == "rectangle":
        return (np.abs(xs) <= obj.half_w) & (np.abs(ys) <= obj.half_h)
    if obj.kind == "disk":
        return (xs / obj.half_w) ** 2 + (ys / obj.half_h) ** 2 <= 1.0
    if obj.kind == "triangle":
        # upward triangle: apex at the top, base at the bottom
        inside_y = np.abs(ys) <= obj.half_h
        frac = (ys + obj.half_h) / (2.0 * obj.half_h)  # 0 at apex row
        return inside_y & (np.abs(xs) <= obj.half_w * np.clip(frac, 0.0, 1.0))
    raise ParameterError(f"unknown shape kind {obj.kind!r}")


def _spawn_objects(rng: np.random.Generator, width: int, height: int,
                   num_classes: int) -> list:
    count = int(rng.integers(1, 6))
    objects: list[_SceneObject] = []
    attempts = 0
    while len(objects) < count and attempts < 200:
        attempts += 1
        class_id = int(rng.integers(0, num_classes))
        kind = SHAPE_KINDS[class_id % len(SHAPE_KINDS)]
        half_w = float(rng.uniform(6.0, 8.0))
        half_h = float(rng.uniform(6.0, 8.0))
        x = float(rng.uniform(half_w + 1, width - half_w - 2))
        y = float(rng.uniform(half_h + 1, height - half_h - 2))
        color = CLASS_COLORS[class_id % len(CLASS_COLORS)] + rng.uniform(-0.05, 0.05, 3)
        candidate = _SceneObject(
            class_id=class_id, kind=kind, color=np.clip(color, 0.0, 1.0),
            half_w=half_w, half_h=half_h, x=x, y=y,
            vx=float(rng.uniform(-1.5, 1.5)), vy=float(rng.uniform(-1.5, 1.5)))
        # keep shapes separated so boxes never overlap and occlusion cannot
        # shift the recorded ground truth
        if all(abs(candidate.x - o.x) > candidate.half_w + o.half_w + 2
               or abs(candidate.y - o.y) > candidate.half_h + o.half_h + 2
               for o in objects):
            objects.append(candidate)
    return objects


def _advance(obj: _SceneObject, width: int, height: int) -> None:
    obj.x += obj.vx
    obj.y += obj.vy
    if obj.x < obj.half_w + 1 or obj.x > width - obj.half_w - 2:
        obj.vx = -obj.vx
        obj.x = float(np.clip(obj.x, obj.half_w + 1, width - obj.half_w - 2))
    if obj.y < obj.half_h + 1 or obj.y > height - obj.half_h - 2:
        obj.vy = -obj.vy
        obj.y = float(np.clip(obj.y, obj.half_h + 1, height - obj.half_h - 2))


def render_frame(background: np.ndarray, objects) -> tuple:
    """Draw the objects over the background; returns (image, ground truth).

    Objects later in the list are drawn on top. Ground truth boxes are the
    exact bounds of each object's VISIBLE pixels (half-open pixel
    coordinates); fully occluded objects produce no ground truth.
    """
    img = background.copy()
    height, width = img.shape[:2]
    masks = [_object_mask(obj, width, height) for obj in objects]
    gts = []
    covered = np.zeros((height, width), dtype=bool)
    for obj, mask in zip(reversed(objects), reversed(masks)):
        visible = mask & ~covered
        covered |= mask
        if not visible.any():
            continue
        img[visible] = obj.color
        rows = np.flatnonzero(visible.any(axis=1))
        cols = np.flatnonzero(visible.any(axis=0))
        box = BBox(float(cols[0]), float(rows[0]),
                   float(cols[-1] + 1), float(rows[-1] + 1))
        gts.append((box, obj.class_id))
    gts.reverse()
    return img, gts


def synth_dataset(out_dir: str | Path, seed: int, width: int = 64, height: int = 64,
                  frames_per_segment: int = 40, schedule=("clean",),
                  num_classes: int = 3) -> DatasetManifest:
    """Render a dataset tree (frames/ + manifest.txt) and return its manifest."""
    # shapes have half extents up to 8 px and need room to drift
    if width < 24 or height < 24:
        raise ParameterError(f"dimensions must be >= 24, got {width}x{height}")
    if frames_per_segment < 1:
        raise ParameterError(
            f"frames_per_segment must be >= 1, got {frames_per_segment}")
    if not 1 <= num_classes <= len(CLASS_COLORS):
        raise ParameterError(
            f"num_classes must be in 1..{len(CLASS_COLORS)}, got {num_classes}")
    domains = [format_domain(tag) for tag in schedule]
    if not domains:
        raise ParameterError("schedule must contain at least one segment")

    out_dir = Path(out_dir)
    frames_dir = out_dir / "frames"
    frames_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    segments = []
    frame_paths: dict[int, str] = {}
    ground_truth: dict[int, list] = {}
    frame_id = 0
    for domain in domains:
        kind, params = parse_domain(domain)
        background = _smooth_background(rng, width, height)
        objects = _spawn_objects(rng, width, height, num_classes)
        ids = []
        for _ in range(frames_per_segment):
            img, gts = render_frame(background, objects)
            if kind == "fog":
                img = synthesize_fog(img, params)
            elif kind == "lowlight":
                img = synthesize_low_light(img, params)
            rel = f"frames/frame_{frame_id:05d}.png"
            write_image(out_dir / rel, img)
            frame_paths[frame_id] = rel
            ground_truth[frame_id] = gts
            ids.append(frame_id)
            frame_id += 1
            for obj in objects:
                _advance(obj, width, height)
        segments.append(SegmentInfo(domain=domain, frame_ids=tuple(ids)))

    manifest = DatasetManifest(root=out_dir, seed=seed, width=width, height=height,
                               num_classes=num_classes, segments=segments,
                               frame_paths=frame_paths, ground_truth=ground_truth)
    save_manifest(out_dir / "manifest.txt", manifest)
    return manifest


def save_manifest(path: str | Path, manifest: DatasetManifest) -> None:
    lines = [
        MANIFEST_MAGIC,
        f"seed = {manifest.seed}",
        f"width = {manifest.width}",
        f"height = {manifest.height}",
        f"num_classes = {manifest.num_classes}",
        f"schedule = {' '.join(seg.domain for seg in manifest.segments)}",
    ]
    for seg_idx, seg in enumerate(manifest.segments):
        for fid in seg.frame_ids:
            lines.append(f"frame {fid} {seg_idx} {manifest.frame_paths[fid]}")
    for fid in sorted(manifest.ground_truth):
        for box, class_id in manifest.ground_truth[fid]:
            lines.append(f"gt {fid} {class_id} "
                         f"{box.x1!r} {box.y1!r} {box.x2!r} {box.y2!r}")
    write_text_atomic(path, "\n".join(lines) + "\n")


def load_manifest(path: str | Path) -> DatasetManifest:
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or lines[0] != MANIFEST_MAGIC:
        raise ValueError(f"{path}: not a dataset manifest")
    header: dict[str, str] = {}
    frame_rows = []
    gt_rows = []
    for line in lines[1:]:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("frame "):
            _, fid, seg_idx, rel = line.split()
            frame_rows.append((int(fid), int(seg_idx), rel))
        elif line.startswith("gt "):
            fields = line.split()
            gt_rows.append((int(fields[1]), int(fields[2]),
                            [float(v) for v in fields[3:7]]))
        else:
            key, _, value = line.partition("=")
            header[key.strip()] = value.strip()
    schedule = header["schedule"].split()
    seg_frames: dict[int, list] = {i: [] for i in range(len(schedule))}
    frame_paths: dict[int, str] = {}
    for fid, seg_idx, rel in frame_rows:
        if seg_idx not in seg_frames:
            raise ValueError(f"{path}: frame {fid} references unknown segment {seg_idx}")
        seg_frames[seg_idx].append(fid)
        frame_paths[fid] = rel
    ground_truth: dict[int, list] = {fid: [] for fid in frame_paths}
    for fid, class_id, coords in gt_rows:
        if fid not in frame_paths:
            raise ValueError(f"{path}: ground truth references unknown frame {fid}")
        ground_truth[fid].append((BBox(*coords), class_id))
    segments = [SegmentInfo(domain=schedule[i], frame_ids=tuple(seg_frames[i]))
                for i in range(len(schedule))]
    return DatasetManifest(root=path.parent, seed=int(header["seed"]),
                           width=int(header["width"]), height=int(header["height"]),
                           num_classes=int(header["num_classes"]), segments=segments,
                           frame_paths=frame_paths, ground_truth=ground_truth)
