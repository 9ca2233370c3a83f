"""Synthetic fundus-like images with a controllable SA/DR confound.

Each image is a retina disc on a dark background with an optic disc and a
few vessel curves. Referable (DR-positive) patients receive lesion blobs.
Every SA in group 1 leaves a global, low-frequency signature:

=========  ============================================================
age        colour tint: red/green up, blue down (lens yellowing)
sex        stronger vignetting towards the disc rim
education  left-to-right illumination gradient
insurance  faint diagonal grating texture
obesity    haze: contrast pulled towards the disc mean
=========  ============================================================

Signatures are scaled by ``sa_feature_strength``; lesions by
``lesion_intensity``. Only ``primary_sa`` is correlated with DR.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import pandas as pd

from disentlab._types import SA_NAMES
from disentlab.config.models import GeneratorConfig
from disentlab.errors import InfeasibleConfoundError
from disentlab.synthgen.dataset import Dataset

logger = logging.getLogger(__name__)

# Fundus base colour and per-SA tint direction, per RGB channel.
_FUNDUS_RGB = np.array([0.72, 0.36, 0.20])
_OPTIC_RGB = np.array([0.25, 0.22, 0.12])
_VESSEL_RGB = np.array([0.28, 0.18, 0.10])
_EXUDATE_RGB = np.array([0.9, 0.8, 0.3])
_HEMORRHAGE_RGB = np.array([-0.5, -0.3, -0.15])
_TINT_RGB = np.array([0.4, 0.25, -0.5])

# Lesion counts per ICDR grade (0 and 1 are Normal, 2-4 Referable).
_LESIONS_PER_GRADE = (0, 1, 3, 5, 8)
_REFERABLE_GRADE_PROBS = (0.5, 0.3, 0.2)
_MILD_PROBABILITY = 0.3


def binarize_icdr(grade: int) -> int:
    """Map an ICDR grade to Normal (0: grades 0-1) or Referable (1: grades 2-4)."""
    if not 0 <= grade <= 4:
        raise ValueError(f"ICDR grades run from 0 to 4, got {grade}.")
    return int(grade >= 2)


# ---------------------------------------------------------------------------
# Joint (SA, DR) sampling
# ---------------------------------------------------------------------------


def joint_table(prevalence: float, marginal: float, rho: float) -> np.ndarray:
    """Solve the 2x2 table ``p[sa, dr]`` with given marginals and correlation.

    Raises
    ------
    InfeasibleConfoundError
        If the implied joint probability ``p[1, 1]`` leaves the Fréchet
        bounds ``[max(0, p + q - 1), min(p, q)]``.
    """
    p, q = prevalence, marginal
    p11 = p * q + rho * math.sqrt(p * (1 - p) * q * (1 - q))
    low, high = max(0.0, p + q - 1.0), min(p, q)
    if not low - 1e-12 <= p11 <= high + 1e-12:
        rho_min = (low - p * q) / math.sqrt(p * (1 - p) * q * (1 - q))
        rho_max = (high - p * q) / math.sqrt(p * (1 - p) * q * (1 - q))
        raise InfeasibleConfoundError(
            f"confound_rho={rho} is infeasible for DR prevalence {p} and SA "
            f"positive rate {q}: binary variables with these marginals admit "
            f"correlations only in [{rho_min:.4f}, {rho_max:.4f}]. "
            f"Lower the confound or move the SA marginal towards the prevalence."
        )
    p11 = min(max(p11, low), high)
    p10 = q - p11  # SA=1, DR=0
    p01 = p - p11  # SA=0, DR=1
    p00 = 1.0 - p11 - p10 - p01
    return np.array([[p00, p01], [p10, p11]])


def _quota(n: int, probs: np.ndarray) -> np.ndarray:
    """Largest-remainder rounding of ``n * probs`` to integer counts."""
    raw = n * np.asarray(probs, dtype=np.float64).ravel()
    counts = np.floor(raw).astype(np.int64)
    short = n - int(counts.sum())
    order = np.argsort(-(raw - counts), kind="stable")
    counts[order[:short]] += 1
    return counts


def _patient_labels(config: GeneratorConfig, rng: np.random.Generator) -> pd.DataFrame:
    """Draw patient-level DR, ICDR grade and SA values by quota sampling."""
    n = config.n_patients
    primary = config.primary_sa
    table = joint_table(
        config.dr_prevalence, config.sa_marginals[primary], config.confound_rho
    )
    cells = _quota(n, table)  # order: (0,0), (0,1), (1,0), (1,1)
    sa_primary = np.repeat([0, 0, 1, 1], cells)
    dr = np.repeat([0, 1, 0, 1], cells)
    order = rng.permutation(n)
    columns: dict[str, np.ndarray] = {
        "dr": dr[order],
        primary: sa_primary[order],
    }
    for name in SA_NAMES:
        if name == primary:
            continue
        rate = config.sa_marginals[name]
        ones = _quota(n, np.array([1 - rate, rate]))[1]
        values = np.zeros(n, dtype=np.int64)
        values[:ones] = 1
        columns[name] = values[rng.permutation(n)]

    grade = np.where(
        columns["dr"] == 1,
        rng.choice([2, 3, 4], size=n, p=_REFERABLE_GRADE_PROBS),
        (rng.random(n) < _MILD_PROBABILITY).astype(np.int64),
    )
    frame = pd.DataFrame({"patient_id": [f"P{i:05d}" for i in range(n)]})
    frame["dr"] = columns["dr"].astype(np.int64)
    for name in SA_NAMES:
        frame[name] = columns[name].astype(np.int64)
    frame["grade"] = grade.astype(np.int64)
    return frame


# ---------------------------------------------------------------------------
# Image rendering
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Canvas:
    yy: np.ndarray
    xx: np.ndarray
    rr: np.ndarray
    size: int


def _canvas(size: int) -> _Canvas:
    coords = (np.arange(size) + 0.5) / size * 2.0 - 1.0
    yy, xx = np.meshgrid(coords, coords, indexing="ij")
    return _Canvas(yy=yy, xx=xx, rr=np.sqrt(xx**2 + yy**2), size=size)


def _channel_vector(rgb: np.ndarray, channels: int) -> np.ndarray:
    if channels == 3:
        return rgb
    if channels == 1:
        return np.array([rgb @ np.array([0.299, 0.587, 0.114])])
    return np.resize(rgb, channels)


def _blob(canvas: _Canvas, cy: float, cx: float, sigma: float) -> np.ndarray:
    return np.exp(-((canvas.yy - cy) ** 2 + (canvas.xx - cx) ** 2) / (2 * sigma**2))


def render_image(
    canvas: _Canvas,
    grade: int,
    sa: dict[str, int],
    config: GeneratorConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Render one image ``[C, H, W]`` in [0, 1]."""
    c = config.channels
    s = config.sa_feature_strength
    vec = lambda rgb: _channel_vector(rgb, c)[:, None, None]  # noqa: E731

    radius = 0.88 + rng.uniform(-0.03, 0.03)
    disc = 1.0 / (1.0 + np.exp((canvas.rr - radius) * canvas.size * 0.8))
    gain = rng.uniform(0.92, 1.08)

    vignette = 0.35 + (0.25 * s if sa["sex"] else 0.0)
    shade = 1.0 - vignette * (canvas.rr / radius) ** 2
    if sa["education"]:
        shade = shade * (1.0 + 0.5 * s * canvas.xx)
    img = vec(_FUNDUS_RGB) * gain * shade[None]

    # Optic disc on a random side, then vessels radiating from it.
    side = 1.0 if rng.random() < 0.5 else -1.0
    oy, ox = rng.uniform(-0.08, 0.08), side * 0.45
    img = img + vec(_OPTIC_RGB) * _blob(canvas, oy, ox, 0.11)[None]
    for _ in range(4):
        amp = rng.uniform(0.15, 0.45)
        freq = rng.uniform(1.0, 2.5)
        phase = rng.uniform(0, 2 * math.pi)
        offset = oy + rng.uniform(-0.25, 0.25)
        curve = offset + amp * np.sin(freq * (canvas.xx - ox) + phase)
        width = rng.uniform(0.04, 0.07)
        mask = np.exp(-(((canvas.yy - curve) / width) ** 2))
        img = img - vec(_VESSEL_RGB) * mask[None]

    # Lesions: exudates (bright) and haemorrhages (dark).
    n_lesions = _LESIONS_PER_GRADE[grade]
    amplitude = config.lesion_intensity * (0.5 if grade == 1 else 1.0)
    for _ in range(n_lesions):
        r = 0.65 * math.sqrt(rng.random())
        theta = rng.uniform(0, 2 * math.pi)
        sigma = rng.uniform(0.05, 0.09)
        blob = _blob(canvas, r * math.sin(theta), r * math.cos(theta), sigma)
        colour = _EXUDATE_RGB if rng.random() < 0.5 else _HEMORRHAGE_RGB
        img = img + amplitude * vec(colour) * blob[None]

    if sa["age"]:
        img = img + s * vec(_TINT_RGB)
    if sa["insurance"]:
        grating = np.sin((canvas.xx + canvas.yy) * canvas.size * 0.5)
        img = img + 0.25 * s * grating[None]
    if sa["obesity"]:
        mean = img.mean(axis=(1, 2), keepdims=True)
        img = mean + (img - mean) * (1.0 - 1.5 * s)

    img = img * disc[None] + 0.02 * (1.0 - disc[None])
    img = img + rng.normal(0.0, 0.015, size=img.shape)
    return np.clip(img, 0.0, 1.0).astype(np.float32)


def _render_patient(
    args: tuple[pd.Series, GeneratorConfig, _Canvas, np.random.SeedSequence],
) -> np.ndarray:
    row, config, canvas, seed = args
    rng = np.random.default_rng(seed)
    sa = {name: int(row[name]) for name in SA_NAMES}
    return np.stack(
        [
            render_image(canvas, int(row["grade"]), sa, config, rng)
            for _ in range(config.images_per_patient)
        ]
    )


# ---------------------------------------------------------------------------
# Public API
# ---------------------------------------------------------------------------


def generate_dataset(config: GeneratorConfig, workers: int = 1) -> Dataset:
    """Generate ``n_patients * images_per_patient`` samples.

    Patient labels come from one master stream; each patient's pixels come
    from a child seed spawned from the master seed, so the bytes do not
    depend on *workers*.

    Raises
    ------
    InfeasibleConfoundError
        If the requested confound cannot be realized by binary variables.
    """
    master = np.random.SeedSequence(config.seed)
    label_seed, pixel_seed = master.spawn(2)
    patients = _patient_labels(config, np.random.default_rng(label_seed))
    canvas = _canvas(config.image_size)
    jobs = [
        (row, config, canvas, seed)
        for (_, row), seed in zip(
            patients.iterrows(), pixel_seed.spawn(config.n_patients)
        )
    ]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(_render_patient, jobs))
    else:
        blocks = [_render_patient(job) for job in jobs]
    images = np.concatenate(blocks, axis=0)

    k = config.images_per_patient
    meta = patients.loc[patients.index.repeat(k)].reset_index(drop=True)
    meta.insert(
        0,
        "image_id",
        [f"{pid}-{j}" for pid in patients["patient_id"] for j in range(k)],
    )
    meta = meta[["image_id", "patient_id", "dr", *SA_NAMES]]
    logger.info(
        "Generated %d images for %d patients (rho=%.3f, prevalence=%.3f)",
        len(meta),
        config.n_patients,
        config.confound_rho,
        config.dr_prevalence,
    )
    return Dataset(images, meta)


def empirical_correlation(a: np.ndarray, b: np.ndarray) -> float:
    """Pearson correlation of two binary indicator vectors."""
    return float(np.corrcoef(a.astype(np.float64), b.astype(np.float64))[0, 1])
