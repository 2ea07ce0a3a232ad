"""MNAR mask generation and fill policies for masked cells.

Masks are generated against fully observed data: two anchor columns gate
which rows may lose values (rows below either anchor's mean), a per-row
uniform draw ``v`` gates how many of them do, and a threshold ``t`` is
adjusted until the achieved missing rate lands within tolerance of the
target. ``mnar-uniform`` blanks whole eligible rows; ``mnar-random`` blanks
each feature of an eligible row independently with probability ``t``.

The per-row draw ``v`` and the per-cell draws are sampled once per
generation, so the realised mask grows monotonically with ``t`` and the
adjustment loop has a single well-behaved knob.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import NA_TOKEN, Dataset
from .errors import DataError, MaskGenerationError

STRATEGIES = ("mnar-uniform", "mnar-random")
INIT_POLICIES = ("mean", "median", "zero", "random")

RATE_TOLERANCE = 0.005
MAX_ADJUST_ITERS = 200


@dataclass
class Mask:
    """Boolean missingness matrix (true = missing) plus generation metadata."""

    missing: np.ndarray
    strategy: str
    target_rate: float
    achieved_rate: float
    anchor_features: tuple
    seed: int

    @property
    def shape(self):
        return self.missing.shape

    def to_metadata(self):
        return {
            "strategy": self.strategy,
            "target_rate": self.target_rate,
            "achieved_rate": self.achieved_rate,
            "anchor_features": list(self.anchor_features),
            "seed": self.seed,
        }


def _mask_at(t, strategy, anchor_pass, v, cell_draws):
    eligible = (v < t) & anchor_pass
    if strategy == "mnar-uniform":
        return np.repeat(eligible[:, None], cell_draws.shape[1], axis=1)
    return eligible[:, None] & (cell_draws < t)


def generate_mask(dataset, target_rate, strategy, seed, tolerance=RATE_TOLERANCE):
    """Generate an MNAR mask whose achieved rate is within tolerance of target.

    The threshold starts at the target and follows the multiplicative update
    t <- t * target/achieved; whenever that proposal leaves the bracket of
    rates seen so far (the mnar-random rate grows roughly quadratically in t,
    which makes the bare multiplicative rule oscillate) the loop falls back
    to bisecting the bracket.
    """
    values = dataset.values if isinstance(dataset, Dataset) else np.asarray(dataset, dtype=float)
    n, k = values.shape
    if not 0.0 < target_rate < 1.0:
        raise DataError(f"target rate must be in (0, 1), got {target_rate}")
    if strategy not in STRATEGIES:
        raise DataError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    if k < 3:
        raise DataError("mask generation needs at least 3 features (two anchors plus one)")
    if np.isnan(values).any():
        raise DataError("mask generation requires fully observed data")

    rng = np.random.default_rng(seed)
    v = rng.random(n)
    a1, a2 = rng.choice(k, size=2, replace=False)
    cell_draws = rng.random((n, k))
    anchor_pass = (values[:, a1] < values[:, a1].mean()) | (values[:, a2] < values[:, a2].mean())

    max_rate = float(anchor_pass.mean())
    if max_rate + tolerance < target_rate:
        raise MaskGenerationError(
            f"target rate {target_rate} unreachable: anchors cap the rate at {max_rate:.4f}"
        )

    lo, hi = 0.0, 1.0
    t = min(max(target_rate, 1e-9), 1.0)
    missing = None
    for _ in range(MAX_ADJUST_ITERS):
        missing = _mask_at(t, strategy, anchor_pass, v, cell_draws)
        achieved = missing.mean()
        if abs(achieved - target_rate) <= tolerance:
            break
        if achieved < target_rate:
            lo = max(lo, t)
        else:
            hi = min(hi, t)
        proposal = t * target_rate / achieved if achieved > 0 else hi
        if not lo < proposal < hi:
            proposal = 0.5 * (lo + hi)
        t = proposal
    else:
        missing = _mask_at(t, strategy, anchor_pass, v, cell_draws)
        achieved = missing.mean()
        if abs(achieved - target_rate) > tolerance:
            raise MaskGenerationError(
                f"could not reach rate {target_rate} within {tolerance}; closest was {achieved:.4f}"
            )

    return Mask(
        missing=missing,
        strategy=strategy,
        target_rate=float(target_rate),
        achieved_rate=float(missing.sum() / missing.size),
        anchor_features=(int(a1), int(a2)),
        seed=int(seed),
    )


@dataclass
class FillValues:
    """Per-feature fill state fitted on observed training cells."""

    policy: str
    constants: np.ndarray | None = None  # None for the random policy
    seed: int = 0


def fit_fill(values, missing, policy, seed=0):
    """Compute fill values from the observed (unmasked) cells of `values`."""
    if policy not in INIT_POLICIES:
        raise DataError(f"unknown init policy {policy!r}; expected one of {INIT_POLICIES}")
    values = np.asarray(values, dtype=float)
    missing = np.asarray(missing, dtype=bool)
    if missing.shape != values.shape:
        raise DataError("mask shape does not match data shape")
    if policy == "random":
        return FillValues(policy="random", seed=int(seed))
    if policy == "zero":
        return FillValues(policy="zero", constants=np.zeros(values.shape[1]))
    constants = np.empty(values.shape[1])
    for j in range(values.shape[1]):
        observed = values[~missing[:, j], j]
        observed = observed[~np.isnan(observed)]
        if observed.size == 0:
            raise DataError(f"feature {j} has no observed cells to compute a {policy} fill")
        constants[j] = observed.mean() if policy == "mean" else np.median(observed)
    return FillValues(policy=policy, constants=constants)


def apply_fill(values, missing, fill):
    """Replace masked cells per the fill policy; observed cells are untouched."""
    values = np.asarray(values, dtype=float)
    missing = np.asarray(missing, dtype=bool)
    if missing.shape != values.shape:
        raise DataError("mask shape does not match data shape")
    out = values.copy()
    if fill.policy == "random":
        rng = np.random.default_rng(fill.seed)
        out[missing] = rng.standard_normal(int(missing.sum()))
    else:
        out[missing] = np.broadcast_to(fill.constants, values.shape)[missing]
    return out


def apply_mask(dataset, mask, policy, seed=0):
    """Mask + fill in one step: returns (filled matrix, fill state).

    Fill statistics come from this dataset's own unmasked cells; the ground
    truth stays in the caller's hands and is never written into the output.
    """
    values = dataset.values if isinstance(dataset, Dataset) else np.asarray(dataset, dtype=float)
    fill = fit_fill(values, mask.missing, policy, seed=seed)
    return apply_fill(values, mask.missing, fill), fill


def save_mask(mask, path, column_names=None):
    """Write the 0/1 CSV plus a `.meta.json` sidecar with the generation info."""
    path = Path(path)
    n, k = mask.missing.shape
    names = column_names if column_names is not None else [f"x{j}" for j in range(k)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for i in range(n):
            writer.writerow(["1" if mask.missing[i, j] else "0" for j in range(k)])
    sidecar = path.with_name(path.name + ".meta.json")
    sidecar.write_text(json.dumps(mask.to_metadata(), indent=2) + "\n")


def load_mask_matrix(path):
    """Read a mask from CSV: either 0/1 cells or NA-marked data cells.

    Returns (bool matrix, metadata dict or None). Metadata comes from the
    `.meta.json` sidecar when present.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        rows = [row for row in reader if row]
    for lineno, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise DataError(f"{path}: line {lineno}: expected {len(header)} fields, got {len(row)}")
    cells = [[c.strip() for c in row] for row in rows]
    flat = {c for row in cells for c in row}
    if flat <= {"0", "1"}:
        matrix = np.array([[c == "1" for c in row] for row in cells])
    elif NA_TOKEN in flat:
        matrix = np.array([[c == NA_TOKEN for c in row] for row in cells])
    else:
        raise DataError(f"{path}: expected a 0/1 mask or NA-marked cells")
    sidecar = path.with_name(path.name + ".meta.json")
    meta = json.loads(sidecar.read_text()) if sidecar.exists() else None
    return matrix, meta
