"""Shared value types, weight handling, and deterministic stream derivation.

Every stochastic component in the package draws from a stream derived here.
Streams are keyed by (master seed, stream index, role tag, sub index) through
numpy's SeedSequence/Philox machinery, so any replication is a pure function
of its coordinates and results never depend on worker count or scheduling.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

WEIGHT_FLOOR = 1e-9
WEIGHT_SUM_TOL = 1e-12

# A weight vector is a plain 1-d float array: strictly positive entries
# summing to 1 within WEIGHT_SUM_TOL. normalize() is the only sanctioned
# constructor; check_weights() enforces the contract.
WeightVector = np.ndarray


class DegenerateWeightsError(ValueError):
    """Raised when a raw weight vector cannot be normalized."""


class PolicyMismatchError(ValueError):
    """Raised when a record was not collected by the policy handed in."""


def normalize(raw, floor: float = WEIGHT_FLOOR) -> np.ndarray:
    """Turn non-negative reals into a strictly positive probability vector.

    Entries are scaled to sum to one; anything that lands below ``floor``
    is clamped up to ``floor`` and the vector is renormalized once more.
    The floor keeps resampling density ratios finite even when an adaptive
    rule tries to zero out an arm.

    Raises
    ------
    DegenerateWeightsError
        If the input contains non-finite values, negative values, or sums
        to zero.
    """
    w = np.asarray(raw, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise DegenerateWeightsError("weights must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(w)):
        raise DegenerateWeightsError("degenerate weights: non-finite entry")
    if np.any(w < 0):
        raise DegenerateWeightsError("degenerate weights: negative entry")
    total = w.sum()
    if total <= 0:
        raise DegenerateWeightsError("degenerate weights: all entries zero")
    w = w / total
    low = w < floor
    if low.any():
        w = np.where(low, floor, w)
        w = w / w.sum()
    return w


def check_weights(w: np.ndarray, tol: float = WEIGHT_SUM_TOL) -> np.ndarray:
    """Validate the WeightVector contract; returns the array unchanged."""
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise DegenerateWeightsError("weight vector must be 1-d and non-empty")
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise DegenerateWeightsError("weight vector entries must be finite and > 0")
    if abs(w.sum() - 1.0) > tol:
        raise DegenerateWeightsError(
            f"weight vector sums to {w.sum()!r}, outside tolerance {tol}"
        )
    return w


def _role_tag(role: str) -> int:
    digest = hashlib.blake2b(role.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True)
class SeedPlan:
    """Coordinates of a reproducible random stream.

    ``stream_index`` is typically a replication index; deeper structure
    (roles, per-resample indices) is added at derivation time.
    """

    master_seed: int
    stream_index: int = 0

    def replication(self, index: int) -> "SeedPlan":
        return SeedPlan(self.master_seed, index)


def derive_stream(plan: SeedPlan, role: str = "", sub_index: int = 0) -> np.random.Generator:
    """Return the Philox generator at (master_seed, stream_index, role, sub_index).

    Pure: the same coordinates give a bit-identical stream on every run,
    machine, and thread count. Distinct coordinates give distinct streams.
    """
    key = (int(plan.stream_index), _role_tag(role), int(sub_index))
    seq = np.random.SeedSequence(int(plan.master_seed), spawn_key=key)
    return np.random.Generator(np.random.Philox(seq))


def derive_bit_generator(plan: SeedPlan, role: str = "", sub_index: int = 0) -> np.random.Philox:
    """Philox bit generator for callers that need jumped() substreams."""
    key = (int(plan.stream_index), _role_tag(role), int(sub_index))
    seq = np.random.SeedSequence(int(plan.master_seed), spawn_key=key)
    return np.random.Philox(seq)


def derive_seed(plan: SeedPlan, role: str = "") -> int:
    """A stable 63-bit integer seed derived from the plan (for record tagging)."""
    key = (int(plan.stream_index), _role_tag(role), 0)
    seq = np.random.SeedSequence(int(plan.master_seed), spawn_key=key)
    return int(seq.generate_state(1, np.uint64)[0] >> np.uint64(1))


@dataclass(frozen=True)
class ExperimentRecord:
    """One collected experiment: aligned treatment, context, and response paths."""

    x: np.ndarray
    z: np.ndarray | None
    y: np.ndarray
    n: int
    policy_id: str
    seed: int
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        x = np.asarray(self.x)
        y = np.asarray(self.y, dtype=np.float64)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if self.z is not None:
            z = np.asarray(self.z)
            if len(z) != self.n:
                raise ValueError("z must be empty or have length n")
            object.__setattr__(self, "z", z)
        if len(x) != self.n or len(y) != self.n:
            raise ValueError("x and y must both have length n")


def config_fingerprint(config: dict) -> str:
    """sha256 hex digest of the canonical JSON form of a configuration."""
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=_json_default)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    raise TypeError(f"not JSON serializable: {type(obj)!r}")
