"""Policy-replay resampling.

Fake treatment sequences are generated by replaying the collection policy
step by step against the observed context and response history: the b-th
resample at time t is drawn from the policy's treatment rule evaluated on
(resampled x-prefix, observed z-prefix including the current step, observed
y-prefix). The observed treatments never enter the replay, which is what
makes the resamples exchangeable with the observed sequence under the null.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import ExperimentRecord, PolicyMismatchError, SeedPlan, derive_bit_generator, derive_stream
from .policies import AdaptivePolicy, HistoryView, categorical


@dataclass(frozen=True)
class ResampleBundle:
    """B resampled treatment sequences, conditionally independent given (Z, Y)."""

    resamples: np.ndarray  # shape (B, n), arm indices
    b_count: int
    source_record_id: str
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.resamples.shape[0] != self.b_count:
            raise ValueError("resample matrix row count must equal b_count")


def record_id(record: ExperimentRecord) -> str:
    return f"{record.policy_id}#{record.seed:x}"


def narp_resample(
    policy: AdaptivePolicy, record: ExperimentRecord, B: int, plan: SeedPlan
) -> ResampleBundle:
    """Draw B replayed treatment sequences for the record.

    Policies with a vectorized ``narp_batch`` kernel take that path (drawing
    bundle-shaped arrays from the plan's resample stream); anything else is
    replayed per resample with a jumped substream per b. Either way the
    bundle is a pure function of (plan, record) and never reads record.x.
    """
    if B < 1:
        raise ValueError("need at least one resample")
    if policy.policy_id != record.policy_id:
        raise PolicyMismatchError(
            f"record was collected by {record.policy_id!r}, not {policy.policy_id!r}"
        )
    if record.x.max(initial=0) >= policy.n_x_arms:
        raise ValueError("record contains arm indices outside the policy's domain")
    has_z = policy.n_z_arms is not None
    if has_z != (record.z is not None):
        raise ValueError("record and policy disagree about the presence of a context variable")

    batch = getattr(policy, "narp_batch", None)
    if callable(batch):
        rng = derive_stream(plan, "narp")
        xt, diag = batch(record, B, rng)
        xt = np.asarray(xt)
    else:
        root = derive_bit_generator(plan, "narp")
        n = record.n
        y = record.y
        z = record.z
        xt = np.empty((B, n), dtype=np.int64)
        diag = {}
        for b in range(B):
            rng_b = np.random.Generator(root.jumped(b))
            row = xt[b]
            for t in range(n):
                view = HistoryView(
                    x_hist=row[:t],
                    z_hist=z[: t + 1] if has_z else None,
                    y_hist=y[:t],
                )
                w = policy.x_rule(view, rng_b)
                if b == 0 and abs(float(np.sum(w)) - 1.0) > 1e-9:
                    raise ValueError(f"policy emitted unnormalized weights at step {t + 1}")
                row[t] = categorical(rng_b, w)
    if xt.shape != (B, record.n):
        raise ValueError("resample kernel produced a mis-shaped bundle")
    return ResampleBundle(
        resamples=xt, b_count=B, source_record_id=record_id(record), diagnostics=diag
    )
