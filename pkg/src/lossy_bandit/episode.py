"""One episode of backward-adaptive compression, shared by every policy.

Each round the policy names an action, the source emits ``x``, the encoder
scans the shared codebook for the first d-match and the decoder regenerates
the reconstruction from the frame alone. Policies never see ``x``; what
they do see depends on their feedback channel:

* ``"cost"``: the chosen action, its idealized cost and the reconstruction
  (the restricted history of the bandit policies);
* ``"reconstruction"``: the reconstruction only (plus the escape flag
  carried by the frame itself).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .codec import DEFAULT_J_MAX, CodecConfig, decode_round, encode_round, pack_frame, source_stream
from .core import DISTORTION_SLACK, DistortionSpec, ReconDistribution, SourceModel, distortion_total

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CostFeedback:
    action: int
    cost: float
    reconstruction: int


@dataclass(frozen=True)
class ReconstructionFeedback:
    reconstruction: int
    escaped: bool = False  # read off the frame's flag bit, so known to the decoder


class Policy(Protocol):
    feedback: str

    def act(self, t: int) -> tuple[int, ReconDistribution | None]:
        """Action id for round ``t`` and, for policies without a fixed arm set, its distribution."""

    def update(self, fb) -> None: ...


@dataclass
class PolicyTrace:
    """Append-only record of a run; its first ``t-1`` rows are the history before round ``t``."""

    n_arms: int | None = None
    actions: list = field(default_factory=list)
    costs: list = field(default_factory=list)
    emitted_bits: list = field(default_factory=list)
    escaped: list = field(default_factory=list)
    reconstructions: list = field(default_factory=list)
    # per-round distribution actually used, for policies that build actions on the fly
    recons: list | None = None

    def __len__(self) -> int:
        return len(self.actions)

    def append(self, action: int, cost: float, emitted: int, escaped: bool, y: int,
               recon: ReconDistribution | None = None) -> None:
        self.actions.append(int(action))
        self.costs.append(float(cost))
        self.emitted_bits.append(int(emitted))
        self.escaped.append(bool(escaped))
        self.reconstructions.append(int(y))
        if recon is not None:
            if self.recons is None:
                self.recons = []
            self.recons.append(recon)

    def history(self, t: int) -> list[tuple[int, float, int]]:
        """Restricted history before round ``t``: ``(A_s, B_s, Y_s)`` for ``s < t``."""
        return list(zip(self.actions[:t - 1], self.costs[:t - 1], self.reconstructions[:t - 1]))

    def counts(self) -> np.ndarray:
        k = self.n_arms if self.n_arms is not None else (max(self.actions) + 1 if self.actions else 0)
        return np.bincount(np.asarray(self.actions, dtype=np.int64), minlength=k)


def run_episode(source: SourceModel, spec: DistortionSpec, policy: Policy, horizon: int, seed: int,
                arms=(), j_max: int = DEFAULT_J_MAX, n_arms: int | None = None) -> PolicyTrace:
    if horizon < 1:
        raise ValueError("horizon must be positive")
    if policy.feedback not in ("cost", "reconstruction"):
        raise ValueError(f"unknown feedback channel {policy.feedback!r}")
    cfg = CodecConfig(seed, spec, tuple(arms), j_max)
    trace = PolicyTrace(n_arms=n_arms)
    for t in range(1, horizon + 1):
        a, recon = policy.act(t)
        x = source.sample(source_stream(seed, t))
        res, bits = encode_round(x, a, t, cfg, recon)
        y = decode_round(pack_frame(bits), a, t, cfg, recon)
        if y != res.reconstruction:
            raise RuntimeError(f"decoder out of sync in round {t}: {y} != {res.reconstruction}")
        if not res.escaped and distortion_total(spec, x, y) > spec.level + DISTORTION_SLACK:
            raise RuntimeError(f"distortion constraint violated in round {t}")
        trace.append(a, res.bits, len(bits), res.escaped, y, recon)
        if policy.feedback == "cost":
            policy.update(CostFeedback(a, res.bits, y))
        else:
            policy.update(ReconstructionFeedback(y, res.escaped))
    n_esc = sum(trace.escaped)
    if n_esc:
        logger.info("%d of %d rounds escaped", n_esc, horizon)
    return trace
