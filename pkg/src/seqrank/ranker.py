"""Sequential ranking of experts from decayed pairwise win statistics.

The state tracks a ``d x d`` matrix ``R`` whose entry ``(i, j)`` is the
exponentially decayed fraction of steps on which expert ``j`` performed at
least as well as expert ``i`` (ties count as wins for both sides, and an
expert always beats itself, so the diagonal equals ``1 - tau**t``
exactly). Column means of ``R`` normalise into a likelihood vector ``q``,
and the posterior ``p`` is an exponential smoothing of ``q`` with the same
decay. Because the win indicator depends only on the ordering of the
performance vector, the whole state is invariant to positive affine
rescalings of the input.

Updates are strictly sequential; a state may be handed between threads
but never shared mutably.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = ["RankerState", "RankOutput"]

logger = logging.getLogger(__name__)

_RENORM_LOG_TOLERANCE = 1e-12


@dataclass(frozen=True)
class RankOutput:
    """A ranking snapshot: expert indices sorted by descending posterior.

    Ties are broken by ascending index, so the output is deterministic.
    """

    order: np.ndarray
    posterior: np.ndarray


class RankerState:
    """Decayed pairwise-win ranker over ``d >= 2`` experts.

    ``tau`` in (0, 1] is the decay: at ``tau = 1`` nothing is ever
    learned (the posterior stays uniform), while smaller values weight
    recent performance more heavily.
    """

    def __init__(self, d: int, tau: float) -> None:
        if not isinstance(d, (int, np.integer)) or d < 2:
            raise ValueError(f"d must be an integer >= 2, got {d!r}")
        if not (0.0 < tau <= 1.0):
            raise ValueError(f"tau must lie in (0, 1], got {tau}")
        self.d = int(d)
        self.tau = float(tau)
        self.R = np.zeros((self.d, self.d))
        self.p = np.full(self.d, 1.0 / self.d)
        self.q = np.zeros(self.d)
        self.t = 0

    def update(self, performance: Sequence[float] | np.ndarray) -> "RankerState":
        """Fold one performance vector into the win statistics.

        ``wins[i, j]`` indicates ``performance[j] >= performance[i]``;
        each column of ``R`` decays toward its fresh win column, the
        column means renormalise into the likelihood ``q``, and the
        posterior moves a step ``(1 - tau)`` toward ``q``. The posterior
        is renormalised to unit sum afterwards; anything beyond a
        machine-epsilon correction is logged.
        """
        r = np.asarray(performance, dtype=float)
        if r.shape != (self.d,):
            raise ValueError(f"performance vector must have shape ({self.d},), got {r.shape}")
        if not np.isfinite(r).all():
            raise ValueError("performance vector contains non-finite values")
        wins = (r[None, :] >= r[:, None]).astype(float)
        self.R *= self.tau
        self.R += (1.0 - self.tau) * wins
        col_mean = self.R.mean(axis=0)
        total = float(col_mean.sum())
        if total > 0.0:
            self.q = col_mean / total
        else:
            # tau == 1 leaves R at zero forever; the likelihood stays uniform.
            self.q = np.full(self.d, 1.0 / self.d)
        self.p = self.tau * self.p + (1.0 - self.tau) * self.q
        norm = float(self.p.sum())
        if abs(norm - 1.0) > _RENORM_LOG_TOLERANCE * self.d:
            logger.warning("posterior sum drifted to %+.3e at step %d", norm - 1.0, self.t + 1)
        self.p /= norm
        self.t += 1
        return self

    def rank(self) -> RankOutput:
        """Indices sorted by descending posterior, ties by ascending index."""
        order = np.argsort(-self.p, kind="stable")
        return RankOutput(order=order, posterior=self.p.copy())

    def long_weights(self, members: Sequence[int]) -> np.ndarray:
        """Posterior-proportional weights over ``members``; sums to one."""
        idx = self._validate_members(members)
        weights = self.p[idx]
        total = float(weights.sum())
        if total <= 0.0:
            raise ValueError("selected posteriors sum to zero")
        return weights / total

    def short_weights(self, members: Sequence[int]) -> np.ndarray:
        """Complement-posterior weights over ``members``; sums to one.

        An expert with posterior 1 gets weight 0; if every member has
        posterior 1 the weights are undefined and an error is raised.
        """
        idx = self._validate_members(members)
        complement = 1.0 - self.p[idx]
        total = float(complement.sum())
        if total <= 0.0:
            raise ValueError("every selected posterior is 1; short weights undefined")
        return complement / total

    def ensemble_return(self, next_returns: Sequence[float] | np.ndarray, k: int) -> float:
        """Posterior-weighted return of the current top ``k`` experts."""
        r = np.asarray(next_returns, dtype=float)
        if r.shape != (self.d,):
            raise ValueError(f"returns vector must have shape ({self.d},), got {r.shape}")
        if not np.isfinite(r).all():
            raise ValueError("returns vector contains non-finite values")
        if not (1 <= k <= self.d):
            raise ValueError(f"k must lie in [1, {self.d}], got {k}")
        top = self.rank().order[:k]
        weights = self.p[top] / self.p[top].sum()
        return float(r[top] @ weights)

    def _validate_members(self, members: Sequence[int]) -> np.ndarray:
        idx = np.asarray(list(members), dtype=int)
        if idx.size == 0:
            raise ValueError("member set must not be empty")
        if len(set(idx.tolist())) != idx.size:
            raise ValueError("member set contains duplicates")
        if idx.min() < 0 or idx.max() >= self.d:
            raise ValueError(f"member indices must lie in [0, {self.d - 1}]")
        return idx

    def to_json_dict(self) -> dict:
        """Snapshot of the full state, suitable for resumable runs."""
        return {
            "d": self.d,
            "tau": self.tau,
            "t": self.t,
            "win_matrix": self.R.tolist(),
            "posterior": self.p.tolist(),
            "likelihood": self.q.tolist(),
        }

    @classmethod
    def from_json_dict(cls, payload: dict) -> "RankerState":
        state = cls(payload["d"], payload["tau"])
        R = np.asarray(payload["win_matrix"], dtype=float)
        p = np.asarray(payload["posterior"], dtype=float)
        q = np.asarray(payload["likelihood"], dtype=float)
        if R.shape != (state.d, state.d) or p.shape != (state.d,) or q.shape != (state.d,):
            raise ValueError("snapshot arrays do not match the declared dimension")
        state.R = R
        state.p = p
        state.q = q
        state.t = int(payload["t"])
        return state
