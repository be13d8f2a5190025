"""Indian Buffet Process model of online content selection.

Only contents that somebody has already selected are materialized; the
unbounded remainder of the catalog shows up solely through the Poisson
draw of fresh contents.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DomainError, SequencingError


@dataclass(frozen=True)
class SelectionOutcome:
    user_index: int
    old_contents: frozenset
    new_contents: frozenset

    @property
    def m_n(self) -> int:
        return len(self.old_contents) + len(self.new_contents)

    @property
    def m_n_0(self) -> int:
        return len(self.new_contents)

    @property
    def m_n_h(self) -> int:
        return len(self.old_contents)


@dataclass
class IbpState:
    alpha: float
    n_users_seen: int = 0
    counts: dict = field(default_factory=dict)
    next_content_id: int = 0
    history: list = field(default_factory=list)

    def __post_init__(self):
        if not self.alpha > 0:
            raise DomainError(f"alpha must be positive, got {self.alpha}")

    @property
    def k_h(self) -> int:
        return len(self.counts)

    def prior_mass(self, n=None) -> float:
        """Sum over stored contents of m_k / n, the expected old-content count."""
        n = self._check_user(n)
        return sum(self.counts.values()) / n

    def _check_user(self, n):
        expected = self.n_users_seen + 1
        if n is None:
            return expected
        if n != expected:
            raise SequencingError(f"next user is {expected}, got {n}")
        return n


def prior_probability(state: IbpState, content: int, n: int) -> float:
    """Probability m_k / n that user ``n`` picks an already-selected content."""
    n = state._check_user(n)
    return state.counts.get(content, 0) / n


def ibp_select(state: IbpState, rng: np.random.Generator) -> SelectionOutcome:
    """Draw user n = n_users_seen + 1's selection and fold it into ``state``."""
    n = state.n_users_seen + 1
    ids = sorted(state.counts)
    u = rng.random(len(ids))
    old = [k for k, uk in zip(ids, u) if uk < state.counts[k] / n]
    n_new = int(rng.poisson(state.alpha / n))

    for k in old:
        state.counts[k] += 1
    new = list(range(state.next_content_id, state.next_content_id + n_new))
    for k in new:
        state.counts[k] = 1
    state.next_content_id += n_new
    state.n_users_seen = n

    outcome = SelectionOutcome(n, frozenset(old), frozenset(new))
    state.history.append(outcome)
    return outcome


def expected_old_count(alpha: float, n: int) -> float:
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    if n < 1:
        raise DomainError(f"user index must be >= 1, got {n}")
    return (n - 1) * alpha / n


def replay(alpha, n_users, n_replays, rng, chunk=20000):
    """Run ``n_replays`` independent IBP processes of ``n_users`` users each.

    Returns ``(new, old)``, integer arrays of shape (n_replays, n_users) with
    the fresh and previously-selected content counts of every user. The heavy
    lifting is done by :func:`d2dsim.kernels.ibp_old_counts`.
    """
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    if n_users < 1 or n_replays < 0:
        raise DomainError("need n_users >= 1 and n_replays >= 0")
    rates = alpha / np.arange(1, n_users + 1)
    news, olds = [], []
    done = 0
    while done < n_replays:
        b = min(chunk, n_replays - done)
        new = rng.poisson(rates, size=(b, n_users)).astype(np.int64)
        u = rng.random(kernels.uniforms_needed(new))
        olds.append(kernels.ibp_old_counts(new, u))
        news.append(new)
        done += b
    if not news:
        empty = np.zeros((0, n_users), dtype=np.int64)
        return empty, empty.copy()
    return np.concatenate(news), np.concatenate(olds)


def write_history_csv(state: IbpState, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["user_index", "content_id", "was_new"])
    for out in state.history:
        for k in sorted(out.old_contents | out.new_contents):
            writer.writerow([out.user_index, k, int(k in out.new_contents)])
