"""Counter-based noise streams.

Every trajectory owns a Philox stream keyed by ``(master_seed, trajectory)``.
The noise of step ``s`` is derived from the ``s``-th 64-bit word of that stream,
so it is a pure function of ``(seed, trajectory, step)`` and does not depend on
how trajectories are scheduled across workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

NOISE_DISTRIBUTIONS = ("gaussian", "rademacher")

# second counter word; separates independent uses of one trajectory key
NOISE_STREAM = 0
INITIAL_STREAM = 1

_WORDS_PER_BLOCK = 4
_U52 = 2.0**-52


def raw_words(seed, trajectory, start, count, stream=NOISE_STREAM):
    """Words ``start .. start+count-1`` of the stream for one trajectory."""
    if start < 0 or count < 0:
        raise ValueError("start and count must be non-negative")
    key = np.array([seed, trajectory], dtype=np.uint64)
    block, offset = divmod(int(start), _WORDS_PER_BLOCK)
    counter = np.array([block, stream, 0, 0], dtype=np.uint64)
    bitgen = np.random.Philox(key=key, counter=counter)
    words = bitgen.random_raw(offset + int(count))
    return np.asarray(words, dtype=np.uint64)[offset:]


def words_to_uniform(words):
    """Map 64-bit words to the open interval (0, 1) using the top 52 bits.

    ``(k + 0.5) / 2**52`` is exact in double precision, so neither end is hit.
    """
    return ((words >> np.uint64(12)).astype(np.float64) + 0.5) * _U52


def words_to_noise(words, dist, gamma):
    if dist == "gaussian":
        return np.sqrt(gamma) * ndtri(words_to_uniform(words))
    if dist == "rademacher":
        sign = np.where(words >> np.uint64(63), 1.0, -1.0)
        return np.sqrt(gamma) * sign
    raise ValueError(f"unknown noise distribution {dist!r}")


def phase_mean(dist, gamma, tau):
    """``E[cos(sqrt(tau) xi)]``, equal to ``E[exp(i sqrt(tau) xi)]`` for symmetric noise."""
    if dist == "gaussian":
        return float(np.exp(-gamma * tau / 2))
    if dist == "rademacher":
        return float(np.cos(np.sqrt(tau * gamma)))
    raise ValueError(f"unknown noise distribution {dist!r}")


@dataclass(frozen=True)
class NoiseSampler:
    """Scalar phase noise with mean 0 and variance ``gamma``."""

    dist: str = "gaussian"
    gamma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.dist not in NOISE_DISTRIBUTIONS:
            raise ValueError(f"noise_dist must be one of {NOISE_DISTRIBUTIONS}")
        if not self.gamma >= 0:
            raise ValueError("gamma must be non-negative")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")

    def draws(self, trajectory, n_steps, start=0):
        """Noise for steps ``start .. start+n_steps-1`` of one trajectory."""
        return words_to_noise(raw_words(self.seed, trajectory, start, n_steps), self.dist, self.gamma)

    def xi(self, trajectory, step):
        return float(self.draws(trajectory, 1, start=step)[0])

    def block(self, trajectories, n_steps, start=0):
        """Array ``(n_steps, len(trajectories))``; column ``i`` is trajectory ``trajectories[i]``."""
        out = np.empty((n_steps, len(trajectories)))
        for i, traj in enumerate(trajectories):
            out[:, i] = self.draws(int(traj), n_steps, start)
        return out


def initial_uniforms(seed, trajectories):
    """One uniform per trajectory from a stream independent of the step noise."""
    return np.array(
        [words_to_uniform(raw_words(seed, int(t), 0, 1, stream=INITIAL_STREAM))[0] for t in trajectories]
    )
