"""Shared simulation plumbing: chunked seed streams and the ratio estimator.

Cycles are independent by construction, so a run of n cycles can be split
into fixed-size chunks with one spawned ``SeedSequence`` child per chunk.
Chunk k always owns cycles [k*size, (k+1)*size), whatever order chunks are
executed in, so a parallel run merges to exactly the serial output.
"""

import numpy as np


def chunk_plan(n_cycles, chunk_size):
    """Number of cycles handled by each chunk, in chunk order."""
    if n_cycles <= 0:
        return []
    full, rest = divmod(n_cycles, chunk_size)
    return [chunk_size] * full + ([rest] if rest else [])


def chunk_seeds(seed, n_chunks):
    """One spawned ``SeedSequence`` per chunk.  ``seed`` may be an int or
    an already-built SeedSequence (nested spawning)."""
    if isinstance(seed, np.random.SeedSequence):
        root = seed
    else:
        root = np.random.SeedSequence(seed)
    return root.spawn(n_chunks)


def chunk_generators(seed, n_chunks):
    """One independent ``Generator`` per chunk, derived from ``seed``."""
    return [np.random.default_rng(child) for child in chunk_seeds(seed, n_chunks)]


class RatioAccumulator:
    """Running moments for the regenerative ratio estimate.

    Feeds on (occupation, length) pairs of i.i.d. cycles and produces the
    per-state ratio estimate with its delta-method standard error: with
    Y_c the occupation vector and t_c the length of cycle c,

        pi_hat  = sum Y / sum t
        se      = sd(Y - pi_hat * t) / (sqrt(n) * mean t)

    computed from accumulated first and second moments only, so chunked
    runs never hold all cycles in memory.
    """

    def __init__(self, n_states):
        self.n_states = n_states
        self.n_cycles = 0
        self.sum_occ = np.zeros(n_states)
        self.sum_len = 0.0
        self.sum_occ_sq = np.zeros(n_states)
        self.sum_cross = np.zeros(n_states)
        self.sum_len_sq = 0.0

    def add(self, occ, lengths):
        occ = np.asarray(occ, dtype=np.float64)
        lengths = np.asarray(lengths, dtype=np.float64)
        self.n_cycles += lengths.shape[0]
        self.sum_occ += occ.sum(axis=0)
        self.sum_len += lengths.sum()
        self.sum_occ_sq += (occ * occ).sum(axis=0)
        self.sum_cross += (occ * lengths[:, None]).sum(axis=0)
        self.sum_len_sq += (lengths * lengths).sum()

    def estimate(self):
        """Return (pi_hat, standard_errors or None, mean_length).

        Standard errors need at least two cycles; with one cycle they are
        reported as unavailable rather than zero.
        """
        n = self.n_cycles
        if n < 1:
            raise ValueError("no cycles accumulated")
        pi_hat = self.sum_occ / self.sum_len
        mean_len = self.sum_len / n
        if n < 2:
            return pi_hat, None, mean_len
        # sum of squared residuals (Y - pi_hat t), expanded in moments;
        # clip the tiny negatives rounding can produce
        ssd = (self.sum_occ_sq - 2.0 * pi_hat * self.sum_cross
               + pi_hat * pi_hat * self.sum_len_sq)
        ssd = np.maximum(ssd, 0.0)
        se = np.sqrt(ssd / (n - 1) / n) / mean_len
        return pi_hat, se, mean_len
