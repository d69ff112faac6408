"""Sampling and applying the outcome of one interaction."""

from __future__ import annotations

from popsim.core.model import OutputDistribution, Pair
from popsim.rng.samplers import RngStream


def sample_output(dist: OutputDistribution | None, rng: RngStream) -> Pair | None:
    """Output pair of one interaction, or None for the null outcome."""
    if dist is None or not dist.entries:
        return None
    if dist.is_deterministic:
        return dist.entries[0][0]
    u = rng.random()
    for out, p in dist.entries:
        if u < p:
            return out
        u -= p
    return None


def sample_nonnull_output(dist: OutputDistribution, rng: RngStream) -> Pair:
    """Output pair conditioned on the interaction not being null."""
    if len(dist.entries) == 1:
        return dist.entries[0][0]
    index = rng.choose_weighted([p for _, p in dist.entries])
    return dist.entries[index][0]


def apply_pair(counts: list[int], inputs: Pair, outputs: Pair) -> None:
    counts[inputs[0]] -= 1
    counts[inputs[1]] -= 1
    counts[outputs[0]] += 1
    counts[outputs[1]] += 1
