"""Statistical oracles shared by the sampler and engine tests."""

from collections import Counter, defaultdict
from collections.abc import Hashable, Mapping

from scipy import stats

from popsim.core.model import Protocol

# significance level of every distributional test
P_MIN = 1e-3


def chisquare_p(observed: Mapping[Hashable, int], pmf: Mapping[Hashable, float], draws: int) -> float:
    """Goodness-of-fit p-value; outcomes expected fewer than 5 times are pooled into one bin."""
    obs: list[float] = []
    exp: list[float] = []
    pooled_obs, pooled_exp = 0, 0.0
    for value, p in sorted(pmf.items()):
        if p * draws >= 5:
            obs.append(observed.get(value, 0))
            exp.append(p * draws)
        else:
            pooled_obs += observed.get(value, 0)
            pooled_exp += p * draws
    pooled_obs += sum(c for v, c in observed.items() if v not in pmf)
    pooled_exp += max(0.0, draws - sum(exp) - pooled_exp)
    if pooled_exp >= 5 or not obs:
        obs.append(pooled_obs)
        exp.append(pooled_exp)
    else:
        obs[-1] += pooled_obs
        exp[-1] += pooled_exp
    scale = sum(obs) / sum(exp)
    return float(stats.chisquare(obs, [e * scale for e in exp]).pvalue)


def two_sample_p(first: Counter, second: Counter) -> float:
    """Chi-square homogeneity p-value of two histograms; categories seen fewer than 10 times in total are pooled."""
    keys = sorted(set(first) | set(second), key=repr)
    rows: list[list[int]] = [[], []]
    pooled = [0, 0]
    for key in keys:
        a, b = first.get(key, 0), second.get(key, 0)
        if a + b >= 10:
            rows[0].append(a)
            rows[1].append(b)
        else:
            pooled[0] += a
            pooled[1] += b
    if sum(pooled) > 0:
        rows[0].append(pooled[0])
        rows[1].append(pooled[1])
    if len(rows[0]) < 2:
        return 1.0
    return float(stats.chi2_contingency(rows).pvalue)


def exact_endpoint_law(protocol: Protocol, counts: list[int], interactions: int) -> dict[tuple[int, ...], float]:
    """Configuration law after a fixed number of uniform ordered-pair interactions, by forward recursion."""
    n = sum(counts)
    q = protocol.q
    law: dict[tuple[int, ...], float] = {tuple(counts): 1.0}
    for _ in range(interactions):
        step: defaultdict[tuple[int, ...], float] = defaultdict(float)
        for key, mass in law.items():
            for a in range(q):
                for b in range(q):
                    pairs = key[a] * (key[b] - (1 if a == b else 0))
                    if pairs == 0:
                        continue
                    p = mass * pairs / (n * (n - 1))
                    dist = protocol.delta.get((a, b))
                    if dist is None:
                        step[key] += p
                        continue
                    for (c, d), r in dist.entries:
                        after = list(key)
                        after[a] -= 1
                        after[b] -= 1
                        after[c] += 1
                        after[d] += 1
                        step[tuple(after)] += p * r
                    if dist.null_prob > 0:
                        step[key] += p * dist.null_prob
        law = dict(step)
    return law
