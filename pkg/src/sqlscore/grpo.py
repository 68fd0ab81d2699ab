"""Group-relative policy optimization math and a desk-scale simulator.

advantages: A_i = R_i - mean(R) over a candidate group.

grpo_objective: mean_i min(r_i * A_i, clip(r_i, 1-eps, 1+eps) * A_i) - beta * KL
with importance ratio r_i = exp(logp_new_i - logp_old_i) and the non-negative
per-sample KL estimator exp(d) - d - 1 for d = logp_ref - logp_new.

The toy simulator ascends the same objective on the logits of a categorical
policy over a finite pool of candidate responses, scoring sampled groups with
the reward engine (or an injected reward table) each step. Exact categorical
KL is available there because the full distribution is known.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import EmptyGroup


@dataclass(frozen=True)
class GroupSample:
    reward: float
    logp_new: float
    logp_old: float
    logp_ref: float

    def __post_init__(self):
        for name in ("reward", "logp_new", "logp_old", "logp_ref"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")


@dataclass(frozen=True)
class GrpoConfig:
    epsilon: float = 0.2
    beta: float = 0.0
    group_size: int = 8

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if self.group_size < 1:
            raise ValueError("group_size must be >= 1")


@dataclass(frozen=True)
class GrpoObjective:
    objective: float
    clipped_fraction: float
    kl: float


def advantages(rewards: Sequence[float], *, normalize_std: bool = False) -> list[float]:
    """Mean-relative advantages of one group; they always sum to zero.

    Standard-deviation normalization is available but off by default: the
    group-relative formulation subtracts the mean only.
    """
    if len(rewards) == 0:
        raise EmptyGroup("cannot compute advantages of an empty group")
    mean = sum(rewards) / len(rewards)
    adv = [r - mean for r in rewards]
    if normalize_std:
        var = sum(a * a for a in adv) / len(adv)
        std = math.sqrt(var)
        if std > 1e-12:
            adv = [a / std for a in adv]
    return adv


def _clip(x: float, lo: float, hi: float) -> float:
    return max(lo, min(hi, x))


def grpo_objective(
    samples: Sequence[GroupSample],
    cfg: GrpoConfig,
    *,
    advantages_override: Optional[Sequence[float]] = None,
) -> GrpoObjective:
    """Clipped surrogate objective with KL regularization for one group.

    Advantages default to mean-relative over the samples' rewards;
    advantages_override substitutes externally computed values.
    """
    if len(samples) != cfg.group_size:
        raise ValueError(
            f"expected {cfg.group_size} samples, got {len(samples)}"
        )
    if advantages_override is not None:
        if len(advantages_override) != len(samples):
            raise ValueError("advantages_override length mismatch")
        adv = list(advantages_override)
    else:
        adv = advantages([s.reward for s in samples])

    lo, hi = 1.0 - cfg.epsilon, 1.0 + cfg.epsilon
    surrogate = 0.0
    clipped = 0
    kl_sum = 0.0
    for s, a in zip(samples, adv):
        ratio = math.exp(s.logp_new - s.logp_old)
        if ratio < lo or ratio > hi:
            clipped += 1
        surrogate += min(ratio * a, _clip(ratio, lo, hi) * a)
        d = s.logp_ref - s.logp_new
        kl_sum += math.exp(d) - d - 1.0
    n = len(samples)
    kl = kl_sum / n
    return GrpoObjective(
        objective=surrogate / n - cfg.beta * kl,
        clipped_fraction=clipped / n,
        kl=kl,
    )


# --- toy categorical policy -------------------------------------------------


def softmax(logits: Sequence[float]) -> list[float]:
    m = max(logits)
    exps = [math.exp(x - m) for x in logits]
    z = sum(exps)
    return [e / z for e in exps]


@dataclass
class ToyPolicy:
    """Categorical distribution over a finite pool of candidate responses."""

    logits: list[float]

    def probs(self) -> list[float]:
        return softmax(self.logits)

    def logp(self, index: int) -> float:
        p = self.probs()
        return math.log(p[index])

    def sample(self, rng: random.Random, k: int) -> list[int]:
        return rng.choices(range(len(self.logits)), weights=self.probs(), k=k)


def exact_kl(p_logits: Sequence[float], q_logits: Sequence[float]) -> float:
    """KL(p || q) of two categorical distributions given their logits."""
    p = softmax(p_logits)
    q = softmax(q_logits)
    return sum(pi * (math.log(pi) - math.log(qi)) for pi, qi in zip(p, q) if pi > 0)


def toy_objective(
    logits: Sequence[float],
    ref_logits: Sequence[float],
    chosen: Sequence[int],
    logp_old: Sequence[float],
    adv: Sequence[float],
    cfg: GrpoConfig,
) -> float:
    """Eq-style objective as a function of the toy policy's logits.

    Surrogate over the sampled group plus exact categorical KL against the
    reference policy; used for gradient checking and the simulator update.
    """
    probs = softmax(logits)
    lo, hi = 1.0 - cfg.epsilon, 1.0 + cfg.epsilon
    total = 0.0
    for i, idx in enumerate(chosen):
        ratio = math.exp(math.log(probs[idx]) - logp_old[i])
        total += min(ratio * adv[i], _clip(ratio, lo, hi) * adv[i])
    surrogate = total / len(chosen)
    return surrogate - cfg.beta * exact_kl(logits, ref_logits)


def toy_objective_grad(
    logits: Sequence[float],
    ref_logits: Sequence[float],
    chosen: Sequence[int],
    logp_old: Sequence[float],
    adv: Sequence[float],
    cfg: GrpoConfig,
) -> list[float]:
    """Analytic gradient of toy_objective w.r.t. the logits."""
    n = len(logits)
    probs = softmax(logits)
    lo, hi = 1.0 - cfg.epsilon, 1.0 + cfg.epsilon
    grad = [0.0] * n
    g = len(chosen)
    for i, idx in enumerate(chosen):
        ratio = math.exp(math.log(probs[idx]) - logp_old[i])
        a = adv[i]
        unclipped = ratio * a
        clipped = _clip(ratio, lo, hi) * a
        if unclipped <= clipped:
            # active branch is ratio * a; d ratio / d logit_k = ratio * (1[k=idx] - p_k)
            coeff = a * ratio
        elif lo <= ratio <= hi:
            coeff = a * ratio  # clip inactive: same derivative
        else:
            coeff = 0.0  # clipped branch selected and saturated
        if coeff:
            for k in range(n):
                grad[k] += coeff * ((1.0 if k == idx else 0.0) - probs[k]) / g

    if cfg.beta:
        kl = exact_kl(logits, ref_logits)
        ref_probs = softmax(ref_logits)
        for k in range(n):
            d_k = math.log(probs[k]) - math.log(ref_probs[k])
            grad[k] -= cfg.beta * probs[k] * (d_k - kl)
    return grad


@dataclass(frozen=True)
class TrajectoryPoint:
    step: int
    mean_reward: float
    std_reward: float
    probs: tuple[float, ...]

    def to_json_dict(self) -> dict:
        return {
            "step": self.step,
            "mean_reward": self.mean_reward,
            "std_reward": self.std_reward,
            "probs": list(self.probs),
        }


def simulate_training(
    pool: Sequence[str],
    gold=None,
    steps: int = 200,
    cfg: GrpoConfig = GrpoConfig(group_size=4),
    learning_rate: float = 0.5,
    seed: int = 0,
    *,
    reward_table: Optional[Sequence[float]] = None,
    scorer=None,
    normalize_std: bool = False,
) -> list[TrajectoryPoint]:
    """Reward-driven ascent of a categorical policy over a candidate pool.

    Each step samples a group from the current policy (the on-policy snapshot
    doubles as the old policy), scores it with the reward engine or the
    injected reward table, and takes one analytic gradient step on the
    objective. Deterministic for a given seed.
    """
    if len(pool) < 2:
        raise ValueError("pool needs at least two candidates")
    if cfg.group_size < 2:
        raise ValueError("simulator needs group_size >= 2")

    if reward_table is not None:
        if len(reward_table) != len(pool):
            raise ValueError("reward_table length must match pool")
        rewards_by_index = list(reward_table)
    else:
        if scorer is None or gold is None:
            raise ValueError("either reward_table or (scorer, gold) is required")
        rewards_by_index = [scorer.score_response(text, gold).total for text in pool]

    rng = random.Random(seed)
    policy = ToyPolicy(logits=[0.0] * len(pool))
    ref_logits = list(policy.logits)
    trajectory: list[TrajectoryPoint] = []

    for step in range(steps):
        snapshot = policy.probs()  # old policy refreshes every step
        chosen = rng.choices(range(len(pool)), weights=snapshot, k=cfg.group_size)
        group_rewards = [rewards_by_index[i] for i in chosen]
        adv = advantages(group_rewards, normalize_std=normalize_std)
        logp_old = [math.log(snapshot[i]) for i in chosen]
        grad = toy_objective_grad(
            policy.logits, ref_logits, chosen, logp_old, adv, cfg,
        )
        policy.logits = [x + learning_rate * g for x, g in zip(policy.logits, grad)]

        mean_r = sum(group_rewards) / len(group_rewards)
        var = sum((r - mean_r) ** 2 for r in group_rewards) / len(group_rewards)
        trajectory.append(TrajectoryPoint(
            step=step,
            mean_reward=mean_r,
            std_reward=math.sqrt(var),
            probs=tuple(policy.probs()),
        ))
    return trajectory
