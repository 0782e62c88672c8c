"""Evaluators for the guaranteed excess-risk inequalities.

These report what the theory promises for given moment constants and
grid geometry; they make no measurement on data.  The moment constants
(chi, sigma, and the per-subspace variants) and the absolute constants
c0, c1 are caller inputs, defaulting to 1, and are not estimated here.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence


class BoundsError(ValueError):
    """Invalid inputs to a bound evaluator."""


class BoundsWarning(UserWarning):
    """A stated sample-size condition for the bound does not hold."""


@dataclass(frozen=True)
class BoundsInput:
    """Inputs shared by the bound evaluators.

    chi bounds the L4 norm by a multiple of the L2 norm over the class
    (never below 1), sigma bounds the noise interaction, epsilon is the
    free trade-off parameter.  The optional fields feed the rate
    evaluators for the l1 learner and the subspace least-squares
    learner.
    """

    chi: float
    sigma: float
    epsilon: float
    v_count: int
    n: int
    grid_size: int
    c0: float = 1.0
    c1: float = 1.0
    zeta_norm: float = 1.0
    sparsity: int | None = None
    dim: int | None = None
    chi_lambda: float | None = None
    sigma_lambda: float | None = None
    d_lambda: int | None = None

    def __post_init__(self) -> None:
        if self.chi < 1.0:
            raise BoundsError(f"chi must be >= 1 (L4 dominates L2), got {self.chi}")
        if self.sigma < 0:
            raise BoundsError(f"sigma must be >= 0, got {self.sigma}")
        if self.epsilon <= 0:
            raise BoundsError(f"epsilon must be > 0, got {self.epsilon}")
        if self.v_count < 1 or self.n < 1 or self.grid_size < 1:
            raise BoundsError("v_count, n and grid_size must be positive")


@dataclass(frozen=True)
class OracleInequalityConstants:
    """Slope/offset pair of the oracle inequality and the probability
    with which it holds; a >= 1 makes the inequality vacuous."""

    a: float
    b: float
    prob: float

    @property
    def vacuous(self) -> bool:
        return self.a >= 1.0


def oracle_inequality_constants(inp: BoundsInput) -> OracleInequalityConstants:
    """(1 - a) * excess(selected) <= (1 + 3a) * excess(best) + 2b with
    probability at least prob, where
    a = 8 chi^2 sqrt(2V/N) + 2 sqrt(2) eps and b = 64 V sigma^2 / (N eps)."""
    a = 8.0 * inp.chi ** 2 * math.sqrt(2.0 * inp.v_count / inp.n) + 2.0 * math.sqrt(2.0) * inp.epsilon
    b = 64.0 * inp.v_count * inp.sigma ** 2 / (inp.n * inp.epsilon)
    prob = 1.0 - inp.grid_size ** 2 * math.exp(-inp.v_count / 48.0)
    return OracleInequalityConstants(a=a, b=b, prob=min(max(prob, 0.0), 1.0))


def lasso_rate(inp: BoundsInput, block_size: int) -> float:
    """Guaranteed l1-learner excess risk on an uncorrupted block:
    c1 * zeta^2 * s * log(e d / s) / |B|."""
    if inp.sparsity is None or inp.dim is None:
        raise BoundsError("lasso_rate needs sparsity and dim")
    s, d = inp.sparsity, inp.dim
    if s < 1 or d < s:
        raise BoundsError(f"need 1 <= sparsity <= dim, got s={s}, d={d}")
    if block_size < 1:
        raise BoundsError(f"block_size must be >= 1, got {block_size}")
    log_term = math.log(math.e * d / s)
    if block_size < s * log_term:
        warnings.warn(
            f"block size {block_size} below s*log(ed/s) = {s * log_term:.3g}; "
            "the rate is not guaranteed in this regime",
            BoundsWarning,
            stacklevel=2,
        )
    return inp.c1 * inp.zeta_norm ** 2 * s * log_term / block_size


def effective_block_size(n: int, v_count: int, k_min: int) -> int:
    """Size of the worst block the guarantee has to rely on:
    floor(n / max(4V, 2^k_min))."""
    if n < 1 or v_count < 1 or k_min < 0:
        raise BoundsError("n, v_count must be positive and k_min >= 0")
    return n // max(4 * v_count, 2 ** k_min)


def ensemble_guarantee_rhs(
    inp: BoundsInput,
    rho: Callable[[float, int], float],
    lambdas: Sequence[float],
    k_min: int,
) -> float:
    """Ensemble guarantee: (1 + 3a) * min over the grid of
    rho(lambda, effective block size) + 2b.

    rho must be non-increasing in its second argument (the block size);
    that monotonicity is the caller's contract."""
    if len(lambdas) == 0:
        raise BoundsError("lambda grid is empty")
    size = effective_block_size(inp.n, inp.v_count, k_min)
    consts = oracle_inequality_constants(inp)
    best = min(rho(lam, size) for lam in lambdas)
    return (1.0 + 3.0 * consts.a) * best + 2.0 * consts.b


def erm_rate(inp: BoundsInput, block_size: int, oracle_excess: float = 0.0) -> float:
    """Guaranteed subspace-least-squares excess risk on an uncorrupted
    block: oracle excess + 2 e^(1/48) * 256^2 * chi^12 * sigma^2 * d / |B|."""
    if inp.chi_lambda is None or inp.sigma_lambda is None or inp.d_lambda is None:
        raise BoundsError("erm_rate needs chi_lambda, sigma_lambda and d_lambda")
    if block_size < 1:
        raise BoundsError(f"block_size must be >= 1, got {block_size}")
    needed = (1600.0 * inp.chi_lambda ** 4) ** 2 * inp.d_lambda
    if block_size < needed:
        warnings.warn(
            f"block size {block_size} below (1600 chi^4)^2 d = {needed:.3g}; "
            "the rate is not guaranteed in this regime",
            BoundsWarning,
            stacklevel=2,
        )
    return (
        oracle_excess
        + 2.0
        * math.exp(1.0 / 48.0)
        * 256.0 ** 2
        * inp.chi_lambda ** 12
        * inp.sigma_lambda ** 2
        * inp.d_lambda
        / block_size
    )
