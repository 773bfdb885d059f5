"""Problem parameters, derived exponents, and the two scalar recurrences.

Everything downstream (fields, functionals, the circle construction) consumes
a :class:`ProblemParams`.  The exponent ``gamma_q = 2/(2-q)`` is the critical
homogeneity of the sublinear equation

    -Delta u = lambda_+ (u^+)^(q-1) - lambda_- (u^-)^(q-1),

and ``beta_q`` is the largest integer strictly below it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class ProblemParams:
    """Coefficients of the sublinear equation.

    q            exponent in [1, 2)
    lambda_plus  coefficient of the positive phase, > 0
    lambda_minus coefficient of the negative phase, >= 0
    mu           overall scale of the nonlinearity (1 for the base equation,
                 0 turns the right hand side off, e.g. for harmonic test fields)
    """

    q: float = 1.0
    lambda_plus: float = 1.0
    lambda_minus: float = 1.0
    mu: float = 1.0

    def __post_init__(self):
        if not (1.0 <= self.q < 2.0):
            raise ValueError(f"q must lie in [1, 2), got {self.q}")
        if self.lambda_plus <= 0.0:
            raise ValueError("lambda_plus must be > 0")
        if self.lambda_minus < 0.0:
            raise ValueError("lambda_minus must be >= 0")
        if self.mu < 0.0:
            raise ValueError("mu must be >= 0")


def gamma_q(params: ProblemParams) -> float:
    """Critical homogeneity 2/(2-q); equals 2 for q=1 and grows to infinity as q -> 2."""
    return 2.0 / (2.0 - params.q)


def beta_q(params: ProblemParams) -> int:
    """Largest positive integer strictly smaller than 2/(2-q)."""
    g = gamma_q(params)
    # g is an integer iff 2/(2-q) hits an integer exactly in floating point;
    # the admissible orders below the threshold are 1..beta_q.
    gi = round(g)
    if abs(g - gi) < 1e-12:
        return int(gi) - 1
    return int(math.floor(g))


def lambda_Nq(params: ProblemParams, N: int = 2) -> float:
    """Eigenvalue gamma_q*(N-2+gamma_q) of the angular equation; gamma_q^2 when N=2."""
    g = gamma_q(params)
    return g * (N - 2 + g)


def k_bar(params: ProblemParams) -> int:
    """Minimum positive integer >= 2*gamma_q; constructions need wave count k > k_bar."""
    return int(math.ceil(2.0 * gamma_q(params) - 1e-12))


@dataclass(frozen=True)
class DerivedExponents:
    gamma_q: float
    beta_q: int
    lambda_Nq: float
    k_bar: int


def derived_exponents(params: ProblemParams, N: int = 2) -> DerivedExponents:
    return DerivedExponents(
        gamma_q=gamma_q(params),
        beta_q=beta_q(params),
        lambda_Nq=lambda_Nq(params, N),
        k_bar=k_bar(params),
    )


def _is_integer(x: float, tol: float = 1e-12) -> bool:
    return abs(x - round(x)) < tol


def beta_k_sequence(params: ProblemParams, K: int, deltas="auto") -> list[float]:
    """Iterate beta_1 = q+1, beta_k = (q-1)*beta_{k-1} + 2 - delta_k.

    With deltas="auto" the perturbations are chosen deterministically so the
    sequence is strictly increasing, never an integer, and stays below
    2/(2-q):  delta_k = 0 when the unperturbed value is non-integer, else the
    smaller of 2^(-k-1) and half the remaining gap to the limit.

    Explicit deltas must satisfy 0 <= deltas[k] < 2^(-k-1-...): the k-th entry
    (1-based index k) must lie in [0, 2^-k).
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    q = params.q
    auto = isinstance(deltas, str) and deltas == "auto"
    if not auto:
        deltas = list(deltas)
        if len(deltas) < K:
            raise ValueError(f"need {K} deltas, got {len(deltas)}")
        for k, d in enumerate(deltas[:K], start=1):
            if not (0.0 <= d < 2.0 ** (-k)):
                raise ValueError(f"delta_{k}={d} outside [0, 2^-{k})")

    limit = gamma_q(params)
    seq = []
    beta = q + 1.0
    if auto:
        # delta_1 = 0; beta_1 = q+1 is non-integer for q in (1,2) and equals 2 for q=1.
        pass
    else:
        beta = q + 1.0 - 0.0  # beta_1 never takes a delta in the recurrence
    seq.append(beta)
    for k in range(2, K + 1):
        raw = (q - 1.0) * seq[-1] + 2.0
        if auto:
            if _is_integer(raw):
                gap = (2.0 - (2.0 - q) * seq[-1]) / 2.0
                delta = min(2.0 ** (-k - 1), gap) if gap > 0 else 0.0
            else:
                delta = 0.0
        else:
            delta = deltas[k - 1]
        val = raw - delta
        if auto and q > 1.0:
            # double precision saturates near the limit; keep the value one
            # ulp below it so it never lands on the limit or an integer
            val = min(val, math.nextafter(limit, 0.0))
        seq.append(val)
    return seq


def sigma_k_sequence(params: ProblemParams, K: int) -> list[float]:
    """sigma_0 = 1, sigma_k = ((2 + q*sigma_{k-1})/2)/2 + sigma_{k-1}/2.

    Strictly increasing and converging to 2/(2-q); the returned list includes
    sigma_0, so it has K+1 entries.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    q = params.q
    seq = [1.0]
    for _ in range(K):
        s = seq[-1]
        seq.append(0.5 * ((2.0 + q * s) / 2.0) + 0.5 * s)
    return seq
