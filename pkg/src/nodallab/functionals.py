"""Quadrature evaluation of the boundary/bulk functionals and their checkers.

All integrals are over circles and disks centered at a point x0 of the unit
disk: trapezoid rule in the angle (spectrally accurate for smooth periodic
integrands, order 2 across nodal-line kinks) and composite Simpson in the
radius.  The two-parameter rescaled energy

    W(gamma, t; r) = r^(-(N-2+2 gamma)) * D_t(r) - gamma r^(-(N-1+2 gamma)) * H(r)

is radius-constant exactly on gamma-homogeneous fields, nondecreasing for
t = 2 and gamma >= 2/(2-q), and its small-radius divergence locates the
vanishing order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import DomainError, PlanarField
from .params import ProblemParams, gamma_q

N_DIM = 2
N_THETA = 1024
N_RHO_PANELS = 512


class DegenerateSphereError(ValueError):
    """H on the circle fell below the noise floor: x0 is a high-order zero."""


class PreconditionError(ValueError):
    """Arguments outside the range where the statement applies."""


class InconclusiveError(ValueError):
    """Trend classification ambiguous at the given grid; carries the bracket."""

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket


@dataclass
class FunctionalTrace:
    """A functional sampled on a strictly increasing radius ladder."""

    radii: np.ndarray
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        self.radii = np.asarray(self.radii, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if np.any(np.diff(self.radii) <= 0):
            raise ValueError("radii must be strictly increasing")
        if self.radii.shape != self.values.shape:
            raise ValueError("radii and values must have equal length")

    def save_csv(self, path):
        with open(path, "w") as fh:
            fh.write("r,value\n")
            for r, v in zip(self.radii, self.values):
                fh.write(f"{format(r, '.17g')},{format(v, '.17g')}\n")


def eval_F(params: ProblemParams, s):
    """mu * (lambda_+ (s^+)^q + lambda_- (s^-)^q); nonnegative, F(0)=0."""
    s = np.asarray(s, dtype=float)
    sp = np.clip(s, 0.0, None)
    sm = np.clip(-s, 0.0, None)
    return params.mu * (params.lambda_plus * sp**params.q + params.lambda_minus * sm**params.q)


def _check_ball(x0, r):
    x0 = np.asarray(x0, dtype=float)
    if r <= 0:
        raise DomainError(f"radius must be positive, got {r}")
    if np.hypot(x0[0], x0[1]) + r > 1.0 + 1e-12:
        raise DomainError(f"ball B_{r}({x0}) escapes the unit disk")
    return x0


def _theta_nodes(n_theta):
    return 2.0 * np.pi * np.arange(n_theta) / n_theta


def eval_H(field: PlanarField, x0, r, n_theta=N_THETA) -> float:
    """Integral of u^2 over the circle of radius r around x0."""
    x0 = _check_ball(x0, r)
    th = _theta_nodes(n_theta)
    v = field(x0[0] + r * np.cos(th), x0[1] + r * np.sin(th))
    return float(r * 2.0 * np.pi / n_theta * np.sum(v * v))


def h_floor(field: PlanarField, r) -> float:
    s = field.scale()
    return 1e-14 * max(1.0, s * s) * r ** (N_DIM - 1)


def _bulk_integrals(field, x0, r, n_theta, n_rho):
    """Disk integrals of |grad u|^2 and F(u) by polar quadrature.

    Simpson in rho over [0, r] with n_rho panels, trapezoid in theta.
    """
    th = _theta_nodes(n_theta)
    ct, st = np.cos(th), np.sin(th)
    rhos = np.linspace(0.0, r, n_rho + 1)
    X = x0[0] + np.outer(rhos, ct)
    Y = x0[1] + np.outer(rhos, st)
    gx, gy = field.grad(X, Y)
    grad2 = gx * gx + gy * gy
    fval = eval_F(field.params, field(X, Y))
    dth = 2.0 * np.pi / n_theta
    ring_grad2 = rhos * np.sum(grad2, axis=1) * dth
    ring_f = rhos * np.sum(fval, axis=1) * dth
    # the rho=0 ring carries zero weight; its integrand is finite anyway
    w = np.ones(n_rho + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    h = r / n_rho
    return h / 3.0 * np.dot(w, ring_grad2), h / 3.0 * np.dot(w, ring_f)


def eval_Dt(field: PlanarField, x0, r, t, n_theta=N_THETA, n_rho=N_RHO_PANELS) -> float:
    """D_t = integral over B_r of |grad u|^2 - (t/q) F(u)."""
    x0 = _check_ball(x0, r)
    dgrad, df = _bulk_integrals(field, x0, r, n_theta, n_rho)
    return float(dgrad - t / field.params.q * df)


def eval_Nt(field: PlanarField, x0, r, t, n_theta=N_THETA, n_rho=N_RHO_PANELS) -> float:
    """Frequency-like quotient r * D_t / H; needs H above its noise floor."""
    H = eval_H(field, x0, r, n_theta)
    if H <= h_floor(field, r):
        raise DegenerateSphereError(f"H({r}) = {H} below floor; x0 is a high-order zero")
    D = eval_Dt(field, x0, r, t, n_theta, n_rho)
    return float(r * D / H)


def eval_W(field: PlanarField, x0, r, gamma, t, n_theta=N_THETA, n_rho=N_RHO_PANELS) -> float:
    D = eval_Dt(field, x0, r, t, n_theta, n_rho)
    H = eval_H(field, x0, r, n_theta)
    return float(r ** -(N_DIM - 2 + 2 * gamma) * D - gamma * r ** -(N_DIM - 1 + 2 * gamma) * H)


def w_vs_frequency_residual(field, x0, r, gamma, t, n_theta=N_THETA, n_rho=N_RHO_PANELS):
    """Residual of W = H r^(-(N-1+2 gamma)) (N_t - gamma), relative."""
    H = eval_H(field, x0, r, n_theta)
    if H <= h_floor(field, r):
        raise DegenerateSphereError(f"H({r}) below floor")
    D = eval_Dt(field, x0, r, t, n_theta, n_rho)
    W = r ** -(N_DIM - 2 + 2 * gamma) * D - gamma * r ** -(N_DIM - 1 + 2 * gamma) * H
    rhs = H * r ** -(N_DIM - 1 + 2 * gamma) * (r * D / H - gamma)
    return abs(W - rhs) / (1.0 + abs(W))


def eval_Phi(field: PlanarField, x0, r, gamma, n_theta=N_THETA, n_rho=N_RHO_PANELS) -> float:
    """Nonnegative bulk term (2N-(N-2)q)/(q r^(N-1+2 gamma)) * int_{B_r} F."""
    x0 = _check_ball(x0, r)
    _, df = _bulk_integrals(field, x0, r, n_theta, n_rho)
    q = field.params.q
    coeff = (2 * N_DIM - (N_DIM - 2) * q) / (q * r ** (N_DIM - 1 + 2 * gamma))
    return float(coeff * df)


def h1_norm(field: PlanarField, x0, r, n_theta=N_THETA, n_rho=N_RHO_PANELS) -> float:
    """Scale-invariant H^1 norm: sqrt(r^(2-N) int |grad u|^2 + r^(1-N) int_S u^2)."""
    x0 = _check_ball(x0, r)
    dgrad, _ = _bulk_integrals(field, x0, r, n_theta, n_rho)
    H = eval_H(field, x0, r, n_theta)
    return float(np.sqrt(r ** -(N_DIM - 2) * dgrad + r ** -(N_DIM - 1) * H))


def trace(field, functional, x0, radii, gamma=None, t=None, n_theta=N_THETA, n_rho=N_RHO_PANELS):
    """Sample one functional on a radius ladder; returns a FunctionalTrace."""
    radii = np.asarray(radii, dtype=float)
    vals = []
    for r in radii:
        if functional == "H":
            vals.append(eval_H(field, x0, r, n_theta))
        elif functional == "D":
            vals.append(eval_Dt(field, x0, r, t, n_theta, n_rho))
        elif functional == "N":
            vals.append(eval_Nt(field, x0, r, t, n_theta, n_rho))
        elif functional == "W":
            vals.append(eval_W(field, x0, r, gamma, t, n_theta, n_rho))
        elif functional == "Phi":
            vals.append(eval_Phi(field, x0, r, gamma, n_theta, n_rho))
        elif functional == "h1":
            vals.append(h1_norm(field, x0, r, n_theta, n_rho))
        else:
            raise ValueError(f"unknown functional {functional!r}")
    label = functional
    if gamma is not None:
        label += f" gamma={gamma}"
    if t is not None:
        label += f" t={t}"
    return FunctionalTrace(radii, np.array(vals), label)


def _sphere_terms(field, x0, r, gamma, n_theta):
    """Circle integrals of (u_nu - gamma u / r)^2 and F(u)."""
    th = _theta_nodes(n_theta)
    ct, st = np.cos(th), np.sin(th)
    x = x0[0] + r * ct
    y = x0[1] + r * st
    v = field(x, y)
    gx, gy = field.grad(x, y)
    vnu = gx * ct + gy * st
    dth = 2.0 * np.pi / n_theta
    term = r * np.sum((vnu - gamma / r * v) ** 2) * dth
    fterm = r * np.sum(eval_F(field.params, v)) * dth
    return term, fterm


def w_prime_rhs(field, x0, r, gamma, t, n_theta=N_THETA, n_rho=N_RHO_PANELS):
    """Closed-form derivative of W(gamma, t) with respect to r."""
    x0 = _check_ball(x0, r)
    q = field.params.q
    sq_term, f_circle = _sphere_terms(field, x0, r, gamma, n_theta)
    _, f_bulk = _bulk_integrals(field, x0, r, n_theta, n_rho)
    p = N_DIM - 2 + 2 * gamma
    return (
        2.0 / r**p * sq_term
        + (2.0 - t) / (q * r**p) * f_circle
        + ((N_DIM - 2) * t - 2 * N_DIM + 2 * gamma * (t - q)) / (q * r ** (p + 1)) * f_bulk
    )


def check_derivative_identities(field, x0, radii, gamma, t, n_theta=N_THETA, n_rho=N_RHO_PANELS):
    """Compare centered finite differences of H and W against their closed forms.

    Returns a report dict with the max relative residuals over the ladder:
    the H' identity  H' = ((N-1)/r) H + 2 D_q,  and the W' expression built
    from circle and bulk integrals.
    """
    radii = np.asarray(radii, dtype=float)
    if np.any(np.diff(radii) <= 0):
        raise ValueError("radius ladder must be strictly increasing")
    q = field.params.q
    res_h = []
    res_w = []
    for r in radii:
        step = 1e-4 * r
        hp = (eval_H(field, x0, r + step, n_theta) - eval_H(field, x0, r - step, n_theta)) / (2 * step)
        H = eval_H(field, x0, r, n_theta)
        Dq = eval_Dt(field, x0, r, q, n_theta, n_rho)
        rhs = (N_DIM - 1) / r * H + 2.0 * Dq
        res_h.append(abs(hp - rhs) / (1.0 + abs(hp)))

        wp = (
            eval_W(field, x0, r + step, gamma, t, n_theta, n_rho)
            - eval_W(field, x0, r - step, gamma, t, n_theta, n_rho)
        ) / (2 * step)
        rhs_w = w_prime_rhs(field, x0, r, gamma, t, n_theta, n_rho)
        res_w.append(abs(wp - rhs_w) / (1.0 + abs(wp)))
    return {
        "H_prime_max_residual": float(np.max(res_h)),
        "W_prime_max_residual": float(np.max(res_w)),
        "radii": radii.tolist(),
        "gamma": gamma,
        "t": t,
    }


def monotonicity_scan(field, x0, gamma, radii, n_theta=N_THETA, n_rho=N_RHO_PANELS):
    """Check that W(gamma, 2) is nondecreasing along the ladder.

    Only meaningful for gamma >= 2/(2-q); smaller gamma raises a
    PreconditionError.  Returns {"verdict": "monotone"} or the first
    violating radius.
    """
    gq = gamma_q(field.params)
    if gamma < gq - 1e-12:
        raise PreconditionError(f"gamma={gamma} below critical homogeneity {gq}")
    radii = np.asarray(radii, dtype=float)
    ws = [eval_W(field, x0, r, gamma, 2.0, n_theta, n_rho) for r in radii]
    for j in range(len(ws) - 1):
        tol = 1e-6 * (1.0 + abs(ws[j]))
        if ws[j + 1] < ws[j] - tol:
            return {"verdict": "violation", "radius": float(radii[j + 1]),
                    "drop": float(ws[j] - ws[j + 1]), "values": ws}
    return {"verdict": "monotone", "values": ws}


def transition_exponent(field, x0, gammas, radii, n_theta=N_THETA, n_rho=N_RHO_PANELS,
                        eps_u=1e-6, slope_tol=0.02):
    """Bracket the exponent where W(gamma, 2; r -> 0) switches to -infinity.

    For each gamma on the grid the small-r trend of W is classified on the
    smallest ladder decade: on homogeneous data W behaves like C * r^p with
    p = 2 (order - gamma), so W is flagged as diverging negative when it is
    negative at r_min and log|W| has negative slope against log r (|W| grows
    as r shrinks).  The estimate is the midpoint of the bracketing pair;
    an ambiguous classification raises InconclusiveError with the bracket.
    """
    x0 = np.asarray(x0, dtype=float)
    u0 = float(np.abs(field(x0[0], x0[1])))
    if u0 > eps_u * field.scale():
        raise PreconditionError(f"|u(x0)| = {u0} too large; x0 is not a nodal point")
    gammas = np.sort(np.asarray(gammas, dtype=float))
    radii = np.sort(np.asarray(radii, dtype=float))
    # D_2 and H once per radius; W for every gamma is then closed-form
    DH = [(eval_Dt(field, x0, r, 2.0, n_theta, n_rho), eval_H(field, x0, r, n_theta))
          for r in radii]
    W = np.empty((len(gammas), len(radii)))
    for i, g in enumerate(gammas):
        for j, r in enumerate(radii):
            D, H = DH[j]
            W[i, j] = r ** -(2 * g) * D - g * r ** -(1 + 2 * g) * H
    floor = 1e-10 * (1.0 + np.max(np.abs(W)))
    decade = radii <= radii[0] * 10.0 + 1e-300
    if np.count_nonzero(decade) < 3:
        decade = np.zeros_like(decade)
        decade[: max(3, len(radii) // 3)] = True

    def classify(row):
        if row[0] > -floor:
            return "bounded"
        mask = decade & (np.abs(row) > floor)
        if np.count_nonzero(mask) < 2:
            return "bounded"
        slope = np.polyfit(np.log(radii[mask]), np.log(np.abs(row[mask])), 1)[0]
        if slope < -slope_tol:
            return "divergent"
        return "bounded"

    kinds = [classify(W[i]) for i in range(len(gammas))]
    if "divergent" not in kinds:
        raise InconclusiveError("no divergent gamma on the grid", bracket=(gammas[-1], None))
    first_div = kinds.index("divergent")
    if first_div == 0:
        raise InconclusiveError("every gamma diverges", bracket=(None, gammas[0]))
    if "bounded" in kinds[first_div:]:
        bad = first_div + kinds[first_div:].index("bounded")
        raise InconclusiveError(
            f"non-monotone classification near gamma={gammas[bad]}",
            bracket=(float(gammas[first_div - 1]), float(gammas[first_div])),
        )
    lo, hi = gammas[first_div - 1], gammas[first_div]
    return float(0.5 * (lo + hi))
