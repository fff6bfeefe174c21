"""Independent reference computations used to pin expected values.

Each oracle deliberately takes a different route from the implementation
it checks: quadrature instead of erfc, bisection instead of a closed-form
inverse, arbitrary-precision logs instead of float entropy, and direct
search over test channels instead of alternating minimization.
"""

import itertools
from decimal import Decimal, getcontext

import numpy as np
from scipy import integrate, optimize

import fblcrd as f


def gaussian_cdf_quadrature(t: float) -> float:
    """Phi(t) by adaptive quadrature of the normal density."""
    density = lambda u: np.exp(-0.5 * u * u) / np.sqrt(2.0 * np.pi)
    value, _ = integrate.quad(density, -40.0, t, epsabs=1e-13, epsrel=1e-13)
    return value


def q_inv_bisection(eps: float, lo=-12.0, hi=12.0) -> float:
    """Invert Q by bisection on the implementation's CDF."""
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if 1.0 - f.gaussian_cdf(mid) > eps:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def entropy_decimal(p: str, digits: int = 40) -> float:
    """Bernoulli entropy in nats at high precision (p given as a string)."""
    getcontext().prec = digits
    pd = Decimal(p)
    qd = Decimal(1) - pd
    h = -(pd * pd.ln() + qd * qd.ln())
    return float(h)


def rd_binary_grid(px, dmat, budget, step=1e-3):
    """Exhaustive grid search over binary test channels.

    Minimizes I(X;Y) over all 2x2 channels meeting the distortion budget,
    scanning both crossover parameters on a uniform grid.
    """
    px = np.asarray(px, dtype=float)
    a = np.arange(0.0, 1.0 + step / 2, step)
    b = np.arange(0.0, 1.0 + step / 2, step)
    aa, bb = np.meshgrid(a, b, indexing="ij")
    # channel rows: P(y=1|x=0) = aa, P(y=1|x=1) = bb
    q1 = px[0] * aa + px[1] * bb
    q0 = 1.0 - q1

    def xlog(p, q):
        with np.errstate(divide="ignore", invalid="ignore"):
            out = p * (np.log(p) - np.log(q))
        return np.where(p > 0, out, 0.0)

    mi = (px[0] * (xlog(1 - aa, q0) + xlog(aa, q1))
          + px[1] * (xlog(1 - bb, q0) + xlog(bb, q1)))
    dist = (px[0] * ((1 - aa) * dmat[0, 0] + aa * dmat[0, 1])
            + px[1] * ((1 - bb) * dmat[1, 0] + bb * dmat[1, 1]))
    feasible = dist <= budget + 1e-12
    return float(mi[feasible].min())


def rd_slsqp(px, dmat, budget, restarts=8, seed=0):
    """Direct constrained minimization of I(X;Y) over the channel simplex."""
    px = np.asarray(px, dtype=float)
    n_x, n_y = dmat.shape
    rng = np.random.default_rng(seed)

    def unpack(z):
        ch = z.reshape(n_x, n_y)
        return ch

    def mutual_information(z):
        ch = unpack(z)
        q = px @ ch
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.log(ch) - np.log(q)[None, :]
            term = np.where(ch > 0, ch * ratio, 0.0)
        return float(px @ term.sum(axis=1))

    cons = [{"type": "eq", "fun": lambda z, i=i: z.reshape(n_x, n_y)[i].sum() - 1.0}
            for i in range(n_x)]
    cons.append({"type": "ineq",
                 "fun": lambda z: budget - float(px @ (z.reshape(n_x, n_y) * dmat).sum(axis=1))})
    best = np.inf
    for _ in range(restarts):
        z0 = rng.dirichlet(np.ones(n_y), size=n_x).ravel()
        res = optimize.minimize(mutual_information, z0, method="SLSQP",
                                bounds=[(0.0, 1.0)] * (n_x * n_y),
                                constraints=cons,
                                options={"maxiter": 500, "ftol": 1e-12})
        if res.success and res.fun < best:
            best = float(res.fun)
    return best


def hamming_rd_uniform(alphabet_size: int, budget: float) -> float:
    """Closed-form rate-distortion of a uniform source under Hamming loss."""
    q = alphabet_size
    if budget >= (q - 1) / q:
        return 0.0
    return (np.log(q) - f.binary_entropy(budget)
            - budget * np.log(q - 1))


def allocation_search_two_states(curves, weights, budget, tol=1e-10):
    """Golden-section search over the single free allocation variable."""
    w0, w1 = weights
    floor0 = curves[0].floor
    floor1 = curves[1].floor
    lo = max(floor0, (budget - w1 * curves[1].zero_rate_distortion) / w0)
    hi = min(curves[0].zero_rate_distortion, (budget - w1 * floor1) / w0)

    def objective(d0):
        d1 = (budget - w0 * d0) / w1
        return (w0 * curves[0].rate_at(d0, tol=1e-10)
                + w1 * curves[1].rate_at(d1, tol=1e-10))

    phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    fc, fd = objective(c), objective(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = objective(d)
    d0 = 0.5 * (a + b)
    return d0, objective(d0)


def enumerate_pair_outcomes(instance):
    """All (x, s) outcomes of one letter with their probabilities."""
    pmf = instance.source.pmf
    outcomes = []
    for x, s in itertools.product(range(pmf.shape[0]), range(pmf.shape[1])):
        if pmf[x, s] > 0:
            outcomes.append(((x, s), pmf[x, s]))
    return outcomes
