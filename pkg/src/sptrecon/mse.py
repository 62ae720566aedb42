"""Closed-form average reconstruction error for the three transmission schemes.

Each sensor samples the correlated Gaussian source once per period T.  The
server rebuilds the target sensor's state by conditional-mean estimation
from the freshest useful packet, and the long-run time-averaged mean
squared error (MSE) admits closed forms:

* no inference       -- only the target's own packets are used;
* syn inference      -- all sensors transmit together at the period start,
                        the server uses the most spatially correlated packet
                        of the newest successful round;
* asyn inference     -- sensors transmit staggered by a time shift h, the
                        server always uses the latest success.

Throughout, eps denotes the fading-averaged block error probability, E the
squared temporal correlation over one period exp(-2 a T), and q its analog
over one time shift exp(-2 a h).  Spatial weights enter as exp(-2 b r_mn).

The module also provides the error bounds with respect to eps and with
respect to the spatial weights, the shape classifier for the asynchronous
error as a function of eps, and the analytic eps-derivative used to locate
the interior minimum when packet loss actually helps.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.optimize import brentq

from .blep import LinkParams, blep_average
from .errors import InvalidConfigError
from .field import SensorField, SourceParams


class Scheme(str, enum.Enum):
    NO_INFER = "no-infer"
    SYN_INFER = "syn-infer"
    ASYN_INFER = "asyn-infer"


@dataclass(frozen=True)
class SchemeConfig:
    """Transmission-scheme settings.

    scheme : one of the Scheme tags
    T      : transmission period in seconds (> packet delay tau)
    h      : time shift in seconds (asyn only; T_s <= h <= (T - tau)/(M-1))
    M      : number of sensors taking part (no-infer behaves as M = 1)
    m      : 1-based index of the target sensor / transmission slot
    """

    scheme: Scheme
    T: float = 0.150
    h: float | None = None
    M: int = 5
    m: int = 1

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if not self.T > 0:
            raise InvalidConfigError(f"period T must be > 0, got {self.T}")
        if self.M < 1:
            raise InvalidConfigError(f"M must be >= 1, got {self.M}")
        if not 1 <= self.m <= self.M:
            raise InvalidConfigError(f"target index {self.m} outside 1..{self.M}")
        if self.scheme is Scheme.ASYN_INFER:
            if self.M < 2:
                raise InvalidConfigError("asynchronous scheme needs M >= 2")
            if self.h is None:
                raise InvalidConfigError("asynchronous scheme needs a time shift h")
            if not self.h > 0:
                raise InvalidConfigError(f"time shift must be > 0, got {self.h}")


@dataclass(frozen=True)
class MseValue:
    """Average MSE plus an optional breakdown of named intermediate terms."""

    value: float
    components: dict = dc_field(default_factory=dict)

    def __float__(self):
        return self.value


@dataclass(frozen=True)
class ReindexedField:
    """Sensors sorted by descending squared spatial weight to the target.

    order   : 1-based sensor indices; the target comes first, ties broken
              by ascending index
    factors : exp(-2 b r_m,order[k]), non-increasing
    """

    order: tuple
    factors: tuple


def reindex_by_correlation(params: SourceParams, field: SensorField) -> ReindexedField:
    """Rank sensors by spatial usefulness for inferring the target."""
    m = field.target_index
    fac = field.target_factors(params.b, power=2.0)
    idx = sorted(range(1, field.n_sensors + 1),
                 key=lambda n: (-fac[n - 1], n != m, n))
    return ReindexedField(order=tuple(idx),
                          factors=tuple(float(fac[n - 1]) for n in idx))


# ---------------------------------------------------------------------------
# validation / shared pieces
# ---------------------------------------------------------------------------

def _check_timing(link: LinkParams, scheme: SchemeConfig, need_h: bool = False):
    if scheme.T <= link.tau:
        raise InvalidConfigError(
            f"period T={scheme.T} must exceed the packet delay tau={link.tau}"
        )
    if need_h:
        h_max = (scheme.T - link.tau) / (scheme.M - 1)
        if not (link.T_s <= scheme.h <= h_max + 1e-15):
            raise InvalidConfigError(
                f"time shift h={scheme.h} outside feasible band "
                f"[{link.T_s}, {h_max}]"
            )


def _eps(link: LinkParams, eps_bar) -> float:
    e = blep_average(link) if eps_bar is None else float(eps_bar)
    if not 0.0 <= e <= 1.0:
        raise InvalidConfigError(f"average BLEP must lie in [0, 1], got {e}")
    return e


def _prefactor(source: SourceParams, tau: float, T: float) -> float:
    """sigma2 gamma_o exp(-2 a tau) / (2 a T (gamma_o + 1))."""
    return (source.sigma2_x * source.gamma_o * math.exp(-2.0 * source.a * tau)
            / (2.0 * source.a * T * (source.gamma_o + 1.0)))


def _geo_ratio(eps: float, M: int) -> float:
    """(eps - eps^M) / (1 - eps), continuous at eps = 1 where it equals M-1."""
    if eps >= 1.0:
        return float(M - 1)
    return (eps - eps ** M) / (1.0 - eps)


def psi_values(source: SourceParams, scheme: SchemeConfig, eps: float) -> np.ndarray:
    """Slot weights Psi_n, n = 1..M, for the asynchronous scheme.

    Psi_n = 1 - q + exp(2 a h (n-1)) eps^(M-n) (1-eps) (q^M - E) / (1 - E eps^M)

    is the conditional expectation of 1 - exp(-2 a D) times (1 - q eps),
    where D is the gap until the next successful reception given the last
    success came from transmission slot n.
    """
    a, h, T, M = source.a, scheme.h, scheme.T, scheme.M
    q = math.exp(-2.0 * a * h)
    E = math.exp(-2.0 * a * T)
    P = math.exp(-2.0 * a * h * M) - E
    n = np.arange(1, M + 1)
    tail = np.exp(2.0 * a * h * (n - 1)) * eps ** (M - n) * (1.0 - eps) * P
    return (1.0 - q) + tail / (1.0 - E * eps ** M)


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------

def mse_no_infer(source: SourceParams, link: LinkParams, scheme: SchemeConfig,
                 eps_bar=None) -> MseValue:
    """Average MSE when only the target's own packets are used (M = 1 form)."""
    _check_timing(link, scheme)
    eps = _eps(link, eps_bar)
    E = math.exp(-2.0 * source.a * scheme.T)
    c = _prefactor(source, link.tau, scheme.T)
    val = source.sigma2_x - c * (1.0 - E) * (1.0 - eps) / (1.0 - E * eps)
    return MseValue(val, {"eps_bar": eps})


def mse_syn_infer(source: SourceParams, field: SensorField, link: LinkParams,
                  scheme: SchemeConfig, eps_bar=None) -> MseValue:
    """Average MSE of the synchronous inference scheme.

    sigma2 - c (1-E) (1-eps) sum_s fac_s eps^(s-1) / (1 - E eps^M)
    with fac_s the squared spatial weights in descending order (the server
    picks the most correlated packet of the newest successful round).
    """
    _check_timing(link, scheme)
    eps = _eps(link, eps_bar)
    ranked = reindex_by_correlation(source, field)
    return _syn_value(source, link, scheme, eps, np.asarray(ranked.factors))


def mse_syn_infer_approx(source: SourceParams, mssc_value: float, link: LinkParams,
                         scheme: SchemeConfig, eps_bar=None) -> MseValue:
    """Synchronous closed form with every non-target weight set to the MSSC."""
    if scheme.M < 2:
        raise InvalidConfigError("the MSSC approximation needs M >= 2")
    _check_timing(link, scheme)
    eps = _eps(link, eps_bar)
    E = math.exp(-2.0 * source.a * scheme.T)
    c = _prefactor(source, link.tau, scheme.T)
    # (1-eps) * sum_s fac_s eps^(s-1) collapses to (1-eps) + mssc (eps - eps^M)
    num = (1.0 - eps) + mssc_value * (eps - eps ** scheme.M)
    val = source.sigma2_x - c * (1.0 - E) * num / (1.0 - E * eps ** scheme.M)
    return MseValue(val, {"eps_bar": eps, "mssc": mssc_value})


def _syn_value(source, link, scheme, eps, factors_desc) -> MseValue:
    M = scheme.M
    if len(factors_desc) != M:
        raise InvalidConfigError(
            f"field has {len(factors_desc)} sensors but scheme.M = {M}"
        )
    E = math.exp(-2.0 * source.a * scheme.T)
    c = _prefactor(source, link.tau, scheme.T)
    s = np.arange(1, M + 1)
    series = float(np.sum(factors_desc * eps ** (s - 1)))
    val = (source.sigma2_x
           - c * (1.0 - E) * (1.0 - eps) * series / (1.0 - E * eps ** M))
    return MseValue(val, {"eps_bar": eps, "series": series})


def mse_asyn_infer(source: SourceParams, field: SensorField, link: LinkParams,
                   scheme: SchemeConfig, eps_bar=None) -> MseValue:
    """Average MSE of the asynchronous inference scheme.

    sigma2 - c (1-eps) sum_n w_n Psi_n / (1 - q eps), with w_n the squared
    spatial weight of the sensor transmitting in slot n (slot order is the
    sensor index order).
    """
    _check_timing(link, scheme, need_h=True)
    eps = _eps(link, eps_bar)
    w = field.target_factors(source.b, power=2.0)
    if len(w) != scheme.M:
        raise InvalidConfigError(
            f"field has {len(w)} sensors but scheme.M = {scheme.M}"
        )
    return _asyn_value(source, link, scheme, eps, w)


def mse_asyn_infer_approx(source: SourceParams, mssc_value: float, link: LinkParams,
                          scheme: SchemeConfig, eps_bar=None) -> MseValue:
    """Asynchronous closed form with every non-target weight set to the MSSC."""
    if scheme.M < 2:
        raise InvalidConfigError("the MSSC approximation needs M >= 2")
    _check_timing(link, scheme, need_h=True)
    eps = _eps(link, eps_bar)
    w = np.full(scheme.M, mssc_value, dtype=float)
    w[scheme.m - 1] = 1.0
    out = _asyn_value(source, link, scheme, eps, w)
    out.components["mssc"] = mssc_value
    return out


def _asyn_value(source, link, scheme, eps, weights) -> MseValue:
    q = math.exp(-2.0 * source.a * scheme.h)
    psi = psi_values(source, scheme, eps)
    c = _prefactor(source, link.tau, scheme.T)
    S = float(np.dot(weights, psi))
    val = source.sigma2_x - c * (1.0 - eps) * S / (1.0 - q * eps)
    return MseValue(val, {"eps_bar": eps, "psi": psi, "weighted_psi_sum": S})


def average_mse(source, field, link, scheme, eps_bar=None) -> MseValue:
    """Dispatch to the closed form matching ``scheme.scheme``."""
    if scheme.scheme is Scheme.NO_INFER:
        return mse_no_infer(source, link, scheme, eps_bar)
    if scheme.scheme is Scheme.SYN_INFER:
        return mse_syn_infer(source, field, link, scheme, eps_bar)
    return mse_asyn_infer(source, field, link, scheme, eps_bar)


# ---------------------------------------------------------------------------
# eps-derivative of the asynchronous form, interior minimizer, shape classifier
# ---------------------------------------------------------------------------

def dpsi_deps(source: SourceParams, scheme: SchemeConfig, eps: float) -> np.ndarray:
    """d Psi_n / d eps for n = 1..M.

    exp(2ah(n-1)) (q^M - E) eps^(M-n-1)
        [ (M-n)(1-eps) - eps + E eps^M (n(1-eps) + eps) ] / (1 - E eps^M)^2

    The n = M term is evaluated with the eps factored in, so eps = 0 is fine.
    """
    a, h, T, M = source.a, scheme.h, scheme.T, scheme.M
    E = math.exp(-2.0 * a * T)
    P = math.exp(-2.0 * a * h * M) - E
    den = (1.0 - E * eps ** M) ** 2
    n = np.arange(1, M + 1)
    pref = np.exp(2.0 * a * h * (n - 1)) * P / den
    out = np.empty(M, dtype=float)
    head = n[:-1]
    bracket = ((M - head) * (1.0 - eps) - eps
               + E * eps ** M * (head * (1.0 - eps) + eps))
    out[:-1] = pref[:-1] * eps ** (M - head - 1) * bracket
    # slot M: eps^(-1) * (-eps + E eps^M (M(1-eps) + eps)) = -1 + E eps^(M-1) (...)
    out[-1] = pref[-1] * (-1.0 + E * eps ** (M - 1) * (M * (1.0 - eps) + eps))
    return out


def dmse_asyn_deps(source: SourceParams, field_or_weights, link: LinkParams,
                   scheme: SchemeConfig, eps: float) -> float:
    """Analytic d MSE / d eps for the asynchronous scheme.

    With S(eps) = sum_n w_n Psi_n(eps) and q = exp(-2ah):

        d MSE / d eps = -c [ (1-eps)(1-q eps) S' - (1-q) S ] / (1-q eps)^2
    """
    w = _weights_of(field_or_weights, source, scheme)
    q = math.exp(-2.0 * source.a * scheme.h)
    S = float(np.dot(w, psi_values(source, scheme, eps)))
    Sp = float(np.dot(w, dpsi_deps(source, scheme, eps)))
    c = _prefactor(source, link.tau, scheme.T)
    num = (1.0 - eps) * (1.0 - q * eps) * Sp - (1.0 - q) * S
    return -c * num / (1.0 - q * eps) ** 2


def _weights_of(field_or_weights, source, scheme):
    if isinstance(field_or_weights, SensorField):
        w = field_or_weights.target_factors(source.b, power=2.0)
    else:
        w = np.asarray(field_or_weights, dtype=float)
    if len(w) != scheme.M:
        raise InvalidConfigError(f"need {scheme.M} spatial weights, got {len(w)}")
    return w


def eps_star_asyn(source, field_or_weights, link, scheme, grid_size=512,
                  tol=1e-10):
    """Global minimizer of the asynchronous MSE over eps in [0, 1).

    Scans a dense grid, then refines the best interior cell by bracketed
    root finding on the analytic eps-derivative.  Returns (eps_star, mse).
    The error is not convex in eps for every geometry (it can rise, dip,
    then rise again), so a global scan rather than a single root chase is
    required for a valid bound.
    """
    w = _weights_of(field_or_weights, source, scheme)

    def val(e):
        return _asyn_value(source, link, scheme, e, w).value

    grid = np.linspace(0.0, 1.0 - 1e-9, grid_size)
    vals = np.array([val(e) for e in grid])
    k = int(np.argmin(vals))
    if k == 0:
        return 0.0, float(vals[0])

    dm = lambda e: dmse_asyn_deps(source, w, link, scheme, e)
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, grid_size - 1)]
    try:
        if dm(lo) < 0.0 < dm(hi):
            root = brentq(dm, lo, hi, xtol=tol)
            return float(root), val(float(root))
    except ValueError:
        pass
    return float(grid[k]), float(vals[k])


def upsilon(source: SourceParams, field: SensorField, link: LinkParams,
            scheme: SchemeConfig, ordering: str = "transmission") -> float:
    """Spatial-correlation threshold separating the two eps-shapes.

    For h != T/M the asynchronous error dips then rises in eps when the
    MSSC is below this value, and is monotone increasing otherwise.  The
    formula uses the squared spatial weights of the sensors in the last two
    transmission slots (M-1 and M); with ``ordering='reindexed'`` the two
    weakest weights are used instead.  The transmission-order reading is the
    one consistent with the sign of the eps-derivative at eps -> 0, which is
    driven by who covers the wrap-around gap at the period boundary.
    """
    _check_timing(link, scheme, need_h=True)
    a, h, T, M = source.a, scheme.h, scheme.T, scheme.M
    if ordering == "transmission":
        w = field.target_factors(source.b, power=2.0)
        w_pen, w_last = float(w[M - 2]), float(w[M - 1])
    elif ordering == "reindexed":
        ranked = reindex_by_correlation(source, field)
        w_pen, w_last = ranked.factors[-2], ranked.factors[-1]
    else:
        raise InvalidConfigError(f"unknown ordering {ordering!r}")
    q = math.exp(-2.0 * a * h)
    W = 1.0 - math.exp(-2.0 * a * (T - M * h))
    num = W * (w_pen - w_last * (1.0 - q))
    den = math.exp(2.0 * a * h) * (M - 1) * (1.0 - q) ** 2
    return num / den - 1.0 / (M - 1)


# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------

class BoundAxis(str, enum.Enum):
    BLEP = "blep"
    SPATIAL = "spatial"


def bounds(source, field, link, scheme, axis, eps_bar=None):
    """Lower/upper bounds of the average MSE along one axis.

    axis = BLEP    : extremes over the average block error probability
                     (upper bound sigma2 in both schemes; the asynchronous
                     lower bound sits at the global eps-minimizer, which is
                     eps = 0 in the monotone case)
    axis = SPATIAL : extremes over the non-target spatial weights in [0, 1]

    Returns (lower, upper) as MseValue with the defining pieces in
    ``components``.  The no-inference scheme is treated as the synchronous
    scheme with M = 1.
    """
    axis = BoundAxis(axis)
    eff = scheme
    if scheme.scheme is Scheme.NO_INFER:
        eff = SchemeConfig(Scheme.SYN_INFER, T=scheme.T, h=None, M=1, m=1)
    _check_timing(link, eff, need_h=eff.scheme is Scheme.ASYN_INFER)
    eps = _eps(link, eps_bar)
    s2 = source.sigma2_x
    E = math.exp(-2.0 * source.a * eff.T)
    c = _prefactor(source, link.tau, eff.T)
    M = eff.M

    if eff.scheme is Scheme.SYN_INFER:
        if axis is BoundAxis.BLEP:
            lower = s2 - c * (1.0 - E)
            return (MseValue(lower, {"at": "eps=0"}), MseValue(s2, {"at": "eps=1"}))
        beta = c * (1.0 - E) * (1.0 - eps) / (1.0 - E * eps ** M)
        upper = s2 - beta
        lower = s2 - beta * _geo_series(eps, M)
        comp = {"beta_syn": beta, "eps_bar": eps}
        return (MseValue(lower, dict(comp, at="weights=1")),
                MseValue(upper, dict(comp, at="weights=0")))

    # asynchronous
    if axis is BoundAxis.BLEP:
        e_star, lower = eps_star_asyn(source, field, link, eff)
        return (MseValue(lower, {"at": f"eps={e_star:.6g}", "eps_star": e_star}),
                MseValue(s2, {"at": "eps=1"}))
    q = math.exp(-2.0 * source.a * eff.h)
    psi = psi_values(source, eff, eps)
    beta = c * (1.0 - eps) / (1.0 - q * eps)
    upper = s2 - beta * float(psi[eff.m - 1])
    lower = s2 - beta * float(psi.sum())
    comp = {"beta_asyn": beta, "eps_bar": eps}
    return (MseValue(lower, dict(comp, at="weights=1")),
            MseValue(upper, dict(comp, at="weights=0")))


def _geo_series(eps: float, M: int) -> float:
    """(1 - eps^M) / (1 - eps), continuous at eps = 1 where it equals M."""
    if eps >= 1.0:
        return float(M)
    return (1.0 - eps ** M) / (1.0 - eps)


__all__ = [
    "Scheme", "SchemeConfig", "MseValue", "ReindexedField", "BoundAxis",
    "reindex_by_correlation", "psi_values", "dpsi_deps",
    "mse_no_infer", "mse_syn_infer", "mse_syn_infer_approx",
    "mse_asyn_infer", "mse_asyn_infer_approx", "average_mse",
    "dmse_asyn_deps", "eps_star_asyn", "upsilon", "bounds",
]
