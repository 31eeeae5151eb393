"""Mixture of polynomial regressions gated by a hidden logistic process.

The imaginary impedance part x_i observed at log-frequency f_i is modeled
as K polynomial regimes. A latent label z_i in {1..K} selects the regime;
its distribution is a softmax that is linear in f_i,

    pi_k(f) = exp(w_k0 + w_k1 f) / sum_j exp(w_j0 + w_j1 f),
    x_i | z_i = k  ~  Normal(beta_k . r(f_i), sigma_k^2),

with r(f) = (1, f, ..., f^p). Marginally each x_i is a normal mixture, so
the parameters are estimated by maximizing the mixture log-likelihood via
EM; the gate weights w are updated inside the M-step by a multi-class
IRLS (Newton) loop. The fitted conditional mean, a pi-weighted sum of the
K polynomials, approximates the curve through smooth or abrupt regime
transitions, and the argmax of pi segments the frequency axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateFit

_BOUNDARY_RESOLUTION = 1e-6


@dataclass(frozen=True)
class RhlpConfig:
    K: int = 3
    p: int = 3
    max_em_iters: int = 500
    em_tol: float = 1e-8
    max_irls_iters: int = 50
    irls_tol: float = 1e-8
    n_init: int = 10
    variance_floor: float = 1e-9
    seed: int = 0

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.p < 0:
            raise ValueError("p must be >= 0")
        if self.n_init < 1:
            raise ValueError("n_init must be >= 1")
        if not self.variance_floor > 0:
            raise ValueError("variance_floor must be > 0")


@dataclass(frozen=True)
class RhlpModel:
    """Fitted gate weights, per-regime polynomial coefficients and
    variances, and the achieved log-likelihood.

    ``w`` has shape (K, 2) with the last row pinned to zero (the softmax
    is invariant to shifting all rows by a common vector, so the pin makes
    fits reproducible). ``betas`` has shape (K, p+1), ``sigma2`` shape (K,).
    """

    w: np.ndarray
    betas: np.ndarray
    sigma2: np.ndarray
    loglik: float
    K: int
    p: int
    diagnostics: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "w", np.asarray(self.w, dtype=float))
        object.__setattr__(self, "betas", np.asarray(self.betas, dtype=float))
        object.__setattr__(self, "sigma2", np.asarray(self.sigma2, dtype=float))
        if self.w.shape != (self.K, 2):
            raise ValueError(f"w must have shape ({self.K}, 2)")
        if self.betas.shape != (self.K, self.p + 1):
            raise ValueError(f"betas must have shape ({self.K}, {self.p + 1})")
        if self.sigma2.shape != (self.K,) or (self.sigma2 <= 0).any():
            raise ValueError("sigma2 must be K positive variances")
        if not (np.isfinite(self.w).all() and np.isfinite(self.betas).all()):
            raise ValueError("model parameters must be finite")
        if not np.isfinite(self.loglik):
            raise ValueError("loglik must be finite")
        if (self.w[-1] != 0.0).any():
            raise ValueError("last row of w must be zero (identifiability pin)")


@dataclass(frozen=True)
class Segmentation:
    """Per-sample dominant regime (1-based labels) and the log-frequencies
    where the dominant regime switches."""

    labels: np.ndarray
    boundaries: np.ndarray


def regressor_vector(logf: float, p: int) -> np.ndarray:
    """Monomial regressor (1, f, f^2, ..., f^p) at one log-frequency."""
    if p < 0:
        raise ValueError("p must be >= 0")
    return np.power(float(logf), np.arange(p + 1, dtype=float))


def regressor_matrix(logf: np.ndarray, p: int) -> np.ndarray:
    """Stacked regressor vectors, shape (n, p+1)."""
    return np.vander(np.asarray(logf, dtype=float), p + 1, increasing=True)


def _gate_design(logf: np.ndarray) -> np.ndarray:
    logf = np.atleast_1d(np.asarray(logf, dtype=float))
    return np.column_stack([np.ones_like(logf), logf])


def _log_softmax(eta: np.ndarray) -> np.ndarray:
    z = eta - eta.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def logistic_probs(w: np.ndarray, logf) -> np.ndarray:
    """Gate probabilities pi_k at scalar or array log-frequency.

    Returns shape (K,) for scalar input, (n, K) for array input. Computed
    with max-subtraction; entries are positive and sum to one.
    """
    w = np.asarray(w, dtype=float)
    eta = _gate_design(logf) @ w.T
    out = np.exp(_log_softmax(eta))
    return out[0] if np.isscalar(logf) or np.ndim(logf) == 0 else out


def _log_mixture_terms(model: RhlpModel, logf: np.ndarray, x: np.ndarray) -> np.ndarray:
    """log sum_k pi_k(f_i) phi(x_i; beta_k.r_i, sigma_k^2), one value per sample."""
    logf = np.atleast_1d(np.asarray(logf, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    logpi = _log_softmax(_gate_design(logf) @ model.w.T)
    mu = regressor_matrix(logf, model.p) @ model.betas.T
    logphi = -0.5 * (
        np.log(2.0 * np.pi * model.sigma2)[None, :]
        + (x[:, None] - mu) ** 2 / model.sigma2[None, :]
    )
    joint = logpi + logphi
    m = joint.max(axis=1, keepdims=True)
    return (m + np.log(np.exp(joint - m).sum(axis=1, keepdims=True)))[:, 0]


def density(model: RhlpModel, logf: float, x: float) -> float:
    """Mixture density of one observation at one log-frequency."""
    return float(np.exp(_log_mixture_terms(model, logf, x)[0]))


def log_likelihood(model: RhlpModel, logf: np.ndarray, x: np.ndarray) -> float:
    """Mixture log-likelihood of a sample, accumulated via log-sum-exp."""
    return float(_log_mixture_terms(model, logf, x).sum())


def approximate(model: RhlpModel, logf):
    """Fitted conditional mean: sum_k pi_k(f) * (beta_k . r(f))."""
    scalar = np.isscalar(logf) or np.ndim(logf) == 0
    logf_arr = np.atleast_1d(np.asarray(logf, dtype=float))
    pis = np.exp(_log_softmax(_gate_design(logf_arr) @ model.w.T))
    vals = (pis * (regressor_matrix(logf_arr, model.p) @ model.betas.T)).sum(axis=1)
    return float(vals[0]) if scalar else vals


# ----------------------------------------------------------------------
# IRLS gate update
# ----------------------------------------------------------------------

def _gate_objective(tau: np.ndarray, V: np.ndarray, w: np.ndarray) -> float:
    return float(np.sum(tau * _log_softmax(V @ w.T)))


def irls_gradient(tau: np.ndarray, logf: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Gradient of sum_ik tau_ik log pi_ik(w) w.r.t. the free rows of w.

    Row k (k < K-1 free rows; the last row is pinned) has gradient
    sum_i (tau_ik - pi_ik) * (1, f_i). Shape (K-1, 2).
    """
    V = _gate_design(logf)
    pi = np.exp(_log_softmax(V @ np.asarray(w, float).T))
    diff = tau[:, :-1] - pi[:, :-1]
    return diff.T @ V


def _irls(tau, logf, w_init, max_iters=50, tol=1e-8):
    """Newton ascent with step-halving on the gate objective.

    Returns (w, info). On a singular Newton system the update falls back
    to w_init and flags info["singular"]; the objective never decreases
    across accepted iterations.
    """
    tau = np.asarray(tau, dtype=float)
    n, K = tau.shape
    w = np.array(w_init, dtype=float, copy=True)
    info = {"iterations": 0, "converged": True, "singular": False}
    if K == 1:
        return w, info

    V = _gate_design(logf)
    VV = V[:, :, None] * V[:, None, :]  # (n, 2, 2)
    q_old = _gate_objective(tau, V, w)
    info["converged"] = False
    for it in range(1, max_iters + 1):
        pi = np.exp(_log_softmax(V @ w.T))
        diff = tau[:, : K - 1] - pi[:, : K - 1]
        grad = (diff.T @ V).ravel()

        # A = -Hessian, positive semidefinite, (K-1)x(K-1) blocks of 2x2
        A = np.empty((2 * (K - 1), 2 * (K - 1)))
        for k in range(K - 1):
            for l in range(K - 1):
                coef = pi[:, k] * ((1.0 if k == l else 0.0) - pi[:, l])
                A[2 * k : 2 * k + 2, 2 * l : 2 * l + 2] = np.einsum(
                    "i,ijk->jk", coef, VV
                )
        # a singular Newton system stops the update at the current iterate
        # (= w_init when it happens on the first iteration); EM continues
        try:
            step = np.linalg.solve(A, grad)
        except np.linalg.LinAlgError:
            info["singular"] = True
            break
        if not np.isfinite(step).all():
            info["singular"] = True
            break

        scale = 1.0
        accepted = False
        for _ in range(21):  # full step plus at most 20 halvings
            w_try = w.copy()
            w_try[: K - 1] += scale * step.reshape(K - 1, 2)
            q_try = _gate_objective(tau, V, w_try)
            if np.isfinite(q_try) and q_try >= q_old:
                accepted = True
                break
            scale *= 0.5
        if not accepted:
            break
        w = w_try
        info["iterations"] = it
        if abs(q_try - q_old) <= tol * (abs(q_old) + 1e-12):
            info["converged"] = True
            q_old = q_try
            break
        q_old = q_try
    return w, info


def irls_update(tau, logf, w_init, max_iters: int = 50, tol: float = 1e-8) -> np.ndarray:
    """Gate-weight update given responsibilities; see `_irls` for details."""
    w, _ = _irls(tau, logf, w_init, max_iters, tol)
    return w


# ----------------------------------------------------------------------
# EM fitting
# ----------------------------------------------------------------------

def _estep(logf_design_V, R, x, w, betas, sigma2):
    logpi = _log_softmax(logf_design_V @ w.T)
    mu = R @ betas.T
    logphi = -0.5 * (
        np.log(2.0 * np.pi * sigma2)[None, :] + (x[:, None] - mu) ** 2 / sigma2[None, :]
    )
    joint = logpi + logphi
    m = joint.max(axis=1, keepdims=True)
    lse = m + np.log(np.exp(joint - m).sum(axis=1, keepdims=True))
    tau = np.exp(joint - lse)
    return tau, float(lse.sum())


def _wls_params(tau, x, R, variance_floor):
    """Responsibility-weighted polynomial fit and variance per regime.

    The weighted design is solved by SVD (minimum-norm under rank
    deficiency), so a starved regime cannot crash the M-step.
    """
    K = tau.shape[1]
    betas = np.empty((K, R.shape[1]))
    sigma2 = np.empty(K)
    for k in range(K):
        sw = np.sqrt(tau[:, k])
        beta, *_ = np.linalg.lstsq(R * sw[:, None], x * sw, rcond=None)
        betas[k] = beta
        resid = x - R @ beta
        total = tau[:, k].sum()
        sigma2[k] = max(float((tau[:, k] * resid**2).sum() / total), variance_floor)
    return betas, sigma2


def _init_cuts(n, K, min_pts, run_idx, rng):
    """Interior cut indices of a contiguous K-block partition of the axis.

    Run 0 uses the uniform partition; later runs jitter the cut positions.
    Every block keeps at least min_pts points.
    """
    span = max(1, n // (2 * K))
    cuts = []
    prev = 0
    for j in range(1, K):
        pos = round(n * j / K)
        if run_idx > 0:
            pos += int(rng.integers(-span, span + 1))
        lo = prev + min_pts
        hi = n - (K - j) * min_pts
        cut = min(max(pos, lo), hi)
        cuts.append(cut)
        prev = cut
    return cuts


def fit_em(logf: np.ndarray, x: np.ndarray, cfg: RhlpConfig | None = None) -> RhlpModel:
    """Fit the mixture by EM, keeping the best of cfg.n_init seeded runs.

    Each run starts from a contiguous partition of the axis into K blocks
    (one-hot responsibilities), alternates E-steps with M-steps (weighted
    polynomial fits, floored variances, IRLS gate update), and stops when
    the relative log-likelihood improvement drops below cfg.em_tol or the
    iteration cap is hit. Within a run the log-likelihood never decreases
    (generalized EM ascent). A run is abandoned if a regime's total
    responsibility starves below (p+2)*1e-6.

    Raises
    ------
    DegenerateFit
        If every initialization starves.
    """
    if cfg is None:
        cfg = RhlpConfig()
    logf = np.asarray(logf, dtype=float)
    x = np.asarray(x, dtype=float)
    if logf.shape != x.shape or logf.ndim != 1:
        raise ValueError("logf and x must be 1-D arrays of equal length")
    n = logf.shape[0]
    K, p = cfg.K, cfg.p
    if n < K * (p + 2):
        raise ValueError(f"need at least K*(p+2) = {K * (p + 2)} points, got {n}")
    if (np.diff(logf) <= 0).any():
        raise ValueError("logf must be strictly increasing")
    if not (np.isfinite(logf).all() and np.isfinite(x).all()):
        raise ValueError("inputs must be finite")

    V = _gate_design(logf)
    R = regressor_matrix(logf, p)
    starve_limit = (p + 2) * 1e-6

    best = None
    best_run = -1
    run_reports = []
    for run in range(cfg.n_init):
        rng = np.random.default_rng([cfg.seed, run])
        cuts = _init_cuts(n, K, p + 2, run, rng)
        labels0 = np.searchsorted(np.asarray(cuts), np.arange(n), side="right")
        # soft block assignment: a hard one-hot init would let the first
        # IRLS pass saturate the gate at the block cuts and freeze EM there
        tau = np.full((n, K), 0.25 / K)
        tau[np.arange(n), labels0] += 0.75

        betas, sigma2 = _wls_params(tau, x, R, cfg.variance_floor)
        w, irls_info = _irls(tau, logf, np.zeros((K, 2)), cfg.max_irls_iters, cfg.irls_tol)
        irls_fallbacks = int(irls_info["singular"])

        history = []
        failed = False
        converged = False
        loglik = -np.inf
        loglik_prev = None
        for _ in range(cfg.max_em_iters):
            tau, loglik = _estep(V, R, x, w, betas, sigma2)
            history.append(loglik)
            if (tau.sum(axis=0) < starve_limit).any():
                failed = True
                break
            if loglik_prev is not None and abs(loglik - loglik_prev) <= cfg.em_tol * (
                abs(loglik_prev) + 1e-12
            ):
                converged = True
                break
            loglik_prev = loglik
            betas, sigma2 = _wls_params(tau, x, R, cfg.variance_floor)
            w, irls_info = _irls(tau, logf, w, cfg.max_irls_iters, cfg.irls_tol)
            irls_fallbacks += int(irls_info["singular"])
        else:
            # cap reached right after an M-step: refresh loglik for the final theta
            tau, loglik = _estep(V, R, x, w, betas, sigma2)
            history.append(loglik)

        run_reports.append(
            {
                "run": run,
                "iterations": len(history),
                "converged": converged,
                "failed": failed,
                "loglik": None if failed else loglik,
                "irls_fallbacks": irls_fallbacks,
                "loglik_history": history,
            }
        )
        if not failed and (best is None or loglik > best[3]):
            best = (w, betas, sigma2, loglik)
            best_run = run

    if best is None:
        raise DegenerateFit(
            f"all {cfg.n_init} initializations starved a regime (K={K}, p={p}, n={n})"
        )
    w, betas, sigma2, loglik = best
    return RhlpModel(
        w=w,
        betas=betas,
        sigma2=sigma2,
        loglik=loglik,
        K=K,
        p=p,
        diagnostics={
            "best_run": best_run,
            "converged": run_reports[best_run]["converged"],
            "iterations": run_reports[best_run]["iterations"],
            "runs": run_reports,
        },
    )


# ----------------------------------------------------------------------
# Segmentation
# ----------------------------------------------------------------------

def _argmax_label(w: np.ndarray, logf: float) -> int:
    pi = logistic_probs(w, float(logf))
    return int(np.argmax(pi)) + 1  # ties go to the smallest regime index


def segment(model: RhlpModel, logf_axis: np.ndarray) -> Segmentation:
    """Dominant-regime labels along the axis plus the switch locations.

    Each boundary is refined by bisecting the continuous argmax change
    between the two samples where the label flips, down to 1e-6
    log-frequency resolution.
    """
    logf_axis = np.asarray(logf_axis, dtype=float)
    if logf_axis.ndim != 1 or logf_axis.shape[0] < 2:
        raise ValueError("logf_axis must be 1-D with at least 2 points")
    if (np.diff(logf_axis) <= 0).any():
        raise ValueError("logf_axis must be strictly increasing")

    pis = logistic_probs(model.w, logf_axis)
    labels = np.argmax(pis, axis=1) + 1

    boundaries = []
    for i in np.flatnonzero(np.diff(labels)):
        lo, hi = logf_axis[i], logf_axis[i + 1]
        left = labels[i]
        while hi - lo > _BOUNDARY_RESOLUTION:
            mid = 0.5 * (lo + hi)
            if _argmax_label(model.w, mid) == left:
                lo = mid
            else:
                hi = mid
        boundaries.append(0.5 * (lo + hi))
    return Segmentation(labels=labels, boundaries=np.asarray(boundaries, dtype=float))
