"""Damped least-squares fitting of photocurrent transients.

Models are fitted on y / max|y| with time measured from the window start.
Time constants live on a bounded log scale (tau in [1e-3, 1e8] s through a
logistic map of ln tau) and the stretching exponent on a logit scale, so the
optimizer works unconstrained.
"""

import logging
import math
from collections.abc import Sequence

import numpy as np
from scipy import stats
from scipy.special import expit, logit

from app.core.config import settings
from app.core.constants import BOLTZMANN_MEV
from app.exceptions.synapse_exceptions import DegenerateFitError, InputError, SynapseError
from app.schemas.device import Trace
from app.schemas.fitting import ArrheniusFit, FitReport, ModelSelection
from app.schemas.kinetic_model import KineticModelParams, ModelKind, ModelSpec
from app.services.kinetics import eval_model

logger = logging.getLogger(__name__)

TAU_MIN, TAU_MAX = 1e-3, 1e8
_LN_LO, _LN_HI = math.log(TAU_MIN), math.log(TAU_MAX)
_LN_SPAN = _LN_HI - _LN_LO
PEEL_RATIO = 0.25
BETA_INIT = 0.7


def _tau_from(u: np.ndarray) -> np.ndarray:
    return np.exp(_LN_LO + _LN_SPAN * expit(u))


def _dlntau_du(u: np.ndarray) -> np.ndarray:
    s = expit(u)
    return _LN_SPAN * s * (1.0 - s)


def _u_from(tau: np.ndarray) -> np.ndarray:
    frac = (np.log(np.clip(tau, TAU_MIN * 1.001, TAU_MAX / 1.001)) - _LN_LO) / _LN_SPAN
    return logit(frac)


class TransientModel:
    """Value, analytic Jacobian and start point of one model family."""

    kind: ModelKind

    def __init__(self, spec: ModelSpec):
        self.spec = spec

    @property
    def n_params(self) -> int:
        return len(self.names)

    @property
    def names(self) -> list[str]:
        raise NotImplementedError

    def value(self, theta: np.ndarray, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def jacobian(self, theta: np.ndarray, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def initial(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def physical(self, theta: np.ndarray, y_scale: float) -> tuple[np.ndarray, np.ndarray]:
        """Physical parameter values and d(physical)/d(theta), elementwise."""
        raise NotImplementedError

    def to_params(self, physical: np.ndarray, t0: float) -> KineticModelParams:
        raise NotImplementedError


class ExponentialModel(TransientModel):
    """Sum of n exponentials, decaying or rising; theta = [i0, a1, u1, ...]."""

    def __init__(self, spec: ModelSpec):
        super().__init__(spec)
        self.kind = spec.kind
        self.rising = spec.kind is ModelKind.EXP_RISE
        self.n_terms = spec.n_terms

    @property
    def names(self) -> list[str]:
        names = ["i0"]
        for k in range(1, self.n_terms + 1):
            names += [f"a{k}", f"tau{k}"]
        return names

    def _split(self, theta: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
        return theta[0], theta[1::2], theta[2::2]

    def _basis(self, x: np.ndarray, taus: np.ndarray) -> np.ndarray:
        e = np.exp(-np.outer(x, 1.0 / taus))
        return 1.0 - e if self.rising else e

    def value(self, theta: np.ndarray, x: np.ndarray) -> np.ndarray:
        i0, amps, us = self._split(theta)
        return i0 + self._basis(x, _tau_from(us)) @ amps

    def jacobian(self, theta: np.ndarray, x: np.ndarray) -> np.ndarray:
        _, amps, us = self._split(theta)
        taus = _tau_from(us)
        e = np.exp(-np.outer(x, 1.0 / taus))
        jac = np.empty((x.size, self.n_params))
        jac[:, 0] = 1.0
        jac[:, 1::2] = 1.0 - e if self.rising else e
        d_lntau = amps * e * (x[:, None] / taus)
        if self.rising:
            d_lntau = -d_lntau
        jac[:, 2::2] = d_lntau * _dlntau_du(us)
        return jac

    def initial(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        # Peel from the slowest tail inward on the distance to the final level.
        residual = (y[-1] - y) if self.rising else (y - y[-1])
        taus = _peel_taus(x, residual, self.n_terms)
        basis = np.column_stack([np.ones_like(x), self._basis(x, taus)])
        coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
        theta = np.empty(self.n_params)
        theta[0] = coef[0]
        theta[1::2] = coef[1:]
        theta[2::2] = _u_from(taus)
        return theta

    def physical(self, theta: np.ndarray, y_scale: float) -> tuple[np.ndarray, np.ndarray]:
        values = theta.copy()
        derivs = np.full(self.n_params, y_scale)
        values[0] *= y_scale
        values[1::2] *= y_scale
        taus = _tau_from(theta[2::2])
        values[2::2] = taus
        derivs[2::2] = taus * _dlntau_du(theta[2::2])
        return values, derivs

    def to_params(self, physical: np.ndarray, t0: float) -> KineticModelParams:
        return KineticModelParams(
            model=self.kind,
            i0=float(physical[0]),
            amplitudes=tuple(float(a) for a in physical[1::2]),
            taus=tuple(float(t) for t in physical[2::2]),
            t0=t0,
        ).canonical()


class StretchedModel(TransientModel):
    """theta = [i0, a, u (tau), v (beta on a logit scale)]."""

    kind = ModelKind.STRETCHED

    @property
    def names(self) -> list[str]:
        return ["i0", "a1", "tau1", "beta_stretch"]

    @staticmethod
    def _terms(theta: np.ndarray, x: np.ndarray):
        tau = _tau_from(theta[2])
        beta = expit(theta[3])
        z = x / tau
        positive = z > 0
        log_z = np.where(positive, np.log(np.where(positive, z, 1.0)), 0.0)
        zb = np.where(positive, np.exp(beta * log_z), 0.0)
        return beta, log_z, zb, np.exp(-zb)

    def value(self, theta: np.ndarray, x: np.ndarray) -> np.ndarray:
        _, _, _, decay = self._terms(theta, x)
        return theta[0] + theta[1] * decay

    def jacobian(self, theta: np.ndarray, x: np.ndarray) -> np.ndarray:
        beta, log_z, zb, decay = self._terms(theta, x)
        a = theta[1]
        jac = np.empty((x.size, 4))
        jac[:, 0] = 1.0
        jac[:, 1] = decay
        jac[:, 2] = a * decay * beta * zb * _dlntau_du(theta[2])
        jac[:, 3] = -a * decay * zb * log_z * beta * (1.0 - beta)
        return jac

    def initial(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        level = y[-1]
        span = y[0] - level
        crossed = np.nonzero(np.abs(y - level) <= abs(span) / math.e)[0]
        tau = x[crossed[0]] if crossed.size and x[crossed[0]] > 0 else (x[-1] - x[0]) / 3.0
        theta = np.array([level, span, _u_from(np.array(tau)), logit(BETA_INIT)])
        _, _, _, decay = self._terms(theta, x)
        coef, *_ = np.linalg.lstsq(np.column_stack([np.ones_like(x), decay]), y, rcond=None)
        theta[:2] = coef
        return theta

    def physical(self, theta: np.ndarray, y_scale: float) -> tuple[np.ndarray, np.ndarray]:
        tau = float(_tau_from(theta[2]))
        beta = float(expit(theta[3]))
        values = np.array([theta[0] * y_scale, theta[1] * y_scale, tau, beta])
        derivs = np.array(
            [y_scale, y_scale, tau * float(_dlntau_du(theta[2])), beta * (1.0 - beta)]
        )
        return values, derivs

    def to_params(self, physical: np.ndarray, t0: float) -> KineticModelParams:
        return KineticModelParams(
            model=self.kind,
            i0=float(physical[0]),
            amplitudes=(float(physical[1]),),
            taus=(float(physical[2]),),
            beta_stretch=min(float(physical[3]), 1.0),
            t0=t0,
        )


class WickelgrenModel(TransientModel):
    """theta = [lam, w = ln(beta_scale), psi]."""

    kind = ModelKind.WICKELGREN

    @property
    def names(self) -> list[str]:
        return ["lam", "beta_scale", "psi"]

    def value(self, theta: np.ndarray, x: np.ndarray) -> np.ndarray:
        lam, w, psi = theta
        return lam * (1.0 + math.exp(w) * x) ** (-psi)

    def jacobian(self, theta: np.ndarray, x: np.ndarray) -> np.ndarray:
        lam, w, psi = theta
        b = math.exp(w)
        s = 1.0 + b * x
        power = s ** (-psi)
        jac = np.empty((x.size, 3))
        jac[:, 0] = power
        jac[:, 1] = -lam * psi * power / s * x * b
        jac[:, 2] = -lam * power * np.log(s)
        return jac

    def initial(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        span = max(x[-1] - x[0], 1e-12)
        if np.all(y > 0) or np.all(y < 0):
            sign = np.sign(y[0])
            log_y = np.log(np.abs(y))
            best = None
            # Linear in (ln lam, psi) once beta is fixed: scan beta on a log grid.
            for b in np.logspace(-3, 3, 61) / span:
                basis = np.column_stack([np.ones_like(x), -np.log1p(b * x)])
                coef, *_ = np.linalg.lstsq(basis, log_y, rcond=None)
                rss = float(np.sum((basis @ coef - log_y) ** 2))
                if best is None or rss < best[0]:
                    best = (rss, b, coef)
            _, b, coef = best
            return np.array([sign * math.exp(coef[0]), math.log(b), coef[1]])
        return np.array([y[0], math.log(1.0 / span), 0.0])

    def physical(self, theta: np.ndarray, y_scale: float) -> tuple[np.ndarray, np.ndarray]:
        b = math.exp(theta[1])
        return (
            np.array([theta[0] * y_scale, b, theta[2]]),
            np.array([y_scale, b, 1.0]),
        )

    def to_params(self, physical: np.ndarray, t0: float) -> KineticModelParams:
        return KineticModelParams(
            model=self.kind,
            lam=float(physical[0]),
            beta_scale=float(physical[1]),
            psi=float(physical[2]),
            t0=t0,
        )


def build_model(spec: ModelSpec) -> TransientModel:
    match spec.kind:
        case ModelKind.EXP_DECAY | ModelKind.EXP_RISE:
            return ExponentialModel(spec)
        case ModelKind.STRETCHED:
            return StretchedModel(spec)
        case ModelKind.WICKELGREN:
            return WickelgrenModel(spec)
    raise InputError(f"unknown model kind {spec.kind}")


def _peel_taus(x: np.ndarray, residual: np.ndarray, n_terms: int) -> np.ndarray:
    """Time constants by log-linear fits on successively earlier windows."""
    resid = residual.astype(float).copy()
    x_first, x_last = x[0], x[-1]
    span = max(x_last - x_first, 1e-12)
    taus = []
    for k in range(n_terms):
        hi = x_first + span * PEEL_RATIO**k
        lo = x_first if k == n_terms - 1 else x_first + span * PEEL_RATIO ** (k + 1)
        mask = (x >= lo) & (x <= hi)
        seg_x, seg = x[mask], resid[mask]
        sign = 1.0 if seg.sum() >= 0 else -1.0
        usable = seg * sign > 0
        tau = amp = None
        if usable.sum() >= 3:
            slope, intercept = np.polyfit(seg_x[usable], np.log(seg[usable] * sign), 1)
            if slope < 0:
                tau = -1.0 / slope
                amp = sign * math.exp(intercept)
        if tau is None:
            tau = max((hi - lo) / 2.0, TAU_MIN * 10)
            amp = float(seg.mean()) if seg.size else 0.0
        tau = float(np.clip(tau, TAU_MIN * 10, TAU_MAX / 10))
        taus.append(tau)
        resid = resid - amp * np.exp(-(x - x_first) / tau)
    taus = np.sort(np.array(taus))
    for k in range(n_terms - 2, -1, -1):
        taus[k] = min(taus[k], taus[k + 1] / 2.0)
    return np.clip(taus, TAU_MIN * 1.01, TAU_MAX / 1.01)


def levenberg_marquardt(
    model: TransientModel,
    x: np.ndarray,
    y: np.ndarray,
    theta0: np.ndarray,
    max_iterations: int,
    ftol: float,
    gtol: float,
) -> tuple[np.ndarray, float, int, bool, float]:
    """Marquardt-scaled damped Gauss-Newton; returns (theta, rss, iterations, converged, |g|)."""
    theta = theta0.astype(float)
    r = model.value(theta, x) - y
    jac = model.jacobian(theta, x)
    rss = float(r @ r)
    hess = jac.T @ jac
    grad = jac.T @ r
    mu = 1e-3 * float(np.max(np.diag(hess), initial=1e-12))
    nu = 2.0
    converged = False
    small_steps = 0
    iteration = 0
    for iteration in range(1, max_iterations + 1):
        if float(np.max(np.abs(grad))) < gtol:
            converged = True
            break
        diag = np.diag(hess)
        scale = np.maximum(diag, 1e-12 * max(float(diag.max()), 1e-300))
        try:
            step = np.linalg.solve(hess + mu * np.diag(scale), -grad)
        except np.linalg.LinAlgError:
            mu, nu = mu * nu, nu * 2.0
            continue
        candidate = theta + step
        r_new = model.value(candidate, x) - y
        rss_new = float(r_new @ r_new) if np.all(np.isfinite(r_new)) else math.inf
        linear = r + jac @ step
        predicted = rss - float(linear @ linear)
        rho = (rss - rss_new) / predicted if predicted > 0 else -1.0
        if rho > 0:
            rel_change = (rss - rss_new) / max(rss, 1e-300)
            theta, r, rss = candidate, r_new, rss_new
            jac = model.jacobian(theta, x)
            hess = jac.T @ jac
            grad = jac.T @ r
            mu *= max(1.0 / 3.0, 1.0 - (2.0 * rho - 1.0) ** 3)
            nu = 2.0
            small_steps = small_steps + 1 if rel_change < ftol else 0
            if small_steps >= 2 or rss == 0.0:
                converged = True
                break
        else:
            mu, nu = mu * nu, nu * 2.0
            if mu > 1e30:
                break
        if np.linalg.norm(step) <= 1e-15 * (np.linalg.norm(theta) + 1e-15):
            converged = True
            break
        logger.debug("iteration %d rss=%.6e mu=%.3e", iteration, rss, mu)
    return theta, rss, iteration, converged, float(np.max(np.abs(grad)))


def aicc(rss: float, n: int, k: int) -> float:
    """Corrected Akaike information criterion for a least-squares fit."""
    if n - k - 1 <= 0:
        return math.inf
    rss = max(rss, np.finfo(float).tiny)
    return n * math.log(rss / n) + 2 * k + 2 * k * (k + 1) / (n - k - 1)


def akaike_weights(reports: Sequence[FitReport]) -> list[float]:
    scores = np.array([r.aicc for r in reports])
    finite = np.isfinite(scores)
    if not finite.any():
        return [1.0 / len(reports)] * len(reports)
    delta = np.where(finite, scores - scores[finite].min(), np.inf)
    rel = np.exp(-0.5 * delta)
    return list(rel / rel.sum())


def _arrays(trace: Trace, window: tuple[float, float] | None) -> tuple[np.ndarray, np.ndarray]:
    if window is not None:
        trace = trace.window(*window)
    return np.asarray(trace.t, dtype=float), np.asarray(trace.current, dtype=float)


def _fit_arrays(
    t: np.ndarray, y: np.ndarray, spec: ModelSpec, max_iterations: int | None = None
) -> FitReport:
    model = build_model(spec)
    n, k = t.size, model.n_params
    if n < 3 * k:
        raise InputError(f"{spec.name} needs at least {3 * k} samples in the window, got {n}")
    t0 = float(t[0])
    x = t - t0
    y_scale = float(np.max(np.abs(y)))
    flat = y_scale == 0.0 or float(np.ptp(y)) <= 1e-12 * y_scale
    if flat:
        if spec.kind is ModelKind.WICKELGREN:
            return _constant_wickelgren(t0, float(np.mean(y)), n, k)
        raise DegenerateFitError(f"trace is constant; {spec.name} is not identifiable")
    yn = y / y_scale
    theta0 = model.initial(x, yn)
    theta, rss, iterations, converged, grad_norm = levenberg_marquardt(
        model,
        x,
        yn,
        theta0,
        max_iterations or settings.fit_max_iterations,
        settings.fit_ftol,
        settings.fit_gtol,
    )
    physical, derivs = model.physical(theta, y_scale)
    dof = max(n - k, 1)
    try:
        jac = model.jacobian(theta, x)
        cov = np.linalg.pinv(jac.T @ jac)
        variances = np.diag(cov) * (rss / dof) * derivs**2
    except np.linalg.LinAlgError:
        variances = np.full(k, math.inf)
    params = model.to_params(physical, t0)
    variance_map = _variance_map(model, physical, variances)
    rss_physical = rss * y_scale**2
    logger.info(
        "fit %s: rss=%.4e iterations=%d converged=%s", spec.name, rss_physical, iterations, converged
    )
    return FitReport(
        name=spec.name,
        model=params,
        variances=variance_map,
        rss=rss_physical,
        n_samples=n,
        n_params=k,
        aicc=aicc(rss_physical, n, k),
        iterations=iterations,
        converged=converged,
        grad_norm=grad_norm,
    )


def _variance_map(
    model: TransientModel, physical: np.ndarray, variances: np.ndarray
) -> dict[str, float]:
    out = dict(zip(model.names, (float(v) for v in variances)))
    if isinstance(model, ExponentialModel) and model.n_terms > 1:
        # Keep the variance labels aligned with the ascending tau order.
        order = np.argsort(physical[2::2])
        relabelled = {"i0": out["i0"]}
        for new, old in enumerate(order, start=1):
            relabelled[f"a{new}"] = out[f"a{old + 1}"]
            relabelled[f"tau{new}"] = out[f"tau{old + 1}"]
        out = relabelled
    return out


def _constant_wickelgren(t0: float, level: float, n: int, k: int) -> FitReport:
    return FitReport(
        name=str(ModelKind.WICKELGREN),
        model=KineticModelParams(
            model=ModelKind.WICKELGREN, lam=level, beta_scale=0.0, psi=0.0, t0=t0
        ),
        variances={"lam": 0.0, "beta_scale": 0.0, "psi": 0.0},
        rss=0.0,
        n_samples=n,
        n_params=k,
        aicc=aicc(0.0, n, k),
        iterations=0,
        converged=True,
        grad_norm=0.0,
    )


def fit_transient(
    trace: Trace,
    model_kind: ModelKind,
    n_terms: int = 1,
    window: tuple[float, float] | None = None,
    max_iterations: int | None = None,
) -> FitReport:
    t, y = _arrays(trace, window)
    return _fit_arrays(t, y, ModelSpec(kind=model_kind, n_terms=n_terms), max_iterations)


def fit_wickelgren(trace: Trace, off_time: float) -> FitReport:
    """Forgetting-curve fit I = lam (1 + beta (t - off))^-psi from light-off onward."""
    t, y = _arrays(trace, (off_time, math.inf))
    if t.size < 10:
        raise InputError(f"Wickelgren fit needs at least 10 samples after light-off, got {t.size}")
    report = _fit_arrays(t, y, ModelSpec(kind=ModelKind.WICKELGREN))
    if report.model.t0 != off_time:
        report = report.model_copy(
            update={"model": _shift_wickelgren(report.model, off_time)}
        )
    return report


def _shift_wickelgren(m: KineticModelParams, off_time: float) -> KineticModelParams:
    # Re-anchor at off_time: lam' (1 + b'(t-off))^-psi == lam (1 + b(t-t0))^-psi.
    lead = 1.0 + m.beta_scale * (off_time - m.t0)
    return m.model_copy(
        update={
            "lam": m.lam * lead ** (-m.psi),
            "beta_scale": m.beta_scale / lead,
            "t0": off_time,
        }
    )


def fit_arrhenius(points: Sequence[tuple[float, float]]) -> ArrheniusFit:
    """Linear least squares of ln tau against 1/T."""
    if len(points) < 3:
        raise InputError(f"Arrhenius fit needs at least 3 points, got {len(points)}")
    temps = np.array([p[0] for p in points], dtype=float)
    taus = np.array([p[1] for p in points], dtype=float)
    if np.unique(temps).size != temps.size:
        raise InputError("Arrhenius fit needs distinct temperatures")
    if np.any(temps <= 0) or np.any(taus <= 0):
        raise InputError("temperatures and time constants must be positive")
    result = stats.linregress(1.0 / temps, np.log(taus))
    r_squared = result.rvalue**2 if np.isfinite(result.rvalue) else 1.0
    return ArrheniusFit(
        tau0=math.exp(result.intercept),
        ea=result.slope * BOLTZMANN_MEV,
        r_squared=float(r_squared),
    )


def model_select(
    trace: Trace,
    candidates: Sequence[ModelSpec],
    window: tuple[float, float] | None = None,
) -> ModelSelection:
    """Fit every candidate and rank by AICc, fewer parameters first on ties."""
    if not candidates:
        raise InputError("model selection needs at least one candidate")
    t, y = _arrays(trace, window)
    reports: list[FitReport] = []
    excluded: dict[str, str] = {}
    for spec in candidates:
        try:
            reports.append(_fit_arrays(t, y, spec))
        except SynapseError as exc:
            logger.info("excluding %s: %s", spec.name, exc.detail)
            excluded[spec.name] = exc.detail
    reports.sort(key=lambda r: (r.aicc, r.n_params))
    weights = akaike_weights(reports) if reports else []
    ranked = [r.model_copy(update={"weight": float(w)}) for r, w in zip(reports, weights)]
    return ModelSelection(ranked=ranked, excluded=excluded)


def synthesize_trace(
    model: KineticModelParams,
    t: Sequence[float] | np.ndarray,
    noise_rel: float = 0.0,
    seed: int | None = None,
    read_voltage: float = 1.0,
    temperature: float = 300.0,
    label: str = "synthetic",
) -> Trace:
    """Model curve plus seeded Gaussian noise of `noise_rel` x signal amplitude."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(eval_model(model, t), dtype=float)
    if noise_rel > 0:
        if model.model is ModelKind.WICKELGREN:
            amplitude = abs(model.lam)
        else:
            amplitude = float(np.sum(np.abs(model.amplitudes)))
        rng = np.random.default_rng(seed)
        y = y + rng.normal(0.0, noise_rel * amplitude, size=y.shape)
    return Trace(
        t=tuple(float(v) for v in t),
        current=tuple(float(v) for v in y),
        read_voltage=read_voltage,
        temperature=temperature,
        label=label,
    )
