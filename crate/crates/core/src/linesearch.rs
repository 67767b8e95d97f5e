//! Line-search oracles: exact minimization along a ray and adaptive step size
//! control with a target success probability.
//!
//! Every oracle returns a [`StepResult`] whose displacement is expressed
//! relative to the caller's (unnormalized) direction `u`, so
//! `x_next = x + sigma_taken * u` holds for both oracles.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::objectives::Objective;

/// Default target success probability of adaptive step size control.
pub const DEFAULT_SUCCESS_PROBABILITY: f64 = 0.27;
/// Default relative tolerance of the golden-section search on non-quadratics.
pub const DEFAULT_LS_TOL: f64 = 1e-12;

const BRACKET_START: f64 = 1e-8;
const MAX_EXPANSIONS: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LineSearchKind {
    Exact,
    Adaptive,
}

impl fmt::Display for LineSearchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LineSearchKind::Exact => "exact",
            LineSearchKind::Adaptive => "adaptive",
        })
    }
}

impl FromStr for LineSearchKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exact" => Ok(LineSearchKind::Exact),
            "adaptive" => Ok(LineSearchKind::Adaptive),
            other => Err(Error::Config(format!(
                "unknown line search `{other}` (expected exact or adaptive)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LineSearchMode {
    /// Minimize along the ray. `tol` only matters for non-quadratic objectives.
    Exact { tol: f64 },
    /// Adaptive step size control targeting success probability `p`.
    Adaptive { p: f64 },
}

impl LineSearchMode {
    pub fn exact() -> Self {
        LineSearchMode::Exact { tol: DEFAULT_LS_TOL }
    }

    pub fn adaptive(p: f64) -> Self {
        LineSearchMode::Adaptive { p }
    }

    pub fn kind(&self) -> LineSearchKind {
        match self {
            LineSearchMode::Exact { .. } => LineSearchKind::Exact,
            LineSearchMode::Adaptive { .. } => LineSearchKind::Adaptive,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            LineSearchMode::Exact { tol } if !(tol > 0.0 && tol.is_finite()) => Err(Error::Config(format!(
                "line search tolerance must be positive, got {tol}"
            ))),
            LineSearchMode::Adaptive { p } => check_probability(p),
            _ => Ok(()),
        }
    }
}

pub(crate) fn check_probability(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "success probability must lie in (0, 1), got {p}"
        )))
    }
}

/// Log step-size factors `(grow, shrink)` applied on success and failure.
///
/// At success rate exactly `p` the expected log change
/// `p * grow + (1 - p) * shrink` is zero.
pub fn ass_exponents(p: f64) -> (f64, f64) {
    (1.0 / 3.0, -p / (3.0 * (1.0 - p)))
}

/// Outcome of one line-search call.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub x_next: Vec<f64>,
    /// `f(x_next)`.
    pub f_next: f64,
    /// Step size state for the next iteration.
    pub sigma_next: f64,
    /// The multiplier applied to the caller's direction; 0 when rejected.
    pub sigma_taken: f64,
    pub accepted: bool,
    /// Objective evaluations consumed by this call.
    pub evals: u64,
}

/// Allocation-free part of a [`StepResult`]; the new point lives in the
/// caller's buffer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct StepInfo {
    pub f_next: f64,
    pub sigma_next: f64,
    pub sigma_taken: f64,
    pub accepted: bool,
    pub evals: u64,
}

impl StepInfo {
    fn into_result(self, x_next: Vec<f64>) -> StepResult {
        StepResult {
            x_next,
            f_next: self.f_next,
            sigma_next: self.sigma_next,
            sigma_taken: self.sigma_taken,
            accepted: self.accepted,
            evals: self.evals,
        }
    }
}

fn check_shapes<O: Objective + ?Sized>(f: &O, x: &[f64], u: &[f64]) -> Result<()> {
    if x.len() != f.dim() || u.len() != f.dim() {
        return Err(Error::Input(format!(
            "objective has dimension {}, got x of length {} and u of length {}",
            f.dim(),
            x.len(),
            u.len()
        )));
    }
    Ok(())
}

#[inline]
fn axpy_into(out: &mut [f64], x: &[f64], alpha: f64, u: &[f64]) {
    for ((o, xi), ui) in out.iter_mut().zip(x).zip(u) {
        *o = xi + alpha * ui;
    }
}

fn current_value<O: Objective + ?Sized>(f: &O, x: &[f64], fx: Option<f64>) -> Result<(f64, u64)> {
    let (value, evals) = match fx {
        Some(v) => (v, 0),
        None => (f.value(x), 1),
    };
    if value.is_finite() {
        Ok((value, evals))
    } else {
        Err(Error::numeric(
            format!("objective is not finite at the current point ({value})"),
            x,
        ))
    }
}

/// Adaptive step size step: try `x + sigma*u`, keep it if it is no worse.
///
/// `fx` is the cached value `f(x)`; when given the call costs one evaluation.
pub fn ass_step<O: Objective + ?Sized>(
    f: &O,
    x: &[f64],
    u: &[f64],
    sigma: f64,
    p: f64,
    fx: Option<f64>,
) -> Result<StepResult> {
    check_shapes(f, x, u)?;
    check_probability(p)?;
    if !(sigma > 0.0) {
        return Err(Error::Input(format!("step size must be positive, got {sigma}")));
    }
    let mut out = vec![0.0; x.len()];
    let info = ass_step_into(f, x, u, sigma, p, fx, &mut out)?;
    Ok(info.into_result(out))
}

pub(crate) fn ass_step_into<O: Objective + ?Sized>(
    f: &O,
    x: &[f64],
    u: &[f64],
    sigma: f64,
    p: f64,
    fx: Option<f64>,
    out: &mut [f64],
) -> Result<StepInfo> {
    let (f0, mut evals) = current_value(f, x, fx)?;
    axpy_into(out, x, sigma, u);
    let f_trial = f.value(out);
    evals += 1;
    if f_trial.is_nan() {
        return Err(Error::numeric("objective returned NaN at the trial point", out));
    }
    let (grow, shrink) = ass_exponents(p);
    if f_trial <= f0 {
        Ok(StepInfo {
            f_next: f_trial,
            sigma_next: sigma * grow.exp(),
            sigma_taken: sigma,
            accepted: true,
            evals,
        })
    } else {
        out.copy_from_slice(x);
        Ok(StepInfo {
            f_next: f0,
            sigma_next: sigma * shrink.exp(),
            sigma_taken: 0.0,
            accepted: false,
            evals,
        })
    }
}

/// Exact line search: minimize `f(x + t*u)` over `t`.
///
/// Quadratics use three-point interpolation, anything else is bracketed and
/// refined by golden-section search to relative tolerance `tol`.
pub fn exact_ls<O: Objective + ?Sized>(f: &O, x: &[f64], u: &[f64], tol: f64, fx: Option<f64>) -> Result<StepResult> {
    check_shapes(f, x, u)?;
    let mut out = vec![0.0; x.len()];
    let info = exact_ls_into(f, x, u, tol, fx, &mut out)?;
    Ok(info.into_result(out))
}

pub(crate) fn exact_ls_into<O: Objective + ?Sized>(
    f: &O,
    x: &[f64],
    u: &[f64],
    tol: f64,
    fx: Option<f64>,
    out: &mut [f64],
) -> Result<StepInfo> {
    let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::Input(format!(
            "search direction must be non-zero and finite (norm {norm})"
        )));
    }
    let (f0, mut evals) = current_value(f, x, fx)?;

    // Work with multiples of the raw direction; `norm` converts step lengths.
    let lambda = if f.is_quadratic() {
        // Probe at distance ‖x‖ along the unit direction. Interpolation is
        // exact for any probe length; this one keeps f(x±hv) on the scale of
        // f(x) for quadratics centered at the origin.
        let xnorm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let h = if xnorm > 0.0 && xnorm.is_finite() { xnorm } else { 1.0 };
        let t = h / norm;
        axpy_into(out, x, t, u);
        let fp = f.value(out);
        axpy_into(out, x, -t, u);
        let fm = f.value(out);
        evals += 2;
        let a = 0.5 * (fp + fm - 2.0 * f0);
        let b = 0.5 * (fp - fm);
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::numeric("non-finite values during interpolation", x));
        }
        if a <= 0.0 {
            0.0
        } else {
            -b / (2.0 * a) * t
        }
    } else {
        let (best, used) = golden_section(f, x, u, norm, f0, tol, out)?;
        evals += used;
        best
    };

    if lambda == 0.0 {
        out.copy_from_slice(x);
        return Ok(StepInfo {
            f_next: f0,
            sigma_next: 0.0,
            sigma_taken: 0.0,
            accepted: true,
            evals,
        });
    }

    axpy_into(out, x, lambda, u);
    let f_next = f.value(out);
    evals += 1;
    if f_next.is_nan() {
        return Err(Error::numeric("objective returned NaN after the exact step", out));
    }
    if f_next <= f0 {
        Ok(StepInfo {
            f_next,
            sigma_next: lambda,
            sigma_taken: lambda,
            accepted: true,
            evals,
        })
    } else {
        // Rounding left us marginally above f(x).
        out.copy_from_slice(x);
        Ok(StepInfo {
            f_next: f0,
            sigma_next: 0.0,
            sigma_taken: 0.0,
            accepted: false,
            evals,
        })
    }
}

/// Bracket a minimizer of `t -> f(x + t*u)` and shrink it by golden section.
/// Returns the best multiplier of `u` seen (0 if none improves) and the
/// number of evaluations.
fn golden_section<O: Objective + ?Sized>(
    f: &O,
    x: &[f64],
    u: &[f64],
    norm: f64,
    f0: f64,
    tol: f64,
    buf: &mut [f64],
) -> Result<(f64, u64)> {
    let mut evals = 0u64;
    let mut phi = |t: f64, buf: &mut [f64]| -> Result<f64> {
        axpy_into(buf, x, t, u);
        evals += 1;
        let v = f.value(buf);
        if v.is_nan() {
            Err(Error::numeric("objective returned NaN during bracketing", buf))
        } else {
            Ok(v)
        }
    };

    let start = BRACKET_START / norm;
    let fp = phi(start, buf)?;
    let fm = phi(-start, buf)?;

    let (mut lo, mut hi) = if fp >= f0 && fm >= f0 {
        (-start, start)
    } else {
        let dir = if fp < fm { 1.0 } else { -1.0 };
        let mut prev = 0.0;
        let mut cur = dir * start;
        let mut f_cur = fp.min(fm);
        let mut expansions = 0;
        loop {
            let next = 2.0 * cur;
            let f_next = phi(next, buf)?;
            if f_next >= f_cur {
                break if dir > 0.0 { (prev, next) } else { (next, prev) };
            }
            prev = cur;
            cur = next;
            f_cur = f_next;
            expansions += 1;
            if expansions >= MAX_EXPANSIONS || !cur.is_finite() {
                return Err(Error::numeric(
                    format!("failed to bracket a minimizer after {expansions} expansions"),
                    x,
                ));
            }
        }
    };

    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = phi(c, buf)?;
    let mut fd = phi(d, buf)?;
    while (hi - lo).abs() > tol * (lo.abs() + hi.abs()).max(f64::MIN_POSITIVE) {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = phi(c, buf)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = phi(d, buf)?;
        }
        if c == d {
            break;
        }
    }
    let (t, ft) = if fc <= fd { (c, fc) } else { (d, fd) };
    let best = if ft < f0 { t } else { 0.0 };
    Ok((best, evals))
}

/// Dispatch to the oracle selected by `mode`. `sigma` is ignored in exact mode.
pub fn line_search<O: Objective + ?Sized>(
    mode: LineSearchMode,
    f: &O,
    x: &[f64],
    u: &[f64],
    sigma: f64,
    fx: Option<f64>,
) -> Result<StepResult> {
    mode.validate()?;
    match mode {
        LineSearchMode::Exact { tol } => exact_ls(f, x, u, tol, fx),
        LineSearchMode::Adaptive { p } => ass_step(f, x, u, sigma, p, fx),
    }
}

pub(crate) fn line_search_into<O: Objective + ?Sized>(
    mode: LineSearchMode,
    f: &O,
    x: &[f64],
    u: &[f64],
    sigma: f64,
    fx: Option<f64>,
    out: &mut [f64],
) -> Result<StepInfo> {
    match mode {
        LineSearchMode::Exact { tol } => exact_ls_into(f, x, u, tol, fx, out),
        LineSearchMode::Adaptive { p } => ass_step_into(f, x, u, sigma, p, fx, out),
    }
}
