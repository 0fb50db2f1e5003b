//! Arps decline curves: `q(t) = q_i / (1 + b·d_i·t)^(1/b)`.
//!
//! `b = 0` is the exponential limit `q_i·exp(−d_i·t)` and `b = 1` the
//! harmonic decline. Time is measured in samples of the fitted series.

use serde::{Deserialize, Serialize};

use crate::dataset::RateSeries;
use crate::error::{Error, Result};

/// Exponents at or below this use the exponential form.
pub const EXPONENTIAL_B: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArpsParams {
    pub q_i: f64,
    pub d_i: f64,
    pub b: f64,
}

impl ArpsParams {
    pub fn new(q_i: f64, d_i: f64, b: f64) -> Result<Self> {
        let p = Self { q_i, d_i, b };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q_i > 0.0) || !(self.d_i >= 0.0) || !(0.0..=1.0).contains(&self.b) {
            return Err(Error::InvalidArgument(format!(
                "Arps parameters need q_i > 0, d_i >= 0 and 0 <= b <= 1, got {self:?}"
            )));
        }
        Ok(())
    }
}

pub fn arps_rate(p: &ArpsParams, t: f64) -> f64 {
    if p.b <= EXPONENTIAL_B {
        p.q_i * (-p.d_i * t).exp()
    } else {
        p.q_i / (1.0 + p.b * p.d_i * t).powf(1.0 / p.b)
    }
}

/// `(∂q/∂q_i, ∂q/∂d_i)` at `t`.
fn arps_jacobian(p: &ArpsParams, t: f64) -> (f64, f64) {
    if p.b <= EXPONENTIAL_B {
        let e = (-p.d_i * t).exp();
        (e, -p.q_i * t * e)
    } else {
        let base = 1.0 + p.b * p.d_i * t;
        let f = base.powf(-1.0 / p.b);
        (f, -p.q_i * t * f / base)
    }
}

/// Evaluates the curve at `start_step..start_step + horizon`.
pub fn forecast_arps(p: &ArpsParams, start_step: usize, horizon: usize) -> Result<Vec<f64>> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be >= 1".into()));
    }
    Ok((start_step..start_step + horizon)
        .map(|t| arps_rate(p, t as f64))
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArpsFit {
    pub params: ArpsParams,
    /// `sqrt(Σ (q_obs − q_fit)²)`.
    pub residual_norm: f64,
    /// Set when the series shows no decline; `d_i` is then ~0.
    pub non_decaying: bool,
}

fn sse(q: &[f64], p: &ArpsParams) -> f64 {
    q.iter()
        .enumerate()
        .map(|(t, v)| (v - arps_rate(p, t as f64)).powi(2))
        .sum()
}

/// Levenberg–Marquardt damped Gauss–Newton over `(q_i, d_i)` for fixed `b`.
fn fit_fixed_b(q: &[f64], b: f64) -> (ArpsParams, f64) {
    let n = q.len();
    let last = (n - 1) as f64;
    let d0 = ((q[0] / q[n - 1]).ln() / last).max(0.0);
    let mut p = ArpsParams {
        q_i: q[0],
        d_i: d0,
        b,
    };
    let mut cost = sse(q, &p);
    let mut lambda = 1e-3;
    for _ in 0..500 {
        let (mut a11, mut a12, mut a22, mut g1, mut g2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (t, v) in q.iter().enumerate() {
            let t = t as f64;
            let r = v - arps_rate(&p, t);
            let (j1, j2) = arps_jacobian(&p, t);
            a11 += j1 * j1;
            a12 += j1 * j2;
            a22 += j2 * j2;
            g1 += j1 * r;
            g2 += j2 * r;
        }
        let mut improved = false;
        while lambda < 1e16 {
            let m11 = a11 * (1.0 + lambda);
            let m22 = a22 * (1.0 + lambda) + f64::MIN_POSITIVE;
            let det = m11 * m22 - a12 * a12;
            if det == 0.0 || !det.is_finite() {
                lambda *= 10.0;
                continue;
            }
            let dq = (m22 * g1 - a12 * g2) / det;
            let dd = (m11 * g2 - a12 * g1) / det;
            let trial = ArpsParams {
                q_i: (p.q_i + dq).max(f64::MIN_POSITIVE),
                d_i: (p.d_i + dd).max(0.0),
                b,
            };
            let c = sse(q, &trial);
            if c.is_finite() && c <= cost {
                let rel = (cost - c) / cost.max(f64::MIN_POSITIVE);
                let moved = (trial.q_i - p.q_i).abs() > 1e-15 * p.q_i
                    || (trial.d_i - p.d_i).abs() > 1e-15 * p.d_i.max(1e-300);
                p = trial;
                cost = c;
                lambda = (lambda / 10.0).max(1e-12);
                improved = moved && rel > 1e-16;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    (p, cost)
}

/// Least-squares Arps fit: golden-section search over `b ∈ [0, 1]` with an
/// inner Gauss–Newton fit of `(q_i, d_i)` for each trial `b`.
pub fn fit_arps(series: &RateSeries) -> Result<ArpsFit> {
    let q = series.values();
    if q.len() < 3 {
        return Err(Error::InsufficientHistory {
            required: 3,
            available: q.len(),
        });
    }
    if q.iter().any(|v| *v <= 0.0) {
        return Err(Error::InvalidArgument(
            "decline fitting needs strictly positive rates".into(),
        ));
    }
    let cost = |b: f64| fit_fixed_b(q, b);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = cost(x1).1;
    let mut f2 = cost(x2).1;
    while hi - lo > 1e-7 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = cost(x1).1;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = cost(x2).1;
        }
    }
    let candidates = [0.0, (lo + hi) / 2.0, 1.0];
    let (params, best) = candidates
        .iter()
        .map(|b| cost(*b))
        .fold(None, |acc: Option<(ArpsParams, f64)>, cur| match acc {
            Some(a) if a.1 <= cur.1 => Some(a),
            _ => Some(cur),
        })
        .expect("candidates non-empty");
    let non_decaying = params.d_i <= 1e-9 || q[q.len() - 1] >= q[0];
    if non_decaying {
        log::warn!("series shows no decline; fitted d_i = {:e}", params.d_i);
    }
    Ok(ArpsFit {
        params,
        residual_norm: best.sqrt(),
        non_decaying,
    })
}
