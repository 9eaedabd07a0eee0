//! Convergence of `(alpha_n)_N` towards its limit: residual curves, the
//! oscillation envelope and the exponential law `Delta_N = exp(-k0 - k1 N^(1/3))`.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::exec::Execution;
use crate::numerics::{NumericsError, Real};
use crate::strongcoupling::{FrequencySchedule, StrongCouplingEngine, StrongCouplingError};

/// Lower end of the fit window used by default.
pub const DEFAULT_N_MIN: usize = 65;

/// Half-width, in orders, over which an envelope point must dominate. The
/// residuals carry an even/odd ripple of period 2 on top of the slow
/// oscillation; a radius of 2 keeps only the peaks of the latter.
pub const DEFAULT_DOMINANCE_RADIUS: usize = 2;

/// Digits used for the least-squares fit; the data themselves carry far fewer.
const FIT_DIGITS: u32 = 60;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error(transparent)]
    StrongCoupling(#[from] StrongCouplingError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("empty order range {from}..={to}")]
    EmptyRange { from: usize, to: usize },
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("degenerate fit: all points share the same N")]
    DegenerateDesign,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceSample {
    pub order: usize,
    #[serde(serialize_with = "ser_real")]
    pub approx: Real,
    #[serde(serialize_with = "ser_real")]
    pub delta: Real,
    pub sign: i32,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeFit {
    #[serde(serialize_with = "ser_real")]
    pub kappa0: Real,
    #[serde(serialize_with = "ser_real")]
    pub kappa1: Real,
    #[serde(serialize_with = "ser_real")]
    pub rms_residual: Real,
    pub points_used: usize,
}

fn ser_real<S: serde::Serializer>(v: &Real, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.format_sig(25))
}

impl ConvergenceSample {
    pub fn new(order: usize, approx: Real, reference: &Real) -> Self {
        let diff = &approx - reference;
        ConvergenceSample {
            order,
            sign: diff.signum(),
            delta: diff.abs(),
            approx,
        }
    }
}

/// `(alpha_n)_N` and its residual against `reference` for `N` in `from..=to`.
pub fn convergence_series(
    engine: &StrongCouplingEngine,
    n: usize,
    from: usize,
    to: usize,
    reference: &Real,
    schedule: &FrequencySchedule,
    exec: Execution,
) -> Result<Vec<ConvergenceSample>, DiagnosticsError> {
    if from > to {
        return Err(DiagnosticsError::EmptyRange { from, to });
    }
    let orders: Vec<usize> = (from..=to).collect();
    let alphas = engine.alpha_sweep(n, &orders, schedule, exec)?;
    Ok(alphas
        .into_iter()
        .map(|a| ConvergenceSample::new(a.order, a.value, reference))
        .collect())
}

/// Upper envelope with the default dominance radius.
pub fn envelope(samples: &[ConvergenceSample]) -> Result<Vec<ConvergenceSample>, DiagnosticsError> {
    envelope_with(samples, DEFAULT_DOMINANCE_RADIUS)
}

/// Interior samples whose `delta` is strictly larger than both neighbours and
/// no smaller than any sample within `radius` positions. `radius = 1` gives
/// the plain local maxima.
pub fn envelope_with(samples: &[ConvergenceSample], radius: usize) -> Result<Vec<ConvergenceSample>, DiagnosticsError> {
    if samples.len() < 5 {
        return Err(DiagnosticsError::TooFewSamples {
            needed: 5,
            got: samples.len(),
        });
    }
    let radius = radius.max(1);
    if samples.len() <= 2 * radius {
        return Ok(Vec::new());
    }
    Ok((radius..samples.len() - radius)
        .filter(|&i| {
            let d = &samples[i].delta;
            *d > samples[i - 1].delta
                && *d > samples[i + 1].delta
                && samples[i - radius..=i + radius].iter().all(|s| *d >= s.delta)
        })
        .map(|i| samples[i].clone())
        .collect())
}

/// Least squares of `ln Delta_N` against `N^(1/3)` over points with `N >= n_min`.
pub fn fit_envelope(points: &[ConvergenceSample], n_min: usize) -> Result<EnvelopeFit, DiagnosticsError> {
    let used: Vec<&ConvergenceSample> = points
        .iter()
        .filter(|p| p.order >= n_min && p.delta.is_positive())
        .collect();
    if used.len() < 3 {
        return Err(DiagnosticsError::TooFewSamples {
            needed: 3,
            got: used.len(),
        });
    }
    if used.iter().all(|p| p.order == used[0].order) {
        return Err(DiagnosticsError::DegenerateDesign);
    }
    let mut xs = Vec::with_capacity(used.len());
    let mut ys = Vec::with_capacity(used.len());
    for p in &used {
        xs.push(Real::from_i64(p.order as i64, FIT_DIGITS).nth_root(3)?);
        ys.push(p.delta.with_digits(FIT_DIGITS).ln()?);
    }
    let m = used.len() as i64;
    let mean = |v: &[Real]| v.iter().fold(Real::zero(FIT_DIGITS), |a, b| &a + b).div_int(m);
    let (mx, my) = (mean(&xs), mean(&ys));
    let mut sxx = Real::zero(FIT_DIGITS);
    let mut sxy = Real::zero(FIT_DIGITS);
    for (x, y) in xs.iter().zip(&ys) {
        let dx = x - &mx;
        sxy = &sxy + &(&dx * &(y - &my));
        sxx = &sxx + &(&dx * &dx);
    }
    let slope = &sxy / &sxx;
    let intercept = &my - &(&slope * &mx);
    let mut ss = Real::zero(FIT_DIGITS);
    for (x, y) in xs.iter().zip(&ys) {
        let r = y - &(&intercept + &(&slope * x));
        ss = &ss + &(&r * &r);
    }
    Ok(EnvelopeFit {
        kappa0: -intercept,
        kappa1: -slope,
        rms_residual: ss.div_int(m).sqrt()?,
        points_used: used.len(),
    })
}

/// One plot row: `N, N^(1/3), Delta_N, ln Delta_N, sign`.
#[derive(Debug, Clone, Serialize)]
pub struct FigRow {
    pub order: usize,
    #[serde(serialize_with = "ser_real")]
    pub cbrt_order: Real,
    #[serde(serialize_with = "ser_real")]
    pub delta: Real,
    /// `None` when `delta` is exactly zero (the self-reference point).
    #[serde(serialize_with = "ser_opt_real")]
    pub ln_delta: Option<Real>,
    pub sign: i32,
}

fn ser_opt_real<S: serde::Serializer>(v: &Option<Real>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(r) => ser_real(r, s),
        None => s.serialize_none(),
    }
}

pub fn fig_rows(samples: &[ConvergenceSample]) -> Result<Vec<FigRow>, DiagnosticsError> {
    samples
        .iter()
        .map(|s| {
            let digits = s.delta.digits().min(FIT_DIGITS);
            Ok(FigRow {
                order: s.order,
                cbrt_order: Real::from_i64(s.order as i64, digits).nth_root(3)?,
                delta: s.delta.clone(),
                ln_delta: if s.delta.is_zero() {
                    None
                } else {
                    Some(s.delta.with_digits(digits).ln()?)
                },
                sign: s.sign,
            })
        })
        .collect()
}

/// Plot-ready data for `alpha_n` over `from..=to`, referenced to the highest order available.
pub fn export_fig_data(
    engine: &StrongCouplingEngine,
    n: usize,
    from: usize,
    to: usize,
    schedule: &FrequencySchedule,
    exec: Execution,
) -> Result<Vec<FigRow>, DiagnosticsError> {
    let reference = engine.alpha(engine.max_order(), n, schedule)?.value;
    fig_rows(&convergence_series(engine, n, from, to, &reference, schedule, exec)?)
}

pub const FIG_CSV_HEADER: &str = "N,N_cbrt,delta,ln_delta,sign";

pub fn fig_rows_csv(rows: &[FigRow], digits: u32) -> String {
    let mut out = String::from(FIG_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let ln = r.ln_delta.as_ref().map(|v| v.format_sig(digits)).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.order,
            r.cbrt_order.format_sig(digits),
            r.delta.format_sig(digits),
            ln,
            r.sign
        );
    }
    out
}

/// Number of sign changes in the residuals, skipping exact zeros.
pub fn sign_changes(samples: &[ConvergenceSample]) -> usize {
    let signs: Vec<i32> = samples.iter().map(|s| s.sign).filter(|&s| s != 0).collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(order: usize, delta: Real) -> ConvergenceSample {
        ConvergenceSample::new(order, delta, &Real::zero(FIT_DIGITS))
    }

    fn synthetic(k0: &str, k1: &str, orders: impl Iterator<Item = usize>) -> Vec<ConvergenceSample> {
        let k0 = Real::parse(k0, FIT_DIGITS).unwrap();
        let k1 = Real::parse(k1, FIT_DIGITS).unwrap();
        orders
            .map(|n| {
                let x = Real::from_i64(n as i64, FIT_DIGITS).nth_root(3).unwrap();
                sample(n, (-(&k0 + &(&k1 * &x))).exp())
            })
            .collect()
    }

    #[test]
    fn exact_law_is_recovered() {
        let pts = synthetic("1", "9.7", (65..=251).step_by(7));
        let fit = fit_envelope(&pts, DEFAULT_N_MIN).unwrap();
        let tol = Real::parse("1e-12", FIT_DIGITS).unwrap();
        assert!((&fit.kappa1 - &Real::parse("9.7", FIT_DIGITS).unwrap()).abs() < tol);
        assert!((&fit.kappa0 - &Real::one(FIT_DIGITS)).abs() < tol);
        assert!(fit.rms_residual < tol);
        assert_eq!(fit.points_used, pts.len());
    }

    #[test]
    fn fit_respects_lower_cutoff() {
        let pts = synthetic("0.5", "3", 10..=40);
        assert_eq!(fit_envelope(&pts, 30).unwrap().points_used, 11);
        assert!(matches!(
            fit_envelope(&pts, 39),
            Err(DiagnosticsError::TooFewSamples { .. })
        ));
    }

    #[test]
    fn degenerate_design_is_rejected() {
        let d = Real::parse("0.01", FIT_DIGITS).unwrap();
        let pts = vec![sample(80, d.clone()), sample(80, d.clone()), sample(80, d)];
        assert!(matches!(fit_envelope(&pts, 1), Err(DiagnosticsError::DegenerateDesign)));
    }

    #[test]
    fn monotone_data_has_no_envelope() {
        let pts = synthetic("0", "1", 1..=20);
        assert!(envelope(&pts).unwrap().is_empty());
        assert!(envelope_with(&pts, 1).unwrap().is_empty());
        assert!(envelope(&pts[..4]).is_err());
    }

    #[test]
    fn ripple_is_filtered_by_dominance_radius() {
        // slowly decaying sequence with a period-2 ripple and one bump at N = 12
        let vals = [
            9.0, 8.0, 8.5, 7.0, 7.5, 6.0, 6.5, 5.0, 5.5, 6.2, 7.4, 6.1, 8.0, 6.0, 5.0, 4.0,
        ];
        let pts: Vec<ConvergenceSample> = vals
            .iter()
            .enumerate()
            .map(|(i, v)| sample(i, Real::from_f64(*v, 30)))
            .collect();
        let plain: Vec<usize> = envelope_with(&pts, 1).unwrap().iter().map(|p| p.order).collect();
        assert_eq!(plain, vec![2, 4, 6, 10, 12]);
        let env: Vec<usize> = envelope(&pts).unwrap().iter().map(|p| p.order).collect();
        assert_eq!(env, vec![12]);
    }

    #[test]
    fn envelope_picks_cosine_peaks() {
        let pts: Vec<ConvergenceSample> = (1..=200usize)
            .map(|n| {
                let x = (n as f64).cbrt();
                sample(n, Real::from_f64((-x).exp() * (2.0 + (n as f64).cos()), 40))
            })
            .collect();
        let env = envelope(&pts).unwrap();
        assert!(env.len() >= 25);
        for p in &env {
            // cos N is close to its maximum at every selected peak
            assert!((p.order as f64).cos() > 0.8, "N={}", p.order);
        }
    }

    #[test]
    fn signs_and_rows() {
        let r = Real::parse("1", 30).unwrap();
        let s: Vec<ConvergenceSample> = ["1.5", "0.5", "1", "0.9", "1.2"]
            .iter()
            .enumerate()
            .map(|(i, v)| ConvergenceSample::new(i + 1, Real::parse(v, 30).unwrap(), &r))
            .collect();
        assert_eq!(s.iter().map(|x| x.sign).collect::<Vec<_>>(), vec![1, -1, 0, -1, 1]);
        assert_eq!(sign_changes(&s), 2);
        let rows = fig_rows(&s).unwrap();
        assert!(rows[2].ln_delta.is_none());
        let csv = fig_rows_csv(&rows, 8);
        assert!(csv.starts_with(FIG_CSV_HEADER));
        assert_eq!(csv.lines().count(), 6);
    }
}
