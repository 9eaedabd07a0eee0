//! Variational reexpansion of the weak-coupling series.
//!
//! The harmonic term is split at a trial frequency `Omega`, the remainder is
//! treated as part of the interaction and the series is re-truncated at order
//! `N`. With `lambda = (g/4)/Omega^3` and `w2 = omega^2/Omega^2` the
//! reexpanded coefficients are
//!
//! ```text
//! e_l(lambda, w2) = sum_{j<=l} e_j C((1-3j)/2, l-j) rho^(l-j),   rho = (w2 - 1)/lambda
//! ```
//!
//! and the order-`N` energy is `W_N = Omega * sum_{l<=N} e_l lambda^l`. The
//! implementation regroups by `j`, so that `e_l lambda^l` never divides by
//! `lambda`:
//!
//! ```text
//! W_N = Omega * sum_{j<=N} e_j lambda^j P_j(w2 - 1),   P_j(u) = sum_{k<=N-j} C((1-3j)/2, k) u^k
//! ```

use thiserror::Error;

use crate::benderwu::{BWSeries, BenderWuError};
use crate::exec::Execution;
use crate::numerics::{binomial_half_row, pow_rational_exponent, ExactRational, NumericsError, PrecisionContext, Real};
use crate::strongcoupling::FrequencySchedule;

#[derive(Debug, Error)]
pub enum VptError {
    #[error(transparent)]
    Series(#[from] BenderWuError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("invalid point: {0}")]
    InvalidPoint(String),
    #[error("no stationary or turning point of W_{order} on [{low}, {high}]")]
    NoStationaryPoint { order: usize, low: String, high: String },
}

/// Physical parameters of `V = omega^2 x^2 / 2 + (g/4) x^4` plus a trial frequency.
#[derive(Debug, Clone)]
pub struct PhysicalPoint {
    g: Real,
    omega: Real,
    trial_omega: Real,
}

impl PhysicalPoint {
    pub fn new(g: Real, omega: Real, trial_omega: Real) -> Result<Self, VptError> {
        if !g.is_positive() {
            return Err(VptError::InvalidPoint("g must be positive".into()));
        }
        if omega.is_negative() {
            return Err(VptError::InvalidPoint("omega must be non-negative".into()));
        }
        if !trial_omega.is_positive() {
            return Err(VptError::InvalidPoint("trial frequency must be positive".into()));
        }
        Ok(PhysicalPoint { g, omega, trial_omega })
    }

    pub fn g(&self) -> &Real {
        &self.g
    }

    pub fn omega(&self) -> &Real {
        &self.omega
    }

    pub fn trial_omega(&self) -> &Real {
        &self.trial_omega
    }

    /// `r = (2/g)(omega^2 - Omega^2)`.
    pub fn r(&self) -> Real {
        let diff = &(&self.omega * &self.omega) - &(&self.trial_omega * &self.trial_omega);
        &diff.mul_int(2) / &self.g
    }

    pub fn reduced(&self) -> ReducedPoint {
        let omega_cubed = self.trial_omega.powi(3);
        let lambda = &self.g.div_int(4) / &omega_cubed;
        let ratio = &self.omega / &self.trial_omega;
        ReducedPoint {
            lambda,
            omega_hat_sq: &ratio * &ratio,
        }
    }
}

/// Dimensionless `lambda = (g/4)/Omega^3` and `w2 = omega^2/Omega^2`.
#[derive(Debug, Clone)]
pub struct ReducedPoint {
    lambda: Real,
    omega_hat_sq: Real,
}

impl ReducedPoint {
    pub fn new(lambda: Real, omega_hat_sq: Real) -> Result<Self, VptError> {
        if !lambda.is_positive() {
            return Err(VptError::InvalidPoint("lambda must be positive".into()));
        }
        if omega_hat_sq.is_negative() {
            return Err(VptError::InvalidPoint("omega_hat^2 must be non-negative".into()));
        }
        Ok(ReducedPoint { lambda, omega_hat_sq })
    }

    pub fn lambda(&self) -> &Real {
        &self.lambda
    }

    pub fn omega_hat_sq(&self) -> &Real {
        &self.omega_hat_sq
    }

    /// `g/Omega^3 = 4 lambda`.
    pub fn g_hat(&self) -> Real {
        self.lambda.mul_int(4)
    }

    /// Reexpansion argument `rho = (w2 - 1)/lambda`.
    pub fn rho(&self) -> Real {
        &(&self.omega_hat_sq - &Real::one(self.lambda.digits())) / &self.lambda
    }
}

#[derive(Debug, Clone)]
pub struct VariationalEnergy {
    pub order: usize,
    pub trial_omega: Real,
    pub value: Real,
}

/// `e_j` and `C((1-3j)/2, k)` for `j + k <= order`, rounded to working precision.
#[derive(Debug, Clone)]
pub struct ReexpansionTable {
    digits: u32,
    bw: Vec<Real>,
    binom: Vec<Vec<Real>>,
}

impl ReexpansionTable {
    pub fn new(series: &BWSeries, order: usize, digits: u32) -> Result<Self, VptError> {
        series.check_order(order)?;
        let bw = series.coefficients()[..=order]
            .iter()
            .map(|c| c.to_real(digits))
            .collect();
        let binom = (0..=order)
            .map(|j| {
                // C(a, k) = C(a, k-1) (3 - 3j - 2k) / (2k)
                let mut row = Vec::with_capacity(order - j + 1);
                let mut c = Real::one(digits + 2);
                row.push(c.with_digits(digits));
                for k in 1..=(order - j) as i64 {
                    c = c.mul_int(3 - 3 * j as i64 - 2 * k).div_int(2 * k);
                    row.push(c.with_digits(digits));
                }
                row
            })
            .collect();
        Ok(ReexpansionTable { digits, bw, binom })
    }

    pub fn order(&self) -> usize {
        self.bw.len() - 1
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }

    pub fn bw(&self, j: usize) -> &Real {
        &self.bw[j]
    }

    /// `C((1-3j)/2, k)` for `k <= order - j`.
    pub fn binomial(&self, j: usize, k: usize) -> &Real {
        &self.binom[j][k]
    }

    pub fn binomial_row(&self, j: usize) -> &[Real] {
        &self.binom[j]
    }

    /// `P_j(u)` and its first two derivatives, truncated at total order `n`.
    fn poly(&self, j: usize, n: usize, u: &Real) -> [Real; 3] {
        let row = &self.binom[j][..=n - j];
        let mut p = Real::zero(self.digits);
        let mut dp = Real::zero(self.digits);
        let mut ddp = Real::zero(self.digits);
        for c in row.iter().rev() {
            ddp = &(&ddp * u) + &dp.mul_int(2);
            dp = &(&dp * u) + &p;
            p = &(&p * u) + c;
        }
        [p, dp, ddp]
    }
}

/// Reexpanded coefficient `e_l(lambda, w2)`.
pub fn reexpansion_coefficient(series: &BWSeries, l: usize, point: &ReducedPoint) -> Result<Real, VptError> {
    series.check_order(l)?;
    let digits = point.lambda.digits();
    let rho = point.rho();
    let mut acc = Real::zero(digits);
    for j in 0..=l {
        let k = (l - j) as u32;
        let c = binomial_half_row(j as u32, k).pop().unwrap_or_else(ExactRational::one);
        let term = &(&series.coefficients()[j].to_real(digits) * &c.to_real(digits)) * &rho.powi(i64::from(k));
        acc = &acc + &term;
    }
    Ok(acc)
}

/// Coefficients of `e_l` as a polynomial in `rho`: entry `k` multiplies `rho^k`.
pub fn reexpansion_polynomial(series: &BWSeries, l: usize) -> Result<Vec<ExactRational>, VptError> {
    series.check_order(l)?;
    Ok((0..=l)
        .map(|k| {
            let j = l - k;
            let c = binomial_half_row(j as u32, k as u32)
                .pop()
                .unwrap_or_else(ExactRational::one);
            &series.coefficients()[j] * &c
        })
        .collect())
}

/// Exact `e_l(rho)` for rational `rho`.
pub fn reexpansion_coefficient_exact(
    series: &BWSeries,
    l: usize,
    rho: &ExactRational,
) -> Result<ExactRational, VptError> {
    let poly = reexpansion_polynomial(series, l)?;
    Ok(poly
        .iter()
        .rev()
        .fold(ExactRational::zero(), |acc, c| &(&acc * rho) + c))
}

/// `W_N(g, Omega)` on the physical scale.
pub fn variational_energy(
    series: &BWSeries,
    g: &Real,
    omega: &Real,
    trial_omega: &Real,
    order: usize,
) -> Result<VariationalEnergy, VptError> {
    let point = PhysicalPoint::new(g.clone(), omega.clone(), trial_omega.clone())?;
    let digits = g.digits().max(omega.digits()).max(trial_omega.digits());
    let table = ReexpansionTable::new(series, order, digits)?;
    let f = EnergyFunction::new(&table, order, &point.g, &point.omega);
    Ok(VariationalEnergy {
        order,
        trial_omega: trial_omega.clone(),
        value: f.eval(trial_omega)[0].clone(),
    })
}

/// `Omega -> W_N(g, Omega)` at fixed `g`, `omega`, with analytic derivatives.
pub struct EnergyFunction<'a> {
    table: &'a ReexpansionTable,
    order: usize,
    omega_sq: Real,
    g4_powers: Vec<Real>,
}

impl<'a> EnergyFunction<'a> {
    pub fn new(table: &'a ReexpansionTable, order: usize, g: &Real, omega: &Real) -> Self {
        let digits = table.digits();
        let g4 = g.with_digits(digits).div_int(4);
        let mut g4_powers = Vec::with_capacity(order + 1);
        let mut p = Real::one(digits);
        for _ in 0..=order {
            g4_powers.push(p.clone());
            p = &p * &g4;
        }
        let omega = omega.with_digits(digits);
        EnergyFunction {
            table,
            order,
            omega_sq: &omega * &omega,
            g4_powers,
        }
    }

    /// `[W, dW/dOmega, d2W/dOmega2]` at `trial_omega`.
    pub fn eval(&self, trial_omega: &Real) -> [Real; 3] {
        let digits = self.table.digits();
        let om = trial_omega.with_digits(digits);
        let inv = om.recip();
        let inv2 = &inv * &inv;
        let inv3 = &inv2 * &inv;
        let u = &(&self.omega_sq * &inv2) - &Real::one(digits);
        let du = (&self.omega_sq * &inv3).mul_int(-2);
        let ddu = (&self.omega_sq * &(&inv3 * &inv)).mul_int(6);

        let mut w = Real::zero(digits);
        let mut dw = Real::zero(digits);
        let mut ddw = Real::zero(digits);
        // f_j = Omega^(1-3j), starting at j = 0
        let mut f = om.clone();
        for j in 0..=self.order {
            let p1 = 1 - 3 * j as i64;
            let df = (&f * &inv).mul_int(p1);
            let ddf = (&df * &inv).mul_int(p1 - 1);
            let [p, dp, ddp] = self.table.poly(j, self.order, &u);
            let c = &self.g4_powers[j] * self.table.bw(j);
            let val = &f * &p;
            let d1 = &(&df * &p) + &(&(&f * &dp) * &du);
            let d2 =
                &(&(&ddf * &p) + &(&(&df * &dp) * &du).mul_int(2)) + &(&f * &(&(&ddp * &(&du * &du)) + &(&dp * &ddu)));
            w = &w + &(&c * &val);
            dw = &dw + &(&c * &d1);
            ddw = &ddw + &(&c * &d2);
            f = &f * &inv3;
        }
        [w, dw, ddw]
    }
}

/// Partial sum `omega * sum_{l<=N} e_l ((g/4)/omega^3)^l` of the raw series.
pub fn raw_partial_sum(series: &BWSeries, g: &Real, omega: &Real, order: usize) -> Result<Real, VptError> {
    series.check_order(order)?;
    if !g.is_positive() || !omega.is_positive() {
        return Err(VptError::InvalidPoint("raw series needs g > 0 and omega > 0".into()));
    }
    let digits = g.digits().max(omega.digits());
    let x = &g.div_int(4) / &omega.powi(3);
    let mut acc = Real::zero(digits);
    for c in series.coefficients()[..=order].iter().rev() {
        acc = &(&acc * &x) + &c.to_real(digits);
    }
    Ok(omega * &acc)
}

/// Order at which the raw series is best truncated, `round(3 omega^3 / (4 g))`.
pub fn optimal_truncation_order(g: &Real, omega: &Real) -> Result<usize, VptError> {
    if !g.is_positive() {
        return Err(VptError::InvalidPoint("g must be positive".into()));
    }
    let v = (&omega.powi(3).mul_int(3) / &g.mul_int(4)).to_f64().round();
    Ok(if v.is_finite() && v > 0.0 { v as usize } else { 0 })
}

/// Search bracket for the trial frequency at order `N`.
pub fn frequency_bracket(g: &Real, omega: &Real, order: usize, schedule: &FrequencySchedule) -> (Real, Real) {
    let digits = g.digits();
    let n = Real::from_i64(order as i64, digits);
    let low_scale =
        pow_rational_exponent(&(&(g * schedule.c()) * &n).div_int(4), 1, 3).unwrap_or_else(|_| Real::zero(digits));
    let high_scale = pow_rational_exponent(&(g * &n).mul_int(2), 1, 3).unwrap_or_else(|_| Real::zero(digits));
    let low = std::cmp::max(omega.clone(), low_scale).div_int(10);
    let high = std::cmp::max(omega.clone(), high_scale).mul_int(10);
    (low, high)
}

pub const SCAN_POINTS: usize = 512;

/// Trial frequency `Omega_N` at which `W_N` is least sensitive to `Omega`:
/// the positive stationary point nearest the large-order schedule, or, when no
/// stationary point exists, the nearest turning point.
pub fn optimal_frequency(
    series: &BWSeries,
    g: &Real,
    omega: &Real,
    order: usize,
    ctx: &PrecisionContext,
) -> Result<Real, VptError> {
    optimal_frequency_with(series, g, omega, order, ctx, Execution::default())
}

pub fn optimal_frequency_with(
    series: &BWSeries,
    g: &Real,
    omega: &Real,
    order: usize,
    ctx: &PrecisionContext,
    exec: Execution,
) -> Result<Real, VptError> {
    if order == 0 {
        return Err(VptError::InvalidPoint("optimal frequency needs N >= 1".into()));
    }
    let digits = ctx.working_digits();
    let g = g.with_digits(digits);
    let omega = omega.with_digits(digits);
    if !g.is_positive() || omega.is_negative() {
        return Err(VptError::InvalidPoint("need g > 0 and omega >= 0".into()));
    }
    let table = ReexpansionTable::new(series, order, digits)?;
    let f = EnergyFunction::new(&table, order, &g, &omega);
    let schedule = FrequencySchedule::default();
    let target = schedule.trial_frequency(order, &g, digits)?;
    let (low, high) = frequency_bracket(&g, &omega, order, &schedule);

    let ratio = pow_rational_exponent(&(&high / &low), 1, (SCAN_POINTS - 1) as u32)?;
    let mut grid = Vec::with_capacity(SCAN_POINTS);
    let mut x = low.clone();
    for _ in 0..SCAN_POINTS {
        grid.push(x.clone());
        x = &x * &ratio;
    }
    let values = exec.map(&grid, |om| f.eval(om));

    for derivative in [1usize, 2] {
        let mut best: Option<(Real, Real)> = None;
        for i in 0..SCAN_POINTS - 1 {
            let (a, b) = (&values[i][derivative], &values[i + 1][derivative]);
            if a.signum() * b.signum() > 0 {
                continue;
            }
            let root = if a.is_zero() {
                grid[i].clone()
            } else if b.is_zero() {
                grid[i + 1].clone()
            } else {
                refine_root(
                    |om| f.eval(om)[derivative].clone(),
                    grid[i].clone(),
                    a.clone(),
                    grid[i + 1].clone(),
                    b.clone(),
                    digits,
                )
            };
            let dist = (&root - &target).abs();
            if best.as_ref().is_none_or(|(_, d)| dist < *d) {
                best = Some((root, dist));
            }
        }
        if let Some((root, _)) = best {
            return Ok(root);
        }
    }
    Err(VptError::NoStationaryPoint {
        order,
        low: low.format_sig(8),
        high: high.format_sig(8),
    })
}

/// Illinois regula falsi on a sign-changing bracket `[a, b]`; every third
/// step that fails to halve the bracket is replaced by bisection.
fn refine_root(f: impl Fn(&Real) -> Real, mut a: Real, mut fa: Real, mut b: Real, mut fb: Real, digits: u32) -> Real {
    let rel = Real::parse(&format!("1e-{}", digits.saturating_sub(6)), digits).expect("literal");
    let tol = &a.abs().max(b.abs()) * &rel;
    let mut checkpoint = (&b - &a).abs();
    for iter in 1..=4 * digits as usize {
        let width = (&b - &a).abs();
        if width <= tol {
            break;
        }
        let bisect = iter % 3 == 0 && width.mul_int(2) > checkpoint;
        if iter % 3 == 0 {
            checkpoint = width;
        }
        let c = if bisect {
            (&a + &b).div_int(2)
        } else {
            &b - &(&fb * &(&(&b - &a) / &(&fb - &fa)))
        };
        let fc = f(&c);
        if fc.is_zero() {
            return c;
        }
        if fc.signum() != fb.signum() {
            a = b;
            fa = fb;
        } else if !bisect {
            fa = fa.div_int(2);
        }
        b = c;
        fb = fc;
    }
    if fa.abs() < fb.abs() {
        a
    } else {
        b
    }
}
