//! Strong-coupling coefficients from the variational energies.
//!
//! Writing `W_N = (g/4)^(1/3) lambda^(-1/3) v_N(lambda, w2)` and expanding in
//! `w2 = ((g/4)/omega^3)^(-2/3) lambda^(2/3)` gives
//! `W_N = (g/4)^(1/3) sum_n alpha_n ((g/4)/omega^3)^(-2n/3)` with
//!
//! ```text
//! alpha_n = lambda^((2n-1)/3) / n! * d^n v_N / d(w2)^n  at w2 = 0
//! d^n v_N / d(w2)^n |_0 = sum_{j<=N} e_j lambda^j sum_{k=n}^{N-j} C((1-3j)/2, k) k!/(k-n)! (-1)^(k-n)
//! ```
//!
//! `lambda` follows the large-order schedule
//! `lambda_N = 1 / (4 c N (1 + 6.85 N^(-2/3)))`.

use serde::Serialize;
use thiserror::Error;

use crate::benderwu::{BWSeries, BenderWuError};
use crate::exec::Execution;
use crate::numerics::{
    binomial_half_row, factorial, falling_factorial, pow_rational_exponent, CompensatedSum, ExactRational,
    NumericsError, Real,
};
use crate::vptcore::{ReexpansionTable, VptError};

/// 30-digit constant of the frequency schedule.
pub const SCHEDULE_C: &str = "0.186047272987397512984554740462";
/// Coefficient of the `N^(-2/3)` correction.
pub const SCHEDULE_CORRECTION: &str = "6.85";

/// Highest `n` validated against the reference table.
pub const VALIDATED_N_MAX: usize = 22;

#[derive(Debug, Error)]
pub enum StrongCouplingError {
    #[error(transparent)]
    Series(#[from] BenderWuError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Vpt(#[from] VptError),
    #[error("truncation order must be at least 1")]
    ZeroOrder,
    #[error("invalid schedule: {0}")]
    Schedule(String),
}

/// `Omega_N^3 = g c N (1 + correction / N^(2/3))`.
#[derive(Debug, Clone)]
pub struct FrequencySchedule {
    c: ExactRational,
    correction: ExactRational,
}

impl Default for FrequencySchedule {
    fn default() -> Self {
        FrequencySchedule {
            c: ExactRational::from_decimal(SCHEDULE_C).expect("literal"),
            correction: ExactRational::from_decimal(SCHEDULE_CORRECTION).expect("literal"),
        }
    }
}

impl FrequencySchedule {
    pub fn new(c: ExactRational, correction: ExactRational) -> Result<Self, StrongCouplingError> {
        if c.signum() <= 0 || correction.signum() < 0 {
            return Err(StrongCouplingError::Schedule(
                "c must be positive, correction non-negative".into(),
            ));
        }
        Ok(FrequencySchedule { c, correction })
    }

    /// `c` at a default 60 digits; callers needing more use [`FrequencySchedule::c_exact`].
    pub fn c(&self) -> Real {
        self.c.to_real(60)
    }

    pub fn c_exact(&self) -> &ExactRational {
        &self.c
    }

    pub fn correction(&self) -> &ExactRational {
        &self.correction
    }

    /// `c N (1 + correction N^(-2/3))`, i.e. `Omega_N^3 / g`.
    fn scale(&self, order: usize, digits: u32) -> Result<Real, StrongCouplingError> {
        if order == 0 {
            return Err(StrongCouplingError::ZeroOrder);
        }
        let n = Real::from_i64(order as i64, digits);
        let n_23 = pow_rational_exponent(&n, -2, 3)?;
        let factor = &Real::one(digits) + &(&self.correction.to_real(digits) * &n_23);
        Ok(&(&self.c.to_real(digits) * &n) * &factor)
    }

    /// `lambda_N = (g/4)/Omega_N^3`, independent of `g`.
    pub fn lambda(&self, order: usize, digits: u32) -> Result<Real, StrongCouplingError> {
        Ok(self.scale(order, digits)?.mul_int(4).recip())
    }

    /// `Omega_N` itself for coupling `g`.
    pub fn trial_frequency(&self, order: usize, g: &Real, digits: u32) -> Result<Real, StrongCouplingError> {
        let cube = &self.scale(order, digits)? * &g.with_digits(digits);
        Ok(pow_rational_exponent(&cube, 1, 3)?)
    }
}

impl From<StrongCouplingError> for VptError {
    fn from(e: StrongCouplingError) -> Self {
        match e {
            StrongCouplingError::Vpt(v) => v,
            StrongCouplingError::Series(s) => VptError::Series(s),
            StrongCouplingError::Numerics(n) => VptError::Numerics(n),
            other => VptError::InvalidPoint(other.to_string()),
        }
    }
}

/// Reduced coupling of the schedule at order `N`.
pub fn schedule_lambda(order: usize, schedule: &FrequencySchedule, digits: u32) -> Result<Real, StrongCouplingError> {
    schedule.lambda(order, digits)
}

/// `alpha_n` as extracted at truncation order `order`.
#[derive(Debug, Clone, Serialize)]
pub struct StrongCouplingCoefficient {
    pub n: usize,
    pub order: usize,
    #[serde(serialize_with = "serialize_real")]
    pub value: Real,
    pub working_digits: u32,
}

fn serialize_real<S: serde::Serializer>(v: &Real, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.format_sig(v.digits().min(60)))
}

/// Inner sums `S_j(K) = sum_{k=n}^{K} C((1-3j)/2, k) k!/(k-n)! (-1)^(k-n)` for
/// every `j` and `K <= max_order - j`, at one derivative order `n`.
#[derive(Debug, Clone)]
pub struct DerivativeSums {
    n: usize,
    sums: Vec<Vec<Real>>,
}

impl DerivativeSums {
    pub fn new(table: &ReexpansionTable, n: usize) -> DerivativeSums {
        let digits = table.digits();
        let order = table.order();
        let sums = (0..=order)
            .map(|j| {
                let row = table.binomial_row(j);
                let mut acc = CompensatedSum::new(digits);
                let mut out = Vec::with_capacity(row.len());
                for (k, c) in row.iter().enumerate() {
                    if k >= n {
                        let ff = Real::from_bigint(&falling_factorial(k as u64, n as u64), digits);
                        let term = c * &ff;
                        if (k - n).is_multiple_of(2) {
                            acc.add(&term);
                        } else {
                            acc.add(&-term);
                        }
                    }
                    out.push(acc.total());
                }
                out
            })
            .collect();
        DerivativeSums { n, sums }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `d^n v_N/d(w2)^n` at `w2 = 0` for truncation order `order`.
    pub fn evaluate(&self, bw: &[Real], order: usize, lambda: &Real) -> Real {
        let digits = lambda.digits();
        let mut acc = CompensatedSum::new(digits);
        let mut lam_j = Real::one(digits);
        for (j, e) in bw.iter().enumerate().take(order + 1) {
            let s = &self.sums[j][order - j];
            if !s.is_zero() {
                acc.add(&(&(e * &lam_j) * s));
            }
            lam_j = &lam_j * lambda;
        }
        acc.total()
    }
}

/// Working-precision tables for repeated strong-coupling extractions.
#[derive(Debug, Clone)]
pub struct StrongCouplingEngine {
    table: ReexpansionTable,
    bw: Vec<Real>,
}

impl StrongCouplingEngine {
    pub fn new(series: &BWSeries, max_order: usize, digits: u32) -> Result<Self, StrongCouplingError> {
        let table = ReexpansionTable::new(series, max_order, digits)?;
        let bw = (0..=max_order).map(|j| table.bw(j).clone()).collect();
        Ok(StrongCouplingEngine { table, bw })
    }

    pub fn max_order(&self) -> usize {
        self.table.order()
    }

    pub fn digits(&self) -> u32 {
        self.table.digits()
    }

    pub fn sums(&self, n: usize) -> DerivativeSums {
        DerivativeSums::new(&self.table, n)
    }

    fn check(&self, order: usize) -> Result<(), StrongCouplingError> {
        if order == 0 {
            return Err(StrongCouplingError::ZeroOrder);
        }
        if order > self.max_order() {
            return Err(BenderWuError::OrderOverflow {
                requested: order,
                available: self.max_order(),
            }
            .into());
        }
        Ok(())
    }

    pub fn w_derivative(&self, order: usize, lambda: &Real, n: usize) -> Result<Real, StrongCouplingError> {
        self.check(order)?;
        Ok(self
            .sums(n)
            .evaluate(&self.bw, order, &lambda.with_digits(self.digits())))
    }

    /// `alpha_n` at an explicit reduced coupling.
    pub fn alpha_at(&self, sums: &DerivativeSums, order: usize, lambda: &Real) -> Result<Real, StrongCouplingError> {
        self.check(order)?;
        let digits = self.digits();
        let lambda = lambda.with_digits(digits);
        let n = sums.n();
        let v = sums.evaluate(&self.bw, order, &lambda);
        let scale = pow_rational_exponent(&lambda, 2 * n as i64 - 1, 3)?;
        Ok(&(&scale * &v) / &Real::from_bigint(&factorial(n as u64), digits))
    }

    pub fn alpha(
        &self,
        order: usize,
        n: usize,
        schedule: &FrequencySchedule,
    ) -> Result<StrongCouplingCoefficient, StrongCouplingError> {
        self.check(order)?;
        let lambda = schedule.lambda(order, self.digits())?;
        let value = self.alpha_at(&self.sums(n), order, &lambda)?;
        Ok(StrongCouplingCoefficient {
            n,
            order,
            value,
            working_digits: self.digits(),
        })
    }

    pub fn alpha_table(
        &self,
        order: usize,
        n_max: usize,
        schedule: &FrequencySchedule,
        exec: Execution,
    ) -> Result<Vec<StrongCouplingCoefficient>, StrongCouplingError> {
        self.check(order)?;
        let ns: Vec<usize> = (0..=n_max).collect();
        exec.try_map(&ns, |&n| self.alpha(order, n, schedule))
    }

    /// `(alpha_n)_N` for every `N` in `orders`.
    pub fn alpha_sweep(
        &self,
        n: usize,
        orders: &[usize],
        schedule: &FrequencySchedule,
        exec: Execution,
    ) -> Result<Vec<StrongCouplingCoefficient>, StrongCouplingError> {
        for &order in orders {
            self.check(order)?;
        }
        let sums = self.sums(n);
        exec.try_map(orders, |&order| {
            let lambda = schedule.lambda(order, self.digits())?;
            Ok(StrongCouplingCoefficient {
                n,
                order,
                value: self.alpha_at(&sums, order, &lambda)?,
                working_digits: self.digits(),
            })
        })
    }
}

/// `d^n v_N/d(w2)^n` at `w2 = 0`.
pub fn w_derivative_at_zero(
    series: &BWSeries,
    order: usize,
    lambda: &Real,
    n: usize,
) -> Result<Real, StrongCouplingError> {
    StrongCouplingEngine::new(series, order, lambda.digits())?.w_derivative(order, lambda, n)
}

/// Exact-rational form of [`w_derivative_at_zero`] for audit runs.
pub fn w_derivative_at_zero_exact(
    series: &BWSeries,
    order: usize,
    lambda: &ExactRational,
    n: usize,
) -> Result<ExactRational, StrongCouplingError> {
    series.check_order(order)?;
    let mut acc = ExactRational::zero();
    let mut lam_j = ExactRational::one();
    for j in 0..=order {
        let row = binomial_half_row(j as u32, (order - j) as u32);
        let mut inner = ExactRational::zero();
        for (k, c) in row.iter().enumerate().skip(n) {
            let term = c * &ExactRational::from_integer(falling_factorial(k as u64, n as u64));
            inner = if (k - n).is_multiple_of(2) {
                inner + term
            } else {
                inner - term
            };
        }
        acc = acc + &(&series.coefficients()[j] * &lam_j) * &inner;
        lam_j = &lam_j * lambda;
    }
    Ok(acc)
}

pub fn alpha(
    series: &BWSeries,
    order: usize,
    n: usize,
    schedule: &FrequencySchedule,
    digits: u32,
) -> Result<StrongCouplingCoefficient, StrongCouplingError> {
    StrongCouplingEngine::new(series, order, digits)?.alpha(order, n, schedule)
}

pub fn alpha_table(
    series: &BWSeries,
    order: usize,
    n_max: usize,
    schedule: &FrequencySchedule,
    digits: u32,
) -> Result<Vec<StrongCouplingCoefficient>, StrongCouplingError> {
    StrongCouplingEngine::new(series, order, digits)?.alpha_table(order, n_max, schedule, Execution::default())
}
