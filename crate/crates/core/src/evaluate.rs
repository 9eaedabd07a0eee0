//! Strong-coupling energies `E = (g/4)^(1/3) sum_n alpha_n ((g/4)/omega^3)^(-2n/3)`
//! and their comparison against published rigorous bounds.

use serde::Serialize;
use thiserror::Error;

use crate::exec::Execution;
use crate::numerics::{pow_rational_exponent, NumericsError, Real};
use crate::strongcoupling::StrongCouplingCoefficient;

#[derive(Debug, Error)]
pub enum EvaluateError {
    #[error("missing alpha_{0}")]
    MissingAlpha(usize),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("estimate is for g/4 = {estimate} but bounds are for g/4 = {bounds}")]
    CouplingMismatch { estimate: String, bounds: String },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyEstimate {
    #[serde(serialize_with = "ser_real")]
    pub g_over_4: Real,
    #[serde(serialize_with = "ser_real")]
    pub omega: Real,
    pub n_max: usize,
    #[serde(serialize_with = "ser_real")]
    pub value: Real,
}

fn ser_real<S: serde::Serializer>(v: &Real, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.format_sig(v.digits().min(40)))
}

/// Lower/upper bounds on the ground-state energy at `omega = 1`.
#[derive(Debug, Clone)]
pub struct BoundsRecord {
    pub g_over_4: Real,
    pub lower: Real,
    pub upper: Real,
    pub source: &'static str,
}

impl BoundsRecord {
    pub fn new(g_over_4: Real, lower: Real, upper: Real, source: &'static str) -> Result<Self, EvaluateError> {
        if lower > upper {
            return Err(EvaluateError::InvalidInput("lower bound exceeds upper bound".into()));
        }
        Ok(BoundsRecord {
            g_over_4,
            lower,
            upper,
            source,
        })
    }

    pub fn midpoint(&self) -> Real {
        (&self.lower + &self.upper).div_int(2)
    }
}

pub const BOUNDS_SOURCE: &str = "Vinette-Cizek";

/// Bounds fixture, version 1: `(g/4, lower, upper)` as printed, omega = 1.
pub const BOUNDS_V1: [(&str, &str, &str); 5] = [
    ("0.1", "0.5591463271835195763", "0.5591463271835195767"),
    ("0.3", "0.6379917831712785283", "0.6379917831712785296"),
    ("0.5", "0.6961758207651459251", "0.6961758207651459285"),
    ("1.0", "0.803770651234273756", "0.803770651234273786"),
    ("2.0", "0.9515684727294999", "0.9515684727295001"),
];

pub fn bounds_fixture(digits: u32) -> Vec<BoundsRecord> {
    BOUNDS_V1
        .iter()
        .map(|(g, lo, hi)| {
            BoundsRecord::new(
                Real::parse(g, digits).expect("fixture"),
                Real::parse(lo, digits).expect("fixture"),
                Real::parse(hi, digits).expect("fixture"),
                BOUNDS_SOURCE,
            )
            .expect("fixture bounds are ordered")
        })
        .collect()
}

pub fn bounds_for(g_over_4: &Real, digits: u32) -> Option<BoundsRecord> {
    bounds_fixture(digits).into_iter().find(|b| b.g_over_4 == *g_over_4)
}

/// Truncated strong-coupling series through `alpha_{n_max}`.
pub fn strong_energy(
    alphas: &[StrongCouplingCoefficient],
    g_over_4: &Real,
    omega: &Real,
    n_max: usize,
) -> Result<EnergyEstimate, EvaluateError> {
    if !g_over_4.is_positive() {
        return Err(EvaluateError::InvalidInput("g/4 must be positive".into()));
    }
    if omega.is_negative() {
        return Err(EvaluateError::InvalidInput("omega must be non-negative".into()));
    }
    let coeff = |n: usize| -> Result<&Real, EvaluateError> {
        alphas
            .iter()
            .find(|a| a.n == n)
            .map(|a| &a.value)
            .ok_or(EvaluateError::MissingAlpha(n))
    };
    let digits = g_over_4.digits().max(omega.digits());
    let g4 = g_over_4.with_digits(digits);
    // ((g/4)/omega^3)^(-2/3) = omega^2 / (g/4)^(2/3)
    let step = &(omega * omega) / &pow_rational_exponent(&g4, 2, 3)?;
    let mut sum = coeff(0)?.with_digits(digits);
    if !step.is_zero() {
        let mut power = Real::one(digits);
        for n in 1..=n_max {
            power = &power * &step;
            sum = &sum + &(coeff(n)? * &power);
        }
    } else {
        for n in 1..=n_max {
            coeff(n)?;
        }
    }
    let value = &pow_rational_exponent(&g4, 1, 3)? * &sum;
    Ok(EnergyEstimate {
        g_over_4: g4,
        omega: omega.clone(),
        n_max,
        value,
    })
}

/// Individual series terms `alpha_n ((g/4)/omega^3)^(-2n/3)`, without the prefactor.
pub fn series_terms(
    alphas: &[StrongCouplingCoefficient],
    g_over_4: &Real,
    omega: &Real,
    n_max: usize,
) -> Result<Vec<Real>, EvaluateError> {
    let digits = g_over_4.digits();
    let step = &(omega * omega) / &pow_rational_exponent(g_over_4, 2, 3)?;
    let mut power = Real::one(digits);
    let mut out = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let a = alphas.iter().find(|a| a.n == n).ok_or(EvaluateError::MissingAlpha(n))?;
        out.push(&a.value * &power);
        power = &power * &step;
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsReport {
    pub inside: bool,
    /// `value - upper` above the interval, `value - lower` below it, zero inside.
    #[serde(serialize_with = "ser_real")]
    pub signed_margin: Real,
    pub matched_digits: u32,
}

/// Number of leading significant decimal digits two values share, up to `max`.
pub fn shared_digits(a: &Real, b: &Real, max: u32) -> u32 {
    if a.signum() != b.signum() || a.is_zero() {
        return if a == b { max } else { 0 };
    }
    let (Some((da, ea)), Some((db, eb))) = (a.to_significant(max + 5), b.to_significant(max + 5)) else {
        return 0;
    };
    if ea != eb {
        return 0;
    }
    let (sa, sb) = (da.to_string(), db.to_string());
    let common = sa.bytes().zip(sb.bytes()).take_while(|(x, y)| x == y).count() as u32;
    common.min(max)
}

pub fn check_bounds(estimate: &EnergyEstimate, bounds: &BoundsRecord) -> Result<BoundsReport, EvaluateError> {
    if estimate.g_over_4 != bounds.g_over_4 {
        return Err(EvaluateError::CouplingMismatch {
            estimate: estimate.g_over_4.format_sig(10),
            bounds: bounds.g_over_4.format_sig(10),
        });
    }
    let v = &estimate.value;
    let digits = v.digits();
    let (inside, signed_margin) = if *v > bounds.upper {
        (false, v - &bounds.upper)
    } else if *v < bounds.lower {
        (false, v - &bounds.lower)
    } else {
        (true, Real::zero(digits))
    };
    let mut matched = shared_digits(v, &bounds.midpoint(), 60);
    if bounds.lower != bounds.upper {
        matched = matched.min(shared_digits(&bounds.lower, &bounds.upper, 60));
    }
    Ok(BoundsReport {
        inside,
        signed_margin,
        matched_digits: matched,
    })
}

pub const TABLE2_G4: [&str; 5] = ["0.1", "0.3", "0.5", "1.0", "2.0"];
pub const TABLE2_NMAX: [usize; 3] = [15, 20, 22];

#[derive(Debug, Clone)]
pub struct Table2Block {
    pub g_over_4: Real,
    pub estimates: Vec<EnergyEstimate>,
    pub bounds: Option<BoundsRecord>,
    /// Report for the largest `n_max` of the block.
    pub report: Option<BoundsReport>,
}

/// Energies on a `(g/4) x n_max` grid at `omega = 1`, with bounds where known.
pub fn table2(
    alphas: &[StrongCouplingCoefficient],
    g4_list: &[Real],
    nmax_list: &[usize],
    exec: Execution,
) -> Result<Vec<Table2Block>, EvaluateError> {
    let cells: Vec<(usize, usize)> = (0..g4_list.len())
        .flat_map(|i| nmax_list.iter().map(move |&n| (i, n)))
        .collect();
    let estimates = exec.try_map(&cells, |&(i, n)| {
        let g4 = &g4_list[i];
        strong_energy(alphas, g4, &Real::one(g4.digits()), n)
    })?;
    let mut blocks = Vec::with_capacity(g4_list.len());
    let mut it = estimates.into_iter();
    for g4 in g4_list {
        let row: Vec<EnergyEstimate> = it.by_ref().take(nmax_list.len()).collect();
        let bounds = bounds_for(g4, g4.digits());
        let report = match (&bounds, row.iter().max_by_key(|e| e.n_max)) {
            (Some(b), Some(e)) => Some(check_bounds(e, b)?),
            _ => None,
        };
        blocks.push(Table2Block {
            g_over_4: g4.clone(),
            estimates: row,
            bounds,
            report,
        });
    }
    Ok(blocks)
}
