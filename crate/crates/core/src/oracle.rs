//! Rayleigh-Ritz ground-state energies of `p^2/2 + omega^2 x^2/2 + (g/4) x^4`
//! in a truncated harmonic-oscillator basis.
//!
//! Only even basis states `|2i>` enter; in that sector `x^2` couples nearest
//! neighbours and `x^4` next-nearest ones, so the matrix is pentadiagonal. The
//! lowest eigenvalue is bracketed by bisection on the inertia of `A - s I`
//! (counted from an `LDL^T` factorisation) and then polished by inverse
//! iteration with a shift kept below it, where `A - s I` is positive definite.

use serde::Serialize;
use thiserror::Error;

use crate::exec::Execution;
use crate::numerics::{pow_rational_exponent, NumericsError, Real};

const BANDWIDTH: usize = 2;
const BISECTION_LIMIT: usize = 400;
const INVERSE_ITERATION_LIMIT: usize = 200;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("eigenvalue refinement did not converge after {0} iterations")]
    NoConvergence(usize),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone)]
pub struct RitzConfig {
    basis_size: usize,
    basis_frequency: Real,
    working_digits: u32,
}

impl RitzConfig {
    pub fn new(basis_size: usize, basis_frequency: Real, working_digits: u32) -> Result<Self, OracleError> {
        if basis_size < 4 {
            return Err(OracleError::Config(format!("basis size {basis_size} < 4")));
        }
        if !basis_frequency.is_positive() {
            return Err(OracleError::Config("basis frequency must be positive".into()));
        }
        if working_digits < 10 {
            return Err(OracleError::Config("need at least 10 working digits".into()));
        }
        Ok(RitzConfig {
            basis_size,
            basis_frequency: basis_frequency.with_digits(working_digits),
            working_digits,
        })
    }

    pub fn basis_size(&self) -> usize {
        self.basis_size
    }

    pub fn basis_frequency(&self) -> &Real {
        &self.basis_frequency
    }

    pub fn working_digits(&self) -> u32 {
        self.working_digits
    }

    pub fn with_basis_size(&self, basis_size: usize) -> Result<Self, OracleError> {
        RitzConfig::new(basis_size, self.basis_frequency.clone(), self.working_digits)
    }
}

/// Gaussian-optimal frequency: the real root of `W^3 - omega^2 W - 6 (g/4) = 0`.
/// A good default basis frequency.
pub fn gaussian_frequency(g: &Real, omega: &Real) -> Result<Real, OracleError> {
    let digits = g.digits().max(omega.digits());
    let c = g.div_int(4).mul_int(6);
    let w2 = omega * omega;
    // Newton from above: the cubic is convex for W > 0, so iterates decrease monotonically.
    let mut w = (&w2 + &pow_rational_exponent(&c, 2, 3)?).sqrt()? + Real::one(digits);
    let tol = Real::parse(&format!("1e-{}", digits.saturating_sub(5)), digits)?;
    for _ in 0..200 {
        let f = &(&(&w * &w) * &w) - &(&(&w2 * &w) + &c);
        let df = &(&w * &w).mul_int(3) - &w2;
        let step = &f / &df;
        w = &w - &step;
        if step.abs() <= &tol * &w {
            return Ok(w);
        }
    }
    Err(OracleError::NoConvergence(200))
}

/// Symmetric pentadiagonal matrix stored as three diagonals.
#[derive(Debug, Clone)]
struct Banded {
    diag: Vec<Real>,
    off: [Vec<Real>; BANDWIDTH],
}

impl Banded {
    fn len(&self) -> usize {
        self.diag.len()
    }

    fn at(&self, i: usize, j: usize) -> Option<&Real> {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        match j - i {
            0 => Some(&self.diag[i]),
            d if d <= BANDWIDTH => self.off[d - 1].get(i),
            _ => None,
        }
    }

    fn mul_vec(&self, x: &[Real]) -> Vec<Real> {
        let m = self.len();
        (0..m)
            .map(|i| {
                let lo = i.saturating_sub(BANDWIDTH);
                let hi = (i + BANDWIDTH).min(m - 1);
                (lo..=hi).fold(Real::zero(x[0].digits()), |acc, j| {
                    &acc + &(self.at(i, j).unwrap() * &x[j])
                })
            })
            .collect()
    }

    /// `LDL^T` of `A - shift I`; `l[i][k]` holds `L[i][i-1-k]`.
    fn ldl(&self, shift: &Real) -> (Vec<Real>, Vec<[Real; BANDWIDTH]>) {
        let m = self.len();
        let digits = shift.digits();
        let mut d: Vec<Real> = Vec::with_capacity(m);
        let mut l: Vec<[Real; BANDWIDTH]> = Vec::with_capacity(m);
        for i in 0..m {
            let mut row: [Real; BANDWIDTH] = std::array::from_fn(|_| Real::zero(digits));
            // Columns j = i-BANDWIDTH .. i-1, computed left to right.
            for j in i.saturating_sub(BANDWIDTH)..i {
                let mut v = self.at(i, j).unwrap().clone();
                for k in i.saturating_sub(BANDWIDTH)..j {
                    let lik = &row[i - 1 - k];
                    let ljk = &l[j][j - 1 - k];
                    v = &v - &(&(lik * ljk) * &d[k]);
                }
                row[i - 1 - j] = &v / &d[j];
            }
            let mut dii = self.diag[i].clone() - shift;
            for k in i.saturating_sub(BANDWIDTH)..i {
                let lik = &row[i - 1 - k];
                dii = &dii - &(&(lik * lik) * &d[k]);
            }
            if dii.is_zero() {
                // Exact breakdown: nudge so the inertia count stays well defined.
                dii = Real::parse(&format!("-1e-{}", digits), digits).expect("literal");
            }
            d.push(dii);
            l.push(row);
        }
        (d, l)
    }

    /// Number of eigenvalues below `shift`.
    fn count_below(&self, shift: &Real) -> usize {
        self.ldl(shift).0.iter().filter(|v| v.is_negative()).count()
    }

    fn solve_shifted(&self, shift: &Real, b: &[Real]) -> Vec<Real> {
        let (d, l) = self.ldl(shift);
        let m = self.len();
        let mut y = b.to_vec();
        for i in 0..m {
            for k in i.saturating_sub(BANDWIDTH)..i {
                y[i] = &y[i] - &(&l[i][i - 1 - k] * &y[k]);
            }
        }
        for i in 0..m {
            y[i] = &y[i] / &d[i];
        }
        for i in (0..m).rev() {
            for k in i + 1..=(i + BANDWIDTH).min(m - 1) {
                y[i] = &y[i] - &(&l[k][k - 1 - i] * &y[k]);
            }
        }
        y
    }
}

/// Hamiltonian in the even basis `|0>, |2>, ..., |2(size-1)>` of frequency `W`:
/// `H = H_W + (omega^2 - W^2) x^2/2 + (g/4) x^4`, `x = (a + a^+)/sqrt(2W)`.
fn hamiltonian(g: &Real, omega: &Real, config: &RitzConfig) -> Result<Banded, OracleError> {
    let digits = config.working_digits;
    let w = &config.basis_frequency;
    let m = config.basis_size;
    let quad = &(&omega.with_digits(digits) * omega) - &(w * w);
    let c2 = &quad / &w.mul_int(4);
    let c4 = &g.with_digits(digits) / &(w * w).mul_int(16);
    let int = |v: u64| Real::from_i64(v as i64, digits);
    let mut diag = Vec::with_capacity(m);
    let mut off1 = Vec::with_capacity(m.saturating_sub(1));
    let mut off2 = Vec::with_capacity(m.saturating_sub(2));
    for i in 0..m {
        let n = 2 * i as u64;
        // <n|(a+a^+)^2|n> = 2n+1, <n|(a+a^+)^4|n> = 6n^2+6n+3
        let h0 = w * &int(2 * n + 1).div_int(2);
        let e = &(&h0 + &(&c2 * &int(2 * n + 1))) + &(&c4 * &int(6 * n * n + 6 * n + 3));
        diag.push(e);
        if i + 1 < m {
            // <n+2|(a+a^+)^2|n> = s, <n+2|(a+a^+)^4|n> = (4n+6) s, s = sqrt((n+1)(n+2))
            let s = int((n + 1) * (n + 2)).sqrt()?;
            off1.push(&s * &(&c2 + &(&c4 * &int(4 * n + 6))));
        }
        if i + 2 < m {
            let s = int((n + 1) * (n + 2) * (n + 3) * (n + 4)).sqrt()?;
            off2.push(&c4 * &s);
        }
    }
    Ok(Banded {
        diag,
        off: [off1, off2],
    })
}

/// Lowest eigenvalue of the projected Hamiltonian.
pub fn ritz_ground_energy(g: &Real, omega: &Real, config: &RitzConfig) -> Result<Real, OracleError> {
    if !g.is_positive() {
        return Err(OracleError::InvalidInput("g must be positive".into()));
    }
    if omega.is_negative() {
        return Err(OracleError::InvalidInput("omega must be non-negative".into()));
    }
    let digits = config.working_digits;
    let h = hamiltonian(g, omega, config)?;
    let m = h.len();

    // Gershgorin lower end and the smallest diagonal entry bracket the ground state.
    let mut lo: Option<Real> = None;
    let mut hi = h.diag[0].clone();
    for i in 0..m {
        let mut radius = Real::zero(digits);
        for j in i.saturating_sub(BANDWIDTH)..=(i + BANDWIDTH).min(m - 1) {
            if j != i {
                radius = &radius + &h.at(i, j).unwrap().abs();
            }
        }
        let g_lo = &h.diag[i] - &radius;
        if lo.as_ref().is_none_or(|l| g_lo < *l) {
            lo = Some(g_lo);
        }
        if h.diag[i] < hi {
            hi = h.diag[i].clone();
        }
    }
    let mut lo = lo.expect("non-empty matrix");

    // Bisect to a relative width of ~1e-12; inverse iteration takes over from there.
    let rel = Real::parse("1e-12", digits)?;
    let mut steps = 0;
    while &hi - &lo > &rel * &hi.abs().max(Real::one(digits)) {
        let mid = (&lo + &hi).div_int(2);
        if h.count_below(&mid) == 0 {
            lo = mid;
        } else {
            hi = mid;
        }
        steps += 1;
        if steps > BISECTION_LIMIT {
            return Err(OracleError::NoConvergence(steps));
        }
    }

    // Shift strictly below the ground state: A - lo I is positive definite and
    // the iteration contracts by (E0 - lo)/(E1 - lo) per step.
    let shift = lo;
    let tol = Real::parse(&format!("1e-{}", digits.saturating_sub(4)), digits)?;
    let mut x: Vec<Real> = vec![Real::one(digits); m];
    let mut energy = hi;
    for _ in 0..INVERSE_ITERATION_LIMIT {
        let y = h.solve_shifted(&shift, &x);
        let norm = y.iter().fold(Real::zero(digits), |a, v| &a + &(v * v)).sqrt()?;
        x = y.iter().map(|v| v / &norm).collect();
        let ax = h.mul_vec(&x);
        let rq = x.iter().zip(&ax).fold(Real::zero(digits), |a, (u, v)| &a + &(u * v));
        let change = (&rq - &energy).abs();
        energy = rq;
        if change <= &tol * &energy.abs() {
            return Ok(energy);
        }
    }
    Err(OracleError::NoConvergence(INVERSE_ITERATION_LIMIT))
}

#[derive(Debug, Clone, Serialize)]
pub struct RitzPoint {
    pub basis_size: usize,
    #[serde(serialize_with = "ser_real")]
    pub energy: Real,
}

fn ser_real<S: serde::Serializer>(v: &Real, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.format_sig(v.digits().min(40)))
}

/// Ground-state energy for each basis size (ascending), all other settings from `config`.
pub fn ritz_convergence_scan(
    g: &Real,
    omega: &Real,
    sizes: &[usize],
    config: &RitzConfig,
    exec: Execution,
) -> Result<Vec<RitzPoint>, OracleError> {
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(OracleError::InvalidInput(
            "basis sizes must be strictly ascending".into(),
        ));
    }
    exec.try_map(sizes, |&size| {
        let cfg = config.with_basis_size(size)?;
        Ok(RitzPoint {
            basis_size: size,
            energy: ritz_ground_energy(g, omega, &cfg)?,
        })
    })
}
