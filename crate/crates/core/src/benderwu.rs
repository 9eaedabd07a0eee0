//! Exact Rayleigh-Schrödinger coefficients of the quartic oscillator ground
//! state, `E = omega * sum_l e_l ((g/4)/omega^3)^l`.
//!
//! The coefficients come out of the Bender-Wu recursion for the polynomial
//! part of the ground-state wavefunction. Everything runs in exact rational
//! arithmetic, so a generated series doubles as a ground-truth fixture.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::numerics::{ExactRational, Real};

const CACHE_MAGIC: &str = "bw-series v1";

#[derive(Debug, Error)]
pub enum BenderWuError {
    #[error("order {requested} exceeds series max order {available}")]
    OrderOverflow { requested: usize, available: usize },
    #[error("malformed cache: {0}")]
    Malformed(String),
    #[error("truncated cache: header declares order {declared}, found {found} data lines")]
    Truncated { declared: usize, found: usize },
    #[error("invariant violation: {0}")]
    Invariant(String),
    #[error("checksum mismatch: stored {stored}, computed {computed}")]
    Checksum { stored: String, computed: String },
    #[error("cache i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// The first five coefficients, `1/2, 3/4, -21/8, 333/16, -30885/128`.
pub fn known_head() -> [ExactRational; 5] {
    [
        ExactRational::ratio(1, 2),
        ExactRational::ratio(3, 4),
        ExactRational::ratio(-21, 8),
        ExactRational::ratio(333, 16),
        ExactRational::ratio(-30885, 128),
    ]
}

/// `e_0 ... e_L` of the weak-coupling series.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BWSeries {
    coefficients: Vec<ExactRational>,
}

impl BWSeries {
    /// Wraps a coefficient list after checking the series invariants.
    pub fn from_coefficients(coefficients: Vec<ExactRational>) -> Result<BWSeries, BenderWuError> {
        check_invariants(&coefficients)?;
        Ok(BWSeries { coefficients })
    }

    pub fn max_order(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn coefficients(&self) -> &[ExactRational] {
        &self.coefficients
    }

    pub fn get(&self, l: usize) -> Result<&ExactRational, BenderWuError> {
        self.coefficients.get(l).ok_or(BenderWuError::OrderOverflow {
            requested: l,
            available: self.max_order(),
        })
    }

    /// Prefix `e_0 ... e_order`.
    pub fn truncated(&self, order: usize) -> Result<BWSeries, BenderWuError> {
        self.check_order(order)?;
        Ok(BWSeries {
            coefficients: self.coefficients[..=order].to_vec(),
        })
    }

    pub fn check_order(&self, order: usize) -> Result<(), BenderWuError> {
        if order > self.max_order() {
            Err(BenderWuError::OrderOverflow {
                requested: order,
                available: self.max_order(),
            })
        } else {
            Ok(())
        }
    }

    /// Coefficients rounded to `digits`.
    pub fn to_reals(&self, digits: u32) -> Vec<Real> {
        self.coefficients.iter().map(|c| c.to_real(digits)).collect()
    }
}

fn check_invariants(coefficients: &[ExactRational]) -> Result<(), BenderWuError> {
    let Some(first) = coefficients.first() else {
        return Err(BenderWuError::Invariant("empty series".into()));
    };
    if *first != ExactRational::ratio(1, 2) {
        return Err(BenderWuError::Invariant(format!("e_0 = {first}, expected 1/2")));
    }
    for (l, c) in coefficients.iter().enumerate().skip(1) {
        let expected = if l % 2 == 1 { 1 } else { -1 };
        if c.signum() != expected {
            return Err(BenderWuError::Invariant(format!(
                "sign of e_{l} is {}, expected {expected}",
                c.signum()
            )));
        }
    }
    Ok(())
}

/// One order of wavefunction coefficients, stored as integer numerators over
/// the row's least common denominator.
#[derive(Debug, Clone)]
struct ScaledRow {
    numerators: Vec<BigInt>,
    denominator: BigInt,
}

impl ScaledRow {
    fn from_rationals(row: &[ExactRational]) -> ScaledRow {
        let denominator = row.iter().fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
        let numerators = row.iter().map(|r| r.numer() * (&denominator / r.denom())).collect();
        ScaledRow {
            numerators,
            denominator,
        }
    }

    fn get(&self, k: usize) -> Option<ExactRational> {
        self.numerators
            .get(k)
            .map(|v| ExactRational::new(v.clone(), self.denominator.clone()).expect("row denominator is positive"))
    }
}

/// Wavefunction coefficients `B[n][k]` (`0 <= k <= 2n`) and energies `A[n]`.
#[derive(Debug, Clone)]
pub struct BWWorkspace {
    b: Vec<ScaledRow>,
    a: Vec<ExactRational>,
}

impl Default for BWWorkspace {
    fn default() -> Self {
        Self::new()
    }
}

impl BWWorkspace {
    pub fn new() -> Self {
        BWWorkspace {
            b: vec![ScaledRow::from_rationals(&[ExactRational::one()])],
            a: vec![ExactRational::ratio(1, 2)],
        }
    }

    pub fn order(&self) -> usize {
        self.a.len() - 1
    }

    /// `B[n][k]`, zero outside the triangle.
    pub fn b(&self, n: usize, k: usize) -> ExactRational {
        self.b
            .get(n)
            .and_then(|row| row.get(k))
            .unwrap_or_else(ExactRational::zero)
    }

    pub fn a(&self, n: usize) -> Option<&ExactRational> {
        self.a.get(n)
    }

    /// Runs the recursion for the next order:
    /// `2k B[n][k] = (2k+2)(2k+1) B[n][k+1] - B[n-1][k-2]/4 + sum_{m=1}^{n-1} A[m] B[n-m][k]`,
    /// then `A[n] = -2 B[n][1]`.
    pub fn advance(&mut self) {
        let n = self.a.len();
        // the convolution runs in integers over one common denominator
        let common = (1..n).fold(BigInt::one(), |acc, m| {
            acc.lcm(&(self.a[m].denom() * &self.b[n - m].denominator))
        });
        let weights: Vec<BigInt> = (1..n)
            .map(|m| {
                let den = self.a[m].denom() * &self.b[n - m].denominator;
                self.a[m].numer() * (&common / den)
            })
            .collect();

        let quarter = ExactRational::ratio(1, 4);
        let mut row = vec![ExactRational::zero(); 2 * n + 2];
        for k in (1..=2 * n).rev() {
            let mut conv = BigInt::zero();
            for m in 1..n {
                if let Some(bk) = self.b[n - m].numerators.get(k) {
                    conv += &weights[m - 1] * bk;
                }
            }
            let mut s = &row[k + 1] * &ExactRational::from_i64(((2 * k + 2) * (2 * k + 1)) as i64);
            if k >= 2 {
                if let Some(prev) = self.b[n - 1].get(k - 2) {
                    s = s - &quarter * &prev;
                }
            }
            if !conv.is_zero() {
                s = s + ExactRational::new(conv, common.clone()).expect("positive denominator");
            }
            row[k] = s / ExactRational::from_i64(2 * k as i64);
        }
        row.truncate(2 * n + 1);
        let energy = &ExactRational::from_i64(-2) * &row[1];
        self.b.push(ScaledRow::from_rationals(&row));
        self.a.push(energy);
    }

    pub fn into_series(self) -> BWSeries {
        BWSeries { coefficients: self.a }
    }
}

/// `e_0 ... e_max_order`, exactly.
pub fn generate(max_order: usize) -> BWSeries {
    let mut ws = BWWorkspace::new();
    while ws.order() < max_order {
        ws.advance();
    }
    ws.into_series()
}

/// True iff the first five coefficients are `1/2, 3/4, -21/8, 333/16, -30885/128`.
pub fn verify_head(series: &BWSeries) -> bool {
    series.max_order() >= 4
        && series.coefficients[..5]
            .iter()
            .zip(known_head().iter())
            .all(|(a, b)| a == b)
}

fn data_lines(coefficients: &[ExactRational]) -> Vec<String> {
    coefficients
        .iter()
        .enumerate()
        .map(|(l, c)| format!("{l} {c}"))
        .collect()
}

fn checksum(lines: &[impl AsRef<str>]) -> String {
    let mut h = Sha256::new();
    for line in lines {
        h.update(line.as_ref().as_bytes());
        h.update(b"\n");
    }
    h.finalize().iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Text form of the cache file.
pub fn render_cache(series: &BWSeries) -> String {
    let lines = data_lines(&series.coefficients);
    let mut out = format!("{CACHE_MAGIC} order={}\n", series.max_order());
    for line in &lines {
        out.push_str(line);
        out.push('\n');
    }
    let _ = writeln!(out, "checksum={}", checksum(&lines));
    out
}

pub fn parse_cache(text: &str) -> Result<BWSeries, BenderWuError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| BenderWuError::Malformed("empty file".into()))?;
    let declared: usize = header
        .strip_prefix(CACHE_MAGIC)
        .and_then(|rest| rest.trim().strip_prefix("order="))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| BenderWuError::Malformed(format!("bad header {header:?}")))?;

    let mut data = Vec::with_capacity(declared + 1);
    let mut stored_sum = None;
    for line in lines {
        if let Some(sum) = line.strip_prefix("checksum=") {
            stored_sum = Some(sum.trim().to_string());
            break;
        }
        data.push(line);
    }
    if data.len() != declared + 1 {
        return Err(BenderWuError::Truncated {
            declared,
            found: data.len(),
        });
    }
    let mut coefficients = Vec::with_capacity(declared + 1);
    for (expected_l, line) in data.iter().enumerate() {
        let (l, value) = line
            .split_once(' ')
            .ok_or_else(|| BenderWuError::Malformed(format!("line {line:?}")))?;
        if l.parse::<usize>().ok() != Some(expected_l) {
            return Err(BenderWuError::Malformed(format!(
                "expected index {expected_l}, found {l:?}"
            )));
        }
        let c: ExactRational = value
            .parse()
            .map_err(|_| BenderWuError::Malformed(format!("coefficient {value:?}")))?;
        coefficients.push(c);
    }
    if coefficients.first() != Some(&ExactRational::ratio(1, 2)) {
        return Err(BenderWuError::Invariant("e0: expected 1/2".into()));
    }
    for (l, c) in coefficients.iter().enumerate().skip(1) {
        let expected = if l % 2 == 1 { 1 } else { -1 };
        if c.signum() != expected {
            return Err(BenderWuError::Invariant(format!("sign of e_{l}")));
        }
    }
    let stored = stored_sum.ok_or_else(|| BenderWuError::Malformed("missing checksum line".into()))?;
    let computed = checksum(&data);
    if stored != computed {
        return Err(BenderWuError::Checksum { stored, computed });
    }
    Ok(BWSeries { coefficients })
}

pub fn save_cache(series: &BWSeries, path: &Path) -> Result<(), BenderWuError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, render_cache(series))?;
    Ok(())
}

pub fn load_cache(path: &Path) -> Result<BWSeries, BenderWuError> {
    parse_cache(&fs::read_to_string(path)?)
}
