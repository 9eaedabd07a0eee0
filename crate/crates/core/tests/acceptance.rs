//! End-to-end acceptance checks. Run with `--nocapture` to see one PASS/FAIL
//! line per criterion.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::One;

use vpt_core::benderwu::{self, BWSeries};
use vpt_core::diagnostics::{self, DEFAULT_N_MIN};
use vpt_core::evaluate::{self, BoundsRecord};
use vpt_core::exec::Execution;
use vpt_core::numerics::{binomial_half, ExactRational, Real};
use vpt_core::oracle::{self, RitzConfig};
use vpt_core::strongcoupling::{FrequencySchedule, StrongCouplingCoefficient, StrongCouplingEngine};
use vpt_core::vptcore;

const WORKING: u32 = 300;

const ALPHA0_REFERENCE: &str = "0.66798625915577710827096201691986019943040493698406045597666380";

const REFERENCE_ALPHAS: [&str; 23] = [
    "0.667 986 259 155 777 108 270 96",
    "0.143 668 783 380 864 910 020 3",
    "-0.008 627 565 680 802 279 128",
    "0.000 818 208 905 756 349 543",
    "-0.000 082 429 217 130 077 221",
    "0.000 008 069 494 235 040 966",
    "-0.000 000 727 977 005 945 775",
    "0.000 000 056 145 997 222 354",
    "-0.000 000 002 949 562 732 712",
    "-0.000 000 000 064 215 331 954",
    "0.000 000 000 048 214 263 787",
    "-0.000 000 000 008 940 319 867",
    "0.000 000 000 001 205 637 215",
    "-0.000 000 000 000 130 347 650",
    "0.000 000 000 000 010 760 089",
    "-0.000 000 000 000 000 445 890 1",
    "-0.000 000 000 000 000 058 989 8",
    "0.000 000 000 000 000 019 196 00",
    "-0.000 000 000 000 000 003 288 13",
    "0.000 000 000 000 000 000 429 62",
    "-0.000 000 000 000 000 000 044 438",
    "0.000 000 000 000 000 000 003 230 5",
    "-0.000 000 000 000 000 000 000 031 4",
];

/// `(g/4, n_max, printed E_0)`.
const REFERENCE_ENERGIES: [(&str, usize, &str); 15] = [
    ("0.1", 15, "0.559 146 597 503 562 187 0"),
    ("0.1", 20, "0.559 146 201 201 805 544 6"),
    ("0.1", 22, "0.559 146 344 373 873 126 9"),
    ("0.3", 15, "0.637 991 783 178 536 025 3"),
    ("0.3", 20, "0.637 991 783 171 236 149 3"),
    ("0.3", 22, "0.637 991 783 171 280 381 8"),
    ("0.5", 15, "0.696 175 820 765 191 516 9"),
    ("0.5", 20, "0.696 175 820 765 145 887 5"),
    ("0.5", 22, "0.696 175 820 765 145 928 8"),
    ("1.0", 15, "0.803 770 651 234 273 812 047 6"),
    ("1.0", 20, "0.803 770 651 234 273 769 350 9"),
    ("1.0", 22, "0.803 770 651 234 273 769 354 1"),
    ("2.0", 15, "0.951 568 472 729 500 011 184 213 69"),
    ("2.0", 20, "0.951 568 472 729 500 011 146 930 27"),
    ("2.0", 22, "0.951 568 472 729 500 011 146 930 52"),
];

/// Sub-checks that cannot pass because the printed reference data contradict
/// each other; they must keep failing exactly as documented.
const KNOWN_FAILURES: [(usize, &str); 1] = [(
    5,
    "g/4=0.3 n_max=22 inside bounds: the printed value itself lies above the printed upper bound",
)];

struct Outcome {
    checks: Vec<(String, bool)>,
    detail: String,
    elapsed: Duration,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            checks: Vec::new(),
            detail: String::new(),
            elapsed: Duration::ZERO,
        }
    }

    fn check(&mut self, name: impl Into<String>, ok: bool) {
        self.checks.push((name.into(), ok));
    }

    fn failures(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|(_, ok)| !ok)
            .map(|(n, _)| n.as_str())
            .collect()
    }
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn cached_series() -> BWSeries {
    benderwu::load_cache(&fixture("bw-251.cache")).expect("fixture cache")
}

fn printed(s: &str) -> (BigInt, u32) {
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let places = compact.split_once('.').map_or(0, |(_, f)| f.len()) as u32;
    let digits: String = compact.chars().filter(|c| *c != '.').collect();
    (digits.parse().expect("printed decimal"), places)
}

/// Agreement with a printed value to its printed digits, +-1 in the last one.
fn matches_printed(value: &Real, s: &str) -> bool {
    let (target, places) = printed(s);
    let ours = value.to_scaled_integer(i64::from(places));
    let diff = ours - target;
    diff >= BigInt::from(-1) && diff <= BigInt::one()
}

fn r(s: &str, digits: u32) -> Real {
    Real::parse(s, digits).unwrap()
}

fn timed(f: impl FnOnce(&mut Outcome)) -> Outcome {
    let mut o = Outcome::new();
    let t = Instant::now();
    f(&mut o);
    o.elapsed = t.elapsed();
    o
}

fn criterion_1() -> Outcome {
    timed(|o| {
        let t = Instant::now();
        let s = benderwu::generate(4);
        o.check(
            "generate(4) equals 1/2, 3/4, -21/8, 333/16, -30885/128",
            s.coefficients() == benderwu::known_head(),
        );
        o.check("under 1 s", t.elapsed() < Duration::from_secs(1));
    })
}

fn criterion_2() -> Outcome {
    timed(|o| {
        let t = Instant::now();
        let s = benderwu::generate(251);
        let took = t.elapsed();
        o.check("under 10 min", took < Duration::from_secs(600));
        o.check("252 coefficients", s.coefficients().len() == 252);
        o.check("e_0 = 1/2", s.coefficients()[0] == ExactRational::ratio(1, 2));
        let alternating = s
            .coefficients()
            .iter()
            .enumerate()
            .skip(1)
            .all(|(l, e)| e.signum() == if l % 2 == 1 { 1 } else { -1 });
        o.check("sign alternation for l >= 1", alternating);
        o.check(
            "equals frozen cache",
            s.coefficients() == cached_series().coefficients(),
        );
        o.detail = format!("generate(251) in {took:.1?}");
    })
}

fn criterion_3(engine: &StrongCouplingEngine) -> Outcome {
    timed(|o| {
        let t = Instant::now();
        let a0 = engine.alpha(251, 0, &FrequencySchedule::default()).unwrap().value;
        let reference = r(ALPHA0_REFERENCE, WORKING);
        let same23 = a0.to_significant(23) == reference.to_significant(23);
        let diff = (&a0 - &reference).abs();
        o.check("rounds to the same 23 significant digits", same23);
        o.check("|difference| < 1e-23", diff < r("1e-23", WORKING));
        o.check("under 1 min", t.elapsed() < Duration::from_secs(60));
        o.detail = format!("alpha_0 = {}, |diff| = {}", a0.format_sig(26), diff.format_sig(2));
    })
}

fn criterion_4(table: &[StrongCouplingCoefficient]) -> Outcome {
    timed(|o| {
        o.check("23 coefficients", table.len() == REFERENCE_ALPHAS.len());
        for (a, p) in table.iter().zip(REFERENCE_ALPHAS) {
            o.check(format!("alpha_{} matches {p}", a.n), matches_printed(&a.value, p));
        }
    })
}

fn criterion_5(table: &[StrongCouplingCoefficient]) -> Outcome {
    timed(|o| {
        for (g4, nmax, p) in REFERENCE_ENERGIES {
            let e = evaluate::strong_energy(table, &r(g4, WORKING), &Real::one(WORKING), nmax).unwrap();
            o.check(
                format!("g/4={g4} n_max={nmax} matches {p}"),
                matches_printed(&e.value, p),
            );
        }
        let report = |g4: &str| {
            let e = evaluate::strong_energy(table, &r(g4, WORKING), &Real::one(WORKING), 22).unwrap();
            let b: BoundsRecord = evaluate::bounds_for(&r(g4, WORKING), WORKING).unwrap();
            evaluate::check_bounds(&e, &b).unwrap()
        };
        for g4 in ["0.3", "1.0", "2.0"] {
            o.check(format!("g/4={g4} n_max=22 inside bounds"), report(g4).inside);
        }
        let low = report("0.1");
        o.check("g/4=0.1 matches bounds to exactly 7 digits", low.matched_digits == 7);
        let half = report("0.5");
        o.check(
            "g/4=0.5 discrepancy reported (outside upper bound)",
            !half.inside && half.signed_margin.is_positive(),
        );
        let mid = report("0.3");
        o.detail = format!(
            "g/4=0.3 margin {}, g/4=0.5 margin {} ({} digits)",
            mid.signed_margin.format_sig(3),
            half.signed_margin.format_sig(3),
            half.matched_digits
        );
    })
}

fn criterion_6_7(engine: &StrongCouplingEngine, table: &[StrongCouplingCoefficient]) -> (Outcome, Outcome) {
    let schedule = FrequencySchedule::default();
    let mut osc = Outcome::new();
    let fits = timed(|o| {
        let mut kappas = Vec::new();
        for n in [0usize, 1, 5, 10] {
            let samples = diagnostics::convergence_series(
                engine,
                n,
                DEFAULT_N_MIN,
                251,
                &table[n].value,
                &schedule,
                Execution::default(),
            )
            .unwrap();
            if n == 0 {
                let changes = diagnostics::sign_changes(&samples);
                osc.check("alpha_0 residual changes sign at least 5 times", changes >= 5);
                osc.detail = format!("{changes} sign changes over N = 65..251");
            }
            let env = diagnostics::envelope(&samples).unwrap();
            let fit = diagnostics::fit_envelope(&env, DEFAULT_N_MIN).unwrap();
            kappas.push((n, fit.kappa1.to_f64()));
        }
        let k = |n: usize| kappas.iter().find(|(m, _)| *m == n).unwrap().1;
        o.check("kappa1(alpha_0) in [8.8, 10.0]", (8.8..=10.0).contains(&k(0)));
        o.check("kappa1(alpha_10) in [6.5, 7.9]", (6.5..=7.9).contains(&k(10)));
        o.check(
            "kappa1 strictly decreasing in n",
            kappas.windows(2).all(|w| w[0].1 > w[1].1),
        );
        o.detail = kappas
            .iter()
            .map(|(n, k)| format!("k1(a{n})={k:.3}"))
            .collect::<Vec<_>>()
            .join(" ");
    });
    let mut o6 = fits;
    o6.check("under 5 min", o6.elapsed < Duration::from_secs(300));
    (o6, osc)
}

/// `v_N(x) = sum_j e_j lambda^j sum_{k <= N-j} C((1-3j)/2, k) (x-1)^k`.
fn reduced_energy(series: &BWSeries, order: usize, lambda: &Real, x: &Real) -> Real {
    let digits = lambda.digits();
    let u = x - &Real::one(digits);
    let mut total = Real::zero(digits);
    let mut lam = Real::one(digits);
    for j in 0..=order {
        let mut p = Real::zero(digits);
        for k in (0..=order - j).rev() {
            p = &(&p * &u) + &binomial_half(j as u32, k as u32).to_real(digits);
        }
        total = &total + &(&(&series.coefficients()[j].to_real(digits) * &lam) * &p);
        lam = &lam * lambda;
    }
    total
}

fn criterion_8(series: &BWSeries) -> Outcome {
    timed(|o| {
        let digits = 120;
        let h = r("1e-20", digits);
        let tol = r("1e-30", digits);
        for order in [2usize, 5, 10] {
            let lambda = FrequencySchedule::default().lambda(order, digits).unwrap();
            for n in 0..=3usize {
                let analytic = vpt_core::strongcoupling::w_derivative_at_zero(series, order, &lambda, n).unwrap();
                // centred n-th difference on the grid (n/2 - i) h
                let mut fd = Real::zero(digits);
                let mut binom = BigInt::one();
                for i in 0..=n {
                    let offset = &h * &Real::from_i64(n as i64 - 2 * i as i64, digits).div_int(2);
                    let term = &reduced_energy(series, order, &lambda, &offset) * &Real::from_bigint(&binom, digits);
                    fd = if i % 2 == 0 { &fd + &term } else { &fd - &term };
                    binom = binom * BigInt::from(n - i) / BigInt::from(i + 1);
                }
                let fd = &fd / &h.powi(n as i64);
                let scale = if analytic.is_zero() {
                    Real::one(digits)
                } else {
                    analytic.abs()
                };
                let rel = &(&fd - &analytic).abs() / &scale;
                o.check(format!("N={order} n={n} agrees to 30 digits"), rel < tol);
            }
        }
    })
}

fn criterion_9(table: &[StrongCouplingCoefficient]) -> Outcome {
    timed(|o| {
        let engine = StrongCouplingEngine::new(&cached_series(), 251, 600).unwrap();
        let doubled = engine
            .alpha_table(251, 22, &FrequencySchedule::default(), Execution::default())
            .unwrap();
        for (a, b) in table.iter().zip(&doubled) {
            o.check(
                format!("alpha_{} identical at 25 digits", a.n),
                a.value.format_sig(25) == b.value.format_sig(25),
            );
        }
    })
}

fn criterion_10() -> Outcome {
    timed(|o| {
        let digits = 60;
        let one = Real::one(digits);
        let mut detail = Vec::new();
        for g4 in ["1.0", "2.0"] {
            let g = r(g4, digits).mul_int(4);
            let w = oracle::gaussian_frequency(&g, &one).unwrap();
            let config = RitzConfig::new(8, w, digits).unwrap();
            let scan =
                oracle::ritz_convergence_scan(&g, &one, &[8, 16, 32, 64], &config, Execution::default()).unwrap();
            o.check(
                format!("g/4={g4} scan non-increasing"),
                scan.windows(2).all(|p| p[1].energy <= p[0].energy),
            );
            let e = &scan.last().unwrap().energy;
            let b = evaluate::bounds_for(&r(g4, digits), digits).unwrap();
            o.check(
                format!("g/4={g4} Ritz energy inside bounds"),
                b.lower <= *e && *e <= b.upper,
            );
            detail.push(format!("g/4={g4}: {}", e.format_sig(22)));
        }
        o.detail = detail.join(", ");
    })
}

fn criterion_11(series: &BWSeries) -> Outcome {
    timed(|o| {
        // Hold omega and r fixed; Omega^2 = omega^2 - g r / 2, rho = 2 r Omega.
        for (omega, rr) in [
            (ExactRational::ratio(5, 4), ExactRational::ratio(3, 7)),
            (ExactRational::one(), ExactRational::ratio(-2, 3)),
        ] {
            for order in 1..=8usize {
                let mut coeff = vec![ExactRational::zero(); order + 1];
                for l in 0..=order {
                    let poly = vptcore::reexpansion_polynomial(series, l).unwrap();
                    for (k, c) in poly.iter().enumerate() {
                        // c (2r)^k (g/4)^l Omega^(1+k-3l)
                        let m = 1 + k as i64 - 3 * l as i64;
                        let pre = c
                            * &(&rr * &ExactRational::from_i64(2)).pow(k as i32)
                            * &ExactRational::ratio(1, 4).pow(l as i32);
                        // Omega^m = omega^m (1 - g r/(2 omega^2))^(m/2): binomial series in g.
                        let t = &(&rr / &(&omega * &omega)) * &ExactRational::ratio(-1, 2);
                        let mut bin = ExactRational::one();
                        let mut tp = ExactRational::one();
                        for s in 0..=(order - l) {
                            let term = &(&(&pre * &omega.pow(m as i32)) * &bin) * &tp;
                            coeff[l + s] = &coeff[l + s] + &term;
                            // C(m/2, s+1) = C(m/2, s) (m/2 - s)/(s+1)
                            bin = &bin * &ExactRational::ratio(m - 2 * s as i64, 2 * (s as i64 + 1));
                            tp = &tp * &t;
                        }
                    }
                }
                let ok = (0..=order).all(|l| {
                    let raw = &series.coefficients()[l]
                        * &omega.pow(1 - 3 * l as i32)
                        * &ExactRational::ratio(1, 4).pow(l as i32);
                    coeff[l] == raw
                });
                o.check(format!("N={order}, omega={omega}, r={rr}: g^0..g^N exact"), ok);
            }
        }
    })
}

#[test]
fn acceptance() {
    let series = cached_series();
    let t = Instant::now();
    let engine = StrongCouplingEngine::new(&series, 251, WORKING).unwrap();
    let table = engine
        .alpha_table(251, 22, &FrequencySchedule::default(), Execution::default())
        .unwrap();
    let table_time = t.elapsed();

    let (c6, c7) = criterion_6_7(&engine, &table);
    let mut c3 = criterion_3(&engine);
    c3.elapsed += table_time;
    let results: Vec<(usize, &str, Outcome)> = vec![
        (1, "exact head coefficients", criterion_1()),
        (2, "full generation to order 251", criterion_2()),
        (3, "alpha_0 anchor to 23 digits", c3),
        (4, "tabulated alpha_n coefficients", criterion_4(&table)),
        (5, "tabulated energies and bounds", criterion_5(&table)),
        (6, "convergence law kappa_1", c6),
        (7, "oscillating residuals", c7),
        (8, "derivative oracle", criterion_8(&series)),
        (9, "precision stability at 600 digits", criterion_9(&table)),
        (10, "independent Ritz oracle", criterion_10()),
        (11, "polynomial identity", criterion_11(&series)),
    ];

    let mut unexpected = Vec::new();
    for (id, name, out) in &results {
        let failures = out.failures();
        let known: Vec<&str> = KNOWN_FAILURES
            .iter()
            .filter(|(k, _)| k == id)
            .map(|(_, why)| *why)
            .collect();
        let status = if failures.is_empty() { "PASS" } else { "FAIL" };
        println!(
            "criterion {id:>2} [{status}] {name} ({} checks, {:.1?}){}",
            out.checks.len(),
            out.elapsed,
            if out.detail.is_empty() {
                String::new()
            } else {
                format!(" -- {}", out.detail)
            }
        );
        for f in &failures {
            let documented = known.iter().any(|k| k.starts_with(f));
            println!("    failed: {f}{}", if documented { " [known, see notes]" } else { "" });
            if !documented {
                unexpected.push(format!("criterion {id}: {f}"));
            }
        }
        for k in &known {
            if !failures.iter().any(|f| k.starts_with(f)) {
                unexpected.push(format!("criterion {id}: documented failure no longer fails: {k}"));
            }
        }
    }
    assert!(unexpected.is_empty(), "unexpected acceptance results: {unexpected:#?}");
}
