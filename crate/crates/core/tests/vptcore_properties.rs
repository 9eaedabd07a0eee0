use std::path::PathBuf;

use vpt_core::benderwu::{self, BWSeries};
use vpt_core::numerics::{PrecisionContext, Real};
use vpt_core::vptcore::{self, EnergyFunction, ReexpansionTable};

const DIGITS: u32 = 80;

fn series() -> BWSeries {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/bw-251.cache");
    benderwu::load_cache(&path).unwrap().truncated(40).unwrap()
}

fn r(s: &str) -> Real {
    Real::parse(s, DIGITS).unwrap()
}

fn close(a: &Real, b: &Real, rel: &str) -> bool {
    (a - b).abs() <= &r(rel) * &b.abs().max(Real::one(DIGITS))
}

#[test]
fn unit_ratio_reduces_to_raw_series() {
    let s = series();
    for g in ["0.01", "0.2", "1.5"] {
        for omega in ["1", "1.3"] {
            for order in [1usize, 4, 11, 20] {
                let w = vptcore::variational_energy(&s, &r(g), &r(omega), &r(omega), order).unwrap();
                let raw = vptcore::raw_partial_sum(&s, &r(g), &r(omega), order).unwrap();
                assert!(close(&w.value, &raw, "1e-70"), "g={g} omega={omega} N={order}");
            }
        }
    }
}

#[test]
fn scaling_law_in_omega() {
    let s = series();
    let (g, trial) = (r("2.5"), r("1.9"));
    for omega in ["0.5", "1", "2"] {
        let om = r(omega);
        for order in [1usize, 6, 15] {
            let direct = vptcore::variational_energy(&s, &g, &om, &trial, order).unwrap().value;
            let scaled =
                vptcore::variational_energy(&s, &(&g / &om.powi(3)), &Real::one(DIGITS), &(&trial / &om), order)
                    .unwrap()
                    .value;
            assert!(close(&direct, &(&om * &scaled), "1e-70"), "omega={omega} N={order}");
        }
    }
}

/// The optimum is a stationary point of `W_N` in the trial frequency when one
/// exists (always for odd `N`); otherwise it is the turning point.
#[test]
fn optimum_is_stationary_or_turning_point() {
    let s = series();
    let ctx = PrecisionContext::new(DIGITS, 25).unwrap();
    for (g, order) in [("4", 1usize), ("4", 2), ("4", 7), ("40", 12), ("0.4", 5), ("0.4", 6)] {
        let g = r(g);
        let om = vptcore::optimal_frequency(&s, &g, &Real::one(DIGITS), order, &ctx).unwrap();
        let table = ReexpansionTable::new(&s, order, DIGITS).unwrap();
        let [w, dw, d2w] = EnergyFunction::new(&table, order, &g, &Real::one(DIGITS)).eval(&om);
        let tol = r("1e-25");
        let stationary = (&dw / &w).abs() < tol;
        assert!(stationary || order % 2 == 0, "N={order}");
        assert!(stationary || (&(&d2w * &om) / &w).abs() < tol, "N={order}");
    }
}
