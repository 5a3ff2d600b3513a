//! Randomized invariants for the analytic layer, the ledger, and the tape.

use hedgebench::analytic::{bs_delta, bs_price, leland_vol, CostModel, OptionSpec};
use hedgebench::autodiff::Tape;
use hedgebench::engine::{compute_zt, TableStrategy};
use hedgebench::simulation::realized_vol;
use proptest::prelude::*;

proptest! {
    #[test]
    fn bs_price_within_no_arbitrage_bounds(
        spot in 0.4f64..2.5,
        strike in 0.4f64..2.5,
        ttm in 0.01f64..2.0,
        r in 0.0f64..0.1,
        vol in 0.05f64..0.8,
    ) {
        let spec = OptionSpec::call(strike, ttm).unwrap();
        let price = bs_price(spot, &spec, ttm, r, vol).unwrap();
        let intrinsic = (spot - strike * (-r * ttm).exp()).max(0.0);
        prop_assert!(price >= intrinsic - 1e-12);
        prop_assert!(price <= spot + 1e-12);
    }

    #[test]
    fn bs_delta_is_a_probability_and_monotone_in_spot(
        spot in 0.4f64..2.5,
        strike in 0.4f64..2.5,
        ttm in 0.01f64..2.0,
        vol in 0.05f64..0.8,
    ) {
        let spec = OptionSpec::call(strike, ttm).unwrap();
        let d = bs_delta(spot, &spec, ttm, 0.0, vol).unwrap();
        // Deep in/out of the money with tiny vol*sqrt(ttm) saturates the
        // normal CDF to exactly 0 or 1 in floating point.
        prop_assert!((0.0..=1.0).contains(&d));
        let d_up = bs_delta(spot * 1.01, &spec, ttm, 0.0, vol).unwrap();
        prop_assert!(d_up >= d);
    }

    #[test]
    fn leland_vol_dominates_sigma_and_grows_with_alpha(
        sigma in 0.05f64..0.8,
        alpha in 0.0f64..0.05,
        dt in 1e-4f64..0.1,
    ) {
        let nu = leland_vol(sigma, alpha, dt).unwrap();
        prop_assert!(nu >= sigma);
        let nu_more = leland_vol(sigma, alpha + 0.01, dt).unwrap();
        prop_assert!(nu_more > nu);
    }

    #[test]
    fn ledger_cost_is_nondecreasing_in_tc(
        moves in proptest::collection::vec(0.7f64..1.4, 1..5),
        hedges in proptest::collection::vec(-0.5f64..1.5, 5),
        tc_lo in 0.0f64..0.05,
        bump in 0.001f64..0.05,
    ) {
        let mut path = vec![1.0];
        for m in &moves {
            path.push(path.last().unwrap() * m);
        }
        let n = path.len() - 1;
        let spec = OptionSpec::call(1.0, 0.25).unwrap();
        let strategy = TableStrategy { spec, dt: 0.25 / n as f64, hedges: hedges[..n].to_vec() };
        let lo = compute_zt(&path, &strategy, &spec, 0.02, &CostModel::new(tc_lo).unwrap()).unwrap();
        let hi = compute_zt(&path, &strategy, &spec, 0.02, &CostModel::new(tc_lo + bump).unwrap()).unwrap();
        prop_assert!(hi >= lo - 1e-12);
    }

    #[test]
    fn realized_vol_is_scale_invariant(
        moves in proptest::collection::vec(0.7f64..1.4, 2..20),
        scale in 0.1f64..10.0,
    ) {
        let mut path = vec![1.0];
        for m in &moves {
            path.push(path.last().unwrap() * m);
        }
        let scaled: Vec<f64> = path.iter().map(|x| x * scale).collect();
        let a = realized_vol(&path, 0.01).unwrap();
        let b = realized_vol(&scaled, 0.01).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
    }

    #[test]
    fn tape_gradients_match_finite_differences_on_smooth_ops(
        x in -1.5f64..1.5,
        y in 0.1f64..2.0,
    ) {
        let f = |x: f64, y: f64| -> f64 { (x * y).exp() + x / y + (y).ln() * x };
        let grad = |x: f64, y: f64| {
            let mut t = Tape::new();
            let vx = t.leaf(x);
            let vy = t.leaf(y);
            let xy = t.mul(vx, vy);
            let e = t.exp(xy);
            let q = t.div(vx, vy).unwrap();
            let l = t.ln(vy).unwrap();
            let lx = t.mul(l, vx);
            let s = t.add(e, q);
            let out = t.add(s, lx);
            t.gradient(out, 2)
        };
        let g = grad(x, y);
        let h = 1e-6;
        let fdx = (f(x + h, y) - f(x - h, y)) / (2.0 * h);
        let fdy = (f(x, y + h) - f(x, y - h)) / (2.0 * h);
        prop_assert!((g[0] - fdx).abs() <= 1e-6 * fdx.abs().max(1.0));
        prop_assert!((g[1] - fdy).abs() <= 1e-6 * fdy.abs().max(1.0));
    }
}
