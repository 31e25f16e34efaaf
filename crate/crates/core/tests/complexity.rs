use ergokit::complexity::{
    cover::CoverTarget, entropy_estimate, katok_entropy, max_separated, mdim_estimate, pressure_estimate,
    relative_pressure_upper, validate_separated,
};
use ergokit::systems::TorusLift;
use ergokit::{Observable, Sampler, ShiftSpace, SymbolPoint, System};
use proptest::prelude::*;

fn dyadic(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|k| 0.5f64.powi(k)).collect()
}

fn full2() -> System {
    System::Shift(ShiftSpace::full(2).unwrap())
}

/// Brute-force count of words of length `len` avoiding `11`.
fn golden_words(len: usize) -> u128 {
    (0u32..1 << len).filter(|w| w & (w >> 1) == 0).count() as u128
}

#[test]
fn separated_counts_match_word_enumeration() {
    let golden = System::Shift(ShiftSpace::golden_mean());
    for n in 1..=12 {
        for m in 1..=6 {
            let eps = 0.5f64.powi(m);
            let len = n + m as usize - 1;
            let e = max_separated(&full2(), n, eps, 0).unwrap();
            assert_eq!(e.count, Some(1u128 << len));
            let g = max_separated(&golden, n, eps, 0).unwrap();
            assert_eq!(g.count, Some(golden_words(len)), "n={n} m={m}");
        }
    }
}

#[test]
fn materialized_sets_revalidate() {
    let golden = System::Shift(ShiftSpace::golden_mean());
    let e = max_separated(&golden, 5, 0.125, 1 << 12).unwrap();
    assert_eq!(e.points.len() as u128, e.count.unwrap());
    assert_eq!(validate_separated(&golden, &e).unwrap(), None);
}

#[test]
fn golden_mean_entropy() {
    let sys = System::Shift(ShiftSpace::golden_mean());
    let est = entropy_estimate(&sys, &dyadic(3, 6), &(6..=14).collect::<Vec<_>>()).unwrap();
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    assert!((est.estimate / phi.ln() - 1.0).abs() < 0.03, "{}", est.estimate);
}

#[test]
fn pressure_matches_cylinder_sum() {
    // Σ over words of e^{#ones} = (1 + e)^n per n symbols.
    let psi = Observable::cylinder(&[1]);
    let est = pressure_estimate(&full2(), &psi, &dyadic(3, 6), &(6..=14).collect::<Vec<_>>()).unwrap();
    let oracle = (1.0 + 1f64.exp()).ln();
    assert!((est.estimate / oracle - 1.0).abs() < 0.02);
    // Whole table: log-sum = len·ln(1+e) + (len - n)... here every symbol of the word counts
    // only in its first n positions, the rest contribute a factor 2 each.
    for c in &est.table {
        let m = (1.0 / c.eps).log2().round() as usize;
        let expect = c.n as f64 * oracle + (m - 1) as f64 * 2f64.ln();
        assert!((c.log_sum - expect).abs() < 1e-9, "{c:?}");
    }
}

#[test]
fn zero_potential_is_bitwise_entropy() {
    let golden = System::Shift(ShiftSpace::golden_mean());
    let zero = Observable::Constant { value: vec![0.0] };
    let grid = (4..=9).collect::<Vec<_>>();
    let a = entropy_estimate(&golden, &dyadic(1, 4), &grid).unwrap();
    let b = pressure_estimate(&golden, &zero, &dyadic(1, 4), &grid).unwrap();
    for (x, y) in a.table.iter().zip(&b.table) {
        assert_eq!(x.log_sum.to_bits(), y.log_sum.to_bits());
        assert_eq!(x.log_sum, (golden_words(x.n + (1.0 / x.eps).log2() as usize - 1) as f64).ln());
    }
    assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
}

#[test]
fn katok_matches_bernoulli_entropy() {
    let grid: Vec<usize> = (5..=11).collect();
    for p in [0.3, 0.5] {
        let mu = Sampler::bernoulli(p);
        let k = katok_entropy(&full2(), &mu, None, 0.1, &dyadic(1, 2), &grid, 100_000, 7).unwrap();
        let h = -p * p.ln() - (1.0 - p) * (1.0 - p).ln();
        assert!((k.estimate / h - 1.0).abs() < 0.05, "p={p}: {} vs {h}", k.estimate);
    }
}

#[test]
fn katok_respects_variational_direction() {
    let h = entropy_estimate(&full2(), &dyadic(1, 4), &(5..=11).collect::<Vec<_>>()).unwrap();
    for i in 1..=9 {
        let mu = Sampler::bernoulli(i as f64 / 10.0);
        let k = katok_entropy(&full2(), &mu, None, 0.1, &dyadic(1, 2), &(5..=11).collect::<Vec<_>>(), 50_000, 3).unwrap();
        assert!(k.estimate <= h.estimate + 0.03, "p={}: {}", i as f64 / 10.0, k.estimate);
    }
}

#[test]
fn mdim_examples() {
    let n_grid: Vec<usize> = (4..=8).collect();
    let fin = mdim_estimate(&full2(), &dyadic(3, 6), &n_grid).unwrap();
    assert!(fin.slope.abs() <= 0.05 && fin.lower <= fin.upper);

    // Counting oracle: with 255 levels the ε-chain in one coordinate has 1/ε points.
    let interval = System::Shift(ShiftSpace::discretized_interval(255).unwrap());
    let cont = mdim_estimate(&interval, &dyadic(3, 6), &n_grid).unwrap();
    assert!((0.85..=1.15).contains(&cont.slope), "{cont:?}");

    let iso = System::Lift(TorusLift::translation(vec![0.25 * (5f64.sqrt() - 1.0), 0.5f64.sqrt()]).unwrap());
    let est = entropy_estimate(&iso, &dyadic(2, 5), &[2, 3, 4, 5]).unwrap();
    assert!(est.estimate.abs() <= 0.02);
    assert_eq!(est.mdim.unwrap().slope, 0.0);
}

#[test]
fn relative_pressure_examples() {
    let orbit: Vec<SymbolPoint> = (0..2).map(|k| SymbolPoint::periodic(&[0, 1]).shift_by(k)).collect();
    let c = relative_pressure_upper(&full2(), &CoverTarget::Points { points: orbit }, None, 0.125, 16, 256).unwrap();
    assert!(c.s_star.abs() < 0.05);

    let whole = relative_pressure_upper(&full2(), &CoverTarget::WholeShift, None, 0.125, 32, 256).unwrap();
    let h = entropy_estimate(&full2(), &[0.5, 0.25, 0.125, 0.0625], &(6..=14).collect::<Vec<_>>()).unwrap();
    assert!((whole.s_star - h.fit_for(0.125).unwrap()).abs() < 0.05);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn counts_monotone(n in 1usize..10, m in 1i32..6) {
        let golden = System::Shift(ShiftSpace::golden_mean());
        let eps = 0.5f64.powi(m);
        let base = max_separated(&golden, n, eps, 0).unwrap().count.unwrap();
        prop_assert!(max_separated(&golden, n + 1, eps, 0).unwrap().count.unwrap() >= base);
        prop_assert!(max_separated(&golden, n, eps / 2.0, 0).unwrap().count.unwrap() >= base);
    }

    #[test]
    fn cover_log_m_is_monotone_in_depth_window(n_min in 2usize..20, extra in 0usize..40) {
        // Allowing deeper balls can only lower the critical exponent for ψ = 0.
        let pts = vec![SymbolPoint::periodic(&[0, 0, 1]), SymbolPoint::periodic(&[1])];
        let z = CoverTarget::Points { points: pts };
        let a = relative_pressure_upper(&full2(), &z, None, 0.25, n_min, n_min + extra).unwrap();
        let b = relative_pressure_upper(&full2(), &z, None, 0.25, n_min, n_min + extra + 5).unwrap();
        prop_assert!(b.s_star <= a.s_star + 1e-9);
    }
}
