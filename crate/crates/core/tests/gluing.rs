use ergokit::gluing::{
    approximate_by_periodic_measure, build_periodic_net, glue, glue_periodic, gluing_from_shadowing,
    measure::d_star, shadow, NetClass, SegmentSpec,
};
use ergokit::systems::chain_recurrence;
use ergokit::{MetricPoint, Observable, Sampler, ShiftSpace, SymbolPoint, System, TorusLift};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GOLDEN: f64 = 0.618_033_988_749_894_8;

fn sym(prefix: &[u8], tail: &[u8]) -> MetricPoint {
    MetricPoint::Symbol(SymbolPoint::new(prefix.to_vec(), tail.to_vec()).unwrap())
}

fn circle(x: f64) -> MetricPoint {
    MetricPoint::Torus(vec![x])
}

fn cdist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Doubling pseudo-orbit with uniform jumps in [-δ, δ].
fn noisy_doubling(rng: &mut ChaCha8Rng, x0: f64, len: usize, delta: f64) -> Vec<f64> {
    let mut xs = vec![x0];
    for _ in 1..len {
        let x = *xs.last().unwrap();
        xs.push((2.0 * x + rng.random_range(-delta..=delta)).rem_euclid(1.0));
    }
    xs
}

fn cylinder_basis(depth: usize) -> Vec<Observable> {
    let mut out = Vec::new();
    for len in 1..=depth {
        for code in 0..(1usize << len) {
            let w: Vec<u8> = (0..len).rev().map(|i| ((code >> i) & 1) as u8).collect();
            out.push(Observable::cylinder(&w));
        }
    }
    out
}

#[test]
fn exact_orbit_is_its_own_shadow() {
    let sys = System::Lift(TorusLift::doubling());
    let mut x = 0.3;
    let mut pseudo = Vec::new();
    for _ in 0..30 {
        pseudo.push(circle(x));
        x = (2.0 * x) % 1.0;
    }
    let sh = shadow(&sys, &pseudo, 0.0, false).unwrap();
    assert_eq!(sh.point, circle(0.3));
    assert_eq!(sh.achieved, 0.0);
}

#[test]
fn doubling_shadow_of_perturbed_orbit() {
    let sys = System::Lift(TorusLift::doubling());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut xs = vec![0.3];
    for _ in 1..100 {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        xs.push((2.0 * xs.last().unwrap() + sign * 1e-4f64).rem_euclid(1.0));
    }
    let pseudo: Vec<MetricPoint> = xs.iter().map(|&x| circle(x)).collect();
    let sh = shadow(&sys, &pseudo, 1e-4, false).unwrap();
    // Independent check: iterate the shadow's binary expansion digit by digit.
    let y = sh.binary.unwrap();
    for (k, &x) in xs.iter().enumerate() {
        let v: f64 = (0..60).map(|i| y.at(k + i) as f64 * 0.5f64.powi(i as i32 + 1)).sum();
        assert!(cdist(v, x) <= 2e-4, "step {k}");
    }
}

#[test]
fn doubling_shadow_bound_on_random_pseudo_orbits() {
    let sys = System::Lift(TorusLift::doubling());
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for delta in [1e-3, 1e-4] {
        for _ in 0..1000 {
            let x0 = rng.random::<f64>();
            let xs = noisy_doubling(&mut rng, x0, 100, delta);
            let pseudo: Vec<MetricPoint> = xs.iter().map(|&x| circle(x)).collect();
            let sh = shadow(&sys, &pseudo, delta, false).unwrap();
            assert!(sh.achieved <= 2.0 * delta, "{} > {}", sh.achieved, 2.0 * delta);
        }
    }
}

#[test]
fn shift_shadow_splices_hopping_orbit() {
    let s = ShiftSpace::full(2).unwrap();
    let sys = System::Shift(s.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    // Each x_{k+1} keeps the first five symbols of σ x_k and randomizes the rest.
    let mut words: Vec<Vec<u8>> = vec![(0..12).map(|_| rng.random_range(0..2u8)).collect()];
    for _ in 0..40 {
        let prev = words.last().unwrap();
        let mut w: Vec<u8> = prev[1..6].to_vec();
        w.extend((0..7).map(|_| rng.random_range(0..2u8)));
        words.push(w);
    }
    let pseudo: Vec<MetricPoint> = words.iter().map(|w| MetricPoint::Symbol(s.extend(w))).collect();
    let delta = 0.5f64.powi(5);
    let sh = shadow(&sys, &pseudo, delta, false).unwrap();
    assert!(sh.achieved <= 2.0 * delta);
    let y = sh.point.as_symbol().unwrap();
    for (k, w) in words.iter().enumerate() {
        assert!((0..5).all(|i| y.at(k + i) == w[i]), "point {k}");
    }
}

#[test]
fn rotations_have_no_shadowing_oracle() {
    let sys = System::Lift(TorusLift::translation(vec![GOLDEN]).unwrap());
    assert!(matches!(
        shadow(&sys, &[circle(0.0), circle(GOLDEN)], 0.1, false),
        Err(ergokit::Error::Unsupported(_))
    ));
}

#[test]
fn full_shift_glue_example() {
    let sys = System::Shift(ShiftSpace::full(2).unwrap());
    let spec = SegmentSpec::new(vec![(sym(&[], &[0]), 3), (sym(&[], &[1]), 3)], 0.25);
    let g = glue(&sys, &spec).unwrap();
    assert_eq!(g.gaps, vec![1]);
    assert_eq!(g.point, sym(&[0, 0, 0, 0], &[1]));
    assert!(g.errors.iter().all(|&e| e <= 0.25));
}

#[test]
fn single_segment_returns_anchor() {
    let sys = System::Shift(ShiftSpace::golden_mean());
    let x = sym(&[0, 1, 0, 0], &[1, 0]);
    let g = glue(&sys, &SegmentSpec::new(vec![(x.clone(), 7)], 0.1)).unwrap();
    assert_eq!(g.point, x);
    assert!(g.gaps.is_empty());
    let rot = System::Lift(TorusLift::translation(vec![GOLDEN]).unwrap());
    let g = glue(&rot, &SegmentSpec::new(vec![(circle(0.25), 50)], 0.05)).unwrap();
    assert_eq!(g.point, circle(0.25));
}

#[test]
fn golden_rotation_gap_is_first_entry() {
    let sys = System::Lift(TorusLift::translation(vec![GOLDEN]).unwrap());
    let spec = SegmentSpec::new(vec![(circle(0.0), 100), (circle(0.5), 100)], 0.01);
    let g = glue(&sys, &spec).unwrap();
    // Brute-force first entry of the orbit end into B(0.5, 0.01).
    let end = (100.0 * GOLDEN).rem_euclid(1.0);
    let p = (0..).find(|&n| cdist(end + n as f64 * GOLDEN, 0.5) < 0.01).unwrap();
    assert_eq!(g.gaps, vec![p]);
    assert!(p <= g.gap_bound);
    assert!(g.errors.iter().all(|&e| e < 0.01 + 1e-9));
}

#[test]
fn periodic_translation_gluing_is_unsupported() {
    let sys = System::Lift(TorusLift::translation(vec![GOLDEN]).unwrap());
    let spec = SegmentSpec::new(vec![(circle(0.0), 10)], 0.1);
    assert!(matches!(glue_periodic(&sys, &spec), Err(ergokit::Error::Unsupported(_))));
}

#[test]
fn doubling_glue_and_periodic_glue() {
    let sys = System::Lift(TorusLift::doubling());
    let spec = SegmentSpec::new(vec![(circle(0.1), 8), (circle(0.7), 6), (circle(0.33), 4)], 0.01);
    let g = glue(&sys, &spec).unwrap();
    assert!(g.errors.iter().all(|&e| e <= 0.01));
    let p = glue_periodic(&sys, &spec).unwrap();
    assert_eq!(p.period, Some(18 + p.gaps.iter().sum::<usize>()));
    assert!(p.binary.as_ref().unwrap().is_periodic());
}

#[test]
fn random_sft_specs_revalidate() {
    let s = ShiftSpace::golden_mean();
    let sys = System::Shift(s.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..1000 {
        let k = rng.random_range(1..5);
        let eps = 0.5f64.powi(rng.random_range(1..6));
        let segs = (0..k)
            .map(|_| (MetricPoint::Symbol(s.random_point(&mut rng, 12)), rng.random_range(0..10)))
            .collect();
        let spec = SegmentSpec::new(segs, eps);
        for periodic in [false, true] {
            let g = if periodic { glue_periodic(&sys, &spec) } else { glue(&sys, &spec) }.unwrap();
            assert!(g.gaps.iter().all(|&p| p <= g.gap_bound));
            assert!(g.errors.iter().all(|&e| e <= eps));
            for (seg, &o) in spec.segments.iter().zip(&g.offsets).filter(|(seg, _)| seg.len > 0) {
                let y = g.point.as_symbol().unwrap().shift_by(o);
                let d = sys.bowen_distance(&MetricPoint::Symbol(y), &seg.anchor, seg.len).unwrap();
                assert!(d <= eps);
            }
        }
    }
}

#[test]
fn full_shift_net_is_two_cylinders() {
    let sys = System::Shift(ShiftSpace::full(2).unwrap());
    let net = build_periodic_net(&sys, &NetClass::Whole, 0.25).unwrap();
    let mut prefixes: Vec<Vec<u8>> = net.members.iter().map(|m| m.as_symbol().unwrap().word(0, 2)).collect();
    prefixes.sort();
    assert_eq!(prefixes, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
    assert!(net.members.iter().all(|m| m.as_symbol().unwrap().tail_period() <= 2));
    assert_eq!(net.k_bound, 4 * 2);
}

#[test]
fn doubling_net_at_one_eighth() {
    let sys = System::Lift(TorusLift::doubling());
    let net = build_periodic_net(&sys, &NetClass::Whole, 0.125).unwrap();
    let mut xs: Vec<f64> = net.members.iter().map(|m| m.coords().unwrap()[0]).collect();
    xs.sort_by(f64::total_cmp);
    // Odd-denominator rationals, pairwise more than 1/8 apart, gaps at most 1/4.
    for (i, &x) in xs.iter().enumerate() {
        let q = net.periods[net.members.iter().position(|m| m.coords().unwrap()[0] == x).unwrap()];
        let k = x * ((1u64 << q) - 1) as f64;
        assert!((k - k.round()).abs() < 1e-9);
        for &y in &xs[..i] {
            assert!(cdist(x, y) > 0.125);
        }
    }
    assert!(xs.windows(2).all(|w| w[1] - w[0] <= 0.25) && xs[0] + 1.0 - xs[xs.len() - 1] <= 0.25);
    assert_eq!(net.k_bound, net.size() * net.periods.iter().max().unwrap());
}

#[test]
fn north_south_class_net_is_the_fixed_point() {
    let f = TorusLift::circle_sine(0.0, 0.1);
    let graph = chain_recurrence(&f, 64).unwrap();
    let idx = graph
        .components
        .iter()
        .position(|c| c.boxes.contains(&32))
        .expect("a class around 1/2");
    let class = NetClass::from_component(&graph, idx).unwrap();
    let net = build_periodic_net(&System::Lift(f), &class, 0.05).unwrap();
    assert_eq!(net.size(), 1);
    assert!(cdist(net.members[0].coords().unwrap()[0], 0.5) < 1e-9);
    assert_eq!(net.k_bound, 1);
}

#[test]
fn doubling_gluing_from_shadowing() {
    let sys = System::Lift(TorusLift::doubling());
    let net = build_periodic_net(&sys, &NetClass::Whole, 0.125).unwrap();
    let spec = SegmentSpec::new(vec![(circle(1.0 / 7.0), 5), (circle(1.0 / 3.0), 5)], 0.25);
    let g = gluing_from_shadowing(&sys, &net, &spec).unwrap();
    assert!(g.gaps.iter().all(|&p| p <= net.k_bound));
    assert!(g.errors.iter().all(|&e| e <= 0.25));
    assert_eq!(g.gap_bound, net.k_bound);
}

#[test]
fn single_segment_at_net_point() {
    let sys = System::Shift(ShiftSpace::full(2).unwrap());
    let net = build_periodic_net(&sys, &NetClass::Whole, 0.25).unwrap();
    let theta = sym(&[], &[0, 1]);
    let g = gluing_from_shadowing(&sys, &net, &SegmentSpec::new(vec![(theta.clone(), 2)], 0.5)).unwrap();
    assert_eq!(g.point, theta);
}

#[test]
fn net_and_direct_periodic_gluing_agree_on_spec() {
    let s = ShiftSpace::full(2).unwrap();
    let sys = System::Shift(s.clone());
    let net = build_periodic_net(&sys, &NetClass::Whole, 0.0625).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let spec = SegmentSpec::new(
        (0..3).map(|_| (MetricPoint::Symbol(s.random_point(&mut rng, 10)), 6)).collect(),
        0.125,
    );
    let a = gluing_from_shadowing(&sys, &net, &spec).unwrap();
    let b = glue_periodic(&sys, &spec).unwrap();
    assert!(a.gaps.iter().all(|&p| p <= net.k_bound));
    assert!(b.gaps.iter().all(|&p| p <= b.gap_bound));
    assert!(a.errors.iter().chain(&b.errors).all(|&e| e <= 0.125));
}

#[test]
fn net_gaps_never_exceed_k() {
    let sys = System::Lift(TorusLift::doubling());
    let net = build_periodic_net(&sys, &NetClass::Whole, 1.0 / 16.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..200 {
        let k = rng.random_range(1..4);
        let segs = (0..k).map(|_| (circle(rng.random::<f64>()), rng.random_range(1..12))).collect();
        let g = gluing_from_shadowing(&sys, &net, &SegmentSpec::new(segs, 0.125)).unwrap();
        assert!(g.gaps.iter().all(|&p| p <= net.k_bound));
    }
}

#[test]
fn dirac_target_is_its_own_approximation() {
    let sys = System::Shift(ShiftSpace::full(2).unwrap());
    let target = vec![(Sampler::Dirac { point: SymbolPoint::constant(0) }, 1.0)];
    let pm = approximate_by_periodic_measure(&sys, &target, 0.1, &cylinder_basis(3), 0).unwrap();
    assert_eq!(pm.point, SymbolPoint::constant(0));
    assert_eq!(pm.d_star, 0.0);
}

#[test]
fn two_dirac_target() {
    let sys = System::Shift(ShiftSpace::full(2).unwrap());
    let target = vec![
        (Sampler::Dirac { point: SymbolPoint::constant(0) }, 0.5),
        (Sampler::Dirac { point: SymbolPoint::constant(1) }, 0.5),
    ];
    let basis = cylinder_basis(3);
    let pm = approximate_by_periodic_measure(&sys, &target, 0.05, &basis, 0).unwrap();
    let n = pm.lengths[0];
    let mut expect = vec![0u8; n];
    expect.extend(vec![1u8; n]);
    assert_eq!(pm.word, expect);
    assert!(pm.bound <= 0.05);
    // Exact cylinder frequencies of 0^n 1^n against the target.
    let freq = |w: &[u8]| -> f64 {
        let p = expect.len();
        (0..p).filter(|&j| w.iter().enumerate().all(|(i, &c)| expect[(j + i) % p] == c)).count() as f64 / p as f64
    };
    let target_mass = |w: &[u8]| -> f64 {
        0.5 * (w.iter().all(|&c| c == 0) as u8 as f64) + 0.5 * (w.iter().all(|&c| c == 1) as u8 as f64)
    };
    let mut d = 0.0;
    let mut b = 0;
    for len in 1..=3 {
        for code in 0..(1usize << len) {
            let w: Vec<u8> = (0..len).rev().map(|i| ((code >> i) & 1) as u8).collect();
            b += 1;
            d += 0.5f64.powi(b) * (freq(&w) - target_mass(&w)).abs();
        }
    }
    assert!((d - pm.d_star).abs() < 1e-12);
}

#[test]
fn bernoulli_target_certificate_recomputes() {
    let sys = System::Shift(ShiftSpace::full(2).unwrap());
    let basis = cylinder_basis(3);
    let target = vec![(Sampler::bernoulli(0.3), 1.0)];
    let pm = approximate_by_periodic_measure(&sys, &target, 0.1, &basis, 4).unwrap();
    assert!(pm.bound <= 0.1);
    assert!((d_star(&basis, &pm.word, &pm.targets) - pm.d_star).abs() < 1e-12);
    let ones = pm.word.iter().filter(|&&c| c == 1).count() as f64 / pm.word.len() as f64;
    assert!((ones - 0.3).abs() < 0.1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sft_periodic_gluing_closes(words in prop::collection::vec(prop::collection::vec(0u8..2, 1..8), 1..4), m in 1i32..5) {
        let s = ShiftSpace::golden_mean();
        let sys = System::Shift(s.clone());
        // Drop forbidden 11 blocks so every word is admissible.
        let segs: Vec<(MetricPoint, usize)> = words
            .iter()
            .map(|w| {
                let w: Vec<u8> = w.iter().enumerate().map(|(i, &c)| if i > 0 && w[i - 1] == 1 { 0 } else { c }).collect();
                (MetricPoint::Symbol(s.extend(&w)), w.len())
            })
            .collect();
        let g = glue_periodic(&sys, &SegmentSpec::new(segs, 0.5f64.powi(m))).unwrap();
        let y = g.point.as_symbol().unwrap();
        prop_assert_eq!(g.period.unwrap() % y.tail_period(), 0);
        prop_assert!(y.prefix().is_empty());
    }
}
