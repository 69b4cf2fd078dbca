mod common;

use proptest::prelude::*;
use riesz_lab::construction::{
    build_heights, check_dissociation, draw_stage_spacers, replicate_seed, sample_omega, stage_exponents,
    ConstructionParams, SpacerSupport,
};
use riesz_lab::rng::streams;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn chi_square_critical(df: usize) -> f64 {
    ChiSquared::new(df as f64).unwrap().inverse_cdf(0.999)
}

fn chi_square(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let e = n as f64 / counts.len() as f64;
    counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum()
}

#[test]
fn spacer_histograms_pass_chi_square() {
    for support in [SpacerSupport::Symmetric, SpacerSupport::NonNegative] {
        for t in 1..=8u64 {
            let (lo, hi) = support.bounds(t);
            let bins = support.size(t) as usize;

            // One coordinate across 10^5 independent seeds.
            let p = ConstructionParams::new(vec![3], vec![t], t + 1, support).unwrap();
            let mut across = vec![0u64; bins];
            for i in 0..100_000u64 {
                let w = draw_stage_spacers(&p, replicate_seed(5, streams::OMEGA, i), 1)[0];
                assert!((lo..=hi).contains(&w));
                across[(w - lo) as usize] += 1;
            }
            let crit = chi_square_critical(bins - 1);
            assert!(chi_square(&across) < crit, "{support:?} t={t}: {} >= {crit}", chi_square(&across));

            // 10^5 coordinates of a single draw.
            let p = ConstructionParams::new(vec![100_001], vec![t], t + 1, support).unwrap();
            let mut within = vec![0u64; bins];
            for w in draw_stage_spacers(&p, 11, 1) {
                within[(w - lo) as usize] += 1;
            }
            assert!(chi_square(&within) < crit, "{support:?} t={t}: {} >= {crit}", chi_square(&within));
        }
    }
}

/// Whether every omega gives `prod |P_j|^2` constant term exactly 1, by
/// enumerating all configurations and expanding in coefficient space.
fn brute_force_mass_one(m: &[usize], t: &[u64], h1: u64, support: SpacerSupport) -> bool {
    let h = common::heights(m, t, h1);
    let stage_rows: Vec<Vec<Vec<i64>>> = (0..m.len())
        .map(|j| {
            let (lo, hi) = support.bounds(t[j]);
            common::rows(m[j] - 1, lo, hi)
        })
        .collect();
    let mut combos: Vec<Vec<Vec<i64>>> = vec![vec![]];
    for j in 0..m.len() {
        let mut next = Vec::new();
        for c in &combos {
            for r in &stage_rows[j] {
                let mut x = c.clone();
                x.push(common::exponents(h[j], t[j], r));
                next.push(x);
            }
        }
        combos = next;
    }
    combos.iter().all(|polys| (common::density_expansion(polys)[&0] - 1.0).abs() < 1e-12)
}

#[test]
fn dissociation_example_matches_brute_force() {
    let p = ConstructionParams::new(vec![2, 2, 2], vec![1, 1, 1], 8, SpacerSupport::Symmetric).unwrap();
    let h = build_heights(&p).unwrap();
    assert_eq!(h.as_slice(), &common::heights(&[2, 2, 2], &[1, 1, 1], 8)[..]);
    assert!(check_dissociation(&p, &h).dissociated);
    assert!(brute_force_mass_one(&[2, 2, 2], &[1, 1, 1], 8, SpacerSupport::Symmetric));
}

#[test]
fn collisions_are_detected_when_spacers_reach_lower_stages() {
    let p = ConstructionParams::new(vec![2, 3], vec![1, 8], 8, SpacerSupport::Symmetric).unwrap();
    let h = build_heights(&p).unwrap();
    assert!(!check_dissociation(&p, &h).dissociated);
    assert!(!brute_force_mass_one(&[2, 3], &[1, 8], 8, SpacerSupport::Symmetric));
}

#[test]
fn exponents_match_definition() {
    let p = ConstructionParams::new(vec![4, 3], vec![2, 3], 5, SpacerSupport::Symmetric).unwrap();
    let h = build_heights(&p).unwrap();
    let oh = common::heights(&p.m, &p.t, p.h1);
    let omega = sample_omega(&p, 77, 2).unwrap();
    for j in 1..=2 {
        let e = stage_exponents(&p, &h, &omega, j).unwrap();
        let o = common::exponents(oh[j - 1], p.t[j - 1], omega.stage(j));
        assert_eq!(e.n.iter().map(|&x| x as i64).collect::<Vec<_>>(), o);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// A positive dissociation verdict guarantees mass one for every omega.
    #[test]
    fn dissociation_verdict_is_sound(
        m1 in 2usize..4,
        m2 in 2usize..3,
        t1 in 1u64..3,
        t2 in 1u64..3,
        extra in 1u64..6,
        symmetric in any::<bool>(),
    ) {
        let support = if symmetric { SpacerSupport::Symmetric } else { SpacerSupport::NonNegative };
        let h1 = t1.max(t2) + extra;
        let p = ConstructionParams::new(vec![m1, m2], vec![t1, t2], h1, support).unwrap();
        let h = build_heights(&p).unwrap();
        if check_dissociation(&p, &h).dissociated {
            prop_assert!(brute_force_mass_one(&[m1, m2], &[t1, t2], h1, support));
        }
    }

    #[test]
    fn heights_double_and_bound_exponents(
        m in proptest::collection::vec(2usize..20, 1..5),
        t0 in 1u64..10,
        extra in 1u64..50,
    ) {
        let t = vec![t0; m.len()];
        let p = ConstructionParams::new(m.clone(), t.clone(), t0 + extra, SpacerSupport::Symmetric).unwrap();
        let h = build_heights(&p).unwrap();
        prop_assert_eq!(h.as_slice(), &common::heights(&m, &t, t0 + extra)[..]);
        for j in 1..=m.len() {
            prop_assert!(h.at(j + 1) >= 2 * h.at(j));
            prop_assert!((m[j - 1] as u64 - 1) * (h.at(j) + t0) + t0 < h.at(j + 1));
        }
    }
}
