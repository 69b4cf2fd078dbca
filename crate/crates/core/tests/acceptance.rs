//! Acceptance suite: one line per criterion, non-zero exit if any fails.

mod common;

use std::time::Instant;

use riesz_lab::construction::{all_exponents, build_heights, check_dissociation, sample_omega};
use riesz_lab::experiments::{
    auto_rule_l1, centered_comparison, clt_distribution_test, decay_experiment, estimate_mean_abs, fubini_check,
    lindeberg_ladder, lindeberg_ratio, verify, CircleRule, ExperimentReport, GridChoice, MonteCarlo, VerifyOptions,
};
use riesz_lab::polyeval::{eval_stage_polynomial, CircleGrid, StageModel, SAMPLING_GRID_SIZE};
use riesz_lab::presets::{preset, LINDEBERG_LADDER};
use riesz_lab::riesz::{exact_mass, fourier_coefficient, partial_abs_product};
use riesz_lab::sum::Estimate;
use riesz_lab::{ConstructionParams, ExponentSet, SpacerSupport};

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn sampled() -> CircleRule {
    CircleRule::Sampled { grid: CircleGrid::new(SAMPLING_GRID_SIZE).unwrap(), points: 32 }
}

fn sqrt_pi_2() -> f64 {
    std::f64::consts::PI.sqrt() / 2.0
}

/// 1. `E int |P|` at m = 256, t = 64 is within 3 stderr of sqrt(pi)/2.
fn clt_mean() -> Outcome {
    let started = Instant::now();
    let p = preset("clt").unwrap();
    let seed = 1;
    let rule = auto_rule_l1(&p, &[1], seed).unwrap().rule;
    let m = rule.grid().size();
    let n_omega = 16usize.max(1_000_000usize.div_ceil(m as usize));
    let r = estimate_mean_abs(&p, 1, &MonteCarlo::new(n_omega, rule, seed)).unwrap();
    let secs = started.elapsed().as_secs_f64();
    let e = r.estimate("mean_abs").unwrap();
    let within = (e.value - sqrt_pi_2()).abs() <= 3.0 * e.stderr;
    let points = n_omega as u64 * m;
    outcome(
        within && e.stderr <= 0.01 && points >= 1_000_000 && secs <= 60.0,
        format!(
            "mean {:.6} +- {:.1e} vs {:.6} (gap {:.4} = {:.0} stderr), {n_omega} omega x M={m} = {points} points, {secs:.1}s",
            e.value,
            e.stderr,
            sqrt_pi_2(),
            e.value - sqrt_pi_2(),
            (e.value - sqrt_pi_2()).abs() / e.stderr
        ),
    )
}

/// 2. Centered difference stays under the support bound for t in {9, 99}.
fn centered_bound() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["bound-t9-sym", "bound-t9-nonneg", "bound-t99-sym", "bound-t99-nonneg"] {
        let p = preset(name).unwrap();
        let t = p.t[0] as f64;
        let bound = match p.spacer_support {
            SpacerSupport::Symmetric => 1.0 / (2.0 * t + 1.0).sqrt(),
            SpacerSupport::NonNegative => 1.0 / (t + 1.0).sqrt(),
        };
        let rule = auto_rule_l1(&p, &[1], 2).unwrap().rule;
        let r = centered_comparison(&p, 1, &MonteCarlo::new(16, rule, 2)).unwrap();
        let d = r.estimate("delta").unwrap();
        let pass = d.value <= bound + 3.0 * d.stderr && (r.value("support_bound").unwrap() - bound).abs() < 1e-15;
        ok &= pass;
        parts.push(format!("{name}: {:.4} <= {bound:.4}", d.value));
    }
    outcome(ok, parts.join(", "))
}

/// 3. Mass one at every dissociated N, by grid and by coefficients.
fn mass_invariant() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["small-exhaustive", "decay"] {
        let p = preset(name).unwrap();
        let h = build_heights(&p).unwrap();
        let diss = check_dissociation(&p, &h);
        let r = verify(&p, &VerifyOptions { seed: 3, draws: 8, n_omega: 256, n_max: 8 }).unwrap();
        let coef = r.gate_named("mass_coefficient_route").unwrap();
        let grid = r.gate_named("mass_grid_route").unwrap();
        let all_n = (1..=p.stages).all(|n| diss.dissociated_through(n));
        let checked = r.series("mass_deviation_coefficient").unwrap().points.len();
        let worst = r
            .series("mass_deviation_coefficient")
            .unwrap()
            .points
            .iter()
            .chain(&r.series("mass_deviation_grid").unwrap().points)
            .map(|p| p.value)
            .fold(0.0, f64::max);
        let pass = all_n && coef.passed && grid.passed && checked == p.stages && worst <= 1e-9;
        ok &= pass;
        parts.push(format!(
            "{name}: N=1..{} coefficient route, grid route at N<={}, worst |mass-1| {worst:.1e}",
            p.stages,
            r.series("mass_deviation_grid").unwrap().points.len()
        ));
    }
    outcome(ok, parts.join("; "))
}

/// 4. Decay preset: strictly decreasing, I_5 <= 0.60, ratios in [0.80, 0.95].
fn decay() -> Outcome {
    let p = preset("decay").unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for seed in 1..=5u64 {
        let r = decay_experiment(&p, 5, &MonteCarlo::new(2048, sampled(), seed)).unwrap();
        let i: Vec<f64> = r.series("mean_partial_l1").unwrap().points.iter().map(|p| p.value).collect();
        let ratios: Vec<f64> = r.series("step_ratio").unwrap().points.iter().map(|p| p.value).collect();
        let pass = r.gate_named("strictly_decreasing").unwrap().passed
            && i[5] <= 0.60
            && ratios.iter().all(|&x| (0.80..=0.95).contains(&x));
        ok &= pass;
        parts.push(format!(
            "seed {seed}: I5={:.3} ratios [{}]",
            i[5],
            ratios.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(",")
        ));
    }
    outcome(ok, parts.join("; "))
}

/// 5. Fubini agreement, and the 9-case oracle on the small preset.
fn fubini() -> Outcome {
    let small = preset("small-exhaustive").unwrap();
    let grid = 4096u64;
    let rows = vec![common::rows(1, -1, 1), common::rows(1, -1, 1)];
    let h = common::heights(&small.m, &small.t, small.h1);
    let joint_oracle = common::expected_product_l1(&rows, &h, &small.t, grid);
    let product_oracle = common::product_of_expected_l1(&rows, &h, &small.t, grid);
    let r = fubini_check(&small, 2, &MonteCarlo::new(2000, CircleRule::Full(CircleGrid::new(grid).unwrap()), 5), 4)
        .unwrap();
    let lhs = r.estimate("joint").unwrap();
    let rhs = r.estimate("product_of_means").unwrap();
    let small_ok = r.passed()
        && (lhs.value - joint_oracle).abs() <= 3.0 * lhs.stderr
        && (rhs.value - product_oracle).abs() <= 3.0 * rhs.stderr;

    let p = preset("decay").unwrap();
    let d = fubini_check(&p, 5, &MonteCarlo::new(1024, sampled(), 5), 4).unwrap();
    let diff = d.estimate("difference").unwrap();
    outcome(
        small_ok && d.passed(),
        format!(
            "small: joint {:.5}, product {:.5}, oracle {:.5}/{:.5}; decay: diff {:.4} +- {:.4}",
            lhs.value, rhs.value, joint_oracle, product_oracle, diff.value, diff.stderr
        ),
    )
}

/// 6. Every brute-force oracle agrees with the main path.
fn oracles() -> Outcome {
    let started = Instant::now();
    let mut failures = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failures.push(name.to_string());
        }
    };
    let close = |e: Estimate, o: f64| (e.value - o).abs() <= 3.0 * e.stderr + 1e-6;

    // Direct summation.
    let v = eval_stage_polynomial(&ExponentSet { stage: 1, n: vec![0, 7, 15] }, &CircleGrid::new(16).unwrap()).unwrap();
    let o = common::poly_at(&[0, 7, 15], 2, 16);
    check("direct summation", (v.values[2].re - o.0).abs() < 1e-12 && (v.values[2].im - o.1).abs() < 1e-12);

    // Dissociation and coefficient expansion of the density.
    let p3 = ConstructionParams::new(vec![2, 2, 2], vec![1, 1, 1], 8, SpacerSupport::Symmetric).unwrap();
    let h3 = build_heights(&p3).unwrap();
    check("dissociation example", check_dissociation(&p3, &h3).dissociated);
    let oh = common::heights(&p3.m, &p3.t, p3.h1);
    let grid = CircleGrid::new(256).unwrap();
    for seed in 0..8 {
        let omega = sample_omega(&p3, seed, 3).unwrap();
        let polys: Vec<Vec<i64>> = (1..=3).map(|j| common::exponents(oh[j - 1], 1, omega.stage(j))).collect();
        let exps = all_exponents(&p3, &h3, &omega, 3).unwrap();
        for n in 1..=3 {
            let exp = common::density_expansion(&polys[..n]);
            let pp = partial_abs_product(&p3, &h3, &omega, n, &grid).unwrap();
            check("coefficient mass", (exp[&0] - 1.0).abs() < 1e-12 && (exact_mass(&exps[..n]) - 1.0).abs() < 1e-12);
            for c in -20i64..=20 {
                let got = fourier_coefficient(&pp, c, &grid).unwrap();
                check("fourier coefficients", (got.re - exp.get(&c).copied().unwrap_or(0.0)).abs() < 1e-12);
            }
        }
    }

    // Exhaustive omega with fine-grid quadrature.
    let fine = 1u64 << 14;
    let tiny = ConstructionParams::new(vec![2], vec![1], 3, SpacerSupport::Symmetric).unwrap();
    let rows = common::rows(1, -1, 1);
    let mean_abs = rows
        .iter()
        .map(|r| common::circle_mean(fine, |l| common::modulus(common::poly_at(&common::exponents(3, 1, r), l, fine))))
        .sum::<f64>()
        / 3.0;
    let full = |m: u64| CircleRule::Full(CircleGrid::new(m).unwrap());
    let r = estimate_mean_abs(&tiny, 1, &MonteCarlo::new(300, full(4096), 6)).unwrap();
    check("mean-abs m=2", close(r.estimate("mean_abs").unwrap(), mean_abs));

    let delta = common::circle_mean(fine, |l| {
        let ep = common::mean_poly_at(&rows, 3, 1, l, fine);
        rows.iter()
            .map(|r| {
                let z = common::poly_at(&common::exponents(3, 1, r), l, fine);
                (common::modulus(z) - common::modulus(common::sub(z, ep))).abs()
            })
            .sum::<f64>()
            / 3.0
    });
    let r = centered_comparison(&tiny, 1, &MonteCarlo::new(300, full(4096), 6)).unwrap();
    check("centered m=2", close(r.estimate("delta").unwrap(), delta));

    let small = preset("small-exhaustive").unwrap();
    let hs = common::heights(&small.m, &small.t, small.h1);
    let both = vec![rows.clone(), rows.clone()];
    let i2 = common::expected_product_l1(&both, &hs, &small.t, fine);
    let r = decay_experiment(&small, 2, &MonteCarlo::new(400, full(4096), 6)).unwrap();
    let pt = &r.series("mean_partial_l1").unwrap().points[2];
    check("decay I_2", close(Estimate { value: pt.value, stderr: pt.stderr }, i2));

    // Lindeberg at m = 4 and the CLT second moment.
    let lp = preset("lindeberg").unwrap();
    let lrows = common::rows(3, -4, 4);
    let lgrid = 256u64;
    let (mut var, mut ys) = (0.0, Vec::new());
    for l in 0..lgrid {
        let k = common::scale((-4i64..=4).fold((0.0, 0.0), |a, w| common::add(a, common::unit(w, l, lgrid))), 1.0 / 9.0);
        for r in &lrows {
            for (i, &w) in r.iter().enumerate() {
                let c = i as i64 + 1;
                let y = common::sub(common::unit(c * 9 + w, l, lgrid), common::mul(common::unit(c * 9, l, lgrid), k));
                let y2 = (y.0 * y.0 + y.1 * y.1) / 4.0;
                var += y2;
                ys.push(y2);
            }
        }
    }
    let count = (lgrid as usize * lrows.len()) as f64;
    let s2 = var / count;
    let lind = ys.iter().filter(|y| y.sqrt() > 0.1 * s2.sqrt()).sum::<f64>() / count / s2;
    let r = lindeberg_ratio(&lp, 1, 0.1, 40_000, 6, &CircleGrid::new(lgrid).unwrap()).unwrap();
    check("lindeberg m=4", close(r.estimate("lindeberg_ratio").unwrap(), lind));
    let hl = build_heights(&lp).unwrap();
    check("total variance", (StageModel::new(&lp, &hl, 1).unwrap().centered_variance() - s2).abs() < 1e-12);

    let secs = started.elapsed().as_secs_f64();
    outcome(
        failures.is_empty() && secs <= 120.0,
        if failures.is_empty() {
            format!("all oracle comparisons agree, {secs:.1}s")
        } else {
            format!("mismatches: {}, {secs:.1}s", failures.join(", "))
        },
    )
}

/// 7. KS distance of |X_m| to Rayleigh(1/sqrt 2) under the calibrated threshold.
fn clt_distribution() -> Outcome {
    let p = preset("clt").unwrap();
    let r = clt_distribution_test(&p, 1, 100_000, 7, &CircleGrid::new(SAMPLING_GRID_SIZE).unwrap()).unwrap();
    let ks = r.value("ks_distance").unwrap();
    let thr = r.value("ks_threshold").unwrap();
    outcome(
        ks <= thr,
        format!(
            "KS {ks:.5} vs threshold {thr:.5}; per-point standardized KS {:.5}; E|X|^2 {:.4} vs 1 - ||EP||^2 = {:.4}",
            r.value("ks_distance_standardized").unwrap(),
            r.value("second_moment").unwrap(),
            r.value("target_second_moment").unwrap()
        ),
    )
}

fn determinism_suite() -> Vec<ExperimentReport> {
    let small = preset("small-exhaustive").unwrap();
    let decay_p = preset("decay").unwrap();
    let clt = preset("clt").unwrap();
    let bound = preset("bound-t9-sym").unwrap();
    let full = |m: u64| CircleRule::Full(CircleGrid::new(m).unwrap());
    let fine = CircleGrid::new(SAMPLING_GRID_SIZE).unwrap();
    let explicit = GridChoice::explicit(1 << 15, None).unwrap().rule;
    vec![
        decay_experiment(&decay_p, 5, &MonteCarlo::new(128, sampled(), 8)).unwrap(),
        decay_experiment(&small, 2, &MonteCarlo::new(64, full(2048), 8)).unwrap(),
        fubini_check(&small, 2, &MonteCarlo::new(64, full(2048), 8), 4).unwrap(),
        fubini_check(&decay_p, 3, &MonteCarlo::new(64, sampled(), 8), 2).unwrap(),
        estimate_mean_abs(&clt, 1, &MonteCarlo::new(4, full(1 << 17), 8)).unwrap(),
        centered_comparison(&bound, 1, &MonteCarlo::new(4, explicit, 8)).unwrap(),
        clt_distribution_test(&clt, 1, 5000, 8, &fine).unwrap(),
        lindeberg_ladder(&preset("lindeberg").unwrap(), 1, LINDEBERG_LADDER, 0.1, 2000, 8, &fine).unwrap(),
        verify(&small, &VerifyOptions { seed: 8, draws: 2, n_omega: 64, n_max: 4 }).unwrap(),
    ]
    .into_iter()
    .map(|r| r.without_timing())
    .collect()
}

/// 8. Bit-identical reports at 1, 4 and 8 threads.
fn determinism() -> Outcome {
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(determinism_suite)
    };
    let base = run(1);
    let json = |rs: &[ExperimentReport]| rs.iter().map(|r| r.to_json().unwrap()).collect::<Vec<_>>();
    let mut ok = true;
    for threads in [4, 8] {
        let other = run(threads);
        ok &= other == base && json(&other) == json(&base);
    }
    outcome(ok, format!("{} experiments compared at 1/4/8 threads", base.len()))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 CLT mean", clt_mean),
        ("2 centered bound", centered_bound),
        ("3 mass invariant", mass_invariant),
        ("4 decay", decay),
        ("5 Fubini/independence", fubini),
        ("6 oracle equivalence", oracles),
        ("7 distributional CLT", clt_distribution),
        ("8 determinism", determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let started = Instant::now();
        let o = f();
        println!(
            "ACCEPTANCE {} [{name}] ({:.1}s): {}",
            if o.passed { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64(),
            o.detail
        );
        failed += usize::from(!o.passed);
    }
    println!("acceptance: {} of 8 criteria passed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
