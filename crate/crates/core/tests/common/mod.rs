//! Brute-force reference implementations used by the integration tests.
//!
//! Nothing here calls into the library's evaluation code: heights, exponents,
//! circle points, spacer enumeration and coefficient expansions are all
//! recomputed from the definitions.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::TAU;

pub type C = (f64, f64);

pub fn heights(m: &[usize], t: &[u64], h1: u64) -> Vec<u64> {
    let mut h = vec![h1];
    for j in 0..m.len() {
        h.push(m[j] as u64 * (h[j] + t[j]));
    }
    h
}

/// `n_k = k (h + t) + w_k` with `n_0 = 0`.
pub fn exponents(h: u64, t: u64, spacers: &[i64]) -> Vec<i64> {
    let mut n = vec![0i64];
    for (i, &w) in spacers.iter().enumerate() {
        n.push((i as i64 + 1) * (h + t) as i64 + w);
    }
    n
}

/// `exp(2 pi i n l / M)` via exact reduction of `n l mod M`.
pub fn unit(n: i64, l: u64, m: u64) -> C {
    let r = ((n as i128).rem_euclid(m as i128) as u128 * l as u128 % m as u128) as f64;
    let a = TAU * r / m as f64;
    (a.cos(), a.sin())
}

pub fn add(a: C, b: C) -> C {
    (a.0 + b.0, a.1 + b.1)
}

pub fn sub(a: C, b: C) -> C {
    (a.0 - b.0, a.1 - b.1)
}

pub fn mul(a: C, b: C) -> C {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

pub fn scale(a: C, s: f64) -> C {
    (a.0 * s, a.1 * s)
}

pub fn modulus(a: C) -> f64 {
    a.0.hypot(a.1)
}

/// `m^{-1/2} sum_k z_l^{n_k}` summed term by term.
pub fn poly_at(n: &[i64], l: u64, m: u64) -> C {
    let s = n.iter().fold((0.0, 0.0), |acc, &e| add(acc, unit(e, l, m)));
    scale(s, 1.0 / (n.len() as f64).sqrt())
}

/// Every spacer row in `[lo, hi]^len`.
pub fn rows(len: usize, lo: i64, hi: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        let mut next = Vec::new();
        for r in &out {
            for w in lo..=hi {
                let mut x = r.clone();
                x.push(w);
                next.push(x);
            }
        }
        out = next;
    }
    out
}

/// Plain mean over a fine grid of `f(l)`.
pub fn circle_mean(m: u64, f: impl Fn(u64) -> f64) -> f64 {
    (0..m).map(f).sum::<f64>() / m as f64
}

/// `E_omega integral prod_j |P_j|` for explicit per-stage row lists (all
/// combinations, equal weight) on an `m`-point grid.
pub fn expected_product_l1(stage_rows: &[Vec<Vec<i64>>], h: &[u64], t: &[u64], m: u64) -> f64 {
    let mut combos: Vec<Vec<usize>> = vec![vec![]];
    for rs in stage_rows {
        combos = combos
            .into_iter()
            .flat_map(|c| {
                (0..rs.len()).map(move |i| {
                    let mut x = c.clone();
                    x.push(i);
                    x
                })
            })
            .collect();
    }
    let total: f64 = combos
        .iter()
        .map(|c| {
            let polys: Vec<Vec<i64>> =
                c.iter().enumerate().map(|(j, &i)| exponents(h[j], t[j], &stage_rows[j][i])).collect();
            circle_mean(m, |l| polys.iter().map(|n| modulus(poly_at(n, l, m))).product())
        })
        .sum();
    total / combos.len() as f64
}

/// `integral prod_j E_omega |P_j|`.
pub fn product_of_expected_l1(stage_rows: &[Vec<Vec<i64>>], h: &[u64], t: &[u64], m: u64) -> f64 {
    circle_mean(m, |l| {
        stage_rows
            .iter()
            .enumerate()
            .map(|(j, rs)| {
                rs.iter().map(|r| modulus(poly_at(&exponents(h[j], t[j], r), l, m))).sum::<f64>() / rs.len() as f64
            })
            .product()
    })
}

/// Brute-force `E_omega P(z_l)` over all rows.
pub fn mean_poly_at(rs: &[Vec<i64>], h: u64, t: u64, l: u64, m: u64) -> C {
    let s = rs.iter().fold((0.0, 0.0), |acc, r| add(acc, poly_at(&exponents(h, t, r), l, m)));
    scale(s, 1.0 / rs.len() as f64)
}

/// Dense coefficient expansion of `prod_j |P_j|^2`: frequency -> coefficient.
pub fn density_expansion(polys: &[Vec<i64>]) -> BTreeMap<i64, f64> {
    let mut acc: BTreeMap<i64, f64> = BTreeMap::from([(0, 1.0)]);
    for n in polys {
        let w = 1.0 / n.len() as f64;
        let mut next = BTreeMap::new();
        for (&f, &c) in &acc {
            for &a in n {
                for &b in n {
                    *next.entry(f + a - b).or_insert(0.0) += c * w;
                }
            }
        }
        acc = next;
    }
    acc
}

/// Kolmogorov-style sample mean and standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}
