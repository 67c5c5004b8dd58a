#![allow(dead_code)]

use alias_core::gen::{gen_power_law, gen_uniform};
use alias_core::{AliasTable, RngStream, WeightSet};
use rand::Rng;

/// Textbook sweep written independently of the library: items are visited
/// through a donation ledger. Returns `(threshold, alias)` per row.
pub fn reference_vose(ws: &[f64], avg: f64) -> Vec<(f64, usize)> {
    let n = ws.len();
    let light: Vec<usize> = (0..n).filter(|&i| ws[i] <= avg).collect();
    let heavy: Vec<usize> = (0..n).filter(|&i| ws[i] > avg).collect();
    let mut out = vec![(f64::NAN, usize::MAX); n];
    let mut left = ws.to_vec();
    let mut li = 0;
    let mut hj = 0;
    for _ in 0..n {
        let heavy_now = heavy.get(hj).copied();
        let light_next = light.get(li).copied();
        match (light_next, heavy_now) {
            (Some(l), Some(h)) if left[h] > avg => {
                out[l] = (ws[l], h);
                left[h] = (left[h] + ws[l]) - avg;
                li += 1;
            }
            (Some(l), None) => {
                out[l] = (ws[l], l);
                li += 1;
            }
            (_, Some(h)) => {
                let next = heavy.get(hj + 1).copied();
                let alias = match next {
                    Some(x) if left[h] <= avg => x,
                    _ => h,
                };
                out[h] = (left[h], alias);
                if let Some(x) = next {
                    left[x] = (left[h] + ws[x]) - avg;
                }
                hj += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    out
}

/// Probability of each item under a table, from first principles: row `i`
/// is hit with probability `1/N`, keeps its own item with probability
/// `min(T_i, W/N) / (W/N)`.
pub fn table_probabilities(t: &AliasTable) -> Vec<f64> {
    let n = t.n();
    let avg = t.total() / n as f64;
    let mut p = vec![0.0; n];
    for (i, r) in t.rows().iter().enumerate() {
        let keep = (r.weight / avg).clamp(0.0, 1.0);
        p[i] += keep / n as f64;
        p[r.alias] += (1.0 - keep) / n as f64;
    }
    p
}

pub fn log_uniform(rng: &mut RngStream, lo: f64, hi: f64) -> usize {
    let x = (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp();
    (x.floor() as usize).max(lo as usize)
}

#[derive(Debug, Clone, Copy)]
pub enum Kind {
    Uniform,
    PowerLaw(f64),
}

/// Random instance: log-uniform `n` in `[1, max_n]`, uniform or power-law
/// weights (alternating by `index`).
pub fn instance(seed: u64, index: u64, max_n: usize) -> (WeightSet, Kind) {
    let mut r = RngStream::new(seed, index);
    let n = log_uniform(&mut r, 1.0, max_n as f64 + 1.0).min(max_n);
    if index % 2 == 0 {
        (gen_uniform(n, &mut r), Kind::Uniform)
    } else {
        let alpha = r.random_range(0.0..2.0);
        (gen_power_law(n, alpha, &mut r), Kind::PowerLaw(alpha))
    }
}

pub fn rows_of(t: &AliasTable) -> Vec<(f64, usize)> {
    t.rows().iter().map(|r| (r.weight, r.alias)).collect()
}

/// Aliases equal and thresholds within `tol` absolute; returns the first
/// mismatching row.
pub fn compare_rows(a: &AliasTable, b: &AliasTable, tol: f64) -> Option<usize> {
    if a.n() != b.n() {
        return Some(0);
    }
    a.rows()
        .iter()
        .zip(b.rows())
        .position(|(x, y)| x.alias != y.alias || (x.weight - y.weight).abs() > tol)
}
