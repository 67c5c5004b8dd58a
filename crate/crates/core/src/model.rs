//! Weight sets, alias tables and the mass-conservation validity check.
//!
//! Item indices are 0-based throughout the library. File formats and the CLI
//! present them 1-based.

use crate::error::{Error, Result};
use crate::sum::compensated_sum;

/// Default per-item relative tolerance for [`validate_table`].
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Slack allowed above `W/N` for a row threshold, relative to `W/N`.
pub const THRESHOLD_SLACK: f64 = 1e-9;

/// Validated input weights together with their compensated total.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    weights: Vec<f64>,
    total: f64,
}

impl WeightSet {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidWeight(i));
        }
        let total = compensated_sum(&weights);
        Ok(Self { weights, total })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    /// Mass of one bucket, `W/N`.
    pub fn avg(&self) -> f64 {
        self.total / self.weights.len() as f64
    }

    /// Sampling probability of each item.
    pub fn probabilities(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w / self.total).collect()
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }
}

/// Shorthand for [`WeightSet::new`].
pub fn make_weight_set(weights: Vec<f64>) -> Result<WeightSet> {
    WeightSet::new(weights)
}

/// An item reference paired with its (possibly residual) weight.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Item {
    pub index: usize,
    pub weight: f64,
}

/// One bucket: the threshold mass kept by the row's own item, and the alias
/// that receives the rest of the bucket.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Row {
    pub weight: f64,
    pub alias: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AliasTable {
    rows: Vec<Row>,
    total: f64,
}

impl AliasTable {
    pub fn from_rows(rows: Vec<Row>, total: f64) -> Self {
        Self { rows, total }
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn rows_mut(&mut self) -> &mut [Row] {
        &mut self.rows
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn avg(&self) -> f64 {
        self.total / self.rows.len() as f64
    }

    /// Resolves a uniform draw `u` in `[0, 1)` to an item.
    #[inline]
    pub fn resolve(&self, u: f64) -> usize {
        self.resolve_with_avg(u, self.avg())
    }

    #[inline]
    pub(crate) fn resolve_with_avg(&self, u: f64, avg: f64) -> usize {
        let x = u * self.rows.len() as f64;
        let k = (x as usize).min(self.rows.len() - 1);
        let row = self.rows[k];
        if (x - k as f64) * avg < row.weight {
            k
        } else {
            row.alias
        }
    }

    /// Mass each item receives under this table's sampling rule.
    pub fn item_masses(&self) -> Vec<f64> {
        let avg = self.avg();
        let mut mass = vec![0.0; self.rows.len()];
        for (i, row) in self.rows.iter().enumerate() {
            let own = row.weight.clamp(0.0, avg);
            mass[i] += own;
            if row.alias < mass.len() {
                mass[row.alias] += avg - own;
            }
        }
        mass
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub ok: bool,
    /// Item with the largest relative mass error.
    pub worst_item: usize,
    pub worst_error: f64,
    /// Rows whose threshold or alias breaks the row invariants.
    pub bad_rows: usize,
    pub first_bad_row: Option<usize>,
}

/// Checks that `table` reproduces the distribution of `weights`.
///
/// The mass an item receives is its own thresholds plus `W/N - T^w_j` from
/// every row `j` that aliases it (a self-aliased row gives its whole bucket
/// to its own item). The error for item `i` is `|mass_i - w_i| / w_i`.
pub fn validate_table(table: &AliasTable, weights: &WeightSet, tol: f64) -> Result<ValidationReport> {
    if table.n() != weights.n() {
        return Err(Error::SizeMismatch {
            table: table.n(),
            weights: weights.n(),
        });
    }
    let n = table.n();
    let avg = weights.avg();
    let slack = THRESHOLD_SLACK * avg;

    let mut bad_rows = 0;
    let mut first_bad_row = None;
    for (i, row) in table.rows().iter().enumerate() {
        let valid = row.weight.is_finite()
            && row.weight >= 0.0
            && row.weight <= avg + slack
            && row.alias < n;
        if !valid {
            bad_rows += 1;
            first_bad_row.get_or_insert(i);
        }
    }

    let masses = table.item_masses();
    let mut worst_item = 0;
    let mut worst_error = 0.0;
    for (i, (&m, &w)) in masses.iter().zip(weights.weights()).enumerate() {
        let err = (m - w).abs() / w;
        if err > worst_error || err.is_nan() {
            worst_error = err;
            worst_item = i;
        }
    }
    let total_ok = (table.total() - weights.total()).abs() <= tol * weights.total();

    Ok(ValidationReport {
        ok: bad_rows == 0 && worst_error <= tol && total_ok,
        worst_item,
        worst_error,
        bad_rows,
        first_bad_row,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(tw: &[f64], alias: &[usize], total: f64) -> AliasTable {
        let rows = tw
            .iter()
            .zip(alias)
            .map(|(&weight, &alias)| Row { weight, alias })
            .collect();
        AliasTable::from_rows(rows, total)
    }

    #[test]
    fn weight_set_single() {
        let w = make_weight_set(vec![1.0]).unwrap();
        assert_eq!(w.n(), 1);
        assert_eq!(w.total(), 1.0);
    }

    #[test]
    fn weight_set_sum() {
        let w = make_weight_set(vec![3.0, 1.0, 2.0, 2.0]).unwrap();
        assert_eq!(w.n(), 4);
        assert_eq!(w.total(), 8.0);
        assert_eq!(w.avg(), 2.0);
    }

    #[test]
    fn weight_set_rejects_bad_input() {
        assert!(matches!(make_weight_set(vec![]), Err(Error::EmptyInput)));
        assert!(matches!(make_weight_set(vec![1.0, 0.0, 2.0]), Err(Error::InvalidWeight(1))));
        assert!(matches!(make_weight_set(vec![-1.0]), Err(Error::InvalidWeight(0))));
        assert!(matches!(make_weight_set(vec![1.0, f64::NAN]), Err(Error::InvalidWeight(1))));
        assert!(matches!(make_weight_set(vec![f64::INFINITY]), Err(Error::InvalidWeight(0))));
    }

    #[test]
    fn weight_set_total_is_compensated() {
        let mut ws = vec![1e16];
        ws.extend(std::iter::repeat(1.0).take(1000));
        let w = make_weight_set(ws).unwrap();
        assert_eq!(w.total(), 1e16 + 1000.0);
    }

    #[test]
    fn validates_hand_built_table() {
        let w = make_weight_set(vec![3.0, 1.0, 2.0, 2.0]).unwrap();
        let t = table(&[2.0, 1.0, 2.0, 2.0], &[0, 0, 2, 3], 8.0);
        let r = validate_table(&t, &w, 1e-9).unwrap();
        assert!(r.ok, "{r:?}");
        assert_eq!(r.worst_error, 0.0);
    }

    #[test]
    fn validates_single_row() {
        let w = make_weight_set(vec![1.0]).unwrap();
        let t = table(&[1.0], &[0], 1.0);
        assert!(validate_table(&t, &w, 1e-9).unwrap().ok);
    }

    #[test]
    fn rejects_wrong_masses() {
        // Every item gets 2/8: item 0 is short by 1/3 of its weight, item 1
        // is over by 100% of its weight.
        let w = make_weight_set(vec![3.0, 1.0, 2.0, 2.0]).unwrap();
        let t = table(&[2.0, 2.0, 2.0, 2.0], &[0, 1, 2, 3], 8.0);
        let r = validate_table(&t, &w, 1e-9).unwrap();
        assert!(!r.ok);
        assert_eq!(r.worst_item, 1);
        assert!((r.worst_error - 1.0).abs() < 1e-15);
        let masses = t.item_masses();
        assert!(((masses[0] - 3.0).abs() / 3.0 - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_rows() {
        let w = make_weight_set(vec![3.0, 1.0, 2.0, 2.0]).unwrap();
        let t = table(&[2.0, 1.0, 2.0, 2.0], &[0, 9, 2, 3], 8.0);
        let r = validate_table(&t, &w, 1e-9).unwrap();
        assert!(!r.ok);
        assert_eq!(r.first_bad_row, Some(1));

        let t = table(&[2.1, 1.0, 2.0, 2.0], &[0, 0, 2, 3], 8.0);
        assert!(!validate_table(&t, &w, 1e-9).unwrap().ok);
    }

    #[test]
    fn size_mismatch() {
        let w = make_weight_set(vec![1.0, 1.0]).unwrap();
        let t = table(&[1.0], &[0], 1.0);
        assert!(matches!(validate_table(&t, &w, 1e-9), Err(Error::SizeMismatch { .. })));
    }

    #[test]
    fn resolve_examples() {
        let t = table(&[2.0, 1.0, 2.0, 2.0], &[0, 0, 2, 3], 8.0);
        // u*N = 1.6: row 1, frac 0.6, 1.2 >= 1 -> alias item 0
        assert_eq!(t.resolve(0.4), 0);
        // u*N = 1.2: row 1, frac 0.2, 0.4 < 1 -> item 1
        assert_eq!(t.resolve(0.3), 1);
        let single = table(&[5.0], &[0], 5.0);
        assert_eq!(single.resolve(0.0), 0);
        assert_eq!(single.resolve(0.999_999), 0);
    }
}
