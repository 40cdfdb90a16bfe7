//! P-value batches: validation, CSV ingestion and order statistics.

use std::collections::HashSet;
use std::io::Read;

use crate::error::{Error, Result};

/// Tolerance on `|sum(w) - 1|` for per-hypothesis weights.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

/// A validated batch of `m >= 1` p-values with unique labels and optional
/// Bonferroni weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PValueSet {
    values: Vec<f64>,
    labels: Vec<String>,
    weights: Option<Vec<f64>>,
}

impl PValueSet {
    pub fn new(values: Vec<f64>, labels: Vec<String>, weights: Option<Vec<f64>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        if labels.len() != values.len() {
            return Err(Error::LengthMismatch {
                expected: values.len(),
                got: labels.len(),
            });
        }
        for (i, &p) in values.iter().enumerate() {
            if p.is_nan() {
                return Err(Error::ParseError(i + 1));
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::ValueOutOfRange(i + 1));
            }
        }
        let mut seen = HashSet::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if !seen.insert(l.as_str()) {
                return Err(Error::DuplicateLabel(i + 1, l.clone()));
            }
        }
        if let Some(w) = &weights {
            validate_weights(w, values.len())?;
        }
        Ok(Self {
            values,
            labels,
            weights,
        })
    }

    /// Labels default to the 1-based position of each value.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let labels = (1..=values.len()).map(|i| i.to_string()).collect();
        Self::new(values, labels, None)
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        validate_weights(&weights, self.values.len())?;
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// Number of distinct floating values (bitwise after folding -0 into 0).
    pub fn distinct_count(&self) -> usize {
        self.values
            .iter()
            .map(|&p| if p == 0.0 { 0u64 } else { p.to_bits() })
            .collect::<HashSet<_>>()
            .len()
    }

    pub fn order_statistics(&self) -> SortedPValues {
        order_statistics(self)
    }
}

pub(crate) fn validate_weights(w: &[f64], m: usize) -> Result<()> {
    if w.len() != m {
        return Err(Error::WeightLengthMismatch {
            expected: m,
            got: w.len(),
        });
    }
    if let Some(bad) = w.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(Error::InvalidWeights(format!(
            "weight {bad} is negative or not finite"
        )));
    }
    let sum: f64 = crate::stats::compensated_sum(w.iter().copied());
    if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::InvalidWeights(format!(
            "weights sum to {sum}, not 1"
        )));
    }
    Ok(())
}

/// Order statistics `p_(1) <= ... <= p_(m)` and the rank-to-index map.
///
/// Ranks are 0-based here: `sorted[r]` is `p_(r+1)` and came from original
/// index `rank_to_original[r]`. The sentinel `p_(0) = 0` is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedPValues {
    sorted: Vec<f64>,
    rank_to_original: Vec<usize>,
}

impl SortedPValues {
    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn rank_to_original(&self) -> &[usize] {
        &self.rank_to_original
    }

    /// Inverse permutation: `original_to_rank()[i]` is the 0-based rank of
    /// original index `i`.
    pub fn original_to_rank(&self) -> Vec<usize> {
        let mut inv = vec![0; self.rank_to_original.len()];
        for (rank, &orig) in self.rank_to_original.iter().enumerate() {
            inv[orig] = rank;
        }
        inv
    }

    /// Values back in original order.
    pub fn unsort(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.sorted.len()];
        for (rank, &orig) in self.rank_to_original.iter().enumerate() {
            out[orig] = self.sorted[rank];
        }
        out
    }
}

/// Stable sort: tied p-values keep their original relative order.
pub fn order_statistics(ps: &PValueSet) -> SortedPValues {
    let mut idx: Vec<usize> = (0..ps.len()).collect();
    // values are validated non-NaN
    idx.sort_by(|&a, &b| ps.values[a].partial_cmp(&ps.values[b]).unwrap());
    SortedPValues {
        sorted: idx.iter().map(|&i| ps.values[i]).collect(),
        rank_to_original: idx,
    }
}

/// Reads p-values from CSV with a header row.
///
/// Values come from `column`; labels from a `label` column when present
/// (row numbers otherwise); weights from a `weight` column when present.
/// Any invalid row rejects the whole file.
pub fn load_pvalues<R: Read>(source: R, column: &str) -> Result<PValueSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let p_col = find(column).ok_or_else(|| Error::MissingColumn(column.to_string()))?;
    let label_col = find("label");
    let weight_col = find("weight");

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut weights = weight_col.map(|_| Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|_| Error::ParseError(row))?;
        let p = parse_field(&rec, p_col, row)?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::ValueOutOfRange(row));
        }
        values.push(p);
        labels.push(match label_col {
            Some(c) => rec.get(c).unwrap_or("").to_string(),
            None => row.to_string(),
        });
        if let (Some(c), Some(w)) = (weight_col, weights.as_mut()) {
            w.push(parse_field(&rec, c, row)?);
        }
    }
    PValueSet::new(values, labels, weights)
}

fn parse_field(rec: &csv::StringRecord, col: usize, row: usize) -> Result<f64> {
    let v: f64 = rec
        .get(col)
        .ok_or(Error::ParseError(row))?
        .parse()
        .map_err(|_| Error::ParseError(row))?;
    if v.is_nan() {
        return Err(Error::ParseError(row));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_simple_column() {
        let ps = load_pvalues("p\n0.01\n0.5\n".as_bytes(), "p").unwrap();
        assert_eq!(ps.values(), &[0.01, 0.5]);
        assert_eq!(ps.labels(), &["1", "2"]);
        assert!(ps.weights().is_none());
    }

    #[test]
    fn labels_weights_and_scientific_notation() {
        let csv = "label,p,weight\na,1e-5,0.25\nb,0.5,0.75\n";
        let ps = load_pvalues(csv.as_bytes(), "p").unwrap();
        assert_eq!(ps.values(), &[1e-5, 0.5]);
        assert_eq!(ps.labels(), &["a", "b"]);
        assert_eq!(ps.weights().unwrap(), &[0.25, 0.75]);
    }

    #[test]
    fn out_of_range_reports_row() {
        let err = load_pvalues("p\n1.2\n".as_bytes(), "p").unwrap_err();
        assert!(matches!(err, Error::ValueOutOfRange(1)));
        let err = load_pvalues("p\n0.1\n-0.5\n".as_bytes(), "p").unwrap_err();
        assert!(matches!(err, Error::ValueOutOfRange(2)));
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            load_pvalues("p\n0.1\nabc\n".as_bytes(), "p").unwrap_err(),
            Error::ParseError(2)
        ));
        assert!(matches!(
            load_pvalues("p\nNaN\n".as_bytes(), "p").unwrap_err(),
            Error::ParseError(1)
        ));
    }

    #[test]
    fn missing_column_and_empty() {
        assert!(matches!(
            load_pvalues("q\n0.1\n".as_bytes(), "p").unwrap_err(),
            Error::MissingColumn(c) if c == "p"
        ));
        assert!(matches!(
            load_pvalues("p\n".as_bytes(), "p").unwrap_err(),
            Error::EmptyInput
        ));
    }

    #[test]
    fn boundaries_accepted() {
        let ps = load_pvalues("p\n0\n1\n".as_bytes(), "p").unwrap();
        assert_eq!(ps.values(), &[0.0, 1.0]);
    }

    #[test]
    fn duplicate_labels_rejected() {
        let err = load_pvalues("label,p\na,0.1\na,0.2\n".as_bytes(), "p").unwrap_err();
        assert!(matches!(err, Error::DuplicateLabel(2, _)));
    }

    #[test]
    fn bad_weights_rejected() {
        let err = load_pvalues("p,weight\n0.1,0.5\n0.2,0.4\n".as_bytes(), "p").unwrap_err();
        assert!(matches!(err, Error::InvalidWeights(_)));
        let ps = PValueSet::from_values(vec![0.1, 0.2]).unwrap();
        assert!(matches!(
            ps.with_weights(vec![1.0]),
            Err(Error::WeightLengthMismatch {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn stable_order_statistics() {
        let ps = PValueSet::from_values(vec![0.5, 0.01, 0.5]).unwrap();
        let sp = ps.order_statistics();
        assert_eq!(sp.sorted(), &[0.01, 0.5, 0.5]);
        assert_eq!(sp.rank_to_original(), &[1, 0, 2]);
        assert_eq!(sp.original_to_rank(), vec![1, 0, 2]);
        assert_eq!(sp.unsort(), ps.values());
    }

    #[test]
    fn sorted_input_gives_identity() {
        let ps = PValueSet::from_values(vec![0.0, 0.1, 0.1, 0.7, 1.0]).unwrap();
        assert_eq!(ps.order_statistics().rank_to_original(), &[0, 1, 2, 3, 4]);
    }

    #[test]
    fn distinct_count_folds_ties() {
        let ps = PValueSet::from_values(vec![0.5, 0.01, 0.5, 0.0]).unwrap();
        assert_eq!(ps.distinct_count(), 3);
    }
}
