//! Tippett (Dunn-Sidak) combination of repeated p-values:
//! `p_c = 1 - (1 - min p)^q`.

use std::io::Read;

use indexmap::IndexMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CombineInput {
    pvals: Vec<f64>,
}

impl CombineInput {
    pub fn new(pvals: Vec<f64>) -> Result<Self> {
        if pvals.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(i) = pvals.iter().position(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::ValueOutOfRange(i + 1));
        }
        Ok(Self { pvals })
    }

    pub fn pvals(&self) -> &[f64] {
        &self.pvals
    }
}

pub fn tippett_combine(inp: &CombineInput) -> f64 {
    let q = inp.pvals.len() as f64;
    let min = inp.pvals.iter().copied().fold(f64::INFINITY, f64::min);
    if min >= 1.0 {
        return 1.0;
    }
    // 1 - exp(q ln(1 - min)) without cancellation at tiny min
    (-(q * (-min).ln_1p()).exp_m1()).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CombinedGroup {
    pub group: String,
    pub q: usize,
    pub p_combined: f64,
}

/// One combined p-value per group of a grouped CSV, in order of first
/// appearance.
pub fn combine_groups<R: Read>(
    source: R,
    group_col: &str,
    p_col: &str,
) -> Result<Vec<CombinedGroup>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let g = find(group_col)?;
    let pc = find(p_col)?;
    let mut groups: IndexMap<String, Vec<f64>> = IndexMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|_| Error::ParseError(row))?;
        let p: f64 = rec
            .get(pc)
            .and_then(|s| s.parse().ok())
            .filter(|p: &f64| !p.is_nan())
            .ok_or(Error::ParseError(row))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::ValueOutOfRange(row));
        }
        groups
            .entry(rec.get(g).unwrap_or("").to_string())
            .or_default()
            .push(p);
    }
    if groups.is_empty() {
        return Err(Error::EmptyInput);
    }
    groups
        .into_iter()
        .map(|(group, pvals)| {
            let q = pvals.len();
            let p_combined = tippett_combine(&CombineInput::new(pvals)?);
            Ok(CombinedGroup {
                group,
                q,
                p_combined,
            })
        })
        .collect()
}
