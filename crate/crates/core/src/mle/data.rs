use std::collections::BTreeMap;

use crate::error::{domain, Error, Result};

/// Right-censored cell: `count` observations known only to be `>= threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Censor {
    pub threshold: u64,
    pub count: u64,
}

/// Frequency table of non-negative integers with an optional censored cell.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GroupedCounts {
    cells: BTreeMap<u64, u64>,
    censor: Option<Censor>,
}

impl GroupedCounts {
    /// Builds a table from `(value, count)` pairs. Repeated values are merged.
    /// Counts must be positive and the censor threshold must exceed every
    /// explicit value.
    pub fn new(
        cells: impl IntoIterator<Item = (u64, u64)>,
        censor: Option<Censor>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (v, c) in cells {
            if c == 0 {
                return domain(format!("count for value {v} must be positive"));
            }
            let slot = map.entry(v).or_insert(0u64);
            *slot = slot
                .checked_add(c)
                .ok_or_else(|| Error::Domain(format!("count overflow at value {v}")))?;
        }
        if let (Some(cen), Some((&max, _))) = (censor, map.last_key_value()) {
            if cen.threshold <= max {
                return domain(format!(
                    "censor threshold {} must exceed the largest explicit value {max}",
                    cen.threshold
                ));
            }
        }
        Ok(Self { cells: map, censor })
    }

    pub fn from_values(values: &[u64]) -> Self {
        let mut cells = BTreeMap::new();
        for &v in values {
            *cells.entry(v).or_insert(0) += 1;
        }
        Self {
            cells,
            censor: None,
        }
    }

    pub fn cells(&self) -> &BTreeMap<u64, u64> {
        &self.cells
    }

    pub fn censor(&self) -> Option<Censor> {
        self.censor
    }

    /// Explicit counts plus the censored count.
    pub fn total(&self) -> u64 {
        self.cells.values().sum::<u64>() + self.censor.map_or(0, |c| c.count)
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    /// Number of distinct observed cells, counting a non-empty censored cell
    /// as one.
    pub fn n_distinct(&self) -> usize {
        self.cells.len() + usize::from(self.censor.is_some_and(|c| c.count > 0))
    }

    /// Mean and variance with censored observations placed at the threshold.
    pub(crate) fn moments(&self) -> (f64, f64) {
        let n = self.total() as f64;
        if n == 0.0 {
            return (f64::NAN, f64::NAN);
        }
        let pairs = || {
            self.cells
                .iter()
                .map(|(&v, &c)| (v as f64, c as f64))
                .chain(self.censor.map(|c| (c.threshold as f64, c.count as f64)))
        };
        let mean = pairs().map(|(v, c)| v * c).sum::<f64>() / n;
        let var = pairs().map(|(v, c)| c * (v - mean).powi(2)).sum::<f64>() / n;
        (mean, var)
    }

    /// Expands the explicit cells into a sorted vector. The censored cell is
    /// not representable and is dropped.
    pub fn expand(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.cells.values().sum::<u64>() as usize);
        for (&v, &c) in &self.cells {
            out.extend(std::iter::repeat_n(v, c as usize));
        }
        out
    }
}

/// Borrowed view of a sample for likelihood evaluation.
#[derive(Debug, Clone, Copy)]
pub enum Observations<'a> {
    Grouped(&'a GroupedCounts),
    /// One value per observation. Required for continuous data and for
    /// covariate models.
    Raw(&'a [f64]),
}

impl<'a> From<&'a GroupedCounts> for Observations<'a> {
    fn from(g: &'a GroupedCounts) -> Self {
        Observations::Grouped(g)
    }
}

impl<'a> From<&'a [f64]> for Observations<'a> {
    fn from(v: &'a [f64]) -> Self {
        Observations::Raw(v)
    }
}

impl<'a> From<&'a Vec<f64>> for Observations<'a> {
    fn from(v: &'a Vec<f64>) -> Self {
        Observations::Raw(v)
    }
}

impl Observations<'_> {
    pub fn total(&self) -> u64 {
        match self {
            Observations::Grouped(g) => g.total(),
            Observations::Raw(v) => v.len() as u64,
        }
    }

    pub fn n_distinct(&self) -> usize {
        match self {
            Observations::Grouped(g) => g.n_distinct(),
            Observations::Raw(v) => {
                let mut s: Vec<f64> = v.to_vec();
                s.sort_by(f64::total_cmp);
                s.dedup();
                s.len()
            }
        }
    }

    pub(crate) fn moments(&self) -> (f64, f64) {
        match self {
            Observations::Grouped(g) => g.moments(),
            Observations::Raw(v) => {
                let n = v.len() as f64;
                let mean = v.iter().sum::<f64>() / n;
                let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
                (mean, var)
            }
        }
    }
}
