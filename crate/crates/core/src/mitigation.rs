//! Readout-error mitigation by solving B v = e for a tensor-product confusion matrix.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Condition numbers above this are treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// B[actual][correct] = P(read `actual` | prepared `correct`), indices over qubit bits.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfusionMatrix {
    pub dim: usize,
    /// Row-major, row = actual readout.
    pub entries: Vec<f64>,
}

impl ConfusionMatrix {
    pub fn get(&self, actual: usize, correct: usize) -> f64 {
        self.entries[actual * self.dim + correct]
    }

    pub fn identity(dim: usize) -> ConfusionMatrix {
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1.0;
        }
        ConfusionMatrix { dim, entries }
    }

    fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.entries)
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim).map(|a| (0..self.dim).map(|c| self.get(a, c) * v[c]).sum()).collect()
    }

    pub fn condition_number(&self) -> f64 {
        let sv = self.matrix().singular_values();
        let max = sv.max();
        let min = sv.min();
        if min <= 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for a in 0..self.dim {
            let row: Vec<String> = (0..self.dim).map(|c| format!("{:?}", self.get(a, c))).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<ConfusionMatrix> {
        let mut entries = Vec::new();
        let mut rows = 0;
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            for f in line.split(',') {
                let v: f64 =
                    f.trim().parse().map_err(|_| Error::Parse { line: i + 1, msg: format!("bad entry '{f}'") })?;
                entries.push(v);
            }
            rows += 1;
        }
        if entries.len() != rows * rows {
            return Err(Error::Parse { line: rows, msg: "matrix is not square".into() });
        }
        let m = ConfusionMatrix { dim: rows, entries };
        m.check()?;
        Ok(m)
    }

    fn check(&self) -> Result<()> {
        if self.entries.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(Error::InvalidArgument("confusion entries must lie in [0,1]".into()));
        }
        for c in 0..self.dim {
            let s: f64 = (0..self.dim).map(|a| self.get(a, c)).sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!("column {c} sums to {s}")));
            }
        }
        Ok(())
    }
}

/// Kronecker product of the per-qubit matrices [[1-p01, p10], [p01, 1-p10]], where
/// qubit q is bit q of the state index.
pub fn calibration_matrix(flips: &[[f64; 2]]) -> Result<ConfusionMatrix> {
    if flips.iter().flatten().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::InvalidArgument("flip probabilities must lie in [0,1]".into()));
    }
    let dim = 1usize << flips.len();
    let mut entries = vec![0.0; dim * dim];
    for a in 0..dim {
        for c in 0..dim {
            let mut p = 1.0;
            for (q, &[p01, p10]) in flips.iter().enumerate() {
                let (ab, cb) = (a >> q & 1, c >> q & 1);
                p *= match (cb, ab) {
                    (0, 0) => 1.0 - p01,
                    (0, _) => p01,
                    (_, 0) => p10,
                    _ => 1.0 - p10,
                };
            }
            entries[a * dim + c] = p;
        }
    }
    Ok(ConfusionMatrix { dim, entries })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FilterResult {
    /// Clipped and renormalized estimate.
    pub v: Vec<f64>,
    /// Solution of B v = e before clipping.
    pub raw: Vec<f64>,
    pub condition: f64,
}

/// Linear filtering v = B^{-1} e by LU solve. Negative entries are clipped to zero and the
/// vector renormalized; if nothing is clipped the solution is returned untouched.
pub fn apply_filter(b: &ConfusionMatrix, e: &[f64]) -> Result<FilterResult> {
    if e.len() != b.dim {
        return Err(Error::InvalidArgument(format!("vector length {} for a {}-dim matrix", e.len(), b.dim)));
    }
    let sum: f64 = e.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidArgument(format!("distribution sums to {sum}")));
    }
    let condition = b.condition_number();
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(Error::IllConditioned(condition));
    }
    let raw: Vec<f64> = b
        .matrix()
        .lu()
        .solve(&DVector::from_column_slice(e))
        .ok_or(Error::IllConditioned(condition))?
        .iter()
        .copied()
        .collect();
    let v = if raw.iter().any(|&x| x < 0.0) {
        let clipped: Vec<f64> = raw.iter().map(|&x| x.max(0.0)).collect();
        let s: f64 = clipped.iter().sum();
        clipped.iter().map(|x| x / s).collect()
    } else {
        raw.clone()
    };
    Ok(FilterResult { v, raw, condition })
}

pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / 2.0
}
