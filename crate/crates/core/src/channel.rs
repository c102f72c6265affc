//! Discrete memoryless channels and their single-letter quantities.
//!
//! Everything here works in nats. A [`Channel`] is an immutable row-stochastic
//! matrix `W(y|x)`; it is never renormalized on construction, so a row that is
//! off by more than [`ROW_SUM_TOLERANCE`] is an error rather than a silent fix.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest accepted deviation of a row sum (or distribution sum) from 1.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// A discrete memoryless channel with finite input and output alphabets.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    inputs: usize,
    outputs: usize,
    // row-major, inputs x outputs
    w: Vec<f64>,
}

impl Channel {
    /// Validates a raw transition matrix. Rows are indexed by input symbol.
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let inputs = rows.len();
        let outputs = rows.first().map_or(0, Vec::len);
        for (row, r) in rows.iter().enumerate() {
            if r.len() != outputs {
                return Err(Error::Ragged { row, len: r.len(), expected: outputs });
            }
        }
        if inputs < 2 || outputs < 2 {
            return Err(Error::AlphabetTooSmall { inputs, outputs });
        }
        let mut w = Vec::with_capacity(inputs * outputs);
        for (row, r) in rows.iter().enumerate() {
            for (col, &value) in r.iter().enumerate() {
                if !(value.is_finite() && value >= 0.0) {
                    return Err(Error::NegativeEntry { row, col, value });
                }
            }
            if r.iter().any(|&v| v > 1.0) {
                return Err(Error::NonStochasticRow { row, sum: r.iter().sum() });
            }
            let sum: f64 = r.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::NonStochasticRow { row, sum });
            }
            w.extend_from_slice(r);
        }
        Ok(Channel { inputs, outputs, w })
    }

    /// Binary symmetric channel with crossover probability `p`, `0 < p < 1/2`.
    pub fn bsc(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 0.5) {
            return Err(Error::DegenerateChannel(p));
        }
        Channel::new(&[vec![1.0 - p, p], vec![p, 1.0 - p]])
    }

    pub fn input_size(&self) -> usize {
        self.inputs
    }

    pub fn output_size(&self) -> usize {
        self.outputs
    }

    /// Transition probability `W(y|x)`.
    #[inline]
    pub fn w(&self, x: usize, y: usize) -> f64 {
        self.w[x * self.outputs + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.w[x * self.outputs..(x + 1) * self.outputs]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.inputs).map(|x| self.row(x).to_vec()).collect()
    }

    /// Crossover probability if this is a binary symmetric channel.
    pub fn as_bsc(&self) -> Option<f64> {
        if self.inputs == 2
            && self.outputs == 2
            && self.w(0, 1) == self.w(1, 0)
            && self.w(0, 0) == self.w(1, 1)
        {
            Some(self.w(0, 1))
        } else {
            None
        }
    }

    pub(crate) fn check_dist(&self, q: &InputDistribution) -> Result<()> {
        if q.len() != self.inputs {
            return Err(Error::DimensionMismatch { expected: self.inputs, got: q.len() });
        }
        Ok(())
    }
}

/// A probability vector over the channel input alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct InputDistribution {
    q: Vec<f64>,
}

impl InputDistribution {
    pub fn new(q: Vec<f64>) -> Result<Self> {
        if q.is_empty() {
            return Err(Error::InvalidDistribution("empty".into()));
        }
        if let Some(v) = q.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidDistribution(format!("entry {v} is negative or not finite")));
        }
        let sum: f64 = q.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("entries sum to {sum}")));
        }
        Ok(InputDistribution { q })
    }

    pub fn uniform(size: usize) -> Self {
        InputDistribution { q: vec![1.0 / size as f64; size] }
    }

    /// Point mass on `symbol`.
    pub fn point(size: usize, symbol: usize) -> Self {
        let mut q = vec![0.0; size];
        q[symbol] = 1.0;
        InputDistribution { q }
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.q
    }
}

impl std::ops::Index<usize> for InputDistribution {
    type Output = f64;
    fn index(&self, x: usize) -> &f64 {
        &self.q[x]
    }
}

/// Pairwise Bhattacharyya distances `d(x,x') = -ln sum_y sqrt(W(y|x) W(y|x'))`.
#[derive(Debug, Clone, PartialEq)]
pub struct BhattacharyyaMatrix {
    size: usize,
    d: Vec<f64>,
    d_max: f64,
}

impl BhattacharyyaMatrix {
    pub fn new(ch: &Channel) -> Result<Self> {
        let k = ch.input_size();
        let mut d = vec![0.0; k * k];
        let mut d_max = 0.0f64;
        for x in 0..k {
            for x2 in (x + 1)..k {
                let overlap: f64 = (0..ch.output_size())
                    .map(|y| (ch.w(x, y) * ch.w(x2, y)).sqrt())
                    .sum();
                if overlap <= 0.0 {
                    return Err(Error::InfiniteDistance(x, x2));
                }
                // identical rows can give a sum a hair above 1
                let dist = (-overlap.ln()).max(0.0);
                d[x * k + x2] = dist;
                d[x2 * k + x] = dist;
                d_max = d_max.max(dist);
            }
        }
        Ok(BhattacharyyaMatrix { size: k, d, d_max })
    }

    /// Builds a matrix from explicit distances; used by tests and the grid oracle.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        let mut d = Vec::with_capacity(k * k);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != k {
                return Err(Error::Ragged { row: i, len: r.len(), expected: k });
            }
            d.extend_from_slice(r);
        }
        let mut d_max = 0.0f64;
        for i in 0..k {
            if d[i * k + i] != 0.0 {
                return Err(Error::InvalidDistribution(format!("nonzero diagonal at {i}")));
            }
            for j in 0..k {
                let v = d[i * k + j];
                if !(v.is_finite() && v >= 0.0) || v != d[j * k + i] {
                    return Err(Error::InvalidDistribution(format!("bad distance at ({i}, {j})")));
                }
                d_max = d_max.max(v);
            }
        }
        Ok(BhattacharyyaMatrix { size: k, d, d_max })
    }

    #[inline]
    pub fn get(&self, x: usize, x2: usize) -> f64 {
        self.d[x * self.size + x2]
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Largest pairwise distance.
    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    /// `sum_{x,x'} Q(x) Q(x') d(x,x')`: the zero-rate expurgated exponent.
    pub fn mean_distance(&self, q: &InputDistribution) -> f64 {
        let mut s = 0.0;
        for x in 0..self.size {
            for x2 in 0..self.size {
                s += q[x] * q[x2] * self.get(x, x2);
            }
        }
        s
    }
}

pub fn bhattacharyya_matrix(ch: &Channel) -> Result<BhattacharyyaMatrix> {
    BhattacharyyaMatrix::new(ch)
}

/// Mutual information `I(Q, W)` in nats.
pub fn mutual_information(ch: &Channel, q: &InputDistribution) -> Result<f64> {
    ch.check_dist(q)?;
    let mut total = 0.0;
    for y in 0..ch.output_size() {
        let py: f64 = (0..ch.input_size()).map(|x| q[x] * ch.w(x, y)).sum();
        for x in 0..ch.input_size() {
            let w = ch.w(x, y);
            if q[x] > 0.0 && w > 0.0 {
                total += q[x] * w * (w / py).ln();
            }
        }
    }
    Ok(total.max(0.0))
}

/// Cutoff rate `R0(Q) = -ln sum_y (sum_x Q(x) sqrt(W(y|x)))^2`.
pub fn cutoff_rate(ch: &Channel, q: &InputDistribution) -> Result<f64> {
    ch.check_dist(q)?;
    let s: f64 = (0..ch.output_size())
        .map(|y| {
            let a: f64 = (0..ch.input_size()).map(|x| q[x] * ch.w(x, y).sqrt()).sum();
            a * a
        })
        .sum();
    Ok(-s.ln())
}

/// On-disk form: `{"W": [[...], ...], "Q": [...]}` with `Q` optional.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelFile {
    #[serde(rename = "W")]
    pub w: Vec<Vec<f64>>,
    #[serde(rename = "Q", default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<f64>>,
}

impl ChannelFile {
    pub fn parse(text: &str) -> std::result::Result<(Channel, Option<InputDistribution>), String> {
        let file: ChannelFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let ch = Channel::new(&file.w).map_err(|e| e.to_string())?;
        let q = match file.q {
            Some(q) => {
                let q = InputDistribution::new(q).map_err(|e| e.to_string())?;
                ch.check_dist(&q).map_err(|e| e.to_string())?;
                Some(q)
            }
            None => None,
        };
        Ok((ch, q))
    }

    pub fn load(path: &Path) -> std::result::Result<(Channel, Option<InputDistribution>), String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}
