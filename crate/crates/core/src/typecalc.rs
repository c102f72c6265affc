//! Method-of-types helpers: joint distributions over input pairs, empirical
//! joint types, enumeration of all joint types of a blocklength, and a
//! brute-force simplex minimizer used to cross-check the KKT solver in
//! [`crate::exponents`].

use crate::channel::InputDistribution;
use crate::error::{Error, Result};

/// Tolerance on the total mass of a [`JointDistribution`].
pub const JOINT_SUM_TOLERANCE: f64 = 1e-12;

/// Probability matrix over `X x X`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    size: usize,
    p: Vec<f64>,
}

impl JointDistribution {
    pub fn new(size: usize, p: Vec<f64>) -> Result<Self> {
        if p.len() != size * size || size == 0 {
            return Err(Error::InvalidDistribution(format!(
                "{} entries for a {size}x{size} joint distribution",
                p.len()
            )));
        }
        if let Some(v) = p.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidDistribution(format!("entry {v} is negative or not finite")));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > JOINT_SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("entries sum to {sum}")));
        }
        Ok(JointDistribution { size, p })
    }

    /// Normalizes nonnegative weights. Used for the tilted optimizers.
    pub(crate) fn from_weights(size: usize, mut w: Vec<f64>) -> Self {
        let z: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= z);
        JointDistribution { size, p: w }
    }

    /// The product distribution `Q1 x Q2`.
    pub fn product(q1: &InputDistribution, q2: &InputDistribution) -> Self {
        let size = q1.len();
        let mut p = Vec::with_capacity(size * size);
        for a in 0..size {
            for b in 0..size {
                p.push(q1[a] * q2[b]);
            }
        }
        JointDistribution { size, p }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.p[a * self.size + b]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    pub fn row_marginal(&self) -> Vec<f64> {
        (0..self.size).map(|a| (0..self.size).map(|b| self.get(a, b)).sum()).collect()
    }

    pub fn col_marginal(&self) -> Vec<f64> {
        (0..self.size).map(|b| (0..self.size).map(|a| self.get(a, b)).sum()).collect()
    }
}

/// `D(P || Q1 x Q2)` in nats, with `0 ln 0 = 0`.
pub fn kl_divergence(p: &JointDistribution, q1: &InputDistribution, q2: &InputDistribution) -> Result<f64> {
    if q1.len() != p.size || q2.len() != p.size {
        return Err(Error::DimensionMismatch { expected: p.size, got: q1.len().min(q2.len()) });
    }
    let mut d = 0.0;
    for a in 0..p.size {
        for b in 0..p.size {
            let v = p.get(a, b);
            if v > 0.0 {
                let r = q1[a] * q2[b];
                if r <= 0.0 {
                    return Err(Error::SupportViolation(a, b));
                }
                d += v * (v / r).ln();
            }
        }
    }
    Ok(d.max(0.0))
}

/// Integer joint type of two length-`n` sequences.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct JointType {
    size: usize,
    counts: Vec<u64>,
    n: u64,
}

impl JointType {
    pub fn from_counts(size: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != size * size {
            return Err(Error::InvalidDistribution("count matrix has wrong shape".into()));
        }
        let n = counts.iter().sum();
        Ok(JointType { size, counts, n })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn count(&self, a: usize, b: usize) -> u64 {
        self.counts[a * self.size + b]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn to_distribution(&self) -> JointDistribution {
        let n = self.n as f64;
        JointDistribution { size: self.size, p: self.counts.iter().map(|&c| c as f64 / n).collect() }
    }
}

/// Counts of symbol pairs along two sequences over an alphabet of `size` symbols.
pub fn empirical_joint_type(xi: &[u8], xj: &[u8], size: usize) -> Result<JointType> {
    if xi.len() != xj.len() {
        return Err(Error::LengthMismatch(xi.len(), xj.len()));
    }
    if xi.is_empty() {
        return Err(Error::LengthMismatch(0, 0));
    }
    let mut counts = vec![0u64; size * size];
    for (&a, &b) in xi.iter().zip(xj) {
        let (a, b) = (a as usize, b as usize);
        if a >= size || b >= size {
            return Err(Error::InvalidDistribution(format!("symbol outside alphabet of size {size}")));
        }
        counts[a * size + b] += 1;
    }
    Ok(JointType { size, counts, n: xi.len() as u64 })
}

/// Upper bound on the number of joint types [`joint_type_enumerate`] will produce.
pub const ENUMERATION_LIMIT: u128 = 10_000_000;

/// Number of joint types of blocklength `n` over `size x size` cells: `C(n + k - 1, k - 1)`.
pub fn joint_type_count(n: u64, size: usize) -> u128 {
    let cells = (size * size) as u128;
    if cells == 0 {
        return 0;
    }
    // C(n + cells - 1, cells - 1), exact in u128 for the sizes we admit
    let mut c: u128 = 1;
    for i in 1..cells {
        c = c * (n as u128 + i) / i;
        if c > u64::MAX as u128 {
            return u128::MAX;
        }
    }
    c
}

/// Every integer `size x size` matrix with nonnegative entries summing to `n`.
pub fn joint_type_enumerate(n: u64, size: usize) -> Result<Vec<JointType>> {
    let total = joint_type_count(n, size);
    if total > ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge(total));
    }
    let cells = size * size;
    let mut out = Vec::with_capacity(total as usize);
    let mut cur = vec![0u64; cells];
    fn rec(cell: usize, left: u64, cur: &mut Vec<u64>, size: usize, n: u64, out: &mut Vec<JointType>) {
        if cell + 1 == cur.len() {
            cur[cell] = left;
            out.push(JointType { size, counts: cur.clone(), n });
            return;
        }
        for v in 0..=left {
            cur[cell] = v;
            rec(cell + 1, left - v, cur, size, n, out);
        }
    }
    rec(0, n, &mut cur, size, n, &mut out);
    Ok(out)
}

/// Result of [`simplex_grid_minimize`].
#[derive(Debug, Clone)]
pub struct GridMinimum {
    pub value: f64,
    pub argmin: JointDistribution,
    pub evaluated: usize,
}

/// Brute-force minimum of `objective` over the binary joint simplex restricted to
/// `D(P || Q x Q) <= radius`.
///
/// Scans the lattice `{P : P(a,b) = k_ab * step}`, then rescans a `step/10` lattice
/// in a one-step box around the incumbent. Ties go to the first point in
/// lexicographic `(p00, p01, p10)` order.
pub fn simplex_grid_minimize<F>(objective: F, radius: f64, q: &InputDistribution, step: f64) -> Result<GridMinimum>
where
    F: Fn(&JointDistribution) -> f64,
{
    if q.len() != 2 {
        return Err(Error::OracleDomain(format!("alphabet size {}", q.len())));
    }
    if !(1e-3..=1e-1).contains(&step) {
        return Err(Error::OracleDomain(format!("step {step}")));
    }
    let qq = [q[0] * q[0], q[0] * q[1], q[1] * q[0], q[1] * q[1]];
    let divergence = |p: &[f64; 4]| -> f64 {
        let mut d = 0.0;
        for (v, r) in p.iter().zip(qq.iter()) {
            if *v > 0.0 {
                if *r <= 0.0 {
                    return f64::INFINITY;
                }
                d += v * (v / r).ln();
            }
        }
        d
    };
    let mut best: Option<(f64, [f64; 4])> = None;
    let mut evaluated = 0usize;
    let mut visit = |p: [f64; 4], best: &mut Option<(f64, [f64; 4])>| {
        if p.iter().any(|v| *v < 0.0) || divergence(&p) > radius {
            return;
        }
        evaluated += 1;
        let jd = JointDistribution { size: 2, p: p.to_vec() };
        let v = objective(&jd);
        if best.is_none_or(|(b, _)| v < b) {
            *best = Some((v, p));
        }
    };

    let k = (1.0 / step).round() as i64;
    let h = 1.0 / k as f64;
    for a in 0..=k {
        for b in 0..=(k - a) {
            for c in 0..=(k - a - b) {
                let d = k - a - b - c;
                visit([a as f64 * h, b as f64 * h, c as f64 * h, d as f64 * h], &mut best);
            }
        }
    }
    let (_, center) = best.ok_or(Error::EmptyFeasibleSet)?;

    let fine = h / 10.0;
    for i in -10..=10 {
        for j in -10..=10 {
            for l in -10..=10 {
                let a = center[0] + i as f64 * fine;
                let b = center[1] + j as f64 * fine;
                let c = center[2] + l as f64 * fine;
                let d = 1.0 - a - b - c;
                // snap rounding noise at the simplex faces
                let p = [a, b, c, d].map(|v| if v.abs() < 1e-15 { 0.0 } else { v });
                visit(p, &mut best);
            }
        }
    }
    let (value, p) = best.expect("incumbent exists");
    Ok(GridMinimum { value, argmin: JointDistribution::from_weights(2, p.to_vec()), evaluated })
}
