use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{BhattacharyyaMatrix, InputDistribution};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    Iid,
    ConstantComposition,
}

impl std::fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EnsembleKind::Iid => "iid",
            EnsembleKind::ConstantComposition => "cc",
        })
    }
}

impl std::str::FromStr for EnsembleKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "iid" => Ok(EnsembleKind::Iid),
            "cc" | "constant_composition" => Ok(EnsembleKind::ConstantComposition),
            other => Err(format!("unknown ensemble '{other}' (expected iid or cc)")),
        }
    }
}

/// One random-code experiment: ensemble, blocklength, codebook size, trial count, seed.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub kind: EnsembleKind,
    pub q: InputDistribution,
    pub n: usize,
    pub m: usize,
    pub trials: usize,
    pub seed: u64,
}

impl EnsembleConfig {
    pub fn new(kind: EnsembleKind, q: InputDistribution, n: usize, m: usize, trials: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig("blocklength must be >= 1".into()));
        }
        if m < 2 {
            return Err(Error::InvalidConfig("need at least 2 codewords".into()));
        }
        if trials == 0 {
            return Err(Error::InvalidConfig("need at least 1 trial".into()));
        }
        if q.len() > u8::MAX as usize + 1 {
            return Err(Error::InvalidConfig("alphabet larger than 256 symbols".into()));
        }
        Ok(EnsembleConfig { kind, q, n, m, trials, seed })
    }

    pub fn alphabet(&self) -> usize {
        self.q.len()
    }

    /// Symbol counts of the constant-composition type class.
    pub fn composition(&self) -> Vec<usize> {
        largest_remainder(&self.q, self.n)
    }
}

/// Rounds `n Q` to integers summing to `n`: floors first, then the leftover
/// units go to the largest fractional parts (lower symbol index on ties).
pub fn largest_remainder(q: &InputDistribution, n: usize) -> Vec<usize> {
    let scaled: Vec<f64> = q.as_slice().iter().map(|&v| v * n as f64).collect();
    let mut counts: Vec<usize> = scaled.iter().map(|v| v.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..q.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = scaled[a] - scaled[a].floor();
        let fb = scaled[b] - scaled[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut left = n.saturating_sub(assigned);
    for &x in order.iter().cycle() {
        if left == 0 {
            break;
        }
        if q[x] > 0.0 {
            counts[x] += 1;
            left -= 1;
        }
    }
    counts
}

/// RNG for one trial: keyed by the master seed, stream selected by the trial index,
/// so trial `t` draws the same numbers whichever worker runs it.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Storage {
    /// Binary codewords, 64 symbols per word, tail bits zero.
    Packed { words: usize, bits: Vec<u64> },
    Symbols(Vec<u8>),
}

/// `M` codewords of length `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codebook {
    n: usize,
    m: usize,
    alphabet: usize,
    storage: Storage,
}

impl Codebook {
    /// Builds a codebook from explicit codewords. Binary alphabets are bit-packed.
    pub fn from_codewords(alphabet: usize, codewords: &[Vec<u8>]) -> Result<Self> {
        let m = codewords.len();
        let n = codewords.first().map_or(0, Vec::len);
        if m == 0 || n == 0 {
            return Err(Error::InvalidConfig("empty codebook".into()));
        }
        for c in codewords {
            if c.len() != n {
                return Err(Error::LengthMismatch(n, c.len()));
            }
            if c.iter().any(|&s| s as usize >= alphabet) {
                return Err(Error::InvalidConfig(format!("symbol outside alphabet of size {alphabet}")));
            }
        }
        let storage = if alphabet == 2 {
            let words = n.div_ceil(64);
            let mut bits = vec![0u64; words * m];
            for (i, c) in codewords.iter().enumerate() {
                for (k, &s) in c.iter().enumerate() {
                    if s == 1 {
                        bits[i * words + k / 64] |= 1 << (k % 64);
                    }
                }
            }
            Storage::Packed { words, bits }
        } else {
            Storage::Symbols(codewords.concat())
        };
        Ok(Codebook { n, m, alphabet, storage })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn is_packed(&self) -> bool {
        matches!(self.storage, Storage::Packed { .. })
    }

    #[inline]
    pub fn symbol(&self, i: usize, k: usize) -> u8 {
        match &self.storage {
            Storage::Packed { words, bits } => ((bits[i * words + k / 64] >> (k % 64)) & 1) as u8,
            Storage::Symbols(s) => s[i * self.n + k],
        }
    }

    pub fn codeword(&self, i: usize) -> Vec<u8> {
        (0..self.n).map(|k| self.symbol(i, k)).collect()
    }

    /// Symbol counts of codeword `i`.
    pub fn composition(&self, i: usize) -> Vec<usize> {
        let mut c = vec![0; self.alphabet];
        match &self.storage {
            Storage::Packed { words, bits } => {
                let ones: usize = bits[i * words..(i + 1) * words].iter().map(|w| w.count_ones() as usize).sum();
                c[0] = self.n - ones;
                c[1] = ones;
            }
            Storage::Symbols(_) => {
                for k in 0..self.n {
                    c[self.symbol(i, k) as usize] += 1;
                }
            }
        }
        c
    }

    /// Number of positions where codewords `i` and `j` differ.
    pub fn hamming(&self, i: usize, j: usize) -> usize {
        match &self.storage {
            Storage::Packed { words, bits } => {
                let a = &bits[i * words..(i + 1) * words];
                let b = &bits[j * words..(j + 1) * words];
                a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones() as usize).sum()
            }
            Storage::Symbols(s) => {
                let a = &s[i * self.n..(i + 1) * self.n];
                let b = &s[j * self.n..(j + 1) * self.n];
                a.iter().zip(b).filter(|(x, y)| x != y).count()
            }
        }
    }

    /// Bhattacharyya exponent of the pair `(i, j)`: `(1/n) sum_k d(x_ik, x_jk)`.
    pub fn pairwise_exponent(&self, i: usize, j: usize, d: &BhattacharyyaMatrix) -> f64 {
        match &self.storage {
            Storage::Packed { .. } => d.get(0, 1) * self.hamming(i, j) as f64 / self.n as f64,
            Storage::Symbols(s) => {
                let a = &s[i * self.n..(i + 1) * self.n];
                let b = &s[j * self.n..(j + 1) * self.n];
                pairwise_sum(a, b, d) / self.n as f64
            }
        }
    }
}

fn pairwise_sum(a: &[u8], b: &[u8], d: &BhattacharyyaMatrix) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| d.get(x as usize, y as usize)).sum()
}

/// Draws codebook number `trial` of the ensemble.
pub fn sample_codebook(config: &EnsembleConfig, trial: u64) -> Codebook {
    let mut rng = trial_rng(config.seed, trial);
    let (n, m, k) = (config.n, config.m, config.alphabet());
    if k == 2 {
        let words = n.div_ceil(64);
        let tail_mask = if n % 64 == 0 { u64::MAX } else { (1u64 << (n % 64)) - 1 };
        let mut bits = vec![0u64; words * m];
        match config.kind {
            EnsembleKind::Iid => {
                let p1 = config.q[1];
                if p1 == 0.5 {
                    for w in bits.iter_mut() {
                        *w = rng.next_u64();
                    }
                } else {
                    for i in 0..m {
                        for pos in 0..n {
                            if rng.random::<f64>() < p1 {
                                bits[i * words + pos / 64] |= 1 << (pos % 64);
                            }
                        }
                    }
                }
            }
            EnsembleKind::ConstantComposition => {
                let ones = config.composition()[1];
                let chosen = ones.min(n - ones);
                let mut perm: Vec<u32> = (0..n as u32).collect();
                for i in 0..m {
                    // partial Fisher-Yates: the first `chosen` slots are a uniform subset
                    for s in 0..chosen {
                        let r = rng.random_range(s..n);
                        perm.swap(s, r);
                    }
                    let row = &mut bits[i * words..(i + 1) * words];
                    if chosen < ones {
                        row.iter_mut().for_each(|w| *w = u64::MAX);
                        for &pos in &perm[..chosen] {
                            row[pos as usize / 64] &= !(1 << (pos % 64));
                        }
                    } else {
                        for &pos in &perm[..chosen] {
                            row[pos as usize / 64] |= 1 << (pos % 64);
                        }
                    }
                }
            }
        }
        for i in 0..m {
            bits[i * words + words - 1] &= tail_mask;
        }
        return Codebook { n, m, alphabet: 2, storage: Storage::Packed { words, bits } };
    }

    let mut syms = vec![0u8; n * m];
    match config.kind {
        EnsembleKind::Iid => {
            let dist = WeightedIndex::new(config.q.as_slice()).expect("validated distribution");
            for s in syms.iter_mut() {
                *s = dist.sample(&mut rng) as u8;
            }
        }
        EnsembleKind::ConstantComposition => {
            let comp = config.composition();
            let base: Vec<u8> = comp
                .iter()
                .enumerate()
                .flat_map(|(x, &c)| std::iter::repeat_n(x as u8, c))
                .collect();
            for i in 0..m {
                let row = &mut syms[i * n..(i + 1) * n];
                row.copy_from_slice(&base);
                row.shuffle(&mut rng);
            }
        }
    }
    Codebook { n, m, alphabet: k, storage: Storage::Symbols(syms) }
}

/// `(1/n) sum_k d(xi_k, xj_k)` for two symbol sequences.
pub fn pairwise_exponent(xi: &[u8], xj: &[u8], d: &BhattacharyyaMatrix) -> Result<f64> {
    if xi.len() != xj.len() {
        return Err(Error::LengthMismatch(xi.len(), xj.len()));
    }
    if xi.is_empty() {
        return Err(Error::LengthMismatch(0, 0));
    }
    Ok(pairwise_sum(xi, xj, d) / xi.len() as f64)
}

/// `V/n`: the smallest pairwise Bhattacharyya exponent over codeword pairs.
pub fn min_pairwise_statistic(cb: &Codebook, d: &BhattacharyyaMatrix) -> f64 {
    if cb.is_packed() {
        let mut min_h = usize::MAX;
        for i in 0..cb.m {
            for j in (i + 1)..cb.m {
                min_h = min_h.min(cb.hamming(i, j));
            }
        }
        return d.get(0, 1) * min_h as f64 / cb.n as f64;
    }
    let mut best = f64::INFINITY;
    for i in 0..cb.m {
        for j in (i + 1)..cb.m {
            best = best.min(cb.pairwise_exponent(i, j, d));
        }
    }
    best
}
