//! Exact maximum-likelihood error probability and its union / De Caen bounds,
//! by enumerating every output sequence. Only for tiny instances.
//!
//! A pairwise event `x_i -> x_j` is `W^n(y|x_j) >= W^n(y|x_i)`: ties count as errors.

use rayon::prelude::*;

use crate::channel::Channel;
use crate::ensemble::codebook::{sample_codebook, Codebook, EnsembleConfig};
use crate::error::{Error, Result};

/// Largest number of output sequences an exhaustive evaluation may visit.
pub const EXHAUSTIVE_LIMIT: f64 = 2e7;

const TIE_TOLERANCE: f64 = 1e-12;

/// All three quantities from one pass over the output space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExhaustiveReport {
    pub exact: f64,
    pub union: f64,
    pub de_caen: f64,
}

fn check_size(cb: &Codebook, ch: &Channel) -> Result<()> {
    if cb.alphabet() != ch.input_size() {
        return Err(Error::DimensionMismatch { expected: ch.input_size(), got: cb.alphabet() });
    }
    let outputs = (ch.output_size() as f64).powi(cb.n() as i32);
    if outputs > EXHAUSTIVE_LIMIT {
        return Err(Error::InstanceTooLarge(outputs));
    }
    Ok(())
}

/// Likelihoods are accumulated as integer counts per distinct value of
/// `ln W(y|x)`, so codewords with equal counts get bit-identical
/// log-likelihoods and ties are exact.
struct LikelihoodClasses {
    logs: Vec<f64>,
    // class index of W(y|x), row-major over (x, y)
    class: Vec<usize>,
}

impl LikelihoodClasses {
    fn new(ch: &Channel) -> Self {
        let mut logs: Vec<f64> = Vec::new();
        let mut class = Vec::with_capacity(ch.input_size() * ch.output_size());
        for x in 0..ch.input_size() {
            for y in 0..ch.output_size() {
                let l = ch.w(x, y).ln();
                let idx = match logs.iter().position(|&v| v == l) {
                    Some(i) => i,
                    None => {
                        logs.push(l);
                        logs.len() - 1
                    }
                };
                class.push(idx);
            }
        }
        LikelihoodClasses { logs, class }
    }

    fn log_likelihood(&self, counts: &[u32]) -> f64 {
        let mut l = 0.0;
        for (c, &v) in counts.iter().zip(&self.logs) {
            if *c > 0 {
                l += *c as f64 * v;
            }
        }
        l
    }
}

#[inline]
fn at_least(lj: f64, li: f64) -> bool {
    if li == f64::NEG_INFINITY {
        return true;
    }
    lj >= li - TIE_TOLERANCE * li.abs().max(1.0)
}

/// Enumerates `Y^n` depth-first, calling `leaf` with each codeword's log-likelihood.
fn for_each_output<F: FnMut(&[f64])>(cb: &Codebook, ch: &Channel, mut leaf: F) {
    let classes = LikelihoodClasses::new(ch);
    let (n, m, ny, nc) = (cb.n(), cb.m(), ch.output_size(), classes.logs.len());
    let words: Vec<Vec<u8>> = (0..m).map(|i| cb.codeword(i)).collect();
    let mut counts = vec![0u32; m * nc];
    let mut ll = vec![0.0; m];

    // iterative DFS over positions with an odometer on output symbols
    let mut ys = vec![0usize; n];
    let mut depth = 0usize;
    let add = |counts: &mut [u32], k: usize, y: usize, sign: i32| {
        for (i, w) in words.iter().enumerate() {
            let c = classes.class[w[k] as usize * ny + y];
            let cell = &mut counts[i * nc + c];
            *cell = (*cell as i32 + sign) as u32;
        }
    };
    add(&mut counts, 0, 0, 1);
    loop {
        if depth + 1 == n {
            for i in 0..m {
                ll[i] = classes.log_likelihood(&counts[i * nc..(i + 1) * nc]);
            }
            leaf(&ll);
            // advance the deepest position, backtracking when exhausted
            loop {
                add(&mut counts, depth, ys[depth], -1);
                ys[depth] += 1;
                if ys[depth] < ny {
                    add(&mut counts, depth, ys[depth], 1);
                    break;
                }
                ys[depth] = 0;
                if depth == 0 {
                    return;
                }
                depth -= 1;
            }
        } else {
            depth += 1;
            ys[depth] = 0;
            add(&mut counts, depth, 0, 1);
        }
    }
}

/// Exact ML error probability with the union and De Caen bounds.
pub fn exhaustive_report(cb: &Codebook, ch: &Channel) -> Result<ExhaustiveReport> {
    check_size(cb, ch)?;
    let m = cb.m();
    let mut exact = 0.0;
    // pair[i][j] = P(A_ij | i sent), inter[i][j][k] = P(A_ij and A_ik | i sent)
    let mut pair = vec![0.0; m * m];
    let mut inter = vec![0.0; m * m * m];
    let mut events = vec![false; m];
    for_each_output(cb, ch, |ll| {
        for i in 0..m {
            let p = ll[i].exp();
            if p == 0.0 {
                continue;
            }
            let mut any = false;
            for j in 0..m {
                events[j] = j != i && at_least(ll[j], ll[i]);
                any |= events[j];
            }
            if !any {
                continue;
            }
            exact += p;
            for j in 0..m {
                if !events[j] {
                    continue;
                }
                pair[i * m + j] += p;
                for k in 0..m {
                    if events[k] {
                        inter[(i * m + j) * m + k] += p;
                    }
                }
            }
        }
    });
    let union: f64 = pair.iter().sum::<f64>() / m as f64;
    let mut de_caen = 0.0;
    for i in 0..m {
        for j in 0..m {
            let pj = pair[i * m + j];
            if pj == 0.0 {
                continue;
            }
            let denom: f64 = (0..m).map(|k| inter[(i * m + j) * m + k]).sum();
            de_caen += pj * pj / denom;
        }
    }
    // summation noise can push a certain error just past 1
    Ok(ExhaustiveReport { exact: (exact / m as f64).min(1.0), union, de_caen: de_caen / m as f64 })
}

/// `(1/M) sum_m P[some other codeword is at least as likely | x_m sent]`.
pub fn exact_error_probability(cb: &Codebook, ch: &Channel) -> Result<f64> {
    Ok(exhaustive_report(cb, ch)?.exact)
}

/// De Caen lower bound on the ML error probability.
pub fn de_caen_lower_bound(cb: &Codebook, ch: &Channel) -> Result<f64> {
    Ok(exhaustive_report(cb, ch)?.de_caen)
}

/// `P[x_i -> x_j]` over a BSC: at least half of the `d` differing positions flipped.
pub fn bsc_pairwise_error(distance: usize, p: f64) -> f64 {
    if distance == 0 {
        return 1.0;
    }
    let d = distance as f64;
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    // log C(d, k) built up incrementally from k = 0
    let mut log_binom = 0.0;
    let mut terms = Vec::with_capacity(distance + 1);
    let first = distance.div_ceil(2);
    for k in 0..=distance {
        if k > 0 {
            log_binom += ((distance - k + 1) as f64).ln() - (k as f64).ln();
        }
        if k >= first {
            terms.push(log_binom + k as f64 * lp + (d - k as f64) * lq);
        }
    }
    let mx = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (mx.exp() * terms.iter().map(|t| (t - mx).exp()).sum::<f64>()).min(1.0)
}

/// `(1/M) sum_i sum_{j != i} P[x_i -> x_j]`.
///
/// Over a BSC the pairwise terms use the binomial tail, so any blocklength
/// works; other channels go through the exhaustive evaluator.
pub fn union_bound_pe(cb: &Codebook, ch: &Channel) -> Result<f64> {
    if let (Some(p), 2) = (ch.as_bsc(), cb.alphabet()) {
        let m = cb.m();
        let mut total = 0.0;
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    total += bsc_pairwise_error(cb.hamming(i, j), p);
                }
            }
        }
        return Ok(total / m as f64);
    }
    Ok(exhaustive_report(cb, ch)?.union)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondMoment {
    /// `E[Pe^2] / E[Pe]^2`.
    pub ratio: f64,
    pub mean_pe: f64,
    pub mean_pe_sq: f64,
    /// Standard errors of the two sample means.
    pub se_mean_pe: f64,
    pub se_mean_pe_sq: f64,
    pub samples: usize,
}

/// Monte Carlo estimate of `E[Pe^2] / E[Pe]^2` over `config.trials` sampled codebooks.
pub fn second_moment_ratio(config: &EnsembleConfig, ch: &Channel) -> Result<SecondMoment> {
    if config.alphabet() != ch.input_size() {
        return Err(Error::DimensionMismatch { expected: ch.input_size(), got: config.alphabet() });
    }
    let outputs = (ch.output_size() as f64).powi(config.n as i32);
    if outputs > EXHAUSTIVE_LIMIT {
        return Err(Error::InstanceTooLarge(outputs));
    }
    let pes: Vec<f64> = (0..config.trials as u64)
        .into_par_iter()
        .map(|t| exact_error_probability(&sample_codebook(config, t), ch))
        .collect::<Result<_>>()?;
    let k = pes.len() as f64;
    let mean = pes.iter().sum::<f64>() / k;
    let mean_sq = pes.iter().map(|p| p * p).sum::<f64>() / k;
    let sd = |vals: &mut dyn Iterator<Item = f64>, mu: f64| -> f64 {
        if pes.len() < 2 {
            return 0.0;
        }
        (vals.map(|v| (v - mu).powi(2)).sum::<f64>() / (k - 1.0)).sqrt() / k.sqrt()
    };
    let se_mean_pe = sd(&mut pes.iter().cloned(), mean);
    let se_mean_pe_sq = sd(&mut pes.iter().map(|p| p * p), mean_sq);
    Ok(SecondMoment {
        ratio: mean_sq / (mean * mean),
        mean_pe: mean,
        mean_pe_sq: mean_sq,
        se_mean_pe,
        se_mean_pe_sq,
        samples: pes.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::InputDistribution;
    use crate::ensemble::EnsembleKind;

    const P: f64 = 0.11;

    fn bsc() -> Channel {
        Channel::bsc(P).unwrap()
    }

    fn cb(words: &[&[u8]]) -> Codebook {
        Codebook::from_codewords(2, &words.iter().map(|w| w.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn identical_codewords_always_err() {
        let r = exhaustive_report(&cb(&[&[0, 1, 1], &[0, 1, 1]]), &bsc()).unwrap();
        assert_eq!(r.exact, 1.0);
        assert!((r.union - 1.0).abs() < 1e-15);
        assert!((r.de_caen - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_symbol_code() {
        let pe = exact_error_probability(&cb(&[&[0], &[1]]), &bsc()).unwrap();
        assert!((pe - P).abs() < 1e-15);
    }

    #[test]
    fn repetition_code_matches_binomial() {
        let c = cb(&[&[0, 0, 0], &[1, 1, 1]]);
        let expected = P.powi(3) + 3.0 * P * P * (1.0 - P);
        assert!((expected - 0.033_638).abs() < 1e-15);
        let r = exhaustive_report(&c, &bsc()).unwrap();
        assert!((r.exact - expected).abs() < 1e-15);
        assert!((r.union - expected).abs() < 1e-15);
        assert!((r.de_caen - expected).abs() < 1e-15);
        assert!((union_bound_pe(&c, &bsc()).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn even_distance_ties_count_as_errors() {
        // distance 2: error iff at least one of the two differing bits flips
        let c = cb(&[&[0, 0], &[1, 1]]);
        let expected = 1.0 - (1.0 - P) * (1.0 - P);
        assert!((exact_error_probability(&c, &bsc()).unwrap() - expected).abs() < 1e-15);
        assert!((bsc_pairwise_error(2, P) - expected).abs() < 1e-15);
    }

    #[test]
    fn three_codeword_sandwich() {
        let c = cb(&[&[0, 0, 0], &[0, 1, 1], &[1, 0, 1]]);
        let r = exhaustive_report(&c, &bsc()).unwrap();
        assert!(r.de_caen <= r.exact + 1e-12);
        assert!(r.exact <= r.union + 1e-12);
        assert!(r.union > r.exact);
        assert!((union_bound_pe(&c, &bsc()).unwrap() - r.union).abs() < 1e-13);
    }

    #[test]
    fn duplicate_pair_gives_positive_de_caen() {
        let c = cb(&[&[0, 0, 1, 1], &[0, 0, 1, 1], &[1, 1, 0, 0]]);
        let r = exhaustive_report(&c, &bsc()).unwrap();
        // codewords 0 and 1 confuse each other with certainty
        assert!(r.de_caen >= 1.0 / 3.0);
        assert!(r.de_caen <= r.exact + 1e-12 && r.exact <= r.union + 1e-12);
    }

    #[test]
    fn binomial_tail_matches_exhaustive_pairs() {
        for d in 0..=9usize {
            let mut a = vec![0u8; 10];
            let mut b = vec![0u8; 10];
            b[..d].fill(1);
            a[9] = 1;
            b[9] = 1;
            let c = cb(&[&a, &b]);
            let ex = exhaustive_report(&c, &bsc()).unwrap().union;
            assert!((ex - bsc_pairwise_error(d, P)).abs() < 1e-13, "distance {d}");
        }
        // large distances stay finite and monotone
        assert!(bsc_pairwise_error(1001, P) < bsc_pairwise_error(501, P));
        assert!(bsc_pairwise_error(1001, P) > 0.0);
    }

    #[test]
    fn general_channel_sandwich() {
        let ch = Channel::new(&[vec![0.7, 0.2, 0.1], vec![0.1, 0.3, 0.6], vec![0.25, 0.5, 0.25]]).unwrap();
        let c = Codebook::from_codewords(3, &[vec![0, 1, 2, 0], vec![1, 1, 0, 2], vec![2, 0, 1, 1]]).unwrap();
        let r = exhaustive_report(&c, &ch).unwrap();
        assert!(r.de_caen <= r.exact + 1e-12 && r.exact <= r.union + 1e-12);
        assert!((union_bound_pe(&c, &ch).unwrap() - r.union).abs() < 1e-15);
    }

    #[test]
    fn zero_transition_probabilities() {
        let z = Channel::new(&[vec![1.0, 0.0], vec![0.3, 0.7]]).unwrap();
        // x=0 -> always y=0, where x=1 is less likely: no error for codeword 0
        let c = cb(&[&[0], &[1]]);
        let r = exhaustive_report(&c, &z).unwrap();
        // codeword 1 errs when y=0 (W(0|0)=1 >= 0.3)
        assert!((r.exact - 0.3 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn instance_guard() {
        let big = Codebook::from_codewords(2, &[vec![0u8; 30], vec![1u8; 30]]).unwrap();
        assert!(matches!(exact_error_probability(&big, &bsc()), Err(Error::InstanceTooLarge(_))));
        // the BSC union bound has no guard
        assert!(union_bound_pe(&big, &bsc()).is_ok());
    }

    #[test]
    fn second_moment_degenerate() {
        let cfg = EnsembleConfig::new(EnsembleKind::Iid, InputDistribution::point(2, 0), 3, 2, 50, 1).unwrap();
        let s = second_moment_ratio(&cfg, &bsc()).unwrap();
        assert_eq!(s.mean_pe, 1.0);
        assert_eq!(s.ratio, 1.0);
    }

    #[test]
    fn second_moment_single_symbol_against_enumeration() {
        // the four equiprobable codebooks {00, 01, 10, 11}: Pe in {1, p, p, 1}
        let mean = (1.0 + P) / 2.0;
        let mean_sq = (1.0 + P * P) / 2.0;
        let exact_ratio = mean_sq / (mean * mean);
        let cfg = EnsembleConfig::new(EnsembleKind::Iid, InputDistribution::uniform(2), 1, 2, 40_000, 3).unwrap();
        let s = second_moment_ratio(&cfg, &bsc()).unwrap();
        assert!((s.mean_pe - mean).abs() < 4.0 * s.se_mean_pe);
        assert!((s.mean_pe_sq - mean_sq).abs() < 4.0 * s.se_mean_pe_sq);
        assert!((s.ratio - exact_ratio).abs() < 0.02, "{} vs {exact_ratio}", s.ratio);
    }

    #[test]
    fn second_moment_nondegenerate_exceeds_one() {
        let cfg = EnsembleConfig::new(EnsembleKind::Iid, InputDistribution::uniform(2), 8, 4, 10_000, 9).unwrap();
        let s = second_moment_ratio(&cfg, &bsc()).unwrap();
        assert!(s.ratio > 1.0);
        assert_eq!(s.samples, 10_000);
    }
}
