//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

use std::path::Path;
use std::process::Command;

use explab::channel::{bhattacharyya_matrix, cutoff_rate, mutual_information, Channel, InputDistribution};
use explab::cli::verify::{sandwich_corpus, trc_rates};
use explab::cli::DEFAULT_SEED;
use explab::ensemble::{exhaustive_report, run_concentration_experiment, EnsembleConfig, EnsembleKind, DEFAULT_BINS};
use explab::exponents::{critical_rate, e_ex, e_rce, e_sp, e_trc, e_trc_direct, trc_objective};
use explab::refdist::{gauss_q, kolmogorov_distance, min_gauss_moments, ReferenceDistribution};
use explab::typecalc::simplex_grid_minimize;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Default)]
struct Gate {
    passed: usize,
    failed: Vec<String>,
}

impl Gate {
    fn check(&mut self, id: &str, ok: bool, detail: String) {
        println!("[{}] {id}: {detail}", if ok { "PASS" } else { "FAIL" });
        if ok {
            self.passed += 1;
        } else {
            self.failed.push(id.to_string());
        }
    }

    fn note(&self, id: &str, detail: String) {
        println!("[INFO] {id}: {detail}");
    }
}

fn bsc(p: f64) -> Channel {
    Channel::bsc(p).unwrap()
}

fn uniform() -> InputDistribution {
    InputDistribution::uniform(2)
}

fn histogram_shape(gate: &mut Gate) {
    let ch = bsc(0.11);
    let d = bhattacharyya_matrix(&ch).unwrap();
    let min12 = ReferenceDistribution::normalized_min_of_gaussians(12).unwrap();
    let gauss = ReferenceDistribution::standard_gaussian();
    for kind in [EnsembleKind::Iid, EnsembleKind::ConstantComposition] {
        let config = EnsembleConfig::new(kind, uniform(), 10_000, 4, 100_000, DEFAULT_SEED).unwrap();
        let run = run_concentration_experiment(&config, &d, DEFAULT_BINS);
        let frac = run.fraction_within(0.225, 0.2375);
        gate.check(
            &format!("1a histogram {kind} support"),
            frac >= 0.99,
            format!("fraction of V_n/n in [0.225, 0.2375] = {frac:.5} (need >= 0.99)"),
        );
        let z = run.normalized();
        let ks_min = kolmogorov_distance(&z, &min12).unwrap();
        let ks_gauss = kolmogorov_distance(&z, &gauss).unwrap();
        gate.check(
            &format!("1b histogram {kind} shape"),
            ks_min <= 0.02 && ks_min < ks_gauss,
            format!("KS to normalized min of 12 = {ks_min:.5} (need <= 0.02), KS to Gaussian = {ks_gauss:.5}"),
        );
    }
}

fn trc_agreement(gate: &mut Gate) {
    let ch = bsc(0.11);
    let q = uniform();
    let d = bhattacharyya_matrix(&ch).unwrap();
    let r_crit = critical_rate(&q, &ch, EnsembleKind::Iid).unwrap();
    let (mut closed_direct, mut direct_grid, mut residual) = (0.0f64, 0.0f64, 0.0f64);
    let mut boundary = 0;
    let rates = trc_rates(r_crit);
    for &rate in &rates {
        let closed = e_trc(rate, &q, &ch).unwrap().value;
        let direct = e_trc_direct(rate, &q, &ch).unwrap();
        let grid = simplex_grid_minimize(
            |p| trc_objective(p, &q, &d, rate).unwrap_or(f64::INFINITY),
            2.0 * rate,
            &q,
            0.005,
        )
        .unwrap();
        closed_direct = closed_direct.max((closed - direct.exponent).abs());
        direct_grid = direct_grid.max((direct.exponent - grid.value).abs());
        residual = residual.max(direct.residual());
        boundary += usize::from(direct.lambda_star.is_some());
    }
    gate.check(
        "2 trc three-way",
        rates.len() == 20 && closed_direct <= 2e-3 && direct_grid <= 2e-3 && residual <= 1e-8,
        format!(
            "{} rates in (0, {r_crit:.6}): max|closed-direct| = {closed_direct:.2e}, max|direct-grid| = {direct_grid:.2e} \
             (need <= 2e-3), max lambda residual = {residual:.2e} (need <= 1e-8), {boundary} on the boundary branch",
            rates.len()
        ),
    );
}

fn ordering(gate: &mut Gate) {
    let q = uniform();
    for p in [0.05, 0.11, 0.25] {
        let ch = bsc(p);
        let capacity = mutual_information(&ch, &q).unwrap();
        let r_crit = critical_rate(&q, &ch, EnsembleKind::Iid).unwrap();
        let r0 = cutoff_rate(&ch, &q).unwrap();
        let mut w = [0.0f64; 6];
        for k in 0..50 {
            let rate = capacity * k as f64 / 50.0;
            let rce = e_rce(rate, &q, &ch, EnsembleKind::Iid).unwrap().value;
            let trc = e_trc(rate, &q, &ch).unwrap().value;
            let ex = e_ex(rate, &q, &ch).unwrap().value;
            w[0] = w[0].max(rce - trc);
            w[1] = w[1].max(trc - ex.max(rce));
            w[5] = w[5].max(trc - ex);
            if rate < r_crit {
                w[2] = w[2].max(trc - ex);
            } else {
                w[3] = w[3].max((trc - rce).abs());
                w[4] = w[4].max((e_sp(rate, &q, &ch).unwrap().value - rce).abs());
            }
        }
        let rce0 = (e_rce(0.0, &q, &ch, EnsembleKind::Iid).unwrap().value - r0).abs();
        gate.check(
            &format!("3 ordering p={p}"),
            w[0] <= 1e-12 && w[1] <= 1e-12 && w[2] <= 1e-12 && w[3] <= 1e-6 && w[4] <= 1e-6 && rce0 <= 1e-10,
            format!(
                "violations: E_rce<=E_trc {:.1e}, E_trc<=E_ex (R<R_crit) {:.1e}, E_trc<=max(E_ex,E_rce) {:.1e}; \
                 above R_crit |E_trc-E_rce| {:.1e}, |E_sp-E_rce| {:.1e}; |E_rce(0)-R0| {rce0:.1e}",
                w[0], w[2], w[1], w[3], w[4]
            ),
        );
        gate.note(
            &format!("3 ordering p={p}"),
            format!(
                "largest E_trc - E_ex with the raw expurgated sup over all rates: {:.4} (it equals R0 - R above R_crit)",
                w[5]
            ),
        );
    }
}

fn sandwich(gate: &mut Gate) {
    let (ch, corpus) = sandwich_corpus().unwrap();
    let (mut low, mut high, mut m2) = (0.0f64, 0.0f64, 0.0f64);
    let mut m2_count = 0;
    for cb in &corpus {
        let r = exhaustive_report(cb, &ch).unwrap();
        low = low.max(r.de_caen - r.exact);
        high = high.max(r.exact - r.union);
        if cb.m() == 2 {
            m2_count += 1;
            m2 = m2.max((r.exact - r.union).abs()).max((r.de_caen - r.exact).abs());
        }
    }
    let shape_ok = corpus.iter().all(|c| c.n() <= 10 && c.m() <= 4);
    gate.check(
        "4 bound sandwich",
        corpus.len() >= 50 && shape_ok && low <= 1e-12 && high <= 1e-12 && m2 <= 1e-12 && m2_count > 0,
        format!(
            "{} codebooks ({m2_count} with M=2): max(de_caen-exact) = {low:.1e}, max(exact-union) = {high:.1e}, \
             M=2 max spread = {m2:.1e} (need <= 1e-12)",
            corpus.len()
        ),
    );
}

fn concentration(gate: &mut Gate) {
    let ch = bsc(0.11);
    let q = uniform();
    let d = bhattacharyya_matrix(&ch).unwrap();
    let trc0 = e_trc(0.0, &q, &ch).unwrap().value;
    let ex0 = e_ex(0.0, &q, &ch).unwrap().value;
    for kind in [EnsembleKind::Iid, EnsembleKind::ConstantComposition] {
        let mut lower = Vec::new();
        let mut upper = 0usize;
        for n in [2000, 4000, 8000] {
            let config = EnsembleConfig::new(kind, q.clone(), n, 4, 10_000, DEFAULT_SEED).unwrap();
            let run = run_concentration_experiment(&config, &d, DEFAULT_BINS);
            let below = run.samples.iter().filter(|&&v| v < trc0 - 0.003).count();
            lower.push(below as f64 / run.samples.len() as f64);
            upper += run.samples.iter().filter(|&&v| v > ex0 + 0.01).count();
        }
        gate.check(
            &format!("5 concentration {kind}"),
            lower[0] > lower[1] && lower[1] > lower[2] && upper == 0,
            format!(
                "P[V_n/n < {:.5}] at n = 2000/4000/8000: {:.4} / {:.4} / {:.4} (need strictly decreasing); \
                 samples above {:.5}: {upper} (need 0)",
                trc0 - 0.003,
                lower[0],
                lower[1],
                lower[2],
                ex0 + 0.01
            ),
        );
    }
}

fn reference(gate: &mut Gate) {
    let (mean2, _) = min_gauss_moments(2).unwrap();
    let target = -1.0 / std::f64::consts::PI.sqrt();
    gate.check(
        "6a min of 2 mean",
        (mean2 - target).abs() <= 1e-8,
        format!("{mean2:.12} vs -1/sqrt(pi) = {target:.12} (need within 1e-8)"),
    );

    const N: usize = 10_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let (mut s1, mut s2, mut s3, mut s4) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..N {
        let mut m = f64::INFINITY;
        for _ in 0..12 {
            let x: f64 = StandardNormal.sample(&mut rng);
            m = m.min(x);
        }
        s1 += m;
        s2 += m * m;
        s3 += m * m * m;
        s4 += m * m * m * m;
    }
    let n = N as f64;
    let mc_mean = s1 / n;
    let c2 = s2 / n - mc_mean * mc_mean;
    let c4 = s4 / n - 4.0 * mc_mean * s3 / n + 6.0 * mc_mean * mc_mean * s2 / n - 3.0 * mc_mean.powi(4);
    let mc_var = c2 * n / (n - 1.0);
    let se_mean = (c2 / n).sqrt();
    let se_var = ((c4 - c2 * c2) / n).sqrt();
    let (mean12, var12) = min_gauss_moments(12).unwrap();
    let (zm, zv) = ((mean12 - mc_mean) / se_mean, (var12 - mc_var) / se_var);
    gate.check(
        "6b min of 12 moments",
        zm.abs() <= 3.0 && zv.abs() <= 3.0,
        format!(
            "quadrature mean {mean12:.6}, variance {var12:.6}; 1e7-sample Monte Carlo {mc_mean:.6}, {mc_var:.6}; \
             z-scores {zm:.2}, {zv:.2} (need |z| <= 3)"
        ),
    );
    let q0 = gauss_q(0.0);
    gate.check("6c Q(0)", (q0 - 0.5).abs() <= 1e-15, format!("Q(0) = {q0}"));
}

fn simulate(out: &Path, threads: Option<usize>, ensemble: &str) -> Vec<u8> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_explab"));
    cmd.env_remove("EXPLAB_SEED").args([
        "simulate", "--bsc", "0.11", "--ensemble", ensemble, "--m", "4", "--n", "2000", "--trials", "3000",
        "--seed", "99", "--out",
    ]);
    cmd.arg(out);
    if let Some(t) = threads {
        cmd.args(["--threads", &t.to_string()]);
    }
    let status = cmd.output().expect("explab runs");
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    std::fs::read(out.join("samples.csv")).unwrap()
}

fn determinism(gate: &mut Gate) {
    let tmp = tempfile::tempdir().unwrap();
    for ensemble in ["iid", "cc"] {
        let reference = simulate(&tmp.path().join(format!("{ensemble}-default")), None, ensemble);
        let mut identical = true;
        for t in [1, 2, 3, 8] {
            let other = simulate(&tmp.path().join(format!("{ensemble}-{t}")), Some(t), ensemble);
            identical &= other == reference;
        }
        gate.check(
            &format!("7 determinism {ensemble}"),
            identical,
            format!("samples.csv ({} bytes) identical for --threads unset/1/2/3/8", reference.len()),
        );
    }
}

fn main() {
    let mut gate = Gate::default();
    histogram_shape(&mut gate);
    trc_agreement(&mut gate);
    ordering(&mut gate);
    sandwich(&mut gate);
    concentration(&mut gate);
    reference(&mut gate);
    determinism(&mut gate);
    println!("acceptance: {} passed, {} failed", gate.passed, gate.failed.len());
    if !gate.failed.is_empty() {
        println!("failed: {}", gate.failed.join(", "));
        std::process::exit(1);
    }
}
