//! Cross-module check suites behind `explab verify`.

use std::fmt::Write as _;

use super::Suite;
use crate::channel::{bhattacharyya_matrix, cutoff_rate, mutual_information, Channel, InputDistribution};
use crate::ensemble::{
    exhaustive_report, sample_codebook, union_bound_pe, Codebook, EnsembleConfig, EnsembleKind,
};
use crate::error::Result;
use crate::exponents::{
    critical_rate, e0_cc, e0_iid, e_ex, e_rce, e_sp, e_trc, e_trc_direct, trc_objective,
};
use crate::format::sig12;
use crate::typecalc::simplex_grid_minimize;

pub const SANDWICH_TOLERANCE: f64 = 1e-12;
pub const TRC_TOLERANCE: f64 = 2e-3;
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;
pub const GRID_STEP: f64 = 0.005;
const CORPUS_SEED: u64 = 0x7e57_c0de;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    /// Violation size for inequalities, absolute difference for equalities.
    pub residual: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.residual <= self.tolerance
    }
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn max_residual(&self) -> f64 {
        self.checks.iter().map(|c| c.residual).fold(0.0, f64::max)
    }

    fn push(&mut self, suite: &'static str, name: impl Into<String>, residual: f64, tolerance: f64) {
        // NaN must never count as a pass
        let residual = if residual.is_nan() { f64::INFINITY } else { residual };
        self.checks.push(Check { suite, name: name.into(), residual, tolerance });
    }

    /// Le-check: `a <= b` up to `tol`.
    fn le(&mut self, suite: &'static str, name: impl Into<String>, a: f64, b: f64, tol: f64) {
        self.push(suite, name, (a - b).max(0.0), tol);
    }

    fn eq(&mut self, suite: &'static str, name: impl Into<String>, a: f64, b: f64, tol: f64) {
        self.push(suite, name, (a - b).abs(), tol);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{} {}/{} residual={} tol={}",
                if c.passed() { "PASS" } else { "FAIL" },
                c.suite,
                c.name,
                sig12(c.residual),
                sig12(c.tolerance)
            );
        }
        let failed = self.checks.iter().filter(|c| !c.passed()).count();
        let _ = writeln!(
            out,
            "{} checks, {} failed, max residual {}",
            self.checks.len(),
            failed,
            sig12(self.max_residual())
        );
        out
    }
}

/// Tiny codes on BSC(0.11) with `n <= 10`, `M <= 4`: two random i.i.d. codebooks
/// per `(n, M)`, the length-3 repetition code and a codebook with a repeated
/// codeword.
pub fn sandwich_corpus() -> Result<(Channel, Vec<Codebook>)> {
    let ch = Channel::bsc(0.11)?;
    let q = InputDistribution::uniform(2);
    let mut corpus = Vec::new();
    for n in 1..=10 {
        for m in 2..=4 {
            let config = EnsembleConfig::new(EnsembleKind::Iid, q.clone(), n, m, 2, CORPUS_SEED)?;
            for trial in 0..2 {
                corpus.push(sample_codebook(&config, trial));
            }
        }
    }
    corpus.push(Codebook::from_codewords(2, &[vec![0, 0, 0], vec![1, 1, 1]])?);
    corpus.push(Codebook::from_codewords(2, &[vec![0, 1, 1, 0], vec![0, 1, 1, 0], vec![1, 0, 0, 1]])?);
    Ok((ch, corpus))
}

fn sandwich(report: &mut Report) -> Result<()> {
    let (ch, corpus) = sandwich_corpus()?;
    for (k, cb) in corpus.iter().enumerate() {
        let r = exhaustive_report(cb, &ch)?;
        let tag = format!("code{k:02}(n={},M={})", cb.n(), cb.m());
        report.le("sandwich", format!("{tag} de_caen<=exact"), r.de_caen, r.exact, SANDWICH_TOLERANCE);
        report.le("sandwich", format!("{tag} exact<=union"), r.exact, r.union, SANDWICH_TOLERANCE);
        report.eq("sandwich", format!("{tag} union closed form"), union_bound_pe(cb, &ch)?, r.union, SANDWICH_TOLERANCE);
        if cb.m() == 2 {
            report.eq("sandwich", format!("{tag} M=2 exact=union"), r.exact, r.union, SANDWICH_TOLERANCE);
            report.eq("sandwich", format!("{tag} M=2 de_caen=exact"), r.de_caen, r.exact, SANDWICH_TOLERANCE);
        }
    }
    Ok(())
}

/// Rates `R_crit * k / 21`, `k = 1..=20`.
pub fn trc_rates(r_crit: f64) -> Vec<f64> {
    (1..=20).map(|k| r_crit * k as f64 / 21.0).collect()
}

fn trc(report: &mut Report) -> Result<()> {
    let ch = Channel::bsc(0.11)?;
    let q = InputDistribution::uniform(2);
    let d = bhattacharyya_matrix(&ch)?;
    let r_crit = critical_rate(&q, &ch, EnsembleKind::Iid)?;
    for rate in trc_rates(r_crit) {
        let closed = e_trc(rate, &q, &ch)?.value;
        let direct = e_trc_direct(rate, &q, &ch)?;
        let grid = simplex_grid_minimize(
            |p| trc_objective(p, &q, &d, rate).unwrap_or(f64::INFINITY),
            2.0 * rate,
            &q,
            GRID_STEP,
        )?;
        let tag = format!("R={}", sig12(rate));
        report.eq("trc", format!("{tag} closed vs direct"), closed, direct.exponent, TRC_TOLERANCE);
        report.eq("trc", format!("{tag} direct vs grid"), direct.exponent, grid.value, TRC_TOLERANCE);
        report.push("trc", format!("{tag} lambda residual ({})", direct.branch), direct.residual(), RESIDUAL_TOLERANCE);
    }
    Ok(())
}

fn identities(report: &mut Report) -> Result<()> {
    const S: &str = "identities";
    let q = InputDistribution::uniform(2);
    for p in [0.05, 0.11, 0.25] {
        let ch = Channel::bsc(p)?;
        let d = bhattacharyya_matrix(&ch)?;
        let tag = format!("p={p}");
        let r0 = cutoff_rate(&ch, &q)?;
        let capacity = mutual_information(&ch, &q)?;
        let r_crit = critical_rate(&q, &ch, EnsembleKind::Iid)?;
        report.eq(S, format!("{tag} R0=E0(1)"), r0, e0_iid(1.0, &q, &ch)?, 1e-12);
        report.le(S, format!("{tag} R0<=I"), r0, capacity, 0.0);
        report.eq(S, format!("{tag} E0cc=E0iid"), e0_cc(0.5, &q, &ch)?, e0_iid(0.5, &q, &ch)?, 1e-8);
        report.eq(S, format!("{tag} E_rce(0)=R0"), e_rce(0.0, &q, &ch, EnsembleKind::Iid)?.value, r0, 1e-10);
        let grid = simplex_grid_minimize(
            |p| trc_objective(p, &q, &d, 0.0).unwrap_or(f64::INFINITY),
            f64::INFINITY,
            &q,
            GRID_STEP,
        )?;
        report.eq(S, format!("{tag} joint-type R0"), grid.value, r0, 1e-3);

        let mut worst = [0.0f64; 6];
        for k in 0..50 {
            let rate = capacity * k as f64 / 50.0;
            let rce = e_rce(rate, &q, &ch, EnsembleKind::Iid)?.value;
            let trc = e_trc(rate, &q, &ch)?.value;
            let ex = e_ex(rate, &q, &ch)?.value;
            worst[0] = worst[0].max(rce - trc);
            worst[1] = worst[1].max(trc - ex.max(rce));
            if rate < r_crit {
                worst[2] = worst[2].max(trc - ex);
            } else {
                worst[3] = worst[3].max((trc - rce).abs());
                let sp = e_sp(rate, &q, &ch)?.value;
                worst[4] = worst[4].max((sp - rce).abs());
            }
            if k > 0 {
                let prev = e_rce(capacity * (k - 1) as f64 / 50.0, &q, &ch, EnsembleKind::Iid)?.value;
                worst[5] = worst[5].max(rce - prev);
            }
        }
        report.push(S, format!("{tag} E_rce<=E_trc"), worst[0], 1e-12);
        report.push(S, format!("{tag} E_trc<=max(E_ex,E_rce)"), worst[1], 1e-12);
        report.push(S, format!("{tag} E_trc<=E_ex below R_crit"), worst[2], 1e-12);
        report.push(S, format!("{tag} E_trc=E_rce above R_crit"), worst[3], 1e-6);
        report.push(S, format!("{tag} E_sp=E_rce above R_crit"), worst[4], 1e-6);
        report.push(S, format!("{tag} E_rce nonincreasing"), worst[5], 0.0);
    }
    Ok(())
}

pub fn run_suite(suite: Suite) -> Result<Report> {
    let mut report = Report::default();
    match suite {
        Suite::Sandwich => sandwich(&mut report)?,
        Suite::Trc => trc(&mut report)?,
        Suite::Identities => identities(&mut report)?,
        Suite::All => {
            sandwich(&mut report)?;
            trc(&mut report)?;
            identities(&mut report)?;
        }
    }
    Ok(report)
}
