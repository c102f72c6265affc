//! The error-exponent family of a DMC under a fixed input distribution.
//!
//! All rates and exponents are in nats. Gallager-type suprema over `rho` are
//! found by golden-section search on concave objectives; the typical
//! random-coding exponent is available both through its closed form
//! ([`e_trc`]) and through the joint-type minimization solved with its KKT
//! conditions ([`e_trc_direct`]).

use crate::channel::{cutoff_rate, mutual_information, BhattacharyyaMatrix, Channel, InputDistribution};
use crate::ensemble::EnsembleKind;
use crate::error::{Error, Result};
use crate::typecalc::{kl_divergence, JointDistribution};

/// Golden-section tolerance in `rho`.
pub const RHO_TOLERANCE: f64 = 1e-10;
/// Cap on the expurgated `rho` search.
pub const EX_RHO_MAX: f64 = 1e6;
/// Cap on the sphere-packing `rho` search.
pub const SP_RHO_MAX: f64 = 1e4;
/// Step of the central difference used for the critical rate.
pub const CRIT_STEP: f64 = 1e-6;
/// Target residual `|D(P*||QxQ) - 2R|` of the lambda bisection.
pub const LAMBDA_TOLERANCE: f64 = 1e-10;

const CC_MAX_ITER: usize = 10_000;
const CC_TOLERANCE: f64 = 1e-9;

/// What attained an exponent.
#[derive(Debug, Clone, PartialEq)]
pub enum Optimizer {
    Rho(f64),
    /// Supremum approached only as `rho -> inf`.
    RhoInfinity,
    Lambda(f64),
    Joint(JointDistribution),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentPoint {
    pub rate: f64,
    pub value: f64,
    pub optimizer: Option<Optimizer>,
}

impl ExponentPoint {
    pub fn rho(&self) -> Option<f64> {
        match self.optimizer {
            Some(Optimizer::Rho(r)) => Some(r),
            Some(Optimizer::RhoInfinity) => Some(f64::INFINITY),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrcBranch {
    /// Unconstrained optimizer `P0` is feasible; exponent is `R0 - R`.
    InteriorP0,
    /// Divergence constraint is active at `P*(lambda*)`.
    BoundaryPStar,
    /// `R >= R_crit`, where the exponent coincides with the random-coding one.
    HighRateRce,
}

impl std::fmt::Display for TrcBranch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TrcBranch::InteriorP0 => "InteriorP0",
            TrcBranch::BoundaryPStar => "BoundaryPStar",
            TrcBranch::HighRateRce => "HighRateRce",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrcSolution {
    pub rate: f64,
    pub exponent: f64,
    pub branch: TrcBranch,
    pub lambda_star: Option<f64>,
    pub p_opt: JointDistribution,
    /// `D(p_opt || Q x Q)`.
    pub divergence: f64,
}

impl TrcSolution {
    /// `|D(P*||QxQ) - 2R|` on the boundary branch, zero otherwise.
    pub fn residual(&self) -> f64 {
        match self.branch {
            TrcBranch::BoundaryPStar => (self.divergence - 2.0 * self.rate).abs(),
            _ => 0.0,
        }
    }
}

fn log_sum_exp(v: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = v.collect();
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Gallager's `E0(rho, Q)` for the i.i.d. ensemble, for any `rho >= 0`.
///
/// `ln sum_x Q(x) W^{1/(1+rho)}` is formed as `ln_1p(sum_x Q(x) expm1(ln W / (1+rho)))`
/// so that large `rho` keeps full precision.
pub(crate) fn gallager_e0(rho: f64, q: &InputDistribution, ch: &Channel) -> f64 {
    let s = 1.0 / (1.0 + rho);
    let qsum: f64 = q.as_slice().iter().sum();
    let terms = (0..ch.output_size()).map(|y| {
        let mut t = qsum - 1.0;
        for x in 0..ch.input_size() {
            if q[x] > 0.0 {
                t += q[x] * (s * ch.w(x, y).ln()).exp_m1();
            }
        }
        (1.0 + rho) * t.ln_1p()
    });
    -log_sum_exp(terms)
}

fn check_rho_unit(rho: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::RhoOutOfRange(rho));
    }
    Ok(())
}

/// `E0(rho, Q) = -ln sum_y (sum_x Q(x) W(y|x)^{1/(1+rho)})^{1+rho}`, `0 <= rho <= 1`.
pub fn e0_iid(rho: f64, q: &InputDistribution, ch: &Channel) -> Result<f64> {
    check_rho_unit(rho)?;
    ch.check_dist(q)?;
    Ok(gallager_e0(rho, q, ch))
}

/// Objective of the constant-composition `E0` for a fixed auxiliary `a(.)`, and its gradient.
fn cc_objective(rho: f64, q: &InputDistribution, ch: &Channel, a: &[f64], grad: Option<&mut [f64]>) -> f64 {
    let s = 1.0 / (1.0 + rho);
    let k = ch.input_size();
    let phi: f64 = (0..k).map(|x| q[x] * a[x]).sum();
    // ln g_y with g_y = sum_x Q(x) W(y|x)^s e^{a(x) - phi}
    let ln_g: Vec<f64> = (0..ch.output_size())
        .map(|y| {
            log_sum_exp((0..k).filter(|&x| q[x] > 0.0 && ch.w(x, y) > 0.0).map(|x| {
                q[x].ln() + s * ch.w(x, y).ln() + a[x] - phi
            }))
        })
        .collect();
    let ln_total = log_sum_exp(ln_g.iter().map(|l| (1.0 + rho) * l));
    if let Some(grad) = grad {
        // d/da(x) of -ln sum_y g_y^{1+rho}; the phi terms cancel after projection
        for x in 0..k {
            if q[x] == 0.0 {
                grad[x] = 0.0;
                continue;
            }
            let mut acc = 0.0;
            for (y, lg) in ln_g.iter().enumerate() {
                let w = ch.w(x, y);
                if w > 0.0 {
                    let ln_term = rho * lg + q[x].ln() + s * w.ln() + a[x] - phi - ln_total;
                    acc += ln_term.exp();
                }
            }
            grad[x] = (1.0 + rho) * (q[x] - acc);
        }
    }
    -ln_total
}

/// Maximizer `a*` of the constant-composition objective with `sum_x Q(x) a(x) = 0`.
fn cc_ascent(rho: f64, q: &InputDistribution, ch: &Channel) -> Result<(f64, Vec<f64>)> {
    let k = ch.input_size();
    let mut a = vec![0.0; k];
    let mut g = vec![0.0; k];
    let mut trial = vec![0.0; k];
    let mut f = cc_objective(rho, q, ch, &a, Some(&mut g));
    let mut step = 1.0;
    for _ in 0..CC_MAX_ITER {
        let mean: f64 = (0..k).map(|x| q[x] * g[x]).sum();
        for x in 0..k {
            g[x] = if q[x] > 0.0 { g[x] - mean } else { 0.0 };
        }
        let gnorm2: f64 = g.iter().map(|v| v * v).sum();
        if gnorm2.sqrt() < CC_TOLERANCE {
            return Ok((f, a));
        }
        step *= 2.0;
        let f_new = loop {
            for x in 0..k {
                trial[x] = a[x] + step * g[x];
            }
            let f_try = cc_objective(rho, q, ch, &trial, None);
            if f_try >= f + 1e-4 * step * gnorm2 {
                break Some(f_try);
            }
            step *= 0.5;
            if step < 1e-20 {
                break None;
            }
        };
        let Some(f_new) = f_new else {
            // no ascent direction left at machine precision
            return Ok((f, a));
        };
        std::mem::swap(&mut a, &mut trial);
        let gain = f_new - f;
        f = cc_objective(rho, q, ch, &a, Some(&mut g));
        if gain < CC_TOLERANCE * 1e-6 {
            return Ok((f, a));
        }
    }
    Err(Error::NonConvergence { iterations: CC_MAX_ITER })
}

/// Constant-composition `E0`: supremum over `a(.)` of the tilted Gallager function.
pub fn e0_cc(rho: f64, q: &InputDistribution, ch: &Channel) -> Result<f64> {
    check_rho_unit(rho)?;
    ch.check_dist(q)?;
    Ok(cc_ascent(rho, q, ch)?.0)
}

fn e0(rho: f64, q: &InputDistribution, ch: &Channel, ensemble: EnsembleKind) -> Result<f64> {
    match ensemble {
        EnsembleKind::Iid => Ok(gallager_e0(rho, q, ch)),
        EnsembleKind::ConstantComposition => Ok(cc_ascent(rho, q, ch)?.0),
    }
}

/// Golden-section maximization of a unimodal function; endpoints are compared too.
fn golden_max<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a) > tol * (1.0 + a.abs().max(b.abs())) {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    for x in [lo, hi] {
        let fx = f(x)?;
        if fx >= best.1 {
            best = (x, fx);
        }
    }
    Ok(best)
}

fn check_rate(rate: f64) -> Result<()> {
    if !(rate.is_finite() && rate >= 0.0) {
        return Err(Error::RateOutOfRange { rate, lo: 0.0, hi: f64::INFINITY });
    }
    Ok(())
}

/// Random-coding exponent `max_{0<=rho<=1} E0(rho) - rho R`.
pub fn e_rce(rate: f64, q: &InputDistribution, ch: &Channel, ensemble: EnsembleKind) -> Result<ExponentPoint> {
    check_rate(rate)?;
    ch.check_dist(q)?;
    let (rho, value) = golden_max(|r| Ok(e0(r, q, ch, ensemble)? - r * rate), 0.0, 1.0, RHO_TOLERANCE)?;
    Ok(ExponentPoint { rate, value: value.max(0.0), optimizer: Some(Optimizer::Rho(rho)) })
}

/// Critical rate `dE0/drho` at `rho = 1`.
///
/// For the constant-composition ensemble the derivative is taken at the fixed
/// optimal `a*(1)` (envelope theorem), which keeps the finite difference free of
/// ascent noise.
pub fn critical_rate(q: &InputDistribution, ch: &Channel, ensemble: EnsembleKind) -> Result<f64> {
    ch.check_dist(q)?;
    let h = CRIT_STEP;
    let slope = match ensemble {
        EnsembleKind::Iid => (gallager_e0(1.0 + h, q, ch) - gallager_e0(1.0 - h, q, ch)) / (2.0 * h),
        EnsembleKind::ConstantComposition => {
            let (_, a) = cc_ascent(1.0, q, ch)?;
            (cc_objective(1.0 + h, q, ch, &a, None) - cc_objective(1.0 - h, q, ch, &a, None)) / (2.0 * h)
        }
    };
    Ok(slope.max(0.0))
}

/// `Ex(rho, Q) = -rho ln sum_{x,x'} Q(x)Q(x') e^{-d(x,x')/rho}` from precomputed distances.
pub fn expurgated_function(rho: f64, q: &InputDistribution, d: &BhattacharyyaMatrix) -> f64 {
    let k = d.size();
    let mut t = 0.0;
    for x in 0..k {
        for x2 in 0..k {
            let w = q[x] * q[x2];
            if w > 0.0 {
                t += w * (-d.get(x, x2) / rho).exp_m1();
            }
        }
    }
    let qsum: f64 = q.as_slice().iter().sum();
    -rho * (t + (qsum * qsum - 1.0)).ln_1p()
}

/// Gallager's expurgated function `Ex(rho, Q)`, `rho >= 1`.
pub fn ex_gallager(rho: f64, q: &InputDistribution, ch: &Channel) -> Result<f64> {
    if !(rho >= 1.0 && rho.is_finite()) {
        return Err(Error::RhoOutOfRange(rho));
    }
    ch.check_dist(q)?;
    Ok(expurgated_function(rho, q, &BhattacharyyaMatrix::new(ch)?))
}

/// Maximize a concave function of `rho` on `[lo, cap]` by doubling the bracket.
/// Returns `None` if the function is still increasing at `cap`.
fn expanding_max<F>(f: F, lo: f64, cap: f64) -> Result<Option<(f64, f64)>>
where
    F: Fn(f64) -> Result<f64>,
{
    // f increased from `before` to `prev`, so the maximizer lies above `before`
    let mut before = lo;
    let mut prev = lo;
    let mut f_prev = f(lo)?;
    let mut hi = (2.0 * lo).max(1.0);
    loop {
        let f_hi = f(hi)?;
        if f_hi <= f_prev {
            return golden_max(&f, before, hi, RHO_TOLERANCE).map(Some);
        }
        if hi >= cap {
            return Ok(None);
        }
        before = prev;
        prev = hi;
        f_prev = f_hi;
        hi = (hi * 2.0).min(cap);
    }
}

/// Gallager's expurgated exponent `sup_{rho>=1} Ex(rho) - rho R`, from precomputed distances.
///
/// The value is the raw supremum: above `Ex'(1)` it is `R0 - R` and turns
/// negative past `R0`. At `R = 0` the supremum is the `rho -> inf` limit
/// `sum Q Q' d`.
pub fn e_ex_with(rate: f64, q: &InputDistribution, d: &BhattacharyyaMatrix) -> Result<ExponentPoint> {
    check_rate(rate)?;
    let obj = |r: f64| Ok(expurgated_function(r, q, d) - r * rate);
    if rate == 0.0 {
        return Ok(ExponentPoint { rate, value: d.mean_distance(q), optimizer: Some(Optimizer::RhoInfinity) });
    }
    match expanding_max(obj, 1.0, EX_RHO_MAX)? {
        Some((rho, value)) => Ok(ExponentPoint { rate, value, optimizer: Some(Optimizer::Rho(rho)) }),
        None => {
            // plateau: relative change over the last decade below 1e-10
            let top = obj(EX_RHO_MAX)?;
            let below = obj(EX_RHO_MAX / 10.0)?;
            if (top - below).abs() <= 1e-10 * top.abs() {
                Ok(ExponentPoint { rate, value: top, optimizer: Some(Optimizer::RhoInfinity) })
            } else {
                Err(Error::BracketExhausted { rho_max: EX_RHO_MAX })
            }
        }
    }
}

pub fn e_ex(rate: f64, q: &InputDistribution, ch: &Channel) -> Result<ExponentPoint> {
    ch.check_dist(q)?;
    e_ex_with(rate, q, &BhattacharyyaMatrix::new(ch)?)
}

/// Sphere-packing exponent `sup_{rho>=0} E0(rho) - rho R` with `rho <= 10^4`.
pub fn e_sp(rate: f64, q: &InputDistribution, ch: &Channel) -> Result<ExponentPoint> {
    check_rate(rate)?;
    ch.check_dist(q)?;
    let obj = |r: f64| Ok(gallager_e0(r, q, ch) - r * rate);
    match expanding_max(obj, 0.0, SP_RHO_MAX)? {
        Some((rho, value)) => Ok(ExponentPoint { rate, value: value.max(0.0), optimizer: Some(Optimizer::Rho(rho)) }),
        None => Err(Error::Diverging { rho_max: SP_RHO_MAX }),
    }
}

/// Typical random-coding exponent `max{E_ex(2R) + R, E_rce(R)}` (i.i.d. ensemble).
pub fn e_trc(rate: f64, q: &InputDistribution, ch: &Channel) -> Result<ExponentPoint> {
    ch.check_dist(q)?;
    let capacity = mutual_information(ch, q)?;
    if !(rate >= 0.0 && rate < capacity) {
        return Err(Error::RateOutOfRange { rate, lo: 0.0, hi: capacity });
    }
    let d = BhattacharyyaMatrix::new(ch)?;
    let ex = e_ex_with(2.0 * rate, q, &d)?;
    let rce = e_rce(rate, q, ch, EnsembleKind::Iid)?;
    let ex_branch = ex.value + rate;
    if ex_branch > rce.value {
        Ok(ExponentPoint { rate, value: ex_branch, optimizer: ex.optimizer })
    } else {
        Ok(rce)
    }
}

/// `P(x,x') ∝ Q(x)Q(x') exp(-d(x,x') / temperature)`.
pub(crate) fn tilted_joint(q: &InputDistribution, d: &BhattacharyyaMatrix, temperature: f64) -> JointDistribution {
    let k = d.size();
    let mut w = Vec::with_capacity(k * k);
    for x in 0..k {
        for x2 in 0..k {
            w.push(q[x] * q[x2] * (-d.get(x, x2) / temperature).exp());
        }
    }
    JointDistribution::from_weights(k, w)
}

/// `D(P || Q x Q) + sum d P - R`, the joint-type objective of the TRC exponent.
pub fn trc_objective(p: &JointDistribution, q: &InputDistribution, d: &BhattacharyyaMatrix, rate: f64) -> Result<f64> {
    let div = kl_divergence(p, q, q)?;
    let k = d.size();
    let mut avg = 0.0;
    for x in 0..k {
        for x2 in 0..k {
            avg += p.get(x, x2) * d.get(x, x2);
        }
    }
    Ok(div + avg - rate)
}

/// Unconstrained minimizer `P0` of `D(P||QxQ) + sum d P`.
pub fn p_zero(q: &InputDistribution, d: &BhattacharyyaMatrix) -> JointDistribution {
    tilted_joint(q, d, 1.0)
}

/// Boundary minimizer `P*(lambda)`.
pub fn p_star(q: &InputDistribution, d: &BhattacharyyaMatrix, lambda: f64) -> JointDistribution {
    tilted_joint(q, d, 1.0 + lambda)
}

/// TRC exponent from its joint-type characterization
/// `min_{D(P||QxQ) <= 2R} D(P||QxQ) + sum d P - R`, solved through the KKT
/// optimizers `P0` and `P*(lambda*)`. Requires `0 < R < R_crit`.
pub fn e_trc_direct(rate: f64, q: &InputDistribution, ch: &Channel) -> Result<TrcSolution> {
    ch.check_dist(q)?;
    let r_crit = critical_rate(q, ch, EnsembleKind::Iid)?;
    if !(rate > 0.0 && rate < r_crit) {
        return Err(Error::RateOutOfRange { rate, lo: 0.0, hi: r_crit });
    }
    let d = BhattacharyyaMatrix::new(ch)?;
    trc_direct_with(rate, q, &d)
}

/// [`e_trc_direct`] without the rate-range check, on precomputed distances.
pub fn trc_direct_with(rate: f64, q: &InputDistribution, d: &BhattacharyyaMatrix) -> Result<TrcSolution> {
    let radius = 2.0 * rate;
    let p0 = p_zero(q, d);
    let d0 = kl_divergence(&p0, q, q)?;
    if d0 <= radius {
        let exponent = trc_objective(&p0, q, d, rate)?;
        return Ok(TrcSolution {
            rate,
            exponent,
            branch: TrcBranch::InteriorP0,
            lambda_star: None,
            p_opt: p0,
            divergence: d0,
        });
    }

    let div_at = |lambda: f64| kl_divergence(&p_star(q, d, lambda), q, q);
    let mut lo = 1e-9;
    let mut hi = 1e3;
    let mut f_lo = div_at(lo)? - radius;
    let mut f_hi = div_at(hi)? - radius;
    if f_lo <= 0.0 {
        lo = 0.0;
        f_lo = d0 - radius;
    }
    while f_hi > 0.0 {
        if hi >= 1e9 {
            return Err(Error::BisectionFailure(format!("D(P*) still above 2R = {radius} at lambda = {hi}")));
        }
        lo = hi;
        f_lo = f_hi;
        hi *= 10.0;
        f_hi = div_at(hi)? - radius;
    }
    if f_lo < f_hi {
        return Err(Error::BisectionFailure("divergence not decreasing in lambda".into()));
    }
    let mut lambda = hi;
    let mut f_mid = f_hi;
    for _ in 0..400 {
        if f_mid.abs() < LAMBDA_TOLERANCE * 1e-2 {
            break;
        }
        lambda = if lo > 0.0 && hi / lo > 4.0 { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        if lambda <= lo || lambda >= hi {
            break;
        }
        f_mid = div_at(lambda)? - radius;
        if f_mid > f_lo || f_mid < f_hi {
            return Err(Error::BisectionFailure(format!("divergence not monotone near lambda = {lambda}")));
        }
        if f_mid > 0.0 {
            lo = lambda;
            f_lo = f_mid;
        } else {
            hi = lambda;
            f_hi = f_mid;
        }
    }
    let p = p_star(q, d, lambda);
    let divergence = kl_divergence(&p, q, q)?;
    if (divergence - radius).abs() > LAMBDA_TOLERANCE {
        return Err(Error::BisectionFailure(format!(
            "residual {} above tolerance at lambda = {lambda}",
            (divergence - radius).abs()
        )));
    }
    let exponent = trc_objective(&p, q, d, rate)?;
    Ok(TrcSolution {
        rate,
        exponent,
        branch: TrcBranch::BoundaryPStar,
        lambda_star: Some(lambda),
        p_opt: p,
        divergence,
    })
}

/// Cutoff rate via the exponents module; equal to `E0(1)`.
pub fn r0(q: &InputDistribution, ch: &Channel) -> Result<f64> {
    cutoff_rate(ch, q)
}
