//! Reference limit laws for the normalized exponent: the standard Gaussian and
//! the minimum of `L` independent standard normals (survival function `Q(t)^L`),
//! plus the Kolmogorov distance used to compare samples against them.

use crate::error::{Error, Result};

/// Quadrature is truncated to `[-QUAD_LIMIT, QUAD_LIMIT]`.
pub const QUAD_LIMIT: f64 = 12.0;
const QUAD_TOLERANCE: f64 = 1e-12;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
pub fn gauss_pdf(t: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * t * t).exp()
}

/// Gaussian tail `Q(t) = P[N(0,1) >= t]`.
pub fn gauss_q(t: f64) -> f64 {
    0.5 * libm::erfc(t / std::f64::consts::SQRT_2)
}

/// `P[min(X_1..X_L) <= t] = 1 - Q(t)^L`.
pub fn min_gauss_cdf(l: u32, t: f64) -> f64 {
    if l == 1 {
        return 1.0 - gauss_q(t);
    }
    let q = gauss_q(t);
    if q > 0.5 {
        // 1 - Q^L loses precision as Q -> 1; ln Q(t) = ln(1 - Q(-t))
        -(l as f64 * (-gauss_q(-t)).ln_1p()).exp_m1()
    } else {
        1.0 - q.powi(l as i32)
    }
}

/// Density `L phi(t) Q(t)^(L-1)` of the minimum of `L` standard normals.
pub fn min_gauss_pdf(l: u32, t: f64) -> f64 {
    l as f64 * gauss_pdf(t) * gauss_q(t).powi(l as i32 - 1)
}

// 15-point Kronrod nodes/weights with the embedded 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        kron += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive Gauss-Kronrod (7, 15) integration with absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> Result<f64> {
        let (v, err) = gauss_kronrod(f, a, b);
        // the error estimate cannot fall below rounding noise on |v|
        if err <= tol.max(64.0 * f64::EPSILON * v.abs()) || (b - a) < 1e-12 {
            return Ok(v);
        }
        if depth == 0 {
            return Err(Error::QuadratureFailure);
        }
        let m = 0.5 * (a + b);
        Ok(rec(f, a, m, tol / 2.0, depth - 1)? + rec(f, m, b, tol / 2.0, depth - 1)?)
    }
    rec(&f, a, b, tol, 40)
}

/// Mean and variance of the minimum of `L` independent standard normals.
pub fn min_gauss_moments(l: u32) -> Result<(f64, f64)> {
    if l == 0 {
        return Err(Error::InvalidDistribution("L must be >= 1".into()));
    }
    let mean = integrate(|t| t * min_gauss_pdf(l, t), -QUAD_LIMIT, QUAD_LIMIT, QUAD_TOLERANCE)?;
    let var = integrate(|t| (t - mean).powi(2) * min_gauss_pdf(l, t), -QUAD_LIMIT, QUAD_LIMIT, QUAD_TOLERANCE)?;
    Ok((mean, var))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RefKind {
    StandardGaussian,
    MinOfGaussians(u32),
    /// Minimum of `L` standard normals shifted and scaled to mean 0, variance 1.
    NormalizedMinOfGaussians(u32),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceDistribution {
    kind: RefKind,
    mean: f64,
    variance: f64,
}

impl ReferenceDistribution {
    pub fn standard_gaussian() -> Self {
        ReferenceDistribution { kind: RefKind::StandardGaussian, mean: 0.0, variance: 1.0 }
    }

    pub fn min_of_gaussians(l: u32) -> Result<Self> {
        let (mean, variance) = min_gauss_moments(l)?;
        Ok(ReferenceDistribution { kind: RefKind::MinOfGaussians(l), mean, variance })
    }

    pub fn normalized_min_of_gaussians(l: u32) -> Result<Self> {
        let (mean, variance) = min_gauss_moments(l)?;
        Ok(ReferenceDistribution { kind: RefKind::NormalizedMinOfGaussians(l), mean, variance })
    }

    pub fn kind(&self) -> RefKind {
        self.kind
    }

    /// Moments of the underlying (unnormalized) minimum; `(0, 1)` for the Gaussian.
    pub fn raw_moments(&self) -> (f64, f64) {
        (self.mean, self.variance)
    }

    /// Moments of the distribution itself.
    pub fn moments(&self) -> (f64, f64) {
        match self.kind {
            RefKind::NormalizedMinOfGaussians(_) => (0.0, 1.0),
            _ => (self.mean, self.variance),
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        match self.kind {
            RefKind::StandardGaussian => 1.0 - gauss_q(t),
            RefKind::MinOfGaussians(l) => min_gauss_cdf(l, t),
            RefKind::NormalizedMinOfGaussians(l) => min_gauss_cdf(l, self.mean + t * self.variance.sqrt()),
        }
    }

    pub fn pdf(&self, t: f64) -> f64 {
        match self.kind {
            RefKind::StandardGaussian => gauss_pdf(t),
            RefKind::MinOfGaussians(l) => min_gauss_pdf(l, t),
            RefKind::NormalizedMinOfGaussians(l) => {
                let sd = self.variance.sqrt();
                sd * min_gauss_pdf(l, self.mean + t * sd)
            }
        }
    }
}

/// `sup_x |F_m(x) - F(x)|` for the right-continuous empirical CDF of `samples`,
/// checking both sides of every jump.
pub fn kolmogorov_distance(samples: &[f64], reference: &ReferenceDistribution) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples { got: samples.len(), needed: 2 });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    let mut sup = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = reference.cdf(x);
        sup = sup.max((i + 1) as f64 / m - f).max(f - i as f64 / m);
    }
    Ok(sup)
}
