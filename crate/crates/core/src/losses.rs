//! Normal distribution utilities and the two experiment generators: a
//! linear loss of two Gaussian samples, and systematic credit losses of two
//! counterparties in the one-factor Vasicek model.

use alloc::format;
use alloc::vec::Vec;

use crate::domain::{Instance, LossMatrix, ProbabilityVector};
use crate::math;
use crate::rng::{seeded, standard_normal};
use crate::{Error, Result};

/// `Phi(x) = erfc(-x / sqrt 2) / 2`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * math::erfc(-x * core::f64::consts::FRAC_1_SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    math::exp(-0.5 * x * x) / math::sqrt(2.0 * core::f64::consts::PI)
}

/// Inverse of [`normal_cdf`]: Wichura's AS 241 rational approximation
/// followed by one Newton step.
pub fn normal_inv_cdf(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::DomainError(format!(
            "normal quantile needs p in (0, 1), got {p}"
        )));
    }
    let x = as241(p);
    Ok(x - (normal_cdf(x) - p) / normal_pdf(x))
}

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
}

fn as241(p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let a = [
            3.387_132_872_796_366_5,
            1.331_416_678_917_843_8e2,
            1.971_590_950_306_551_3e3,
            1.373_169_376_550_946e4,
            4.592_195_393_154_987e4,
            6.726_577_092_700_87e4,
            3.343_057_558_358_813e4,
            2.509_080_928_730_122_7e3,
        ];
        let b = [
            1.0,
            4.231_333_070_160_091e1,
            6.871_870_074_920_579e2,
            5.394_196_021_424_751e3,
            2.121_379_430_158_659_7e4,
            3.930_789_580_009_271e4,
            2.872_908_573_572_194_3e4,
            5.226_495_278_852_545e3,
        ];
        return q * poly(&a, r) / poly(&b, r);
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    let r = math::sqrt(-math::ln(r));
    let x = if r <= 5.0 {
        let r = r - 1.6;
        let c = [
            1.423_437_110_749_683_5,
            4.630_337_846_156_546,
            5.769_497_221_460_691,
            3.647_848_324_763_204_5,
            1.270_458_252_452_368_4,
            2.417_807_251_774_506e-1,
            2.272_384_498_926_918_4e-2,
            7.745_450_142_783_414e-4,
        ];
        let d = [
            1.0,
            2.053_191_626_637_759,
            1.676_384_830_183_803_8,
            6.897_673_349_851e-1,
            1.481_039_764_274_800_8e-1,
            1.519_866_656_361_645_7e-2,
            5.475_938_084_995_345e-4,
            1.050_750_071_644_416_9e-9,
        ];
        poly(&c, r) / poly(&d, r)
    } else {
        let r = r - 5.0;
        let e = [
            6.657_904_643_501_103,
            5.463_784_911_164_114,
            1.784_826_539_917_291_3,
            2.965_605_718_285_048_7e-1,
            2.653_218_952_657_612_4e-2,
            1.242_660_947_388_078_4e-3,
            2.711_555_568_743_487_6e-5,
            2.010_334_399_292_288_1e-7,
        ];
        let f = [
            1.0,
            5.998_322_065_558_88e-1,
            1.369_298_809_227_358e-1,
            1.487_536_129_085_061_5e-2,
            7.868_691_311_456_133e-4,
            1.846_318_317_510_054_8e-5,
            1.421_511_758_316_446e-7,
            2.044_263_103_389_939_7e-15,
        ];
        poly(&e, r) / poly(&f, r)
    };
    if q < 0.0 {
        -x
    } else {
        x
    }
}

/// Parameters of the two-counterparty credit loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CcrParams {
    pub pd1: f64,
    pub pd2: f64,
    pub rho1: f64,
    pub rho2: f64,
    /// Correlation of the two exposures.
    pub r: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
}

impl CcrParams {
    /// PD 2%, loading 0.2, exposure correlation 0.5, exposures N(±100, 100²).
    pub fn reference() -> Self {
        Self {
            pd1: 0.02,
            pd2: 0.02,
            rho1: 0.2,
            rho2: 0.2,
            r: 0.5,
            mu1: 100.0,
            mu2: -100.0,
            sigma1: 100.0,
            sigma2: 100.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |what: &str, v: f64| Err(Error::InvalidParams(format!("{what} = {v}")));
        for (name, pd) in [("pd1", self.pd1), ("pd2", self.pd2)] {
            if !(pd > 0.0 && pd < 1.0) {
                return fail(name, pd);
            }
        }
        for (name, rho) in [("rho1", self.rho1), ("rho2", self.rho2)] {
            if !(0.0..1.0).contains(&rho) {
                return fail(name, rho);
            }
        }
        if !(self.r > -1.0 && self.r < 1.0) {
            return fail("r", self.r);
        }
        for (name, s) in [("sigma1", self.sigma1), ("sigma2", self.sigma2)] {
            if !(s > 0.0 && s.is_finite()) {
                return fail(name, s);
            }
        }
        if !self.mu1.is_finite() || !self.mu2.is_finite() {
            return fail("exposure mean", if self.mu1.is_finite() { self.mu2 } else { self.mu1 });
        }
        Ok(())
    }
}

/// Conditional default probability given the systematic factor `x`.
fn conditional_pd(pd: f64, rho: f64, x: f64) -> f64 {
    let threshold = normal_inv_cdf(pd).expect("validated default probability");
    normal_cdf((threshold - math::sqrt(rho) * x) / math::sqrt(1.0 - rho))
}

/// `sum_k max(y_k, 0) Phi((Phi^{-1}(PD_k) - sqrt(rho_k) x) / sqrt(1 - rho_k))`.
pub fn vasicek_ccr_loss(x: f64, y1: f64, y2: f64, params: &CcrParams) -> f64 {
    y1.max(0.0) * conditional_pd(params.pd1, params.rho1, x)
        + y2.max(0.0) * conditional_pd(params.pd2, params.rho2, x)
}

/// A generated instance together with the sampled support points.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledInstance<Y> {
    pub instance: Instance,
    pub x: Vec<f64>,
    pub y: Vec<Y>,
}

/// `L = X + Y` on `n_x` and `n_y` standard normal draws with equal weights.
/// All `x` draws come first, then the `y` draws, from stream 0 of `seed`.
pub fn build_gaussian_linear_instance(
    n_x: usize,
    n_y: usize,
    seed: u64,
) -> Result<SampledInstance<f64>> {
    sample_gaussian_linear_instance(n_x, n_y, &mut seeded(seed))
}

/// Draws `x` then `y` from `rng`, uniform weights, `L = x + y`.
pub fn sample_gaussian_linear_instance<R: rand::Rng + ?Sized>(
    n_x: usize,
    n_y: usize,
    rng: &mut R,
) -> Result<SampledInstance<f64>> {
    let x: Vec<f64> = (0..n_x).map(|_| standard_normal(rng)).collect();
    let y: Vec<f64> = (0..n_y).map(|_| standard_normal(rng)).collect();
    let loss = LossMatrix::from_fn(n_x, n_y, |i, j| x[i] + y[j])?;
    let instance = Instance::new(
        ProbabilityVector::uniform(n_x)?,
        ProbabilityVector::uniform(n_y)?,
        loss,
    )?;
    Ok(SampledInstance { instance, x, y })
}

/// Credit-loss instance on `n` factor draws and `n` exposure pairs.
pub fn build_ccr_instance(
    params: &CcrParams,
    n: usize,
    seed: u64,
) -> Result<SampledInstance<[f64; 2]>> {
    params.validate()?;
    let mut rng = seeded(seed);
    sample_ccr_instance(params, n, &mut rng)
}

/// As [`build_ccr_instance`] but drawing from a caller-owned generator.
pub fn sample_ccr_instance<R: rand::Rng + ?Sized>(
    params: &CcrParams,
    n: usize,
    rng: &mut R,
) -> Result<SampledInstance<[f64; 2]>> {
    params.validate()?;
    let x: Vec<f64> = (0..n).map(|_| standard_normal(rng)).collect();
    let tail = math::sqrt(1.0 - params.r * params.r);
    let y: Vec<[f64; 2]> = (0..n)
        .map(|_| {
            let z1 = standard_normal(rng);
            let z2 = standard_normal(rng);
            [
                params.mu1 + params.sigma1 * z1,
                params.mu2 + params.sigma2 * (params.r * z1 + tail * z2),
            ]
        })
        .collect();
    let loss = LossMatrix::from_fn(n, n, |i, j| vasicek_ccr_loss(x[i], y[j][0], y[j][1], params))?;
    let instance = Instance::new(
        ProbabilityVector::uniform(n)?,
        ProbabilityVector::uniform(n)?,
        loss,
    )?;
    Ok(SampledInstance { instance, x, y })
}
