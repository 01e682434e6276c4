//! Spectral functions and their discretization.
//!
//! A spectral function `sigma` on `[0, 1)` is nonnegative, nondecreasing,
//! right-continuous and integrates to one. Viewing it as the distribution
//! function of a measure `gamma`, the probability measure `Gamma` with
//! `dGamma = (1 - u) dgamma` turns the spectral risk measure into a mixture
//! of expected shortfalls: `R = z0 * E[L] + sum_k w_k ES_{u_k}(L)`, where
//! `z0 = sigma(0)` is the atom of `Gamma` at zero.
//!
//! [`SpectralGrid`] is that mixture with finitely many levels.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

/// Tolerance on `integral of sigma == 1`.
pub const SIGMA_NORMALIZATION_TOL: f64 = 1e-8;
/// Tolerance on `z0 + sum w_k == 1` for a grid.
pub const GRID_MASS_TOL: f64 = 1e-10;
/// Largest level produced for spectra whose `gamma` density blows up at 1.
pub const U_MAX: f64 = 1.0 - 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum SpectralFunction {
    /// `sigma = (1 - alpha)^{-1} 1_{[alpha, 1)}`.
    ExpectedShortfall { alpha: f64 },
    /// `sigma = levels[k]` on `[breakpoints[k-1], breakpoints[k])`, with
    /// `breakpoints` strictly inside `(0, 1)` and one more level than
    /// breakpoints.
    PiecewiseConstant {
        breakpoints: Vec<f64>,
        levels: Vec<f64>,
    },
    /// `sigma(u) = 3 (1 - sqrt(1 - u))`.
    PowerSqrt,
    /// Linear interpolation through `(u_i, sigma_i)`, `u` running from 0 to 1.
    Table { u: Vec<f64>, sigma: Vec<f64> },
}

impl SpectralFunction {
    pub fn expected_shortfall(alpha: f64) -> Result<Self> {
        let s = Self::ExpectedShortfall { alpha };
        s.validate()?;
        Ok(s)
    }

    /// `sigma == 1`: the plain expectation.
    pub fn flat() -> Self {
        Self::PiecewiseConstant {
            breakpoints: Vec::new(),
            levels: alloc::vec![1.0],
        }
    }

    pub fn piecewise_constant(breakpoints: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        let s = Self::PiecewiseConstant { breakpoints, levels };
        s.validate()?;
        Ok(s)
    }

    pub fn power_sqrt() -> Self {
        Self::PowerSqrt
    }

    pub fn table(u: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        let s = Self::Table { u, sigma };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: alloc::string::String| Err(Error::InvalidSpectrum(msg));
        match self {
            Self::ExpectedShortfall { alpha } => {
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return bad(format!("expected shortfall level {alpha} outside (0, 1)"));
                }
            }
            Self::PiecewiseConstant { breakpoints, levels } => {
                if levels.len() != breakpoints.len() + 1 {
                    return bad(format!(
                        "{} levels for {} breakpoints",
                        levels.len(),
                        breakpoints.len()
                    ));
                }
                let mut prev = 0.0;
                for &b in breakpoints {
                    if !(b > prev && b < 1.0) {
                        return bad(format!("breakpoint {b} out of order or outside (0, 1)"));
                    }
                    prev = b;
                }
                check_values(levels)?;
            }
            Self::PowerSqrt => {}
            Self::Table { u, sigma } => {
                if u.len() < 2 || u.len() != sigma.len() {
                    return bad(format!("table needs matching knots, got {} and {}", u.len(), sigma.len()));
                }
                if u[0] != 0.0 || u[u.len() - 1] != 1.0 {
                    return bad("table must span [0, 1]".to_string());
                }
                if u.windows(2).any(|w| !(w[1] > w[0])) {
                    return bad("table knots must increase strictly".to_string());
                }
                check_values(sigma)?;
            }
        }
        let total = self.integral();
        if (total - 1.0).abs() > SIGMA_NORMALIZATION_TOL {
            return bad(format!("sigma integrates to {total}, not 1"));
        }
        Ok(())
    }

    /// `sigma(u)` for `u` in `[0, 1)`.
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Self::ExpectedShortfall { alpha } => {
                if u >= *alpha {
                    1.0 / (1.0 - alpha)
                } else {
                    0.0
                }
            }
            Self::PiecewiseConstant { breakpoints, levels } => {
                let k = breakpoints.partition_point(|&b| b <= u);
                levels[k]
            }
            Self::PowerSqrt => 3.0 * (1.0 - math::sqrt((1.0 - u).max(0.0))),
            Self::Table { u: knots, sigma } => {
                let k = knots.partition_point(|&x| x <= u).clamp(1, knots.len() - 1);
                let (u0, u1) = (knots[k - 1], knots[k]);
                let t = ((u - u0) / (u1 - u0)).clamp(0.0, 1.0);
                sigma[k - 1] + t * (sigma[k] - sigma[k - 1])
            }
        }
    }

    /// `int_0^1 sigma`.
    pub fn integral(&self) -> f64 {
        self.partial_integral(1.0)
    }

    /// `int_0^u sigma`.
    pub fn partial_integral(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match self {
            Self::ExpectedShortfall { alpha } => (u - alpha).max(0.0) / (1.0 - alpha),
            Self::PiecewiseConstant { breakpoints, levels } => {
                let mut total = 0.0;
                let mut left = 0.0;
                for (k, &level) in levels.iter().enumerate() {
                    let right = breakpoints.get(k).copied().unwrap_or(1.0);
                    if u <= left {
                        break;
                    }
                    total += level * (right.min(u) - left);
                    left = right;
                }
                total
            }
            // 3u - 2 (1 - (1-u)^{3/2})
            Self::PowerSqrt => 3.0 * u - 2.0 * (1.0 - math::powf(1.0 - u, 1.5)),
            Self::Table { u: knots, sigma } => {
                let mut total = 0.0;
                for k in 1..knots.len() {
                    let (a, b) = (knots[k - 1], knots[k]);
                    if u <= a {
                        break;
                    }
                    let right = b.min(u);
                    total += 0.5 * (sigma[k - 1] + self.eval_table_at(k, right)) * (right - a);
                }
                total
            }
        }
    }

    fn eval_table_at(&self, k: usize, x: f64) -> f64 {
        match self {
            Self::Table { u, sigma } => {
                let t = (x - u[k - 1]) / (u[k] - u[k - 1]);
                sigma[k - 1] + t * (sigma[k] - sigma[k - 1])
            }
            _ => self.eval(x),
        }
    }

    /// `Gamma([0, u]) = (1 - u) sigma(u) + int_0^u sigma`.
    pub fn gamma_cdf(&self, u: f64) -> f64 {
        if u >= 1.0 {
            return 1.0;
        }
        (1.0 - u) * self.eval(u) + self.partial_integral(u)
    }

    /// Atom of `Gamma` at zero.
    pub fn z0(&self) -> f64 {
        self.eval(0.0)
    }

    /// `sup sigma`, finite for every supported kind.
    pub fn sup_norm(&self) -> f64 {
        match self {
            Self::ExpectedShortfall { alpha } => 1.0 / (1.0 - alpha),
            Self::PiecewiseConstant { levels, .. } => levels[levels.len() - 1],
            Self::PowerSqrt => 3.0,
            Self::Table { sigma, .. } => sigma[sigma.len() - 1],
        }
    }

    /// `(int_0^1 sigma^p)^{1/p}`; `p = inf` gives [`Self::sup_norm`].
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p == f64::INFINITY {
            return self.sup_norm();
        }
        let total = match self {
            Self::ExpectedShortfall { alpha } => {
                math::powf(1.0 / (1.0 - alpha), p) * (1.0 - alpha)
            }
            Self::PiecewiseConstant { breakpoints, levels } => {
                let mut left = 0.0;
                let mut total = 0.0;
                for (k, &level) in levels.iter().enumerate() {
                    let right = breakpoints.get(k).copied().unwrap_or(1.0);
                    total += math::powf(level, p) * (right - left);
                    left = right;
                }
                total
            }
            Self::PowerSqrt => simpson(|u| math::powf(self.eval(u), p), 0.0, 1.0, 4096),
            Self::Table { u, .. } => u
                .windows(2)
                .map(|w| simpson(|x| math::powf(self.eval(x), p), w[0], w[1], 256))
                .sum(),
        };
        math::powf(total, 1.0 / p)
    }
}

fn check_values(values: &[f64]) -> Result<()> {
    for (k, &v) in values.iter().enumerate() {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidSpectrum(format!("sigma value {v} at index {k}")));
        }
        if k > 0 && v < values[k - 1] {
            return Err(Error::InvalidSpectrum(format!(
                "sigma decreases at index {k}"
            )));
        }
    }
    Ok(())
}

/// Composite Simpson rule with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Finite mixture `z0 * E + sum_k w_k ES_{u_k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGrid {
    z0: f64,
    levels: Vec<f64>,
    weights: Vec<f64>,
    gamma_weights: Vec<f64>,
}

impl SpectralGrid {
    pub fn new(z0: f64, levels: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let bad = |msg: alloc::string::String| Err(Error::InvalidSpectrum(msg));
        if levels.len() != weights.len() {
            return bad(format!("{} levels but {} weights", levels.len(), weights.len()));
        }
        if !(z0 >= 0.0) || !z0.is_finite() {
            return bad(format!("atom at zero is {z0}"));
        }
        let mut prev = 0.0;
        for (&u, &w) in levels.iter().zip(&weights) {
            if !(u > prev && u < 1.0) {
                return bad(format!("level {u} out of order or outside (0, 1)"));
            }
            if !(w > 0.0) || !w.is_finite() {
                return bad(format!("weight {w} at level {u} is not positive"));
            }
            prev = u;
        }
        let mass = z0 + math::sum(weights.iter().copied());
        if (mass - 1.0).abs() > GRID_MASS_TOL {
            return bad(format!("grid mass is {mass}, not 1"));
        }
        let gamma_weights = levels
            .iter()
            .zip(&weights)
            .map(|(&u, &w)| w / (1.0 - u))
            .collect();
        Ok(Self {
            z0,
            levels,
            weights,
            gamma_weights,
        })
    }

    /// The single level `alpha` with weight one.
    pub fn expected_shortfall(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::AlphaOutOfRange(alpha));
        }
        Self::new(0.0, alloc::vec![alpha], alloc::vec![1.0])
    }

    /// All mass at zero: the expectation.
    pub fn flat() -> Self {
        Self {
            z0: 1.0,
            levels: Vec::new(),
            weights: Vec::new(),
            gamma_weights: Vec::new(),
        }
    }

    pub fn z0(&self) -> f64 {
        self.z0
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Masses `g_k = w_k / (1 - u_k)` of `gamma` at the levels.
    pub fn gamma_weights(&self) -> &[f64] {
        &self.gamma_weights
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// `z0 * f(0) + sum_k w_k f(u_k)`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.z0 * f(0.0)
            + math::sum(self.levels.iter().zip(&self.weights).map(|(&u, &w)| w * f(u)))
    }

    /// The step spectral function this grid represents exactly.
    pub fn implied_sigma(&self, u: f64) -> f64 {
        self.z0
            + math::sum(
                self.levels
                    .iter()
                    .zip(&self.gamma_weights)
                    .filter(|(&l, _)| l <= u)
                    .map(|(_, &g)| g),
            )
    }

    /// `L^p` norm of [`Self::implied_sigma`]; `p = inf` allowed.
    pub fn sigma_norm(&self, p: f64) -> f64 {
        let mut value = self.z0;
        if p == f64::INFINITY {
            return value + math::sum(self.gamma_weights.iter().copied());
        }
        let mut left = 0.0;
        let mut total = 0.0;
        for (&u, &g) in self.levels.iter().zip(&self.gamma_weights) {
            total += math::powf(value, p) * (u - left);
            value += g;
            left = u;
        }
        total += math::powf(value, p) * (1.0 - left);
        math::powf(total, 1.0 / p)
    }
}

/// Finite grid for `sigma`.
///
/// Expected shortfall and piecewise-constant spectra are represented
/// exactly and ignore `k`. Other kinds place `z0 = sigma(0)` at zero and
/// split the rest of `Gamma` into `k` bins of equal mass, each represented
/// by the quantile at its probability midpoint.
pub fn discretize_spectrum(sigma: &SpectralFunction, k: usize) -> Result<SpectralGrid> {
    if k == 0 {
        return Err(Error::InvalidSpectrum("grid needs at least one level".to_string()));
    }
    sigma.validate()?;
    match sigma {
        SpectralFunction::ExpectedShortfall { alpha } => SpectralGrid::expected_shortfall(*alpha),
        SpectralFunction::PiecewiseConstant { breakpoints, levels } => {
            let mut us = Vec::new();
            let mut ws = Vec::new();
            for (i, &b) in breakpoints.iter().enumerate() {
                let jump = levels[i + 1] - levels[i];
                if jump > 0.0 {
                    us.push(b);
                    ws.push((1.0 - b) * jump);
                }
            }
            renormalized(levels[0], us, ws)
        }
        SpectralFunction::PowerSqrt | SpectralFunction::Table { .. } => {
            let z0 = sigma.z0();
            if 1.0 - z0 <= GRID_MASS_TOL {
                return Ok(SpectralGrid::flat());
            }
            let mass = (1.0 - z0) / k as f64;
            let mut us: Vec<f64> = Vec::with_capacity(k);
            let mut ws: Vec<f64> = Vec::with_capacity(k);
            for bin in 0..k {
                let p = (bin as f64 + 0.5) / k as f64;
                let u = match sigma {
                    // 1 - Gamma~([0, u]) = (1 - u)^{3/2}
                    SpectralFunction::PowerSqrt => 1.0 - math::powf(1.0 - p, 2.0 / 3.0),
                    _ => bisect_quantile(|u| (sigma.gamma_cdf(u) - z0) / (1.0 - z0), p),
                }
                .min(U_MAX);
                match us.last() {
                    Some(&last) if u <= last => {
                        let n = ws.len();
                        ws[n - 1] += mass;
                    }
                    _ => {
                        us.push(u);
                        ws.push(mass);
                    }
                }
            }
            renormalized(z0, us, ws)
        }
    }
}

/// Absorbs round-off in the total so the grid passes its mass check.
fn renormalized(z0: f64, levels: Vec<f64>, mut weights: Vec<f64>) -> Result<SpectralGrid> {
    let total = z0 + math::sum(weights.iter().copied());
    if (total - 1.0).abs() <= 1e-8 && !weights.is_empty() {
        let n = weights.len();
        weights[n - 1] += 1.0 - total;
    }
    SpectralGrid::new(z0, levels, weights)
}

/// Smallest `u` in `[0, 1]` with `cdf(u) >= p`, to double precision.
fn bisect_quantile(cdf: impl Fn(f64) -> f64, p: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cdf(mid) >= p {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
