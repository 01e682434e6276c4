//! Instance and solution files.
//!
//! An instance is `{"mu": [...], "nu": [...], "loss": [[...], ...]}` with an
//! optional `"sigma"` object. Solutions carry the coupling, the tail
//! measures and the dual certificate, so [`SolutionJson::verify`] can check
//! them again against the instance.

use std::fs;
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use riskbound_core::bounds::{DualCertificate, GapReport};
use riskbound_core::{
    verify_duality, Coupling, Instance, LossMatrix, MesSolution, MspSolution, ProbabilityVector,
    SpectralGrid,
};

use crate::error::{AppError, AppResult};
use crate::sigma::SigmaJson;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceJson {
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
    pub loss: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<SigmaJson>,
}

impl InstanceJson {
    pub fn to_instance(&self) -> AppResult<Instance> {
        Ok(Instance::new(
            ProbabilityVector::new(self.mu.clone())?,
            ProbabilityVector::new(self.nu.clone())?,
            LossMatrix::from_rows(&self.loss)?,
        )?)
    }

    pub fn from_instance(instance: &Instance) -> Self {
        Self {
            mu: instance.mu.weights().to_vec(),
            nu: instance.nu.weights().to_vec(),
            loss: instance.loss.to_rows(),
            sigma: None,
        }
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> AppResult<T> {
    let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| AppError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> AppResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| AppError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|e| AppError::io(path, e))
}

fn rows(flat: &[f64], cols: usize) -> Vec<Vec<f64>> {
    flat.chunks(cols.max(1)).map(<[f64]>::to_vec).collect()
}

fn flatten(rows: &[Vec<f64>]) -> Vec<f64> {
    rows.iter().flatten().copied().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateJson {
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub beta: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rho: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridJson {
    pub z0: f64,
    pub levels: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GridJson {
    pub fn from_grid(g: &SpectralGrid) -> Self {
        Self {
            z0: g.z0(),
            levels: g.levels().to_vec(),
            weights: g.weights().to_vec(),
        }
    }

    pub fn to_grid(&self) -> AppResult<SpectralGrid> {
        Ok(SpectralGrid::new(self.z0, self.levels.clone(), self.weights.clone())?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SolutionJson {
    Mes {
        value: f64,
        gap: f64,
        iterations: usize,
        alpha: f64,
        coupling: Vec<Vec<f64>>,
        theta: Vec<Vec<f64>>,
        certificate: CertificateJson,
    },
    Msp {
        value: f64,
        gap: f64,
        iterations: usize,
        grid: GridJson,
        coupling: Vec<Vec<f64>>,
        thetas: Vec<Vec<Vec<f64>>>,
        betas: Vec<f64>,
        certificate: CertificateJson,
    },
}

impl SolutionJson {
    pub fn from_mes(s: &MesSolution) -> Self {
        let m = s.coupling.cols();
        Self::Mes {
            value: s.value,
            gap: s.gap,
            iterations: s.iterations,
            alpha: s.alpha,
            coupling: rows(s.coupling.matrix(), m),
            theta: rows(&s.theta, m),
            certificate: CertificateJson {
                phi: s.certificate.phi.clone(),
                psi: s.certificate.psi.clone(),
                beta: s.certificate.beta.clone(),
                rho: rows(&s.certificate.rho, m),
            },
        }
    }

    pub fn from_msp(s: &MspSolution) -> Self {
        let m = s.coupling.cols();
        Self::Msp {
            value: s.value,
            gap: s.gap,
            iterations: s.iterations,
            grid: GridJson::from_grid(&s.grid),
            coupling: rows(s.coupling.matrix(), m),
            thetas: s.thetas.iter().map(|t| rows(t, m)).collect(),
            betas: s.betas.clone(),
            certificate: CertificateJson {
                phi: s.certificate.phi.clone(),
                psi: s.certificate.psi.clone(),
                beta: s.certificate.beta.clone(),
                rho: Vec::new(),
            },
        }
    }

    pub fn value(&self) -> f64 {
        match self {
            Self::Mes { value, .. } | Self::Msp { value, .. } => *value,
        }
    }

    /// Rebuilds the solution against `instance` and checks it with
    /// [`verify_duality`].
    pub fn verify(&self, instance: &Instance) -> AppResult<GapReport> {
        let (mu, nu, loss) = (&instance.mu, &instance.nu, &instance.loss);
        let cert = |c: &CertificateJson| DualCertificate {
            phi: c.phi.clone(),
            psi: c.psi.clone(),
            beta: c.beta.clone(),
            rho: flatten(&c.rho),
        };
        let report = match self {
            Self::Mes {
                value,
                gap,
                iterations,
                alpha,
                coupling,
                theta,
                certificate,
            } => {
                let sol = MesSolution {
                    value: *value,
                    alpha: *alpha,
                    coupling: Coupling::new(mu, nu, flatten(coupling))?,
                    theta: flatten(theta),
                    certificate: cert(certificate),
                    gap: *gap,
                    iterations: *iterations,
                };
                verify_duality(&sol, mu, nu, loss)?
            }
            Self::Msp {
                value,
                gap,
                iterations,
                grid,
                coupling,
                thetas,
                betas,
                certificate,
            } => {
                let sol = MspSolution {
                    value: *value,
                    grid: grid.to_grid()?,
                    coupling: Coupling::new(mu, nu, flatten(coupling))?,
                    thetas: thetas.iter().map(|t| flatten(t)).collect(),
                    betas: betas.clone(),
                    certificate: cert(certificate),
                    gap: *gap,
                    iterations: *iterations,
                };
                verify_duality(&sol, mu, nu, loss)?
            }
        };
        let recorded = self.value();
        if (report.primal - recorded).abs() > 1e-7 * recorded.abs().max(1.0) {
            return Err(AppError::Check(format!(
                "recorded value {recorded} but the coupling gives {}",
                report.primal
            )));
        }
        Ok(report)
    }
}
