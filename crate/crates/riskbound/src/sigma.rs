//! Spectral functions on the command line and in JSON.
//!
//! Command line forms:
//!
//! - `es:0.9`
//! - `flat`
//! - `power-sqrt`
//! - `pc:0.5,0.9/0.2,1.0,3.0` (breakpoints, then one more level)
//! - `table:0:0,0.5:1,1:2` (`u:sigma` knots)

use serde::{Deserialize, Serialize};

use riskbound_core::SpectralFunction;

use crate::error::{AppError, AppResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SigmaJson {
    Es { alpha: f64 },
    Flat,
    PowerSqrt,
    PiecewiseConstant { breakpoints: Vec<f64>, levels: Vec<f64> },
    Table { u: Vec<f64>, sigma: Vec<f64> },
}

impl SigmaJson {
    pub fn to_function(&self) -> AppResult<SpectralFunction> {
        Ok(match self {
            Self::Es { alpha } => SpectralFunction::expected_shortfall(*alpha)?,
            Self::Flat => SpectralFunction::flat(),
            Self::PowerSqrt => SpectralFunction::power_sqrt(),
            Self::PiecewiseConstant { breakpoints, levels } => {
                SpectralFunction::piecewise_constant(breakpoints.clone(), levels.clone())?
            }
            Self::Table { u, sigma } => SpectralFunction::table(u.clone(), sigma.clone())?,
        })
    }
}

fn numbers(spec: &str, list: &str) -> AppResult<Vec<f64>> {
    if list.trim().is_empty() {
        return Ok(Vec::new());
    }
    list.split(',')
        .map(|t| {
            t.trim().parse::<f64>().map_err(|e| AppError::SigmaSpec {
                spec: spec.to_string(),
                reason: format!("`{t}`: {e}"),
            })
        })
        .collect()
}

pub fn parse_sigma_spec(spec: &str) -> AppResult<SigmaJson> {
    let fail = |reason: &str| AppError::SigmaSpec {
        spec: spec.to_string(),
        reason: reason.to_string(),
    };
    let (kind, rest) = match spec.split_once(':') {
        Some((k, r)) => (k, Some(r)),
        None => (spec, None),
    };
    match (kind.trim(), rest) {
        ("flat", None) => Ok(SigmaJson::Flat),
        ("power-sqrt", None) => Ok(SigmaJson::PowerSqrt),
        ("es", Some(a)) => {
            let alpha = a.trim().parse().map_err(|_| fail("level is not a number"))?;
            Ok(SigmaJson::Es { alpha })
        }
        ("pc", Some(r)) => {
            let (b, l) = r.split_once('/').ok_or_else(|| fail("expected breakpoints/levels"))?;
            Ok(SigmaJson::PiecewiseConstant {
                breakpoints: numbers(spec, b)?,
                levels: numbers(spec, l)?,
            })
        }
        ("table", Some(r)) => {
            let mut u = Vec::new();
            let mut sigma = Vec::new();
            for knot in r.split(',') {
                let (a, b) = knot.split_once(':').ok_or_else(|| fail("knots are u:sigma"))?;
                u.push(a.trim().parse().map_err(|_| fail("bad knot position"))?);
                sigma.push(b.trim().parse().map_err(|_| fail("bad knot value"))?);
            }
            Ok(SigmaJson::Table { u, sigma })
        }
        _ => Err(fail("unknown kind; use es:A, flat, power-sqrt, pc:B/L or table:U:S,...")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_kind() {
        assert_eq!(parse_sigma_spec("es:0.9").unwrap(), SigmaJson::Es { alpha: 0.9 });
        assert_eq!(parse_sigma_spec("flat").unwrap(), SigmaJson::Flat);
        assert_eq!(parse_sigma_spec("power-sqrt").unwrap(), SigmaJson::PowerSqrt);
        let pc = parse_sigma_spec("pc:0.5/0.5,1.5").unwrap();
        assert!(pc.to_function().is_ok());
        let t = parse_sigma_spec("table:0:0,0.5:1,1:2").unwrap();
        assert_eq!(
            t,
            SigmaJson::Table {
                u: vec![0.0, 0.5, 1.0],
                sigma: vec![0.0, 1.0, 2.0]
            }
        );
        assert!(t.to_function().is_ok());
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["es", "es:x", "pc:0.5", "table:0", "cubic", "flat:1"] {
            assert!(parse_sigma_spec(bad).is_err(), "{bad}");
        }
        let e = parse_sigma_spec("es:1.5").unwrap().to_function().unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn json_round_trip_shape() {
        let j: SigmaJson = serde_json::from_str(r#"{"kind":"es","alpha":0.9}"#).unwrap();
        assert_eq!(j, SigmaJson::Es { alpha: 0.9 });
        let j: SigmaJson = serde_json::from_str(r#"{"kind":"power-sqrt"}"#).unwrap();
        assert_eq!(j, SigmaJson::PowerSqrt);
    }
}
