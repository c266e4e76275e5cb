//! Named maps for the command line and the test suites.

use std::path::PathBuf;

use num_complex::Complex64;

use crate::alphaharmonic::AlphaHarmonicMap;
use crate::error::{Error, Result};
use crate::metrics::{DiskPoint, Mobius};
use crate::quasiconformal::{estimate_qc_params, GridSpec, PlanarMap, QCParams};

#[derive(Debug, Clone, PartialEq)]
pub enum BuiltinMap {
    Identity,
    Mobius(Mobius),
    /// `z + c z̄` with `|c| < 1`
    AntiholomorphicMix(Complex64),
    /// `|z|² z`
    RadialCubic,
    AlphaHarmonic(AlphaHarmonicMap),
}

fn parse_floats(text: &str, what: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("{what}: cannot parse '{s}' as a number")))
        })
        .collect()
}

impl BuiltinMap {
    /// Parses `identity`, `mobius:a_re,a_im,theta`, `antiholomorphic-mix:c`
    /// (`c` real or `re,im`), `radial-cubic` or `alphaharm:FILE`.
    pub fn parse(name: &str) -> Result<Self> {
        let (head, arg) = match name.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (name, None),
        };
        match (head, arg) {
            ("identity", None) => Ok(BuiltinMap::Identity),
            ("radial-cubic", None) => Ok(BuiltinMap::RadialCubic),
            ("mobius", Some(arg)) => {
                let v = parse_floats(arg, "mobius")?;
                if v.len() != 3 {
                    return Err(Error::InvalidParameter(
                        "mobius expects a_re,a_im,theta".into(),
                    ));
                }
                let a = DiskPoint::from_parts(v[0], v[1])?;
                if !v[2].is_finite() {
                    return Err(Error::InvalidParameter("mobius: theta must be finite".into()));
                }
                Ok(BuiltinMap::Mobius(crate::metrics::mobius_disk(a, v[2])))
            }
            ("antiholomorphic-mix", Some(arg)) => {
                let v = parse_floats(arg, "antiholomorphic-mix")?;
                let c = match v.as_slice() {
                    [re] => Complex64::new(*re, 0.0),
                    [re, im] => Complex64::new(*re, *im),
                    _ => {
                        return Err(Error::InvalidParameter(
                            "antiholomorphic-mix expects c or re,im".into(),
                        ))
                    }
                };
                if !(c.norm() < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "antiholomorphic-mix needs |c| < 1, got {}",
                        c.norm()
                    )));
                }
                Ok(BuiltinMap::AntiholomorphicMix(c))
            }
            ("alphaharm", Some(path)) => Ok(BuiltinMap::AlphaHarmonic(AlphaHarmonicMap::load(
                &PathBuf::from(path),
            )?)),
            _ => Err(Error::InvalidParameter(format!("unknown built-in map '{name}'"))),
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self {
            BuiltinMap::Identity => z,
            BuiltinMap::Mobius(m) => m.apply(z),
            BuiltinMap::AntiholomorphicMix(c) => z + c * z.conj(),
            BuiltinMap::RadialCubic => z * z.norm_sqr(),
            BuiltinMap::AlphaHarmonic(f) => f
                .evaluate_raw(z)
                .unwrap_or(Complex64::new(f64::NAN, f64::NAN)),
        }
    }

    pub fn planar_map(&self) -> PlanarMap {
        match self {
            BuiltinMap::AlphaHarmonic(f) => f.to_planar_map(),
            other => {
                let m = other.clone();
                PlanarMap::new(move |z| m.eval(z))
            }
        }
    }

    /// Certificate constants; closed forms where known, grid estimates otherwise.
    pub fn nominal_params(&self, grid: &GridSpec) -> QCParams {
        match self {
            BuiltinMap::Identity | BuiltinMap::Mobius(_) => QCParams::conformal(),
            BuiltinMap::AntiholomorphicMix(c) => QCParams {
                k: (1.0 + c.norm()) / (1.0 - c.norm()),
                ..QCParams::conformal()
            },
            // |Df|² = 9|z|⁴ = 3 J and Δf = 8z, which no finite B absorbs near 0
            BuiltinMap::RadialCubic => QCParams {
                k: 3.0,
                k_prime: 0.0,
                b: 0.0,
                c: 8.0,
            },
            BuiltinMap::AlphaHarmonic(_) => estimate_qc_params(&self.planar_map(), grid),
        }
    }
}
