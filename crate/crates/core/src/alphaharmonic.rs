//! Solutions of `T_α f = 0` on the unit disk, where
//!
//! ```text
//! T_α = -(α²/4)(1-|z|²)^{-α-1} + (α/2)(1-|z|²)^{-α-1}(z ∂_z + z̄ ∂_z̄) + (1-|z|²)^{-α} ∂_z ∂_z̄
//! ```
//!
//! Every solution expands as
//! `f(z) = Σ_{k≥1} c_k g_k(|z|²) z^k + Σ_{k≥1} c_{-k} g_k(|z|²) z̄^k` with
//! `g_k(t) = 2F1(-α/2, k - α/2; k + 1; t)`. This module works with finitely
//! supported coefficient sequences and `c_0 = 0`, so `f(0) = 0`.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{j_ratio_sweep, DiskPoint, SampleSpec, SWEEP_TOL};
use crate::quasiconformal::{laplacian_step, wirtinger_step, PlanarMap};
use crate::report::{PairSample, VerificationReport};
use crate::specfun::{self, gauss_2f1_at_one};

/// Default bound on `|k|` for coefficient sequences.
pub const DEFAULT_K_MAX: u32 = 64;

/// Term tolerance for evaluating the radial factors; tighter than the
/// library default so finite differences of `f` stay clean.
pub const EVAL_TOL: f64 = 1e-17;

/// Slack on the coefficient condition `S <= 1`.
pub const CONDITION_TOL: f64 = 1e-12;

/// Slack on the two majorants of [`thm31_bound_decomposition`].
pub const MAJORANT_TOL: f64 = 1e-10;

/// Finitely supported `{c_k}` with `k != 0`, sorted by `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSequence {
    entries: Vec<(i32, Complex64)>,
}

impl CoefficientSequence {
    pub fn new(entries: Vec<(i32, Complex64)>) -> Result<Self> {
        Self::with_k_max(entries, DEFAULT_K_MAX)
    }

    pub fn with_k_max(mut entries: Vec<(i32, Complex64)>, k_max: u32) -> Result<Self> {
        entries.sort_by_key(|&(k, _)| k);
        for pair in entries.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::InvalidCoefficients(format!(
                    "duplicate index k = {}",
                    pair[0].0
                )));
            }
        }
        for &(k, c) in &entries {
            if k == 0 {
                return Err(Error::InvalidCoefficients(
                    "k = 0 is not allowed (c_0 = 0 so that f(0) = 0)".into(),
                ));
            }
            if k.unsigned_abs() > k_max {
                return Err(Error::InvalidCoefficients(format!(
                    "index k = {k} exceeds the support bound {k_max}"
                )));
            }
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::InvalidCoefficients(format!(
                    "coefficient for k = {k} is not finite"
                )));
            }
        }
        Ok(CoefficientSequence { entries })
    }

    pub fn entries(&self) -> &[(i32, Complex64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(k, |c_k| + |c_{-k}|)` for every `k >= 1` in the support.
    pub fn weights(&self) -> Vec<(u32, f64)> {
        let mut by_k: BTreeMap<u32, f64> = BTreeMap::new();
        for &(k, c) in &self.entries {
            *by_k.entry(k.unsigned_abs()).or_insert(0.0) += c.norm();
        }
        by_k.into_iter().collect()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        CoefficientSequence {
            entries: self.entries.iter().map(|&(k, c)| (k, c * factor)).collect(),
        }
    }
}

/// `2F1(-α/2, k - α/2; k + 1; ·)` as a reusable triple.
#[derive(Debug, Clone, Copy, PartialEq)]
struct RadialFactor {
    a: f64,
    b: f64,
    c: f64,
}

impl RadialFactor {
    fn new(alpha: f64, k: u32) -> Self {
        let k = k as f64;
        RadialFactor {
            a: -alpha / 2.0,
            b: k - alpha / 2.0,
            c: k + 1.0,
        }
    }

    fn at(&self, t: f64) -> Result<f64> {
        specfun::sum_series(self.a, self.b, self.c, t, EVAL_TOL, specfun::DEFAULT_N_MAX)
    }

    fn at_one(&self) -> Result<f64> {
        gauss_2f1_at_one(self.a, self.b, self.c)
    }
}

/// A solution of `T_α f = 0` given by a finite expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaHarmonicMap {
    alpha: f64,
    coeffs: CoefficientSequence,
}

impl AlphaHarmonicMap {
    pub fn new(alpha: f64, coeffs: CoefficientSequence) -> Result<Self> {
        if !(alpha > -1.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "alpha must be finite and > -1, got {alpha}"
            )));
        }
        Ok(AlphaHarmonicMap { alpha, coeffs })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn coeffs(&self) -> &CoefficientSequence {
        &self.coeffs
    }

    fn factor(&self, k: i32) -> RadialFactor {
        RadialFactor::new(self.alpha, k.unsigned_abs())
    }

    /// Evaluates the expansion at an arbitrary complex point with `|z| < 1`.
    pub fn evaluate_raw(&self, z: Complex64) -> Result<Complex64> {
        let t = z.norm_sqr();
        let mut sum = Complex64::new(0.0, 0.0);
        let mut cache: Vec<(u32, f64)> = Vec::with_capacity(self.coeffs.len());
        for &(k, c) in self.coeffs.entries() {
            let key = k.unsigned_abs();
            let g = match cache.iter().find(|(j, _)| *j == key) {
                Some(&(_, g)) => g,
                None => {
                    let g = self.factor(k).at(t)?;
                    cache.push((key, g));
                    g
                }
            };
            let power = if k > 0 { z.powi(k) } else { z.conj().powi(-k) };
            sum += c * g * power;
        }
        Ok(sum)
    }

    pub fn evaluate(&self, z: DiskPoint) -> Result<Complex64> {
        self.evaluate_raw(z.value())
    }

    /// Evaluation as a plain function; series failures become NaN.
    pub fn as_fn(&self) -> impl Fn(Complex64) -> Complex64 + Send + Sync + Clone + 'static {
        let map = self.clone();
        move |z| {
            map.evaluate_raw(z)
                .unwrap_or(Complex64::new(f64::NAN, f64::NAN))
        }
    }

    pub fn to_planar_map(&self) -> PlanarMap {
        PlanarMap::new(self.as_fn())
    }

    /// Copy with coefficients scaled so that the condition value equals `target`.
    pub fn scaled_to_condition(&self, target: f64) -> Result<Self> {
        let s = theorem31_condition(self)?.value;
        if !(s > 0.0) {
            return Err(Error::InvalidCoefficients(
                "cannot rescale an empty or null sequence".into(),
            ));
        }
        Ok(AlphaHarmonicMap {
            alpha: self.alpha,
            coeffs: self.coeffs.scaled(target / s),
        })
    }

    /// Random map with `1..=max_support` distinct indices drawn from
    /// `±1, ..., ±k_max` and coefficient moduli in `[0.1, 1)`.
    pub fn random<R: Rng>(rng: &mut R, alpha: f64, max_support: usize, k_max: u32) -> Result<Self> {
        let pool: Vec<i32> = (1..=k_max as i32).flat_map(|k| [k, -k]).collect();
        let support = rng.gen_range(1..=max_support.min(pool.len()));
        let picked = rand::seq::index::sample(rng, pool.len(), support);
        let entries = picked
            .into_iter()
            .map(|i| {
                let modulus = rng.gen_range(0.1..1.0);
                let phase = rng.gen_range(0.0..std::f64::consts::TAU);
                (pool[i], Complex64::from_polar(modulus, phase))
            })
            .collect();
        AlphaHarmonicMap::new(alpha, CoefficientSequence::new(entries)?)
    }

    pub fn from_file_format(file: &CoefficientFile) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for e in &file.coeffs {
            if e.k == 0 {
                return Err(Error::InvalidCoefficients(
                    "coeffs[].k = 0 is not allowed".into(),
                ));
            }
            if !seen.insert(e.k) {
                return Err(Error::InvalidCoefficients(format!(
                    "coeffs[].k = {} appears more than once",
                    e.k
                )));
            }
        }
        if !(file.alpha > -1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha = {} must be > -1",
                file.alpha
            )));
        }
        let entries = file
            .coeffs
            .iter()
            .map(|e| {
                let k = i32::try_from(e.k).map_err(|_| {
                    Error::InvalidCoefficients(format!("coeffs[].k = {} out of range", e.k))
                })?;
                Ok((k, Complex64::new(e.re, e.im)))
            })
            .collect::<Result<Vec<_>>>()?;
        AlphaHarmonicMap::new(file.alpha, CoefficientSequence::new(entries)?)
    }

    pub fn to_file_format(&self) -> CoefficientFile {
        CoefficientFile {
            alpha: self.alpha,
            coeffs: self
                .coeffs
                .entries()
                .iter()
                .map(|&(k, c)| CoefficientEntry {
                    k: k as i64,
                    re: c.re,
                    im: c.im,
                })
                .collect(),
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: CoefficientFile = serde_json::from_str(text)
            .map_err(|e| Error::InvalidCoefficients(format!("malformed coefficient file: {e}")))?;
        Self::from_file_format(&file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json_str(&text)
    }
}

/// On-disk coefficient document: `{"alpha": 2.0, "coeffs": [{"k": 2, "re": 1.5, "im": 0.0}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientFile {
    pub alpha: f64,
    pub coeffs: Vec<CoefficientEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientEntry {
    pub k: i64,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// `Σ_n (-α/2)_n (k-α/2)_n / ((k+1)_n n!)`, the radial factor at `t = 1`.
pub fn inner_sum(alpha: f64, k: u32) -> Result<f64> {
    RadialFactor::new(alpha, k).at_one()
}

/// Applies `T_α` to `f` at `z` with finite differences of step `h`.
pub fn t_alpha_residual<F>(f: &F, alpha: f64, z: DiskPoint, h: f64) -> Result<Complex64>
where
    F: Fn(Complex64) -> Complex64 + ?Sized,
{
    let z = z.value();
    let distance = 1.0 - z.norm();
    if !(h > 0.0) || 10.0 * h > distance {
        return Err(Error::StepTooLarge { step: h, distance });
    }
    let w = 1.0 - z.norm_sqr();
    let (f_z, f_zbar) = wirtinger_step(f, z, h);
    let f_zzbar = laplacian_step(f, z, h) / 4.0;
    let weight = w.powf(-alpha - 1.0);
    Ok(-(alpha * alpha / 4.0) * weight * f(z)
        + (alpha / 2.0) * weight * (z * f_z + z.conj() * f_zbar)
        + w.powf(-alpha) * f_zzbar)
}

/// Value of the coefficient condition and whether it holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub value: f64,
    pub satisfied: bool,
}

/// `S = Σ_k (|c_k| + |c_{-k}|) F(-α/2, k - α/2; k + 1; 1)`; satisfied when `S <= 1`.
pub fn theorem31_condition(f: &AlphaHarmonicMap) -> Result<ConditionReport> {
    let mut value = 0.0;
    for (k, weight) in f.coeffs.weights() {
        value += weight * inner_sum(f.alpha, k)?;
    }
    Ok(ConditionReport {
        value,
        satisfied: value <= 1.0 + CONDITION_TOL,
    })
}

/// Sweeps `j(f(z), f(w)) / j(z, w)` over seeded pairs against `constant`.
///
/// The metric's `min` over boundary distances realizes the convention
/// `|f(z)| >= |f(w)|` without reordering pairs.
pub fn verify_lipschitz_j<F>(f: F, constant: f64, samples: &SampleSpec) -> VerificationReport
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    let mut report = j_ratio_sweep("lipschitz_j", f, &samples.pairs(), constant, SWEEP_TOL);
    report.seed = Some(samples.seed);
    report
}

/// The two majorants from the contraction argument for one pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundDecomposition {
    /// The pair after ordering so that `|f(z)| >= |f(w)|`.
    pub z: Complex64,
    pub w: Complex64,
    /// `|f(z) - f(w)|`
    pub increment: f64,
    /// `1 - |f(z)|`
    pub gap: f64,
    /// `|z - w| Σ_k (|c_k|+|c_{-k}|) Σ_n w_{k,n} Σ_{s<2n+k} |z|^s`
    pub num_bound: f64,
    /// `(1 - |z|) Σ_k (|c_k|+|c_{-k}|) Σ_n w_{k,n} Σ_{s<2n+k} |z|^s`
    pub den_bound: f64,
    pub num_holds: bool,
    pub den_holds: bool,
    pub holds: bool,
}

/// Evaluates both majorants and checks `|f(z) - f(w)| <= num_bound` and
/// `1 - |f(z)| >= den_bound` (slack `1e-10`).
///
/// With weights `w_{k,n} = (-α/2)_n (k-α/2)_n / ((k+1)_n n!)` the inner double
/// sum telescopes: `Σ_n w_{k,n} (1 - r^{2n+k}) / (1 - r) = (g_k(1) - r^k g_k(r²)) / (1 - r)`.
pub fn thm31_bound_decomposition(
    f: &AlphaHarmonicMap,
    z: DiskPoint,
    w: DiskPoint,
) -> Result<BoundDecomposition> {
    let (mut z, mut w) = (z.value(), w.value());
    let (mut fz, mut fw) = (f.evaluate_raw(z)?, f.evaluate_raw(w)?);
    if fz.norm() < fw.norm() {
        std::mem::swap(&mut z, &mut w);
        std::mem::swap(&mut fz, &mut fw);
    }
    let r = z.norm();
    let t = r * r;
    // Σ_k weight (g_k(1) - r^k g_k(r²)) = (1 - r) × double sum
    let mut telescoped = 0.0;
    for (k, weight) in f.coeffs.weights() {
        let g = RadialFactor::new(f.alpha, k);
        telescoped += weight * (g.at_one()? - r.powi(k as i32) * g.at(t)?);
    }
    let double_sum = telescoped / (1.0 - r);
    let num_bound = (z - w).norm() * double_sum;
    let den_bound = telescoped;
    let increment = (fz - fw).norm();
    let gap = 1.0 - fz.norm();
    let num_holds = increment <= num_bound + MAJORANT_TOL;
    let den_holds = gap >= den_bound - MAJORANT_TOL;
    Ok(BoundDecomposition {
        z,
        w,
        increment,
        gap,
        num_bound,
        den_bound,
        num_holds,
        den_holds,
        holds: num_holds && den_holds,
    })
}

/// Ratio sequence of a radial sharpness scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpnessReport {
    pub p: u32,
    pub m: u32,
    pub conjugated: bool,
    pub radii: Vec<f64>,
    pub ratios: Vec<f64>,
    pub monotone_increasing: bool,
    pub final_is_max: bool,
    pub report: VerificationReport,
}

impl SharpnessReport {
    pub fn holds(&self) -> bool {
        self.report.holds() && self.final_is_max
    }
}

/// Evaluates `f(z) = |z|^{2(p-1)} z^m` (or `z̄^m`) on consecutive radial
/// pairs `(r_i, r_{i+1})` and reports the `j`-ratios, which must stay below 1.
pub fn sharpness_scan(p: u32, m: u32, conjugated: bool, radii: &[f64]) -> Result<SharpnessReport> {
    if p == 0 || m == 0 {
        return Err(Error::InvalidParameter("p and m must be >= 1".into()));
    }
    if radii.len() < 2 {
        return Err(Error::InvalidParameter("need at least two radii".into()));
    }
    if radii.iter().any(|r| !(*r > 0.0 && *r < 1.0)) || radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "radii must be strictly increasing in (0, 1)".into(),
        ));
    }
    let degree = (2 * (p - 1) + m) as f64;
    // |f(r)| = r^d; 1 - r^d via expm1 keeps digits as r → 1
    let j_radial = |r1: f64, r2: f64, d: f64| {
        let inner = r2.powf(d) - r1.powf(d);
        let gap = -(d * r2.ln()).exp_m1();
        (inner / gap).ln_1p()
    };
    let mut report = VerificationReport::new("sharpness", SWEEP_TOL);
    report.bound = Some(1.0);
    let mut ratios = Vec::with_capacity(radii.len() - 1);
    for (index, pair) in radii.windows(2).enumerate() {
        let (r1, r2) = (pair[0], pair[1]);
        let ratio = j_radial(r1, r2, degree) / j_radial(r1, r2, 1.0);
        let (z, w) = (Complex64::new(r1, 0.0), Complex64::new(r2, 0.0));
        report.total += 1;
        if ratio <= 1.0 + SWEEP_TOL {
            report.passed += 1;
        } else {
            report.violations += 1;
        }
        report.offer(ratio, &[z, w]);
        report.pairs.push(PairSample { index, z, w, ratio });
        ratios.push(ratio);
    }
    let last = *ratios.last().expect("at least one pair");
    let final_is_max = ratios.iter().all(|&r| r <= last);
    let monotone_increasing = ratios.windows(2).all(|w| w[0] <= w[1]);
    Ok(SharpnessReport {
        p,
        m,
        conjugated,
        radii: radii.to_vec(),
        ratios,
        monotone_increasing,
        final_is_max,
        report,
    })
}

/// Closed form of the sharpness maps, for sweeps off the radial pairs.
pub fn sharpness_map(p: u32, m: u32, conjugated: bool) -> impl Fn(Complex64) -> Complex64 + Send + Sync + Clone {
    move |z: Complex64| {
        let base = if conjugated { z.conj() } else { z };
        base.powi(m as i32) * z.norm_sqr().powi(p as i32 - 1)
    }
}

/// Radii `1 - 2^{-t}` for `t = 1..=steps`.
pub fn dyadic_radii(steps: u32) -> Vec<f64> {
    (1..=steps).map(|t| 1.0 - 0.5f64.powi(t as i32)).collect()
}
