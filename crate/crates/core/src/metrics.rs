//! The distance ratio metric
//! `j_G(z, w) = log(1 + |z - w| / min(δ_G(z), δ_G(w)))`, disk automorphisms,
//! and the seeded pair sweeps that estimate `j`-Lipschitz constants.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::{PairSample, VerificationReport};

/// Default distance a [`DiskPoint`] must keep from the unit circle.
pub const DEFAULT_POINT_MARGIN: f64 = 1e-9;

/// Default radius margin of the sampling sub-disk.
pub const DEFAULT_SAMPLE_MARGIN: f64 = 1e-3;

/// Slack allowed on top of a Lipschitz constant in pair sweeps.
pub const SWEEP_TOL: f64 = 1e-9;

/// A point strictly inside the unit disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Complex64", into = "Complex64")]
pub struct DiskPoint(Complex64);

impl DiskPoint {
    pub fn new(z: Complex64) -> Result<Self> {
        Self::with_margin(z, DEFAULT_POINT_MARGIN)
    }

    pub fn with_margin(z: Complex64, margin: f64) -> Result<Self> {
        if z.re.is_finite() && z.im.is_finite() && z.norm() < 1.0 - margin {
            Ok(DiskPoint(z))
        } else {
            Err(Error::OutsideDisk { re: z.re, im: z.im })
        }
    }

    pub fn from_parts(re: f64, im: f64) -> Result<Self> {
        Self::new(Complex64::new(re, im))
    }

    pub fn value(self) -> Complex64 {
        self.0
    }

    pub fn norm(self) -> f64 {
        self.0.norm()
    }
}

impl TryFrom<Complex64> for DiskPoint {
    type Error = Error;

    fn try_from(z: Complex64) -> Result<Self> {
        DiskPoint::new(z)
    }
}

impl From<DiskPoint> for Complex64 {
    fn from(p: DiskPoint) -> Complex64 {
        p.0
    }
}

/// Euclidean distance to the boundary of a domain.
pub trait DomainGauge {
    fn boundary_distance(&self, z: Complex64) -> f64;
}

/// The unit disk, `δ(z) = 1 - |z|`.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnitDisk;

impl DomainGauge for UnitDisk {
    fn boundary_distance(&self, z: Complex64) -> f64 {
        1.0 - z.norm()
    }
}

/// The disk of the given radius about the origin.
#[derive(Debug, Clone, Copy)]
pub struct ScaledDisk {
    pub radius: f64,
}

impl DomainGauge for ScaledDisk {
    fn boundary_distance(&self, z: Complex64) -> f64 {
        self.radius - z.norm()
    }
}

/// Any domain presented through a boundary-distance callback.
pub struct FnGauge<F>(pub F);

impl<F: Fn(Complex64) -> f64> DomainGauge for FnGauge<F> {
    fn boundary_distance(&self, z: Complex64) -> f64 {
        (self.0)(z)
    }
}

pub fn delta_disk(z: DiskPoint) -> f64 {
    1.0 - z.norm()
}

/// Distance ratio metric of the domain described by `gauge`.
pub fn j_metric<G: DomainGauge + ?Sized>(z: Complex64, w: Complex64, gauge: &G) -> Result<f64> {
    let dz = gauge.boundary_distance(z);
    let dw = gauge.boundary_distance(w);
    for d in [dz, dw] {
        if !(d > 0.0) {
            return Err(Error::DomainViolation(d));
        }
    }
    Ok(((z - w).norm() / dz.min(dw)).ln_1p())
}

/// `j_D(z, w)` on the unit disk.
pub fn j_disk(z: DiskPoint, w: DiskPoint) -> f64 {
    j_disk_raw(z.0, w.0)
}

/// Unit-disk metric without validation; NaN when a point is outside.
#[inline]
pub(crate) fn j_disk_raw(z: Complex64, w: Complex64) -> f64 {
    let d = (1.0 - z.norm()).min(1.0 - w.norm());
    if d > 0.0 {
        ((z - w).norm() / d).ln_1p()
    } else {
        f64::NAN
    }
}

/// The disk automorphism `z ↦ e^{iθ} (z - a) / (1 - ā z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mobius {
    pub a: Complex64,
    pub theta: f64,
}

impl Mobius {
    pub fn apply(&self, z: Complex64) -> Complex64 {
        let t = (z - self.a) / (1.0 - self.a.conj() * z);
        if self.theta == 0.0 {
            t
        } else {
            Complex64::from_polar(1.0, self.theta) * t
        }
    }

    /// Inverse automorphism.
    pub fn inverse(&self) -> Mobius {
        Mobius {
            a: -Complex64::from_polar(1.0, self.theta) * self.a,
            theta: -self.theta,
        }
    }
}

pub fn mobius_disk(a: DiskPoint, theta: f64) -> Mobius {
    Mobius { a: a.0, theta }
}

/// Seeded description of a pair sweep over the sub-disk `|z| <= 1 - margin`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub seed: u64,
    pub count: usize,
    pub margin: f64,
}

impl SampleSpec {
    pub fn new(seed: u64, count: usize) -> Self {
        SampleSpec {
            seed,
            count,
            margin: DEFAULT_SAMPLE_MARGIN,
        }
    }

    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = margin;
        self
    }

    /// Uniformly distributed pairs, reproducible from the seed.
    pub fn pairs(&self) -> Vec<(Complex64, Complex64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let radius = 1.0 - self.margin;
        (0..self.count)
            .map(|_| {
                let z = uniform_in_disk(&mut rng, radius);
                let w = uniform_in_disk(&mut rng, radius);
                (z, w)
            })
            .collect()
    }
}

pub(crate) fn uniform_in_disk<R: Rng>(rng: &mut R, radius: f64) -> Complex64 {
    let r = radius * rng.gen::<f64>().sqrt();
    let t = std::f64::consts::TAU * rng.gen::<f64>();
    Complex64::from_polar(r, t)
}

enum PairOutcome {
    Degenerate,
    Escaped,
    Ratio(f64),
}

/// Evaluates `j(f(z), f(w)) / j(z, w)` on every pair and compares the
/// maximum against `constant + tol`.
///
/// Pairs are evaluated in parallel and reduced in index order. Coincident
/// pairs are skipped; pairs whose image leaves the disk count as violations.
pub fn j_ratio_sweep<F>(
    check: &str,
    f: F,
    pairs: &[(Complex64, Complex64)],
    constant: f64,
    tol: f64,
) -> VerificationReport
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    let outcomes: Vec<PairOutcome> = pairs
        .par_iter()
        .map(|&(z, w)| {
            if z == w {
                return PairOutcome::Degenerate;
            }
            let fz = f(z);
            let fw = f(w);
            if !(fz.norm() < 1.0 && fw.norm() < 1.0) {
                return PairOutcome::Escaped;
            }
            PairOutcome::Ratio(j_disk_raw(fz, fw) / j_disk_raw(z, w))
        })
        .collect();

    let mut report = VerificationReport::new(check, tol);
    report.bound = Some(constant);
    report.pairs.reserve(pairs.len());
    for (index, (&(z, w), outcome)) in pairs.iter().zip(&outcomes).enumerate() {
        report.total += 1;
        let ratio = match *outcome {
            PairOutcome::Degenerate => {
                report.skipped += 1;
                f64::NAN
            }
            PairOutcome::Escaped => {
                report.escapes += 1;
                report.violations += 1;
                f64::NAN
            }
            PairOutcome::Ratio(ratio) => {
                if ratio <= constant + tol {
                    report.passed += 1;
                } else {
                    report.violations += 1;
                }
                report.offer(ratio, &[z, w]);
                ratio
            }
        };
        report.pairs.push(PairSample {
            index,
            z,
            w,
            ratio,
        });
    }
    report
}

/// Sweeps the distortion of `j` under a disk automorphism against the factor 2.
pub fn mobius_factor_sweep(a: DiskPoint, theta: f64, samples: &SampleSpec) -> VerificationReport {
    let m = mobius_disk(a, theta);
    let mut report = j_ratio_sweep(
        "mobius_factor",
        |z| m.apply(z),
        &samples.pairs(),
        2.0,
        SWEEP_TOL,
    );
    report.seed = Some(samples.seed);
    report
}
