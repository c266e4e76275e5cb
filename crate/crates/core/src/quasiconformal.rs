//! Finite-difference Wirtinger calculus on black-box disk maps and pointwise
//! certificates built on it.
//!
//! All derivatives use central differences. The step is the map's `fd_step`,
//! shrunk to `(1 - |z|) / 10` close to the boundary.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{j_ratio_sweep, DiskPoint, SampleSpec, SWEEP_TOL};
use crate::report::{reduce_nodes, NodeOutcome, VerificationReport};

pub const DEFAULT_FD_STEP: f64 = 1e-4;
pub const DEFAULT_BOUNDARY_MARGIN: f64 = 1e-2;

/// Tolerance for first-derivative (algebraic) certificates.
pub const ALGEBRAIC_TOL: f64 = 1e-6;

/// Tolerance for second-derivative checks such as subharmonicity.
pub const SECOND_ORDER_TOL: f64 = 1e-4;

/// Nodes where `|f|` falls below this are skipped by modulus-based checks.
pub const MIN_MODULUS: f64 = 1e-3;

/// Relative tolerance of [`modulus_identities_check`].
pub const IDENTITY_REL_TOL: f64 = 1e-3;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Central-difference partials `(f_x, f_y)` with step `h`.
pub fn gradient_step<F: Fn(Complex64) -> Complex64 + ?Sized>(
    f: &F,
    z: Complex64,
    h: f64,
) -> (Complex64, Complex64) {
    let fx = (f(z + h) - f(z - h)) / (2.0 * h);
    let fy = (f(z + I * h) - f(z - I * h)) / (2.0 * h);
    (fx, fy)
}

/// `(f_z, f_z̄)` with step `h`.
pub fn wirtinger_step<F: Fn(Complex64) -> Complex64 + ?Sized>(
    f: &F,
    z: Complex64,
    h: f64,
) -> (Complex64, Complex64) {
    let (fx, fy) = gradient_step(f, z, h);
    ((fx - I * fy) * 0.5, (fx + I * fy) * 0.5)
}

/// Five-point Laplacian with step `h`.
pub fn laplacian_step<F: Fn(Complex64) -> Complex64 + ?Sized>(
    f: &F,
    z: Complex64,
    h: f64,
) -> Complex64 {
    (f(z + h) + f(z - h) + f(z + I * h) + f(z - I * h) - 4.0 * f(z)) / (h * h)
}

pub type MapFn = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;

/// A black-box `C²` map of the disk with its finite-difference configuration.
#[derive(Clone)]
pub struct PlanarMap {
    eval: MapFn,
    fd_step: f64,
    boundary_margin: f64,
}

impl fmt::Debug for PlanarMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PlanarMap")
            .field("fd_step", &self.fd_step)
            .field("boundary_margin", &self.boundary_margin)
            .finish_non_exhaustive()
    }
}

impl PlanarMap {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    {
        PlanarMap {
            eval: Arc::new(f),
            fd_step: DEFAULT_FD_STEP,
            boundary_margin: DEFAULT_BOUNDARY_MARGIN,
        }
    }

    pub fn from_arc(eval: MapFn) -> Self {
        PlanarMap {
            eval,
            fd_step: DEFAULT_FD_STEP,
            boundary_margin: DEFAULT_BOUNDARY_MARGIN,
        }
    }

    pub fn with_fd_step(mut self, fd_step: f64) -> Result<Self> {
        self.fd_step = fd_step;
        self.validate()?;
        Ok(self)
    }

    pub fn with_boundary_margin(mut self, boundary_margin: f64) -> Result<Self> {
        self.boundary_margin = boundary_margin;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if !(self.fd_step > 0.0) || !(self.boundary_margin > 0.0 && self.boundary_margin < 1.0) {
            return Err(Error::InvalidParameter(
                "fd_step and boundary_margin must be positive, margin below 1".into(),
            ));
        }
        if self.fd_step >= self.boundary_margin / 10.0 {
            return Err(Error::InvalidParameter(format!(
                "fd_step {} must stay below boundary_margin / 10 = {}",
                self.fd_step,
                self.boundary_margin / 10.0
            )));
        }
        Ok(())
    }

    pub fn fd_step(&self) -> f64 {
        self.fd_step
    }

    pub fn boundary_margin(&self) -> f64 {
        self.boundary_margin
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        (self.eval)(z)
    }

    pub fn as_fn(&self) -> &(dyn Fn(Complex64) -> Complex64 + Send + Sync) {
        &*self.eval
    }

    /// The precomposition `z ↦ f(g(z))` with the same stencil settings.
    pub fn precompose<G>(&self, g: G) -> PlanarMap
    where
        G: Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    {
        let f = Arc::clone(&self.eval);
        PlanarMap {
            eval: Arc::new(move |z| f(g(z))),
            fd_step: self.fd_step,
            boundary_margin: self.boundary_margin,
        }
    }

    /// Step used at `z`, checked against the map's domain.
    pub fn step_at(&self, z: Complex64) -> Result<f64> {
        let r = z.norm();
        let h = self.fd_step.min((1.0 - r) / 10.0);
        if !(h > 0.0) || r + h > 1.0 - self.boundary_margin / 2.0 {
            return Err(Error::StencilOutOfDomain {
                re: z.re,
                im: z.im,
                step: h,
            });
        }
        Ok(h)
    }
}

/// Wirtinger derivatives `(f_z, f_z̄)` at `z`.
pub fn wirtinger(f: &PlanarMap, z: DiskPoint) -> Result<(Complex64, Complex64)> {
    let h = f.step_at(z.value())?;
    Ok(wirtinger_step(f.as_fn(), z.value(), h))
}

/// Five-point Laplacian `Δf = 4 f_{zz̄}` at `z`.
pub fn laplacian(f: &PlanarMap, z: DiskPoint) -> Result<Complex64> {
    let h = f.step_at(z.value())?;
    Ok(laplacian_step(f.as_fn(), z.value(), h))
}

/// First- and second-order differential data of a map at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffSample {
    pub z: DiskPoint,
    pub f_z: Complex64,
    pub f_zbar: Complex64,
    pub laplacian: Complex64,
    /// `|Df| = |f_z| + |f_z̄|`
    pub df_norm: f64,
    /// `J_f = |f_z|² - |f_z̄|²`
    pub jacobian: f64,
}

impl DiffSample {
    pub fn sense_preserving(&self) -> bool {
        self.jacobian > 0.0
    }
}

pub fn diff_sample(f: &PlanarMap, z: DiskPoint) -> Result<DiffSample> {
    let h = f.step_at(z.value())?;
    let (f_z, f_zbar) = wirtinger_step(f.as_fn(), z.value(), h);
    let lap = laplacian_step(f.as_fn(), z.value(), h);
    Ok(DiffSample {
        z,
        f_z,
        f_zbar,
        laplacian: lap,
        df_norm: f_z.norm() + f_zbar.norm(),
        jacobian: f_z.norm_sqr() - f_zbar.norm_sqr(),
    })
}

/// Constants of `|Df|² <= K J_f + K'` and `|Δf| <= B |Df|² + C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QCParams {
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "K_prime")]
    pub k_prime: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C")]
    pub c: f64,
}

impl QCParams {
    pub fn new(k: f64, k_prime: f64, b: f64, c: f64) -> Result<Self> {
        if !(k >= 1.0) || !(k_prime >= 0.0) || !(b >= 0.0) || !(c >= 0.0) || !k.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "need K >= 1 and K', B, C >= 0 (got K={k}, K'={k_prime}, B={b}, C={c})"
            )));
        }
        Ok(QCParams { k, k_prime, b, c })
    }

    pub fn conformal() -> Self {
        QCParams {
            k: 1.0,
            k_prime: 0.0,
            b: 0.0,
            c: 0.0,
        }
    }
}

/// Square lattice with `n` nodes per axis on `[-1, 1]²`, cut to `|z| <= 1 - margin`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub margin: f64,
}

impl GridSpec {
    pub fn new(n: usize, margin: f64) -> Result<Self> {
        if n < 2 || !(margin > 0.0 && margin < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "grid needs n >= 2 and margin in (0, 1) (got n={n}, margin={margin})"
            )));
        }
        Ok(GridSpec { n, margin })
    }

    pub fn spacing(&self) -> f64 {
        2.0 / (self.n - 1) as f64
    }

    pub fn nodes(&self) -> Vec<DiskPoint> {
        let step = self.spacing();
        let limit = 1.0 - self.margin;
        let mut nodes = Vec::new();
        for iy in 0..self.n {
            let y = -1.0 + step * iy as f64;
            for ix in 0..self.n {
                let z = Complex64::new(-1.0 + step * ix as f64, y);
                if z.norm() <= limit {
                    nodes.push(DiskPoint::new(z).expect("margin keeps nodes inside"));
                }
            }
        }
        nodes
    }
}

fn run_nodes<C>(check: &str, tol: f64, nodes: &[DiskPoint], node_check: C) -> VerificationReport
where
    C: Fn(DiskPoint) -> NodeOutcome + Sync,
{
    let outcomes: Vec<NodeOutcome> = nodes.par_iter().map(|&z| node_check(z)).collect();
    let points: Vec<Complex64> = nodes.iter().map(|z| z.value()).collect();
    let mut report = VerificationReport::new(check, tol);
    reduce_nodes(&mut report, &points, &outcomes);
    report
}

/// Checks `|Df|² <= K J_f + K' + tol` at every node; nodes with
/// `J_f < -tol` (sense-reversing) are violations and nodes with
/// `|J_f| <= tol` are flagged.
pub fn kk_prime_certificate_at(f: &PlanarMap, q: &QCParams, nodes: &[DiskPoint], tol: f64) -> VerificationReport {
    run_nodes("kk_prime", tol, nodes, |z| match diff_sample(f, z) {
        Ok(d) => {
            let excess = d.df_norm * d.df_norm - (q.k * d.jacobian + q.k_prime);
            if excess > tol || d.jacobian < -tol {
                NodeOutcome::Violation { excess }
            } else {
                NodeOutcome::Pass {
                    excess,
                    flagged: d.jacobian <= tol,
                }
            }
        }
        Err(_) => NodeOutcome::Skip,
    })
}

pub fn kk_prime_certificate(f: &PlanarMap, q: &QCParams, grid: &GridSpec) -> VerificationReport {
    kk_prime_certificate_at(f, q, &grid.nodes(), ALGEBRAIC_TOL)
}

/// Checks `|Δf| <= B |Df|² + C + tol` at every node.
pub fn poisson_certificate_at(f: &PlanarMap, q: &QCParams, nodes: &[DiskPoint], tol: f64) -> VerificationReport {
    run_nodes("poisson", tol, nodes, |z| match diff_sample(f, z) {
        Ok(d) => {
            let excess = d.laplacian.norm() - (q.b * d.df_norm * d.df_norm + q.c);
            if excess > tol {
                NodeOutcome::Violation { excess }
            } else {
                NodeOutcome::Pass {
                    excess,
                    flagged: false,
                }
            }
        }
        Err(_) => NodeOutcome::Skip,
    })
}

pub fn poisson_certificate(f: &PlanarMap, q: &QCParams, grid: &GridSpec) -> VerificationReport {
    poisson_certificate_at(f, q, &grid.nodes(), ALGEBRAIC_TOL)
}

/// Left-hand side of
/// `(√K' - M)² A² + [2BMK²(√K' - M) - BK²K'] A + B²M²K⁴ >= 0`.
pub fn subharmonicity_quadratic(q: &QCParams, m: f64, a: f64) -> f64 {
    let s = q.k_prime.sqrt();
    let k2 = q.k * q.k;
    let d = s - m;
    d * d * a * a + (2.0 * q.b * m * k2 * d - q.b * k2 * q.k_prime) * a + q.b * q.b * m * m * k2 * k2
}

const ROOT_BUMP: f64 = 1e-6;
const MIN_A: f64 = 1e-6;

/// Picks `A > 0`, `A != BK²`, satisfying [`subharmonicity_quadratic`] `>= 0`
/// for a bound `M >= |Df|`.
///
/// - `B = 0`: the quadratic is `(√K' - M)² A² >= 0`; returns 1.
/// - `M = √K'`: the quadratic is `BK²K'(BK² - A)`; returns `BK²/2`.
/// - `K' + 4M² - 4M√K' <= 0`: holds for every `A`; returns 1 (or 2 when `BK² = 1`).
/// - otherwise: the larger root, raised by a relative `1e-6`.
pub fn choose_a(q: &QCParams, m: f64) -> Result<f64> {
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::InvalidParameter(format!("M must be positive, got {m}")));
    }
    let bk2 = q.b * q.k * q.k;
    if q.b == 0.0 {
        return Ok(1.0);
    }
    let s = q.k_prime.sqrt();
    if (s - m).abs() <= 1e-12 * m.max(s) {
        return Ok(bk2 / 2.0);
    }
    let disc = q.k_prime + 4.0 * m * m - 4.0 * m * s;
    if disc <= 0.0 {
        return Ok(if bk2 == 1.0 { 2.0 } else { 1.0 });
    }
    let d = s - m;
    let root = (bk2 * q.k_prime - 2.0 * q.b * m * q.k * q.k * d + bk2 * (q.k_prime * disc).sqrt())
        / (2.0 * d * d);
    let mut a = (root * (1.0 + ROOT_BUMP)).max(MIN_A);
    if a == bk2 {
        a *= 1.0 + ROOT_BUMP;
    }
    Ok(a)
}

/// `φ(z) = -1/A + e^{A(|f(z)| - 1)} / A`.
pub fn phi(f: &PlanarMap, a: f64, z: Complex64) -> f64 {
    (a * (f.eval(z).norm() - 1.0)).exp_m1() / a
}

/// Checks `Δφ >= -tol` by the five-point stencil on the scalar field `φ`.
/// Nodes with `|f| < 1e-3` are skipped.
pub fn phi_subharmonicity_check_at(f: &PlanarMap, a: f64, nodes: &[DiskPoint], tol: f64) -> VerificationReport {
    let field = |z: Complex64| Complex64::new(phi(f, a, z), 0.0);
    run_nodes("phi_subharmonic", tol, nodes, |z| {
        if f.eval(z.value()).norm() < MIN_MODULUS {
            return NodeOutcome::Skip;
        }
        let Ok(h) = f.step_at(z.value()) else {
            return NodeOutcome::Skip;
        };
        let lap = laplacian_step(&field, z.value(), h).re;
        let excess = -lap;
        if lap < -tol {
            NodeOutcome::Violation { excess }
        } else {
            NodeOutcome::Pass {
                excess,
                flagged: false,
            }
        }
    })
}

pub fn phi_subharmonicity_check(f: &PlanarMap, a: f64, grid: &GridSpec) -> VerificationReport {
    phi_subharmonicity_check_at(f, a, &grid.nodes(), SECOND_ORDER_TOL)
}

/// Pointwise terms of the modulus identities at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulusTerms {
    /// `Δ|f|` by stencil.
    pub laplacian_modulus: f64,
    /// `|f| |Ds|² + Re(s̄ Δf)` with `s = f/|f|`.
    pub identity_rhs: f64,
    /// `|D|f||²` from the gradient.
    pub grad_modulus_sq: f64,
    /// `4 |f|_z |f|_z̄`.
    pub wirtinger_product: f64,
    /// `|D|f|| = ||f|_z| + ||f|_z̄|`.
    pub d_rho: f64,
    /// `|Df| / K - √K' / K`.
    pub d_rho_lower: f64,
    pub df_norm: f64,
}

pub fn modulus_terms(f: &PlanarMap, q: &QCParams, z: DiskPoint) -> Result<ModulusTerms> {
    let z = z.value();
    let h = f.step_at(z)?;
    let rho = |u: Complex64| Complex64::new(f.eval(u).norm(), 0.0);
    let unit = |u: Complex64| {
        let v = f.eval(u);
        v / v.norm()
    };
    let fz = f.eval(z);
    let s = fz / fz.norm();
    let (f_z, f_zbar) = wirtinger_step(f.as_fn(), z, h);
    let lap_f = laplacian_step(f.as_fn(), z, h);
    let (s_z, s_zbar) = wirtinger_step(&unit, z, h);
    let ds = s_z.norm() + s_zbar.norm();
    let (rho_x, rho_y) = gradient_step(&rho, z, h);
    let (rho_z, rho_zbar) = wirtinger_step(&rho, z, h);
    let df_norm = f_z.norm() + f_zbar.norm();
    Ok(ModulusTerms {
        laplacian_modulus: laplacian_step(&rho, z, h).re,
        identity_rhs: fz.norm() * ds * ds + (s.conj() * lap_f).re,
        grad_modulus_sq: rho_x.re * rho_x.re + rho_y.re * rho_y.re,
        wirtinger_product: 4.0 * (rho_z * rho_zbar).re,
        d_rho: rho_z.norm() + rho_zbar.norm(),
        d_rho_lower: (df_norm - q.k_prime.sqrt()) / q.k,
        df_norm,
    })
}

fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Verifies, per point with `|f| >= 1e-3`:
/// (a) `Δ|f| = |f| |Ds|² + Re(s̄ Δf)`, (b) `|D|f||² = 4 |f|_z |f|_z̄`,
/// both to `rel_tol`, and (c) `|D|f|| >= |Df|/K - √K'/K` up to `rel_tol |Df|/K`.
///
/// The reported excess is the worst of the three normalized gaps minus `rel_tol`.
pub fn modulus_identities_check(
    f: &PlanarMap,
    q: &QCParams,
    points: &[DiskPoint],
    rel_tol: f64,
) -> VerificationReport {
    run_nodes("modulus_identities", rel_tol, points, |z| {
        if f.eval(z.value()).norm() < MIN_MODULUS {
            return NodeOutcome::Skip;
        }
        let Ok(t) = modulus_terms(f, q, z) else {
            return NodeOutcome::Skip;
        };
        let gap_a = relative_gap(t.laplacian_modulus, t.identity_rhs);
        let gap_b = relative_gap(t.grad_modulus_sq, t.wirtinger_product);
        let scale_c = (t.df_norm / q.k).max(f64::MIN_POSITIVE);
        let gap_c = (t.d_rho_lower - t.d_rho) / scale_c;
        let excess = gap_a.max(gap_b).max(gap_c) - rel_tol;
        if excess > 0.0 || excess.is_nan() {
            NodeOutcome::Violation { excess }
        } else {
            NodeOutcome::Pass {
                excess,
                flagged: false,
            }
        }
    })
}

/// Empirical constants and the resulting `j`-Lipschitz sweep of a map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    /// Grid supremum of `|Df|`.
    pub m_estimate: f64,
    /// Grid supremum of `(1 - |z|²) / (1 - |f(z)|²)`.
    pub c_estimate: f64,
    /// `2 C max(M, 1/(2C))`.
    pub lipschitz_constant: f64,
    pub grid: GridSpec,
    pub grid_spacing: f64,
    pub kk_prime: VerificationReport,
    pub poisson: VerificationReport,
    pub sweep: VerificationReport,
}

/// Certifies `f` against `q` on the grid, estimates `M` and `C`, and sweeps
/// `j(f(z), f(w)) <= 2 C M j(z, w)` over seeded pairs.
pub fn thm24_audit(f: &PlanarMap, q: &QCParams, samples: &SampleSpec, grid: &GridSpec) -> Result<AuditReport> {
    let nodes = grid.nodes();
    let kk = kk_prime_certificate_at(f, q, &nodes, ALGEBRAIC_TOL);
    if !kk.holds() {
        return Err(Error::CertificateFailure {
            certificate: "kk_prime",
            violations: kk.violations,
        });
    }
    let poisson = poisson_certificate_at(f, q, &nodes, ALGEBRAIC_TOL);
    if !poisson.holds() {
        return Err(Error::CertificateFailure {
            certificate: "poisson",
            violations: poisson.violations,
        });
    }

    let per_node: Vec<Result<(f64, f64)>> = nodes
        .par_iter()
        .map(|&z| {
            let fz = f.eval(z.value());
            let modulus = fz.norm();
            if !(modulus < 1.0) {
                return Err(Error::RangeViolation {
                    re: z.value().re,
                    im: z.value().im,
                    modulus,
                });
            }
            let d = diff_sample(f, z)?;
            let ratio = (1.0 - z.value().norm_sqr()) / (1.0 - fz.norm_sqr());
            Ok((d.df_norm, ratio))
        })
        .collect();
    let mut m_estimate = 0.0_f64;
    let mut c_estimate = 0.0_f64;
    for item in per_node {
        let (df, ratio) = item?;
        m_estimate = m_estimate.max(df);
        c_estimate = c_estimate.max(ratio);
    }

    let lipschitz_constant = 2.0 * c_estimate * m_estimate.max(1.0 / (2.0 * c_estimate));
    let mut sweep = j_ratio_sweep(
        "thm24_lipschitz",
        f.as_fn(),
        &samples.pairs(),
        lipschitz_constant,
        SWEEP_TOL,
    );
    sweep.seed = Some(samples.seed);
    Ok(AuditReport {
        m_estimate,
        c_estimate,
        lipschitz_constant,
        grid: *grid,
        grid_spacing: grid.spacing(),
        kk_prime: kk,
        poisson,
        sweep,
    })
}

/// Certifies `f ∘ g`, `g(z) = λz`, against `(K, K'|λ|²)`.
pub fn composition_property_check(
    f: &PlanarMap,
    q: &QCParams,
    lambda: Complex64,
    grid: &GridSpec,
) -> Result<VerificationReport> {
    if !(lambda.norm() <= 1.0) {
        return Err(Error::InvalidParameter(format!("|lambda| = {} exceeds 1", lambda.norm())));
    }
    let nodes = grid.nodes();
    let base = kk_prime_certificate_at(f, q, &nodes, ALGEBRAIC_TOL);
    if !base.holds() {
        return Err(Error::CertificateFailure {
            certificate: "kk_prime",
            violations: base.violations,
        });
    }
    let composed = f.precompose(move |z| lambda * z);
    let scaled = QCParams {
        k_prime: q.k_prime * lambda.norm_sqr(),
        ..*q
    };
    let mut report = kk_prime_certificate_at(&composed, &scaled, &nodes, ALGEBRAIC_TOL);
    report.check = "composition".into();
    Ok(report)
}

/// Smallest `(K, B)` with `K' = C = 0` consistent with the grid data.
pub fn estimate_qc_params(f: &PlanarMap, grid: &GridSpec) -> QCParams {
    let samples: Vec<Option<DiffSample>> = grid
        .nodes()
        .par_iter()
        .map(|&z| diff_sample(f, z).ok())
        .collect();
    let mut k = 1.0_f64;
    let mut b = 0.0_f64;
    for d in samples.into_iter().flatten() {
        let df2 = d.df_norm * d.df_norm;
        if df2 > 1e-12 {
            if d.jacobian > 0.0 {
                k = k.max(df2 / d.jacobian);
            }
            b = b.max(d.laplacian.norm() / df2);
        }
    }
    QCParams {
        k,
        k_prime: 0.0,
        b,
        c: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::mobius_disk;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn p(re: f64, im: f64) -> DiskPoint {
        DiskPoint::from_parts(re, im).unwrap()
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn planar_map_step_invariant() {
        assert!(PlanarMap::new(|z| z).with_fd_step(1e-3).is_err());
        assert!(PlanarMap::new(|z| z).with_fd_step(5e-4).is_ok());
        assert!(PlanarMap::new(|z| z).with_boundary_margin(1e-3).is_err());
    }

    #[test]
    fn step_shrinks_near_boundary() {
        let f = PlanarMap::new(|z| z);
        assert_eq!(f.step_at(c(0.5, 0.0)).unwrap(), DEFAULT_FD_STEP);
        assert!(f.step_at(c(0.999, 0.0)).is_err());
        let g = PlanarMap::new(|z| z).with_fd_step(9e-4).unwrap();
        assert_relative_eq!(g.step_at(c(0.994, 0.0)).unwrap(), 6e-4, max_relative = 1e-9);
    }

    #[test]
    fn wirtinger_examples() {
        let conj = PlanarMap::new(|z: Complex64| z.conj());
        let (fz, fzb) = wirtinger(&conj, p(0.2, 0.3)).unwrap();
        assert!(close(fz, c(0.0, 0.0), 1e-10) && close(fzb, c(1.0, 0.0), 1e-10));

        let sq = PlanarMap::new(|z: Complex64| z * z);
        let (fz, fzb) = wirtinger(&sq, p(0.3, 0.0)).unwrap();
        assert!(close(fz, c(0.6, 0.0), 1e-8) && close(fzb, c(0.0, 0.0), 1e-8));

        let modsq = PlanarMap::new(|z: Complex64| Complex64::new(z.norm_sqr(), 0.0));
        let (fz, fzb) = wirtinger(&modsq, p(0.2, 0.1)).unwrap();
        assert!(close(fz, c(0.2, -0.1), 1e-8) && close(fzb, c(0.2, 0.1), 1e-8));
    }

    #[test]
    fn laplacian_examples() {
        let id = PlanarMap::new(|z| z);
        assert!(laplacian(&id, p(0.4, -0.2)).unwrap().norm() < 1e-7);
        let modsq = PlanarMap::new(|z: Complex64| Complex64::new(z.norm_sqr(), 0.0));
        assert!(close(laplacian(&modsq, p(0.1, 0.5)).unwrap(), c(4.0, 0.0), 1e-6));
        // Δ|z|⁴ = 16|z|²
        let quart = PlanarMap::new(|z: Complex64| Complex64::new(z.norm_sqr().powi(2), 0.0));
        assert!(close(laplacian(&quart, p(0.5, 0.0)).unwrap(), c(4.0, 0.0), 1e-6));
    }

    #[test]
    fn diff_sample_examples() {
        let d = diff_sample(&PlanarMap::new(|z| z), p(0.3, 0.3)).unwrap();
        assert_relative_eq!(d.df_norm, 1.0, max_relative = 1e-9);
        assert_relative_eq!(d.jacobian, 1.0, max_relative = 1e-9);
        assert!(d.laplacian.norm() < 1e-7);

        let mix = PlanarMap::new(|z: Complex64| z + 0.5 * z.conj());
        let d = diff_sample(&mix, p(-0.2, 0.6)).unwrap();
        assert_relative_eq!(d.df_norm, 1.5, max_relative = 1e-9);
        assert_relative_eq!(d.jacobian, 0.75, max_relative = 1e-9);

        let d = diff_sample(&PlanarMap::new(|z: Complex64| z.conj()), p(0.1, 0.1)).unwrap();
        assert_relative_eq!(d.jacobian, -1.0, max_relative = 1e-9);
        assert!(!d.sense_preserving());
    }

    #[test]
    fn wirtinger_error_is_second_order() {
        let f = |z: Complex64| z.exp();
        for z in [c(0.3, 0.2), c(-0.5, 0.4), c(0.1, -0.8)] {
            let err = |h: f64| {
                let (fz, fzb) = wirtinger_step(&f, z, h);
                (fz - z.exp()).norm() + fzb.norm()
            };
            let ratio = err(1e-3) / err(5e-4);
            assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn grid_nodes() {
        let g = GridSpec::new(101, 1e-2).unwrap();
        let nodes = g.nodes();
        assert!(nodes.iter().all(|z| z.norm() <= 0.99));
        assert!(nodes.iter().any(|z| z.norm() == 0.0));
        // lattice points of spacing 0.02 inside radius 0.99
        let expected = (0..101usize)
            .flat_map(|i| (0..101usize).map(move |j| (i, j)))
            .filter(|&(i, j)| {
                let x = -1.0 + 0.02 * i as f64;
                let y = -1.0 + 0.02 * j as f64;
                (x * x + y * y).sqrt() <= 0.99
            })
            .count();
        assert_eq!(nodes.len(), expected);
        assert!(GridSpec::new(1, 0.1).is_err());
    }

    #[test]
    fn kk_prime_examples() {
        let grid = GridSpec::new(41, 1e-2).unwrap();
        let id = PlanarMap::new(|z| z);
        let r = kk_prime_certificate(&id, &QCParams::conformal(), &grid);
        assert!(r.holds());
        assert_eq!(r.passed + r.violations + r.skipped, r.total);

        let mix = PlanarMap::new(|z: Complex64| z + 0.5 * z.conj());
        let r = kk_prime_certificate(&mix, &QCParams::new(3.0, 0.0, 0.0, 0.0).unwrap(), &grid);
        assert!(r.holds());
        assert!(r.extremum.abs() < 1e-6);

        let r = kk_prime_certificate(&mix, &QCParams::new(2.0, 0.5, 0.0, 0.0).unwrap(), &grid);
        assert_eq!(r.violations, r.total);
        assert_relative_eq!(r.extremum, 2.25 - 2.0, max_relative = 1e-6);
        assert_eq!(r.witness.len(), 1);
    }

    #[test]
    fn sense_reversing_nodes_violate() {
        let grid = GridSpec::new(11, 0.1).unwrap();
        let conj = PlanarMap::new(|z: Complex64| z.conj());
        let r = kk_prime_certificate(&conj, &QCParams::new(5.0, 10.0, 0.0, 0.0).unwrap(), &grid);
        assert_eq!(r.violations, r.total);
    }

    #[test]
    fn vanishing_jacobian_is_flagged() {
        let grid = GridSpec::new(11, 0.1).unwrap();
        let cubic = PlanarMap::new(|z: Complex64| z * z.norm_sqr());
        let r = kk_prime_certificate(&cubic, &QCParams::new(3.0, 0.0, 0.0, 0.0).unwrap(), &grid);
        assert!(r.holds());
        assert!(r.flagged >= 1);
    }

    #[test]
    fn poisson_examples() {
        let grid = GridSpec::new(41, 1e-2).unwrap();
        let harmonic = PlanarMap::new(|z: Complex64| z * z * z + 0.3 * z.conj().powi(2));
        assert!(poisson_certificate(&harmonic, &QCParams::conformal(), &grid).holds());

        let bowl = PlanarMap::new(|z: Complex64| Complex64::new(0.5 * z.norm_sqr(), 0.0));
        let q = QCParams::new(1.0, 0.0, 0.1, 0.0).unwrap();
        let r = poisson_certificate(&bowl, &q, &grid);
        assert!(!r.holds());
        assert_eq!(r.witness, vec![c(0.0, 0.0)]);
        assert_relative_eq!(r.extremum, 2.0, max_relative = 1e-6);

        // Δf = -4z², f_z = 2z - z²z̄, f_z̄ = -z³/3
        let biharm = PlanarMap::new(|z: Complex64| (1.0 - z.norm_sqr() / 3.0) * z * z);
        let q = QCParams::new(1.0, 0.0, 1.2, 0.0).unwrap();
        let r = poisson_certificate_at(&biharm, &q, &[p(0.5, 0.0)], ALGEBRAIC_TOL);
        assert!(r.holds());
        let d = diff_sample(&biharm, p(0.5, 0.0)).unwrap();
        assert!(close(d.laplacian, c(-1.0, 0.0), 1e-6));
        assert!(close(d.f_z, c(1.0 - 0.125, 0.0), 1e-8));
        assert!(close(d.f_zbar, c(-0.125 / 3.0, 0.0), 1e-8));
    }

    #[test]
    fn choose_a_examples() {
        for &(k, kp, m) in &[(1.0, 0.0, 1.0), (3.0, 7.0, 0.2), (1.5, 4.0, 2.0)] {
            let q = QCParams::new(k, kp, 0.0, 0.0).unwrap();
            assert_eq!(choose_a(&q, m).unwrap(), 1.0);
            assert!(subharmonicity_quadratic(&q, m, 1.0) >= 0.0);
        }
        // K' + 4M² - 4M√K' = 0
        let q = QCParams::new(1.0, 4.0, 1.0, 0.0).unwrap();
        let a = choose_a(&q, 1.0).unwrap();
        assert!(a != 1.0 && subharmonicity_quadratic(&q, 1.0, a) >= -1e-9);
        let q = QCParams::new(2.0, 4.0, 1.0, 0.0).unwrap();
        assert_eq!(choose_a(&q, 1.0).unwrap(), 1.0);
        // larger root (9 - 4 + 3) / 8 = 1
        let q = QCParams::new(1.0, 9.0, 1.0, 0.0).unwrap();
        let a = choose_a(&q, 1.0).unwrap();
        assert_relative_eq!(a, 1.0, max_relative = 1e-5);
        assert!(a != 1.0);
        assert!(subharmonicity_quadratic(&q, 1.0, a) >= -1e-9);
        // M = √K'
        let q = QCParams::new(2.0, 4.0, 0.5, 0.0).unwrap();
        assert_eq!(choose_a(&q, 2.0).unwrap(), 1.0);
        assert!(subharmonicity_quadratic(&q, 2.0, 1.0) >= 0.0);
        assert!(choose_a(&q, 0.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn choose_a_satisfies_quadratic(
            k in 1.0f64..5.0, kp in 0.0f64..10.0, b in 0.0f64..3.0, m in 1e-6f64..5.0,
        ) {
            let q = QCParams::new(k, kp, b, 0.0).unwrap();
            let a = choose_a(&q, m).unwrap();
            prop_assert!(a > 0.0);
            prop_assert!(a != b * k * k || b == 0.0);
            prop_assert!(subharmonicity_quadratic(&q, m, a) >= -1e-9);
        }

        #[test]
        fn df_norm_dominates_jacobian(
            re in -0.9f64..0.9, im in -0.9f64..0.9, cr in -0.9f64..0.9, ci in -0.9f64..0.9,
        ) {
            prop_assume!(re * re + im * im < 0.8);
            let coef = c(cr, ci);
            let f = PlanarMap::new(move |z: Complex64| z + coef * z.conj() * z.conj() + 0.2 * z * z.norm_sqr());
            let d = diff_sample(&f, p(re, im)).unwrap();
            prop_assert!(d.df_norm * d.df_norm >= d.jacobian);
        }
    }

    #[test]
    fn phi_identity_passes() {
        let grid = GridSpec::new(51, 1e-2).unwrap();
        let id = PlanarMap::new(|z| z);
        for a in [0.5, 1.0, 7.0] {
            let r = phi_subharmonicity_check(&id, a, &grid);
            assert!(r.holds(), "A = {a}: {r:?}");
            assert_eq!(r.skipped, 1);
            assert_eq!(r.passed + r.violations + r.skipped, r.total);
        }
        // Δφ = e^{A(|z|-1)} (A + 1/|z|)
        let (a, z) = (2.0, c(0.6, 0.0));
        let field = |u: Complex64| Complex64::new(phi(&id, a, u), 0.0);
        let lap = laplacian_step(&field, z, 1e-4).re;
        assert_relative_eq!(lap, (a * (0.6 - 1.0_f64)).exp() * (a + 1.0 / 0.6), max_relative = 1e-6);
    }

    #[test]
    fn phi_mobius_with_chosen_a() {
        let grid = GridSpec::new(51, 1e-2).unwrap();
        let m = mobius_disk(p(0.3, 0.0), 0.0);
        let f = PlanarMap::new(move |z| m.apply(z));
        let q = QCParams::conformal();
        let big_m = grid
            .nodes()
            .iter()
            .map(|&z| diff_sample(&f, z).unwrap().df_norm)
            .fold(0.0, f64::max);
        let a = choose_a(&q, big_m).unwrap();
        assert!(phi_subharmonicity_check(&f, a, &grid).holds());
    }

    #[test]
    fn phi_detects_superharmonic_modulus() {
        // |f| = r(1 - r)/2 is concave in r, so small A fails near the rim
        let f = PlanarMap::new(|z: Complex64| z * (1.0 - z.norm()) * 0.5);
        let grid = GridSpec::new(41, 0.05).unwrap();
        let r = phi_subharmonicity_check(&f, 0.01, &grid);
        assert!(r.violations > 0);
        assert_eq!(r.witness.len(), 1);
    }

    #[test]
    fn modulus_identity_examples() {
        let q = QCParams::conformal();
        let id = PlanarMap::new(|z| z);
        let t = modulus_terms(&id, &q, p(0.5, 0.2)).unwrap();
        let r = (0.29f64).sqrt();
        assert_relative_eq!(t.laplacian_modulus, 1.0 / r, max_relative = 1e-6);
        assert_relative_eq!(t.identity_rhs, 1.0 / r, max_relative = 1e-6);

        let exp = PlanarMap::new(|z: Complex64| (z + 0.1).exp());
        let t = modulus_terms(&exp, &q, p(-0.3, 0.4)).unwrap();
        assert_relative_eq!(t.d_rho, t.d_rho_lower, max_relative = 1e-6);

        let conj = PlanarMap::new(|z: Complex64| z.conj());
        let t = modulus_terms(&conj, &q, p(0.5, 0.0)).unwrap();
        assert_relative_eq!(t.d_rho, 1.0, max_relative = 1e-8);
        assert_relative_eq!(t.d_rho_lower, 1.0, max_relative = 1e-8);

        let pts: Vec<DiskPoint> = (1..20).map(|i| p(0.04 * i as f64, 0.02 * i as f64)).collect();
        let r = modulus_identities_check(&id, &q, &pts, IDENTITY_REL_TOL);
        assert!(r.holds(), "{r:?}");
    }

    #[test]
    fn modulus_check_flags_wrong_k() {
        // z + 0.5 z̄ needs K = 3 for the |D|f|| lower bound
        let mix = PlanarMap::new(|z: Complex64| z + 0.5 * z.conj());
        let pts: Vec<DiskPoint> = (0..36)
            .map(|i| DiskPoint::new(Complex64::from_polar(0.5, i as f64 * 0.1745)).unwrap())
            .collect();
        let ok = modulus_identities_check(&mix, &QCParams::new(3.0, 0.0, 0.0, 0.0).unwrap(), &pts, IDENTITY_REL_TOL);
        assert!(ok.holds(), "{ok:?}");
        let bad = modulus_identities_check(&mix, &QCParams::new(1.2, 0.0, 0.0, 0.0).unwrap(), &pts, IDENTITY_REL_TOL);
        assert!(bad.violations > 0);
    }

    #[test]
    fn audit_identity() {
        let grid = GridSpec::new(101, 1e-2).unwrap();
        let audit = thm24_audit(&PlanarMap::new(|z| z), &QCParams::conformal(), &SampleSpec::new(1, 2000), &grid).unwrap();
        assert!((audit.m_estimate - 1.0).abs() < 1e-6);
        assert!((audit.c_estimate - 1.0).abs() < 1e-6);
        assert!((audit.lipschitz_constant - 2.0).abs() < 1e-5);
        assert_eq!(audit.sweep.extremum, 1.0);
    }

    #[test]
    fn audit_mobius() {
        let grid = GridSpec::new(101, 1e-2).unwrap();
        let m = mobius_disk(p(0.5, 0.0), 0.0);
        let f = PlanarMap::new(move |z| m.apply(z));
        let audit = thm24_audit(&f, &QCParams::conformal(), &SampleSpec::new(2, 5000), &grid).unwrap();
        // sup |1 - āz|² / (1 - |a|²) = 3 on the closed disk
        assert!((audit.c_estimate - 3.0).abs() < 0.06);
        assert!(audit.m_estimate > 2.8 && audit.m_estimate < 3.0);
        assert!(audit.sweep.holds());
        assert!(audit.sweep.extremum <= 2.0);
    }

    #[test]
    fn audit_perturbed_identity() {
        let grid = GridSpec::new(61, 1e-2).unwrap();
        let f = PlanarMap::new(|z: Complex64| z * (1.0 + 0.1 * (1.0 - z.norm_sqr())));
        let q = estimate_qc_params(&f, &grid);
        let audit = thm24_audit(&f, &q, &SampleSpec::new(3, 5000), &grid).unwrap();
        assert!(audit.m_estimate.is_finite() && audit.c_estimate.is_finite());
        assert!(audit.sweep.holds());
        // f_z = 1.1 - 0.2|z|², f_z̄ = -0.1 z²
        for z in [p(0.3, 0.1), p(-0.5, 0.5), p(0.0, -0.8)] {
            let d = diff_sample(&f, z).unwrap();
            let v = z.value();
            assert!(close(d.f_z, c(1.1 - 0.2 * v.norm_sqr(), 0.0), 1e-8));
            assert!(close(d.f_zbar, -0.1 * v * v, 1e-8));
            assert!(close(d.laplacian, -0.8 * v, 1e-6));
        }
    }

    #[test]
    fn audit_rejects_uncertified_map() {
        let grid = GridSpec::new(21, 1e-2).unwrap();
        let mix = PlanarMap::new(|z: Complex64| z + 0.5 * z.conj());
        let err = thm24_audit(&mix, &QCParams::conformal(), &SampleSpec::new(1, 10), &grid).unwrap_err();
        assert!(matches!(err, Error::CertificateFailure { certificate: "kk_prime", .. }));
        let bowl = PlanarMap::new(|z: Complex64| z * (1.0 + z.norm_sqr()) * 0.4);
        let q = estimate_qc_params(&bowl, &grid);
        let err = thm24_audit(&bowl, &QCParams { b: 0.0, ..q }, &SampleSpec::new(1, 10), &grid).unwrap_err();
        assert!(matches!(err, Error::CertificateFailure { certificate: "poisson", .. }));
    }

    #[test]
    fn audit_range_violation() {
        let grid = GridSpec::new(21, 1e-2).unwrap();
        let big = PlanarMap::new(|z: Complex64| 1.5 * z);
        let err = thm24_audit(&big, &QCParams::conformal(), &SampleSpec::new(1, 10), &grid).unwrap_err();
        assert!(matches!(err, Error::RangeViolation { .. }));
    }

    #[test]
    fn composition_examples() {
        let grid = GridSpec::new(41, 1e-2).unwrap();
        let mix = PlanarMap::new(|z: Complex64| z + 0.5 * z.conj());
        let q = QCParams::new(3.0, 0.0, 0.0, 0.0).unwrap();
        let same = composition_property_check(&mix, &q, c(1.0, 0.0), &grid).unwrap();
        let base = kk_prime_certificate(&mix, &q, &grid);
        assert_eq!(same.violations, base.violations);
        assert_eq!(same.total, base.total);
        assert!(composition_property_check(&mix, &q, c(0.5, 0.0), &grid).unwrap().holds());
        let constant = composition_property_check(&mix, &q, c(0.0, 0.0), &grid).unwrap();
        assert!(constant.holds());
        assert_eq!(constant.flagged, constant.total);

        let q2 = QCParams::new(1.0, 0.0, 0.0, 0.0).unwrap();
        assert!(composition_property_check(&mix, &q2, c(0.5, 0.0), &grid).is_err());
    }

    #[test]
    fn estimated_params_certify() {
        let grid = GridSpec::new(41, 1e-2).unwrap();
        let biharm = PlanarMap::new(|z: Complex64| 1.5 * (1.0 - z.norm_sqr() / 3.0) * z * z);
        let q = estimate_qc_params(&biharm, &grid);
        assert!(q.k > 1.5 && q.k < 2.0, "{q:?}");
        assert!(kk_prime_certificate(&biharm, &q, &grid).holds());
        assert!(poisson_certificate(&biharm, &q, &grid).holds());
    }
}
