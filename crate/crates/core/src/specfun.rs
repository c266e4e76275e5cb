//! Pochhammer symbols and the Gauss hypergeometric function `2F1(a, b; c; x)`
//! for real parameters and `x` in `[0, 1]`.
//!
//! Non-terminating series are summed directly. At `x = 1` two routes are
//! available: the Gauss summation formula evaluated through log-gamma
//! ([`gauss_2f1_at_one`]) and the limit of the partial sums themselves
//! ([`series_limit_at_one`]), which accelerates the slowly converging tail
//! with Richardson extrapolation in the number of terms. The two routes share
//! no code and are used to check each other.

use crate::error::{Error, Result};

/// Default relative term tolerance for series truncation.
pub const DEFAULT_TOL: f64 = 1e-14;

/// Default cap on the number of series terms for `x <= 0.95`.
pub const DEFAULT_N_MAX: usize = 100_000;

/// Cap used for non-terminating series with `x > 0.95`.
pub const NEAR_ONE_N_MAX: usize = 1_000_000;

/// Minimum number of terms before the truncation test may fire.
pub const WARM_UP_TERMS: usize = 10;

/// Absolute tolerance used to recognise nonpositive integers.
pub const INTEGER_TOL: f64 = 1e-12;

/// Returns `Some(m)` when `v` is within [`INTEGER_TOL`] of the integer `-m`, `m >= 0`.
pub fn nonpositive_integer(v: f64) -> Option<u64> {
    let r = v.round();
    if r <= 0.0 && (v - r).abs() <= INTEGER_TOL {
        Some((-r) as u64)
    } else {
        None
    }
}

/// Natural logarithm of `|Γ(x)|` together with the sign of `Γ(x)`.
pub fn ln_gamma(x: f64) -> (f64, f64) {
    let (value, sign) = libm::lgamma_r(x);
    (value, if sign < 0 { -1.0 } else { 1.0 })
}

/// Rising factorial `(a)_n = a (a + 1) ... (a + n - 1)`, with `(a)_0 = 1`.
pub fn pochhammer(a: f64, n: u64) -> Result<f64> {
    let mut product = 1.0_f64;
    for i in 0..n {
        product *= a + i as f64;
        if !product.is_finite() {
            return Err(Error::Overflow { index: i });
        }
        if product == 0.0 {
            return Ok(0.0);
        }
    }
    Ok(product)
}

/// Parameters of one `2F1(a, b; c; x)` evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub x: f64,
    /// Relative term tolerance.
    pub tol: f64,
    /// Series cap.
    pub n_max: usize,
}

impl HypParams {
    pub fn new(a: f64, b: f64, c: f64, x: f64) -> Result<Self> {
        let p = HypParams {
            a,
            b,
            c,
            x,
            tol: DEFAULT_TOL,
            n_max: DEFAULT_N_MAX,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_tol(mut self, tol: f64) -> Result<Self> {
        self.tol = tol;
        self.validate()?;
        Ok(self)
    }

    pub fn with_n_max(mut self, n_max: usize) -> Result<Self> {
        self.n_max = n_max;
        self.validate()?;
        Ok(self)
    }

    /// Number of the last nonzero term when the series terminates.
    pub fn terminating_degree(&self) -> Option<u64> {
        match (nonpositive_integer(self.a), nonpositive_integer(self.b)) {
            (Some(m), Some(n)) => Some(m.min(n)),
            (Some(m), None) | (None, Some(m)) => Some(m),
            (None, None) => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.a, self.b, self.c, self.x, self.tol]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter(
                "hypergeometric parameters must be finite".into(),
            ));
        }
        if let Some(m) = nonpositive_integer(self.c) {
            // (c)_n vanishes before the series terminates
            let safe = self.terminating_degree().is_some_and(|d| d <= m);
            if !safe {
                return Err(Error::InvalidParameter(format!(
                    "c = {} is a nonpositive integer",
                    self.c
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.x) {
            return Err(Error::InvalidParameter(format!(
                "x = {} lies outside [0, 1]",
                self.x
            )));
        }
        if self.x == 1.0 && self.terminating_degree().is_none() && self.a + self.b >= self.c {
            return Err(Error::Divergence {
                excess: self.c - self.a - self.b,
            });
        }
        if self.tol <= 0.0 {
            return Err(Error::InvalidParameter("tol must be positive".into()));
        }
        if self.n_max == 0 {
            return Err(Error::InvalidParameter("n_max must be positive".into()));
        }
        Ok(())
    }
}

fn finite_sum(a: f64, b: f64, c: f64, x: f64, degree: u64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..degree {
        let n = n as f64;
        term *= (a + n) * (b + n) / ((c + n) * (n + 1.0)) * x;
        sum += term;
    }
    sum
}

/// Direct summation for `x < 1`; no validation.
pub(crate) fn sum_series(a: f64, b: f64, c: f64, x: f64, tol: f64, n_max: usize) -> Result<f64> {
    if x == 0.0 {
        return Ok(1.0);
    }
    let p = HypParams {
        a,
        b,
        c,
        x,
        tol,
        n_max,
    };
    if let Some(degree) = p.terminating_degree() {
        return Ok(finite_sum(a, b, c, x, degree));
    }
    let n_max = if x > 0.95 { n_max.max(NEAR_ONE_N_MAX) } else { n_max };
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    for n in 0..n_max {
        let nf = n as f64;
        term *= (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * x;
        sum += term;
        if n + 1 >= WARM_UP_TERMS && term.abs() < tol * sum.abs().max(1.0) {
            return Ok(sum);
        }
    }
    Err(Error::NonConvergence { terms: n_max })
}

/// Evaluates `2F1(a, b; c; x)` by its power series.
///
/// Terminating series are summed exactly. At `x = 1` a non-terminating series
/// is routed through [`series_limit_at_one`].
pub fn gauss_2f1(p: &HypParams) -> Result<f64> {
    p.validate()?;
    if p.x == 1.0 {
        return match p.terminating_degree() {
            Some(degree) => Ok(finite_sum(p.a, p.b, p.c, 1.0, degree)),
            None => series_limit_at_one(p.a, p.b, p.c, p.n_max.max(NEAR_ONE_N_MAX)),
        };
    }
    sum_series(p.a, p.b, p.c, p.x, p.tol, p.n_max)
}

/// Gauss summation `F(a, b; c; 1) = Γ(c)Γ(c-a-b) / (Γ(c-a)Γ(c-b))`.
///
/// Terminating series return their exact finite sum.
pub fn gauss_2f1_at_one(a: f64, b: f64, c: f64) -> Result<f64> {
    let p = HypParams {
        a,
        b,
        c,
        x: 1.0,
        tol: DEFAULT_TOL,
        n_max: DEFAULT_N_MAX,
    };
    p.validate()?;
    if let Some(degree) = p.terminating_degree() {
        return Ok(finite_sum(a, b, c, 1.0, degree));
    }
    let excess = c - a - b;
    // 1/Γ vanishes at the poles
    if nonpositive_integer(c - a).is_some() || nonpositive_integer(c - b).is_some() {
        return Ok(0.0);
    }
    let (lc, sc) = ln_gamma(c);
    let (le, se) = ln_gamma(excess);
    let (la, sa) = ln_gamma(c - a);
    let (lb, sb) = ln_gamma(c - b);
    Ok(sc * se * sa * sb * (lc + le - la - lb).exp())
}

const RICHARDSON_LEVELS: usize = 7;
const RICHARDSON_ACCEPT: f64 = 1e-11;

/// Limit of the partial sums of `2F1(a, b; c; 1)` for `c - a - b > 0`.
///
/// The tail after `N` terms behaves like `N^{-(c-a-b)} (d0 + d1/N + ...)`, so
/// partial sums at `N, 2N, 4N, ...` are combined by Richardson extrapolation
/// with the known exponents `c - a - b + m`. The starting `N` doubles until
/// the two finest diagonal entries agree or `n_max` is reached.
pub fn series_limit_at_one(a: f64, b: f64, c: f64, n_max: usize) -> Result<f64> {
    let p = HypParams {
        a,
        b,
        c,
        x: 1.0,
        tol: DEFAULT_TOL,
        n_max,
    };
    p.validate()?;
    if let Some(degree) = p.terminating_degree() {
        return Ok(finite_sum(a, b, c, 1.0, degree));
    }
    let sigma = c - a - b;
    let scale = a.abs().max(b.abs()).max(c.abs()).ceil() as usize;
    let mut n0 = 64 + 8 * scale;
    loop {
        let n_last = n0 << (RICHARDSON_LEVELS - 1);
        if n_last > n_max {
            return Err(Error::NonConvergence { terms: n_max });
        }
        let mut partial = Vec::with_capacity(RICHARDSON_LEVELS);
        let mut next_stop = n0;
        let mut term = 1.0_f64;
        let mut sum = 1.0_f64;
        // sum holds terms 0..=n after iteration n
        for n in 0..n_last {
            if n + 1 == next_stop {
                partial.push(sum);
                next_stop *= 2;
            }
            let nf = n as f64;
            term *= (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0));
            sum += term;
        }

        let mut table = partial.clone();
        let mut previous_diag = table[RICHARDSON_LEVELS - 1];
        let mut diag = previous_diag;
        for m in 1..RICHARDSON_LEVELS {
            let factor = 2f64.powf(sigma + (m - 1) as f64);
            for j in (m..RICHARDSON_LEVELS).rev() {
                table[j] = (factor * table[j] - table[j - 1]) / (factor - 1.0);
            }
            previous_diag = diag;
            diag = table[RICHARDSON_LEVELS - 1];
        }
        if (diag - previous_diag).abs() <= RICHARDSON_ACCEPT * diag.abs().max(1.0) {
            return Ok(diag);
        }
        n0 *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pochhammer_definition() {
        assert_eq!(pochhammer(2.0, 0).unwrap(), 1.0);
        assert_eq!(pochhammer(2.0, 3).unwrap(), 24.0);
        assert_eq!(pochhammer(-1.0, 2).unwrap(), 0.0);
        assert_eq!(pochhammer(0.5, 1).unwrap(), 0.5);
    }

    #[test]
    fn pochhammer_overflow() {
        assert!(matches!(
            pochhammer(1e300, 3),
            Err(Error::Overflow { index: 1 })
        ));
    }

    #[test]
    fn pochhammer_matches_gamma_ratio() {
        for &a in &[0.1, 0.37, 1.0, 2.5, 7.25, 9.9] {
            for n in 0..=30u64 {
                let (lhs, _) = ln_gamma(a + n as f64);
                let (rhs, _) = ln_gamma(a);
                let expected = (lhs - rhs).exp();
                assert_relative_eq!(pochhammer(a, n).unwrap(), expected, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn ln_gamma_accuracy_on_factorials() {
        let mut factorial = 1.0_f64;
        for n in 1..=50u32 {
            // Γ(n) = (n-1)!
            let (value, sign) = ln_gamma(n as f64);
            assert_eq!(sign, 1.0);
            if n > 2 {
                assert_relative_eq!(value, factorial.ln(), max_relative = 1e-12);
            } else {
                assert!(value.abs() < 1e-15);
            }
            factorial *= n as f64;
        }
        let (half, _) = ln_gamma(0.5);
        assert_relative_eq!(half, 0.5 * std::f64::consts::PI.ln(), max_relative = 1e-12);
        let (value, sign) = ln_gamma(-0.5);
        assert_eq!(sign, -1.0);
        assert_relative_eq!(value, (2.0 * std::f64::consts::PI.sqrt()).ln(), max_relative = 1e-12);
    }

    #[test]
    fn value_at_zero_is_one() {
        for &(a, b, c) in &[(1.0, 1.0, 2.0), (-3.5, 2.0, 0.5), (10.0, -0.3, 7.0)] {
            assert_eq!(gauss_2f1(&HypParams::new(a, b, c, 0.0).unwrap()).unwrap(), 1.0);
        }
    }

    #[test]
    fn log_closed_form() {
        // F(1,1;2;x) = -ln(1-x)/x
        let p = HypParams::new(1.0, 1.0, 2.0, 0.5).unwrap();
        let v = gauss_2f1(&p).unwrap();
        assert_relative_eq!(v, 2.0 * std::f64::consts::LN_2, max_relative = 1e-12);
        assert!((v - 1.3862944).abs() < 1e-7);
    }

    #[test]
    fn terminating_series() {
        let p = HypParams::new(-1.0, 1.0, 3.0, 0.6).unwrap();
        assert_relative_eq!(gauss_2f1(&p).unwrap(), 0.8, max_relative = 1e-15);
        // F(-2, b; c; x) = 1 - 2bx/c + b(b+1)x^2/(c(c+1))
        let (b, c, x) = (1.5, 2.5, 0.4);
        let p = HypParams::new(-2.0, b, c, x).unwrap();
        let expected = 1.0 - 2.0 * b * x / c + b * (b + 1.0) * x * x / (c * (c + 1.0));
        assert_relative_eq!(gauss_2f1(&p).unwrap(), expected, max_relative = 1e-15);
    }

    #[test]
    fn terminating_with_negative_c_is_admissible() {
        // degree 1 stops before (c)_n vanishes
        let p = HypParams::new(-1.0, 2.0, -3.0, 0.5).unwrap();
        assert_relative_eq!(gauss_2f1(&p).unwrap(), 1.0 + 2.0 * 0.5 / 3.0, max_relative = 1e-15);
        assert!(HypParams::new(0.5, 2.0, -3.0, 0.5).is_err());
        assert!(HypParams::new(0.5, 2.0, 0.0, 0.5).is_err());
    }

    #[test]
    fn x_equal_one_needs_convergence() {
        assert!(matches!(
            HypParams::new(1.0, 1.0, 2.0, 1.0),
            Err(Error::Divergence { .. })
        ));
        assert!(HypParams::new(-2.0, 5.0, 1.5, 1.0).is_ok());
        assert!(HypParams::new(0.2, 0.2, 1.0, 1.1).is_err());
    }

    #[test]
    fn gauss_value_at_one() {
        assert_eq!(gauss_2f1_at_one(0.0, 3.0, 4.0).unwrap(), 1.0);
        assert_relative_eq!(gauss_2f1_at_one(-1.0, 1.0, 3.0).unwrap(), 2.0 / 3.0, max_relative = 1e-15);
        let v = gauss_2f1_at_one(0.5, 0.5, 2.0).unwrap();
        assert_relative_eq!(v, 4.0 / std::f64::consts::PI, max_relative = 1e-13);
        assert!((v - 1.2732395).abs() < 1e-7);
    }

    #[test]
    fn gauss_value_at_one_diverges() {
        assert!(matches!(
            gauss_2f1_at_one(1.0, 1.0, 2.0),
            Err(Error::Divergence { .. })
        ));
    }

    #[test]
    fn non_convergence_reported() {
        let p = HypParams::new(1.0, 1.0, 2.0, 0.9)
            .unwrap()
            .with_n_max(20)
            .unwrap();
        assert!(matches!(gauss_2f1(&p), Err(Error::NonConvergence { terms: 20 })));
    }

    #[test]
    fn series_limit_matches_gauss_formula() {
        for &(a, b, c) in &[(0.5, 0.5, 2.0), (1.2, 0.7, 2.0), (2.9, 2.9, 7.9), (0.1, 0.3, 1.3)] {
            let limit = series_limit_at_one(a, b, c, NEAR_ONE_N_MAX).unwrap();
            let gauss = gauss_2f1_at_one(a, b, c).unwrap();
            assert_relative_eq!(limit, gauss, max_relative = 1e-9);
        }
    }

    #[test]
    fn terminating_limit_near_one() {
        for &(a, b, c) in &[(-1.0, 1.0, 3.0), (-3.0, 0.4, 1.7), (2.5, -4.0, 0.3)] {
            let near = gauss_2f1(&HypParams::new(a, b, c, 1.0 - 1e-12).unwrap()).unwrap();
            let at_one = gauss_2f1_at_one(a, b, c).unwrap();
            assert_relative_eq!(near, at_one, max_relative = 1e-8);
        }
    }

    #[test]
    fn near_one_direct_summation_uses_raised_cap() {
        // 0.998 needs ~2e4 terms, above a 1e4 cap
        let p = HypParams::new(0.5, 0.5, 2.0, 0.998)
            .unwrap()
            .with_n_max(10_000)
            .unwrap();
        let v = gauss_2f1(&p).unwrap();
        assert!(v < 4.0 / std::f64::consts::PI && v > 1.26);
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(100))]

            #[test]
            fn increasing_in_x(a in 0.01f64..5.0, b in 0.01f64..5.0, c in 0.01f64..8.0) {
                let mut previous = f64::NEG_INFINITY;
                for i in 0..20 {
                    let x = 0.95 * i as f64 / 19.0;
                    let v = gauss_2f1(&HypParams::new(a, b, c, x).unwrap()).unwrap();
                    prop_assert!(v > previous);
                    previous = v;
                }
            }

            #[test]
            fn series_at_one_matches_gamma_route(
                a in 0.01f64..3.0, b in 0.01f64..3.0, c in 1.0f64..8.0,
            ) {
                prop_assume!(a + b < c - 0.1);
                let p = HypParams::new(a, b, c, 1.0).unwrap().with_n_max(NEAR_ONE_N_MAX).unwrap();
                let series = gauss_2f1(&p).unwrap();
                let gauss = gauss_2f1_at_one(a, b, c).unwrap();
                prop_assert!(((series - gauss) / gauss).abs() < 1e-8, "{} vs {}", series, gauss);
            }
        }
    }
}
