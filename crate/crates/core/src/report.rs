use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// One evaluated pair of a sampling sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSample {
    pub index: usize,
    pub z: Complex64,
    pub w: Complex64,
    /// `j(f(z), f(w)) / j(z, w)`; NaN for skipped or escaped pairs.
    pub ratio: f64,
}

/// Outcome of a sampling sweep or a grid certificate.
///
/// `passed + violations + skipped == total` always holds. `extremum` is the
/// largest ratio (sweeps) or the largest signed excess `lhs - rhs`
/// (certificates) over the non-skipped items, and `witness` holds the
/// point(s) attaining it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: String,
    pub total: usize,
    pub passed: usize,
    pub violations: usize,
    pub skipped: usize,
    pub extremum: f64,
    pub witness: Vec<Complex64>,
    pub tolerance: f64,
    /// Bound the extremum is compared against, when there is one.
    pub bound: Option<f64>,
    pub seed: Option<u64>,
    /// Items that passed but deserve attention (e.g. vanishing Jacobian).
    pub flagged: usize,
    /// Sample points whose image left the disk.
    pub escapes: usize,
    #[serde(skip)]
    pub pairs: Vec<PairSample>,
}

impl VerificationReport {
    pub(crate) fn new(check: &str, tolerance: f64) -> Self {
        VerificationReport {
            check: check.to_string(),
            total: 0,
            passed: 0,
            violations: 0,
            skipped: 0,
            extremum: f64::NEG_INFINITY,
            witness: Vec::new(),
            tolerance,
            bound: None,
            seed: None,
            flagged: 0,
            escapes: 0,
            pairs: Vec::new(),
        }
    }

    pub fn holds(&self) -> bool {
        self.violations == 0
    }

    /// Records a candidate extremum; earlier items win ties.
    pub(crate) fn offer(&mut self, value: f64, witness: &[Complex64]) {
        if value > self.extremum {
            self.extremum = value;
            self.witness = witness.to_vec();
        }
    }

    /// Serialized form used for byte-level determinism checks.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Per-node status produced by a pointwise check before reduction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum NodeOutcome {
    Pass { excess: f64, flagged: bool },
    Violation { excess: f64 },
    Skip,
}

/// Folds node outcomes in index order.
pub(crate) fn reduce_nodes(
    report: &mut VerificationReport,
    nodes: &[Complex64],
    outcomes: &[NodeOutcome],
) {
    for (z, outcome) in nodes.iter().zip(outcomes) {
        report.total += 1;
        match *outcome {
            NodeOutcome::Pass { excess, flagged } => {
                report.passed += 1;
                if flagged {
                    report.flagged += 1;
                }
                report.offer(excess, &[*z]);
            }
            NodeOutcome::Violation { excess } => {
                report.violations += 1;
                report.offer(excess, &[*z]);
            }
            NodeOutcome::Skip => report.skipped += 1,
        }
    }
}
