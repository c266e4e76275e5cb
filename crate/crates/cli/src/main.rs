#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use jlip_core::alphaharmonic::{
    dyadic_radii, sharpness_scan, theorem31_condition, thm31_bound_decomposition, AlphaHarmonicMap,
};
use jlip_core::maps::BuiltinMap;
use jlip_core::metrics::{j_ratio_sweep, mobius_disk, DiskPoint, SampleSpec, SWEEP_TOL};
use jlip_core::quasiconformal::{
    choose_a, subharmonicity_quadratic, thm24_audit, GridSpec, QCParams, ALGEBRAIC_TOL,
    SECOND_ORDER_TOL,
};
use jlip_core::report::PairSample;
use jlip_core::specfun::{gauss_2f1, HypParams, DEFAULT_TOL};
use jlip_core::{Complex64, Error};
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "jlip", version, about = "Distance ratio metric verification sweeps on the unit disk")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
struct Common {
    /// Coefficient file of an alpha-harmonic map
    #[arg(long, global = true)]
    map: Option<PathBuf>,
    /// identity | mobius:a_re,a_im,theta | antiholomorphic-mix:c | radial-cubic | alphaharm:FILE
    #[arg(long, global = true)]
    builtin: Option<String>,
    /// Overrides the alpha of a coefficient file
    #[arg(long, global = true, allow_hyphen_values = true)]
    alpha: Option<f64>,
    /// Complex point as "re,im"
    #[arg(long, global = true, allow_hyphen_values = true)]
    z: Option<String>,
    #[arg(long, global = true, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 101)]
    grid: usize,
    #[arg(long, global = true, default_value_t = 1e-2)]
    margin: f64,
    #[arg(id = "K", long = "K", global = true)]
    #[serde(rename = "K")]
    k: Option<f64>,
    #[arg(id = "Kprime", long = "Kprime", global = true)]
    #[serde(rename = "K_prime")]
    k_prime: Option<f64>,
    #[arg(id = "B", long = "B", global = true)]
    #[serde(rename = "B")]
    b: Option<f64>,
    #[arg(id = "C", long = "C", global = true)]
    #[serde(rename = "C")]
    c_const: Option<f64>,
    #[arg(id = "M", long = "M", global = true)]
    #[serde(rename = "M")]
    m: Option<f64>,
    #[arg(long, global = true)]
    constant: Option<f64>,
    /// Write per-sample ratios as CSV
    #[arg(long, global = true)]
    plot: Option<PathBuf>,
    /// Overrides the default tolerance (also settable through JLIP_TOL)
    #[arg(long, global = true, env = "JLIP_TOL")]
    tol: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Gauss hypergeometric function 2F1(a, b; c; x)
    Hyp2f1 {
        #[arg(long, allow_hyphen_values = true)]
        a: f64,
        #[arg(long, allow_hyphen_values = true)]
        b: f64,
        #[arg(long, allow_hyphen_values = true)]
        c: f64,
        #[arg(long)]
        x: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluates a map at --z
    Eval {
        #[command(flatten)]
        common: Common,
    },
    /// Coefficient condition S <= 1 of an alpha-harmonic map
    CheckCondition {
        #[command(flatten)]
        common: Common,
    },
    /// Sweeps j(f(z), f(w)) <= constant j(z, w) over seeded pairs
    VerifyLipschitz {
        /// Run the sweep even when the coefficient condition fails
        #[arg(long)]
        skip_condition: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Majorants of the contraction argument for the pair (--z, --w)
    BoundDecomp {
        #[arg(long, allow_hyphen_values = true)]
        w: String,
        #[command(flatten)]
        common: Common,
    },
    /// Radial j-ratios of |z|^{2(p-1)} z^m on radii 1 - 2^-t
    SharpnessScan {
        #[arg(long, default_value_t = 2)]
        p: u32,
        #[arg(long = "m-power", default_value_t = 1)]
        m_power: u32,
        #[arg(long)]
        conjugated: bool,
        #[arg(long, default_value_t = 20)]
        steps: u32,
        #[command(flatten)]
        common: Common,
    },
    /// Certificates, M and C estimates and the Lipschitz sweep of a map
    QcAudit {
        #[command(flatten)]
        common: Common,
    },
    /// Feasible A for the subharmonicity quadratic
    ChooseA {
        #[command(flatten)]
        common: Common,
    },
    /// Sweeps an automorphism with a = --z and rotation --theta against factor 2
    MobiusSweep {
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        theta: f64,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Serialize)]
struct ReportDocument {
    command: String,
    inputs: Value,
    result: Value,
    seed: u64,
    tolerances: Tolerances,
    version: String,
}

#[derive(Serialize)]
struct Tolerances {
    series: f64,
    sweep: f64,
    algebraic: f64,
    second_order: f64,
}

/// Finished command: result payload and whether its contracts held.
struct Outcome {
    result: Value,
    holds: bool,
}

fn input_error(message: impl Into<String>) -> Error {
    Error::InvalidParameter(message.into())
}

fn parse_complex(text: &str, flag: &str) -> Result<Complex64, Error> {
    let parts: Vec<&str> = text.split(',').collect();
    let [re, im] = parts.as_slice() else {
        return Err(input_error(format!("{flag} expects \"re,im\", got '{text}'")));
    };
    let parse = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| input_error(format!("{flag}: cannot parse '{s}' as a number")))
    };
    Ok(Complex64::new(parse(re)?, parse(im)?))
}

fn disk_point(text: &str, flag: &str) -> Result<DiskPoint, Error> {
    DiskPoint::new(parse_complex(text, flag)?)
}

fn require<T: Copy>(value: Option<T>, flag: &str) -> Result<T, Error> {
    value.ok_or_else(|| input_error(format!("missing required flag {flag}")))
}

fn load_map(common: &Common) -> Result<BuiltinMap, Error> {
    match (&common.map, &common.builtin) {
        (Some(path), None) => {
            let f = AlphaHarmonicMap::load(path)?;
            let f = match common.alpha {
                Some(alpha) => AlphaHarmonicMap::new(alpha, f.coeffs().clone())?,
                None => f,
            };
            Ok(BuiltinMap::AlphaHarmonic(f))
        }
        (None, Some(name)) => BuiltinMap::parse(name),
        (Some(_), Some(_)) => Err(input_error("pass either --map or --builtin, not both")),
        (None, None) => Err(input_error("missing --map FILE or --builtin NAME")),
    }
}

fn alpha_map(common: &Common) -> Result<AlphaHarmonicMap, Error> {
    match load_map(common)? {
        BuiltinMap::AlphaHarmonic(f) => Ok(f),
        _ => Err(input_error("this command needs an alpha-harmonic map (--map FILE or --builtin alphaharm:FILE)")),
    }
}

fn sample_spec(common: &Common) -> SampleSpec {
    SampleSpec::new(common.seed, common.samples)
}

fn grid_spec(common: &Common) -> Result<GridSpec, Error> {
    GridSpec::new(common.grid, common.margin)
}

fn to_value<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("report payloads serialize")
}

fn write_plot(path: &Path, pairs: &[PairSample]) -> Result<(), Error> {
    let io = |e: std::io::Error| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(out, "index,z_re,z_im,w_re,w_im,ratio").map_err(io)?;
    for p in pairs {
        writeln!(out, "{},{},{},{},{},{}", p.index, p.z.re, p.z.im, p.w.re, p.w.im, p.ratio).map_err(io)?;
    }
    out.flush().map_err(io)
}

fn maybe_plot(common: &Common, pairs: &[PairSample]) -> Result<(), Error> {
    match &common.plot {
        Some(path) => write_plot(path, pairs),
        None => Ok(()),
    }
}

fn qc_params(common: &Common, map: &BuiltinMap, grid: &GridSpec) -> Result<QCParams, Error> {
    let nominal = map.nominal_params(grid);
    QCParams::new(
        common.k.unwrap_or(nominal.k),
        common.k_prime.unwrap_or(nominal.k_prime),
        common.b.unwrap_or(nominal.b),
        common.c_const.unwrap_or(nominal.c),
    )
}

fn run(command: &Command, tol: f64) -> Result<Outcome, Error> {
    match command {
        Command::Hyp2f1 { a, b, c, x, .. } => {
            let p = HypParams::new(*a, *b, *c, *x)?.with_tol(tol)?;
            let value = gauss_2f1(&p)?;
            Ok(Outcome {
                result: json!({ "value": value }),
                holds: true,
            })
        }
        Command::Eval { common } => {
            let map = load_map(common)?;
            let z = disk_point(require(common.z.as_deref(), "--z")?, "--z")?;
            let value = map.eval(z.value());
            if !(value.re.is_finite() && value.im.is_finite()) {
                return Err(input_error("map evaluation failed at --z"));
            }
            Ok(Outcome {
                result: json!({ "z": z.value(), "value": value }),
                holds: true,
            })
        }
        Command::CheckCondition { common } => {
            let f = alpha_map(common)?;
            let c = theorem31_condition(&f)?;
            Ok(Outcome {
                result: json!({ "alpha": f.alpha(), "S": c.value, "satisfied": c.satisfied }),
                holds: c.satisfied,
            })
        }
        Command::VerifyLipschitz {
            skip_condition,
            common,
        } => {
            let map = load_map(common)?;
            let constant = common.constant.unwrap_or(1.0);
            let mut condition = Value::Null;
            if let BuiltinMap::AlphaHarmonic(f) = &map {
                let c = theorem31_condition(f)?;
                if !c.satisfied && !skip_condition {
                    return Err(input_error(format!(
                        "coefficient condition fails (S = {} > 1); pass --skip-condition to sweep anyway",
                        c.value
                    )));
                }
                condition = json!({ "S": c.value, "satisfied": c.satisfied });
            }
            let samples = sample_spec(common);
            let f = map.planar_map();
            let mut report = j_ratio_sweep("lipschitz_j", f.as_fn(), &samples.pairs(), constant, tol);
            report.seed = Some(samples.seed);
            maybe_plot(common, &report.pairs)?;
            Ok(Outcome {
                holds: report.holds(),
                result: json!({ "condition": condition, "report": report }),
            })
        }
        Command::BoundDecomp { w, common } => {
            let f = alpha_map(common)?;
            let z = disk_point(require(common.z.as_deref(), "--z")?, "--z")?;
            let w = disk_point(w, "--w")?;
            let b = thm31_bound_decomposition(&f, z, w)?;
            Ok(Outcome {
                holds: b.holds,
                result: to_value(&b),
            })
        }
        Command::SharpnessScan {
            p,
            m_power,
            conjugated,
            steps,
            common,
        } => {
            let s = sharpness_scan(*p, *m_power, *conjugated, &dyadic_radii(*steps))?;
            maybe_plot(common, &s.report.pairs)?;
            Ok(Outcome {
                holds: s.holds(),
                result: to_value(&s),
            })
        }
        Command::QcAudit { common } => {
            let map = load_map(common)?;
            let grid = grid_spec(common)?;
            let q = qc_params(common, &map, &grid)?;
            let f = map.planar_map();
            match thm24_audit(&f, &q, &sample_spec(common), &grid) {
                Ok(audit) => {
                    maybe_plot(common, &audit.sweep.pairs)?;
                    Ok(Outcome {
                        holds: audit.sweep.holds(),
                        result: json!({ "params": q, "audit": audit }),
                    })
                }
                Err(e @ (Error::CertificateFailure { .. } | Error::RangeViolation { .. })) => Ok(Outcome {
                    holds: false,
                    result: json!({ "params": q, "error": e.to_string() }),
                }),
                Err(e) => Err(e),
            }
        }
        Command::ChooseA { common } => {
            let q = QCParams::new(
                require(common.k, "--K")?,
                common.k_prime.unwrap_or(0.0),
                require(common.b, "--B")?,
                common.c_const.unwrap_or(0.0),
            )?;
            let m = require(common.m, "--M")?;
            let a = choose_a(&q, m)?;
            let quadratic = subharmonicity_quadratic(&q, m, a);
            Ok(Outcome {
                holds: quadratic >= -1e-9,
                result: json!({ "A": a, "quadratic": quadratic, "params": q, "M": m }),
            })
        }
        Command::MobiusSweep { theta, common } => {
            let a = disk_point(common.z.as_deref().unwrap_or("0,0"), "--z")?;
            let m = mobius_disk(a, *theta);
            let samples = sample_spec(common);
            let mut report = j_ratio_sweep("mobius_factor", |z| m.apply(z), &samples.pairs(), 2.0, tol);
            report.seed = Some(samples.seed);
            maybe_plot(common, &report.pairs)?;
            Ok(Outcome {
                holds: report.holds(),
                result: json!({ "automorphism": m, "report": report }),
            })
        }
    }
}

fn common_of(command: &Command) -> &Common {
    match command {
        Command::Hyp2f1 { common, .. }
        | Command::Eval { common }
        | Command::CheckCondition { common }
        | Command::VerifyLipschitz { common, .. }
        | Command::BoundDecomp { common, .. }
        | Command::SharpnessScan { common, .. }
        | Command::QcAudit { common }
        | Command::ChooseA { common }
        | Command::MobiusSweep { common, .. } => common,
    }
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::Hyp2f1 { .. } => "hyp2f1",
        Command::Eval { .. } => "eval",
        Command::CheckCondition { .. } => "check-condition",
        Command::VerifyLipschitz { .. } => "verify-lipschitz",
        Command::BoundDecomp { .. } => "bound-decomp",
        Command::SharpnessScan { .. } => "sharpness-scan",
        Command::QcAudit { .. } => "qc-audit",
        Command::ChooseA { .. } => "choose-a",
        Command::MobiusSweep { .. } => "mobius-sweep",
    }
}

fn inputs_of(command: &Command) -> Value {
    let mut inputs = to_value(common_of(command));
    let extra = match command {
        Command::Hyp2f1 { a, b, c, x, .. } => json!({ "a": a, "b": b, "c": c, "x": x }),
        Command::VerifyLipschitz { skip_condition, .. } => json!({ "skip_condition": skip_condition }),
        Command::BoundDecomp { w, .. } => json!({ "w": w }),
        Command::SharpnessScan {
            p,
            m_power,
            conjugated,
            steps,
            ..
        } => json!({ "p": p, "m_power": m_power, "conjugated": conjugated, "steps": steps }),
        Command::MobiusSweep { theta, .. } => json!({ "theta": theta }),
        _ => json!({}),
    };
    if let (Value::Object(base), Value::Object(more)) = (&mut inputs, extra) {
        base.extend(more);
    }
    inputs
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = common_of(&cli.command);
    if let Some(t) = common.tol {
        if !(t > 0.0) {
            eprintln!("error: --tol must be positive, got {t}");
            return ExitCode::from(2);
        }
    }
    let (series_tol, sweep_tol) = match (&cli.command, common.tol) {
        (Command::Hyp2f1 { .. }, Some(t)) => (t, SWEEP_TOL),
        (_, Some(t)) => (DEFAULT_TOL, t),
        (_, None) => (DEFAULT_TOL, SWEEP_TOL),
    };
    let tol = if matches!(cli.command, Command::Hyp2f1 { .. }) {
        series_tol
    } else {
        sweep_tol
    };
    match run(&cli.command, tol) {
        Ok(outcome) => {
            let doc = ReportDocument {
                command: command_name(&cli.command).to_string(),
                inputs: inputs_of(&cli.command),
                result: outcome.result,
                seed: common.seed,
                tolerances: Tolerances {
                    series: series_tol,
                    sweep: sweep_tol,
                    algebraic: ALGEBRAIC_TOL,
                    second_order: SECOND_ORDER_TOL,
                },
                version: env!("CARGO_PKG_VERSION").to_string(),
            };
            let text = serde_json::to_string_pretty(&doc).expect("document serializes");
            // a closed pipe downstream is not an error of the run
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            if outcome.holds {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
