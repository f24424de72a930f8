//! `cvqpt`: simulate coherent probes, reconstruct Gaussian channels, predict
//! outputs and check everything against the truncated Fock model.
//!
//! Exit codes: 0 success, 1 failed check, 2 parse or usage error,
//! 3 dimension mismatch, 4 ill-conditioned probe set, 5 inconsistent
//! quadratic blocks, 6 Fock cutoff too small, 7 anything else.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use cvqpt::fock::{displaced_squeezed_vector, fock_vector, FockOperator, KrausChannel};
use cvqpt::linalg::CVector;
use cvqpt::process::{predict_coherent, predict_gaussian, simulate_probes, ChannelSpec, GaussianChannelSpec, ProbeRecord};
use cvqpt::tomo::{add_noise, closed_form_default, probe_design, reconstruct, ChoiReconstruction, ProbeSet};
use cvqpt::verify::{analytic_grid, oracle_grid, verify_channel, Grid, VerifyOptions};
use cvqpt::{Exec, GaussianQForm};

use args::{InputState, ProbeArg};

#[derive(Parser)]
#[command(name = "cvqpt", version, about = "Coherent-state tomography of Gaussian channels")]
struct Cli {
    /// Run every loop on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate coherent probes through a channel and write probe records.
    Probe {
        #[arg(long)]
        channel: PathBuf,
        /// "default", or probes as `re,im;re,im;...` with `|` between modes.
        #[arg(long, default_value = "default")]
        probes: ProbeArg,
        /// Use the reduced probe set for trace-preserving channels.
        #[arg(long)]
        tp: bool,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reconstruct the Choi form from probe records.
    Reconstruct {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        tp: bool,
        #[arg(long, conflicts_with = "tp")]
        closed_form: bool,
        /// Largest accepted solver residual.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate the predicted output Q-function on a grid (CSV).
    Predict {
        /// Channel file or reconstruction report.
        #[arg(long)]
        channel: PathBuf,
        /// `coherent:RE,IM[,RE,IM...]`, `squeezed:R,RE,IM` or `fock:RE,IM[,RE,IM...]`.
        #[arg(long)]
        input: InputState,
        /// Evaluate through the Fock model instead of the Gaussian formulas.
        #[arg(long)]
        oracle: bool,
        #[arg(long, default_value_t = 40)]
        cutoff: usize,
        /// Tail tolerance for Fock-space input states.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// CX,CY,HALFWIDTH,RES
        #[arg(long, default_value = "0,0,2,21", value_parser = args::parse_grid)]
        grid: Grid,
        /// Output mode shown on the grid; the others are held at 0.
        #[arg(long, default_value_t = 0)]
        mode: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate, reconstruct, predict and compare with the Fock model.
    Verify {
        #[arg(long)]
        channel: PathBuf,
        /// Use these records instead of simulating the default probes.
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long, default_value_t = 40)]
        cutoff: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 1e-6)]
        oracle_tol: f64,
        #[arg(long, default_value = "0,0,1.4142135623730951,5", value_parser = args::parse_grid)]
        grid: Grid,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank candidate probe sets by conditioning.
    Design {
        /// JSON array of probe sets.
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum Failure {
    Parse(String),
    Lib(cvqpt::Error),
    Check(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        use cvqpt::Error as E;
        match self {
            Failure::Check(_) => 1,
            Failure::Parse(_) => 2,
            Failure::Io(_) => 7,
            Failure::Lib(e) => match e {
                E::DimensionMismatch { .. } | E::BadPartition { .. } => 3,
                E::IllConditioned { .. } | E::Singular { .. } => 4,
                E::QuadraticInconsistency { .. } => 5,
                E::CutoffTooSmall { .. } | E::AmplificationOverflow { .. } => 6,
                _ => 7,
            },
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Parse(m) => write!(f, "parse error: {m}"),
            Failure::Lib(e) => write!(f, "{e}"),
            Failure::Check(m) => write!(f, "check failed: {m}"),
            Failure::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<cvqpt::Error> for Failure {
    fn from(e: cvqpt::Error) -> Self {
        Failure::Lib(e)
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

/// Probe file: the records plus the noise settings that produced them.
#[derive(Serialize, Deserialize)]
struct ProbeFile {
    k: usize,
    sigma: f64,
    seed: u64,
    records: Vec<ProbeRecord>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RecordsInput {
    File(ProbeFile),
    Bare(Vec<ProbeRecord>),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ChannelInput {
    Spec(ChannelSpec),
    Reconstruction(ChoiReconstruction),
}

fn read(path: &Path) -> Outcome<String> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn parse<T: serde::de::DeserializeOwned>(path: &Path) -> Outcome<T> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Outcome<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn read_channel_spec(path: &Path) -> Outcome<ChannelSpec> {
    parse(path)
}

fn read_records(path: &Path) -> Outcome<Vec<ProbeRecord>> {
    Ok(match parse::<RecordsInput>(path)? {
        RecordsInput::File(f) => f.records,
        RecordsInput::Bare(r) => r,
    })
}

fn cmd_probe(channel: &Path, probes: &ProbeArg, tp: bool, sigma: f64, seed: u64, out: Option<&Path>, exec: Exec) -> Outcome<()> {
    let spec = read_channel_spec(channel)?.to_gaussian()?;
    let k = spec.k();
    let set = match probes {
        ProbeArg::Default if tp => ProbeSet::default_tp(k),
        ProbeArg::Default => ProbeSet::default_general(k),
        ProbeArg::Inline(alphas) => ProbeSet::new(k, alphas.clone(), tp)?,
    };
    let clean = simulate_probes(&spec, set.alphas(), exec)?;
    let records = add_noise(&clean, sigma, seed)?;
    emit(out, &json(&ProbeFile { k, sigma, seed, records }))
}

fn cmd_reconstruct(records: &Path, tp: bool, closed_form: bool, tol: f64, out: Option<&Path>) -> Outcome<()> {
    let recs = read_records(records)?;
    let r = if closed_form { closed_form_default(&recs)? } else { reconstruct(&recs, tp)? };
    emit(out, &json(&r))?;
    let worst = r.residual_k.max(r.residual_j);
    if worst > tol {
        return Err(Failure::Check(format!("residual {worst:e} exceeds tolerance {tol:e}")));
    }
    Ok(())
}

fn gaussian_of(input: &ChannelInput) -> Outcome<GaussianChannelSpec> {
    Ok(match input {
        ChannelInput::Spec(s) => s.to_gaussian()?,
        ChannelInput::Reconstruction(r) => r.to_spec()?,
    })
}

fn input_vector(input: &InputState, cutoff: usize, tol: f64) -> Outcome<CVector> {
    let v = match input {
        InputState::Coherent(a) => {
            if a.len() != 1 {
                return Err(cvqpt::Error::NoOracle(format!("{}-mode input", a.len())).into());
            }
            cvqpt::fock::coherent_vector_with_tol(a[0], cutoff, tol)?
        }
        InputState::Squeezed { r, z } => displaced_squeezed_vector(*r, *z, cutoff, tol)?,
        InputState::Fock(coeffs) => {
            if coeffs.len() > cutoff + 1 {
                return Err(cvqpt::Error::CutoffTooSmall {
                    cutoff,
                    tail: coeffs[cutoff + 1..].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(),
                }
                .into());
            }
            let mut padded = coeffs.clone();
            padded.resize(cutoff + 1, Complex64::new(0.0, 0.0));
            fock_vector(&padded)?
        }
    };
    Ok(v)
}

#[allow(clippy::too_many_arguments)]
fn cmd_predict(
    channel: &Path,
    input: &InputState,
    oracle: bool,
    cutoff: usize,
    tol: f64,
    grid: Grid,
    mode: usize,
    out: Option<&Path>,
    exec: Exec,
) -> Outcome<()> {
    let chan: ChannelInput = parse(channel)?;
    let q = if oracle {
        let model: KrausChannel = match &chan {
            ChannelInput::Spec(s) => s.fock_model(cutoff + 1)?,
            ChannelInput::Reconstruction(_) => return Err(cvqpt::Error::NoOracle("reconstructed channel".into()).into()),
        };
        let v = input_vector(input, cutoff, tol)?;
        let rho = model.apply(&FockOperator::pure(&v, cutoff + 1, 1)?, exec)?;
        oracle_grid(&rho, grid, mode, exec)?
    } else {
        let spec = gaussian_of(&chan)?;
        let form = match input {
            InputState::Coherent(a) => {
                if a.len() != spec.k() {
                    return Err(cvqpt::Error::DimensionMismatch {
                        what: "input modes",
                        expected: spec.k(),
                        found: a.len(),
                    }
                    .into());
                }
                predict_coherent(&spec, a)?
            }
            InputState::Squeezed { r, z } => predict_gaussian(&spec, &GaussianQForm::displaced_squeezed(*r, *z)?)?,
            InputState::Fock(_) => return Err(Failure::Parse("Fock-coefficient input needs --oracle".into())),
        };
        analytic_grid(&form, grid, mode, exec)?
    };
    emit(out, &q.to_csv())
}

fn cmd_verify(channel: &Path, records: Option<&Path>, opts: &VerifyOptions, out: Option<&Path>, exec: Exec) -> Outcome<()> {
    let spec = read_channel_spec(channel)?;
    let recs = records.map(read_records).transpose()?;
    let report = verify_channel(&spec, recs.as_deref(), opts, exec)?;
    emit(out, &json(&report))?;
    match report.first_failure() {
        Some(c) => Err(Failure::Check(match &c.detail {
            Some(d) => format!("{} ({d})", c.name),
            None => format!("{} (deviation {:e} > {:e})", c.name, c.deviation, c.tolerance),
        })),
        None => Ok(()),
    }
}

fn cmd_design(candidates: &Path, out: Option<&Path>) -> Outcome<()> {
    let sets: Vec<ProbeSet> = parse(candidates)?;
    if sets.is_empty() {
        return Err(Failure::Parse("candidate list is empty".into()));
    }
    emit(out, &json(&probe_design(&sets)?))
}

fn check_positive(name: &str, v: f64) -> Outcome<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Failure::Parse(format!("--{name} must be positive")))
    }
}

fn run(cli: Cli) -> Outcome<()> {
    let exec = if cli.sequential { Exec::Sequential } else { Exec::default() };
    match cli.command {
        Command::Probe {
            channel,
            probes,
            tp,
            sigma,
            seed,
            out,
        } => {
            if !(sigma >= 0.0) {
                return Err(Failure::Parse("--sigma must be non-negative".into()));
            }
            cmd_probe(&channel, &probes, tp, sigma, seed, out.as_deref(), exec)
        }
        Command::Reconstruct {
            records,
            tp,
            closed_form,
            tol,
            out,
        } => {
            check_positive("tol", tol)?;
            cmd_reconstruct(&records, tp, closed_form, tol, out.as_deref())
        }
        Command::Predict {
            channel,
            input,
            oracle,
            cutoff,
            tol,
            grid,
            mode,
            out,
        } => {
            check_positive("tol", tol)?;
            cmd_predict(&channel, &input, oracle, cutoff, tol, grid, mode, out.as_deref(), exec)
        }
        Command::Verify {
            channel,
            records,
            cutoff,
            tol,
            oracle_tol,
            grid,
            out,
        } => {
            check_positive("tol", tol)?;
            check_positive("oracle-tol", oracle_tol)?;
            let opts = VerifyOptions { tol, oracle_tol, cutoff, grid };
            cmd_verify(&channel, records.as_deref(), &opts, out.as_deref(), exec)
        }
        Command::Design { candidates, out } => cmd_design(&candidates, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("cvqpt: {f}");
            ExitCode::from(f.code())
        }
    }
}
