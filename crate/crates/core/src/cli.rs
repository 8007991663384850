//! Command-line front end for the `wh` binary.
//!
//! Exit codes: 0 on success, 1 when a verdict fails, 2 on usage, input or
//! computation errors.

use std::ffi::OsString;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::acceptance;
use crate::averages::{is_bscc, repeated_average};
use crate::caps::{Caps, ORACLE_DEPTH_LIMIT};
use crate::constructions::{
    build_dependent, build_exact, build_exact_sequence, build_ris, gap_demo, gap_toy_params, RisWitness,
};
use crate::error::{Error, Result};
use crate::estimates::{check_counting, fuzz, random_counting, Bundle, CountingInstance, EstimateInstance, Kind};
use crate::functionals::Functional;
use crate::gen;
use crate::norm::{full_j_max, norm_bounds, NormOptions};
use crate::params::{ParameterSystem, ParamsConfig, SigmaRegistry, Split};
use crate::rational;
use crate::schreier::{enumerate, is_member, FiniteSet, Variant};
use crate::vector::{RealVector, Vector};

#[derive(Debug, Parser)]
#[command(name = "wh", version, about = "Schreier families, norming functionals and certified norm bounds")]
pub struct Cli {
    #[command(flatten)]
    pub config: RunConfig,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Parameter file (`{"mode": "toy", "m": [...], "n": [...]}` or `{"mode": "strict", "levels": k}`).
    #[arg(long, global = true)]
    pub params: Option<PathBuf>,
    /// σ registry file.
    #[arg(long, global = true)]
    pub registry: Option<PathBuf>,
    /// Write registry changes back to `--registry` instead of a working copy.
    #[arg(long, global = true)]
    pub commit: bool,
    #[arg(long, global = true, default_value_t = 14)]
    pub enum_cap: u32,
    #[arg(long, global = true, default_value_t = 14)]
    pub dp_support: usize,
    #[arg(long, global = true, default_value_t = 3)]
    pub oracle_depth: usize,
    /// Absolute tolerance for replayed values, in (0, 1e-3).
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tolerance: f64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long, global = true, default_value_t = 7)]
    pub seed: u64,
}

impl RunConfig {
    pub fn caps(&self) -> Result<Caps> {
        if self.enum_cap == 0 || self.dp_support == 0 || self.oracle_depth == 0 {
            return Err(Error::Precondition("caps must be positive".into()));
        }
        if !(self.tolerance > 0.0 && self.tolerance < 1e-3) {
            return Err(Error::Precondition("tolerance must lie in (0, 1e-3)".into()));
        }
        Ok(Caps {
            enumeration: self.enum_cap,
            dp_support: self.dp_support.min(20),
            oracle_depth: self.oracle_depth.min(ORACLE_DEPTH_LIMIT),
            ..Caps::default()
        })
    }

    /// The parameter file, or the six-level strict system.
    pub fn params(&self) -> Result<ParameterSystem> {
        match &self.params {
            Some(p) => ParameterSystem::build(&read_json::<ParamsConfig>(p)?),
            None => ParameterSystem::strict(6, Split::default()),
        }
    }

    pub fn registry(&self, params: &ParameterSystem) -> Result<SigmaRegistry> {
        match &self.registry {
            Some(p) if p.exists() => SigmaRegistry::from_json(&read_text(p)?, params).map_err(|e| at(p, e)),
            _ => Ok(SigmaRegistry::new()),
        }
    }

    /// Saves `reg` to the registry file (with `--commit`) or to its working copy.
    /// Returns the path written, if any.
    pub fn store(&self, reg: &SigmaRegistry) -> Result<Option<PathBuf>> {
        let Some(path) = &self.registry else {
            return Ok(None);
        };
        let target = if self.commit { path.clone() } else { working_copy(path) };
        let lock = target.with_extension("lock");
        let _guard = Lock::acquire(&lock)?;
        reg.save(&target)?;
        Ok(Some(target))
    }
}

/// `reg.json` → `reg.work.json`.
pub fn working_copy(path: &Path) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("registry");
    path.with_file_name(format!("{stem}.work.json"))
}

/// Advisory single-writer lock held while the registry file is written.
struct Lock(PathBuf);

impl Lock {
    fn acquire(path: &Path) -> Result<Lock> {
        OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(path)
            .map_err(|e| Error::Precondition(format!("registry is locked ({}): {e}", path.display())))?;
        Ok(Lock(path.to_path_buf()))
    }
}

impl Drop for Lock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Schreier family queries.
    #[command(subcommand)]
    Schreier(SchreierCmd),
    /// Repeated average `a_n^L` over `L = {start, start+1, …}` or an explicit list.
    Avg {
        #[arg(long)]
        n: u32,
        #[arg(long, value_delimiter = ',', conflicts_with = "start")]
        l: Vec<u32>,
        #[arg(long)]
        start: Option<u32>,
    },
    /// Whether a rational vector is a `(p, eps, n)`-bscc.
    BsccCheck {
        vector: PathBuf,
        #[arg(long, default_value_t = 2)]
        p: u32,
        #[arg(long)]
        eps: String,
        #[arg(long)]
        n: u32,
    },
    /// Parameter system and its growth violations.
    #[command(subcommand)]
    Params(ParamsCmd),
    /// σ registry contents.
    #[command(subcommand)]
    Sigma(SigmaCmd),
    /// Validates a functional and evaluates it on a vector.
    Certify {
        functional: PathBuf,
        vector: PathBuf,
        /// Value the functional is claimed to attain.
        #[arg(long, allow_negative_numbers = true)]
        claim: Option<f64>,
        /// Register foreign σ codings found in the functional.
        #[arg(long)]
        import: bool,
    },
    /// Evaluates a functional on a vector without validating it.
    Eval { functional: PathBuf, vector: PathBuf },
    /// Certified norm bounds; a file holding a list of vectors is a batch.
    Norm {
        vector: PathBuf,
        /// Extra lower-bound certificates (JSON list of functionals).
        #[arg(long)]
        certificates: Option<PathBuf>,
        #[arg(long)]
        j_max: Option<usize>,
    },
    #[command(subcommand)]
    Construct(ConstructCmd),
    /// Dependent sequence from unit vectors and the two sides of the basic evaluation.
    GapDemo {
        #[arg(long, default_value_t = 1)]
        j: u32,
        #[arg(long, default_value_t = 8)]
        scale: usize,
    },
    #[command(subcommand)]
    Estimate(EstimateCmd),
    /// Exact check of the counting identity.
    Counting {
        instance: Option<PathBuf>,
        /// Random instance with `|A| = size`.
        #[arg(long)]
        size: Option<usize>,
    },
    /// Runs the acceptance suite.
    VerifyAll {
        /// Single criterion (1-based).
        #[arg(long)]
        only: Option<usize>,
    },
}

#[derive(Debug, Subcommand)]
pub enum SchreierCmd {
    Check {
        #[arg(long, value_delimiter = ',')]
        set: Vec<u32>,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        modified: bool,
    },
    Enum {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        max: u32,
    },
}

#[derive(Debug, Subcommand)]
pub enum ParamsCmd {
    Show,
}

#[derive(Debug, Subcommand)]
pub enum SigmaCmd {
    Dump,
}

#[derive(Debug, Subcommand)]
pub enum ConstructCmd {
    /// RIS from a JSON list of successive base vectors.
    Ris {
        base: PathBuf,
        #[arg(long = "c")]
        c: f64,
        #[arg(long)]
        start_weight: u32,
        #[arg(long)]
        count: Option<usize>,
    },
    /// Exact vectors of the given even weights over a RIS witness.
    Exact {
        ris: PathBuf,
        #[arg(long, value_delimiter = ',')]
        weights: Vec<u32>,
        /// Build one vector of the first weight starting at this RIS index.
        #[arg(long)]
        from: Option<usize>,
    },
    /// Dependent sequence at odd level `2j+1`.
    Dependent {
        ris: PathBuf,
        #[arg(long)]
        j: u32,
        /// JSON list of functionals, one per RIS block.
        #[arg(long)]
        functionals: PathBuf,
        #[arg(long)]
        len: Option<usize>,
    },
}

#[derive(Debug, Subcommand)]
pub enum EstimateCmd {
    /// Checks a bundle, or an instance against `--params`/`--registry`.
    Check { instance: PathBuf },
    Fuzz {
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// Directory receiving reproduction bundles of counterexamples.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Precondition(format!("{}: {e}", path.display())))
}

fn at(path: &Path, e: Error) -> Error {
    match e {
        Error::Json(j) if j.line() > 0 => Error::Precondition(format!(
            "{}: line {} column {}: {j}",
            path.display(),
            j.line(),
            j.column()
        )),
        Error::Json(j) => Error::Precondition(format!("{}: {j}", path.display())),
        other => other,
    }
}

/// Reads JSON, reporting the file path and the position of any syntax error.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| at(path, Error::Json(e)))
}

enum Status {
    Ok,
    Verdict,
}

fn emit<T: Serialize>(out: &mut dyn Write, v: &T) -> Result<()> {
    writeln!(out, "{}", serde_json::to_string_pretty(v)?)?;
    Ok(())
}

fn flag(out: &mut dyn Write, ok: bool) -> Result<Status> {
    writeln!(out, "{ok}")?;
    Ok(if ok { Status::Ok } else { Status::Verdict })
}

/// A vector file holds either one vector or a list of them.
#[derive(Deserialize)]
#[serde(untagged)]
enum VectorInput {
    One(RealVector),
    Many(Vec<RealVector>),
}

fn run(cli: &Cli, out: &mut dyn Write) -> Result<Status> {
    let cfg = &cli.config;
    let caps = cfg.caps()?;
    match &cli.command {
        Command::Schreier(SchreierCmd::Check { set, n, modified }) => {
            let f = FiniteSet::new(set.clone())?;
            let variant = if *modified { Variant::Modified } else { Variant::Standard };
            flag(out, is_member(&f, *n, variant))
        }
        Command::Schreier(SchreierCmd::Enum { n, max }) => {
            emit(out, &enumerate(*n, *max, &caps)?)?;
            Ok(Status::Ok)
        }
        Command::Avg { n, l, start } => {
            let l = match start {
                Some(s) => {
                    let len = crate::averages::average_support_len(*n, *s as u64);
                    if len > 1 << 20 {
                        return Err(Error::Cap(format!("a_{n}^L has {len} coordinates")));
                    }
                    (*s..=*s + len as u32).collect()
                }
                None => l.clone(),
            };
            emit(out, &repeated_average(*n, &l)?)?;
            Ok(Status::Ok)
        }
        Command::BsccCheck { vector, p, eps, n } => {
            let x: Vector = read_json(vector)?;
            let eps = rational::parse(eps).map_err(Error::Precondition)?;
            flag(out, is_bscc(&x, *p, &eps, *n, &caps)?)
        }
        Command::Params(ParamsCmd::Show) => {
            let p = cfg.params()?;
            emit(
                out,
                &json!({
                    "strict": p.strict,
                    "m": p.m_list().iter().map(u128::to_string).collect::<Vec<_>>(),
                    "n": p.n_list(),
                    "split": p.split,
                    "violations": p.violations.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
                }),
            )?;
            Ok(Status::Ok)
        }
        Command::Sigma(SigmaCmd::Dump) => {
            let p = cfg.params()?;
            writeln!(out, "{}", cfg.registry(&p)?.to_json()?)?;
            Ok(Status::Ok)
        }
        Command::Certify {
            functional,
            vector,
            claim,
            import,
        } => {
            let p = cfg.params()?;
            let mut reg = cfg.registry(&p)?;
            let f: Functional = read_json(functional)?;
            let x: RealVector = read_json(vector)?;
            if *import {
                f.import_witnesses(&p, &mut reg)?;
                cfg.store(&reg)?;
            }
            let valid = f.validate(&p, &reg);
            let value = f.evaluate(&x);
            let matches = claim.map(|c| (c - value).abs() <= cfg.tolerance);
            emit(
                out,
                &json!({
                    "valid": valid.is_ok(),
                    "reason": valid.as_ref().err().map(|e| e.to_string()),
                    "value": value,
                    "claim_matches": matches,
                }),
            )?;
            Ok(if valid.is_ok() && matches != Some(false) { Status::Ok } else { Status::Verdict })
        }
        Command::Eval { functional, vector } => {
            let f: Functional = read_json(functional)?;
            let x: RealVector = read_json(vector)?;
            emit(out, &f.evaluate(&x))?;
            Ok(Status::Ok)
        }
        Command::Norm {
            vector,
            certificates,
            j_max,
        } => {
            let p = cfg.params()?;
            let reg = cfg.registry(&p)?;
            let mut opts = NormOptions::new(j_max.unwrap_or_else(|| full_j_max(&p)));
            opts.caps = caps;
            opts.oracle_depth = caps.oracle_depth;
            if let Some(c) = certificates {
                opts.certificates = read_json(c)?;
            }
            let (batch, xs) = match read_json::<VectorInput>(vector)? {
                VectorInput::One(x) => (false, vec![x]),
                VectorInput::Many(xs) => (true, xs),
            };
            let bounds = xs
                .iter()
                .map(|x| norm_bounds(x, &p, &reg, &opts))
                .collect::<Result<Vec<_>>>()?;
            match cfg.format {
                Format::Csv => {
                    writeln!(out, "index,lower,upper,method,exact")?;
                    for (i, b) in bounds.iter().enumerate() {
                        let method = serde_json::to_value(b.upper_method)?;
                        writeln!(out, "{i},{},{},{},{}", b.lower, b.upper, method.as_str().unwrap_or(""), b.exact)?;
                    }
                }
                Format::Json if batch => emit(out, &bounds)?,
                Format::Json => emit(out, &bounds[0])?,
            }
            Ok(Status::Ok)
        }
        Command::Construct(cmd) => {
            let p = cfg.params()?;
            match cmd {
                ConstructCmd::Ris {
                    base,
                    c,
                    start_weight,
                    count,
                } => {
                    let base: Vec<RealVector> = read_json(base)?;
                    emit(out, &build_ris(&p, &base, *c, *start_weight, *count, &caps)?)?;
                }
                ConstructCmd::Exact { ris, weights, from } => {
                    let ris: RisWitness = read_json(ris)?;
                    ris.verify(&p, &caps)?;
                    match from {
                        Some(k) => {
                            let w = *weights.first().ok_or_else(|| Error::Precondition("--weights is empty".into()))?;
                            emit(out, &build_exact(&p, &ris, w, *k, &caps)?)?;
                        }
                        None => emit(out, &build_exact_sequence(&p, &ris, weights, &caps)?)?,
                    }
                }
                ConstructCmd::Dependent {
                    ris,
                    j,
                    functionals,
                    len,
                } => {
                    let mut reg = cfg.registry(&p)?;
                    let ris: RisWitness = read_json(ris)?;
                    let fns: Vec<Functional> = read_json(functionals)?;
                    let dep = build_dependent(&p, &mut reg, &ris, *j, &fns, *len, &caps)?;
                    cfg.store(&reg)?;
                    emit(out, &dep)?;
                }
            }
            Ok(Status::Ok)
        }
        Command::GapDemo { j, scale } => {
            let p = match &cfg.params {
                Some(_) => cfg.params()?,
                None => gap_toy_params(*j)?,
            };
            let mut reg = cfg.registry(&p)?;
            let r = gap_demo(&p, &mut reg, *j, *scale, &caps)?;
            cfg.store(&reg)?;
            emit(out, &r)?;
            Ok(Status::Ok)
        }
        Command::Estimate(EstimateCmd::Check { instance }) => {
            let text = read_text(instance)?;
            let report = match serde_json::from_str::<Bundle>(&text) {
                Ok(b) => b.check(&caps)?,
                Err(_) => {
                    let inst: EstimateInstance =
                        serde_json::from_str(&text).map_err(|e| at(instance, Error::Json(e)))?;
                    let p = cfg.params()?;
                    let reg = cfg.registry(&p)?;
                    crate::estimates::check_estimate(&inst, &p, &reg, &caps)?
                }
            };
            emit(out, &report)?;
            Ok(if report.holds { Status::Ok } else { Status::Verdict })
        }
        Command::Estimate(EstimateCmd::Fuzz { kind, count, dump }) => {
            let kind: Kind = kind.parse()?;
            let s = fuzz(kind, *count, cfg.seed, &caps)?;
            if let Some(dir) = dump {
                fs::create_dir_all(dir)?;
                for (i, b) in s.counterexamples.iter().enumerate() {
                    fs::write(dir.join(format!("{kind}-{}-{i}.json", cfg.seed)), serde_json::to_string_pretty(b)?)?;
                }
            }
            emit(
                out,
                &json!({
                    "kind": kind,
                    "seed": s.seed,
                    "count": s.count,
                    "holds": s.holds,
                    "max_ratio": s.max_ratio,
                    "counterexamples": s.counterexamples.len(),
                }),
            )?;
            Ok(if s.counterexamples.is_empty() { Status::Ok } else { Status::Verdict })
        }
        Command::Counting { instance, size } => {
            let inst: CountingInstance = match (instance, size) {
                (Some(path), _) => read_json(path)?,
                (None, Some(s)) => random_counting(&mut gen::rng(cfg.seed), *s),
                (None, None) => return Err(Error::Precondition("give an instance file or --size".into())),
            };
            let r = check_counting(&inst)?;
            emit(out, &r)?;
            Ok(if r.empirical_holds { Status::Ok } else { Status::Verdict })
        }
        Command::VerifyAll { only } => {
            let ids: Vec<usize> = match only {
                Some(i) => vec![*i],
                None => (1..=acceptance::CRITERIA).collect(),
            };
            let mut ok = true;
            for id in ids {
                let r = acceptance::run(id, cfg.seed, &caps);
                writeln!(out, "{}", r.line())?;
                for b in &r.bundles {
                    writeln!(out, "  bundle: {}", serde_json::to_string(b)?)?;
                }
                ok &= r.passed;
            }
            writeln!(out, "{}", if ok { "all criteria passed" } else { "some criteria failed" })?;
            Ok(if ok { Status::Ok } else { Status::Verdict })
        }
    }
}

/// Parses `args` and runs the command, writing results to `out` and
/// diagnostics to `err`. Returns the exit code.
pub fn dispatch<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = write!(err, "{e}");
            return code;
        }
    };
    match run(&cli, out) {
        Ok(Status::Ok) => 0,
        Ok(Status::Verdict) => 1,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = dispatch(std::iter::once("wh").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn schreier_check() {
        assert_eq!(call(&["schreier", "check", "--set", "2,3", "--n", "1"]), (0, "true\n".into(), String::new()));
        assert_eq!(call(&["schreier", "check", "--set", "1,2", "--n", "1"]).0, 1);
        assert_eq!(call(&["schreier", "check", "--n", "1", "--set", "3,2"]).0, 2);
        assert_eq!(call(&["bogus"]).0, 2);
    }

    #[test]
    fn config_rejects_bad_tolerance() {
        let (code, _, err) = call(&["--tolerance", "0.1", "params", "show"]);
        assert_eq!(code, 2);
        assert!(err.contains("tolerance"));
    }

    #[test]
    fn malformed_json_has_position() {
        let dir = std::env::temp_dir().join(format!("wh-cli-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let bad = dir.join("bad.json");
        fs::write(&bad, "{\n  \"coeffs\": [[1, 0.5],\n").unwrap();
        let (code, _, err) = call(&["norm", bad.to_str().unwrap()]);
        assert_eq!(code, 2);
        assert!(err.contains("bad.json") && err.contains("line"), "{err}");
        fs::remove_dir_all(&dir).unwrap();
    }
}
