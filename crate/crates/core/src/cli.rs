//! Command-line front end.
//!
//! A JSON config file and command-line flags are merged (flags win) into a
//! [`RawConfig`], validated per command, and dispatched. Exit codes: 0 on
//! success, 1 when a verification check fails, 2 on usage, config or I/O
//! errors.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::basis::{Sector, SubspaceBasis, SubspaceSpec, DEFAULT_CAPACITY};
use crate::darkmodes::{
    build_mode_transform, dark_mode_fock_states, equivalence_check, qr_relation, transformed_hamiltonian_check,
};
use crate::darkstates::{dark_state_count, echelon_dark_states, solve_dark_states, verify_dark, SolveOptions};
use crate::dynamics::{stirap_fidelity, IntegratorOptions, ScheduleKind};
use crate::error::{Error, Result};
use crate::export::{
    build_lattice_graph, to_dot, to_json, trajectory_csv, DarkStateRecord, HamiltonianRecord, MatrixJson,
};
use crate::hamiltonian::{assemble_blocks, verify_block_template, BlockHamiltonian, Frame, ModelParams};
use crate::linalg::{null_space_svd, TolerancePolicy};

/* Configuration **************************************************************/

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    pub rank_eps: Option<f64>,
    pub residual_tol: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub kind: Option<ScheduleKind>,
    #[serde(rename = "T")]
    pub duration: Option<f64>,
    #[serde(rename = "G")]
    pub magnitude: Option<f64>,
}

/// Every setting as it appears in a config file; all optional until a
/// command asks for it.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    /// Mode count, or an inclusive range `a..b` for `count`.
    #[serde(rename = "N")]
    pub modes: Option<RangeArg>,
    pub n: Option<RangeArg>,
    pub g: Option<Vec<f64>>,
    pub omega0: Option<f64>,
    pub omegas: Option<Vec<f64>>,
    /// Common detuning, as an alternative to `omegas`.
    pub delta: Option<f64>,
    pub frame: Option<Frame>,
    pub tolerance: Option<ToleranceConfig>,
    pub schedule: Option<ScheduleConfig>,
    pub allow_nondegenerate: Option<bool>,
    /// Largest accepted lower-sector dimension.
    pub capacity: Option<u64>,
}

/// A single value or an inclusive range, written `3` or `2..4`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RangeArg {
    Single(u64),
    #[serde(with = "range_string")]
    Range(u64, u64),
}

mod range_string {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(a: &u64, b: &u64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{a}..{b}"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(u64, u64), D::Error> {
        let s = String::deserialize(d)?;
        super::parse_range(&s).map_err(serde::de::Error::custom)
    }
}

fn parse_range(s: &str) -> std::result::Result<(u64, u64), String> {
    let parse = |x: &str| x.trim().parse::<u64>().map_err(|_| format!("'{s}' is not an integer or range a..b"));
    match s.split_once("..") {
        Some((a, b)) => {
            let (a, b) = (parse(a)?, parse(b.trim_start_matches('='))?);
            if a > b {
                return Err(format!("empty range '{s}'"));
            }
            Ok((a, b))
        }
        None => {
            let v = parse(s)?;
            Ok((v, v))
        }
    }
}

impl std::str::FromStr for RangeArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (a, b) = parse_range(s)?;
        Ok(if a == b && !s.contains("..") { Self::Single(a) } else { Self::Range(a, b) })
    }
}

impl RangeArg {
    pub fn bounds(self) -> (u64, u64) {
        match self {
            Self::Single(v) => (v, v),
            Self::Range(a, b) => (a, b),
        }
    }

    fn single(self, key: &str) -> Result<u64> {
        match self {
            Self::Single(v) => Ok(v),
            Self::Range(a, b) if a == b => Ok(a),
            Self::Range(..) => Err(Error::Config(format!("{key}: a range is only accepted by the count command"))),
        }
    }
}

/// A validated model configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub spec: SubspaceSpec,
    pub params: ModelParams,
    pub frame: Frame,
    pub tolerance: TolerancePolicy,
    pub allow_nondegenerate: bool,
    pub capacity: u128,
}

fn parse_raw(text: &str) -> Result<RawConfig> {
    serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

/// Parse and validate a JSON config describing a full model.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_raw(text)?.model()
}

impl RawConfig {
    /// Overlay `other` on `self`; set fields of `other` win.
    pub fn merge(self, other: RawConfig) -> RawConfig {
        let tolerance = match (self.tolerance, other.tolerance) {
            (Some(a), Some(b)) => Some(ToleranceConfig {
                rank_eps: b.rank_eps.or(a.rank_eps),
                residual_tol: b.residual_tol.or(a.residual_tol),
            }),
            (a, b) => b.or(a),
        };
        let schedule = match (self.schedule, other.schedule) {
            (Some(a), Some(b)) => Some(ScheduleConfig {
                kind: b.kind.or(a.kind),
                duration: b.duration.or(a.duration),
                magnitude: b.magnitude.or(a.magnitude),
            }),
            (a, b) => b.or(a),
        };
        RawConfig {
            modes: other.modes.or(self.modes),
            n: other.n.or(self.n),
            g: other.g.or(self.g),
            omega0: other.omega0.or(self.omega0),
            omegas: other.omegas.or(self.omegas),
            delta: other.delta.or(self.delta),
            frame: other.frame.or(self.frame),
            tolerance,
            schedule,
            allow_nondegenerate: other.allow_nondegenerate.or(self.allow_nondegenerate),
            capacity: other.capacity.or(self.capacity),
        }
    }

    fn tolerance_policy(&self) -> Result<TolerancePolicy> {
        let d = TolerancePolicy::default();
        let t = self.tolerance.clone().unwrap_or_default();
        TolerancePolicy::new(t.rank_eps.unwrap_or(d.rank_eps), t.residual_tol.unwrap_or(d.residual_tol))
            .map_err(|e| Error::Config(format!("tolerance: {e}")))
    }

    fn excitations(&self) -> Result<u32> {
        let n = self.n.ok_or_else(|| Error::Config("n: missing".into()))?.single("n")?;
        if n == 0 {
            return Err(Error::Config("n: subspaces start at n = 1".into()));
        }
        u32::try_from(n).map_err(|_| Error::Config(format!("n: {n} is too large")))
    }

    fn capacity(&self) -> u128 {
        self.capacity.map_or(DEFAULT_CAPACITY, u128::from)
    }

    fn spec_only(&self) -> Result<SubspaceSpec> {
        let n = self.excitations()?;
        let modes = match (self.modes, &self.g) {
            (Some(m), _) => m.single("N")?,
            (None, Some(g)) => g.len() as u64,
            (None, None) => return Err(Error::Config("N: missing".into())),
        };
        if modes == 0 {
            return Err(Error::Config("N: need at least one mode".into()));
        }
        SubspaceSpec::new(modes as usize, n).map_err(|e| Error::Config(e.to_string()))
    }

    /// Validate the model keys: `N`, `n >= 1`, `g` and the frequencies.
    pub fn model(&self) -> Result<RunConfig> {
        let g = self.g.clone().ok_or_else(|| Error::Config("g: missing".into()))?;
        let spec = self.spec_only()?;
        if g.len() != spec.modes {
            return Err(Error::Config(format!("g: {} couplings given for N = {}", g.len(), spec.modes)));
        }
        if g.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("g: couplings must be finite".into()));
        }
        let omega0 = self.omega0.unwrap_or(1.0);
        let params = match (&self.omegas, self.delta) {
            (Some(_), Some(_)) => return Err(Error::Config("delta: give either omegas or delta, not both".into())),
            (Some(w), None) => {
                if w.len() != spec.modes {
                    return Err(Error::Config(format!("omegas: {} frequencies given for N = {}", w.len(), spec.modes)));
                }
                ModelParams::new(omega0, w.clone(), g)
            }
            (None, d) => ModelParams::with_detunings(omega0, &vec![d.unwrap_or(0.0); spec.modes], g),
        }
        .map_err(|e| Error::Config(e.to_string()))?;
        Ok(RunConfig {
            spec,
            params,
            frame: self.frame.unwrap_or(Frame::Rotating),
            tolerance: self.tolerance_policy()?,
            allow_nondegenerate: self.allow_nondegenerate.unwrap_or(false),
            capacity: self.capacity(),
        })
    }
}

/* Command line ***************************************************************/

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Basis,
    Hamiltonian,
    Darkstates,
    Count,
    Darkmodes,
    Stirap,
    ExportGraph,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Self::Basis => "basis",
            Self::Hamiltonian => "hamiltonian",
            Self::Darkstates => "darkstates",
            Self::Count => "count",
            Self::Darkmodes => "darkmodes",
            Self::Stirap => "stirap",
            Self::ExportGraph => "export-graph",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Dot,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "darklattice", version, about = "Dark states of multimode Jaynes-Cummings Fock-state lattices")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of field modes (count accepts a range a..b).
    #[arg(long = "N")]
    pub modes: Option<RangeArg>,
    /// Excitation number (count accepts a range a..b).
    #[arg(long)]
    pub n: Option<RangeArg>,
    /// Couplings g1,g2,...
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub g: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    pub omega0: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub omegas: Option<Vec<f64>>,
    /// Common detuning of every mode.
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    #[arg(long, value_enum)]
    pub frame: Option<FrameArg>,
    /// Transfer duration.
    #[arg(long = "T")]
    pub duration: Option<f64>,
    /// Peak coupling magnitude of a schedule.
    #[arg(long = "G")]
    pub magnitude: Option<f64>,
    #[arg(long, value_enum)]
    pub schedule: Option<ScheduleArg>,
    /// Proceed with non-degenerate detunings or frequencies.
    #[arg(long)]
    pub allow_nondegenerate: bool,
    /// Write artifacts and a manifest under this directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FrameArg {
    Rotating,
    Lab,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScheduleArg {
    ThetaRamp,
    Sin2Overlap,
}

impl Cli {
    fn overrides(&self) -> RawConfig {
        let schedule = (self.duration.is_some() || self.magnitude.is_some() || self.schedule.is_some()).then(|| {
            ScheduleConfig {
                kind: self.schedule.map(|s| match s {
                    ScheduleArg::ThetaRamp => ScheduleKind::ThetaRamp,
                    ScheduleArg::Sin2Overlap => ScheduleKind::Sin2Overlap,
                }),
                duration: self.duration,
                magnitude: self.magnitude,
            }
        });
        RawConfig {
            modes: self.modes,
            n: self.n,
            g: self.g.clone(),
            omega0: self.omega0,
            omegas: self.omegas.clone(),
            delta: self.delta,
            frame: self.frame.map(|f| match f {
                FrameArg::Rotating => Frame::Rotating,
                FrameArg::Lab => Frame::Lab,
            }),
            tolerance: None,
            schedule,
            allow_nondegenerate: self.allow_nondegenerate.then_some(true),
            capacity: None,
        }
    }

    /// Config file (if any) with flags laid over it.
    pub fn resolve(&self) -> Result<RawConfig> {
        let base = match &self.config {
            Some(path) => parse_raw(&fs::read_to_string(path)?)?,
            None => RawConfig::default(),
        };
        Ok(base.merge(self.overrides()))
    }
}

/* Dispatch *******************************************************************/

#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub passed: bool,
    /// Human-readable summary.
    pub summary: String,
    /// Files in write order; the first is the primary artifact.
    pub artifacts: Vec<Artifact>,
}

fn artifact(name: &str, contents: String) -> Artifact {
    Artifact { name: name.to_string(), contents }
}

fn model_setup(raw: &RawConfig) -> Result<(RunConfig, SubspaceBasis, BlockHamiltonian)> {
    let cfg = raw.model()?;
    let basis = SubspaceBasis::with_capacity(cfg.spec, cfg.capacity)?;
    let bh = assemble_blocks(&basis, &cfg.params, cfg.frame)?;
    Ok((cfg, basis, bh))
}

#[derive(Serialize)]
struct BasisRecord {
    spec: SubspaceSpec,
    upper: Vec<String>,
    lower: Vec<String>,
}

#[derive(Serialize)]
struct CountCell {
    #[serde(rename = "N")]
    modes: usize,
    n: u32,
    formula: u128,
    svd_nullity: usize,
    echelon_free: usize,
    agrees: bool,
}

#[derive(Serialize)]
struct DarkModesRecord {
    transform: MatrixJson,
    b: MatrixJson,
    b_labels: Vec<Vec<u32>>,
    r: MatrixJson,
}

#[derive(Serialize)]
struct DarkModesReport {
    projector_distance: f64,
    relative_residual: f64,
    r_upper_triangular: bool,
    r_below_diagonal: f64,
    transform: crate::darkmodes::TransformReport,
    passed: bool,
}

#[derive(Serialize)]
struct StirapReport {
    n: u32,
    magnitude: f64,
    duration: f64,
    delta: f64,
    schedule: ScheduleKind,
    fidelity: f64,
    min_dark_overlap: f64,
    norm_drift: f64,
    dt: f64,
    steps: usize,
    passed: bool,
}

/// Deterministic couplings for cells where none are configured.
fn default_couplings(modes: usize) -> Vec<f64> {
    (0..modes).map(|j| 0.5 + 1.5 * (j as f64 + 1.0) / (modes as f64 + 1.0)).collect()
}

pub fn run(command: Command, raw: &RawConfig, format: Option<Format>) -> Result<Outcome> {
    let allowed: &[Format] = match command {
        Command::ExportGraph => &[Format::Dot, Format::Json],
        Command::Stirap => &[Format::Csv, Format::Json],
        _ => &[Format::Json],
    };
    if let Some(f) = format {
        if !allowed.contains(&f) {
            return Err(Error::Config(format!("format: {f:?} is not available for {}", command.name())));
        }
    }
    match command {
        Command::Basis => {
            let spec = raw.spec_only()?;
            let basis = SubspaceBasis::with_capacity(spec, raw.capacity())?;
            let names = |s| basis.states(s).iter().map(|x| x.to_string()).collect::<Vec<_>>();
            let rec = BasisRecord { spec, upper: names(Sector::Upper), lower: names(Sector::Lower) };
            let summary = format!(
                "N = {}, n = {}: {} upper and {} lower states",
                spec.modes,
                spec.excitations,
                rec.upper.len(),
                rec.lower.len()
            );
            Ok(Outcome { passed: true, summary, artifacts: vec![artifact("basis.json", to_json("basis", &rec)?)] })
        }
        Command::Hamiltonian => {
            let (_, basis, bh) = model_setup(raw)?;
            let template = verify_block_template(&bh)?;
            let summary = format!(
                "{}x{} coupling block; block template {}",
                bh.upper_len(),
                bh.lower_len(),
                if template.passed() { "holds" } else { "VIOLATED" }
            );
            Ok(Outcome {
                passed: template.passed(),
                summary,
                artifacts: vec![
                    artifact("hamiltonian.json", to_json("hamiltonian", &HamiltonianRecord::new(&bh, &basis))?),
                    artifact("report.json", to_json("template-report", &template)?),
                ],
            })
        }
        Command::Darkstates => {
            let (cfg, basis, bh) = model_setup(raw)?;
            let options = SolveOptions { allow_nondegenerate: cfg.allow_nondegenerate };
            let ds = solve_dark_states(&bh, &cfg.tolerance, options)?;
            let report = verify_dark(&bh, &ds, &cfg.tolerance)?;
            let summary = format!(
                "{} dark states; annihilation {:.3e}, eigen residual {:.3e}: {}",
                ds.len(),
                report.annihilation,
                report.eigen_residual,
                if report.passed() { "pass" } else { "FAIL" }
            );
            Ok(Outcome {
                passed: report.passed(),
                summary,
                artifacts: vec![
                    artifact("darkstates.json", to_json("darkstates", &DarkStateRecord::new(&ds, &basis)?)?),
                    artifact("report.json", to_json("dark-report", &report)?),
                ],
            })
        }
        Command::Count => run_count(raw),
        Command::Darkmodes => {
            let (cfg, _, bh) = model_setup(raw)?;
            let t = build_mode_transform(&cfg.params.couplings)?;
            let check = transformed_hamiltonian_check(&cfg.params, &t, cfg.allow_nondegenerate)?;
            let b = dark_mode_fock_states(&t, cfg.spec.excitations)?;
            let numeric = solve_dark_states(&bh, &cfg.tolerance, SolveOptions { allow_nondegenerate: true })?;
            let distance = equivalence_check(&numeric, &b)?;
            let a = echelon_dark_states(&bh, &cfg.tolerance)?;
            let qr = qr_relation(&a.vectors.columns, &b)?;
            let passed = distance.spectral <= 1e-9 && qr.residual_pass && check.passed;
            let summary = format!(
                "projector distance {:.3e}, |A - BR|/|A| {:.3e}, R {}upper triangular: {}",
                distance.spectral,
                qr.relative_residual,
                if qr.upper_triangular { "" } else { "not " },
                if passed { "pass" } else { "FAIL" }
            );
            let rec = DarkModesRecord {
                transform: MatrixJson::from(&t.t),
                b: MatrixJson::from(&b.b),
                b_labels: b.labels.clone(),
                r: MatrixJson::from(&qr.r),
            };
            let report = DarkModesReport {
                projector_distance: distance.spectral,
                relative_residual: qr.relative_residual,
                r_upper_triangular: qr.upper_triangular,
                r_below_diagonal: qr.below_diagonal,
                transform: check,
                passed,
            };
            Ok(Outcome {
                passed,
                summary,
                artifacts: vec![
                    artifact("darkmodes.json", to_json("darkmodes", &rec)?),
                    artifact("report.json", to_json("darkmodes-report", &report)?),
                ],
            })
        }
        Command::Stirap => {
            let n = raw.excitations()?;
            if let Some(m) = raw.modes {
                if m.single("N")? != 2 {
                    return Err(Error::Config("N: transfer runs use the two-mode model".into()));
                }
            }
            let sched = raw.schedule.clone().unwrap_or_default();
            let magnitude = sched.magnitude.unwrap_or(1.0);
            if magnitude.is_nan() || magnitude <= 0.0 {
                return Err(Error::Config("G: must be positive".into()));
            }
            let duration = sched.duration.unwrap_or(200.0 / magnitude);
            let kind = sched.kind.unwrap_or(ScheduleKind::ThetaRamp);
            let delta = raw.delta.unwrap_or(0.0);
            let result = stirap_fidelity(n, magnitude, kind, duration, delta, &IntegratorOptions::default())?;
            let basis = SubspaceBasis::new(SubspaceSpec::new(2, n)?)?;
            let passed = result.fidelity >= 0.99;
            let report = StirapReport {
                n,
                magnitude,
                duration,
                delta,
                schedule: kind,
                fidelity: result.fidelity,
                min_dark_overlap: result.min_dark_overlap,
                norm_drift: result.trajectory.norm_drift,
                dt: result.trajectory.dt,
                steps: result.trajectory.steps,
                passed,
            };
            let csv = trajectory_csv(&result.trajectory, &basis, Some(&result.dark_overlap))?;
            let report_json = artifact("report.json", to_json("stirap-report", &report)?);
            let csv = artifact("trajectory.csv", csv);
            let artifacts = if format == Some(Format::Json) { vec![report_json, csv] } else { vec![csv, report_json] };
            let summary = format!(
                "fidelity = {:.6} (min dark overlap {:.6}, norm drift {:.2e})",
                result.fidelity, result.min_dark_overlap, result.trajectory.norm_drift
            );
            Ok(Outcome { passed, summary, artifacts })
        }
        Command::ExportGraph => {
            let (_, basis, bh) = model_setup(raw)?;
            if let Some(mode) = bh.params.zero_coupling() {
                return Err(Error::ZeroCoupling { mode });
            }
            let graph = build_lattice_graph(&bh, &basis)?;
            let summary = format!("{} nodes, {} edges", graph.nodes.len(), graph.edges.len());
            let primary = if format == Some(Format::Json) {
                artifact("graph.json", to_json("lattice-graph", &graph)?)
            } else {
                artifact("graph.dot", to_dot(&graph))
            };
            Ok(Outcome { passed: true, summary, artifacts: vec![primary] })
        }
    }
}

fn run_count(raw: &RawConfig) -> Result<Outcome> {
    let (n_lo, n_hi) = raw.modes.ok_or_else(|| Error::Config("N: missing".into()))?.bounds();
    let (e_lo, e_hi) = raw.n.ok_or_else(|| Error::Config("n: missing".into()))?.bounds();
    if n_lo == 0 || e_lo == 0 {
        return Err(Error::Config("N and n must start at 1".into()));
    }
    let policy = raw.tolerance_policy()?;
    let mut cells = Vec::new();
    let mut table = String::from("N \\ n");
    for e in e_lo..=e_hi {
        table.push_str(&format!("\t{e}"));
    }
    table.push('\n');
    for modes in n_lo..=n_hi {
        let modes = modes as usize;
        table.push_str(&modes.to_string());
        let g = match &raw.g {
            Some(g) if g.len() == modes => g.clone(),
            _ => default_couplings(modes),
        };
        for e in e_lo..=e_hi {
            let e = u32::try_from(e).map_err(|_| Error::Config("n: too large".into()))?;
            let basis = SubspaceBasis::with_capacity(SubspaceSpec::new(modes, e)?, raw.capacity())?;
            let bh = assemble_blocks(&basis, &ModelParams::uniform(g.clone(), 0.0)?, Frame::Rotating)?;
            let formula = dark_state_count(modes, e)?;
            let svd = null_space_svd(&bh.coupling, &policy)?.len();
            let echelon = echelon_dark_states(&bh, &policy)?.len();
            let agrees = svd as u128 == formula && echelon as u128 == formula;
            table.push_str(&format!("\t{formula}{}", if agrees { "" } else { "!" }));
            cells.push(CountCell { modes, n: e, formula, svd_nullity: svd, echelon_free: echelon, agrees });
        }
        table.push('\n');
    }
    let passed = cells.iter().all(|c| c.agrees);
    let summary = if passed {
        table
    } else {
        format!("{table}count mismatch in cells marked '!'")
    };
    Ok(Outcome { passed, summary, artifacts: vec![artifact("count.json", to_json("count", &cells)?)] })
}

/* Persistence ****************************************************************/

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config_hash: String,
    pub files: Vec<ManifestEntry>,
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

/// Write artifacts to `out/<command>-<hash>/` plus `manifest.json`; returns
/// the directory.
pub fn persist(command: Command, raw: &RawConfig, artifacts: &[Artifact], out: &Path) -> Result<(PathBuf, Manifest)> {
    let config_hash = sha256_hex(serde_json::to_string(raw)?.as_bytes());
    let dir = out.join(format!("{}-{}", command.name(), &config_hash[..12]));
    fs::create_dir_all(&dir)?;
    let mut files = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        fs::write(dir.join(&a.name), &a.contents)?;
        files.push(ManifestEntry { name: a.name.clone(), bytes: a.contents.len(), sha256: sha256_hex(a.contents.as_bytes()) });
    }
    let manifest = Manifest { command: command.name().to_string(), config_hash, files };
    fs::write(dir.join("manifest.json"), to_json("manifest", &manifest)?)?;
    Ok((dir, manifest))
}

/// Parse arguments, run, print, and return the process exit code.
pub fn main_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn execute(cli: &Cli) -> Result<i32> {
    let raw = cli.resolve()?;
    let outcome = run(cli.command, &raw, cli.format)?;
    match &cli.out {
        Some(out) => {
            let (dir, _) = persist(cli.command, &raw, &outcome.artifacts, out)?;
            println!("{}", outcome.summary.trim_end());
            println!("wrote {}", dir.display());
        }
        None => {
            if cli.command == Command::Stirap && cli.format.is_none() || cli.command == Command::Count && cli.format.is_none() {
                println!("{}", outcome.summary.trim_end());
            } else {
                print!("{}", outcome.artifacts[0].contents);
                eprintln!("{}", outcome.summary.trim_end());
            }
        }
    }
    if !outcome.passed {
        eprintln!("verification failed");
        return Ok(1);
    }
    Ok(0)
}
