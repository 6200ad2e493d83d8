//! Command-line front end. Settings resolve as flags over config-file keys
//! over built-in defaults; the resolved settings go into each run manifest.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::parser::ValueSource;
use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::active::{self, ActiveError, AcquisitionMode, Pool, RunConfig, RunOutcome, TrajectoryRecord};
use crate::chem::{parse_smiles, DESCRIPTOR_NAMES};
use crate::data::{
    self, descriptor_matrix, featurize, featurize_with, fmt_f64, read_checkpoint, write_checkpoint, write_csv,
    write_json, CsvSchema, DataError, Dataset, DklCheckpoint, Featurized, RunManifest, Timings,
    VaeCheckpoint, QM9_PROPERTIES,
};
use crate::gp::{batch_predict, embed, latent_grid_predict, train_dkl, DklConfig, GpError};
use crate::num::Activation;
use crate::selfies::SelfiesError;
use crate::similarity::{circular_fingerprint, latent_neighbors, similarity_matrix, SimilarityError};
use crate::vae::{reconstruction_accuracy, train_vae, vae_latent_map, VaeConfig, VaeError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_ARTIFACT: i32 = 4;
pub const EXIT_LOOKUP: i32 = 5;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("data rejected: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("artifact mismatch: {0}")]
    Artifact(String),
    #[error("lookup failed: {0}")]
    Lookup(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Artifact(_) => EXIT_ARTIFACT,
            CliError::Lookup(_) => EXIT_LOOKUP,
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::Io(_) => CliError::Usage(e.to_string()),
            DataError::VersionMismatch { .. } | DataError::CorruptFile(_) => CliError::Artifact(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<GpError> for CliError {
    fn from(e: GpError) -> Self {
        match e {
            GpError::NumericalFailure(_) => CliError::Numerical(e.to_string()),
            GpError::DegenerateTargets | GpError::NonFiniteTargets | GpError::TooFewPoints { .. } => {
                CliError::Data(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<VaeError> for CliError {
    fn from(e: VaeError) -> Self {
        match e {
            VaeError::NonFinite(_) => CliError::Numerical(e.to_string()),
            VaeError::EmptyCorpus => CliError::Data(e.to_string()),
            VaeError::ShapeMismatch(_) => CliError::Usage(e.to_string()),
        }
    }
}

impl From<ActiveError> for CliError {
    fn from(e: ActiveError) -> Self {
        match e {
            ActiveError::Cycle { ref source, .. } | ActiveError::Model(ref source) => match CliError::from(source.clone()) {
                CliError::Numerical(_) => CliError::Numerical(e.to_string()),
                other => other,
            },
            ActiveError::DatasetTooSmall { .. } | ActiveError::InsufficientData(_) => CliError::Data(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<SimilarityError> for CliError {
    fn from(e: SimilarityError) -> Self {
        match e {
            SimilarityError::AnchorNotFound(_) => CliError::Lookup(e.to_string()),
            SimilarityError::Model(g) => g.into(),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

fn encoding_error(e: DataError) -> CliError {
    match e {
        DataError::Encoding(SelfiesError::UnknownToken(_) | SelfiesError::SequenceTooLong { .. }) => {
            CliError::Artifact(format!("dataset does not fit the checkpoint's alphabet: {e}"))
        }
        other => other.into(),
    }
}

#[derive(Parser, Debug)]
#[command(name = "adkl", version, about = "Active deep kernel learning over SELFIES molecular embeddings")]
pub struct Cli {
    /// Log progress (repeat for debug output).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Descriptor table and SELFIES alphabet for a dataset.
    Featurize(FeaturizeArgs),
    /// Train a deep-kernel GP and export its latent map.
    TrainDkl(TrainDklArgs),
    /// Train the VAE baseline and export its latent map.
    TrainVae(TrainVaeArgs),
    /// Run the active-learning loop.
    Active(ActiveArgs),
    /// Latent nearest neighbors and Tanimoto similarity matrices.
    Similar(SimilarArgs),
    /// Convert a directory of QM9 .xyz files to CSV.
    IngestQm9(IngestArgs),
}

/// Dataset selection shared by the subcommands that read molecules.
#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct DataArgs {
    /// Dataset CSV.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Generate this many synthetic molecules instead of reading --input.
    #[arg(long)]
    pub synthetic: Option<usize>,
    /// Target column, or a descriptor name computed from the structure.
    #[arg(long, default_value = "mologp")]
    pub target: String,
    #[arg(long, default_value = "id")]
    pub id_col: String,
    #[arg(long, default_value = "smiles")]
    pub smiles_col: String,
    /// Random subset size drawn before anything else.
    #[arg(long)]
    pub sample: Option<usize>,
    /// Seed for subsetting and the synthetic corpus.
    #[arg(long, default_value_t = 0)]
    pub data_seed: u64,
    /// Drop rejected rows instead of failing.
    #[arg(long)]
    pub allow_skip: bool,
}

impl Default for DataArgs {
    fn default() -> Self {
        DataArgs {
            input: None,
            synthetic: None,
            target: "mologp".into(),
            id_col: "id".into(),
            smiles_col: "smiles".into(),
            sample: None,
            data_seed: 0,
            allow_skip: false,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    /// TOML file of flat key = value settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FeaturizeArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct DklArgs {
    /// Hidden layer widths, comma separated.
    #[arg(long, default_value = "128,32", value_delimiter = ',')]
    pub hidden: Vec<usize>,
    #[arg(long, default_value_t = 2)]
    pub latent_dim: usize,
    /// tanh, relu or identity.
    #[arg(long, default_value = "tanh", value_parser = parse_activation)]
    pub activation: Activation,
    #[arg(long, default_value_t = 500)]
    pub epochs: usize,
    #[arg(long, default_value_t = 5e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Pin the noise variance instead of learning it.
    #[arg(long)]
    pub fixed_noise: Option<f64>,
}

impl Default for DklArgs {
    fn default() -> Self {
        let d = DklConfig::default();
        DklArgs {
            hidden: d.hidden,
            latent_dim: d.latent_dim,
            activation: d.activation,
            epochs: d.epochs,
            lr: d.lr,
            seed: d.seed,
            fixed_noise: d.fixed_noise,
        }
    }
}

impl DklArgs {
    fn config(&self) -> DklConfig {
        DklConfig {
            hidden: self.hidden.clone(),
            latent_dim: self.latent_dim,
            activation: self.activation,
            epochs: self.epochs,
            lr: self.lr,
            seed: self.seed,
            fixed_noise: self.fixed_noise,
        }
    }
}

fn parse_activation(s: &str) -> Result<Activation, String> {
    match s {
        "tanh" => Ok(Activation::Tanh),
        "relu" => Ok(Activation::Relu),
        "identity" => Ok(Activation::Identity),
        _ => Err(format!("unknown activation {s:?}")),
    }
}

fn parse_mode(s: &str) -> Result<AcquisitionMode, String> {
    match s {
        "maximize" | "max" => Ok(AcquisitionMode::Maximize),
        "minimize" | "min" => Ok(AcquisitionMode::Minimize),
        _ => Err(format!("unknown mode {s:?}")),
    }
}

#[derive(Args, Debug)]
pub struct TrainDklArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub dkl: DklArgs,
    #[command(flatten)]
    pub extra: TrainDklExtra,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainDklExtra {
    /// Points per side of the latent surface grid (0 skips it).
    #[arg(long, default_value_t = 50)]
    pub grid_resolution: usize,
    #[arg(long, default_value_t = 250)]
    pub predict_batch: usize,
}

impl Default for TrainDklExtra {
    fn default() -> Self {
        TrainDklExtra {
            grid_resolution: 50,
            predict_batch: 250,
        }
    }
}

#[derive(Args, Debug)]
pub struct TrainVaeArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub vae: VaeArgs,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct VaeArgs {
    #[arg(long = "hidden", default_value_t = 64)]
    pub vae_hidden: usize,
    #[arg(long = "latent-dim", default_value_t = 2)]
    pub vae_latent_dim: usize,
    #[arg(long = "epochs", default_value_t = 200)]
    pub vae_epochs: usize,
    #[arg(long = "lr", default_value_t = 3e-3)]
    pub vae_lr: f64,
    #[arg(long = "seed", default_value_t = 0)]
    pub vae_seed: u64,
}

impl Default for VaeArgs {
    fn default() -> Self {
        let d = VaeConfig::default();
        VaeArgs {
            vae_hidden: d.hidden,
            vae_latent_dim: d.latent_dim,
            vae_epochs: d.epochs,
            vae_lr: d.lr,
            vae_seed: d.seed,
        }
    }
}

impl VaeArgs {
    fn config(&self) -> VaeConfig {
        VaeConfig {
            hidden: self.vae_hidden,
            latent_dim: self.vae_latent_dim,
            epochs: self.vae_epochs,
            lr: self.vae_lr,
            seed: self.vae_seed,
        }
    }
}

#[derive(Args, Debug)]
pub struct ActiveArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub dkl: DklArgs,
    #[command(flatten)]
    pub run: LoopArgs,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct LoopArgs {
    /// Static reference model checkpoint from train-dkl.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub n_init: usize,
    /// maximize or minimize.
    #[arg(long, default_value = "maximize", value_parser = parse_mode)]
    pub mode: AcquisitionMode,
    #[arg(long, default_value_t = 1)]
    pub acq_batch: usize,
    #[arg(long, default_value_t = 250)]
    pub predict_batch: usize,
    #[arg(long, default_value_t = 1)]
    pub retrain_every: usize,
    /// Maximum number of cycles (default: run until exhausted).
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long)]
    pub cold_start: bool,
    #[arg(long, default_value_t = 50)]
    pub cycle_epochs: usize,
    /// Latent snapshot interval in cycles (0 disables).
    #[arg(long, default_value_t = 0)]
    pub log_every: usize,
    /// Also run the random-selection baseline.
    #[arg(long)]
    pub with_baseline: bool,
}

impl Default for LoopArgs {
    fn default() -> Self {
        let d = RunConfig::default();
        LoopArgs {
            reference: None,
            n_init: d.n_init,
            mode: d.acquisition_mode,
            acq_batch: d.acq_batch,
            predict_batch: d.predict_batch,
            retrain_every: d.retrain_every,
            budget: d.step_budget,
            beta: d.beta,
            cold_start: d.cold_start,
            cycle_epochs: d.cycle_epochs,
            log_every: d.log_every,
            with_baseline: false,
        }
    }
}

#[derive(Args, Debug)]
pub struct SimilarArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub sim: SimArgs,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SimArgs {
    /// Model checkpoint for latent neighbors.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Id of the anchor molecule.
    #[arg(long)]
    pub anchor: Option<String>,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Ids for a Tanimoto matrix, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub matrix: Vec<String>,
    #[arg(long, default_value_t = 2)]
    pub radius: usize,
    #[arg(long, default_value_t = 2048)]
    pub nbits: usize,
}

impl Default for SimArgs {
    fn default() -> Self {
        SimArgs {
            checkpoint: None,
            anchor: None,
            k: 5,
            matrix: Vec::new(),
            radius: 2,
            nbits: 2048,
        }
    }
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub ingest: IngestSettings,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestSettings {
    /// Directory of QM9 .xyz files.
    #[arg(long)]
    pub qm9_dir: Option<PathBuf>,
    /// Keep a seeded random subset of this size.
    #[arg(long)]
    pub sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub data_seed: u64,
    /// Write the CSV even if some files were rejected.
    #[arg(long)]
    pub allow_skip: bool,
}

impl Default for IngestSettings {
    fn default() -> Self {
        IngestSettings {
            qm9_dir: None,
            sample: None,
            data_seed: 0,
            allow_skip: false,
        }
    }
}

/// Overlays flags the user actually typed onto settings from the config file
/// (or defaults). Serde field names match clap argument ids.
fn resolve<T: Serialize + DeserializeOwned + Default>(
    from_flags: &T,
    matches: &ArgMatches,
    file: Option<&toml::Table>,
) -> Result<T, CliError> {
    let mut base = match file {
        Some(t) => serde_json::to_value(t).map_err(|e| CliError::Usage(e.to_string()))?,
        None => serde_json::json!({}),
    };
    let flags = serde_json::to_value(from_flags).map_err(|e| CliError::Usage(e.to_string()))?;
    let known = serde_json::to_value(T::default()).map_err(|e| CliError::Usage(e.to_string()))?;
    let (base_map, flag_map, known_map) = match (base.as_object_mut(), flags.as_object(), known.as_object()) {
        (Some(b), Some(f), Some(k)) => (b, f, k),
        _ => return Err(CliError::Usage("settings must be a table".into())),
    };
    base_map.retain(|k, _| known_map.contains_key(k));
    for (k, v) in flag_map {
        if matches.value_source(k) == Some(ValueSource::CommandLine) || !base_map.contains_key(k) {
            base_map.insert(k.clone(), v.clone());
        }
    }
    serde_json::from_value(base).map_err(|e| CliError::Usage(format!("config: {e}")))
}

fn read_config(path: Option<&Path>) -> Result<Option<toml::Table>, CliError> {
    let Some(p) = path else { return Ok(None) };
    let text = std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
    text.parse::<toml::Table>()
        .map(Some)
        .map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
}

/// Parses arguments, runs the subcommand and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match Cli::command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return EXIT_USAGE;
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::new().parse_filters(level).format_timestamp(None).try_init();
    let sub = matches.subcommand().map(|(_, m)| m).expect("subcommand is required");
    match run_command(&cli.command, sub) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run_command(cmd: &Command, m: &ArgMatches) -> Result<(), CliError> {
    match cmd {
        Command::Featurize(a) => {
            let file = read_config(a.common.config.as_deref())?;
            cmd_featurize(&a.common.out, &resolve(&a.data, m, file.as_ref())?)
        }
        Command::TrainDkl(a) => {
            let file = read_config(a.common.config.as_deref())?;
            cmd_train_dkl(
                &a.common.out,
                &resolve(&a.data, m, file.as_ref())?,
                &resolve(&a.dkl, m, file.as_ref())?,
                &resolve(&a.extra, m, file.as_ref())?,
            )
        }
        Command::TrainVae(a) => {
            let file = read_config(a.common.config.as_deref())?;
            cmd_train_vae(
                &a.common.out,
                &resolve(&a.data, m, file.as_ref())?,
                &resolve(&a.vae, m, file.as_ref())?,
            )
        }
        Command::Active(a) => {
            let file = read_config(a.common.config.as_deref())?;
            cmd_active(
                &a.common.out,
                &resolve(&a.data, m, file.as_ref())?,
                &resolve(&a.dkl, m, file.as_ref())?,
                &resolve(&a.run, m, file.as_ref())?,
            )
        }
        Command::Similar(a) => {
            let file = read_config(a.common.config.as_deref())?;
            cmd_similar(
                &a.common.out,
                &resolve(&a.data, m, file.as_ref())?,
                &resolve(&a.sim, m, file.as_ref())?,
            )
        }
        Command::IngestQm9(a) => {
            let file = read_config(a.common.config.as_deref())?;
            cmd_ingest_qm9(&a.common.out, &resolve(&a.ingest, m, file.as_ref())?)
        }
    }
}

fn prepare_out(out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out).map_err(|e| CliError::Usage(format!("{}: {e}", out.display())))
}

/// Loads (or generates) the dataset and applies the subset draw.
pub fn load_dataset(d: &DataArgs) -> Result<Dataset, CliError> {
    let ds = match (&d.input, d.synthetic) {
        (Some(_), Some(_)) => return Err(CliError::Usage("--input and --synthetic are exclusive".into())),
        (None, None) => return Err(CliError::Usage("one of --input or --synthetic is required".into())),
        (None, Some(n)) => data::synthetic_dataset(n, d.data_seed, &d.target)?,
        (Some(path), None) => {
            let schema = CsvSchema {
                id: d.id_col.clone(),
                smiles: d.smiles_col.clone(),
                target: d.target.clone(),
            };
            let (ds, report) = data::load_csv(path, &schema)?;
            if !report.is_clean() {
                if d.allow_skip {
                    log::warn!("{report}");
                } else {
                    return Err(CliError::Data(report.to_string()));
                }
            }
            ds
        }
    };
    Ok(match d.sample {
        Some(n) => data::sample_subset(&ds, n, d.data_seed)?,
        None => ds,
    })
}

struct Outputs<'a> {
    dir: &'a Path,
    names: Vec<String>,
}

impl<'a> Outputs<'a> {
    fn new(dir: &'a Path) -> Self {
        Outputs { dir, names: Vec::new() }
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.names.push(name.to_string());
        self.dir.join(name)
    }

    fn finish(self, mut manifest: RunManifest, timings: &Timings) -> Result<(), CliError> {
        manifest.add_outputs(self.dir, &self.names)?;
        manifest.write(&self.dir.join("manifest.json"))?;
        write_json(&self.dir.join("timings.json"), timings)?;
        Ok(())
    }
}

fn settings_json(parts: &[(&str, serde_json::Value)]) -> serde_json::Value {
    serde_json::Value::Object(parts.iter().map(|(k, v)| (k.to_string(), v.clone())).collect())
}

fn to_json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("settings serialize")
}

pub fn cmd_featurize(out: &Path, d: &DataArgs) -> Result<(), CliError> {
    prepare_out(out)?;
    let t = Instant::now();
    let ds = load_dataset(d)?;
    let graphs = ds.graphs()?;
    let f = featurize(&graphs)?;
    let desc = descriptor_matrix(&graphs);
    let mut files = Outputs::new(out);
    let mut header = vec!["id".to_string(), "smiles".to_string()];
    header.extend(DESCRIPTOR_NAMES.iter().map(|s| s.to_string()));
    let rows: Vec<Vec<String>> = ds
        .records()
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = vec![r.id.clone(), r.smiles.clone()];
            row.extend(desc.row(i).iter().map(|&v| fmt_f64(v)));
            row
        })
        .collect();
    write_csv(&files.path("descriptors.csv"), &header, &rows)?;
    let seqs: Vec<Vec<String>> = ds
        .records()
        .iter()
        .zip(&f.sequences)
        .map(|(r, s)| vec![r.id.clone(), s.to_string()])
        .collect();
    write_csv(&files.path("selfies.csv"), &["id", "selfies"], &seqs)?;
    data::write_atomic(&files.path("alphabet.txt"), f.alphabet.to_text().as_bytes())?;
    write_json(&files.path("encoding.json"), &f.spec())?;
    let mut timings = Timings::default();
    timings.record("featurize", t.elapsed().as_secs_f64());
    let manifest = RunManifest::new(
        "featurize",
        settings_json(&[("data", to_json(d))]),
        ds.content_hash(),
        d.data_seed,
        ds.target_name(),
    );
    files.finish(manifest, &timings)
}

fn latent_rows(ds: &Dataset, z: &crate::num::Matrix, extra: &[&[f64]]) -> Vec<Vec<String>> {
    ds.records()
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = vec![r.id.clone(), r.smiles.clone()];
            row.extend(z.row(i).iter().map(|&v| fmt_f64(v)));
            row.push(fmt_f64(r.target));
            row.extend(extra.iter().map(|col| fmt_f64(col[i])));
            row
        })
        .collect()
}

fn latent_header(dim: usize, extra: &[&str]) -> Vec<String> {
    let mut h = vec!["id".to_string(), "smiles".to_string()];
    h.extend((1..=dim).map(|k| format!("z{k}")));
    h.push("target".into());
    h.extend(extra.iter().map(|s| s.to_string()));
    h
}

pub fn cmd_train_dkl(out: &Path, d: &DataArgs, dkl: &DklArgs, extra: &TrainDklExtra) -> Result<(), CliError> {
    prepare_out(out)?;
    let mut timings = Timings::default();
    let t = Instant::now();
    let ds = load_dataset(d)?;
    let f = featurize(&ds.graphs()?)?;
    timings.record("featurize", t.elapsed().as_secs_f64());

    let t = Instant::now();
    let cfg = dkl.config();
    let outcome = train_dkl(&f.x, &ds.targets(), &cfg)?;
    timings.record("train", t.elapsed().as_secs_f64());

    let t = Instant::now();
    let model = &outcome.model;
    let post = batch_predict(model, &f.x, extra.predict_batch)?;
    let z = embed(&model.params, &f.x)?;
    timings.record("predict", t.elapsed().as_secs_f64());

    let mut files = Outputs::new(out);
    let ck = DklCheckpoint {
        model: model.clone(),
        config: cfg,
        encoding: f.spec(),
        target_name: ds.target_name().into(),
        dataset_hash: ds.content_hash().into(),
    };
    write_checkpoint(&ck, &files.path("checkpoint.json"))?;
    write_csv(
        &files.path("latent.csv"),
        &latent_header(z.cols(), &["pred_mean", "pred_std"]),
        &latent_rows(&ds, &z, &[&post.mean, &post.std]),
    )?;
    let loss: Vec<Vec<String>> = outcome
        .loss_curve
        .iter()
        .enumerate()
        .map(|(e, l)| vec![e.to_string(), fmt_f64(*l)])
        .collect();
    write_csv(&files.path("loss.csv"), &["epoch", "nll"], &loss)?;
    if extra.grid_resolution > 0 && z.cols() == 2 {
        let grid = latent_grid_predict(model, extra.grid_resolution)?;
        let rows: Vec<Vec<String>> = grid
            .iter()
            .map(|g| vec![fmt_f64(g.z1), fmt_f64(g.z2), fmt_f64(g.mean), fmt_f64(g.std)])
            .collect();
        write_csv(&files.path("grid.csv"), &["z1", "z2", "mean", "std"], &rows)?;
    }
    let manifest = RunManifest::new(
        "train-dkl",
        settings_json(&[("data", to_json(d)), ("dkl", to_json(dkl)), ("output", to_json(extra))]),
        ds.content_hash(),
        dkl.seed,
        ds.target_name(),
    );
    files.finish(manifest, &timings)
}

pub fn cmd_train_vae(out: &Path, d: &DataArgs, v: &VaeArgs) -> Result<(), CliError> {
    prepare_out(out)?;
    let mut timings = Timings::default();
    let t = Instant::now();
    let ds = load_dataset(d)?;
    let f = featurize(&ds.graphs()?)?;
    let cfg = v.config();
    let outcome = train_vae(&f.x, f.max_len, f.alphabet.len(), &cfg)?;
    let z = vae_latent_map(&outcome.params, &f.x)?;
    let acc = reconstruction_accuracy(&outcome.params, &f.x)?;
    timings.record("train", t.elapsed().as_secs_f64());

    let mut files = Outputs::new(out);
    let ck = VaeCheckpoint {
        params: outcome.params.clone(),
        config: cfg,
        encoding: f.spec(),
        dataset_hash: ds.content_hash().into(),
    };
    write_checkpoint(&ck, &files.path("checkpoint.json"))?;
    write_csv(&files.path("latent.csv"), &latent_header(z.cols(), &[]), &latent_rows(&ds, &z, &[]))?;
    let curve: Vec<Vec<String>> = outcome
        .curve
        .iter()
        .enumerate()
        .map(|(e, r)| {
            vec![
                e.to_string(),
                fmt_f64(r.loss()),
                fmt_f64(r.reconstruction_nll),
                fmt_f64(r.kl),
            ]
        })
        .collect();
    write_csv(&files.path("loss.csv"), &["epoch", "loss", "reconstruction_nll", "kl"], &curve)?;
    let mut manifest = RunManifest::new(
        "train-vae",
        settings_json(&[("data", to_json(d)), ("vae", to_json(v))]),
        ds.content_hash(),
        v.vae_seed,
        "elbo",
    );
    manifest.notes.push(format!("reconstruction token accuracy {}", fmt_f64(acc)));
    files.finish(manifest, &timings)
}

fn trajectory_rows(records: &[TrajectoryRecord], ds: &Dataset) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for r in records {
        for j in 0..r.chosen.len() {
            let rec = &ds.records()[r.chosen[j]];
            let opt = |v: &Vec<f64>| v.get(j).map(|x| fmt_f64(*x)).unwrap_or_default();
            rows.push(vec![
                r.cycle.to_string(),
                rec.id.clone(),
                rec.smiles.clone(),
                fmt_f64(r.pred_mean[j]),
                fmt_f64(r.pred_std[j]),
                fmt_f64(r.true_value[j]),
                fmt_f64(r.error[j]),
                opt(&r.ref_mean),
                opt(&r.ref_std),
                fmt_f64(r.rmse_unmeasured),
            ]);
        }
    }
    rows
}

const TRAJECTORY_HEADER: [&str; 10] = [
    "cycle",
    "chosen_id",
    "smiles",
    "pred_mean",
    "pred_std",
    "true_value",
    "error",
    "ref_mean",
    "ref_std",
    "rmse_unmeasured",
];

#[derive(Serialize)]
struct Comparison {
    cycles: usize,
    final_rmse_active: Option<f64>,
    final_rmse_random: Option<f64>,
    pearson_mean: Option<f64>,
    pearson_std: Option<f64>,
    note: Option<String>,
}

pub fn cmd_active(out: &Path, d: &DataArgs, dkl: &DklArgs, l: &LoopArgs) -> Result<(), CliError> {
    prepare_out(out)?;
    let mut timings = Timings::default();
    let t = Instant::now();
    let ds = load_dataset(d)?;
    let graphs = ds.graphs()?;
    let reference: Option<DklCheckpoint> = match &l.reference {
        Some(p) => Some(read_checkpoint(p)?),
        None => None,
    };
    let f: Featurized = match &reference {
        Some(r) => featurize_with(&graphs, &r.encoding).map_err(encoding_error)?,
        None => featurize(&graphs)?,
    };
    if let Some(r) = &reference {
        if r.model.input_dim() != f.x.cols() {
            return Err(CliError::Artifact("reference model input width differs from the encoding".into()));
        }
    }
    timings.record("featurize", t.elapsed().as_secs_f64());

    let cfg = RunConfig {
        n_init: l.n_init,
        acquisition_mode: l.mode,
        acq_batch: l.acq_batch,
        predict_batch: l.predict_batch,
        retrain_every: l.retrain_every,
        step_budget: l.budget,
        seed: dkl.seed,
        beta: l.beta,
        cold_start: l.cold_start,
        cycle_epochs: l.cycle_epochs,
        log_every: l.log_every,
        dkl: dkl.config(),
    };
    let pool = Pool::new(f.x.clone(), ds.targets(), ds.ids(), ds.smiles())?;
    let ref_model = reference.as_ref().map(|r| &r.model);

    let t = Instant::now();
    let act = active::run(&pool, &cfg, ref_model)?;
    timings.record("active", t.elapsed().as_secs_f64());
    timings.per_cycle = act.cycle_seconds.clone();
    let base: Option<RunOutcome> = if l.with_baseline {
        let t = Instant::now();
        let b = active::random_baseline(&pool, &cfg, ref_model)?;
        timings.record("baseline", t.elapsed().as_secs_f64());
        Some(b)
    } else {
        None
    };

    let mut files = Outputs::new(out);
    write_csv(&files.path("trajectory.csv"), &TRAJECTORY_HEADER, &trajectory_rows(&act.records, &ds))?;
    let mut rmse_header = vec!["cycle", "measured", "rmse_active"];
    if let Some(b) = &base {
        write_csv(&files.path("trajectory_random.csv"), &TRAJECTORY_HEADER, &trajectory_rows(&b.records, &ds))?;
        rmse_header.push("rmse_random");
    }
    let mut measured = cfg.n_init;
    let rmse_rows: Vec<Vec<String>> = act
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = vec![r.cycle.to_string(), measured.to_string(), fmt_f64(r.rmse_unmeasured)];
            if let Some(b) = &base {
                row.push(fmt_f64(b.records[i].rmse_unmeasured));
            }
            measured += r.chosen.len();
            row
        })
        .collect();
    write_csv(&files.path("rmse.csv"), &rmse_header, &rmse_rows)?;

    for s in &act.snapshots {
        let mut header = latent_header(s.z.cols(), &["measured"]);
        header.remove(header.len() - 1);
        header.push("measured".into());
        let rows: Vec<Vec<String>> = ds
            .records()
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut row = vec![r.id.clone(), r.smiles.clone()];
                row.extend(s.z.row(i).iter().map(|&v| fmt_f64(v)));
                row.push(fmt_f64(r.target));
                row.push(u8::from(s.measured[i]).to_string());
                row
            })
            .collect();
        write_csv(&files.path(&format!("latent_c{:05}.csv", s.cycle)), &header, &rows)?;
    }

    let state = &act.final_state;
    if state.unmeasured.len() >= 2 && state.measured.len() >= 2 {
        let post = batch_predict(&state.model, &pool.x.select_rows(&state.unmeasured), cfg.predict_batch)?;
        let panel = active::panel_selection(state, &post.std, 10, 10)?;
        let fps: Vec<_> = panel.iter().map(|&i| circular_fingerprint(&graphs[i], 2, 2048)).collect();
        let ids: Vec<String> = panel.iter().map(|&i| ds.records()[i].id.clone()).collect();
        let sm = similarity_matrix(ids, &fps)?;
        let (h, rows) = data::similarity_rows(&sm.ids, &sm.values);
        write_csv(&files.path("panel_similarity.csv"), &h, &rows)?;
    }

    let (pearson_mean, pearson_std, note) = match active::compare_to_reference(&act.records) {
        Ok(c) => (Some(c.pearson_mean), Some(c.pearson_std), None),
        Err(e) => (None, None, Some(e.to_string())),
    };
    let comparison = Comparison {
        cycles: act.records.len(),
        final_rmse_active: act.records.last().map(|r| r.rmse_unmeasured),
        final_rmse_random: base.as_ref().and_then(|b| b.records.last()).map(|r| r.rmse_unmeasured),
        pearson_mean,
        pearson_std,
        note,
    };
    write_json(&files.path("comparison.json"), &comparison)?;

    let mut manifest = RunManifest::new(
        "active",
        settings_json(&[("data", to_json(d)), ("dkl", to_json(dkl)), ("loop", to_json(l))]),
        ds.content_hash(),
        dkl.seed,
        ds.target_name(),
    );
    manifest.notes.extend([
        "each cycle trains on the measured points and scores the unmeasured points".to_string(),
        "reference predictions are logged only; acquisition uses the active model".to_string(),
        "panel_similarity.csv: 10 most recently measured, then 10 highest-std unmeasured".to_string(),
        "rmse_unmeasured is computed before the cycle's points are moved".to_string(),
    ]);
    if let Some(r) = &reference {
        manifest.notes.push(format!(
            "reference model target {} trained on dataset {}",
            r.target_name, r.dataset_hash
        ));
    }
    files.finish(manifest, &timings)
}

pub fn cmd_similar(out: &Path, d: &DataArgs, s: &SimArgs) -> Result<(), CliError> {
    prepare_out(out)?;
    if s.anchor.is_none() && s.matrix.is_empty() {
        return Err(CliError::Usage("nothing to do: pass --anchor and/or --matrix".into()));
    }
    let t = Instant::now();
    let ds = load_dataset(d)?;
    let graphs = ds.graphs()?;
    let mut files = Outputs::new(out);
    if let Some(anchor) = &s.anchor {
        let pos = ds
            .position(anchor)
            .ok_or_else(|| CliError::from(SimilarityError::AnchorNotFound(anchor.clone())))?;
        let path = s
            .checkpoint
            .as_ref()
            .ok_or_else(|| CliError::Usage("--anchor needs --checkpoint".into()))?;
        let ck: DklCheckpoint = read_checkpoint(path)?;
        let f = featurize_with(&graphs, &ck.encoding).map_err(encoding_error)?;
        let nn = latent_neighbors(&ck.model, &f.x, pos, s.k)?;
        let rows: Vec<Vec<String>> = nn
            .iter()
            .enumerate()
            .map(|(rank, &(i, dist))| {
                let r = &ds.records()[i];
                vec![(rank + 1).to_string(), r.id.clone(), r.smiles.clone(), fmt_f64(dist)]
            })
            .collect();
        write_csv(&files.path("neighbors.csv"), &["rank", "id", "smiles", "distance"], &rows)?;
    }
    if !s.matrix.is_empty() {
        let mut idx = Vec::with_capacity(s.matrix.len());
        for id in &s.matrix {
            idx.push(ds.position(id).ok_or_else(|| CliError::Lookup(format!("id {id:?} is not in the dataset")))?);
        }
        let fps: Vec<_> = idx.iter().map(|&i| circular_fingerprint(&graphs[i], s.radius, s.nbits)).collect();
        let sm = similarity_matrix(s.matrix.clone(), &fps)?;
        let (h, rows) = data::similarity_rows(&sm.ids, &sm.values);
        write_csv(&files.path("similarity.csv"), &h, &rows)?;
    }
    let mut timings = Timings::default();
    timings.record("similar", t.elapsed().as_secs_f64());
    let manifest = RunManifest::new(
        "similar",
        settings_json(&[("data", to_json(d)), ("similar", to_json(s))]),
        ds.content_hash(),
        d.data_seed,
        "tanimoto",
    );
    files.finish(manifest, &timings)
}

pub fn cmd_ingest_qm9(out: &Path, s: &IngestSettings) -> Result<(), CliError> {
    prepare_out(out)?;
    let dir = s
        .qm9_dir
        .as_ref()
        .ok_or_else(|| CliError::Usage("--qm9-dir is required".into()))?;
    let t = Instant::now();
    let (mut records, rejected) = data::ingest_qm9_dir(dir)?;
    if records.is_empty() {
        return Err(CliError::Data(format!("no parseable .xyz files in {}", dir.display())));
    }
    if !rejected.is_empty() && !s.allow_skip {
        let list: Vec<String> = rejected.iter().map(|r| format!("  {}: {}", r.file, r.reason)).collect();
        return Err(CliError::Data(format!("{} files rejected:\n{}", rejected.len(), list.join("\n"))));
    }
    if let Some(n) = s.sample {
        if n > records.len() {
            return Err(DataError::SubsetTooLarge { n, len: records.len() }.into());
        }
        let mut idx = crate::num::Rng::new(s.data_seed).sample_indices(records.len(), n);
        idx.sort_unstable();
        records = idx.into_iter().map(|i| records[i].clone()).collect();
    }
    let mut files = Outputs::new(out);
    let mut header = vec!["id".to_string(), "smiles".to_string(), "smiles_gdb17".to_string()];
    header.extend(QM9_PROPERTIES.iter().map(|p| p.to_string()));
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            let mut row = vec![format!("gdb_{}", r.id), r.smiles_relaxed.clone(), r.smiles_gdb17.clone()];
            row.extend(r.properties.iter().map(|&v| fmt_f64(v)));
            row
        })
        .collect();
    write_csv(&files.path("qm9.csv"), &header, &rows)?;
    let rej: Vec<Vec<String>> = rejected.iter().map(|r| vec![r.file.clone(), r.reason.clone()]).collect();
    write_csv(&files.path("rejected.csv"), &["file", "reason"], &rej)?;
    let mut timings = Timings::default();
    timings.record("ingest", t.elapsed().as_secs_f64());
    let csv_hash = data::sha256_file(&out.join("qm9.csv"))?;
    let mut manifest = RunManifest::new("ingest-qm9", to_json(s), &csv_hash, s.data_seed, "none");
    manifest.notes.push(format!("{} records, {} files rejected", records.len(), rejected.len()));
    files.finish(manifest, &timings)
}

/// Parses a SMILES list into a throwaway dataset; used by the examples.
pub fn dataset_from_smiles(smiles: &[&str], target: &str) -> Result<Dataset, CliError> {
    let mut records = Vec::with_capacity(smiles.len());
    for (i, s) in smiles.iter().enumerate() {
        let g = parse_smiles(s).map_err(|e| CliError::Data(format!("{s}: {e}")))?;
        let value = crate::chem::descriptors(&g)
            .get(target)
            .ok_or_else(|| CliError::Usage(format!("{target} is not a descriptor")))?;
        records.push(data::Record {
            id: format!("m{i:03}"),
            smiles: s.to_string(),
            target: value,
        });
    }
    Ok(Dataset::new(records, target)?)
}

#[cfg(test)]
mod tests;
