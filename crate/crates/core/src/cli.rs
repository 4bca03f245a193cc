//! The `shifts` command-line front end.
//!
//! Every subcommand reads its inputs from files named by flags and writes
//! machine-readable results to files; diagnostics go to stderr. Exit status
//! is 0 on success, 1 for invalid input and 2 when a computation fails.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::dataio::{load_csv, SeriesDataset, Split, SplitRatios, TargetColumn};
use crate::error::{Error, Result};
use crate::eval::{mutual_information, run_ablation, DEFAULT_BINS};
use crate::gradcore::{checkpoint, AdamConfig};
use crate::models::{BackboneConfig, BackboneKind, DEFAULT_AGG_HIDDEN, DEFAULT_BACKBONE_HIDDEN};
use crate::sam::AttentionMask;
use crate::synth::{self, Drift, SynthSpec};
use crate::trainer::{fit, Mode, ModelConfig, ShiftsModel, TrainConfig};

pub const THREADS_ENV: &str = "SHIFTS_THREADS";

const DEFAULT_LOOKBACK: usize = 96;
const DEFAULT_HORIZON: usize = 96;
const DEFAULT_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

#[derive(Parser, Debug)]
#[command(
    name = "shifts",
    version,
    about = "Shift-robust forecasting with exogenous features"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a model, save its checkpoint and write a JSON run record
    Train(TrainCmd),
    /// Load a checkpoint and report test-split metrics as JSON
    Eval(EvalCmd),
    /// Train all four modes for several seeds; write a CSV table and a JSON summary
    Ablate(AblateCmd),
    /// Per-feature mutual information between horizon features and the horizon target
    Mi(MiCmd),
    /// Generate a synthetic dataset with planted lag relationships
    Synth(SynthCmd),
    /// Write the effective attention mask of a checkpoint as CSV
    DumpMask(DumpMaskCmd),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ModeArg {
    Base,
    #[value(alias = "cd_only")]
    #[serde(alias = "cd_only")]
    Cd,
    #[value(alias = "ts_only")]
    #[serde(alias = "ts_only")]
    Ts,
    Shifts,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Base => Mode::Base,
            ModeArg::Cd => Mode::CdOnly,
            ModeArg::Ts => Mode::TsOnly,
            ModeArg::Shifts => Mode::Shifts,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum BackboneArg {
    Linear,
    Mlp,
}

impl From<BackboneArg> for BackboneKind {
    fn from(b: BackboneArg) -> Self {
        match b {
            BackboneArg::Linear => BackboneKind::Linear,
            BackboneArg::Mlp => BackboneKind::Mlp,
        }
    }
}

/// Every key a `--config` file may set. Flags given on the command line win.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    data: Option<PathBuf>,
    target: Option<String>,
    lookback: Option<usize>,
    horizon: Option<usize>,
    ratios: Option<Vec<f64>>,
    mode: Option<ModeArg>,
    backbone: Option<BackboneArg>,
    hidden: Option<usize>,
    agg_hidden: Option<usize>,
    epochs: Option<usize>,
    batch: Option<usize>,
    lr: Option<f64>,
    patience: Option<usize>,
    detach_target: Option<bool>,
    lambda_sur: Option<f32>,
    seed: Option<u64>,
    seeds: Option<Vec<u64>>,
    bins: Option<usize>,
    out: Option<PathBuf>,
    checkpoint: Option<PathBuf>,
}

fn set<T: Clone>(slot: &mut Option<T>, flag: &Option<T>) {
    if flag.is_some() {
        slot.clone_from(flag);
    }
}

#[derive(Args, Debug)]
struct DataFlags {
    /// Input CSV (header row; optional leading date column)
    #[arg(long)]
    data: Option<PathBuf>,
    /// Target column name [default: last column]
    #[arg(long)]
    target: Option<String>,
    /// Lookback window length [default: 96]
    #[arg(long)]
    lookback: Option<usize>,
    /// Horizon window length [default: 96]
    #[arg(long)]
    horizon: Option<usize>,
    /// Chronological train,val,test fractions [default: 0.7,0.1,0.2]
    #[arg(long, value_delimiter = ',', value_name = "TRAIN,VAL,TEST")]
    ratios: Option<Vec<f64>>,
    /// JSON file with defaults for any flag (snake_case keys); flags win
    #[arg(long)]
    config: Option<PathBuf>,
}

impl DataFlags {
    fn apply(&self, c: &mut RunConfig) {
        set(&mut c.data, &self.data);
        set(&mut c.target, &self.target);
        set(&mut c.lookback, &self.lookback);
        set(&mut c.horizon, &self.horizon);
        set(&mut c.ratios, &self.ratios);
    }
}

#[derive(Args, Debug)]
struct ModelFlags {
    /// Backbone network [default: linear]
    #[arg(long, value_enum)]
    backbone: Option<BackboneArg>,
    /// Hidden width of the mlp backbone [default: 128]
    #[arg(long)]
    hidden: Option<usize>,
    /// Hidden width of the aggregation network [default: 64]
    #[arg(long)]
    agg_hidden: Option<usize>,
}

impl ModelFlags {
    fn apply(&self, c: &mut RunConfig) {
        set(&mut c.backbone, &self.backbone);
        set(&mut c.hidden, &self.hidden);
        set(&mut c.agg_hidden, &self.agg_hidden);
    }
}

#[derive(Args, Debug)]
struct OptimFlags {
    /// Maximum training epochs [default: 30]
    #[arg(long)]
    epochs: Option<usize>,
    /// Mini-batch size [default: 32]
    #[arg(long)]
    batch: Option<usize>,
    /// Adam learning rate [default: 0.001]
    #[arg(long)]
    lr: Option<f64>,
    /// Epochs without validation improvement before stopping [default: 5]
    #[arg(long)]
    patience: Option<usize>,
    /// Stop the surrogate loss from back-propagating into its target [default: false]
    #[arg(long)]
    detach_target: bool,
}

impl OptimFlags {
    fn apply(&self, c: &mut RunConfig) {
        set(&mut c.epochs, &self.epochs);
        set(&mut c.batch, &self.batch);
        set(&mut c.lr, &self.lr);
        set(&mut c.patience, &self.patience);
        if self.detach_target {
            c.detach_target = Some(true);
        }
    }
}

#[derive(Args, Debug)]
struct TrainCmd {
    #[command(flatten)]
    data: DataFlags,
    /// Ablation mode [default: shifts]
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[command(flatten)]
    model: ModelFlags,
    #[command(flatten)]
    optim: OptimFlags,
    /// Seed for initialization and shuffling [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Run record JSON [default: run.json]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Checkpoint to write [default: model.ckpt]
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalCmd {
    #[command(flatten)]
    data: DataFlags,
    /// Mode the checkpoint was trained in [default: shifts]
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Inference batch size [default: 32]
    #[arg(long)]
    batch: Option<usize>,
    /// Checkpoint to load [default: model.ckpt]
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Metrics JSON [default: eval.json]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AblateCmd {
    #[command(flatten)]
    data: DataFlags,
    #[command(flatten)]
    model: ModelFlags,
    #[command(flatten)]
    optim: OptimFlags,
    /// Comma-separated seeds [default: 0,1,2,3,4]
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Table CSV; the summary goes next to it with a .json extension [default: ablation.csv]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MiCmd {
    #[command(flatten)]
    data: DataFlags,
    /// Quantile bins per variable [default: 8]
    #[arg(long)]
    bins: Option<usize>,
    /// Report JSON [default: mi.json]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SynthCmd {
    /// Series length [default: 4000]
    #[arg(long)]
    length: Option<usize>,
    /// Lookback window the planted offsets refer to [default: 16]
    #[arg(long)]
    lookback: Option<usize>,
    /// Horizon window [default: 8]
    #[arg(long)]
    horizon: Option<usize>,
    /// Per-channel slice offset in [0, lookback], or `none` for a decoy [default: <lookback>,none]
    #[arg(long, value_delimiter = ',')]
    offsets: Option<Vec<String>>,
    /// Per-channel mix weights [default: 1,0]
    #[arg(long = "mix", value_delimiter = ',', allow_negative_numbers = true)]
    mix: Option<Vec<f64>>,
    /// Standard deviation of the target noise [default: 0.1]
    #[arg(long)]
    noise: Option<f64>,
    /// Temporal drift: none, mean:<slope> or var:<slope> [default: none]
    #[arg(long)]
    drift: Option<String>,
    /// Relative frequency increase of the exogenous sinusoids over the series [default: 0]
    #[arg(long)]
    concept_drift: Option<f64>,
    /// Generator seed [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// JSON synthetic spec to start from; flags win
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV; the spec is written next to it with a .json extension [default: synth.csv]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DumpMaskCmd {
    /// Checkpoint to read [default: model.ckpt]
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Optional CSV whose header supplies channel names
    #[arg(long)]
    data: Option<PathBuf>,
    /// Target column of --data [default: last column]
    #[arg(long)]
    target: Option<String>,
    /// Output CSV [default: mask.csv]
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Result file of `train`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub dataset: String,
    pub mode: Mode,
    #[serde(rename = "L")]
    pub lookback: usize,
    #[serde(rename = "H")]
    pub horizon: usize,
    pub seed: u64,
    pub best_epoch: usize,
    pub val_mse: f64,
    pub test_mse: f64,
    pub test_mae: f64,
    pub wall_time_s: f64,
}

/// Result file of `eval`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub dataset: String,
    pub mode: Mode,
    #[serde(rename = "L")]
    pub lookback: usize,
    #[serde(rename = "H")]
    pub horizon: usize,
    pub test_mse: f64,
    pub test_mae: f64,
    pub n_windows: usize,
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Train(c) => train(c),
        Command::Eval(c) => evaluate(c),
        Command::Ablate(c) => ablate(c),
        Command::Mi(c) => mi(c),
        Command::Synth(c) => synth_cmd(c),
        Command::DumpMask(c) => dump_mask(c),
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    let text = read_input(path, "--config")?;
    serde_json::from_str(&text)
        .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
}

fn read_input(path: &Path, flag: &str) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| input_error(path, flag, e))
}

fn input_error(path: &Path, flag: &str, e: std::io::Error) -> Error {
    Error::InvalidConfig(format!(
        "cannot read {} ({e}); check {flag}",
        path.display()
    ))
}

fn require_file(path: &Path, flag: &str) -> Result<()> {
    std::fs::metadata(path)
        .map(|_| ())
        .map_err(|e| input_error(path, flag, e))
}

impl RunConfig {
    fn lookback(&self) -> usize {
        self.lookback.unwrap_or(DEFAULT_LOOKBACK)
    }

    fn horizon(&self) -> usize {
        self.horizon.unwrap_or(DEFAULT_HORIZON)
    }

    fn mode(&self) -> Mode {
        self.mode.map_or(Mode::Shifts, Mode::from)
    }

    fn data_path(&self) -> Result<&Path> {
        let p = self
            .data
            .as_deref()
            .ok_or_else(|| Error::InvalidConfig("no input data; pass --data <csv>".into()))?;
        require_file(p, "--data")?;
        Ok(p)
    }

    fn ratios(&self) -> Result<SplitRatios> {
        match self.ratios.as_deref() {
            None => Ok(SplitRatios::default()),
            Some(&[a, b, c]) => SplitRatios::new(a, b, c),
            Some(r) => Err(Error::InvalidConfig(format!(
                "ratios need 3 values, got {}",
                r.len()
            ))),
        }
    }

    /// Loads, splits and standardizes the dataset.
    fn dataset(&self) -> Result<SeriesDataset> {
        let path = self.data_path()?;
        let target = match &self.target {
            Some(t) => TargetColumn::Name(t.clone()),
            None => TargetColumn::Name(last_header(path)?),
        };
        let (l, h) = (self.lookback(), self.horizon());
        if l < 2 || h == 0 {
            return Err(Error::InvalidConfig(format!(
                "need lookback ≥ 2 and horizon ≥ 1, got {l} and {h}"
            )));
        }
        load_csv(path, &target)?
            .chrono_split(self.ratios()?, l + h)?
            .standardize()
    }

    fn model_config(&self, d_x: usize) -> ModelConfig {
        let backbone = BackboneConfig {
            kind: self
                .backbone
                .map_or(BackboneKind::Linear, BackboneKind::from),
            lookback: self.lookback(),
            horizon: self.horizon(),
            d_x,
            hidden: self.hidden.unwrap_or(DEFAULT_BACKBONE_HIDDEN),
            seed: 0,
        };
        ModelConfig::new(backbone, self.agg_hidden.unwrap_or(DEFAULT_AGG_HIDDEN))
    }

    fn train_config(&self) -> Result<TrainConfig> {
        let d = TrainConfig::default();
        let cfg = TrainConfig {
            mode: self.mode(),
            epochs: self.epochs.unwrap_or(d.epochs),
            batch_size: self.batch.unwrap_or(d.batch_size),
            adam: AdamConfig {
                lr: self.lr.unwrap_or(d.adam.lr),
                ..d.adam
            },
            patience: self.patience.unwrap_or(d.patience),
            seed: self.seed.unwrap_or(d.seed),
            detach_target: self.detach_target.unwrap_or(d.detach_target),
            lambda_sur: self.lambda_sur.unwrap_or(d.lambda_sur),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn out(&self, default: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(default))
    }

    fn checkpoint(&self) -> PathBuf {
        self.checkpoint
            .clone()
            .unwrap_or_else(|| PathBuf::from("model.ckpt"))
    }

    fn dataset_label(&self) -> String {
        self.data
            .as_deref()
            .map(|p| p.display().to_string())
            .unwrap_or_default()
    }
}

fn last_header(path: &Path) -> Result<String> {
    let mut rdr = csv::Reader::from_path(path)?;
    rdr.headers()?
        .iter()
        .next_back()
        .map(|h| h.trim().to_string())
        .ok_or_else(|| Error::InvalidConfig(format!("{} has an empty header", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::InvalidConfig(format!(
                "{THREADS_ENV} must be a positive integer, got {v:?}"
            ))),
        },
    }
}

fn train(c: TrainCmd) -> Result<()> {
    let mut cfg = load_config(c.data.config.as_deref())?;
    c.data.apply(&mut cfg);
    set(&mut cfg.mode, &c.mode);
    c.model.apply(&mut cfg);
    c.optim.apply(&mut cfg);
    set(&mut cfg.seed, &c.seed);
    set(&mut cfg.out, &c.out);
    set(&mut cfg.checkpoint, &c.checkpoint);

    let train_cfg = cfg.train_config()?;
    let ds = cfg.dataset()?;
    let model_cfg = cfg.model_config(ds.d_x());
    model_cfg.backbone.validate()?;
    model_cfg.agg.validate()?;
    let (model, report) = fit(&ds, &model_cfg, &train_cfg)?;
    checkpoint::save(model.params(), &cfg.checkpoint())?;
    let test = model.evaluate(&ds, Split::Test, train_cfg.batch_size)?;
    let record = RunRecord {
        dataset: cfg.dataset_label(),
        mode: train_cfg.mode,
        lookback: cfg.lookback(),
        horizon: cfg.horizon(),
        seed: train_cfg.seed,
        best_epoch: report.best_epoch,
        val_mse: report.best_val_mse(),
        test_mse: test.mse,
        test_mae: test.mae,
        wall_time_s: report.wall_time_s,
    };
    write_json(&cfg.out("run.json"), &record)
}

fn evaluate(c: EvalCmd) -> Result<()> {
    let mut cfg = load_config(c.data.config.as_deref())?;
    c.data.apply(&mut cfg);
    set(&mut cfg.mode, &c.mode);
    set(&mut cfg.batch, &c.batch);
    set(&mut cfg.checkpoint, &c.checkpoint);
    set(&mut cfg.out, &c.out);

    let ckpt = cfg.checkpoint();
    require_file(&ckpt, "--checkpoint")?;
    let model = ShiftsModel::from_records(checkpoint::load(&ckpt)?, cfg.mode())?;
    let mc = model.config();
    // Window sizes come from the checkpoint unless given explicitly.
    cfg.lookback.get_or_insert(mc.lookback());
    cfg.horizon.get_or_insert(mc.horizon());
    if (cfg.lookback(), cfg.horizon()) != (mc.lookback(), mc.horizon()) {
        return Err(Error::InvalidConfig(format!(
            "checkpoint was trained with lookback {} and horizon {}",
            mc.lookback(),
            mc.horizon()
        )));
    }
    let ds = cfg.dataset()?;
    if ds.d_x() != mc.d_x() {
        return Err(Error::InvalidConfig(format!(
            "checkpoint expects {} exogenous channels, data has {}",
            mc.d_x(),
            ds.d_x()
        )));
    }
    let m = model.evaluate(
        &ds,
        Split::Test,
        cfg.batch.unwrap_or(TrainConfig::default().batch_size),
    )?;
    let record = EvalRecord {
        dataset: cfg.dataset_label(),
        mode: model.mode(),
        lookback: mc.lookback(),
        horizon: mc.horizon(),
        test_mse: m.mse,
        test_mae: m.mae,
        n_windows: m.n_windows,
    };
    write_json(&cfg.out("eval.json"), &record)
}

fn ablate(c: AblateCmd) -> Result<()> {
    let mut cfg = load_config(c.data.config.as_deref())?;
    c.data.apply(&mut cfg);
    c.model.apply(&mut cfg);
    c.optim.apply(&mut cfg);
    set(&mut cfg.seeds, &c.seeds);
    set(&mut cfg.out, &c.out);

    let train_cfg = cfg.train_config()?;
    let threads = threads_from_env()?;
    let seeds = cfg.seeds.clone().unwrap_or_else(|| DEFAULT_SEEDS.to_vec());
    let ds = cfg.dataset()?;
    let model_cfg = cfg.model_config(ds.d_x());
    let table = run_ablation(&ds, &model_cfg, &train_cfg, &seeds, threads)?;
    let out = cfg.out("ablation.csv");
    std::fs::write(&out, table.to_csv())?;
    write_json(&out.with_extension("json"), &table.summary)
}

fn mi(c: MiCmd) -> Result<()> {
    let mut cfg = load_config(c.data.config.as_deref())?;
    c.data.apply(&mut cfg);
    set(&mut cfg.bins, &c.bins);
    set(&mut cfg.out, &c.out);

    let ds = cfg.dataset()?;
    let report = mutual_information(
        &ds,
        cfg.lookback(),
        cfg.horizon(),
        cfg.bins.unwrap_or(DEFAULT_BINS),
    )?;
    write_json(&cfg.out("mi.json"), &report)
}

fn parse_drift(s: &str) -> Result<Drift> {
    let bad = || {
        Error::InvalidConfig(format!(
            "drift must be none, mean:<slope> or var:<slope>, got {s:?}"
        ))
    };
    if s == "none" {
        return Ok(Drift::None);
    }
    let (kind, slope) = s.split_once(':').ok_or_else(bad)?;
    let slope: f64 = slope.parse().map_err(|_| bad())?;
    match kind {
        "mean" => Ok(Drift::MeanRamp(slope)),
        "var" => Ok(Drift::VarianceRamp(slope)),
        _ => Err(bad()),
    }
}

fn parse_offsets(items: &[String]) -> Result<Vec<Option<usize>>> {
    items
        .iter()
        .map(|s| match s.trim() {
            "none" => Ok(None),
            v => v.parse().map(Some).map_err(|_| {
                Error::InvalidConfig(format!("offset must be an integer or `none`, got {v:?}"))
            }),
        })
        .collect()
}

fn synth_cmd(c: SynthCmd) -> Result<()> {
    let mut spec = match &c.config {
        Some(p) => serde_json::from_str::<SynthSpec>(&read_input(p, "--config")?)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", p.display())))?,
        None => SynthSpec::planted(4000, 16, 8, 16, 0.1, 0),
    };
    let lookback_given = c.lookback.is_some();
    if let Some(v) = c.length {
        spec.length = v;
    }
    if let Some(v) = c.lookback {
        spec.lookback = v;
    }
    if let Some(v) = c.horizon {
        spec.horizon = v;
    }
    match &c.offsets {
        Some(o) => spec.offsets = parse_offsets(o)?,
        // The default causal channel tracks a changed lookback.
        None if c.config.is_none() && lookback_given => spec.offsets[0] = Some(spec.lookback),
        None => {}
    }
    if let Some(v) = &c.mix {
        spec.mix_weights.clone_from(v);
    }
    spec.d_x = spec.offsets.len();
    if let Some(v) = c.noise {
        spec.noise_std = v;
    }
    if let Some(v) = &c.drift {
        spec.drift = parse_drift(v)?;
    }
    if let Some(v) = c.concept_drift {
        spec.concept_drift = v;
    }
    if let Some(v) = c.seed {
        spec.seed = v;
    }
    let ds = synth::generate(&spec)?;
    synth::write(
        &spec,
        &ds,
        &c.out.unwrap_or_else(|| PathBuf::from("synth.csv")),
    )
}

fn dump_mask(c: DumpMaskCmd) -> Result<()> {
    let ckpt = c.checkpoint.unwrap_or_else(|| PathBuf::from("model.ckpt"));
    require_file(&ckpt, "--checkpoint")?;
    let raw = checkpoint::load(&ckpt)?
        .into_iter()
        .find(|(n, _)| n == crate::sam::MASK_NAME)
        .map(|(_, t)| t)
        .ok_or_else(|| Error::Checkpoint(format!("{} has no attention mask", ckpt.display())))?;
    let mask = AttentionMask::from_raw(raw)?;
    let names = match &c.data {
        Some(p) => {
            require_file(p, "--data")?;
            let target = match &c.target {
                Some(t) => t.clone(),
                None => last_header(p)?,
            };
            load_csv(p, &TargetColumn::Name(target))?.channel_names
        }
        None => Vec::new(),
    };
    std::fs::write(
        c.out.unwrap_or_else(|| PathBuf::from("mask.csv")),
        mask.to_csv(&names),
    )?;
    Ok(())
}
