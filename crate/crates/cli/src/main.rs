//! `nml-ddim` command-line frontend. Writes JSON on stdout (or `--out`);
//! failures print `{"code", "message"}` on stderr and exit with status 1,
//! usage errors exit with status 2.

mod data;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use nml_ddim::change::{
    dms_segment, mdl_change_statistic, single_change_statistic, ModelSequence, SegmentConstraints,
};
use nml_ddim::ddim::{
    ddim_concat, ddim_fusion_posterior, ddim_fusion_prior, ddim_parametric, ddim_slope,
    ratios_from_segmentation, ConcatSpec, FusionSpec,
};
use nml_ddim::family::{ModelClass, Sequence};
use nml_ddim::learning::{mdl_learn, two_stage_learn, ModelFamily, DEFAULT_LAMBDA};
use nml_ddim::nml::{log_parametric_complexity, Method};
use nml_ddim::sim::{run_experiment, Execution, ExperimentKind, ExperimentSpec, SCHEMA_VERSION};

use data::{read_sequences, DataFormat};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] nml_ddim::Error),
    #[error("cannot read data file {path}: {message}")]
    Data { path: String, message: String },
    #[error("cannot read config {path}: {message}")]
    Config { path: String, message: String },
    #[error("cannot write {path}: {message}")]
    Write { path: String, message: String },
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.code(),
            CliError::Data { .. } => "DataFileError",
            CliError::Config { .. } => "InvalidConfig",
            CliError::Write { .. } => "OutputError",
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "nml-ddim",
    version,
    about = "NML codelengths, descriptive dimension, MDL learning and change detection"
)]
struct Cli {
    /// Also report headline codelengths in bits (machine fields stay in nats).
    #[arg(long, global = true)]
    bits: bool,
    /// Write JSON here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Exact,
    Asymptotic,
    Auto,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Exact => Method::Exact,
            MethodArg::Asymptotic => Method::Asymptotic,
            MethodArg::Auto => Method::Auto,
        }
    }
}

#[derive(Args)]
struct DataArgs {
    /// Sequence file: JSONL arrays, or single-column CSV with blank lines
    /// between sequences.
    #[arg(long)]
    data: PathBuf,
    /// Overrides the format implied by the file extension.
    #[arg(long, value_enum)]
    format: Option<DataFormat>,
}

#[derive(Subcommand)]
enum Command {
    /// Log parametric complexity ln C_n of one model class.
    Complexity {
        #[arg(long)]
        family: String,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value = "auto")]
        method: MethodArg,
    },
    /// MDL model selection over a family, one result per sequence.
    Learn {
        /// Semicolon-separated members, e.g. "fixed:0.5,0.5;bernoulli".
        #[arg(long)]
        family: String,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_enum, default_value = "auto")]
        method: MethodArg,
        /// Use the two-stage code with a quantized parameter grid.
        #[arg(long)]
        two_stage: bool,
        #[arg(long, default_value_t = 16)]
        grid: usize,
        #[arg(long, default_value_t = DEFAULT_LAMBDA)]
        lambda: f64,
    },
    /// Descriptive dimension estimates.
    Ddim {
        #[arg(long, value_enum)]
        mode: DdimMode,
        /// One model, or semicolon-separated members / classes.
        #[arg(long)]
        family: String,
        /// Horizons for the slope estimate.
        #[arg(long, value_delimiter = ',', default_value = "400,800,1600,3200")]
        n_grid: Vec<usize>,
        /// Prior weights (default uniform).
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        /// Precision ratios of the concatenated classes.
        #[arg(long, value_delimiter = ',')]
        ratios: Option<Vec<f64>>,
        /// Change points from which concatenation ratios are derived.
        #[arg(long, value_delimiter = ',')]
        change_points: Option<Vec<usize>>,
        /// Sequence length for --change-points.
        #[arg(long)]
        n: Option<usize>,
        /// Data for the posterior form.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<DataFormat>,
        #[arg(long, value_enum, default_value = "auto")]
        method: MethodArg,
    },
    /// DMS segmentation, one result per sequence.
    Segment {
        #[arg(long)]
        family: String,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        max_changes: Option<usize>,
        #[arg(long, default_value_t = 1)]
        min_seg: usize,
        #[arg(long, value_enum, default_value = "auto")]
        method: MethodArg,
    },
    /// MDL change test, one result per sequence.
    TestChange {
        #[arg(long, value_enum)]
        mode: TestModeArg,
        #[arg(long)]
        family: String,
        #[command(flatten)]
        data: DataArgs,
        /// Split point of the single-change test.
        #[arg(long)]
        t: Option<usize>,
        /// Reference model sequence of the multiple-change test, as inline
        /// JSON or a path to a JSON file.
        #[arg(long)]
        reference: Option<String>,
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        #[arg(long)]
        max_changes: Option<usize>,
        #[arg(long, default_value_t = 1)]
        min_seg: usize,
        #[arg(long, value_enum, default_value = "auto")]
        method: MethodArg,
    },
    /// Seeded Monte Carlo experiment.
    Simulate {
        /// Experiment name; optional when the config names one.
        #[arg(long)]
        experiment: Option<String>,
        /// JSON experiment spec; without it the experiment's preset is run.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: u64,
        /// Worker threads (0 = all cores, 1 = serial). Does not affect results.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Overrides the trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// Also write the rows as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DdimMode {
    Parametric,
    Slope,
    FusionPrior,
    FusionPosterior,
    Concat,
}

#[derive(Clone, Copy, ValueEnum)]
enum TestModeArg {
    Single,
    Multiple,
}

/// Output wrapper carrying the schema version and optional bit values.
#[derive(Serialize)]
struct Envelope<T: Serialize> {
    schema_version: u32,
    #[serde(flatten)]
    body: T,
}

#[derive(Serialize)]
struct PerSequence<T: Serialize> {
    #[serde(flatten)]
    body: T,
    #[serde(skip_serializing_if = "Option::is_none")]
    bits: Option<BTreeMap<&'static str, f64>>,
}

#[derive(Serialize)]
struct Results<T: Serialize> {
    results: Vec<PerSequence<T>>,
}

fn bits(enabled: bool, fields: &[(&'static str, f64)]) -> Option<BTreeMap<&'static str, f64>> {
    enabled.then(|| {
        fields
            .iter()
            .map(|&(k, v)| (k, v / std::f64::consts::LN_2))
            .collect()
    })
}

fn family(text: &str) -> CliResult<ModelFamily> {
    Ok(text.parse()?)
}

fn members(text: &str) -> CliResult<Vec<ModelClass>> {
    text.split(';')
        .map(|m| m.parse().map_err(CliError::from))
        .collect()
}

fn sequences(args: &DataArgs, family: &ModelFamily) -> CliResult<Vec<Sequence>> {
    read_sequences(&args.data, args.format, family.alphabet_size())
}

fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::Write {
        path: "<json>".into(),
        message: e.to_string(),
    })
}

fn envelope<T: Serialize>(body: T) -> CliResult<String> {
    to_json(&Envelope {
        schema_version: SCHEMA_VERSION,
        body,
    })
}

fn run(cli: &Cli) -> CliResult<String> {
    match &cli.command {
        Command::Complexity { family, n, method } => {
            let model: ModelClass = family.parse()?;
            let (lc, used) = log_parametric_complexity(&model, *n, (*method).into())?;
            #[derive(Serialize)]
            struct Out {
                family: String,
                n: usize,
                method: Method,
                log_complexity_nats: f64,
                #[serde(skip_serializing_if = "Option::is_none")]
                log_complexity_bits: Option<f64>,
            }
            envelope(Out {
                family: model.spec(),
                n: *n,
                method: used,
                log_complexity_nats: lc,
                log_complexity_bits: cli.bits.then(|| lc / std::f64::consts::LN_2),
            })
        }
        Command::Learn {
            family: text,
            data,
            method,
            two_stage,
            grid,
            lambda,
        } => {
            let fam = family(text)?;
            let seqs = sequences(data, &fam)?;
            if *two_stage {
                let results = seqs
                    .iter()
                    .map(|x| {
                        let r = two_stage_learn(&fam, &x.stat(), *grid, *lambda)?;
                        let b = bits(cli.bits, &[("codelength", r.codelength)]);
                        Ok(PerSequence { body: r, bits: b })
                    })
                    .collect::<CliResult<Vec<_>>>()?;
                envelope(Results { results })
            } else {
                let results = seqs
                    .iter()
                    .map(|x| {
                        let r = mdl_learn(&fam, &x.stat(), (*method).into())?;
                        let b = bits(cli.bits, &[("codelength", r.selected().total)]);
                        Ok(PerSequence { body: r, bits: b })
                    })
                    .collect::<CliResult<Vec<_>>>()?;
                envelope(Results { results })
            }
        }
        Command::Ddim {
            mode,
            family: text,
            n_grid,
            weights,
            beta,
            ratios,
            change_points,
            n,
            data,
            format,
            method,
        } => match mode {
            DdimMode::Parametric => envelope(ddim_parametric(&text.parse()?)),
            DdimMode::Slope => envelope(ddim_slope(&text.parse()?, n_grid)?),
            DdimMode::FusionPrior => envelope(ddim_fusion_prior(&fusion(text, weights, *beta)?)),
            DdimMode::FusionPosterior => {
                let spec = fusion(text, weights, *beta)?;
                let path = data.as_ref().ok_or_else(|| {
                    nml_ddim::Error::InvalidConfig("fusion-posterior needs --data".into())
                })?;
                let m = spec.members()[0].alphabet_size();
                let results = read_sequences(path, *format, m)?
                    .iter()
                    .map(|x| {
                        Ok(PerSequence {
                            body: ddim_fusion_posterior(&spec, &x.stat(), (*method).into())?,
                            bits: None,
                        })
                    })
                    .collect::<CliResult<Vec<_>>>()?;
                envelope(Results { results })
            }
            DdimMode::Concat => {
                let classes = members(text)?;
                let ratios = match (ratios, change_points, n) {
                    (Some(r), None, _) => r.clone(),
                    (None, Some(cps), Some(n)) => ratios_from_segmentation(cps, *n)?,
                    _ => {
                        return Err(nml_ddim::Error::InvalidConfig(
                            "concat needs --ratios, or --change-points with --n".into(),
                        )
                        .into())
                    }
                };
                envelope(ddim_concat(&ConcatSpec::new(classes, ratios)?))
            }
        },
        Command::Segment {
            family: text,
            data,
            max_changes,
            min_seg,
            method,
        } => {
            let fam = family(text)?;
            let limits = SegmentConstraints {
                max_changes: *max_changes,
                min_segment_len: *min_seg,
            };
            let results = sequences(data, &fam)?
                .iter()
                .map(|x| {
                    let s = dms_segment(x.symbols(), &fam, limits, (*method).into())?;
                    let b = bits(
                        cli.bits,
                        &[
                            ("data_codelength", s.data_codelength),
                            ("model_codelength", s.model_codelength),
                            ("total_codelength", s.total_codelength),
                        ],
                    );
                    Ok(PerSequence { body: s, bits: b })
                })
                .collect::<CliResult<Vec<_>>>()?;
            envelope(Results { results })
        }
        Command::TestChange {
            mode,
            family: text,
            data,
            t,
            reference,
            epsilon,
            max_changes,
            min_seg,
            method,
        } => {
            let fam = family(text)?;
            let seqs = sequences(data, &fam)?;
            let method = Method::from(*method);
            let reference = match (mode, reference, t) {
                (TestModeArg::Multiple, Some(r), _) => Some(parse_reference(r)?),
                (TestModeArg::Single, None, Some(_)) => None,
                (TestModeArg::Multiple, _, _) => {
                    return Err(nml_ddim::Error::InvalidConfig(
                        "the multiple-change test needs --reference".into(),
                    )
                    .into())
                }
                (TestModeArg::Single, _, _) => {
                    return Err(nml_ddim::Error::InvalidConfig(
                        "the single-change test needs --t and no --reference".into(),
                    )
                    .into())
                }
            };
            let limits = SegmentConstraints {
                max_changes: *max_changes,
                min_segment_len: *min_seg,
            };
            let results = seqs
                .iter()
                .map(|x| {
                    let r = match &reference {
                        Some(ms) => {
                            mdl_change_statistic(x.symbols(), ms, &fam, *epsilon, limits, method)?
                        }
                        None => single_change_statistic(
                            x.symbols(),
                            t.expect("checked above"),
                            &fam,
                            *epsilon,
                            method,
                        )?,
                    };
                    let b = bits(
                        cli.bits,
                        &[
                            ("statistic", r.statistic),
                            ("null_codelength", r.null_codelength),
                        ],
                    );
                    Ok(PerSequence { body: r, bits: b })
                })
                .collect::<CliResult<Vec<_>>>()?;
            envelope(Results { results })
        }
        Command::Simulate {
            experiment,
            config,
            seed,
            workers,
            trials,
            csv,
        } => {
            let mut spec = load_spec(experiment.as_deref(), config.as_deref(), *seed)?;
            if let Some(t) = trials {
                spec.trials = *t;
            }
            let report = run_experiment(&spec, Execution::with_workers(*workers))?;
            if let Some(path) = csv {
                let file = std::fs::File::create(path).map_err(|e| write_error(path, e))?;
                report.write_csv(file)?;
            }
            Ok(report.to_json()?)
        }
    }
}

fn fusion(text: &str, weights: &Option<Vec<f64>>, beta: f64) -> CliResult<FusionSpec> {
    let members = members(text)?;
    let weights = weights
        .clone()
        .unwrap_or_else(|| vec![1.0 / members.len() as f64; members.len()]);
    Ok(FusionSpec::new(members, weights, beta)?)
}

fn parse_reference(text: &str) -> CliResult<ModelSequence> {
    let json = if text.trim_start().starts_with('{') {
        text.to_string()
    } else {
        std::fs::read_to_string(text).map_err(|e| CliError::Config {
            path: text.into(),
            message: e.to_string(),
        })?
    };
    serde_json::from_str(&json).map_err(|e| {
        nml_ddim::Error::InvalidConfig(format!("reference model sequence: {e}")).into()
    })
}

/// Preset or config file, with the master seed always taken from `--seed`.
fn load_spec(
    experiment: Option<&str>,
    config: Option<&Path>,
    seed: u64,
) -> CliResult<ExperimentSpec> {
    let kind = experiment.map(str::parse::<ExperimentKind>).transpose()?;
    let Some(path) = config else {
        let kind = kind.ok_or_else(|| {
            nml_ddim::Error::InvalidConfig("simulate needs --experiment or --config".into())
        })?;
        return Ok(ExperimentSpec::preset(kind, seed));
    };
    let config_error = |message: String| CliError::Config {
        path: path.display().to_string(),
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|e| config_error(e.to_string()))?;
    let mut value: Value = serde_json::from_str(&text).map_err(|e| config_error(e.to_string()))?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| config_error("expected a JSON object".into()))?;
    if let Some(kind) = kind {
        match obj.get("experiment").and_then(Value::as_str) {
            None => {
                obj.insert("experiment".into(), kind.name().into());
            }
            Some(named) if named.parse::<ExperimentKind>().ok() != Some(kind) => {
                return Err(config_error(format!(
                    "config describes {named}, not {}",
                    kind.name()
                )))
            }
            Some(_) => {}
        }
    }
    obj.insert("master_seed".into(), seed.into());
    serde_json::from_value(value).map_err(|e| config_error(e.to_string()))
}

fn write_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Write {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn emit(cli: &Cli, text: &str) -> CliResult<()> {
    match &cli.out {
        Some(path) => std::fs::write(path, format!("{text}\n")).map_err(|e| write_error(path, e)),
        None => {
            let mut out = std::io::stdout().lock();
            match writeln!(out, "{text}") {
                // a closed pipe (e.g. `| head`) is not an error
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                r => r.map_err(|e| write_error(Path::new("<stdout>"), e)),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli).and_then(|text| emit(&cli, &text)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let body = serde_json::json!({ "code": e.code(), "message": e.to_string() });
            eprintln!("{body}");
            ExitCode::from(1)
        }
    }
}
