//! Run configuration: command-line flags layered over an optional JSON file,
//! validated in one pass so every problem is reported together.

use std::path::{Path, PathBuf};

use bgk_wigner::eval::GridSpec;
use bgk_wigner::exec::Execution;
use bgk_wigner::potentials;
use bgk_wigner::ring::RingElem;
use bgk_wigner::seed::SeedSpec;
use bgk_wigner::series::{Convention, WignerSeries};
use clap::Args;
use serde::{Deserialize, Serialize};

pub const DEFAULT_ORDER: usize = 5;
pub const DEFAULT_SEED: &str = "fd:z=1";
pub const DEFAULT_RANGE: (f64, f64, usize) = (-4.0, 4.0, 401);
pub const DEFAULT_SAMPLES: usize = 200;
pub const DEFAULT_J_MAX: usize = 6;
pub const DEFAULT_RNG_SEED: u64 = 0x5eed;
pub const DEFAULT_RESIDUAL_HBARS: [f64; 5] = [0.05, 0.0707, 0.1, 0.141, 0.2];

/// Flags shared by every subcommand. Each one overrides the config file.
#[derive(Args, Debug, Default, Clone)]
pub struct SharedArgs {
    /// Potential expression in q (e.g. "-q^2/2 + q^4/4") or a named potential:
    /// goldstone, quartic, modulated, modulated:a=<number>.
    #[arg(long, allow_hyphen_values = true)]
    pub potential: Option<String>,
    /// Truncation order L (terms through hbar^(2L)).
    #[arg(long)]
    pub order: Option<usize>,
    /// Additive-function convention: paper or uniform.
    #[arg(long)]
    pub convention: Option<String>,
    /// Seed distribution: mb, fd:z=<z>, be:z=<z>, fd:chi=<chi>.
    #[arg(long)]
    pub seed: Option<String>,
    /// Single value of hbar.
    #[arg(long, conflicts_with = "hbar_list")]
    pub hbar: Option<f64>,
    /// Comma-separated list of hbar values.
    #[arg(long, value_delimiter = ',')]
    pub hbar_list: Option<Vec<f64>>,
    /// Position grid as min,max,count.
    #[arg(long, allow_hyphen_values = true)]
    pub qrange: Option<String>,
    /// Momentum grid as min,max,count.
    #[arg(long, allow_hyphen_values = true)]
    pub prange: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON config file; flags take precedence over its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Load a previously expanded series instead of building one.
    #[arg(long)]
    pub series: Option<PathBuf>,
    /// Run on one thread.
    #[arg(long)]
    pub sequential: bool,
}

/// Keys accepted in a JSON config file.
#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub potential: Option<String>,
    pub order: Option<usize>,
    pub convention: Option<String>,
    pub seed: Option<String>,
    pub hbar: Option<f64>,
    pub hbar_list: Option<Vec<f64>>,
    pub qrange: Option<String>,
    pub prange: Option<String>,
    pub out: Option<PathBuf>,
    pub series: Option<PathBuf>,
    pub sequential: Option<bool>,
    pub normalize: Option<bool>,
    pub eps: Option<f64>,
    pub mode: Option<String>,
    pub j_max: Option<usize>,
    pub samples: Option<usize>,
    pub rng_seed: Option<u64>,
}

/// Command-specific flags that also have config-file keys.
#[derive(Debug, Default, Clone)]
pub struct ExtraArgs {
    pub normalize: Option<bool>,
    pub eps: Option<f64>,
    pub mode: Option<String>,
    pub j_max: Option<usize>,
    pub samples: Option<usize>,
    pub rng_seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Expand,
    Evaluate,
    Diagnose,
    Verify,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VerifyMode {
    Auto,
    Symbolic,
    Numeric,
}

/// Where the series comes from.
#[derive(Clone, Debug)]
pub enum SeriesSource {
    Build(RingElem),
    File(PathBuf),
}

/// Validated configuration. Also serialized into every JSON output.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub potential: Option<String>,
    pub series_file: Option<PathBuf>,
    pub order: usize,
    pub convention: Convention,
    pub seed: SeedSpec,
    pub hbar: Option<f64>,
    pub hbar_list: Option<Vec<f64>>,
    pub grid: GridSpec,
    pub out: PathBuf,
    pub normalize: bool,
    pub eps: f64,
    pub mode: VerifyMode,
    pub j_max: Option<usize>,
    pub samples: usize,
    pub rng_seed: u64,
    pub sequential: bool,
    #[serde(skip)]
    pub source: Option<SeriesSource>,
}

impl RunConfig {
    pub fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }

    pub fn series_source(&self) -> &SeriesSource {
        self.source.as_ref().expect("validated config has a series source")
    }
}

fn parse_range(text: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let [a, b, n] = parts.as_slice() else {
        return Err(format!("expected min,max,count, got '{text}'"));
    };
    let a: f64 = a.parse().map_err(|_| format!("bad number '{a}' in '{text}'"))?;
    let b: f64 = b.parse().map_err(|_| format!("bad number '{b}' in '{text}'"))?;
    let n: usize = n.parse().map_err(|_| format!("bad count '{n}' in '{text}'"))?;
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(format!("range '{text}' must have finite min < max"));
    }
    if n < 2 {
        return Err(format!("range '{text}' needs at least 2 points"));
    }
    Ok((a, b, n))
}

fn load_file(path: &Path) -> Result<FileConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("config {}: {e}", path.display()))
}

/// Merges flags over the config file and validates the result for `command`.
/// All problems are collected into one message.
pub fn resolve(command: Command, args: &SharedArgs, extra: &ExtraArgs) -> Result<RunConfig, String> {
    let mut errors = Vec::new();
    let file = match &args.config {
        Some(path) => load_file(path).unwrap_or_else(|e| {
            errors.push(e);
            FileConfig::default()
        }),
        None => FileConfig::default(),
    };

    let potential = args.potential.clone().or(file.potential);
    let series_file = args.series.clone().or(file.series);
    let order = args.order.or(file.order).unwrap_or(DEFAULT_ORDER);
    let convention = args
        .convention
        .clone()
        .or(file.convention)
        .map_or(Ok(Convention::Paper), |c| c.parse::<Convention>())
        .unwrap_or_else(|e| {
            errors.push(format!("--convention: {e}"));
            Convention::Paper
        });
    let seed_text = args.seed.clone().or(file.seed).unwrap_or(DEFAULT_SEED.into());
    let seed = match seed_text.parse::<SeedSpec>() {
        Ok(spec) => {
            if let Err(e) = spec.build(1) {
                errors.push(format!("--seed: {e}"));
            }
            spec
        }
        Err(e) => {
            errors.push(format!("--seed: {e}"));
            SeedSpec::MaxwellBoltzmann
        }
    };

    let (hbar, hbar_list) = if args.hbar.is_some() || args.hbar_list.is_some() {
        (args.hbar, args.hbar_list.clone())
    } else {
        (file.hbar, file.hbar_list)
    };
    if hbar.is_some() && hbar_list.is_some() {
        errors.push("give either hbar or hbar_list, not both".into());
    }
    for h in hbar.iter().chain(hbar_list.iter().flatten()) {
        if !(h.is_finite() && *h >= 0.0) {
            errors.push(format!("hbar must be finite and nonnegative, got {h}"));
        }
    }
    if hbar_list.as_ref().is_some_and(Vec::is_empty) {
        errors.push("hbar list is empty".into());
    }

    let mut range = |flag: &Option<String>, from_file: Option<String>, name: &str| {
        match flag.clone().or(from_file) {
            Some(t) => parse_range(&t).unwrap_or_else(|e| {
                errors.push(format!("--{name}: {e}"));
                DEFAULT_RANGE
            }),
            None => DEFAULT_RANGE,
        }
    };
    let (q_min, q_max, n_q) = range(&args.qrange, file.qrange, "qrange");
    let (p_min, p_max, n_p) = range(&args.prange, file.prange, "prange");
    let grid = GridSpec {
        q_min,
        q_max,
        n_q,
        p_min,
        p_max,
        n_p,
    };

    let eps = extra.eps.or(file.eps).unwrap_or(bgk_wigner::diagnostics::DEFAULT_REL_EPS);
    if !(eps.is_finite() && eps >= 0.0) {
        errors.push(format!("--eps must be finite and nonnegative, got {eps}"));
    }
    let mode = match extra.mode.clone().or(file.mode).as_deref() {
        None | Some("auto") => VerifyMode::Auto,
        Some("symbolic") => VerifyMode::Symbolic,
        Some("numeric") => VerifyMode::Numeric,
        Some(other) => {
            errors.push(format!("--mode must be auto, symbolic or numeric, got '{other}'"));
            VerifyMode::Auto
        }
    };
    let samples = extra.samples.or(file.samples).unwrap_or(DEFAULT_SAMPLES);
    if samples == 0 {
        errors.push("--samples must be positive".into());
    }

    match command {
        Command::Evaluate => {
            if hbar.is_none() {
                errors.push("evaluate needs a single --hbar".into());
            }
        }
        Command::Diagnose => {
            if hbar.is_none() && hbar_list.is_none() {
                errors.push("diagnose needs --hbar or --hbar-list".into());
            }
        }
        Command::Expand => {
            if series_file.is_some() {
                errors.push("expand builds a series; --series is not accepted".into());
            }
        }
        Command::Verify => {}
    }

    let source = match (&potential, &series_file) {
        (Some(_), Some(_)) => {
            errors.push("give either --potential or --series, not both".into());
            None
        }
        (Some(src), None) => match potentials::resolve(src) {
            Ok(v) => Some(SeriesSource::Build(v)),
            Err(e) => {
                errors.push(format!("--potential '{src}': {e}"));
                None
            }
        },
        (None, Some(path)) => Some(SeriesSource::File(path.clone())),
        (None, None) => {
            errors.push("--potential is required".into());
            None
        }
    };

    if !errors.is_empty() {
        return Err(format!("invalid configuration:\n  - {}", errors.join("\n  - ")));
    }
    Ok(RunConfig {
        command,
        potential,
        series_file,
        order,
        convention,
        seed,
        hbar,
        hbar_list,
        grid,
        out: args.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from(".")),
        normalize: extra.normalize.or(file.normalize).unwrap_or(true),
        eps,
        mode,
        j_max: extra.j_max.or(file.j_max),
        samples,
        rng_seed: extra.rng_seed.or(file.rng_seed).unwrap_or(DEFAULT_RNG_SEED),
        sequential: args.sequential || file.sequential.unwrap_or(false),
        source,
    })
}

/// Loads and checks a series file written by `expand`.
pub fn load_series(path: &Path) -> Result<WignerSeries, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read series {}: {e}", path.display()))?;
    WignerSeries::from_json(&text).map_err(|e| format!("series {}: {e}", path.display()))
}
