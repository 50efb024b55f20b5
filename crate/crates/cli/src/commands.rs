use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use bgk_wigner::diagnostics::{diagnose, q_sweep, write_q_sweep_csv};
use bgk_wigner::eval::eval_field;
use bgk_wigner::seed::{SeedDistribution, DEFAULT_CACHE_ORDER};
use bgk_wigner::series::{build_series, BuildOptions, WignerSeries};
use bgk_wigner::verify::{residual_numeric, residual_symbolic, NumericOptions, VerifyError};
use serde::Serialize;

use crate::config::{
    load_series, RunConfig, SeriesSource, VerifyMode, DEFAULT_J_MAX, DEFAULT_RESIDUAL_HBARS,
};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Compute(String),
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Compute(_) => 2,
            CliError::Verification(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Compute(m) | CliError::Verification(m) => m,
        }
    }
}

fn compute(e: impl std::fmt::Display) -> CliError {
    CliError::Compute(e.to_string())
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Compute(format!("{}: {e}", path.display()))
}

/// JSON output wrapper carrying the configuration that produced it.
#[derive(Serialize)]
struct WithConfig<'a, T: Serialize> {
    config: &'a RunConfig,
    #[serde(flatten)]
    body: T,
}

fn write_file(path: &Path, write: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    let mut w = BufWriter::new(file);
    write(&mut w).and_then(|_| w.flush()).map_err(|e| io_error(path, e))
}

fn write_json<T: Serialize>(path: &Path, cfg: &RunConfig, body: T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(&WithConfig { config: cfg, body }).map_err(compute)?;
    write_file(path, |w| writeln!(w, "{text}"))
}

fn prepare_out(cfg: &RunConfig) -> Result<(), CliError> {
    fs::create_dir_all(&cfg.out).map_err(|e| io_error(&cfg.out, e))
}

/// Builds or loads the series; a loaded file fixes order and convention.
fn obtain_series(cfg: &mut RunConfig) -> Result<WignerSeries, CliError> {
    match cfg.series_source().clone() {
        SeriesSource::Build(v) => {
            let opts = BuildOptions {
                execution: cfg.execution(),
                ..BuildOptions::with_convention(cfg.convention)
            };
            build_series(&v, cfg.order, &opts).map_err(compute)
        }
        SeriesSource::File(path) => {
            let s = load_series(&path).map_err(CliError::Config)?;
            cfg.order = s.order();
            cfg.convention = s.convention;
            Ok(s)
        }
    }
}

fn build_seed(cfg: &RunConfig, needed: usize) -> Result<SeedDistribution, CliError> {
    cfg.seed
        .build(needed.max(DEFAULT_CACHE_ORDER))
        .map_err(|e| CliError::Config(format!("--seed: {e}")))
}

#[derive(Serialize)]
struct OrderSummary {
    order: usize,
    cells: usize,
    monomials: usize,
}

pub fn expand(mut cfg: RunConfig) -> Result<(), CliError> {
    let series = obtain_series(&mut cfg)?;
    prepare_out(&cfg)?;
    let json_path = cfg.out.join("series.json");
    let text = series.to_json();
    write_file(&json_path, |w| writeln!(w, "{text}"))?;
    let listing = series.listing();
    write_file(&cfg.out.join("series.txt"), |w| w.write_all(listing.as_bytes()))?;
    let summary: Vec<OrderSummary> = series
        .terms
        .iter()
        .enumerate()
        .map(|(l, t)| OrderSummary {
            order: l,
            cells: t.len(),
            monomials: t.monomial_count(),
        })
        .collect();
    write_json(&cfg.out.join("run.json"), &cfg, serde_json::json!({ "terms": summary }))?;
    print!("{listing}");
    eprintln!("wrote {}", json_path.display());
    Ok(())
}

pub fn evaluate(mut cfg: RunConfig) -> Result<(), CliError> {
    let series = obtain_series(&mut cfg)?;
    let seed = build_seed(&cfg, series.max_j() as usize)?;
    let hbar = cfg.hbar.expect("validated");
    let field = eval_field(&series, &seed, hbar, &cfg.grid, cfg.normalize, cfg.execution()).map_err(compute)?;
    prepare_out(&cfg)?;
    let csv = cfg.out.join("field.csv");
    write_file(&csv, |w| field.write_csv(w))?;
    write_json(&cfg.out.join("field.json"), &cfg, field.sidecar())?;
    eprintln!(
        "min {:e}  max {:e}  norm constant {:e}",
        field.min(),
        field.max(),
        field.norm_constant
    );
    println!("wrote {}", csv.display());
    Ok(())
}

pub fn diagnose_cmd(mut cfg: RunConfig) -> Result<(), CliError> {
    let series = obtain_series(&mut cfg)?;
    let seed = build_seed(&cfg, series.max_j() as usize)?;
    prepare_out(&cfg)?;
    if let Some(hbars) = cfg.hbar_list.clone() {
        let sweep = q_sweep(&series, &seed, &hbars, &cfg.grid, cfg.execution()).map_err(compute)?;
        write_file(&cfg.out.join("q_sweep.csv"), |w| write_q_sweep_csv(w, &sweep))?;
        write_json(&cfg.out.join("q_sweep.json"), &cfg, serde_json::json!({ "sweep": sweep }))?;
        println!("{:>8}  {:>14}  verdict", "hbar", "2*pi*hbar*Q");
        for p in &sweep {
            println!("{:>8}  {:>14.6}  {}", p.hbar, p.bound_2pi_hbar_q, p.verdict);
        }
        return Ok(());
    }
    let hbar = cfg.hbar.expect("validated");
    let field = eval_field(&series, &seed, hbar, &cfg.grid, true, cfg.execution()).map_err(compute)?;
    let report = diagnose(&field, cfg.eps).map_err(compute)?;
    write_file(&cfg.out.join("marginal_q.csv"), |w| report.marginals.write_q_csv(w))?;
    write_file(&cfg.out.join("marginal_p.csv"), |w| report.marginals.write_p_csv(w))?;
    write_json(&cfg.out.join("diagnostics.json"), &cfg, &report)?;
    println!("hbar          {hbar}");
    println!("Q             {:.6}", report.q);
    println!("2*pi*hbar*Q   {:.6}", report.bound_2pi_hbar_q);
    println!("uncertainty   {}", report.uncertainty);
    println!("min f         {:e} at ({}, {})", report.min_f, report.argmin_f[0], report.argmin_f[1]);
    println!("min P_q       {:e}", report.min_pq);
    println!("min P_p       {:e}", report.min_pp);
    println!("negative grid fraction {:.4}", report.field_negativity.fraction_below);
    Ok(())
}

pub fn verify(mut cfg: RunConfig) -> Result<(), CliError> {
    let series = obtain_series(&mut cfg)?;
    let symbolic = match cfg.mode {
        VerifyMode::Auto => series.potential.is_polynomial(),
        VerifyMode::Symbolic => true,
        VerifyMode::Numeric => false,
    };
    let report = if symbolic {
        residual_symbolic(&series, cfg.execution()).map_err(|e| match e {
            VerifyError::TrigPotential => CliError::Config(format!("--mode symbolic: {e}")),
            other => compute(other),
        })?
    } else {
        let j_max = cfg.j_max.unwrap_or(DEFAULT_J_MAX.max(series.order() + 1));
        cfg.j_max = Some(j_max);
        let seed = build_seed(&cfg, series.max_j() as usize + 2 * j_max + 2)?;
        let opts = NumericOptions {
            hbars: cfg.hbar_list.clone().unwrap_or(DEFAULT_RESIDUAL_HBARS.to_vec()),
            samples: cfg.samples,
            j_max,
            rng_seed: cfg.rng_seed,
            execution: cfg.execution(),
            ..Default::default()
        };
        residual_numeric(&series, &seed, &opts).map_err(|e| match e {
            VerifyError::Invalid(m) => CliError::Config(m),
            other => compute(other),
        })?
    };
    prepare_out(&cfg)?;
    write_json(&cfg.out.join("residual.json"), &cfg, &report)?;
    print!("{}", report.summary());
    if report.passed {
        Ok(())
    } else {
        Err(CliError::Verification(format!(
            "residual does not reach claimed order {}",
            report.claimed_order
        )))
    }
}
