//! Run orchestration and file output.
//!
//! Every CSV written here starts with one `#` line carrying the config
//! hash and seed. Nothing else in a file depends on the clock unless
//! timings are enabled.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::error::VoiError;
use crate::mm::{mm_evsi_im, mm_evsi_im_by_n, LogisticFit, MomentMatchingRun};
use crate::nmc::{nmc_evsi, nmc_evsi_im, nmc_summaries, EvsiEstimate, Method};
use crate::psa::{sample_prior, PsaSample};
use crate::rng::{child_seed, Stream};
use crate::studies::StudyDesign;

/// Points on the emitted trend curve.
pub const TREND_POINTS: usize = 512;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("estimation failed for study {study}: {source}")]
    Estimation { study: usize, source: VoiError },
    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
}

impl RunError {
    /// Process exit code: 1 for configuration or output problems, 2 for
    /// estimator failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Estimation { .. } => 2,
            RunError::Config(_) | RunError::Output { .. } => 1,
        }
    }
}

/// One (study, method) row of the results table.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    /// 1-based position of the study in the config.
    pub study: usize,
    pub design: StudyDesign,
    pub method: Method,
    pub evsi: EvsiEstimate,
    pub evsi_im: EvsiEstimate,
    pub seconds: f64,
}

/// Sample-size estimates for one study.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSizeRow {
    pub study: usize,
    pub n: usize,
    pub evsi: f64,
    pub evsi_im: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
    pub by_n: Vec<SampleSizeRow>,
    /// Moment matching fits kept for the trend and density files.
    pub trends: Vec<(usize, LogisticFit, Vec<f64>)>,
}

impl ResultTable {
    pub fn get(&self, study: usize, method: Method) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.study == study && r.method == method)
    }
}

fn estimation(study: usize) -> impl Fn(VoiError) -> RunError {
    move |source| RunError::Estimation { study, source }
}

fn shared_psa(config: &RunConfig) -> Result<PsaSample, RunError> {
    let model = config.decision_model();
    sample_prior(&config.model.priors, &model, config.psa_size, child_seed(config.seed, Stream::Prior, 0))
        .map_err(estimation(0))
}

fn run_mm(config: &RunConfig, psa: &PsaSample, k: usize, design: &StudyDesign) -> Result<MomentMatchingRun, RunError> {
    mm_evsi_im(
        psa,
        design,
        &config.model.priors,
        &config.decision_model(),
        &config.market_share,
        &config.current_shares,
        &config.mm_settings(),
        child_seed(config.seed, Stream::QuantileData, k as u64),
    )
    .map_err(estimation(k))
}

/// Run the configured estimators without writing anything.
pub fn execute(config: &RunConfig) -> Result<ResultTable, RunError> {
    config.validate()?;
    let model = config.decision_model();
    let psa = shared_psa(config)?;
    let mut table = ResultTable::default();
    for (i, design) in config.studies.iter().enumerate() {
        let k = i + 1;
        if config.method.runs_nmc() {
            let nested = nmc_summaries(
                design,
                &config.model.priors,
                &model,
                config.s,
                config.r,
                child_seed(config.seed, Stream::Outer, k as u64),
            )
            .map_err(estimation(k))?;
            let evsi = nmc_evsi(&nested).map_err(estimation(k))?;
            let evsi_im = nmc_evsi_im(&nested, &config.market_share, &config.current_shares).map_err(estimation(k))?;
            let seconds = evsi_im.wall_time.max(evsi.wall_time);
            table.rows.push(ResultRow {
                study: k,
                design: *design,
                method: Method::NestedMonteCarlo,
                evsi,
                evsi_im,
                seconds,
            });
        }
        if config.method.runs_mm() {
            let mm = run_mm(config, &psa, k, design)?;
            table.rows.push(ResultRow {
                study: k,
                design: *design,
                method: Method::MomentMatching,
                seconds: mm.evsi_im.wall_time,
                evsi: mm.evsi,
                evsi_im: mm.evsi_im,
            });
            table.trends.push((k, mm.logistic, mm.inb));
            if let Some(grid) = &config.n_grid {
                let by_n = mm_evsi_im_by_n(
                    &psa,
                    design,
                    &config.model.priors,
                    &model,
                    &config.market_share,
                    &config.current_shares,
                    &config.mm_settings(),
                    config.n_range_for(design),
                    grid,
                    child_seed(config.seed, Stream::SampleSize, k as u64),
                )
                .map_err(estimation(k))?;
                table.by_n.extend(by_n.estimates.into_iter().map(|e| SampleSizeRow {
                    study: k,
                    n: e.n,
                    evsi: e.evsi.value,
                    evsi_im: e.evsi_im.value,
                    std_error: e.evsi_im.std_error,
                }));
            }
        }
    }
    Ok(table)
}

/// Run the configured estimators and write all outputs to
/// `config.output_dir`.
pub fn run(config: &RunConfig) -> Result<ResultTable, RunError> {
    let table = execute(config)?;
    write_outputs(config, &table)?;
    Ok(table)
}

/// Fit moment matching for one study and write its trend and density files.
pub fn trend(config: &RunConfig, study: usize) -> Result<(PathBuf, PathBuf), RunError> {
    config.validate()?;
    let design = config
        .studies
        .get(study.wrapping_sub(1))
        .ok_or_else(|| ConfigError::Field { field: "study".into(), reason: format!("no study {study} in config") })?;
    let psa = shared_psa(config)?;
    let mm = run_mm(config, &psa, study, design)?;
    let dir = output_dir(config)?;
    let header = header(config);
    let curve = dir.join(format!("trend_study{study}.csv"));
    let density = dir.join(format!("inb_density_study{study}.csv"));
    emit_trend_curve(&mm.logistic, &mm.inb, &curve, &header)?;
    emit_inb_density(&mm.inb, &density, &header)?;
    Ok((curve, density))
}

fn output_dir(config: &RunConfig) -> Result<&Path, RunError> {
    let dir = config.output_dir.as_path();
    fs::create_dir_all(dir).map_err(|source| RunError::Output { path: dir.into(), source })?;
    Ok(dir)
}

/// Provenance line written at the top of every output file.
pub fn header(config: &RunConfig) -> String {
    format!("# config_sha256={} seed={}", config.hash(), config.seed)
}

fn write_file(path: &Path, header: &str, body: &str) -> Result<(), RunError> {
    let err = |source| RunError::Output { path: path.into(), source };
    let mut f = fs::File::create(path).map_err(err)?;
    writeln!(f, "{header}").map_err(err)?;
    f.write_all(body.as_bytes()).map_err(err)
}

/// Shortest representation that parses back to the same value.
fn num(x: f64) -> String {
    format!("{x}")
}

pub fn write_outputs(config: &RunConfig, table: &ResultTable) -> Result<(), RunError> {
    let dir = output_dir(config)?;
    let header = header(config);
    let mut body = String::from("study,method,evsi,evsi_im,std_error,seconds\n");
    for r in &table.rows {
        let seconds = if config.timings { num(r.seconds) } else { "NA".into() };
        body.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.study,
            r.method.label(),
            num(r.evsi.value),
            num(r.evsi_im.value),
            num(r.evsi_im.std_error),
            seconds
        ));
    }
    write_file(&dir.join("results.csv"), &header, &body)?;
    for (k, fit, inb) in &table.trends {
        emit_trend_curve(fit, inb, &dir.join(format!("trend_study{k}.csv")), &header)?;
        emit_inb_density(inb, &dir.join(format!("inb_density_study{k}.csv")), &header)?;
    }
    if !table.by_n.is_empty() {
        let mut body = String::from("study,n,evsi,evsi_im,std_error\n");
        for r in &table.by_n {
            body.push_str(&format!("{},{},{},{},{}\n", r.study, r.n, num(r.evsi), num(r.evsi_im), num(r.std_error)));
        }
        write_file(&dir.join("sample_size.csv"), &header, &body)?;
    }
    Ok(())
}

/// Evenly spaced grid over the range of `inb` with the fitted probability.
pub fn trend_curve(fit: &LogisticFit, inb: &[f64]) -> Vec<(f64, f64)> {
    let lo = inb.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = inb.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if lo.is_finite() && hi > lo { (lo, hi) } else { (fit.center - fit.scale, fit.center + fit.scale) };
    (0..TREND_POINTS)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / (TREND_POINTS - 1) as f64;
            (x, fit.predict(x))
        })
        .collect()
}

pub fn emit_trend_curve(fit: &LogisticFit, inb: &[f64], path: &Path, header: &str) -> Result<(), RunError> {
    let mut body = String::from("inb,p_novel\n");
    for (x, p) in trend_curve(fit, inb) {
        body.push_str(&format!("{},{}\n", num(x), num(p)));
    }
    write_file(path, header, &body)
}

pub fn emit_inb_density(inb: &[f64], path: &Path, header: &str) -> Result<(), RunError> {
    let mut body = String::from("inb\n");
    for x in inb {
        body.push_str(&num(*x));
        body.push('\n');
    }
    write_file(path, header, &body)
}
