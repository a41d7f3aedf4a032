use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::info;
use minimax_core::convergence::{contraction_experiment, spectral_report, SpectralReport};
use minimax_core::record::RunRecord;
use minimax_core::toygan::{train_toy_gan_full, write_snapshot};
use minimax_core::vecfield::ParamPoint;
use minimax_core::{run_solver, FieldConvention, Verdict};
use rayon::prelude::*;

use crate::config::{load_config, ExperimentConfig, GameRunConfig};
use crate::sweep::SweepSpec;

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_DIVERGED: u8 = 2;

/// Command-line overrides applied on top of a configuration file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub convention: Option<FieldConvention>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        if let Some(seed) = self.seed {
            cfg.set_seed(seed);
        }
        if let Some(conv) = self.convention {
            cfg.set_convention(conv);
        }
        cfg.validate()
    }
}

/// Result of executing one experiment; GAN runs also return their final
/// parameters.
pub struct Execution {
    pub record: RunRecord,
    pub params: Option<ParamPoint>,
}

pub fn execute(cfg: &ExperimentConfig) -> Result<Execution> {
    match cfg {
        ExperimentConfig::Game(c) => {
            let oracle = c.game.build()?;
            let p0 = c.initial_point()?;
            let traj = run_solver(&p0, oracle.as_ref(), &c.solver, c.iters, &c.stop, c.seed)?;
            Ok(Execution { record: RunRecord::new(cfg, traj.rows, traj.verdict)?, params: None })
        }
        ExperimentConfig::Gan(c) => {
            let run = train_toy_gan_full(c)?;
            Ok(Execution { record: run.record, params: Some(run.params) })
        }
    }
}

pub fn csv_path(out: &Path) -> PathBuf {
    out.with_extension("csv")
}

/// Writes the record as JSON at `out` and its rows as CSV next to it.
pub fn write_record(out: &Path, record: &RunRecord) -> Result<()> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let json = serde_json::to_string_pretty(record)? + "\n";
    fs::write(out, json).with_context(|| format!("writing {}", out.display()))?;
    let csv = csv_path(out);
    fs::write(&csv, record.rows_csv()).with_context(|| format!("writing {}", csv.display()))?;
    Ok(())
}

fn exit_for(verdict: Verdict) -> u8 {
    match verdict {
        Verdict::Diverged => EXIT_DIVERGED,
        Verdict::Converged | Verdict::IterCap => EXIT_OK,
    }
}

pub fn cmd_run(config: &Path, out: &Path, overrides: Overrides) -> Result<u8> {
    let mut cfg = load_config(config)?;
    overrides.apply(&mut cfg)?;
    let exec = execute(&cfg)?;
    write_record(out, &exec.record)?;
    info!("{:?} after {} rows", exec.record.verdict, exec.record.rows.len());
    Ok(exit_for(exec.record.verdict))
}

/// Like `run`, restricted to GAN configs; also stores the final parameters
/// in a `.params.bin` snapshot beside the record.
pub fn cmd_gan(config: &Path, out: &Path, overrides: Overrides) -> Result<u8> {
    let mut cfg = load_config(config)?;
    overrides.apply(&mut cfg)?;
    let ExperimentConfig::Gan(gan) = &cfg else {
        bail!("`gan` needs a toy GAN config (with a `target` key)");
    };
    let exec = execute(&cfg)?;
    write_record(out, &exec.record)?;
    let params = exec.params.expect("GAN runs return parameters");
    let steps = exec.record.rows.last().map_or(0, |r| r.iter);
    let snap = out.with_extension("params.bin");
    let file = fs::File::create(&snap).with_context(|| format!("creating {}", snap.display()))?;
    write_snapshot(std::io::BufWriter::new(file), gan, steps, &params)?;
    if let Some(ed) = exec.record.final_metric() {
        info!("final energy distance {ed}");
    }
    Ok(exit_for(exec.record.verdict))
}

pub fn analyze(cfg: &GameRunConfig) -> Result<SpectralReport> {
    let oracle = cfg.game.build()?;
    let Some(p_bar) = oracle.nash_points().into_iter().next() else {
        bail!("game has no known stationary point to analyse");
    };
    let conv = cfg.solver.convention;
    let mut report = spectral_report(oracle.as_ref(), &p_bar, &cfg.solver.gn, conv)?;
    if cfg.analyze.measure {
        let p0 = cfg.initial_point()?;
        report.measurement =
            Some(contraction_experiment(oracle.as_ref(), &cfg.solver.gn, conv, &p0, cfg.analyze.iters)?);
    }
    Ok(report)
}

pub fn cmd_analyze(config: &Path, out: &Path, overrides: Overrides) -> Result<u8> {
    let mut cfg = load_config(config)?;
    overrides.apply(&mut cfg)?;
    let ExperimentConfig::Game(game) = &cfg else {
        bail!("`analyze` needs a game config (with a `game` key)");
    };
    let report = analyze(game)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(out, serde_json::to_string_pretty(&report)? + "\n")
        .with_context(|| format!("writing {}", out.display()))?;
    Ok(EXIT_OK)
}

struct SweepResult {
    verdict: Option<Verdict>,
    rows: usize,
    final_field_norm: Option<f64>,
    final_metric: Option<f64>,
    error: Option<String>,
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| serde_json::to_string(&x).unwrap_or_else(|_| x.to_string())).unwrap_or_default()
}

/// Runs every grid point and writes `run_NNNN.json` (+ CSV) per point and
/// `index.csv` in grid order. Returns exit 1 if any point failed to run.
pub fn cmd_sweep(spec_path: &Path, out_dir: &Path, workers: Option<usize>) -> Result<u8> {
    let text = fs::read_to_string(spec_path).with_context(|| format!("reading {}", spec_path.display()))?;
    let spec = SweepSpec::parse(&text)?;
    let size = spec.size()?;
    eprintln!("sweep: {size} runs");
    let runs = spec.expand()?;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        pool = pool.num_threads(n);
    }
    let pool = pool.build()?;
    let results: Vec<SweepResult> = pool.install(|| {
        runs.par_iter()
            .map(|run| {
                let outcome = run.config.as_ref().map_err(|e| anyhow::anyhow!("{e}")).and_then(|cfg| {
                    let exec = execute(cfg)?;
                    write_record(&out_dir.join(format!("run_{:04}.json", run.index)), &exec.record)?;
                    Ok(exec.record)
                });
                match outcome {
                    Ok(rec) => SweepResult {
                        verdict: Some(rec.verdict),
                        rows: rec.rows.len(),
                        final_field_norm: rec.final_row().map(|r| r.field_norm),
                        final_metric: rec.final_metric(),
                        error: None,
                    },
                    Err(e) => SweepResult {
                        verdict: None,
                        rows: 0,
                        final_field_norm: None,
                        final_metric: None,
                        error: Some(format!("{e:#}")),
                    },
                }
            })
            .collect()
    });

    let mut index = String::from("run");
    for axis in &spec.grid {
        index.push(',');
        index.push_str(&csv_escape(&axis.param));
    }
    index.push_str(",seed,verdict,rows,final_field_norm,final_metric,error\n");
    let mut failed = 0;
    for (run, res) in runs.iter().zip(&results) {
        let mut cols = vec![run.index.to_string()];
        cols.extend(run.params.iter().map(|(_, v)| fmt_opt(Some(*v))));
        let seed = run.config.as_ref().map(|c| c.seed().to_string()).unwrap_or_default();
        cols.push(seed);
        cols.push(res.verdict.map(|v| format!("{v:?}")).unwrap_or_default());
        cols.push(res.rows.to_string());
        cols.push(fmt_opt(res.final_field_norm));
        cols.push(fmt_opt(res.final_metric));
        cols.push(csv_escape(res.error.as_deref().unwrap_or("")));
        if res.error.is_some() {
            failed += 1;
        }
        index.push_str(&cols.join(","));
        index.push('\n');
    }
    let index_path = out_dir.join("index.csv");
    fs::write(&index_path, index).with_context(|| format!("writing {}", index_path.display()))?;
    if failed > 0 {
        eprintln!("sweep: {failed} of {size} runs failed; see index.csv");
        return Ok(EXIT_FAILURE);
    }
    Ok(EXIT_OK)
}
