use std::io::Write;

use blockwht::quant::{run_experiment, ExperimentReport, Granularity, OutlierSpec, QuantTarget};

use crate::{config_err, resolve_workers, write_header};

pub const QUANT_COLUMNS: &str =
    "kind,trial,mse_plain,mse_rotated,win,max_abs_plain,max_abs_rotated";

#[derive(Debug, Clone, Copy)]
pub struct QuantConfig {
    pub spec: OutlierSpec,
    pub target: QuantTarget,
    pub granularity: Granularity,
    pub trials: usize,
    pub workers: Option<usize>,
}

impl Default for QuantConfig {
    fn default() -> Self {
        QuantConfig {
            spec: OutlierSpec::default(),
            target: QuantTarget::Int4,
            granularity: Granularity::PerTensor,
            trials: 100,
            workers: None,
        }
    }
}

pub fn run_quant(cfg: &QuantConfig) -> anyhow::Result<ExperimentReport> {
    if cfg.trials == 0 {
        return config_err("trials must be at least 1");
    }
    let workers = resolve_workers(cfg.workers);
    let report = blockwht::par::with_workers(workers, || {
        run_experiment(&cfg.spec, cfg.target, cfg.granularity, cfg.trials)
    })?;
    Ok(report)
}

/// One row per trial (`win` is 0 or 1) followed by an aggregate row whose
/// `trial` column holds the trial count and `win` the win rate.
pub fn write_quant_csv(
    cfg: &QuantConfig,
    report: &ExperimentReport,
    out: &mut dyn Write,
) -> std::io::Result<()> {
    write_header(out, "quant", cfg.spec.seed, resolve_workers(cfg.workers))?;
    writeln!(
        out,
        "# target={} granularity={} rows={} cols={} base_std={} outlier_rate={} outlier_scale={}",
        cfg.target,
        cfg.granularity,
        cfg.spec.rows,
        cfg.spec.cols,
        cfg.spec.base_std,
        cfg.spec.outlier_rate,
        cfg.spec.outlier_scale
    )?;
    writeln!(out, "{QUANT_COLUMNS}")?;
    for t in &report.trials {
        writeln!(
            out,
            "trial,{},{:e},{:e},{},{:e},{:e}",
            t.trial,
            t.mse_plain,
            t.mse_rotated,
            u8::from(t.rotation_wins()),
            t.max_abs_plain,
            t.max_abs_rotated
        )?;
    }
    let a = &report.aggregate;
    writeln!(
        out,
        "aggregate,{},{:e},{:e},{},{:e},{:e}",
        report.trials.len(),
        a.mse_plain,
        a.mse_rotated,
        a.win_rate,
        a.max_abs_plain,
        a.max_abs_rotated
    )
}

pub fn cmd_quant(cfg: &QuantConfig, out: &mut dyn Write) -> anyhow::Result<ExperimentReport> {
    let report = run_quant(cfg)?;
    write_quant_csv(cfg, &report, out)?;
    Ok(report)
}
