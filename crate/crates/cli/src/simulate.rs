use std::io::Write;

use blockwht::schedule::{baseline_cost, make_schedule, simulate, CostReport};
use blockwht::{hadamard_transform, ElementType, Matrix, TransformOptions, TransformSize};

use crate::{config_err, write_header};

pub const SIMULATE_COLUMNS: &str = "size,wpb,nc,tile_matmul_count,mma_count,mac_count,barrier_count,smem_exchange_count,baseline_scalar_ops,baseline_barriers";

#[derive(Debug, Clone, Copy)]
pub struct SimulateConfig {
    pub size: usize,
    pub warps_per_block: Option<usize>,
    pub num_chunks: Option<usize>,
    pub rows: usize,
    pub seed: u64,
    pub dtype: ElementType,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            size: 4096,
            warps_per_block: None,
            num_chunks: None,
            rows: 1,
            seed: 0,
            dtype: ElementType::F32,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulateOutcome {
    pub warps_per_block: usize,
    pub num_chunks: usize,
    pub report: CostReport,
    pub baseline: CostReport,
    pub equivalent: bool,
}

/// Fills in whichever of `wpb`/`nc` is missing; both default to 1 up to
/// size 256 and to at most 4 warps above.
fn resolve_config(size: TransformSize, wpb: Option<usize>, nc: Option<usize>) -> (usize, usize) {
    let q = (size.d() / 256).max(1);
    match (wpb, nc) {
        (Some(w), Some(c)) => (w, c),
        (Some(w), None) => (
            w,
            if w > 0 && q.is_multiple_of(w) {
                q / w
            } else {
                1
            },
        ),
        (None, Some(c)) => (
            if c > 0 && q.is_multiple_of(c) {
                q / c
            } else {
                1
            },
            c,
        ),
        (None, None) => {
            let w = q.min(4);
            (w, q / w)
        }
    }
}

pub fn run_simulate(cfg: &SimulateConfig) -> anyhow::Result<SimulateOutcome> {
    if cfg.rows == 0 {
        return config_err("simulate needs at least one row");
    }
    let size = TransformSize::new(cfg.size)?;
    let (wpb, nc) = resolve_config(size, cfg.warps_per_block, cfg.num_chunks);
    let plan = make_schedule(size, wpb, nc)?;
    let x = Matrix::random_normal(cfg.rows, size.d(), cfg.dtype, cfg.seed);
    let (y, report) = simulate(&x, &plan)?;
    let expect = hadamard_transform(x, size, &TransformOptions::default())?;
    Ok(SimulateOutcome {
        warps_per_block: wpb,
        num_chunks: nc,
        report,
        baseline: baseline_cost(size, cfg.rows),
        equivalent: y.bitwise_eq(&expect),
    })
}

pub fn write_simulate_csv(
    cfg: &SimulateConfig,
    o: &SimulateOutcome,
    out: &mut dyn Write,
) -> std::io::Result<()> {
    write_header(out, "simulate", cfg.seed, 1)?;
    writeln!(out, "{SIMULATE_COLUMNS}")?;
    let r = &o.report;
    writeln!(
        out,
        "{},{},{},{},{},{},{},{},{},{}",
        cfg.size,
        o.warps_per_block,
        o.num_chunks,
        r.tile_matmul_count,
        r.mma_count,
        r.mac_count,
        r.barrier_count,
        r.smem_exchange_count,
        o.baseline.scalar_op_count,
        o.baseline.barrier_count
    )?;
    writeln!(
        out,
        "# baseline_barriers is reconstructed from the butterfly kernel layout, not measured"
    )?;
    writeln!(
        out,
        "equivalence,{}",
        if o.equivalent { "PASS" } else { "FAIL" }
    )
}

/// Returns whether the simulated schedule matched the engine bitwise.
pub fn cmd_simulate(cfg: &SimulateConfig, out: &mut dyn Write) -> anyhow::Result<bool> {
    let outcome = run_simulate(cfg)?;
    write_simulate_csv(cfg, &outcome, out)?;
    Ok(outcome.equivalent)
}
