//! CSV writers.
//!
//! Floats use Rust's shortest round-trip formatting, so a value read back
//! parses to the same `f64`.

use std::io::Write;

use anyhow::Result;
use coherence_core::{CStarSearch, CStarVerdict, ScalingResult, Trajectory, VarianceReport};

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().flexible(true).from_writer(out)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |x| x.to_string())
}

/// `n,lambda,s_n` rows, then `V_N,<v>` and `bound,<v|none>`.
pub fn write_variance<W: Write>(out: W, report: &VarianceReport) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["n", "lambda", "s_n"])?;
    for m in &report.per_mode {
        w.write_record([m.mode.to_string(), m.lambda.to_string(), m.s_n.to_string()])?;
    }
    w.write_record(["V_N".to_string(), report.v_n.to_string()])?;
    w.write_record(["bound".to_string(), opt(report.bound)])?;
    w.flush()?;
    Ok(())
}

/// `c,gridscan_vn` rows, then the `c_star,…,v_star,…,verdict,…` summary.
pub fn write_tune<W: Write>(out: W, search: &CStarSearch, verdict: CStarVerdict) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["c", "gridscan_vn"])?;
    for (c, v) in &search.grid {
        w.write_record([c.to_string(), v.to_string()])?;
    }
    w.write_record([
        "c_star".to_string(),
        search.c_star.to_string(),
        "v_star".to_string(),
        search.v_star.to_string(),
        "verdict".to_string(),
        verdict.name().to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

/// `t,x_1..x_N`, plus `v_*` and (third-order controllers) `z_*` blocks
/// when `all_blocks` is set. Trajectories recorded without states fall
/// back to the centred output `y_*`.
pub fn write_trajectory<W: Write>(out: W, traj: &Trajectory, all_blocks: bool) -> Result<()> {
    let n = traj.node_count;
    let blocks = if all_blocks && traj.has_states() { traj.state_dim / n } else { 1 };
    let names = if traj.has_states() { ["x", "v", "z"] } else { ["y", "", ""] };
    let mut w = writer(out);
    let mut header = vec!["t".to_string()];
    for name in &names[..blocks] {
        header.extend((1..=n).map(|i| format!("{name}_{i}")));
    }
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(1 + blocks * n);
    for r in 0..traj.len() {
        row.clear();
        row.push(traj.times[r].to_string());
        let values = if traj.has_states() { &traj.state(r)[..blocks * n] } else { traj.output_row(r) };
        row.extend(values.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `N,V_N,bounded,exponent_window_flag`. Unbounded sizes print `V_N` as
/// `none` with `bounded = false`; the flag marks sizes inside the fit window.
pub fn write_scaling<W: Write>(out: W, result: &ScalingResult) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["N", "V_N", "bounded", "exponent_window_flag"])?;
    for p in &result.points {
        w.write_record([
            p.n.to_string(),
            opt(p.v_n),
            p.v_n.is_some().to_string(),
            u8::from(result.in_window(p.n)).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
