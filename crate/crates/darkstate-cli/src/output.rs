//! Serialization of solver results: CSV series/grids, JSON summaries, and
//! binary PPM heatmaps.
//!
//! Formats are pinned so outputs stay diffable across implementations:
//! trajectory CSV columns are `t,re_c1,im_c1,re_c2,im_c2,re_b,im_b,
//! concurrence`, sweep CSV columns are `g1,g2,ssc,n_surviving,oscillatory,
//! degenerate_fallback`, floats print with full round-trip precision, and
//! heatmaps are raw P6 with one pixel per cell.

use std::io::Write;
use std::path::Path;

use anyhow::Context;
use num_complex::Complex64;
use serde_json::json;

use darkstate::{InstabilityScan, PoleDecomposition, SteadyStateResult, SweepResult, Trajectory};

use crate::colormap;

pub fn write_trajectory_csv(traj: &Trajectory, w: &mut (impl Write + ?Sized)) -> std::io::Result<()> {
    writeln!(w, "t,re_c1,im_c1,re_c2,im_c2,re_b,im_b,concurrence")?;
    for (i, &t) in traj.times.iter().enumerate() {
        let s = &traj.states[i];
        writeln!(
            w,
            "{:.12},{},{},{},{},{},{},{}",
            t, s.c1.re, s.c1.im, s.c2.re, s.c2.im, s.b.re, s.b.im, traj.concurrences[i]
        )?;
    }
    Ok(())
}

pub fn write_sweep_csv(sweep: &SweepResult, w: &mut (impl Write + ?Sized)) -> std::io::Result<()> {
    writeln!(w, "g1,g2,ssc,n_surviving,oscillatory,degenerate_fallback")?;
    for cell in sweep.cells.iter() {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            cell.g1,
            cell.g2,
            cell.ssc,
            cell.n_surviving,
            cell.oscillatory as u8,
            cell.degenerate_fallback as u8
        )?;
    }
    Ok(())
}

pub fn write_scan_csv(scan: &InstabilityScan, w: &mut (impl Write + ?Sized)) -> std::io::Result<()> {
    writeln!(w, "eps,ssc")?;
    for p in scan.points.iter() {
        writeln!(w, "{},{}", p.eps, p.ssc)?;
    }
    Ok(())
}

/// Binary PPM heatmap: one pixel per cell, `g1` on x ascending left to
/// right, `g2` on y ascending bottom to top.
pub fn write_heatmap_ppm(sweep: &SweepResult, w: &mut (impl Write + ?Sized)) -> std::io::Result<()> {
    write!(w, "P6\n{} {}\n255\n", sweep.n1, sweep.n2)?;
    let mut row = Vec::with_capacity(sweep.n1 * 3);
    for i2 in (0..sweep.n2).rev() {
        row.clear();
        for i1 in 0..sweep.n1 {
            row.extend_from_slice(&colormap::ramp(sweep.cell(i1, i2).ssc));
        }
        w.write_all(&row)?;
    }
    Ok(())
}

pub fn emit_heatmap(sweep: &SweepResult, path: &Path) -> anyhow::Result<()> {
    let mut file = std::fs::File::create(path)
        .with_context(|| format!("creating `{}`", path.display()))?;
    write_heatmap_ppm(sweep, &mut file)
        .with_context(|| format!("writing `{}`", path.display()))?;
    Ok(())
}

/// Write CSV content to a file, or to stdout when no path is given.
pub fn emit_csv<F>(path: Option<&Path>, write: F) -> anyhow::Result<()>
where
    F: Fn(&mut dyn Write) -> std::io::Result<()>,
{
    match path {
        Some(path) => {
            let mut file = std::fs::File::create(path)
                .with_context(|| format!("creating `{}`", path.display()))?;
            write(&mut file).with_context(|| format!("writing `{}`", path.display()))?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock).context("writing to stdout")?;
        }
    }
    Ok(())
}

/// Pretty-print a JSON value to a file or stdout.
pub fn emit_json(path: Option<&Path>, value: &serde_json::Value) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(path) => std::fs::write(path, text + "\n")
            .with_context(|| format!("writing `{}`", path.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn complex_pair(z: Complex64) -> serde_json::Value {
    json!([z.re, z.im])
}

pub fn poles_json(dec: &PoleDecomposition) -> serde_json::Value {
    json!({
        "poles": dec.poles.iter().copied().map(complex_pair).collect::<Vec<_>>(),
        "residues1": dec.residues1.iter().copied().map(complex_pair).collect::<Vec<_>>(),
        "residues2": dec.residues2.iter().copied().map(complex_pair).collect::<Vec<_>>(),
        "degenerate": dec.degenerate,
    })
}

pub fn steady_json(r: &SteadyStateResult) -> serde_json::Value {
    json!({
        "ssc": r.ssc,
        "surviving_poles": r.surviving_poles.iter().copied().map(complex_pair).collect::<Vec<_>>(),
        "oscillatory": r.oscillatory,
        "ssc_min": r.ssc_min,
        "ssc_max": r.ssc_max,
        "method": match r.method {
            darkstate::SolutionMethod::Spectral => "spectral",
            darkstate::SolutionMethod::IntegratorFallback => "integrator",
        },
    })
}
