//! Dispatch a resolved run configuration to the solver library and emit the
//! results.

use anyhow::{bail, Context};

use darkstate::{
    find_poles, instability_scan, integrate, run_detuning_comparison, run_sweep, solve_volterra,
    spectral, steady_concurrence, GridRange, ScanMode, SweepSpec, SystemParams, Tolerances,
};

use crate::config::{Backend, CommandKind, RunConfig, ScanModeConfig};
use crate::output;

/// Default worker count: the DARKSTATE_WORKERS environment variable, then
/// every available core.
fn resolve_workers(config: &RunConfig) -> anyhow::Result<usize> {
    if let Some(w) = config.workers {
        if w == 0 {
            bail!("workers must be at least 1");
        }
        return Ok(w);
    }
    if let Ok(text) = std::env::var("DARKSTATE_WORKERS") {
        let w: usize = text
            .parse()
            .with_context(|| format!("DARKSTATE_WORKERS=`{text}` is not a worker count"))?;
        if w == 0 {
            bail!("DARKSTATE_WORKERS must be at least 1");
        }
        return Ok(w);
    }
    Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Physical system parameters from gamma-unit inputs.
fn physical_params(config: &RunConfig) -> anyhow::Result<SystemParams> {
    let p = &config.params;
    SystemParams::new(
        p.g1 * p.gamma,
        p.g2 * p.gamma,
        p.j * p.gamma,
        p.gamma,
        p.delta_c * p.gamma,
    )
    .map_err(Into::into)
}

pub fn run(config: &RunConfig) -> anyhow::Result<()> {
    match config.command {
        CommandKind::Poles => run_poles(config),
        CommandKind::Ssc => run_ssc(config),
        CommandKind::Trajectory => run_trajectory(config),
        CommandKind::Sweep => run_sweep_cmd(config),
        CommandKind::Scan => run_scan(config),
    }
}

fn run_poles(config: &RunConfig) -> anyhow::Result<()> {
    let params = physical_params(config)?;
    let init = config.init.to_state()?;
    let dec = find_poles(&spectral::assemble(&params, &init), &Tolerances::default())?;
    output::emit_json(config.output.json.as_deref(), &output::poles_json(&dec))
}

fn run_ssc(config: &RunConfig) -> anyhow::Result<()> {
    let params = physical_params(config)?;
    if params.g1 == 0.0 && params.g2 == 0.0 {
        eprintln!(
            "warning: both couplings are zero; the system is decoupled from the reservoir \
             and the concurrence never settles"
        );
    }
    let init = config.init.to_state()?;
    let r = steady_concurrence(&params, &init, &Tolerances::default())?;
    output::emit_json(config.output.json.as_deref(), &output::steady_json(&r))
}

fn run_trajectory(config: &RunConfig) -> anyhow::Result<()> {
    let params = physical_params(config)?;
    let init = config.init.to_state()?;
    let block = config.trajectory.as_ref().expect("validated");
    let gamma = params.gamma;
    let (t_end, dt_out) = (block.t_end / gamma, block.dt_out / gamma);
    let traj = match block.backend {
        Backend::Ode => integrate(&darkstate::build_generator(&params), &init, t_end, dt_out)?,
        Backend::Spectral => {
            spectral::trajectory(&params, &init, &Tolerances::default(), t_end, dt_out)?
        }
        Backend::Volterra => {
            solve_volterra(&params, &init, t_end, block.h / gamma)?.downsample(dt_out)
        }
    };
    output::emit_csv(config.output.csv.as_deref(), |w| {
        output::write_trajectory_csv(&traj, w)
    })
}

fn run_sweep_cmd(config: &RunConfig) -> anyhow::Result<()> {
    let block = config.sweep.as_ref().expect("validated");
    let gamma = config.params.gamma;
    let workers = resolve_workers(config)?;
    let spec = SweepSpec {
        g1_range: GridRange::new(
            block.g1_grid.min * gamma,
            block.g1_grid.max * gamma,
            block.g1_grid.n,
        )?,
        g2_range: GridRange::new(
            block.g2_grid.min * gamma,
            block.g2_grid.max * gamma,
            block.g2_grid.n,
        )?,
        j: config.params.j * gamma,
        gamma,
        delta_c: config.params.delta_c * gamma,
        init: config.init.to_state()?,
        tol: Tolerances::default(),
    };

    if block.detunings.len() > 1 {
        let csv_base = config
            .output
            .csv
            .as_ref()
            .ok_or_else(|| anyhow::anyhow!("--out is required with multiple detunings"))?;
        let detunings: Vec<f64> = block.detunings.iter().map(|d| d * gamma).collect();
        let results = run_detuning_comparison(&spec, &detunings, workers)?;
        for (idx, result) in results.iter().enumerate() {
            let csv_path = suffixed(csv_base, idx);
            output::emit_csv(Some(&csv_path), |w| output::write_sweep_csv(result, w))?;
            if let Some(ppm_base) = &config.output.ppm {
                output::emit_heatmap(result, &suffixed(ppm_base, idx))?;
            }
        }
        return Ok(());
    }

    let mut spec = spec;
    if let Some(&dc) = block.detunings.first() {
        spec.delta_c = dc * gamma;
    }
    let result = run_sweep(&spec, workers)?;
    output::emit_csv(config.output.csv.as_deref(), |w| {
        output::write_sweep_csv(&result, w)
    })?;
    if let Some(ppm) = &config.output.ppm {
        output::emit_heatmap(&result, ppm)?;
    }
    Ok(())
}

fn suffixed(path: &std::path::Path, idx: usize) -> std::path::PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    path.with_file_name(format!("{stem}_{idx}.{ext}"))
}

fn run_scan(config: &RunConfig) -> anyhow::Result<()> {
    let params = physical_params(config)?;
    let init = config.init.to_state()?;
    let block = config.scan.as_ref().expect("validated");
    let mode = match block.mode {
        ScanModeConfig::Symmetric => ScanMode::Symmetric,
        ScanModeConfig::Antisymmetric => ScanMode::Antisymmetric,
    };
    let eps: Vec<f64> = block
        .eps_grid
        .values()
        .into_iter()
        .map(|e| e * params.gamma)
        .collect();
    let scan = instability_scan(&params, &init, mode, &eps)?;
    output::emit_csv(config.output.csv.as_deref(), |w| {
        output::write_scan_csv(&scan, w)
    })?;
    let summary = serde_json::json!({
        "hwhm": scan.hwhm,
        "mode": match mode {
            ScanMode::Symmetric => "symmetric",
            ScanMode::Antisymmetric => "antisymmetric",
        },
    });
    if config.output.json.is_some() || config.output.csv.is_some() {
        output::emit_json(config.output.json.as_deref(), &summary)?;
    }
    Ok(())
}
