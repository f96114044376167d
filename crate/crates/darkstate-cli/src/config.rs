//! Run configuration: clap argument parsing, the JSON config file mirror,
//! and the merge rule (flags override file values).

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use darkstate::{InitialState, NamedState};

/// Configuration problems: conflicting or missing options, malformed
/// numbers, unknown keys. Reported with exit status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> UsageError {
    UsageError(msg.into())
}

#[derive(Debug, Parser)]
#[command(
    name = "darkstate",
    about = "Two qubits in a common Lorentzian reservoir: dynamics, steady-state \
             concurrence, coupling-space sweeps",
    after_help = "All rates are in units of gamma and times in units of 1/gamma; \
                  --gamma rescales. DARKSTATE_WORKERS sets the default worker count."
)]
pub struct Cli {
    /// JSON config file mirroring the run configuration; explicit flags
    /// override values from the file.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Option<CliCommand>,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Poles and residues of the Laplace solution.
    Poles(CommonArgs),
    /// Time series of the three amplitudes and the concurrence.
    Trajectory(TrajectoryArgs),
    /// Steady-state concurrence with its pole classification.
    Ssc(CommonArgs),
    /// Steady-state concurrence over a rectangular (g1, g2) grid.
    Sweep(SweepArgs),
    /// SSC against small deviations from a coupling configuration line.
    Scan(ScanArgs),
}

#[derive(Debug, Args, Default, Clone)]
pub struct CommonArgs {
    /// Qubit-1 to reservoir coupling (units of gamma).
    #[arg(long)]
    pub g1: Option<f64>,
    /// Qubit-2 to reservoir coupling (units of gamma).
    #[arg(long)]
    pub g2: Option<f64>,
    /// Qubit-qubit exchange strength (units of gamma).
    #[arg(long)]
    pub j: Option<f64>,
    /// Lorentzian width (sets the physical scale; default 1).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Detuning of the Lorentzian peak (units of gamma).
    #[arg(long = "delta-c")]
    pub delta_c: Option<f64>,
    /// Initial state: e1g2, g1e2, plus, minus, plus_i, minus_i, or an
    /// explicit normalized "re1,im1,re2,im2".
    #[arg(long)]
    pub init: Option<String>,
    /// Write the JSON result here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub json: Option<PathBuf>,
    /// Worker threads (default: DARKSTATE_WORKERS, then all cores).
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrajectoryArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Integration span (units of 1/gamma).
    #[arg(long = "t-end")]
    pub t_end: Option<f64>,
    /// Output cadence (units of 1/gamma, default 0.01).
    #[arg(long = "dt-out")]
    pub dt_out: Option<f64>,
    /// Solver backend: ode, spectral or volterra.
    #[arg(long)]
    pub backend: Option<String>,
    /// Volterra step size (units of 1/gamma, default 1e-3).
    #[arg(long)]
    pub h: Option<f64>,
    /// CSV output path (stdout when omitted).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Grid for both coupling axes as min:max:n (units of gamma).
    #[arg(long, value_name = "MIN:MAX:N")]
    pub grid: Option<String>,
    /// Override the g1 axis grid.
    #[arg(long = "g1-grid", value_name = "MIN:MAX:N")]
    pub g1_grid: Option<String>,
    /// Override the g2 axis grid.
    #[arg(long = "g2-grid", value_name = "MIN:MAX:N")]
    pub g2_grid: Option<String>,
    /// Comma-separated detuning list; one sweep per value.
    #[arg(long, value_name = "D1,D2,...", allow_hyphen_values = true)]
    pub detunings: Option<String>,
    /// CSV output path (stdout when omitted).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Binary PPM heatmap output path.
    #[arg(long, value_name = "FILE")]
    pub ppm: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Configuration line: symmetric (g2 = g1 + eps) or antisymmetric
    /// (g2 = -g1 + eps).
    #[arg(long)]
    pub mode: Option<String>,
    /// Perturbation grid as min:max:n (units of gamma).
    #[arg(long = "eps-grid", value_name = "MIN:MAX:N")]
    pub eps_grid: Option<String>,
    /// CSV output path (stdout when omitted).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// JSON-facing configuration (the config file mirrors this structure).
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Poles,
    Trajectory,
    Ssc,
    Sweep,
    Scan,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    #[serde(default)]
    pub g1: f64,
    #[serde(default)]
    pub g2: f64,
    #[serde(default)]
    pub j: f64,
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default)]
    pub delta_c: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for ParamsConfig {
    fn default() -> Self {
        Self { g1: 0.0, g2: 0.0, j: 0.0, gamma: 1.0, delta_c: 0.0 }
    }
}

/// Initial state, either by library name or as explicit coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitSpec {
    Named(String),
    Explicit { c1: [f64; 2], c2: [f64; 2] },
}

impl Default for InitSpec {
    fn default() -> Self {
        InitSpec::Named("e1g2".into())
    }
}

impl InitSpec {
    /// Resolve to a validated state. Explicit coefficients must already be
    /// normalized; nothing is silently rescaled.
    pub fn to_state(&self) -> Result<InitialState, UsageError> {
        match self {
            InitSpec::Named(name) => {
                let named = NamedState::from_str(name)
                    .map_err(|_| usage(format!("unknown initial state `{name}`")))?;
                Ok(named.state())
            }
            InitSpec::Explicit { c1, c2 } => InitialState::new(
                Complex64::new(c1[0], c1[1]),
                Complex64::new(c2[0], c2[1]),
            )
            .map_err(|e| usage(format!("init: {e}"))),
        }
    }

    fn from_flag(text: &str) -> Result<Self, UsageError> {
        if NamedState::from_str(text).is_ok() {
            return Ok(InitSpec::Named(text.to_ascii_lowercase()));
        }
        let parts: Vec<&str> = text.split(',').collect();
        if parts.len() != 4 {
            return Err(usage(format!(
                "init `{text}` is neither a state name nor four comma-separated numbers"
            )));
        }
        let mut v = [0.0f64; 4];
        for (slot, raw) in v.iter_mut().zip(parts.iter()) {
            *slot = raw
                .trim()
                .parse()
                .map_err(|_| usage(format!("init: malformed number `{raw}`")))?;
        }
        Ok(InitSpec::Explicit { c1: [v[0], v[1]], c2: [v[2], v[3]] })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl GridConfig {
    fn from_flag(text: &str, field: &str) -> Result<Self, UsageError> {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(usage(format!("{field}: expected min:max:n, got `{text}`")));
        }
        let min = parts[0]
            .parse()
            .map_err(|_| usage(format!("{field}: malformed number `{}`", parts[0])))?;
        let max = parts[1]
            .parse()
            .map_err(|_| usage(format!("{field}: malformed number `{}`", parts[1])))?;
        let n = parts[2]
            .parse()
            .map_err(|_| usage(format!("{field}: malformed count `{}`", parts[2])))?;
        Ok(Self { min, max, n })
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.min + i as f64 * (self.max - self.min) / (self.n - 1).max(1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryConfig {
    pub t_end: f64,
    #[serde(default = "default_dt_out")]
    pub dt_out: f64,
    #[serde(default)]
    pub backend: Backend,
    #[serde(default = "default_h")]
    pub h: f64,
}

fn default_dt_out() -> f64 {
    0.01
}

fn default_h() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    #[default]
    Ode,
    Spectral,
    Volterra,
}

impl FromStr for Backend {
    type Err = UsageError;

    fn from_str(s: &str) -> Result<Self, UsageError> {
        match s.to_ascii_lowercase().as_str() {
            "ode" => Ok(Backend::Ode),
            "spectral" => Ok(Backend::Spectral),
            "volterra" => Ok(Backend::Volterra),
            other => Err(usage(format!("unknown backend `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub g1_grid: GridConfig,
    pub g2_grid: GridConfig,
    /// One sweep per detuning (units of gamma); falls back to
    /// `params.delta_c` when empty.
    #[serde(default)]
    pub detunings: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanModeConfig {
    Symmetric,
    Antisymmetric,
}

impl FromStr for ScanModeConfig {
    type Err = UsageError;

    fn from_str(s: &str) -> Result<Self, UsageError> {
        match s.to_ascii_lowercase().as_str() {
            "symmetric" | "sym" => Ok(ScanModeConfig::Symmetric),
            "antisymmetric" | "anti" => Ok(ScanModeConfig::Antisymmetric),
            other => Err(usage(format!("unknown scan mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub mode: ScanModeConfig,
    pub eps_grid: GridConfig,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
    pub ppm: Option<PathBuf>,
}

/// A fully resolved run: exactly one command plus everything it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: CommandKind,
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default)]
    pub init: InitSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<TrajectoryConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanConfig>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

impl RunConfig {
    /// Parse a config from its JSON mirror. Unknown keys are rejected.
    pub fn from_json(text: &str) -> Result<Self, UsageError> {
        let config: RunConfig =
            serde_json::from_str(text).map_err(|e| usage(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    /// Serialize to the JSON mirror (round-trips through [`from_json`]).
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization cannot fail")
    }

    pub fn validate(&self) -> Result<(), UsageError> {
        if self.params.gamma <= 0.0 || !self.params.gamma.is_finite() {
            return Err(usage("params: gamma must be strictly positive"));
        }
        self.init.to_state()?;
        match self.command {
            CommandKind::Trajectory => {
                let t = self
                    .trajectory
                    .as_ref()
                    .ok_or_else(|| usage("trajectory command requires --t-end"))?;
                if t.t_end <= 0.0 || t.dt_out <= 0.0 || t.h <= 0.0 {
                    return Err(usage("trajectory: t-end, dt-out and h must be positive"));
                }
            }
            CommandKind::Sweep => {
                let s = self
                    .sweep
                    .as_ref()
                    .ok_or_else(|| usage("sweep command requires --grid"))?;
                for (g, name) in [(&s.g1_grid, "g1 grid"), (&s.g2_grid, "g2 grid")] {
                    if g.n < 2 || g.min >= g.max {
                        return Err(usage(format!("{name}: need min < max and n >= 2")));
                    }
                }
            }
            CommandKind::Scan => {
                let s = self
                    .scan
                    .as_ref()
                    .ok_or_else(|| usage("scan command requires --mode and --eps-grid"))?;
                if s.eps_grid.n < 1 {
                    return Err(usage("eps grid: need at least one point"));
                }
            }
            CommandKind::Poles | CommandKind::Ssc => {}
        }
        for path in [&self.output.csv, &self.output.json, &self.output.ppm]
            .into_iter()
            .flatten()
        {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() && !parent.is_dir() {
                    return Err(usage(format!(
                        "output directory `{}` does not exist",
                        parent.display()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Merge command-line arguments over an optional config file into one run
/// configuration. Flags always win over file values.
pub fn parse_config(cli: Cli) -> Result<RunConfig, UsageError> {
    let mut config: Option<RunConfig> = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("config `{}`: {e}", path.display())))?;
            let parsed: RunConfig = serde_json::from_str(&text)
                .map_err(|e| usage(format!("config `{}`: {e}", path.display())))?;
            Some(parsed)
        }
        None => None,
    };

    let command = match &cli.command {
        Some(c) => c,
        None => {
            let config = config.ok_or_else(|| {
                usage("no command given; pass a subcommand or --config FILE")
            })?;
            config.validate()?;
            return Ok(config);
        }
    };

    let kind = match command {
        CliCommand::Poles(_) => CommandKind::Poles,
        CliCommand::Trajectory(_) => CommandKind::Trajectory,
        CliCommand::Ssc(_) => CommandKind::Ssc,
        CliCommand::Sweep(_) => CommandKind::Sweep,
        CliCommand::Scan(_) => CommandKind::Scan,
    };
    if let Some(file) = &config {
        if file.command != kind {
            return Err(usage(format!(
                "config file requests {:?} but the command line says {kind:?}",
                file.command
            )));
        }
    }
    let mut out = config.take().unwrap_or(RunConfig {
        command: kind,
        params: ParamsConfig::default(),
        init: InitSpec::default(),
        trajectory: None,
        sweep: None,
        scan: None,
        output: OutputConfig::default(),
        workers: None,
    });
    out.command = kind;

    let common = match command {
        CliCommand::Poles(c) | CliCommand::Ssc(c) => c.clone(),
        CliCommand::Trajectory(t) => t.common.clone(),
        CliCommand::Sweep(s) => s.common.clone(),
        CliCommand::Scan(s) => s.common.clone(),
    };
    if let Some(v) = common.g1 {
        out.params.g1 = v;
    }
    if let Some(v) = common.g2 {
        out.params.g2 = v;
    }
    if let Some(v) = common.j {
        out.params.j = v;
    }
    if let Some(v) = common.gamma {
        out.params.gamma = v;
    }
    if let Some(v) = common.delta_c {
        out.params.delta_c = v;
    }
    if let Some(text) = &common.init {
        out.init = InitSpec::from_flag(text)?;
    }
    if let Some(path) = common.json {
        out.output.json = Some(path);
    }
    if let Some(w) = common.workers {
        out.workers = Some(w);
    }

    match command {
        CliCommand::Trajectory(t) => {
            let mut block = out.trajectory.take().unwrap_or(TrajectoryConfig {
                t_end: 0.0,
                dt_out: default_dt_out(),
                backend: Backend::default(),
                h: default_h(),
            });
            if let Some(v) = t.t_end {
                block.t_end = v;
            }
            if let Some(v) = t.dt_out {
                block.dt_out = v;
            }
            if let Some(b) = &t.backend {
                block.backend = b.parse()?;
            }
            if let Some(v) = t.h {
                block.h = v;
            }
            if block.t_end <= 0.0 {
                return Err(usage("trajectory: --t-end is required"));
            }
            out.trajectory = Some(block);
            if let Some(path) = &t.out {
                out.output.csv = Some(path.clone());
            }
        }
        CliCommand::Sweep(s) => {
            let both = s
                .grid
                .as_deref()
                .map(|g| GridConfig::from_flag(g, "grid"))
                .transpose()?;
            let g1 = s
                .g1_grid
                .as_deref()
                .map(|g| GridConfig::from_flag(g, "g1-grid"))
                .transpose()?
                .or(both);
            let g2 = s
                .g2_grid
                .as_deref()
                .map(|g| GridConfig::from_flag(g, "g2-grid"))
                .transpose()?
                .or(both);
            let mut block = match (out.sweep.take(), g1, g2) {
                (Some(mut block), g1, g2) => {
                    if let Some(g) = g1 {
                        block.g1_grid = g;
                    }
                    if let Some(g) = g2 {
                        block.g2_grid = g;
                    }
                    block
                }
                (None, Some(g1), Some(g2)) => SweepConfig {
                    g1_grid: g1,
                    g2_grid: g2,
                    detunings: Vec::new(),
                },
                _ => return Err(usage("sweep: --grid (or both axis grids) is required")),
            };
            if let Some(list) = &s.detunings {
                block.detunings = list
                    .split(',')
                    .map(|d| {
                        d.trim()
                            .parse()
                            .map_err(|_| usage(format!("detunings: malformed number `{d}`")))
                    })
                    .collect::<Result<_, _>>()?;
            }
            out.sweep = Some(block);
            if let Some(path) = &s.out {
                out.output.csv = Some(path.clone());
            }
            if let Some(path) = &s.ppm {
                out.output.ppm = Some(path.clone());
            }
        }
        CliCommand::Scan(s) => {
            let mode = s.mode.as_deref().map(ScanModeConfig::from_str).transpose()?;
            let grid = s
                .eps_grid
                .as_deref()
                .map(|g| GridConfig::from_flag(g, "eps-grid"))
                .transpose()?;
            let block = match (out.scan.take(), mode, grid) {
                (Some(mut block), mode, grid) => {
                    if let Some(m) = mode {
                        block.mode = m;
                    }
                    if let Some(g) = grid {
                        block.eps_grid = g;
                    }
                    block
                }
                (None, Some(mode), Some(grid)) => ScanConfig { mode, eps_grid: grid },
                _ => return Err(usage("scan: --mode and --eps-grid are required")),
            };
            out.scan = Some(block);
            if let Some(path) = &s.out {
                out.output.csv = Some(path.clone());
            }
        }
        CliCommand::Poles(_) | CliCommand::Ssc(_) => {}
    }

    out.validate()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::Parser;

    fn parse(args: &[&str]) -> Result<RunConfig, UsageError> {
        parse_config(Cli::try_parse_from(args).expect("clap accepts"))
    }

    #[test]
    fn flags_build_an_ssc_config() {
        let c = parse(&[
            "darkstate", "ssc", "--g1", "0.6", "--g2", "1.0", "--j", "0", "--delta-c", "0",
            "--init", "e1g2",
        ])
        .unwrap();
        assert_eq!(c.command, CommandKind::Ssc);
        assert_eq!(c.params.g1, 0.6);
        assert_eq!(c.init, InitSpec::Named("e1g2".into()));
    }

    #[test]
    fn explicit_init_is_validated_not_renormalized() {
        let err = parse(&["darkstate", "ssc", "--g1", "1", "--g2", "1", "--init", "1,0,0.1,0"]);
        assert!(err.is_err());
        let ok = parse(&["darkstate", "ssc", "--g1", "1", "--g2", "1", "--init", "0.6,0,0.8,0"]);
        assert!(ok.is_ok());
    }

    #[test]
    fn grid_flag_parses() {
        let c = parse(&[
            "darkstate", "sweep", "--j", "1", "--init", "plus", "--grid", "-2:2:201",
        ])
        .unwrap();
        let s = c.sweep.unwrap();
        assert_eq!(s.g1_grid, GridConfig { min: -2.0, max: 2.0, n: 201 });
        assert_eq!(s.g2_grid, s.g1_grid);
    }

    #[test]
    fn config_round_trips_through_json() {
        let config = RunConfig {
            command: CommandKind::Sweep,
            params: ParamsConfig { g1: 0.0, g2: 0.0, j: 1.5, gamma: 1.0, delta_c: 0.5 },
            init: InitSpec::Explicit { c1: [0.6, 0.0], c2: [0.0, 0.8] },
            trajectory: None,
            sweep: Some(SweepConfig {
                g1_grid: GridConfig { min: -5.0, max: 5.0, n: 201 },
                g2_grid: GridConfig { min: -5.0, max: 5.0, n: 201 },
                detunings: vec![0.0, 3.0, -3.0],
            }),
            scan: None,
            output: OutputConfig {
                csv: Some(PathBuf::from("/tmp/sweep.csv")),
                json: None,
                ppm: Some(PathBuf::from("/tmp/sweep.ppm")),
            },
            workers: Some(4),
        };
        let round = RunConfig::from_json(&config.to_json()).unwrap();
        assert_eq!(round, config);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::from_json(
            r#"{"command": "ssc", "params": {"g1": 1.0, "gain": 2.0}}"#,
        );
        assert!(err.is_err());
        let msg = format!("{}", err.unwrap_err());
        assert!(msg.contains("gain"), "{msg}");
    }

    #[test]
    fn malformed_numbers_name_the_field() {
        let err = parse(&[
            "darkstate", "sweep", "--init", "plus", "--grid", "-2:x:201",
        ])
        .unwrap_err();
        assert!(format!("{err}").contains("grid"));
    }

    #[test]
    fn missing_required_blocks_are_usage_errors() {
        assert!(parse(&["darkstate", "trajectory", "--g1", "1", "--g2", "1"]).is_err());
        assert!(parse(&["darkstate", "sweep", "--init", "plus"]).is_err());
        assert!(parse(&["darkstate", "scan", "--g1", "0.5"]).is_err());
    }
}
