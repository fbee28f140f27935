//! JSON run configuration and the `semi-isac` command-line front end.
//!
//! The configuration is one flat JSON object in human units. Every key is
//! optional; absent keys take the defaults listed in the README. A key that
//! is present must hold a value of the right type (`null` is rejected).
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 infeasible model.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::{Map, Value};

use crate::channel::{build_link_coefficients, sample_scenario_seeded, SystemParams};
use crate::dinkelbach::{maximize_ee, DinkelbachConfig, EeSolution, EeStatus};
use crate::error::{Error, Result};
use crate::experiments::{
    format_sig, run_ee_sweep, run_priority_sweep, run_qos_sweep, run_rcs_power_sweep, run_trace_sweep, write_csv,
    write_trace_csv, Scheme, SweepKind, SweepRow, SweepSpec, TraceConfig,
};
use crate::objective::{aggregate_objective, stream_rates, Allocation};
use crate::solver::{solve_sum_mi_rate, Instance, SolveReport, SolveStatus, SolverConfig};
use crate::units::{db_to_linear, dbm_to_watts, GHZ, MBPS, MHZ};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;

/// Sweep names accepted by `semi-isac sweep`.
pub const SWEEP_NAMES: [&str; 5] = ["qos", "priority", "rcs_power", "ee", "trace"];

/// Sweep-harness settings of a [`RunConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    pub trials_per_point: usize,
    pub base_seed: u64,
    pub random_max_tries: usize,
    pub qos_sweep_mbps: Vec<f64>,
    pub priority_sweep: Vec<f64>,
    pub power_sweep_dbm: Vec<f64>,
    pub rcs_sweep_m2: Vec<f64>,
    pub qos_profiles_mbps: Vec<(f64, f64)>,
    pub trace_configs: Vec<TraceConfig>,
    pub qos_schemes: Vec<Scheme>,
    pub ee_schemes: Vec<Scheme>,
}

impl Default for SweepSettings {
    fn default() -> Self {
        let qos = SweepSpec::new(SweepKind::Qos);
        let ee = SweepSpec::new(SweepKind::EeQos);
        SweepSettings {
            trials_per_point: qos.trials_per_point,
            base_seed: qos.base_seed,
            random_max_tries: qos.random_max_tries,
            qos_sweep_mbps: qos.sweep_values.clone(),
            priority_sweep: SweepSpec::new(SweepKind::Priority).sweep_values,
            power_sweep_dbm: SweepSpec::new(SweepKind::RcsPower).sweep_values,
            rcs_sweep_m2: qos.rcs_values_m2.clone(),
            qos_profiles_mbps: qos.qos_profiles_mbps.clone(),
            trace_configs: qos.trace_configs.clone(),
            qos_schemes: qos.schemes,
            ee_schemes: ee.schemes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub params: SystemParams,
    pub solver: SolverConfig,
    pub dinkelbach: DinkelbachConfig,
    pub sweep: SweepSettings,
}

/// Every accepted key.
pub const CONFIG_KEYS: [&str; 38] = [
    "bandwidth_mhz",
    "carrier_ghz",
    "temperature_k",
    "rcs_m2",
    "ple_comm",
    "ple_radar",
    "tx_gain_dbi",
    "p_max_dbm",
    "circuit_power_dbm",
    "qos_sensing_mbps",
    "qos_comm_mbps",
    "priority_sensing",
    "priority_isac",
    "priority_comm",
    "clutter_gains",
    "clutter_distances_m",
    "nakagami_m",
    "cell_radius_m",
    "min_distance_m",
    "kkt_tolerance",
    "max_iterations",
    "barrier_initial_t",
    "barrier_mu",
    "variable_floor_epsilon",
    "delta_tolerance_bps",
    "max_outer_iterations",
    "eta_initial_bps_per_w",
    "trials_per_point",
    "base_seed",
    "random_max_tries",
    "qos_sweep_mbps",
    "priority_sweep",
    "power_sweep_dbm",
    "rcs_sweep_m2",
    "qos_profiles_mbps",
    "trace_configs",
    "qos_schemes",
    "ee_schemes",
];

/// Config key that sets each SI parameter, for error messages.
fn config_key_of(field: &str) -> Option<&'static str> {
    let base = field.split('[').next().unwrap_or(field);
    Some(match base {
        "bandwidth_hz" => "bandwidth_mhz",
        "carrier_hz" => "carrier_ghz",
        "tx_gain" => "tx_gain_dbi",
        "p_max_w" => "p_max_dbm",
        "circuit_power_w" => "circuit_power_dbm",
        "qos_sensing_bps" => "qos_sensing_mbps",
        "qos_comm_bps" => "qos_comm_mbps",
        "priorities" => match field {
            "priorities[0]" => "priority_sensing",
            "priorities[1]" => "priority_isac",
            _ => "priority_comm",
        },
        "delta_tolerance" => "delta_tolerance_bps",
        "eta_initial" => "eta_initial_bps_per_w",
        "sweep_values" | "qos_profiles_mbps" | "rcs_values_m2" => return None,
        other => CONFIG_KEYS.iter().find(|k| **k == other)?,
    })
}

fn bad(key: &str, what: &str, got: &Value) -> Error {
    Error::Config(format!("key `{key}`: expected {what}, got {got}"))
}

struct Doc<'a>(&'a Map<String, Value>);

impl Doc<'_> {
    fn get(&self, key: &str) -> Result<Option<&Value>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(Value::Null) => Err(Error::Config(format!("key `{key}`: value must not be null"))),
            Some(v) => Ok(Some(v)),
        }
    }

    fn f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key)? {
            None => Ok(default),
            Some(v) => v.as_f64().ok_or_else(|| bad(key, "a number", v)),
        }
    }

    fn u64(&self, key: &str, default: u64) -> Result<u64> {
        match self.get(key)? {
            None => Ok(default),
            Some(v) => v.as_u64().ok_or_else(|| bad(key, "a non-negative integer", v)),
        }
    }

    fn usize(&self, key: &str, default: usize) -> Result<usize> {
        let v = self.u64(key, default as u64)?;
        usize::try_from(v).map_err(|_| Error::Config(format!("key `{key}`: {v} is too large")))
    }

    fn opt_f64(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)?
            .map(|v| v.as_f64().ok_or_else(|| bad(key, "a number", v)))
            .transpose()
    }

    fn list(&self, key: &str) -> Result<Option<&Vec<Value>>> {
        self.get(key)?
            .map(|v| v.as_array().ok_or_else(|| bad(key, "an array", v)))
            .transpose()
    }

    fn f64_list(&self, key: &str, default: Vec<f64>) -> Result<Vec<f64>> {
        match self.list(key)? {
            None => Ok(default),
            Some(items) => items
                .iter()
                .map(|v| v.as_f64().ok_or_else(|| bad(key, "an array of numbers", v)))
                .collect(),
        }
    }

    fn pairs(&self, key: &str, default: Vec<(f64, f64)>) -> Result<Vec<(f64, f64)>> {
        match self.list(key)? {
            None => Ok(default),
            Some(items) => items
                .iter()
                .map(|v| match v.as_array().map(|a| a.as_slice()) {
                    Some([x, y]) => match (x.as_f64(), y.as_f64()) {
                        (Some(x), Some(y)) => Ok((x, y)),
                        _ => Err(bad(key, "pairs of numbers", v)),
                    },
                    _ => Err(bad(key, "pairs of numbers", v)),
                })
                .collect(),
        }
    }

    fn schemes(&self, key: &str, default: Vec<Scheme>) -> Result<Vec<Scheme>> {
        match self.list(key)? {
            None => Ok(default),
            Some(items) => items
                .iter()
                .map(|v| {
                    v.as_str()
                        .and_then(Scheme::parse)
                        .ok_or_else(|| bad(key, "scheme names (joint, sp_epa, pa_esp, random, dinkelbach_ee)", v))
                })
                .collect(),
        }
    }
}

impl RunConfig {
    /// Parses a JSON document; unknown keys are rejected.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid JSON: {e}")))?;
        let Value::Object(map) = value else {
            return Err(Error::Config("top level must be a JSON object".into()));
        };
        if let Some(k) = map.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
            return Err(Error::Config(format!("unknown key `{k}`")));
        }
        let d = Doc(&map);
        let p0 = SystemParams::default();
        let distances = match d.list("clutter_distances_m")? {
            None => None,
            Some(_) => Some(d.f64_list("clutter_distances_m", Vec::new())?),
        };
        let params = SystemParams {
            bandwidth_hz: d.f64("bandwidth_mhz", p0.bandwidth_hz / MHZ)? * MHZ,
            carrier_hz: d.f64("carrier_ghz", p0.carrier_hz / GHZ)? * GHZ,
            temperature_k: d.f64("temperature_k", p0.temperature_k)?,
            rcs_m2: d.f64("rcs_m2", p0.rcs_m2)?,
            ple_comm: d.f64("ple_comm", p0.ple_comm)?,
            ple_radar: d.f64("ple_radar", p0.ple_radar)?,
            tx_gain: db_to_linear(d.f64("tx_gain_dbi", 10.0 * p0.tx_gain.log10())?),
            p_max_w: dbm_to_watts(d.f64("p_max_dbm", 46.0)?),
            circuit_power_w: dbm_to_watts(d.f64("circuit_power_dbm", 33.0)?),
            qos_sensing_bps: d.f64("qos_sensing_mbps", p0.qos_sensing_bps / MBPS)? * MBPS,
            qos_comm_bps: d.f64("qos_comm_mbps", p0.qos_comm_bps / MBPS)? * MBPS,
            priorities: [
                d.f64("priority_sensing", p0.priorities[0])?,
                d.f64("priority_isac", p0.priorities[1])?,
                d.f64("priority_comm", p0.priorities[2])?,
            ],
            clutter_gains: d.f64_list("clutter_gains", p0.clutter_gains.clone())?,
            clutter_distances_m: distances,
            nakagami_m: d.f64("nakagami_m", p0.nakagami_m)?,
            cell_radius_m: d.f64("cell_radius_m", p0.cell_radius_m)?,
            min_distance_m: d.f64("min_distance_m", p0.min_distance_m)?,
        };
        let s0 = SolverConfig::default();
        let solver = SolverConfig {
            kkt_tolerance: d.f64("kkt_tolerance", s0.kkt_tolerance)?,
            max_iterations: d.usize("max_iterations", s0.max_iterations)?,
            barrier_initial_t: d.f64("barrier_initial_t", s0.barrier_initial_t)?,
            barrier_mu: d.f64("barrier_mu", s0.barrier_mu)?,
            variable_floor_epsilon: d.f64("variable_floor_epsilon", s0.variable_floor_epsilon)?,
        };
        let k0 = DinkelbachConfig::default();
        let dinkelbach = DinkelbachConfig {
            delta_tolerance: d.opt_f64("delta_tolerance_bps")?,
            max_outer_iterations: d.usize("max_outer_iterations", k0.max_outer_iterations)?,
            eta_initial: d.f64("eta_initial_bps_per_w", k0.eta_initial)?,
        };
        let w0 = SweepSettings::default();
        let trace_configs = d
            .pairs(
                "trace_configs",
                w0.trace_configs.iter().map(|c| (c.rcs_m2, c.clutter_count as f64)).collect(),
            )?
            .into_iter()
            .map(|(rcs, j)| {
                if j >= 0.0 && j.fract() == 0.0 {
                    Ok(TraceConfig {
                        rcs_m2: rcs,
                        clutter_count: j as usize,
                    })
                } else {
                    Err(Error::Config(format!("key `trace_configs`: clutter count {j} is not a non-negative integer")))
                }
            })
            .collect::<Result<_>>()?;
        let sweep = SweepSettings {
            trials_per_point: d.usize("trials_per_point", w0.trials_per_point)?,
            base_seed: d.u64("base_seed", w0.base_seed)?,
            random_max_tries: d.usize("random_max_tries", w0.random_max_tries)?,
            qos_sweep_mbps: d.f64_list("qos_sweep_mbps", w0.qos_sweep_mbps)?,
            priority_sweep: d.f64_list("priority_sweep", w0.priority_sweep)?,
            power_sweep_dbm: d.f64_list("power_sweep_dbm", w0.power_sweep_dbm)?,
            rcs_sweep_m2: d.f64_list("rcs_sweep_m2", w0.rcs_sweep_m2)?,
            qos_profiles_mbps: d.pairs("qos_profiles_mbps", w0.qos_profiles_mbps)?,
            trace_configs,
            qos_schemes: d.schemes("qos_schemes", w0.qos_schemes)?,
            ee_schemes: d.schemes("ee_schemes", w0.ee_schemes)?,
        };
        let cfg = RunConfig {
            params,
            solver,
            dinkelbach,
            sweep,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Validates every section, reporting failures by config key.
    pub fn validate(&self) -> Result<()> {
        let checks = [
            self.params.validate(),
            self.solver.validate(),
            self.dinkelbach.validate(),
        ];
        for r in checks {
            if let Err(Error::InvalidParam { field, reason }) = r {
                let key = config_key_of(&field).unwrap_or(&field);
                return Err(Error::Config(format!("key `{key}`: {reason}")));
            }
            r?;
        }
        for kind in [
            SweepKind::Qos,
            SweepKind::Priority,
            SweepKind::RcsPower,
            SweepKind::ConvergenceTrace,
            SweepKind::EeQos,
        ] {
            if let Err(e) = self.sweep_spec(kind).validate() {
                let key = match (&e, kind) {
                    (Error::InvalidParam { field, .. }, _) if field != "sweep_values" => {
                        config_key_of(field).unwrap_or(field).to_string()
                    }
                    (_, SweepKind::Qos) => "qos_sweep_mbps".into(),
                    (_, SweepKind::EeQos) => "qos_sweep_mbps or ee_schemes".into(),
                    (_, SweepKind::Priority) => "priority_sweep".into(),
                    (_, SweepKind::RcsPower) => "power_sweep_dbm".into(),
                    (_, SweepKind::ConvergenceTrace) => "trace_configs".into(),
                };
                let reason = match e {
                    Error::InvalidParam { reason, .. } => reason,
                    other => other.to_string(),
                };
                return Err(Error::Config(format!("key `{key}`: {reason}")));
            }
        }
        if let Some(c) = self.sweep.trace_configs.iter().find(|c| !(c.rcs_m2 > 0.0 && c.rcs_m2.is_finite())) {
            return Err(Error::Config(format!("key `trace_configs`: RCS must be positive, got {}", c.rcs_m2)));
        }
        if self.sweep.rcs_sweep_m2.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::Config("key `rcs_sweep_m2`: values must be positive".into()));
        }
        Ok(())
    }

    /// Experiment specification for one sweep kind.
    pub fn sweep_spec(&self, kind: SweepKind) -> SweepSpec {
        let s = &self.sweep;
        let base = SweepSpec::new(kind);
        let (sweep_values, schemes) = match kind {
            SweepKind::Qos => (s.qos_sweep_mbps.clone(), s.qos_schemes.clone()),
            SweepKind::EeQos => (s.qos_sweep_mbps.clone(), s.ee_schemes.clone()),
            SweepKind::Priority => (s.priority_sweep.clone(), base.schemes),
            SweepKind::RcsPower => (s.power_sweep_dbm.clone(), base.schemes),
            SweepKind::ConvergenceTrace => (base.sweep_values, base.schemes),
        };
        SweepSpec {
            kind,
            sweep_values,
            trials_per_point: s.trials_per_point,
            base_seed: s.base_seed,
            schemes,
            qos_profiles_mbps: s.qos_profiles_mbps.clone(),
            rcs_values_m2: s.rcs_sweep_m2.clone(),
            trace_configs: s.trace_configs.clone(),
            solver: self.solver,
            dinkelbach: self.dinkelbach,
            random_max_tries: s.random_max_tries,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "semi-isac", version, about = "Semi-ISaC spectrum partitioning and power allocation")]
pub struct Cli {
    /// JSON configuration; defaults are used when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Drop seed (solve, ee) or base seed of the trials (sweep).
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Output file: trace CSV (ee) or sweep CSV (sweep).
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Overrides `trials_per_point`.
    #[arg(long, global = true, value_name = "N")]
    pub trials: Option<usize>,
    /// Suppresses progress and summary lines.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Maximize the weighted sum of sensing MI and data rate on one drop.
    Solve,
    /// Maximize energy efficiency on one drop.
    Ee,
    /// Run a Monte Carlo sweep: qos, priority, rcs_power, ee or trace.
    Sweep {
        #[arg(value_name = "NAME")]
        name: String,
    },
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    match execute(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}

fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_path(p)?,
        None => RunConfig::default(),
    };
    if let Some(n) = cli.trials {
        if n == 0 {
            return Err(Error::Config("--trials must be at least 1".into()));
        }
        cfg.sweep.trials_per_point = n;
    }
    match &cli.command {
        Command::Solve => cmd_solve(&cfg, cli.seed.unwrap_or(0), out),
        Command::Ee => cmd_ee(&cfg, cli.seed.unwrap_or(0), cli.out.as_deref(), out),
        Command::Sweep { name } => {
            if let Some(s) = cli.seed {
                cfg.sweep.base_seed = s;
            }
            cmd_sweep(&cfg, name, cli.out.as_deref(), cli.quiet, out, err)
        }
    }
}

fn drop_instance(cfg: &RunConfig, seed: u64) -> Result<Instance> {
    let scn = sample_scenario_seeded(&cfg.params, seed)?;
    Instance::new(build_link_coefficients(&scn, &cfg.params)?, cfg.params.clone())
}

fn write_allocation(out: &mut dyn Write, inst: &Instance, alloc: &Allocation) -> Result<()> {
    for (i, t) in alloc.tau.iter().enumerate() {
        writeln!(out, "tau{}={}", i + 1, format_sig(*t))?;
    }
    for (i, p) in alloc.power.iter().enumerate() {
        writeln!(out, "p{}_w={}", i + 1, format_sig(*p))?;
    }
    let rates = stream_rates(alloc, &inst.coeffs, &inst.params)?.as_array();
    for (name, r) in ["i1_bps", "i2d_bps", "i2u_bps", "i3_bps"].iter().zip(rates) {
        writeln!(out, "{name}={}", format_sig(r))?;
    }
    Ok(())
}

fn status_label(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Optimal => "optimal",
        SolveStatus::Infeasible => "infeasible",
        SolveStatus::MaxIterations => "max_iterations",
    }
}

fn write_infeasible(out: &mut dyn Write, rep: &SolveReport) -> Result<()> {
    if let Some(b) = rep.infeasibility_bound_bps {
        writeln!(out, "min_qos_slack_bound_bps={}", format_sig(b))?;
    }
    Ok(())
}

/// Solves the weighted sum problem on drop `seed` and prints the report.
pub fn cmd_solve(cfg: &RunConfig, seed: u64, out: &mut dyn Write) -> Result<i32> {
    let inst = drop_instance(cfg, seed)?;
    let rep = solve_sum_mi_rate(&inst, &cfg.solver)?;
    writeln!(out, "seed={seed}")?;
    writeln!(out, "status={}", status_label(rep.status))?;
    match rep.status {
        SolveStatus::Infeasible => {
            write_infeasible(out, &rep)?;
            Ok(EXIT_INFEASIBLE)
        }
        SolveStatus::MaxIterations => Err(Error::Config(format!(
            "solver hit max_iterations ({}) without meeting kkt_tolerance",
            cfg.solver.max_iterations
        ))),
        SolveStatus::Optimal => {
            writeln!(out, "objective_bps={}", format_sig(rep.objective_value))?;
            writeln!(out, "kkt_residual={}", format_sig(rep.kkt_residual))?;
            writeln!(out, "iterations={}", rep.iterations)?;
            write_allocation(out, &inst, &rep.allocation)?;
            Ok(EXIT_OK)
        }
    }
}

fn write_trace(sol: &EeSolution, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    sol.trace.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Maximizes EE on drop `seed`; writes the Dinkelbach trace to `trace_out`.
pub fn cmd_ee(cfg: &RunConfig, seed: u64, trace_out: Option<&Path>, out: &mut dyn Write) -> Result<i32> {
    let inst = drop_instance(cfg, seed)?;
    let sol = maximize_ee(&inst, &cfg.solver, &cfg.dinkelbach)?;
    writeln!(out, "seed={seed}")?;
    match sol.status {
        EeStatus::Infeasible => {
            writeln!(out, "status=infeasible")?;
            write_infeasible(out, &sol.report)?;
            return Ok(EXIT_INFEASIBLE);
        }
        EeStatus::NonConvergence => {
            if let Some(p) = trace_out {
                write_trace(&sol, p)?;
            }
            return Err(Error::Config(format!(
                "no convergence after {} price updates (max_outer_iterations = {})",
                sol.iterations(),
                cfg.dinkelbach.max_outer_iterations
            )));
        }
        EeStatus::Converged => {}
    }
    let alloc = &sol.report.allocation;
    writeln!(out, "status=converged")?;
    writeln!(out, "eta_star_bps_per_w={}", format_sig(sol.eta_star))?;
    writeln!(out, "iterations={}", sol.iterations())?;
    writeln!(out, "f_value_bps={}", format_sig(sol.trace.records.last().map_or(f64::NAN, |r| r.f_value)))?;
    writeln!(out, "delta_bps={}", format_sig(sol.delta))?;
    writeln!(out, "objective_bps={}", format_sig(aggregate_objective(alloc, &inst.coeffs, &inst.params)?))?;
    writeln!(out, "total_power_w={}", format_sig(alloc.total_power() + inst.params.circuit_power_w))?;
    write_allocation(out, &inst, alloc)?;
    if let Some(p) = trace_out {
        write_trace(&sol, p)?;
        writeln!(out, "trace={}", p.display())?;
    }
    Ok(EXIT_OK)
}

fn sweep_summary(rows: &[SweepRow], err: &mut dyn Write) -> Result<()> {
    for r in rows {
        writeln!(
            err,
            "{:>12} {:<60} feasible={}",
            format_sig(r.sweep_value),
            r.scheme,
            format_sig(r.feasible_fraction)
        )?;
    }
    Ok(())
}

/// Runs sweep `name`, writing CSV to `path` or to `out`. Summary lines go to `err`.
pub fn cmd_sweep(
    cfg: &RunConfig,
    name: &str,
    path: Option<&Path>,
    quiet: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32> {
    let kind = match name {
        "qos" => SweepKind::Qos,
        "priority" => SweepKind::Priority,
        "rcs_power" => SweepKind::RcsPower,
        "ee" => SweepKind::EeQos,
        "trace" => SweepKind::ConvergenceTrace,
        other => {
            return Err(Error::Config(format!(
                "unknown sweep `{other}`; valid names: {}",
                SWEEP_NAMES.join(", ")
            )))
        }
    };
    let spec = cfg.sweep_spec(kind);
    let start = Instant::now();
    let mut buf = Vec::new();
    let n_rows = if kind == SweepKind::ConvergenceTrace {
        let rows = run_trace_sweep(&cfg.params, &spec)?;
        write_trace_csv(&rows, &mut buf)?;
        rows.len()
    } else {
        let rows = match kind {
            SweepKind::Qos => run_qos_sweep(&cfg.params, &spec)?,
            SweepKind::Priority => run_priority_sweep(&cfg.params, &spec)?,
            SweepKind::RcsPower => run_rcs_power_sweep(&cfg.params, &spec)?,
            _ => run_ee_sweep(&cfg.params, &spec)?,
        };
        write_csv(&rows, &mut buf)?;
        if !quiet {
            sweep_summary(&rows, err)?;
        }
        rows.len()
    };
    match path {
        Some(p) => {
            let mut f = File::create(p)?;
            f.write_all(&buf)?;
            f.flush()?;
        }
        None => out.write_all(&buf)?,
    }
    if !quiet {
        writeln!(
            err,
            "sweep {name}: {n_rows} rows, {} trials per point, {:.1} s",
            spec.trials_per_point,
            start.elapsed().as_secs_f64()
        )?;
    }
    Ok(EXIT_OK)
}
