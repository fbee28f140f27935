//! Monte Carlo sweeps producing the data series behind the figures as CSV.
//!
//! Every trial samples one drop and runs all requested schemes on it. Trial
//! `t` uses the same drop at every sweep point, so curves are compared on
//! common scenarios. Trials run in parallel; results are reduced in
//! `(sweep point, trial)` order so the output does not depend on scheduling.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::baselines::{pa_esp, random_feasible, sp_epa, DEFAULT_MAX_TRIES};
use crate::channel::{build_link_coefficients, sample_scenario_seeded, SystemParams};
use crate::dinkelbach::{ee_value, maximize_ee, DinkelbachConfig, EeStatus};
use crate::error::{Error, Result};
use crate::objective::{aggregate_objective, stream_rates, Allocation};
use crate::solver::{solve_sum_mi_rate, Instance, SolveReport, SolverConfig};
use crate::units::{dbm_to_watts, MBPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Joint,
    SpEpa,
    PaEsp,
    Random,
    DinkelbachEe,
}

impl Scheme {
    pub fn label(self) -> &'static str {
        match self {
            Scheme::Joint => "joint",
            Scheme::SpEpa => "sp_epa",
            Scheme::PaEsp => "pa_esp",
            Scheme::Random => "random",
            Scheme::DinkelbachEe => "dinkelbach_ee",
        }
    }

    pub fn parse(s: &str) -> Option<Scheme> {
        [Scheme::Joint, Scheme::SpEpa, Scheme::PaEsp, Scheme::Random, Scheme::DinkelbachEe]
            .into_iter()
            .find(|k| k.label() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    /// `Rr = Rc = value` in Mbps.
    Qos,
    /// ISaC priority `G2 = value`, `G1 = G3 = (1 - G2) / 2`.
    Priority,
    /// `P_max = value` in dBm, crossed with `rcs_values_m2`.
    RcsPower,
    /// Dinkelbach traces per entry of `trace_configs`.
    ConvergenceTrace,
    /// EE per scheme at `Rr = Rc = value` in Mbps.
    EeQos,
}

/// One (RCS, clutter count) setting of the convergence traces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceConfig {
    pub rcs_m2: f64,
    /// Uses the first `clutter_count` entries of `0.01, 0.001, 1e-4, ...`.
    pub clutter_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub kind: SweepKind,
    pub sweep_values: Vec<f64>,
    pub trials_per_point: usize,
    pub base_seed: u64,
    pub schemes: Vec<Scheme>,
    /// `(Rr, Rc)` in Mbps, one curve each (priority sweep).
    pub qos_profiles_mbps: Vec<(f64, f64)>,
    /// RCS grid crossed with the power sweep.
    pub rcs_values_m2: Vec<f64>,
    pub trace_configs: Vec<TraceConfig>,
    pub solver: SolverConfig,
    pub dinkelbach: DinkelbachConfig,
    /// Draw budget of the random scheme.
    pub random_max_tries: usize,
}

impl SweepSpec {
    /// Defaults of each sweep kind.
    pub fn new(kind: SweepKind) -> Self {
        let (sweep_values, schemes) = match kind {
            SweepKind::Qos => (
                vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
                vec![Scheme::Joint, Scheme::SpEpa, Scheme::PaEsp, Scheme::Random],
            ),
            SweepKind::Priority => (vec![0.1, 0.2, 0.3, 1.0 / 3.0, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9], vec![Scheme::Joint]),
            SweepKind::RcsPower => (vec![36.0, 38.0, 40.0, 42.0, 44.0, 46.0, 48.0, 50.0], vec![Scheme::Joint]),
            SweepKind::ConvergenceTrace => (Vec::new(), vec![Scheme::DinkelbachEe]),
            SweepKind::EeQos => (
                vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
                vec![Scheme::DinkelbachEe, Scheme::SpEpa, Scheme::PaEsp, Scheme::Random],
            ),
        };
        SweepSpec {
            kind,
            sweep_values,
            trials_per_point: 500,
            base_seed: 0,
            schemes,
            qos_profiles_mbps: vec![(5.0, 20.0), (30.0, 5.0)],
            rcs_values_m2: vec![0.1, 1.0, 10.0],
            trace_configs: vec![
                TraceConfig { rcs_m2: 0.1, clutter_count: 2 },
                TraceConfig { rcs_m2: 1.0, clutter_count: 2 },
                TraceConfig { rcs_m2: 0.1, clutter_count: 4 },
                TraceConfig { rcs_m2: 1.0, clutter_count: 4 },
            ],
            solver: SolverConfig::default(),
            dinkelbach: DinkelbachConfig::default(),
            random_max_tries: DEFAULT_MAX_TRIES,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials_per_point == 0 {
            return Err(Error::param("trials_per_point", "must be at least 1"));
        }
        if self.random_max_tries == 0 {
            return Err(Error::param("random_max_tries", "must be at least 1"));
        }
        if self.kind == SweepKind::ConvergenceTrace {
            if self.trace_configs.is_empty() {
                return Err(Error::param("trace_configs", "must not be empty"));
            }
        } else {
            if self.sweep_values.is_empty() {
                return Err(Error::param("sweep_values", "must not be empty"));
            }
            if self.sweep_values.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::param("sweep_values", "must be strictly increasing"));
            }
            if self.sweep_values.iter().any(|v| !v.is_finite()) {
                return Err(Error::param("sweep_values", "must be finite"));
            }
            if self.schemes.is_empty() {
                return Err(Error::param("schemes", "must not be empty"));
            }
        }
        match self.kind {
            SweepKind::Qos | SweepKind::EeQos if self.sweep_values.iter().any(|&v| v < 0.0) => {
                Err(Error::param("sweep_values", "thresholds must be non-negative"))
            }
            SweepKind::Priority if self.sweep_values.iter().any(|&v| !(v > 0.0 && v < 1.0)) => {
                Err(Error::param("sweep_values", "priorities must lie in (0, 1)"))
            }
            SweepKind::Priority if self.qos_profiles_mbps.is_empty() => {
                Err(Error::param("qos_profiles_mbps", "must not be empty"))
            }
            SweepKind::RcsPower if self.rcs_values_m2.is_empty() => Err(Error::param("rcs_values_m2", "must not be empty")),
            _ => {
                self.solver.validate()?;
                self.dinkelbach.validate()
            }
        }
    }
}

/// Aggregate of one scheme at one sweep point, over its feasible trials.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub sweep_value: f64,
    /// Scheme label, with `@key=value;...` appended for secondary sweep axes.
    pub scheme: String,
    pub mean_objective_bps: f64,
    pub mean_ee_bps_per_w: f64,
    pub mean_tau: [f64; 3],
    pub mean_power_w: [f64; 3],
    /// `(I1, I2d, I2u, I3)`, bits/s.
    pub mean_rates_bps: [f64; 4],
    pub feasible_fraction: f64,
    /// Newton steps (solver schemes), outer iterations (Dinkelbach) or
    /// draws (random).
    pub mean_iters: f64,
    pub trials: usize,
    /// Standard errors of the means above (not written to CSV).
    pub sem: RowSem,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowSem {
    pub objective_bps: f64,
    pub ee_bps_per_w: f64,
    pub tau: [f64; 3],
    pub rates_bps: [f64; 4],
}

pub const CSV_HEADER: &str = "sweep_value,scheme,mean_objective_bps,mean_ee_bps_per_w,tau1,tau2,tau3,p1_w,p2_w,p3_w,i1_bps,i2d_bps,i2u_bps,i3_bps,feasible_fraction,mean_iters,trials";

/// Plain decimal with 9 significant digits.
pub fn format_sig(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp >= 8 {
        let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
        let sign = if v < 0.0 { "-" } else { "" };
        let zeros = "0".repeat((exp - 8) as usize);
        format!("{sign}{digits}{zeros}")
    } else {
        let rounded: f64 = sci.parse().expect("valid float");
        format!("{:.*}", (8 - exp) as usize, rounded)
    }
}

impl SweepRow {
    pub fn csv_line(&self) -> String {
        let mut fields = vec![format_sig(self.sweep_value), self.scheme.clone()];
        fields.push(format_sig(self.mean_objective_bps));
        fields.push(format_sig(self.mean_ee_bps_per_w));
        fields.extend(self.mean_tau.iter().map(|&v| format_sig(v)));
        fields.extend(self.mean_power_w.iter().map(|&v| format_sig(v)));
        fields.extend(self.mean_rates_bps.iter().map(|&v| format_sig(v)));
        fields.push(format_sig(self.feasible_fraction));
        fields.push(format_sig(self.mean_iters));
        fields.push(self.trials.to_string());
        fields.join(",")
    }
}

pub fn write_csv<W: Write>(rows: &[SweepRow], mut out: W) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.csv_line())?;
    }
    Ok(())
}

/// Mean Dinkelbach progress at one outer iteration of one trace setting.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub rcs_m2: f64,
    pub clutter_count: usize,
    pub iteration: usize,
    pub mean_eta_bps_per_w: f64,
    pub mean_f_value_bps: f64,
    /// Trials that reached this iteration.
    pub trials: usize,
}

pub const TRACE_CSV_HEADER: &str = "rcs_m2,clutter_count,iteration,mean_eta_bps_per_w,mean_f_value_bps,trials";

pub fn write_trace_csv<W: Write>(rows: &[TraceRow], mut out: W) -> Result<()> {
    writeln!(out, "{TRACE_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            format_sig(r.rcs_m2),
            r.clutter_count,
            r.iteration,
            format_sig(r.mean_eta_bps_per_w),
            format_sig(r.mean_f_value_bps),
            r.trials
        )?;
    }
    Ok(())
}

/// Seed of trial `t`, shared by every sweep point and scheme.
pub fn trial_seed(base_seed: u64, trial: usize) -> u64 {
    base_seed.wrapping_add(trial as u64)
}

/// Outcome of one scheme on one drop.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Sample {
    objective: f64,
    ee: f64,
    alloc: Allocation,
    rates: [f64; 4],
    iters: f64,
}

fn sample_of(inst: &Instance, alloc: Allocation, iters: usize, ee: Option<f64>) -> Result<Sample> {
    Ok(Sample {
        objective: aggregate_objective(&alloc, &inst.coeffs, &inst.params)?,
        ee: match ee {
            Some(v) => v,
            None => ee_value(&alloc, &inst.coeffs, &inst.params)?,
        },
        rates: stream_rates(&alloc, &inst.coeffs, &inst.params)?.as_array(),
        alloc,
        iters: iters as f64,
    })
}

fn from_report(inst: &Instance, rep: SolveReport) -> Result<Option<Sample>> {
    if !rep.is_optimal() {
        return Ok(None);
    }
    sample_of(inst, rep.allocation, rep.iterations, None).map(Some)
}

fn run_scheme(scheme: Scheme, inst: &Instance, spec: &SweepSpec, seed: u64) -> Result<Option<Sample>> {
    let cfg = &spec.solver;
    match scheme {
        Scheme::Joint => from_report(inst, solve_sum_mi_rate(inst, cfg)?),
        Scheme::SpEpa => from_report(inst, sp_epa(inst, cfg)?),
        Scheme::PaEsp => from_report(inst, pa_esp(inst, cfg)?),
        Scheme::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(1);
            let draw = random_feasible(inst, &mut rng, spec.random_max_tries)?;
            match draw.allocation {
                Some(a) => sample_of(inst, a, draw.draws, None).map(Some),
                None => Ok(None),
            }
        }
        Scheme::DinkelbachEe => {
            let sol = maximize_ee(inst, cfg, &spec.dinkelbach)?;
            if sol.status != EeStatus::Converged {
                return Ok(None);
            }
            sample_of(inst, sol.report.allocation, sol.iterations(), Some(sol.eta_star)).map(Some)
        }
    }
}

fn instance(params: &SystemParams, seed: u64) -> Result<Instance> {
    let scn = sample_scenario_seeded(params, seed)?;
    Instance::new(build_link_coefficients(&scn, params)?, params.clone())
}

/// One sweep point: parameters, x value and label suffix.
struct Point {
    value: f64,
    params: SystemParams,
    suffix: String,
}

fn aggregate(point: &Point, scheme: Scheme, samples: &[Option<Sample>]) -> SweepRow {
    let ok: Vec<&Sample> = samples.iter().flatten().collect();
    let n = ok.len() as f64;
    let mean = |f: &dyn Fn(&Sample) -> f64| {
        if ok.is_empty() {
            f64::NAN
        } else {
            ok.iter().map(|s| f(s)).sum::<f64>() / n
        }
    };
    let sem = |f: &dyn Fn(&Sample) -> f64| {
        if ok.len() < 2 {
            return f64::NAN;
        }
        let m = mean(f);
        let var = ok.iter().map(|s| (f(s) - m).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    };
    SweepRow {
        sweep_value: point.value,
        scheme: format!("{}{}", scheme.label(), point.suffix),
        mean_objective_bps: mean(&|s| s.objective),
        mean_ee_bps_per_w: mean(&|s| s.ee),
        mean_tau: std::array::from_fn(|i| mean(&|s| s.alloc.tau[i])),
        mean_power_w: std::array::from_fn(|i| mean(&|s| s.alloc.power[i])),
        mean_rates_bps: std::array::from_fn(|i| mean(&|s| s.rates[i])),
        feasible_fraction: n / samples.len() as f64,
        mean_iters: mean(&|s| s.iters),
        trials: samples.len(),
        sem: RowSem {
            objective_bps: sem(&|s| s.objective),
            ee_bps_per_w: sem(&|s| s.ee),
            tau: std::array::from_fn(|i| sem(&|s| s.alloc.tau[i])),
            rates_bps: std::array::from_fn(|i| sem(&|s| s.rates[i])),
        },
    }
}

fn run_points(points: &[Point], spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    for p in points {
        p.params.validate()?;
    }
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|k| (0..spec.trials_per_point).map(move |t| (k, t)))
        .collect();
    let results: Vec<Vec<Option<Sample>>> = jobs
        .par_iter()
        .map(|&(k, t)| {
            let seed = trial_seed(spec.base_seed, t);
            let inst = instance(&points[k].params, seed)?;
            spec.schemes.iter().map(|&s| run_scheme(s, &inst, spec, seed)).collect()
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(points.len() * spec.schemes.len());
    for (k, point) in points.iter().enumerate() {
        let block = &results[k * spec.trials_per_point..(k + 1) * spec.trials_per_point];
        for (j, &scheme) in spec.schemes.iter().enumerate() {
            let samples: Vec<Option<Sample>> = block.iter().map(|r| r[j]).collect();
            rows.push(aggregate(point, scheme, &samples));
        }
    }
    Ok(rows)
}

fn qos_points(params: &SystemParams, spec: &SweepSpec) -> Vec<Point> {
    spec.sweep_values
        .iter()
        .map(|&v| Point {
            value: v,
            params: SystemParams {
                qos_sensing_bps: v * MBPS,
                qos_comm_bps: v * MBPS,
                ..params.clone()
            },
            suffix: String::new(),
        })
        .collect()
}

/// Sweeps `Rr = Rc`; one row per (threshold, scheme).
pub fn run_qos_sweep(params: &SystemParams, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    run_points(&qos_points(params, spec), spec)
}

/// Sweeps the ISaC priority for each QoS profile. Rows are grouped by
/// profile; labels carry the profile and the resulting `G1`, `G3`.
pub fn run_priority_sweep(params: &SystemParams, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let mut points = Vec::new();
    for &(rr, rc) in &spec.qos_profiles_mbps {
        for &g2 in &spec.sweep_values {
            let side = (1.0 - g2) / 2.0;
            points.push(Point {
                value: g2,
                params: SystemParams {
                    qos_sensing_bps: rr * MBPS,
                    qos_comm_bps: rc * MBPS,
                    priorities: [side, g2, side],
                    ..params.clone()
                },
                suffix: format!(
                    "@rr_mbps={};rc_mbps={};gamma1={};gamma3={}",
                    format_sig(rr),
                    format_sig(rc),
                    format_sig(side),
                    format_sig(side)
                ),
            });
        }
    }
    run_points(&points, spec)
}

/// Sweeps `P_max` (dBm) for each RCS value; rows grouped by RCS.
pub fn run_rcs_power_sweep(params: &SystemParams, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let mut points = Vec::new();
    for &rcs in &spec.rcs_values_m2 {
        for &dbm in &spec.sweep_values {
            points.push(Point {
                value: dbm,
                params: SystemParams {
                    p_max_w: dbm_to_watts(dbm),
                    rcs_m2: rcs,
                    ..params.clone()
                },
                suffix: format!("@rcs_m2={}", format_sig(rcs)),
            });
        }
    }
    run_points(&points, spec)
}

/// Mean EE per scheme at each `Rr = Rc`.
pub fn run_ee_sweep(params: &SystemParams, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    run_points(&qos_points(params, spec), spec)
}

/// Clutter gains used by a trace setting with `count` scatterers.
pub fn trace_clutter_gains(count: usize) -> Vec<f64> {
    (0..count).map(|j| 0.01 * 10f64.powi(-(j as i32))).collect()
}

/// Dinkelbach traces averaged over trials, per trace setting and iteration.
pub fn run_trace_sweep(params: &SystemParams, spec: &SweepSpec) -> Result<Vec<TraceRow>> {
    let spec_checked = SweepSpec {
        kind: SweepKind::ConvergenceTrace,
        ..spec.clone()
    };
    spec_checked.validate()?;
    let settings: Vec<SystemParams> = spec
        .trace_configs
        .iter()
        .map(|c| SystemParams {
            rcs_m2: c.rcs_m2,
            clutter_gains: trace_clutter_gains(c.clutter_count),
            clutter_distances_m: None,
            ..params.clone()
        })
        .collect();
    for p in &settings {
        p.validate()?;
    }
    let jobs: Vec<(usize, usize)> = (0..settings.len())
        .flat_map(|k| (0..spec.trials_per_point).map(move |t| (k, t)))
        .collect();
    let traces: Vec<Option<Vec<(f64, f64)>>> = jobs
        .par_iter()
        .map(|&(k, t)| {
            let inst = instance(&settings[k], trial_seed(spec.base_seed, t))?;
            let sol = maximize_ee(&inst, &spec.solver, &spec.dinkelbach)?;
            Ok((sol.status == EeStatus::Converged)
                .then(|| sol.trace.records.iter().map(|r| (r.eta, r.f_value)).collect()))
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (k, cfg) in spec.trace_configs.iter().enumerate() {
        let block: Vec<&Vec<(f64, f64)>> = traces[k * spec.trials_per_point..(k + 1) * spec.trials_per_point]
            .iter()
            .flatten()
            .collect();
        let longest = block.iter().map(|t| t.len()).max().unwrap_or(0);
        for j in 0..longest {
            let reached: Vec<(f64, f64)> = block.iter().filter_map(|t| t.get(j).copied()).collect();
            let n = reached.len() as f64;
            rows.push(TraceRow {
                rcs_m2: cfg.rcs_m2,
                clutter_count: cfg.clutter_count,
                iteration: j,
                mean_eta_bps_per_w: reached.iter().map(|r| r.0).sum::<f64>() / n,
                mean_f_value_bps: reached.iter().map(|r| r.1).sum::<f64>() / n,
                trials: reached.len(),
            });
        }
    }
    Ok(rows)
}

/// EE sweep rows together with the convergence traces.
pub fn run_ee_suite(params: &SystemParams, spec: &SweepSpec) -> Result<(Vec<SweepRow>, Vec<TraceRow>)> {
    Ok((run_ee_sweep(params, spec)?, run_trace_sweep(params, spec)?))
}
