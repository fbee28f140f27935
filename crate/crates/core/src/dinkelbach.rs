//! Energy-efficiency maximization by Dinkelbach's parametric method.
//!
//! EE is the weighted rate `A(P, tau)` over the consumed power
//! `B(P) = sum P + omega`. For a price `eta` the subproblem
//! `F(eta) = max A - eta B` is concave, and `eta* = max A / B` is the root of
//! `F`. Each outer iteration solves `F(eta_j)` and moves `eta` to the ratio
//! achieved by that solution.

use std::io::Write;

use crate::channel::{LinkCoefficients, SystemParams};
use crate::error::{Error, Result};
use crate::experiments::format_sig;
use crate::objective::{aggregate_objective, Allocation};
use crate::solver::{solve_structured, Instance, PowerMode, SolveReport, SolveStatus, SolverConfig, SpectrumMode};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DinkelbachConfig {
    /// Stop once `F(eta) <= delta`, bits/s. `None` uses `1e-6` times the
    /// weighted rate of the first subproblem's solution.
    pub delta_tolerance: Option<f64>,
    /// Cap on price updates.
    pub max_outer_iterations: usize,
    /// Starting price, bits/s/W.
    pub eta_initial: f64,
}

impl Default for DinkelbachConfig {
    fn default() -> Self {
        DinkelbachConfig {
            delta_tolerance: None,
            max_outer_iterations: 30,
            eta_initial: 0.0,
        }
    }
}

impl DinkelbachConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(d) = self.delta_tolerance {
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::param("delta_tolerance", format!("must be positive, got {d}")));
            }
        }
        if !(self.eta_initial >= 0.0) || !self.eta_initial.is_finite() {
            return Err(Error::param("eta_initial", format!("must be non-negative, got {}", self.eta_initial)));
        }
        if self.max_outer_iterations == 0 {
            return Err(Error::param("max_outer_iterations", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    /// Price the subproblem was solved at, bits/s/W.
    pub eta: f64,
    /// `F(eta)`, bits/s.
    pub f_value: f64,
    pub allocation: Allocation,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DinkelbachTrace {
    pub records: Vec<TraceRecord>,
}

impl DinkelbachTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Writes `iteration,eta,f_value` rows with a header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "iteration,eta_bps_per_w,f_value_bps")?;
        for (j, r) in self.records.iter().enumerate() {
            writeln!(out, "{},{},{}", j, format_sig(r.eta), format_sig(r.f_value))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EeStatus {
    Converged,
    Infeasible,
    /// Iteration cap reached, or a subproblem did not converge.
    NonConvergence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EeSolution {
    /// Report of the last subproblem solved.
    pub report: SolveReport,
    /// EE of `report.allocation`, bits/s/W.
    pub eta_star: f64,
    pub trace: DinkelbachTrace,
    pub status: EeStatus,
    pub delta: f64,
}

impl EeSolution {
    /// Price updates performed, i.e. the final `j` of the outer loop.
    pub fn iterations(&self) -> usize {
        self.trace.len().saturating_sub(1)
    }
}

/// `A / (sum P + omega)` in bits/s/W.
pub fn ee_value(alloc: &Allocation, coeffs: &LinkCoefficients, params: &SystemParams) -> Result<f64> {
    if !(params.circuit_power_w > 0.0) {
        return Err(Error::param("circuit_power_w", "must be positive"));
    }
    Ok(aggregate_objective(alloc, coeffs, params)? / (alloc.total_power() + params.circuit_power_w))
}

/// Solves `max A - eta (sum P + omega)`; the report's objective is `F(eta)`.
pub fn solve_f_eta(inst: &Instance, eta: f64, cfg: &SolverConfig) -> Result<SolveReport> {
    let power = if eta > 0.0 { PowerMode::Budget } else { PowerMode::FullBudget };
    solve_structured(inst, cfg, eta, SpectrumMode::Free, power)
}

pub fn maximize_ee(inst: &Instance, solver: &SolverConfig, cfg: &DinkelbachConfig) -> Result<EeSolution> {
    cfg.validate()?;
    let mut eta = cfg.eta_initial;
    let mut trace = DinkelbachTrace::default();
    let mut delta = cfg.delta_tolerance.unwrap_or(f64::NAN);
    loop {
        let report = solve_f_eta(inst, eta, solver)?;
        let stalled = |report: SolveReport, trace, delta, status| {
            let eta_star = ee_value(&report.allocation, &inst.coeffs, &inst.params)?;
            Ok(EeSolution {
                report,
                eta_star,
                trace,
                status,
                delta,
            })
        };
        match report.status {
            SolveStatus::Optimal => {}
            SolveStatus::Infeasible => return stalled(report, trace, delta, EeStatus::Infeasible),
            SolveStatus::MaxIterations => return stalled(report, trace, delta, EeStatus::NonConvergence),
        }
        let a = aggregate_objective(&report.allocation, &inst.coeffs, &inst.params)?;
        if delta.is_nan() {
            delta = 1e-6 * a.abs().max(f64::MIN_POSITIVE);
        }
        let f = report.objective_value;
        trace.records.push(TraceRecord {
            eta,
            f_value: f,
            allocation: report.allocation,
        });
        let next = a / (report.allocation.total_power() + inst.params.circuit_power_w);
        if f <= delta || next <= eta {
            return stalled(report, trace, delta, EeStatus::Converged);
        }
        if trace.len() > cfg.max_outer_iterations {
            return stalled(report, trace, delta, EeStatus::NonConvergence);
        }
        eta = next;
    }
}
