//! Benchmark schemes: spectrum-only optimization at equal power (SP-EPA),
//! power-only optimization at equal spectrum (PA-ESP) and random feasible
//! allocation (RA).

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::objective::{qos_slacks, Allocation};
use crate::solver::{solve_structured, Instance, PowerMode, SolveReport, SolverConfig, SpectrumMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaselineKind {
    SpEpa,
    PaEsp,
    Random,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 3] = [BaselineKind::SpEpa, BaselineKind::PaEsp, BaselineKind::Random];

    pub fn label(self) -> &'static str {
        match self {
            BaselineKind::SpEpa => "sp_epa",
            BaselineKind::PaEsp => "pa_esp",
            BaselineKind::Random => "random",
        }
    }
}

/// Draw budget of [`random_feasible`] used by the sweeps.
pub const DEFAULT_MAX_TRIES: usize = 10_000;

/// Optimizes `tau` with every power fixed at `P_max / 3`.
pub fn sp_epa(inst: &Instance, cfg: &SolverConfig) -> Result<SolveReport> {
    solve_structured(inst, cfg, 0.0, SpectrumMode::Free, PowerMode::Fixed([1.0 / 3.0; 3]))
}

/// Optimizes `P` with every bandwidth share fixed at `1 / 3`.
pub fn pa_esp(inst: &Instance, cfg: &SolverConfig) -> Result<SolveReport> {
    solve_structured(inst, cfg, 0.0, SpectrumMode::Fixed([1.0 / 3.0; 3]), PowerMode::FullBudget)
}

/// Uniform point of the open unit simplex.
fn simplex_point<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    let e: [f64; 3] = std::array::from_fn(|_| Exp1.sample(rng));
    let s: f64 = e.iter().sum();
    e.map(|v| v / s)
}

/// Result of [`random_feasible`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomDraw {
    /// First draw meeting every QoS constraint, if any.
    pub allocation: Option<Allocation>,
    /// Draws consumed.
    pub draws: usize,
}

/// Rejection sampling: `tau` uniform on the simplex, `P` uniform on the
/// `P_max`-simplex; returns the first draw meeting every QoS threshold.
pub fn random_feasible<R: Rng + ?Sized>(inst: &Instance, rng: &mut R, max_tries: usize) -> Result<RandomDraw> {
    inst.validate()?;
    if max_tries == 0 {
        return Err(Error::param("max_tries", "must be at least 1"));
    }
    let p_max = inst.params.p_max_w;
    for draw in 1..=max_tries {
        let tau = simplex_point(rng);
        let power = simplex_point(rng).map(|v| v * p_max);
        let alloc = Allocation { tau, power };
        // zero-probability corner draws fall outside the rate domain
        let Ok(slacks) = qos_slacks(&alloc, &inst.coeffs, &inst.params) else {
            continue;
        };
        if slacks.iter().all(|&s| s >= 0.0) {
            return Ok(RandomDraw {
                allocation: Some(alloc),
                draws: draw,
            });
        }
    }
    Ok(RandomDraw {
        allocation: None,
        draws: max_tries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{build_link_coefficients, sample_scenario_seeded, SystemParams};
    use crate::objective::aggregate_objective;
    use crate::solver::{solve_sum_mi_rate, SolveStatus};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn instance(seed: u64, params: SystemParams) -> Instance {
        let scn = sample_scenario_seeded(&params, seed).unwrap();
        Instance::new(build_link_coefficients(&scn, &params).unwrap(), params).unwrap()
    }

    /// Three identical clutter-free streams; the ISaC downlink carries nothing.
    fn symmetric() -> Instance {
        let mut inst = instance(0, SystemParams::default());
        let mut s = inst.coeffs.sensing;
        s.b = 0.0;
        inst.coeffs.sensing = s;
        inst.coeffs.isac_up = s;
        inst.coeffs.isac_down.d = 0.0;
        inst.coeffs.comm.d = s.a;
        inst.coeffs.comm.e = s.c;
        inst.params.qos_sensing_bps = 0.0;
        inst.params.qos_comm_bps = 0.0;
        inst
    }

    #[test]
    fn labels_are_distinct() {
        let labels: Vec<_> = BaselineKind::ALL.iter().map(|k| k.label()).collect();
        assert_eq!(labels, ["sp_epa", "pa_esp", "random"]);
    }

    #[test]
    fn restricted_schemes_never_beat_joint() {
        let cfg = SolverConfig::default();
        let mut checked = 0;
        for seed in 0..40 {
            let inst = instance(seed, SystemParams::default());
            let joint = solve_sum_mi_rate(&inst, &cfg).unwrap();
            if !joint.is_optimal() {
                continue;
            }
            let tol = 1e-6 * joint.objective_value;
            for rep in [sp_epa(&inst, &cfg).unwrap(), pa_esp(&inst, &cfg).unwrap()] {
                if rep.is_optimal() {
                    assert!(rep.objective_value <= joint.objective_value + tol);
                    checked += 1;
                }
            }
        }
        assert!(checked > 5);
    }

    #[test]
    fn sp_epa_keeps_equal_power() {
        let inst = instance(3, SystemParams::default());
        let rep = sp_epa(&inst, &SolverConfig::default()).unwrap();
        if rep.status != SolveStatus::Infeasible {
            for p in rep.allocation.power {
                assert!((p - inst.params.p_max_w / 3.0).abs() < 1e-12 * inst.params.p_max_w);
            }
        }
    }

    #[test]
    fn symmetric_instances_split_equally() {
        let inst = symmetric();
        let cfg = SolverConfig::default();
        let rep = sp_epa(&inst, &cfg).unwrap();
        assert!(rep.is_optimal());
        for t in rep.allocation.tau {
            assert!((t - 1.0 / 3.0).abs() < 1e-4, "{:?}", rep.allocation);
        }
        let rep = pa_esp(&inst, &cfg).unwrap();
        assert!(rep.is_optimal());
        for p in rep.allocation.power {
            assert!((p / inst.params.p_max_w - 1.0 / 3.0).abs() < 1e-4, "{:?}", rep.allocation);
        }
    }

    #[test]
    fn random_without_qos_accepts_first_draw() {
        let mut p = SystemParams::default();
        p.qos_sensing_bps = 0.0;
        p.qos_comm_bps = 0.0;
        let inst = instance(1, p);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let d = random_feasible(&inst, &mut rng, 10).unwrap();
        assert_eq!(d.draws, 1);
        assert!(d.allocation.is_some());
    }

    #[test]
    fn random_draws_meet_qos_and_stay_below_joint() {
        let cfg = SolverConfig::default();
        let inst = (0..)
            .map(|s| instance(s, SystemParams::default()))
            .find(|i| solve_sum_mi_rate(i, &cfg).unwrap().is_optimal())
            .unwrap();
        let joint = solve_sum_mi_rate(&inst, &cfg).unwrap().objective_value;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut total = 0.0;
        let mut n = 0;
        for _ in 0..1000 {
            if let Some(a) = random_feasible(&inst, &mut rng, 2000).unwrap().allocation {
                let s = qos_slacks(&a, &inst.coeffs, &inst.params).unwrap();
                assert!(s.iter().all(|&v| v >= 0.0));
                a.validate(&inst.params).unwrap();
                total += aggregate_objective(&a, &inst.coeffs, &inst.params).unwrap();
                n += 1;
            }
        }
        assert!(n > 0);
        assert!(total / n as f64 <= joint);
    }

    #[test]
    fn random_gives_up_on_unreachable_qos() {
        let mut p = SystemParams::default();
        p.qos_comm_bps = 1e12;
        let inst = instance(1, p);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = random_feasible(&inst, &mut rng, 50).unwrap();
        assert_eq!(d, RandomDraw { allocation: None, draws: 50 });
        assert!(random_feasible(&inst, &mut rng, 0).is_err());
    }
}
