#![allow(dead_code)]

use rand::Rng;
use semi_isac::channel::{build_link_coefficients, sample_scenario_seeded, CleanStream, ClutterStream, LinkCoefficients, SystemParams};
use semi_isac::solver::{solve_sum_mi_rate, Instance, SolverConfig};

pub fn instance(params: &SystemParams, seed: u64) -> Instance {
    let scn = sample_scenario_seeded(params, seed).unwrap();
    Instance::new(build_link_coefficients(&scn, params).unwrap(), params.clone()).unwrap()
}

/// Seeds `0, 1, ...` whose drop has a QoS-feasible optimum, up to `count`.
pub fn feasible_instances(params: &SystemParams, count: usize) -> Vec<(u64, Instance)> {
    let cfg = SolverConfig::default();
    (0u64..)
        .map(|s| (s, instance(params, s)))
        .filter(|(_, i)| solve_sum_mi_rate(i, &cfg).unwrap().is_optimal())
        .take(count)
        .collect()
}

/// Which single stream of [`single_stream`] stays active.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stream {
    Sensing,
    IsacDown,
    IsacUp,
    Comm,
}

pub const STREAMS: [Stream; 4] = [Stream::Sensing, Stream::IsacDown, Stream::IsacUp, Stream::Comm];

/// Copy of `coeffs` with every stream but `keep` silenced.
pub fn single_stream(coeffs: &LinkCoefficients, keep: Stream) -> LinkCoefficients {
    let mute_c = |s: ClutterStream| ClutterStream { a: 0.0, ..s };
    let mute_d = |s: CleanStream| CleanStream { d: 0.0, ..s };
    LinkCoefficients {
        sensing: if keep == Stream::Sensing { coeffs.sensing } else { mute_c(coeffs.sensing) },
        isac_up: if keep == Stream::IsacUp { coeffs.isac_up } else { mute_c(coeffs.isac_up) },
        isac_down: if keep == Stream::IsacDown { coeffs.isac_down } else { mute_d(coeffs.isac_down) },
        comm: if keep == Stream::Comm { coeffs.comm } else { mute_d(coeffs.comm) },
    }
}

/// Uniform point of the simplex with every entry at least `lo`.
pub fn interior_simplex<R: Rng>(rng: &mut R, lo: f64) -> [f64; 3] {
    loop {
        let e: [f64; 3] = std::array::from_fn(|_| -rng.random::<f64>().ln());
        let s: f64 = e.iter().sum();
        let p = e.map(|v| v / s);
        if p.iter().all(|&v| v >= lo) {
            return p;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dir {
    Increasing,
    Decreasing,
    NonDecreasing,
    NonIncreasing,
}

/// Least-squares nondecreasing fit by pool-adjacent-violators.
pub fn pava(y: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::new();
    for &v in y {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (m2, n2) = blocks[blocks.len() - 1];
            let (m1, n1) = blocks[blocks.len() - 2];
            if m1 <= m2 {
                break;
            }
            blocks.pop();
            let n = n1 + n2;
            *blocks.last_mut().unwrap() = ((m1 * n1 as f64 + m2 * n2 as f64) / n as f64, n);
        }
    }
    blocks.into_iter().flat_map(|(m, n)| std::iter::repeat_n(m, n)).collect()
}

fn sse(y: &[f64], fit: &[f64]) -> f64 {
    y.iter().zip(fit).map(|(a, b)| (a - b).powi(2)).sum()
}

/// Isotonic sign check of sweep-point means against a claimed direction.
///
/// Strict directions need the isotonic fit in the claimed direction to beat
/// the opposite fit. Every direction rejects a step against the claim larger
/// than two standard errors of the difference (floored at `1e-6` of the
/// largest mean, the solver's accuracy); the non-strict ones also reject an
/// end-to-end move against the claim of that size.
pub fn trend(means: &[f64], sems: &[f64], dir: Dir) -> (bool, String) {
    if means.iter().chain(sems).any(|v| !v.is_finite()) || means.len() < 2 {
        return (false, format!("undefined means {means:?}"));
    }
    let sign = match dir {
        Dir::Increasing | Dir::NonDecreasing => 1.0,
        _ => -1.0,
    };
    let y: Vec<f64> = means.iter().map(|m| sign * m).collect();
    let up = pava(&y);
    let neg: Vec<f64> = y.iter().map(|v| -v).collect();
    let down: Vec<f64> = pava(&neg).into_iter().map(|v| -v).collect();
    let (sse_claim, sse_other) = (sse(&y, &up), sse(&y, &down));
    let floor = 1e-6 * y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let se = |i: usize, j: usize| (2.0 * (sems[i].powi(2) + sems[j].powi(2)).sqrt()).max(floor);
    let worst_step = (0..y.len() - 1)
        .map(|i| (y[i] - y[i + 1]) / se(i, i + 1))
        .fold(f64::NEG_INFINITY, f64::max);
    let n = y.len() - 1;
    let end_ok = y[n] - y[0] >= -se(0, n);
    let strict = matches!(dir, Dir::Increasing | Dir::Decreasing);
    let ok = worst_step <= 1.0 && if strict { sse_claim < sse_other } else { end_ok };
    let detail = format!(
        "{dir:?}: worst step {:.2} x 2se, sse claim/opposite {:.3e}/{:.3e}",
        worst_step, sse_claim, sse_other
    );
    (ok, detail)
}
