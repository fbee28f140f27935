//! Deployment geometry, Nakagami-m fading and the reduction of one drop to
//! the link coefficients used by every rate expression.
//!
//! Path-loss models:
//!
//! * communication (one way): `G_tx d^-alpha_c c^2 / (4 pi f_c)^2`
//! * radar echo (two way): `G_tx d^-2alpha_r sigma_rcs lambda^2 / (4 pi)^3`
//!
//! After multiplying numerator and denominator of each SNR/SCNR by the
//! constant denominator of its path-loss model, every ratio takes one of two
//! shapes in the allocation variables `(tau, P)`:
//!
//! * clutter-limited echo: `a P / (b P + c tau)`
//! * clean downlink: `d P / (e tau)`

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::units::{dbm_to_watts, BOLTZMANN, GHZ, MBPS, MHZ, SPEED_OF_LIGHT};

/// Physical and deployment parameters of the semi-ISaC cell, SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    pub bandwidth_hz: f64,
    pub carrier_hz: f64,
    pub temperature_k: f64,
    /// Radar cross section of the target (and of every clutter), m^2.
    pub rcs_m2: f64,
    pub ple_comm: f64,
    pub ple_radar: f64,
    /// Linear transmit antenna gain.
    pub tx_gain: f64,
    pub p_max_w: f64,
    pub circuit_power_w: f64,
    pub qos_sensing_bps: f64,
    pub qos_comm_bps: f64,
    /// Priorities of the sensing-only, ISaC and communication-only services.
    pub priorities: [f64; 3],
    /// Cascaded clutter power gains `|zeta_j|^2`; the clutter count is the length.
    pub clutter_gains: Vec<f64>,
    /// Fixed clutter distances. `None` samples them area-uniformly per drop.
    pub clutter_distances_m: Option<Vec<f64>>,
    pub nakagami_m: f64,
    pub cell_radius_m: f64,
    pub min_distance_m: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams {
            bandwidth_hz: 100.0 * MHZ,
            carrier_hz: 10.0 * GHZ,
            temperature_k: 724.0,
            rcs_m2: 0.1,
            ple_comm: 2.5,
            ple_radar: 2.5,
            tx_gain: 10.0,
            p_max_w: dbm_to_watts(46.0),
            circuit_power_w: dbm_to_watts(33.0),
            qos_sensing_bps: 5.0 * MBPS,
            qos_comm_bps: 20.0 * MBPS,
            priorities: [1.0 / 3.0; 3],
            clutter_gains: vec![0.01, 0.001],
            clutter_distances_m: None,
            nakagami_m: 3.0,
            cell_radius_m: 40.0,
            min_distance_m: 1.0,
        }
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(field, format!("must be positive and finite, got {v}")))
    }
}

fn nonnegative(field: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(field, format!("must be non-negative and finite, got {v}")))
    }
}

impl SystemParams {
    pub fn clutter_count(&self) -> usize {
        self.clutter_gains.len()
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    /// Thermal noise power over the full band, `k_B T W`.
    pub fn noise_power_full_band_w(&self) -> f64 {
        BOLTZMANN * self.temperature_k * self.bandwidth_hz
    }

    pub fn validate(&self) -> Result<()> {
        positive("bandwidth_hz", self.bandwidth_hz)?;
        positive("carrier_hz", self.carrier_hz)?;
        positive("temperature_k", self.temperature_k)?;
        positive("rcs_m2", self.rcs_m2)?;
        positive("ple_comm", self.ple_comm)?;
        positive("ple_radar", self.ple_radar)?;
        positive("tx_gain", self.tx_gain)?;
        positive("p_max_w", self.p_max_w)?;
        positive("circuit_power_w", self.circuit_power_w)?;
        nonnegative("qos_sensing_bps", self.qos_sensing_bps)?;
        nonnegative("qos_comm_bps", self.qos_comm_bps)?;
        for (i, &g) in self.priorities.iter().enumerate() {
            nonnegative(&format!("priorities[{i}]"), g)?;
        }
        for (j, &z) in self.clutter_gains.iter().enumerate() {
            nonnegative(&format!("clutter_gains[{j}]"), z)?;
        }
        if self.nakagami_m < 0.5 || !self.nakagami_m.is_finite() {
            return Err(Error::param(
                "nakagami_m",
                format!("must be at least 0.5, got {}", self.nakagami_m),
            ));
        }
        positive("min_distance_m", self.min_distance_m)?;
        if !(self.min_distance_m < self.cell_radius_m) || !self.cell_radius_m.is_finite() {
            return Err(Error::param(
                "cell_radius_m",
                format!(
                    "must exceed min_distance_m ({}), got {}",
                    self.min_distance_m, self.cell_radius_m
                ),
            ));
        }
        if let Some(ds) = &self.clutter_distances_m {
            if ds.len() != self.clutter_count() {
                return Err(Error::param(
                    "clutter_distances_m",
                    format!(
                        "has {} entries but there are {} clutter gains",
                        ds.len(),
                        self.clutter_count()
                    ),
                ));
            }
            for (j, &d) in ds.iter().enumerate() {
                if !(d >= self.min_distance_m && d <= self.cell_radius_m) {
                    return Err(Error::param(
                        format!("clutter_distances_m[{j}]"),
                        format!(
                            "must lie in [{}, {}], got {d}",
                            self.min_distance_m, self.cell_radius_m
                        ),
                    ));
                }
            }
        }
        Ok(())
    }
}

fn check_distance(dist: f64, params: &SystemParams) -> Result<()> {
    if dist >= params.min_distance_m && dist.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "distance {dist} m is below the minimum {} m",
            params.min_distance_m
        )))
    }
}

/// One-way communication path gain `G_tx d^-alpha_c c^2 / (4 pi f_c)^2`.
pub fn comm_path_loss(dist: f64, params: &SystemParams) -> Result<f64> {
    check_distance(dist, params)?;
    let denom = 4.0 * PI * params.carrier_hz;
    Ok(params.tx_gain * dist.powf(-params.ple_comm) * SPEED_OF_LIGHT * SPEED_OF_LIGHT
        / (denom * denom))
}

/// Two-way radar path gain `G_tx d^-2alpha_r sigma lambda^2 / (4 pi)^3`.
pub fn radar_path_loss(dist: f64, params: &SystemParams) -> Result<f64> {
    check_distance(dist, params)?;
    let lambda = params.wavelength_m();
    Ok(params.tx_gain * dist.powf(-2.0 * params.ple_radar) * params.rcs_m2 * lambda * lambda
        / (4.0 * PI).powi(3))
}

/// Squared Nakagami-m envelope: Gamma with shape `m` and mean `mean_omega`.
pub fn sample_nakagami_power<R: Rng + ?Sized>(m: f64, mean_omega: f64, rng: &mut R) -> Result<f64> {
    if !(m >= 0.5) || !m.is_finite() {
        return Err(Error::domain(format!("Nakagami m must be >= 0.5, got {m}")));
    }
    if !(mean_omega > 0.0) || !mean_omega.is_finite() {
        return Err(Error::domain(format!(
            "Nakagami spread must be positive, got {mean_omega}"
        )));
    }
    let gamma = Gamma::new(m, mean_omega / m).map_err(|e| Error::domain(e.to_string()))?;
    Ok(gamma.sample(rng))
}

/// One Monte Carlo drop: user, target and clutter distances plus fading.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRealization {
    pub dist_target_m: f64,
    pub dist_isac_m: f64,
    pub dist_comm_m: f64,
    pub dist_clutter_m: Vec<f64>,
    /// Cascaded `|h_1d|^2 |h_1u|^2`.
    pub gain_g1: f64,
    pub gain_h2d: f64,
    pub gain_h2u: f64,
    /// Cascaded `|h_2d|^2 |h_2u|^2`, built from the same `h_2d` sample.
    pub gain_g2: f64,
    pub gain_h3: f64,
    /// Seed the drop was generated from, when known.
    pub seed: Option<u64>,
}

/// Radius of a point uniform on the annulus `[r_min, r_max]`.
fn area_uniform_radius<R: Rng + ?Sized>(r_min: f64, r_max: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    (r_min * r_min + u * (r_max * r_max - r_min * r_min)).sqrt()
}

/// Draws a drop. Draw order is fixed so equal RNG states give equal drops.
pub fn sample_scenario<R: Rng + ?Sized>(params: &SystemParams, rng: &mut R) -> Result<ScenarioRealization> {
    params.validate()?;
    let (r0, r1) = (params.min_distance_m, params.cell_radius_m);
    let dist_target_m = area_uniform_radius(r0, r1, rng);
    let dist_isac_m = area_uniform_radius(r0, r1, rng);
    let dist_comm_m = area_uniform_radius(r0, r1, rng);
    let dist_clutter_m = match &params.clutter_distances_m {
        Some(fixed) => fixed.clone(),
        None => (0..params.clutter_count())
            .map(|_| area_uniform_radius(r0, r1, rng))
            .collect(),
    };

    let m = params.nakagami_m;
    let h1d = sample_nakagami_power(m, 1.0, rng)?;
    let h1u = sample_nakagami_power(m, 1.0, rng)?;
    let h2d = sample_nakagami_power(m, 1.0, rng)?;
    let h2u = sample_nakagami_power(m, 1.0, rng)?;
    let h3 = sample_nakagami_power(m, 1.0, rng)?;

    Ok(ScenarioRealization {
        dist_target_m,
        dist_isac_m,
        dist_comm_m,
        dist_clutter_m,
        gain_g1: h1d * h1u,
        gain_h2d: h2d,
        gain_h2u: h2u,
        gain_g2: h2d * h2u,
        gain_h3: h3,
        seed: None,
    })
}

/// Drop generated from a dedicated ChaCha8 stream seeded with `seed`.
pub fn sample_scenario_seeded(params: &SystemParams, seed: u64) -> Result<ScenarioRealization> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scn = sample_scenario(params, &mut rng)?;
    scn.seed = Some(seed);
    Ok(scn)
}

/// Clutter-limited stream: `SCNR = a P / (b P + c tau)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClutterStream {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl ClutterStream {
    pub fn ratio(&self, tau: f64, power: f64) -> f64 {
        self.a * power / (self.b * power + self.c * tau)
    }
}

/// Interference-free stream: `SNR = d P / (e tau)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CleanStream {
    pub d: f64,
    pub e: f64,
}

impl CleanStream {
    pub fn ratio(&self, tau: f64, power: f64) -> f64 {
        self.d * power / (self.e * tau)
    }
}

/// Reduced constants of one drop; every rate is a function of `(tau, P)` only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkCoefficients {
    pub sensing: ClutterStream,
    pub isac_up: ClutterStream,
    pub isac_down: CleanStream,
    pub comm: CleanStream,
}

pub fn build_link_coefficients(scn: &ScenarioRealization, params: &SystemParams) -> Result<LinkCoefficients> {
    params.validate()?;
    if scn.dist_clutter_m.len() != params.clutter_count() {
        return Err(Error::domain(format!(
            "drop has {} clutter distances but {} clutter gains are configured",
            scn.dist_clutter_m.len(),
            params.clutter_count()
        )));
    }
    let radar_const = (4.0 * PI).powi(3);
    let comm_const = (4.0 * PI * params.carrier_hz).powi(2);
    let echo = |dist: f64| radar_path_loss(dist, params).map(|l| l * radar_const);
    let downlink = |dist: f64| comm_path_loss(dist, params).map(|l| l * comm_const);

    let mut clutter = 0.0;
    for (&d, &zeta) in scn.dist_clutter_m.iter().zip(&params.clutter_gains) {
        clutter += echo(d)? * zeta;
    }
    let noise = params.noise_power_full_band_w();

    Ok(LinkCoefficients {
        sensing: ClutterStream {
            a: echo(scn.dist_target_m)? * scn.gain_g1,
            b: clutter,
            c: radar_const * noise,
        },
        isac_up: ClutterStream {
            a: echo(scn.dist_isac_m)? * scn.gain_g2,
            b: clutter,
            c: radar_const * noise,
        },
        isac_down: CleanStream {
            d: downlink(scn.dist_isac_m)? * scn.gain_h2d,
            e: comm_const * noise,
        },
        comm: CleanStream {
            d: downlink(scn.dist_comm_m)? * scn.gain_h3,
            e: comm_const * noise,
        },
    })
}
