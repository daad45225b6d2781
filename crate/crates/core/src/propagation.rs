//! Deterministic propagation: element pattern, free-space and radar-range
//! link budgets, the close-in (CI) path loss model and 5G LOS probabilities.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Band, Environment};

/// Exponent of the cosine-power element pattern; puts the broadside gain at
/// 2(2q+1) = 3.14, i.e. about 5 dBi.
pub const PATTERN_EXPONENT: f64 = 0.285;

/// Link-budget constants shared by the deterministic models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudgetParams {
    pub tx_power_w: f64,
    pub tx_gain: f64,
    pub rx_gain: f64,
    pub element_gain_max: f64,
    /// Re-radiation efficiency of an RIS element, applied once per reflection.
    pub efficiency: f64,
    pub wavelength: f64,
}

impl LinkBudgetParams {
    pub fn for_band(band: Band) -> Self {
        Self {
            tx_power_w: 1.0,
            tx_gain: 1.0,
            rx_gain: 1.0,
            element_gain_max: PI,
            efficiency: 1.0,
            wavelength: band.wavelength(),
        }
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tx_power_w", self.tx_power_w),
            ("tx_gain", self.tx_gain),
            ("rx_gain", self.rx_gain),
            ("element_gain_max", self.element_gain_max),
            ("wavelength", self.wavelength),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("{v} must be positive")));
            }
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(Error::invalid(
                "efficiency",
                format!("{} must lie in (0, 1]", self.efficiency),
            ));
        }
        Ok(())
    }
}

/// Scattering description of a single element or object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RcsParams {
    pub area: f64,
    pub effective_aperture: f64,
    pub sigma: f64,
}

impl RcsParams {
    /// Plate of physical area `area`, with `A_e = A`.
    pub fn from_area(area: f64, wavelength: f64) -> Self {
        Self {
            area,
            effective_aperture: area,
            sigma: rcs_from_area(area, wavelength),
        }
    }

    /// Isotropic-equivalent scatterer of gain `gain`.
    pub fn from_gain(gain: f64, wavelength: f64) -> Self {
        let aperture = gain * wavelength * wavelength / (4.0 * PI);
        Self {
            area: aperture,
            effective_aperture: aperture,
            sigma: rcs_from_gain(gain, wavelength),
        }
    }
}

/// Cosine-power RIS element pattern, `2(2q+1) cos^{2q}(θ)`; zero past grazing.
pub fn element_pattern_gain(theta: f64) -> f64 {
    if theta.abs() >= PI / 2.0 {
        return 0.0;
    }
    2.0 * (2.0 * PATTERN_EXPONENT + 1.0) * theta.cos().powf(2.0 * PATTERN_EXPONENT)
}

fn check_distance(name: &'static str, d: f64) -> Result<()> {
    if d.is_finite() && d > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("distance {d} m must be positive")))
    }
}

/// Power captured by one element at distance `a_n` from the Tx.
pub fn captured_power_at_element(p: &LinkBudgetParams, a_n: f64, ge_tx: f64) -> Result<f64> {
    check_distance("a_n", a_n)?;
    let lambda = p.wavelength;
    Ok(p.tx_power_w * p.tx_gain * ge_tx * lambda * lambda / ((4.0 * PI).powi(2) * a_n * a_n))
}

/// Power at the Rx after the Tx → element → Rx hop pair.
pub fn two_hop_received_power(p: &LinkBudgetParams, a_n: f64, b_n: f64, ge_tx: f64, ge_rx: f64) -> Result<f64> {
    check_distance("a_n", a_n)?;
    check_distance("b_n", b_n)?;
    let l2 = p.wavelength * p.wavelength;
    Ok(
        p.efficiency * p.tx_power_w * p.tx_gain * p.rx_gain * ge_tx * ge_rx * l2 * l2
            / ((4.0 * PI).powi(4) * a_n * a_n * b_n * b_n),
    )
}

/// Bistatic radar range equation.
pub fn radar_range_power(p: &LinkBudgetParams, a_n: f64, b_n: f64, sigma: f64) -> Result<f64> {
    check_distance("a_n", a_n)?;
    check_distance("b_n", b_n)?;
    if !(sigma >= 0.0) {
        return Err(Error::invalid("sigma", format!("{sigma} must be non-negative")));
    }
    Ok(
        p.efficiency * p.tx_power_w * p.tx_gain * p.rx_gain * p.wavelength * p.wavelength * sigma
            / ((4.0 * PI).powi(3) * a_n * a_n * b_n * b_n),
    )
}

pub fn rcs_from_gain(gain: f64, wavelength: f64) -> f64 {
    wavelength * wavelength * gain * gain / (4.0 * PI)
}

pub fn rcs_from_area(area: f64, wavelength: f64) -> f64 {
    4.0 * PI * area * area / (wavelength * wavelength)
}

/// End-to-end gain of a scattering path is the product of its hops.
pub fn cascaded_path_gain(l1: f64, l2: f64) -> f64 {
    l1 * l2
}

/// Free-space gain `λ² / (4π d)²`.
pub fn friis_gain(wavelength: f64, d: f64) -> f64 {
    let r = wavelength / (4.0 * PI * d);
    r * r
}

/// Exponent and shadow-fading spread of one propagation state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossState {
    pub exponent: f64,
    pub shadow_std_db: f64,
}

/// Close-in free-space reference distance model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossModel {
    pub environment: Environment,
    pub band: Band,
    pub los: PathLossState,
    pub nlos: PathLossState,
    pub reference_distance: f64,
}

impl PathLossModel {
    /// Simulator defaults; the same exponents serve both bands since the
    /// frequency dependence sits in the 1 m free-space term.
    pub fn default_for(environment: Environment, band: Band) -> Self {
        let (los, nlos) = match environment {
            Environment::InH => (
                PathLossState {
                    exponent: 1.73,
                    shadow_std_db: 3.02,
                },
                PathLossState {
                    exponent: 3.19,
                    shadow_std_db: 8.29,
                },
            ),
            Environment::UMi => (
                PathLossState {
                    exponent: 2.0,
                    shadow_std_db: 4.0,
                },
                PathLossState {
                    exponent: 3.2,
                    shadow_std_db: 7.0,
                },
            ),
        };
        Self {
            environment,
            band,
            los,
            nlos,
            reference_distance: 1.0,
        }
    }

    pub fn state(&self, los: bool) -> PathLossState {
        if los {
            self.los
        } else {
            self.nlos
        }
    }

    pub fn wavelength(&self) -> f64 {
        self.band.wavelength()
    }
}

/// CI path loss in dB.
pub fn ci_path_loss_db(model: &PathLossModel, d: f64, los: bool, shadow_db: f64) -> Result<f64> {
    let d0 = model.reference_distance;
    if !(d >= d0) {
        return Err(Error::DistanceTooSmall {
            distance: d,
            minimum: d0,
        });
    }
    let fspl_d0 = 20.0 * (4.0 * PI * d0 / model.wavelength()).log10();
    Ok(fspl_d0 + 10.0 * model.state(los).exponent * (d / d0).log10() + shadow_db)
}

/// CI path loss as a linear attenuation `L = 10^(-PL/10)`.
pub fn ci_path_loss(model: &PathLossModel, d: f64, los: bool, shadow_db: f64) -> Result<f64> {
    Ok(10f64.powf(-ci_path_loss_db(model, d, los, shadow_db)? / 10.0))
}

/// LOS probability at 3D separation `d`. A RIS mounted at or above the
/// environment's forced-LOS height always sees its links in LOS.
pub fn los_probability(environment: Environment, d: f64, ris_height: Option<f64>) -> f64 {
    if let Some(h) = ris_height {
        if h >= environment.forced_los_ris_height() {
            return 1.0;
        }
    }
    match environment {
        Environment::InH => {
            if d <= 1.2 {
                1.0
            } else if d <= 6.5 {
                (-(d - 1.2) / 4.7).exp()
            } else {
                0.32 * (-(d - 6.5) / 32.9).exp()
            }
        }
        Environment::UMi => {
            let e = (-d / 39.0).exp();
            (20.0 / d).min(1.0) * (1.0 - e) + e
        }
    }
}

pub fn sample_los_indicator<R: Rng + ?Sized>(rng: &mut R, p: f64) -> bool {
    rng.random::<f64>() < p
}

/// Log-normal shadowing in dB, clamped to ±3σ.
pub fn sample_shadowing_db<R: Rng + ?Sized>(rng: &mut R, std_db: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    (z * std_db).clamp(-3.0 * std_db, 3.0 * std_db)
}
