//! Deterministic RIS link models: the pure-LOS cascade and the cascade with
//! interacting objects (IOs) between the Tx and the RIS.
//!
//! All distances are exact per-element distances, so these models double as
//! short-range oracles for the stochastic generator in [`crate::channel`].
//! Channel gains are normalized to unit transmit power.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::channel::{ChannelRealization, LosIndicators};
use crate::error::{Error, Result};
use crate::geometry::{distance, Point3, Scenario};
use crate::propagation::{friis_gain, rcs_from_gain, two_hop_received_power, LinkBudgetParams};
use crate::ris_control::RisPhaseProfile;

/// Scatterers between the Tx and the RIS.
#[derive(Debug, Clone, PartialEq)]
pub struct IoSet {
    positions: Vec<Point3>,
    rcs: Vec<f64>,
}

impl IoSet {
    pub fn new(positions: Vec<Point3>, rcs: Vec<f64>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::invalid("positions", "at least one IO is required"));
        }
        if positions.len() != rcs.len() {
            return Err(Error::DimensionMismatch {
                expected: positions.len(),
                actual: rcs.len(),
            });
        }
        if let Some(s) = rcs.iter().find(|s| !(**s >= 0.0)) {
            return Err(Error::invalid("rcs", format!("{s} must be non-negative")));
        }
        Ok(Self { positions, rcs })
    }

    /// IOs with the RCS of an isotropic (unit gain) scatterer.
    pub fn isotropic(positions: Vec<Point3>, wavelength: f64) -> Result<Self> {
        let rcs = vec![rcs_from_gain(1.0, wavelength); positions.len()];
        Self::new(positions, rcs)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Point3] {
        &self.positions
    }

    pub fn rcs(&self) -> &[f64] {
        &self.rcs
    }
}

fn nonzero(name: &'static str, d: f64) -> Result<f64> {
    if d > 0.0 && d.is_finite() {
        Ok(d)
    } else {
        Err(Error::invalid(name, format!("degenerate distance {d} m")))
    }
}

/// Direct Tx–Rx LOS coefficient `√(Gt Gr P_T-R) e^{-jk d}`.
fn direct_los(scn: &Scenario, p: &LinkBudgetParams) -> Result<Complex64> {
    let d = nonzero("d_T-R", scn.tx_rx_distance())?;
    let amp = (p.tx_gain * p.rx_gain * friis_gain(p.wavelength, d)).sqrt();
    Ok(Complex64::from_polar(amp, -p.wavenumber() * d))
}

/// Noise-free gain of the pure-LOS RIS link,
/// `Σ_n √P_n α_n e^{jφ_n} e^{-jk(a_n+b_n)}`, plus the direct path when present.
pub fn los_effective_gain(scn: &Scenario, p: &LinkBudgetParams, profile: &RisPhaseProfile) -> Result<Complex64> {
    let array = scn.array()?;
    if profile.len() != array.len() {
        return Err(Error::DimensionMismatch {
            expected: array.len(),
            actual: profile.len(),
        });
    }
    let k = p.wavenumber();
    let ge = p.element_gain_max;
    let mut y = Complex64::new(0.0, 0.0);
    for (&r, theta) in array.positions().iter().zip(profile.coefficients()) {
        let a = nonzero("a_n", distance(scn.tx, r))?;
        let b = nonzero("b_n", distance(r, scn.rx))?;
        let power = two_hop_received_power(p, a, b, ge, ge)? / p.tx_power_w;
        y += theta * Complex64::from_polar(power.sqrt(), -k * (a + b));
    }
    if scn.direct_link_present {
        y += direct_los(scn, p)?;
    }
    Ok(y)
}

/// The pure-LOS link in vector form: `h_n = √(Gt L_{n,1}) e^{-jk a_n}`,
/// `g_n = √(ε Gr L_{n,2}) e^{-jk b_n}` and the direct path as `h_siso`.
pub fn los_realization(scn: &Scenario, p: &LinkBudgetParams) -> Result<ChannelRealization> {
    let array = scn.array()?;
    let k = p.wavenumber();
    let hop = |d: f64| p.element_gain_max * friis_gain(p.wavelength, d);
    let mut h = Vec::with_capacity(array.len());
    let mut g = Vec::with_capacity(array.len());
    for &r in array.positions() {
        let a = nonzero("a_n", distance(scn.tx, r))?;
        let b = nonzero("b_n", distance(r, scn.rx))?;
        h.push(Complex64::from_polar((p.tx_gain * hop(a)).sqrt(), -k * a));
        g.push(Complex64::from_polar(
            (p.efficiency * p.rx_gain * hop(b)).sqrt(),
            -k * b,
        ));
    }
    let h_siso = if scn.direct_link_present {
        direct_los(scn, p)?
    } else {
        Complex64::new(0.0, 0.0)
    };
    Ok(ChannelRealization {
        h,
        g,
        h_siso,
        seed: 0,
        index: 0,
        los: LosIndicators {
            tx_ris: true,
            ris_rx: true,
            tx_rx: scn.direct_link_present,
        },
    })
}

/// Received power over Tx → IO `m` → element `n` → Rx.
pub fn io_cascade_power(p: &LinkBudgetParams, a_m: f64, b_mn: f64, c_n: f64, sigma_m: f64) -> Result<f64> {
    let a = nonzero("a_m", a_m)?;
    let b = nonzero("b_mn", b_mn)?;
    let c = nonzero("c_n", c_n)?;
    if !(sigma_m >= 0.0) {
        return Err(Error::invalid("sigma_m", format!("{sigma_m} must be non-negative")));
    }
    let ge = p.element_gain_max;
    let l2 = p.wavelength * p.wavelength;
    Ok(
        p.efficiency * p.tx_power_w * p.tx_gain * p.rx_gain * ge * ge * l2 * l2 * sigma_m
            / ((4.0 * PI).powi(5) * (a * b * c).powi(2)),
    )
}

/// Splits the IO cascade into the Tx–RIS vector `h` (sum over IOs) and the
/// RIS–Rx LOS vector `g`, so that `gᵀΘh` is the double sum over `(m, n)`.
pub fn multi_io_channel(scn: &Scenario, ios: &IoSet, p: &LinkBudgetParams) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let array = scn.array()?;
    let k = p.wavenumber();
    let ge = p.element_gain_max;
    let lambda2 = p.wavelength * p.wavelength;

    let tx_io: Vec<f64> = ios
        .positions()
        .iter()
        .map(|&q| nonzero("a_m", distance(scn.tx, q)))
        .collect::<Result<_>>()?;

    let mut h = Vec::with_capacity(array.len());
    let mut g = Vec::with_capacity(array.len());
    for &r in array.positions() {
        let c = nonzero("c_n", distance(r, scn.rx))?;
        let los = p.efficiency * p.rx_gain * ge * lambda2 / (4.0 * PI * c).powi(2);
        g.push(Complex64::from_polar(los.sqrt(), -k * c));

        let mut acc = Complex64::new(0.0, 0.0);
        for ((&q, &a), &sigma) in ios.positions().iter().zip(&tx_io).zip(ios.rcs()) {
            let b = nonzero("b_mn", distance(q, r))?;
            let l = p.tx_gain * ge * lambda2 * sigma / ((4.0 * PI).powi(3) * a * a * b * b);
            acc += Complex64::from_polar(l.sqrt(), -k * (a + b));
        }
        h.push(acc);
    }
    Ok((h, g))
}

/// The direct-link coefficient enters the effective channel unchanged.
pub fn effective_siso(h_direct: Complex64) -> Complex64 {
    h_direct
}
