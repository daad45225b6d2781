//! Channel realizations `(h, g, h_SISO)` for the clustered indoor and outdoor
//! models, and the end-to-end effective channel `gᵀΘh + h_SISO`.
//!
//! Every coefficient is normalized to unit transmit power. Tx gain enters
//! `h`, Rx gain and element efficiency enter `g`, both terminal gains enter
//! `h_SISO`.
//!
//! LOS terms use exact per-element phases with the amplitude of the array
//! center. Cluster terms use the far-field array response, since scatterers
//! are at least a meter away and the array spans a few centimeters. The
//! [`Steering::Exact`] mode switches every term to exact spherical wavefronts
//! with per-element amplitudes, which is what the deterministic models in
//! [`crate::baseline`] compute.

use std::f64::consts::PI;
use std::ops::Range;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clusters::{sample_cluster_geometry, ClusterSet, ClusterStatistics, LinkKind};
use crate::error::{Error, Result};
use crate::geometry::{distance, validate_scenario, Environment, Point3, RisArray, Scenario};
use crate::propagation::{
    ci_path_loss, element_pattern_gain, friis_gain, los_probability, sample_los_indicator, sample_shadowing_db,
    LinkBudgetParams, PathLossModel,
};
use crate::ris_control::RisPhaseProfile;
use crate::rng::{substream, Stream};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LosMode {
    /// Bernoulli draw from the LOS probability.
    #[default]
    Random,
    ForceLos,
    ForceNlos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Steering {
    #[default]
    FarField,
    Exact,
}

/// Switches used by tests and sweeps. The random stream consumed per
/// realization does not depend on these, so toggling one keeps every other
/// draw in place.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelOptions {
    pub shadowing: bool,
    pub scattering: bool,
    /// Applies to the gated links. The indoor RIS–Rx link is LOS by
    /// construction and ignores it.
    pub los: LosMode,
    pub steering: Steering,
}

impl Default for ChannelOptions {
    fn default() -> Self {
        Self {
            shadowing: true,
            scattering: true,
            los: LosMode::Random,
            steering: Steering::FarField,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    pub scenario: Scenario,
    pub link: LinkBudgetParams,
    pub path_loss: PathLossModel,
    pub clusters: ClusterStatistics,
    pub options: ChannelOptions,
    pub realizations: u64,
    pub seed: u64,
}

impl ChannelConfig {
    /// Default models for the scenario's environment and band.
    pub fn new(scenario: Scenario, realizations: u64, seed: u64) -> Self {
        Self {
            link: LinkBudgetParams::for_band(scenario.band),
            path_loss: PathLossModel::default_for(scenario.environment, scenario.band),
            clusters: ClusterStatistics::for_band(scenario.band),
            options: ChannelOptions::default(),
            scenario,
            realizations,
            seed,
        }
    }

    pub fn with_options(mut self, options: ChannelOptions) -> Self {
        self.options = options;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let violations = validate_scenario(&self.scenario);
        if !violations.is_empty() {
            return Err(Error::InvalidScenario(violations));
        }
        if self.realizations == 0 {
            return Err(Error::invalid("realizations", "must be at least 1"));
        }
        self.link.validate()?;
        let lambda = self.scenario.wavelength();
        if ((self.link.wavelength - lambda) / lambda).abs() > 1e-12 {
            return Err(Error::invalid(
                "wavelength",
                format!(
                    "{} m does not match the {} GHz band",
                    self.link.wavelength,
                    self.scenario.band.ghz()
                ),
            ));
        }
        if !(self.path_loss.reference_distance > 0.0) {
            return Err(Error::invalid("reference_distance", "must be positive"));
        }
        self.clusters.validate()
    }
}

/// LOS-path draw of one link: indicator, carrier phase `η` and the shadowing
/// actually applied (zero when shadowing is off).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LosDraw {
    pub present: bool,
    pub phase: f64,
    pub shadow_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LosIndicators {
    pub tx_ris: bool,
    pub ris_rx: bool,
    pub tx_rx: bool,
}

/// One Monte Carlo draw.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// Tx–RIS, one entry per element.
    pub h: Vec<Complex64>,
    /// RIS–Rx, one entry per element.
    pub g: Vec<Complex64>,
    pub h_siso: Complex64,
    pub seed: u64,
    pub index: u64,
    pub los: LosIndicators,
}

/// Sampled ingredients of one link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkParts {
    pub los: LosDraw,
    /// `None` for the pure-LOS indoor RIS–Rx link and for the indoor Tx–Rx
    /// link, which reuses the Tx–RIS set.
    pub clusters: Option<ClusterSet>,
}

/// A realization together with everything drawn to build it.
#[derive(Debug, Clone, PartialEq)]
pub struct DetailedRealization {
    pub realization: ChannelRealization,
    pub tx_ris: LinkParts,
    pub ris_rx: LinkParts,
    pub tx_rx: LinkParts,
}

/// `gᵀΘh + h_SISO`.
pub fn effective_channel(r: &ChannelRealization, profile: &RisPhaseProfile) -> Result<Complex64> {
    let n = r.h.len();
    if r.g.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: r.g.len(),
        });
    }
    if profile.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: profile.len(),
        });
    }
    let cascade: Complex64 =
        r.g.iter()
            .zip(profile.coefficients())
            .zip(&r.h)
            .map(|((g, t), h)| g * t * h)
            .sum();
    Ok(cascade + r.h_siso)
}

/// Excess phase of the direct path over a scatterer relative to the path
/// into the RIS center, `k (|p − Rx| − |p − RIS|)`.
pub fn excess_phase(wavenumber: f64, scatterer: Point3, ris: Point3, rx: Point3) -> f64 {
    wavenumber * (distance(scatterer, rx) - distance(scatterer, ris))
}

fn require_env(cfg: &ChannelConfig, env: Environment) -> Result<()> {
    if cfg.scenario.environment == env {
        Ok(())
    } else {
        Err(Error::WrongEnvironment { expected: env.name() })
    }
}

fn los_attenuation(cfg: &ChannelConfig, d: f64, shadow_db: f64) -> Result<f64> {
    let d = d.max(cfg.path_loss.reference_distance);
    ci_path_loss(&cfg.path_loss, d, true, shadow_db)
}

/// Shared builder of `h` and `g`: the gated LOS term from `source` plus the
/// cluster sum, scaled by the terminal-side power gain `gain`.
fn ris_side_vector(
    cfg: &ChannelConfig,
    array: &RisArray,
    source: Point3,
    los: &LosDraw,
    clusters: Option<&ClusterSet>,
    gain: f64,
) -> Result<Vec<Complex64>> {
    let exact = cfg.options.steering == Steering::Exact;
    let mut out = vec![ZERO; array.len()];

    if los.present {
        let theta = array.angles_to(source)?.elevation;
        let l = los_attenuation(cfg, distance(source, array.center), los.shadow_db)?;
        let coeff = Complex64::from_polar((gain * element_pattern_gain(theta) * l).sqrt(), los.phase);
        for (o, a) in out.iter_mut().zip(array.exact_response(source, exact)) {
            *o += coeff * a;
        }
    }

    if let (Some(set), true) = (clusters, cfg.options.scattering) {
        let gamma = set.gamma();
        for s in set.subrays() {
            let amp = (gain * element_pattern_gain(s.arrival.elevation) * s.attenuation).sqrt();
            let coeff = s.gain * (gamma * amp);
            if coeff == ZERO {
                continue;
            }
            let response = if exact {
                array.exact_response(s.position, true)
            } else {
                array.steering(s.arrival)
            };
            for (o, a) in out.iter_mut().zip(response) {
                *o += coeff * a;
            }
        }
    }
    Ok(out)
}

/// Assembles `h` from sampled parts.
pub fn h_from_parts(cfg: &ChannelConfig, clusters: &ClusterSet, los: &LosDraw) -> Result<Vec<Complex64>> {
    clusters.expect_link(LinkKind::TxRis)?;
    let array = cfg.scenario.array()?;
    ris_side_vector(cfg, &array, cfg.scenario.tx, los, Some(clusters), cfg.link.tx_gain)
}

fn g_gain(cfg: &ChannelConfig) -> f64 {
    cfg.link.efficiency * cfg.link.rx_gain
}

/// Indoor `g`: a single LOS ray from the RIS to the Rx.
pub fn g_indoor_from_parts(cfg: &ChannelConfig, los: &LosDraw) -> Result<Vec<Complex64>> {
    require_env(cfg, Environment::InH)?;
    let array = cfg.scenario.array()?;
    ris_side_vector(cfg, &array, cfg.scenario.rx, los, None, g_gain(cfg))
}

pub fn g_outdoor_from_parts(cfg: &ChannelConfig, clusters: &ClusterSet, los: &LosDraw) -> Result<Vec<Complex64>> {
    require_env(cfg, Environment::UMi)?;
    clusters.expect_link(LinkKind::RisRx)?;
    let array = cfg.scenario.array()?;
    ris_side_vector(cfg, &array, cfg.scenario.rx, los, Some(clusters), g_gain(cfg))
}

/// Direct LOS coefficient, free space with the carrier phase of the path.
fn direct_los(cfg: &ChannelConfig) -> Complex64 {
    let scn = &cfg.scenario;
    let d = scn.tx_rx_distance();
    let amp = (cfg.link.tx_gain * cfg.link.rx_gain * friis_gain(scn.wavelength(), d)).sqrt();
    Complex64::from_polar(amp, -scn.wavenumber() * d)
}

/// Indoor `h_SISO` over the Tx–RIS clusters. Each sub-ray keeps its `β`,
/// gains an excess phase and is attenuated over Tx → scatterer → Rx with its
/// cluster's shadowing.
pub fn hsiso_indoor_from_parts(cfg: &ChannelConfig, shared: &ClusterSet, los: &LosDraw) -> Result<Complex64> {
    require_env(cfg, Environment::InH)?;
    shared.expect_link(LinkKind::TxRis)?;
    let scn = &cfg.scenario;
    if !scn.direct_link_present {
        return Ok(ZERO);
    }
    let mut out = if los.present { direct_los(cfg) } else { ZERO };
    if cfg.options.scattering {
        let k = scn.wavenumber();
        let gain = cfg.link.tx_gain * cfg.link.rx_gain;
        let d0 = cfg.path_loss.reference_distance;
        let mut acc = ZERO;
        for c in shared.clusters() {
            for s in &c.subrays {
                let travel = (distance(scn.tx, s.position) + distance(s.position, scn.rx)).max(d0);
                let l = ci_path_loss(&cfg.path_loss, travel, false, c.shadow_db)?;
                let eta = excess_phase(k, s.position, scn.ris, scn.rx);
                acc += s.gain * Complex64::from_polar((gain * l).sqrt(), eta);
            }
        }
        out += acc * shared.gamma();
    }
    Ok(out)
}

/// Outdoor `h_SISO` over its own, independent clusters.
pub fn hsiso_outdoor_from_parts(cfg: &ChannelConfig, clusters: &ClusterSet, los: &LosDraw) -> Result<Complex64> {
    require_env(cfg, Environment::UMi)?;
    clusters.expect_link(LinkKind::TxRx)?;
    if !cfg.scenario.direct_link_present {
        return Ok(ZERO);
    }
    let mut out = if los.present { direct_los(cfg) } else { ZERO };
    if cfg.options.scattering {
        let gain = cfg.link.tx_gain * cfg.link.rx_gain;
        let acc: Complex64 = clusters.subrays().map(|s| s.gain * (gain * s.attenuation).sqrt()).sum();
        out += acc * clusters.gamma();
    }
    Ok(out)
}

/// LOS probability of a link, `None` when the link is LOS by construction.
fn link_los_probability(cfg: &ChannelConfig, link: LinkKind) -> Option<f64> {
    let scn = &cfg.scenario;
    let env = scn.environment;
    match link {
        LinkKind::TxRis => Some(los_probability(env, scn.tx_ris_distance(), Some(scn.ris.z))),
        LinkKind::RisRx => match env {
            Environment::InH => None,
            Environment::UMi => Some(los_probability(env, scn.ris_rx_distance(), Some(scn.ris.z))),
        },
        LinkKind::TxRx => Some(los_probability(env, scn.tx_rx_distance(), None)),
    }
}

/// Draw order per link: LOS indicator, carrier phase, shadowing.
fn sample_los<R: Rng + ?Sized>(rng: &mut R, cfg: &ChannelConfig, link: LinkKind) -> LosDraw {
    let p = link_los_probability(cfg, link);
    let indicator = sample_los_indicator(rng, p.unwrap_or(1.0));
    let phase = rng.random::<f64>() * 2.0 * PI;
    let shadow = sample_shadowing_db(rng, cfg.path_loss.los.shadow_std_db);
    let present = match (p, cfg.options.los) {
        (None, _) => true,
        (Some(_), LosMode::Random) => indicator,
        (Some(_), LosMode::ForceLos) => true,
        (Some(_), LosMode::ForceNlos) => false,
    };
    // the direct path is free space
    let shadowed = cfg.options.shadowing && link != LinkKind::TxRx;
    LosDraw {
        present,
        phase,
        shadow_db: if shadowed { shadow } else { 0.0 },
    }
}

fn sample_clusters<R: Rng + ?Sized>(rng: &mut R, cfg: &ChannelConfig, link: LinkKind) -> Result<ClusterSet> {
    sample_cluster_geometry(
        rng,
        &cfg.scenario,
        link,
        &cfg.clusters,
        &cfg.path_loss,
        cfg.options.shadowing,
    )
}

fn sample_link<R: Rng + ?Sized>(rng: &mut R, cfg: &ChannelConfig, link: LinkKind) -> Result<LinkParts> {
    let los = sample_los(rng, cfg, link);
    let clustered = match (cfg.scenario.environment, link) {
        (_, LinkKind::TxRis) => true,
        (Environment::InH, _) => false,
        (Environment::UMi, _) => true,
    };
    let clusters = if clustered {
        Some(sample_clusters(rng, cfg, link)?)
    } else {
        None
    };
    Ok(LinkParts { los, clusters })
}

fn clusters_of(parts: &LinkParts) -> &ClusterSet {
    parts.clusters.as_ref().expect("clustered link carries a cluster set")
}

/// Tx–RIS channel and the cluster set it was built from.
pub fn gen_h<R: Rng + ?Sized>(rng: &mut R, cfg: &ChannelConfig) -> Result<(Vec<Complex64>, ClusterSet)> {
    cfg.validate()?;
    let parts = sample_link(rng, cfg, LinkKind::TxRis)?;
    let set = parts.clusters.expect("Tx–RIS link is clustered");
    let h = h_from_parts(cfg, &set, &parts.los)?;
    Ok((h, set))
}

pub fn gen_g_indoor<R: Rng + ?Sized>(rng: &mut R, cfg: &ChannelConfig) -> Result<Vec<Complex64>> {
    require_env(cfg, Environment::InH)?;
    cfg.validate()?;
    let parts = sample_link(rng, cfg, LinkKind::RisRx)?;
    g_indoor_from_parts(cfg, &parts.los)
}

pub fn gen_g_outdoor<R: Rng + ?Sized>(rng: &mut R, cfg: &ChannelConfig) -> Result<Vec<Complex64>> {
    require_env(cfg, Environment::UMi)?;
    cfg.validate()?;
    let parts = sample_link(rng, cfg, LinkKind::RisRx)?;
    g_outdoor_from_parts(cfg, clusters_of(&parts), &parts.los)
}

pub fn gen_hsiso_indoor<R: Rng + ?Sized>(rng: &mut R, cfg: &ChannelConfig, shared: &ClusterSet) -> Result<Complex64> {
    require_env(cfg, Environment::InH)?;
    cfg.validate()?;
    let parts = sample_link(rng, cfg, LinkKind::TxRx)?;
    hsiso_indoor_from_parts(cfg, shared, &parts.los)
}

pub fn gen_hsiso_outdoor<R: Rng + ?Sized>(rng: &mut R, cfg: &ChannelConfig) -> Result<Complex64> {
    require_env(cfg, Environment::UMi)?;
    cfg.validate()?;
    let parts = sample_link(rng, cfg, LinkKind::TxRx)?;
    hsiso_outdoor_from_parts(cfg, clusters_of(&parts), &parts.los)
}

fn detailed_unchecked(cfg: &ChannelConfig, index: u64) -> Result<DetailedRealization> {
    let seed = cfg.seed;
    let tx_ris = sample_link(&mut substream(seed, index, Stream::TxRis), cfg, LinkKind::TxRis)?;
    let ris_rx = sample_link(&mut substream(seed, index, Stream::RisRx), cfg, LinkKind::RisRx)?;
    let tx_rx = sample_link(&mut substream(seed, index, Stream::TxRx), cfg, LinkKind::TxRx)?;

    let shared = clusters_of(&tx_ris);
    let h = h_from_parts(cfg, shared, &tx_ris.los)?;
    let (g, h_siso) = match cfg.scenario.environment {
        Environment::InH => (
            g_indoor_from_parts(cfg, &ris_rx.los)?,
            hsiso_indoor_from_parts(cfg, shared, &tx_rx.los)?,
        ),
        Environment::UMi => (
            g_outdoor_from_parts(cfg, clusters_of(&ris_rx), &ris_rx.los)?,
            hsiso_outdoor_from_parts(cfg, clusters_of(&tx_rx), &tx_rx.los)?,
        ),
    };
    let los = LosIndicators {
        tx_ris: tx_ris.los.present,
        ris_rx: ris_rx.los.present,
        tx_rx: tx_rx.los.present && cfg.scenario.direct_link_present,
    };
    Ok(DetailedRealization {
        realization: ChannelRealization {
            h,
            g,
            h_siso,
            seed,
            index,
            los,
        },
        tx_ris,
        ris_rx,
        tx_rx,
    })
}

/// Realization `index` with all of its sampled parts.
pub fn realize_detailed(cfg: &ChannelConfig, index: u64) -> Result<DetailedRealization> {
    cfg.validate()?;
    detailed_unchecked(cfg, index)
}

/// Realization `index`, reproducible from `(cfg.seed, index)` alone.
pub fn realization(cfg: &ChannelConfig, index: u64) -> Result<ChannelRealization> {
    realize_detailed(cfg, index).map(|d| d.realization)
}

/// Lazy stream over realizations `0..cfg.realizations`.
pub fn realize(cfg: &ChannelConfig) -> Result<Realizations<'_>> {
    cfg.validate()?;
    Ok(Realizations {
        cfg,
        next: 0,
        end: cfg.realizations,
    })
}

/// Realizations in `range`, generated in parallel and returned in index order.
pub fn realize_range(cfg: &ChannelConfig, range: Range<u64>) -> Result<Vec<ChannelRealization>> {
    cfg.validate()?;
    realize_range_unchecked(cfg, range)
}

pub(crate) fn realize_range_unchecked(cfg: &ChannelConfig, range: Range<u64>) -> Result<Vec<ChannelRealization>> {
    range
        .into_par_iter()
        .map(|i| detailed_unchecked(cfg, i).map(|d| d.realization))
        .collect()
}

#[derive(Debug, Clone)]
pub struct Realizations<'a> {
    cfg: &'a ChannelConfig,
    next: u64,
    end: u64,
}

impl Iterator for Realizations<'_> {
    type Item = Result<ChannelRealization>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.end {
            return None;
        }
        let i = self.next;
        self.next += 1;
        Some(detailed_unchecked(self.cfg, i).map(|d| d.realization))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = (self.end - self.next) as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Realizations<'_> {}
