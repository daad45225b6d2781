//! Stochastic scatterers: cluster and sub-ray counts, 3D positions, arrival
//! angles at the RIS, complex gains and per-sub-ray path attenuation.
//!
//! The statistics below are simulator defaults and can be overridden through
//! [`ClusterStatistics`].

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{distance, local_angles, Band, LocalAngles, Point3, Scenario};
use crate::propagation::{ci_path_loss, sample_shadowing_db, PathLossModel};

/// Scatterers are kept this far inside the scene box when clipped.
pub const CLIP_MARGIN: f64 = 0.05;

/// Redraw attempts for a cluster center that falls outside the scene.
pub const MAX_REDRAWS: usize = 16;

/// Which link a cluster set was drawn for. Distances are measured from the
/// first endpoint: Tx for `TxRis` and `TxRx`, the RIS for `RisRx`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    TxRis,
    RisRx,
    TxRx,
}

impl LinkKind {
    pub fn endpoints(self, scn: &Scenario) -> (Point3, Point3) {
        match self {
            LinkKind::TxRis => (scn.tx, scn.ris),
            LinkKind::RisRx => (scn.ris, scn.rx),
            LinkKind::TxRx => (scn.tx, scn.rx),
        }
    }
}

/// Small-scale statistics of the clustered model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterStatistics {
    /// Poisson mean of the cluster count (clamped below at one cluster).
    pub mean_clusters: f64,
    pub max_subrays: u32,
    pub azimuth_spread_deg: f64,
    pub elevation_spread_deg: f64,
    /// Standard deviation of the Laplacian sub-ray offsets.
    pub subray_spread_deg: f64,
    pub min_distance: f64,
}

impl ClusterStatistics {
    pub fn for_band(band: Band) -> Self {
        Self {
            mean_clusters: match band {
                Band::Ghz28 => 1.8,
                Band::Ghz73 => 1.9,
            },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mean_clusters >= 0.0 && self.mean_clusters.is_finite()) {
            return Err(Error::invalid("mean_clusters", "must be finite and non-negative"));
        }
        if self.max_subrays == 0 {
            return Err(Error::invalid("max_subrays", "must be at least 1"));
        }
        let spreads = [
            ("azimuth_spread_deg", self.azimuth_spread_deg),
            ("elevation_spread_deg", self.elevation_spread_deg),
            ("subray_spread_deg", self.subray_spread_deg),
        ];
        for (name, v) in spreads {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("{v} must be finite and non-negative")));
            }
        }
        if !(self.min_distance > 0.0 && self.min_distance.is_finite()) {
            return Err(Error::invalid("min_distance", "must be positive"));
        }
        Ok(())
    }
}

impl Default for ClusterStatistics {
    fn default() -> Self {
        Self {
            mean_clusters: 1.8,
            max_subrays: 30,
            azimuth_spread_deg: 60.0,
            elevation_spread_deg: 20.0,
            subray_spread_deg: 5.0,
            min_distance: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Subray {
    pub azimuth_offset: f64,
    pub elevation_offset: f64,
    pub position: Point3,
    /// `β ~ CN(0, 1)`.
    pub gain: Complex64,
    /// Linear NLOS attenuation over the two-segment path through `position`.
    pub attenuation: f64,
    /// Direction of `position` seen from the RIS center.
    pub arrival: LocalAngles,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    /// Global azimuth/elevation of the cluster center seen from the link start.
    pub mean_azimuth: f64,
    pub mean_elevation: f64,
    pub center: Point3,
    pub subrays: Vec<Subray>,
    pub shadow_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSet {
    link: LinkKind,
    clusters: Vec<Cluster>,
    gamma: f64,
}

impl ClusterSet {
    /// Fails if there is no cluster or some cluster has no sub-ray.
    pub fn new(link: LinkKind, clusters: Vec<Cluster>) -> Result<Self> {
        if clusters.is_empty() {
            return Err(Error::invalid("clusters", "at least one cluster is required"));
        }
        if clusters.iter().any(|c| c.subrays.is_empty()) {
            return Err(Error::invalid("subrays", "every cluster needs a sub-ray"));
        }
        let total: usize = clusters.iter().map(|c| c.subrays.len()).sum();
        Ok(Self {
            link,
            clusters,
            gamma: (1.0 / total as f64).sqrt(),
        })
    }

    pub fn link(&self) -> LinkKind {
        self.link
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    /// `γ = √(1 / Σ_c S_c)`.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `M = Σ_c S_c`.
    pub fn total_subrays(&self) -> usize {
        self.clusters.iter().map(|c| c.subrays.len()).sum()
    }

    pub fn subrays(&self) -> impl Iterator<Item = &Subray> + '_ {
        self.clusters.iter().flat_map(|c| c.subrays.iter())
    }

    pub(crate) fn expect_link(&self, expected: LinkKind) -> Result<()> {
        if self.link == expected {
            Ok(())
        } else {
            Err(Error::MismatchedClusterSet {
                expected,
                actual: self.link,
            })
        }
    }
}

/// `C = max(Poisson(λ_C), 1)`.
pub fn sample_cluster_count<R: Rng + ?Sized>(rng: &mut R, stats: &ClusterStatistics) -> usize {
    match Poisson::new(stats.mean_clusters) {
        Ok(d) => (d.sample(rng) as usize).max(1),
        Err(_) => 1,
    }
}

/// `S_c ~ U{1, …, max_subrays}`.
pub fn sample_subray_count<R: Rng + ?Sized>(rng: &mut R, stats: &ClusterStatistics) -> usize {
    rng.random_range(1..=stats.max_subrays) as usize
}

/// Circularly-symmetric complex Gaussian with unit variance.
pub fn sample_complex_gain<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * FRAC_1_SQRT_2
}

/// Zero-mean Laplacian with standard deviation `std` (scale `std/√2`).
fn sample_laplace<R: Rng + ?Sized>(rng: &mut R, std: f64) -> f64 {
    let u: f64 = rng.random::<f64>() - 0.5;
    let b = std * FRAC_1_SQRT_2;
    -b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

fn uniform_symmetric<R: Rng + ?Sized>(rng: &mut R, half_width: f64) -> f64 {
    (2.0 * rng.random::<f64>() - 1.0) * half_width
}

fn direction(azimuth: f64, elevation: f64) -> Point3 {
    let (sa, ca) = azimuth.sin_cos();
    let (se, ce) = elevation.sin_cos();
    Point3::new(ce * ca, ce * sa, se)
}

fn axis_angles(from: Point3, to: Point3) -> (f64, f64) {
    let d = to - from;
    let r = d.norm();
    (d.y.atan2(d.x), (d.z / r).clamp(-1.0, 1.0).asin())
}

/// Draws a cluster set for `link`. Cluster means spread about the link axis,
/// centers sit at `U(min_distance, link length)` from the link start, and
/// sub-rays share their cluster's distance with Laplacian angular offsets.
/// Shadowing is drawn per cluster in every case and applied only when
/// `shadowing` is set, so toggling it leaves the random stream unchanged.
pub fn sample_cluster_geometry<R: Rng + ?Sized>(
    rng: &mut R,
    scn: &Scenario,
    link: LinkKind,
    stats: &ClusterStatistics,
    model: &PathLossModel,
    shadowing: bool,
) -> Result<ClusterSet> {
    let (start, end) = link.endpoints(scn);
    let span = distance(start, end);
    if span == 0.0 {
        return Err(Error::CoincidentPoints("link endpoints coincide"));
    }
    let (axis_az, axis_el) = axis_angles(start, end);
    let bounds = scn.bounds();
    let az_spread = stats.azimuth_spread_deg.to_radians();
    let el_spread = stats.elevation_spread_deg.to_radians();
    let sub_spread = stats.subray_spread_deg.to_radians();
    let d_max = span.max(stats.min_distance);
    let half_pi = std::f64::consts::FRAC_PI_2;

    let count = sample_cluster_count(rng, stats);
    let mut clusters = Vec::with_capacity(count);
    for _ in 0..count {
        let n_sub = sample_subray_count(rng, stats);
        let shadow = sample_shadowing_db(rng, model.nlos.shadow_std_db);
        let shadow_db = if shadowing { shadow } else { 0.0 };

        let draw = |rng: &mut R| {
            let az = axis_az + uniform_symmetric(rng, az_spread);
            let el = (axis_el + uniform_symmetric(rng, el_spread)).clamp(-half_pi, half_pi);
            let dist = stats.min_distance + rng.random::<f64>() * (d_max - stats.min_distance);
            (az, el, dist)
        };
        let (mut az, mut el, mut dist) = draw(rng);
        for _ in 0..MAX_REDRAWS {
            if bounds.contains(start + direction(az, el) * dist) {
                break;
            }
            (az, el, dist) = draw(rng);
        }
        let center = bounds.clip(start + direction(az, el) * dist, CLIP_MARGIN);

        let mut subrays = Vec::with_capacity(n_sub);
        for _ in 0..n_sub {
            let d_az = sample_laplace(rng, sub_spread);
            let d_el = sample_laplace(rng, sub_spread);
            let gain = sample_complex_gain(rng);
            let dir = direction(az + d_az, (el + d_el).clamp(-half_pi, half_pi));
            let position = bounds.clip(start + dir * dist, CLIP_MARGIN);
            let travel = (distance(start, position) + distance(position, end)).max(model.reference_distance);
            subrays.push(Subray {
                azimuth_offset: d_az,
                elevation_offset: d_el,
                position,
                gain,
                attenuation: ci_path_loss(model, travel, false, shadow_db)?,
                arrival: local_angles(scn.ris, scn.wall, position)?,
            });
        }
        clusters.push(Cluster {
            mean_azimuth: az,
            mean_elevation: el,
            center,
            subrays,
            shadow_db,
        });
    }
    ClusterSet::new(link, clusters)
}
