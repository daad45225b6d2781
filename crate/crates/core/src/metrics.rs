//! SNR and ergodic achievable rate over realization streams, power-scaling
//! sweeps and Rx-position heatmaps.
//!
//! Sums use Neumaier compensation and are always reduced in realization
//! order, so results do not depend on the number of worker threads.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{effective_channel, realize_range_unchecked, ChannelConfig, ChannelRealization, LosMode};
use crate::error::{Error, Result};
use crate::geometry::{validate_scenario, Point3};
use crate::ris_control::{off_profile, optimal_phases, random_phases, RisPhaseProfile};
use crate::rng::{substream, Stream};

/// Receiver noise power.
pub const DEFAULT_NOISE_DBM: f64 = -100.0;

/// Transmit powers swept by default, in dBW.
pub const DEFAULT_PT_SWEEP_DBW: [f64; 7] = [-20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0];

/// Realizations generated per parallel batch.
const CHUNK: u64 = 1024;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    linear_to_db(w) + 30.0
}

pub fn dbw_to_watts(dbw: f64) -> f64 {
    db_to_linear(dbw)
}

/// Instantaneous SNR `ρ = Pt |effective|² / N0`.
pub fn snr(effective: Complex64, pt_w: f64, n0_w: f64) -> Result<f64> {
    if !(n0_w > 0.0) {
        return Err(Error::invalid("noise_power", format!("{n0_w} W must be positive")));
    }
    if !(pt_w >= 0.0) {
        return Err(Error::invalid("tx_power", format!("{pt_w} W must be non-negative")));
    }
    Ok(pt_w * effective.norm_sqr() / n0_w)
}

/// How the RIS is configured for each realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileRule {
    Optimal,
    /// Fresh uniform phases per realization from its own substream.
    Random,
    Off,
}

impl ProfileRule {
    pub fn as_str(self) -> &'static str {
        match self {
            ProfileRule::Optimal => "optimal",
            ProfileRule::Random => "random",
            ProfileRule::Off => "off",
        }
    }

    pub fn profile(self, r: &ChannelRealization) -> RisPhaseProfile {
        match self {
            ProfileRule::Optimal => optimal_phases(r),
            ProfileRule::Random => random_phases(&mut substream(r.seed, r.index, Stream::Phases), r.h.len()),
            ProfileRule::Off => off_profile(r.h.len()),
        }
    }
}

impl fmt::Display for ProfileRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProfileRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "optimal" => Ok(ProfileRule::Optimal),
            "random" => Ok(ProfileRule::Random),
            "off" => Ok(ProfileRule::Off),
            other => Err(Error::invalid("rule", format!("unknown profile rule `{other}`"))),
        }
    }
}

/// Rate and SNR statistics of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    /// bits/s/Hz
    pub mean_rate: f64,
    pub rate_std: f64,
    /// Standard error of `mean_rate`.
    pub std_error: f64,
    /// `10 log10` of the mean linear SNR; `-inf` when every draw is silent.
    pub mean_snr_db: f64,
    pub count: u64,
    pub pt_dbm: f64,
    pub noise_dbm: f64,
    pub rule: ProfileRule,
}

#[derive(Debug, Clone, Copy, Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Running rate/SNR moments. Feed samples in a fixed order for
/// reproducible output.
#[derive(Debug, Clone, Default)]
pub struct RateAccumulator {
    rate: Neumaier,
    rate_sq: Neumaier,
    snr: Neumaier,
    count: u64,
}

impl RateAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one draw with linear SNR `rho`.
    pub fn push(&mut self, rho: f64) {
        let r = (1.0 + rho).log2();
        self.rate.add(r);
        self.rate_sq.add(r * r);
        self.snr.add(rho);
        self.count += 1;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn finish(&self, rule: ProfileRule, pt_w: f64, n0_w: f64) -> Result<RateReport> {
        if self.count == 0 {
            return Err(Error::EmptyStream);
        }
        let n = self.count as f64;
        let mean = self.rate.value() / n;
        let var = if self.count > 1 {
            ((self.rate_sq.value() - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        let std = var.sqrt();
        Ok(RateReport {
            mean_rate: mean,
            rate_std: std,
            std_error: std / n.sqrt(),
            mean_snr_db: linear_to_db(self.snr.value() / n),
            count: self.count,
            pt_dbm: watts_to_dbm(pt_w),
            noise_dbm: watts_to_dbm(n0_w),
            rule,
        })
    }
}

/// Ergodic rate `E[log2(1 + ρ)]` over a realization stream.
pub fn achievable_rate<I>(stream: I, rule: ProfileRule, pt_w: f64, n0_w: f64) -> Result<RateReport>
where
    I: IntoIterator<Item = Result<ChannelRealization>>,
{
    let mut acc = RateAccumulator::new();
    for r in stream {
        let r = r?;
        let e = effective_channel(&r, &rule.profile(&r))?;
        acc.push(snr(e, pt_w, n0_w)?);
    }
    acc.finish(rule, pt_w, n0_w)
}

/// `|gᵀΘh + h_SISO|²` for every realization of `cfg`, in index order.
/// Generation runs in parallel batches.
pub fn effective_gains(cfg: &ChannelConfig, rule: ProfileRule) -> Result<Vec<f64>> {
    cfg.validate()?;
    let mut out = Vec::with_capacity(cfg.realizations.min(1 << 20) as usize);
    let mut start = 0;
    while start < cfg.realizations {
        let end = (start + CHUNK).min(cfg.realizations);
        let batch = realize_range_unchecked(cfg, start..end)?;
        let gains = batch
            .par_iter()
            .map(|r| effective_channel(r, &rule.profile(r)).map(|e| e.norm_sqr()))
            .collect::<Result<Vec<_>>>()?;
        out.extend(gains);
        start = end;
    }
    Ok(out)
}

/// Rate report from precomputed channel gains.
pub fn report_from_gains(gains: &[f64], rule: ProfileRule, pt_w: f64, n0_w: f64) -> Result<RateReport> {
    // validates the powers
    snr(Complex64::new(0.0, 0.0), pt_w, n0_w)?;
    let mut acc = RateAccumulator::new();
    for &g in gains {
        acc.push(pt_w * g / n0_w);
    }
    acc.finish(rule, pt_w, n0_w)
}

/// Monte Carlo rate for one configuration.
pub fn simulate_rate(cfg: &ChannelConfig, rule: ProfileRule, pt_w: f64, n0_w: f64) -> Result<RateReport> {
    report_from_gains(&effective_gains(cfg, rule)?, rule, pt_w, n0_w)
}

/// One report per transmit power, all from the same realizations.
pub fn rate_table(cfg: &ChannelConfig, rule: ProfileRule, pts_dbw: &[f64], n0_w: f64) -> Result<Vec<RateReport>> {
    let gains = effective_gains(cfg, rule)?;
    pts_dbw
        .iter()
        .map(|&p| report_from_gains(&gains, rule, dbw_to_watts(p), n0_w))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub n_elements: usize,
    pub report: RateReport,
}

/// Mean SNR and rate versus the number of elements with every link forced to
/// pure LOS (no scattering, no shadowing).
pub fn power_scaling_sweep(
    cfg: &ChannelConfig,
    n_list: &[usize],
    rule: ProfileRule,
    pt_w: f64,
    n0_w: f64,
) -> Result<Vec<ScalingPoint>> {
    n_list
        .iter()
        .map(|&n| {
            let mut c = cfg.clone();
            c.scenario.n_elements = n;
            c.options.los = LosMode::ForceLos;
            c.options.scattering = false;
            c.options.shadowing = false;
            Ok(ScalingPoint {
                n_elements: n,
                report: simulate_rate(&c, rule, pt_w, n0_w)?,
            })
        })
        .collect()
}

/// Rx positions `(x, y, z)` for every `x` in `xs` and `y` in `ys`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RxGrid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub z: f64,
}

impl RxGrid {
    /// `nx × ny` evenly spaced points spanning both ranges inclusively.
    pub fn linspace(x: (f64, f64), y: (f64, f64), nx: usize, ny: usize, z: f64) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::invalid("grid", "needs at least one point per axis"));
        }
        let lin = |(a, b): (f64, f64), n: usize| -> Vec<f64> {
            if n == 1 {
                vec![a]
            } else {
                (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
            }
        };
        Ok(Self {
            xs: lin(x, nx),
            ys: lin(y, ny),
            z,
        })
    }

    pub fn len(&self) -> usize {
        self.xs.len() * self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Points in row-major order: `y` outer, `x` inner.
    pub fn points(&self) -> impl Iterator<Item = Point3> + '_ {
        self.ys
            .iter()
            .flat_map(move |&y| self.xs.iter().map(move |&x| Point3::new(x, y, self.z)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapCell {
    pub rx: Point3,
    pub report: RateReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub grid: RxGrid,
    /// Row-major, matching [`RxGrid::points`].
    pub cells: Vec<HeatmapCell>,
}

impl Heatmap {
    /// Mean rates as `rates[iy][ix]`.
    pub fn mean_rates(&self) -> Vec<Vec<f64>> {
        self.cells
            .chunks(self.grid.xs.len())
            .map(|row| row.iter().map(|c| c.report.mean_rate).collect())
            .collect()
    }

    pub fn argmax(&self) -> Option<&HeatmapCell> {
        self.cells
            .iter()
            .max_by(|a, b| a.report.mean_rate.total_cmp(&b.report.mean_rate))
    }
}

/// Mean rate at every grid point. Each cell reuses the master seed, so a
/// cell equals a standalone run with the Rx at that point and neighbouring
/// cells differ by geometry only.
pub fn rate_heatmap(cfg: &ChannelConfig, grid: &RxGrid, rule: ProfileRule, pt_w: f64, n0_w: f64) -> Result<Heatmap> {
    rate_heatmap_with_progress(cfg, grid, rule, pt_w, n0_w, |_, _| {})
}

/// As [`rate_heatmap`], reporting `(cells done, total)` after each cell.
pub fn rate_heatmap_with_progress<F>(
    cfg: &ChannelConfig,
    grid: &RxGrid,
    rule: ProfileRule,
    pt_w: f64,
    n0_w: f64,
    progress: F,
) -> Result<Heatmap>
where
    F: Fn(usize, usize),
{
    if grid.is_empty() {
        return Err(Error::invalid("grid", "grid has no points"));
    }
    let configs: Vec<ChannelConfig> = grid
        .points()
        .map(|rx| {
            let mut c = cfg.clone();
            c.scenario.rx = rx;
            c
        })
        .collect();
    let violations: Vec<_> = configs.iter().flat_map(|c| validate_scenario(&c.scenario)).collect();
    if !violations.is_empty() {
        return Err(Error::InvalidScenario(violations));
    }
    let total = configs.len();
    let mut cells = Vec::with_capacity(total);
    for (i, c) in configs.iter().enumerate() {
        cells.push(HeatmapCell {
            rx: c.scenario.rx,
            report: simulate_rate(c, rule, pt_w, n0_w)?,
        });
        progress(i + 1, total);
    }
    Ok(Heatmap {
        grid: grid.clone(),
        cells,
    })
}
