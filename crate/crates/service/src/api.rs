//! JSON request and response bodies. Every response carries
//! `schema_version`; error responses use [`ErrorResponse`].

use risim_core::channel::ChannelOptions;
use risim_core::geometry::{Band, Environment, Point3, Scenario, Violation, WallPlacement};
use risim_core::metrics::{Heatmap, ProfileRule, RateReport, DEFAULT_NOISE_DBM, DEFAULT_PT_SWEEP_DBW};
use serde::{Deserialize, Serialize};
use uuid::Uuid;

pub const SCHEMA_VERSION: u32 = 1;

fn default_realizations() -> u64 {
    1000
}

fn default_rules() -> Vec<ProfileRule> {
    vec![ProfileRule::Off, ProfileRule::Random, ProfileRule::Optimal]
}

fn default_pt_sweep() -> Vec<f64> {
    DEFAULT_PT_SWEEP_DBW.to_vec()
}

fn default_noise() -> f64 {
    DEFAULT_NOISE_DBM
}

fn default_rule() -> ProfileRule {
    ProfileRule::Optimal
}

/// Body of `POST /simulate`. Missing fields take their defaults and the
/// filled-in request is echoed back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimRequest {
    pub scenario: Scenario,
    #[serde(default = "default_realizations")]
    pub realizations: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_rules")]
    pub rules: Vec<ProfileRule>,
    #[serde(default = "default_pt_sweep")]
    pub pt_dbw: Vec<f64>,
    #[serde(default = "default_noise")]
    pub noise_dbm: f64,
    #[serde(default)]
    pub options: ChannelOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub histogram: Option<HistogramSpec>,
}

/// Per-realization SNR histogram at one transmit power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistogramSpec {
    pub bins: usize,
    pub pt_dbw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrHistogram {
    pub rule: ProfileRule,
    pub pt_dbw: f64,
    pub min_db: f64,
    pub max_db: f64,
    pub counts: Vec<u64>,
    /// Realizations with zero channel gain, left out of the bins.
    pub zero_gain: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResponse {
    pub schema_version: u32,
    pub config: SimRequest,
    /// Rule-major, then transmit power.
    pub reports: Vec<RateReport>,
    pub violations: Vec<Violation>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub histograms: Vec<SnrHistogram>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidateResponse {
    pub schema_version: u32,
    pub valid: bool,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecommendQuery {
    pub env: Environment,
    pub wall: WallPlacement,
    #[serde(default)]
    pub freq: Option<Band>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendResponse {
    pub schema_version: u32,
    pub scenario: Scenario,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Rx height of every cell; the scenario Rx height when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
}

/// Body of `POST /heatmap`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatmapRequest {
    pub scenario: Scenario,
    pub grid: GridSpec,
    #[serde(default = "default_realizations")]
    pub realizations: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_rule")]
    pub rule: ProfileRule,
    #[serde(default)]
    pub pt_dbw: f64,
    #[serde(default = "default_noise")]
    pub noise_dbm: f64,
    #[serde(default)]
    pub options: ChannelOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobCreated {
    pub schema_version: u32,
    pub job_id: Uuid,
    pub total: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobReport {
    pub schema_version: u32,
    pub job_id: Uuid,
    pub status: JobStatus,
    pub done: usize,
    pub total: usize,
    pub config: HeatmapRequest,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<Heatmap>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorBody>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(default)]
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorResponse {
    pub schema_version: u32,
    pub error: ErrorBody,
}

impl HeatmapRequest {
    pub fn points(&self) -> impl Iterator<Item = Point3> + '_ {
        let z = self.grid.z.unwrap_or(self.scenario.rx.z);
        self.grid
            .ys
            .iter()
            .flat_map(move |&y| self.grid.xs.iter().map(move |&x| Point3::new(x, y, z)))
    }
}
