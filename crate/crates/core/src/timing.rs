//! Physical durations from closed-form atom-shuttling models.
//!
//! Shuttle times invert the motional-excitation bound `Δn(t) <= Δn_max` for
//! three trajectory profiles: constant velocity (CV), constant jerk (CJ) and
//! shortcut-to-adiabaticity (STA). Everything else is assembled from those
//! legs plus a few fixed gate and measurement times.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const HBAR: f64 = 1.054_571_817e-34;
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
pub const YB171_MASS_U: f64 = 170.936_325_8;

pub const US: f64 = 1e-6;
pub const MS: f64 = 1e-3;

#[derive(Debug, Error, PartialEq)]
pub enum TimingError {
    #[error("shuttle distance must be positive, got {0}")]
    NonPositiveDistance(f64),
    #[error("code distance {0} is invalid (need odd d >= 3)")]
    InvalidDistance(usize),
    #[error("unknown {kind} `{value}`")]
    Unknown { kind: &'static str, value: String },
    #[error("invalid timing config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Cv,
    Cj,
    Sta,
}

impl FromStr for Profile {
    type Err = TimingError;
    fn from_str(s: &str) -> Result<Self, TimingError> {
        match s.to_ascii_lowercase().as_str() {
            "cv" => Ok(Self::Cv),
            "cj" => Ok(Self::Cj),
            "sta" => Ok(Self::Sta),
            _ => Err(TimingError::Unknown {
                kind: "profile",
                value: s.into(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimingSource {
    Pinned,
    Physics,
}

impl FromStr for TimingSource {
    type Err = TimingError;
    fn from_str(s: &str) -> Result<Self, TimingError> {
        match s.to_ascii_lowercase().as_str() {
            "pinned" => Ok(Self::Pinned),
            "physics" => Ok(Self::Physics),
            _ => Err(TimingError::Unknown {
                kind: "timing source",
                value: s.into(),
            }),
        }
    }
}

impl fmt::Display for TimingSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Pinned => "pinned",
            Self::Physics => "physics",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TimingConfig {
    /// Trap angular frequency (rad/s).
    pub omega0: f64,
    /// Atomic mass (kg).
    pub mass: f64,
    /// Lattice constant of the data-qubit array (m).
    pub lattice: f64,
    pub delta_n_max: f64,
    pub tau_meas: f64,
    pub tau_se_gates: f64,
    pub aod_switch: f64,
    pub grid_cols: usize,
    pub grid_rows: usize,
    pub buffer_fraction: f64,
    pub profile: Profile,
    /// Time to hand a factory output to an adjacent cell. Defaults to `tau_r`.
    pub tau_resource_prep: Option<f64>,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self {
            omega0: 2.0 * PI * 100e3,
            mass: YB171_MASS_U * ATOMIC_MASS_UNIT,
            lattice: 5.0 * US,
            delta_n_max: 1.0,
            tau_meas: 100.0 * US,
            tau_se_gates: 20.0 * US,
            aod_switch: 1.0 * US,
            grid_cols: 25,
            grid_rows: 5,
            buffer_fraction: 0.0,
            profile: Profile::Sta,
            tau_resource_prep: None,
        }
    }
}

impl TimingConfig {
    pub fn validate(&self) -> Result<(), TimingError> {
        let pos = [
            ("omega0", self.omega0),
            ("mass", self.mass),
            ("lattice", self.lattice),
            ("delta_n_max", self.delta_n_max),
            ("tau_meas", self.tau_meas),
            ("tau_se_gates", self.tau_se_gates),
        ];
        for (name, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return Err(TimingError::InvalidConfig(format!("{name} must be positive")));
            }
        }
        if self.aod_switch < 0.0 || self.buffer_fraction < 0.0 {
            return Err(TimingError::InvalidConfig("negative aod_switch or buffer_fraction".into()));
        }
        if self.grid_cols == 0 || self.grid_rows == 0 {
            return Err(TimingError::InvalidConfig("empty grid".into()));
        }
        Ok(())
    }
}

/// Time to move an atom over `l` metres with excitation exactly `Δn_max`.
pub fn shuttle_time(l: f64, profile: Profile, cfg: &TimingConfig) -> Result<f64, TimingError> {
    if !(l > 0.0) {
        return Err(TimingError::NonPositiveDistance(l));
    }
    let (m, w, dn) = (cfg.mass, cfg.omega0, cfg.delta_n_max);
    Ok(match profile {
        Profile::Cv => (m * l * l / (2.0 * HBAR * w * dn)).sqrt(),
        Profile::Cj => (36.0 * m * l * l / (HBAR * w.powi(3) * dn)).powf(0.25),
        Profile::Sta => (3600.0 * m * l * l / (HBAR * w.powi(5) * dn)).powf(1.0 / 6.0),
    })
}

/// Like [`shuttle_time`] but zero for zero distance.
fn leg(l: f64, cfg: &TimingConfig) -> f64 {
    if l == 0.0 {
        0.0
    } else {
        shuttle_time(l, cfg.profile, cfg).expect("positive leg")
    }
}

fn check_d(d: usize) -> Result<(), TimingError> {
    if d < 3 || d % 2 == 0 {
        Err(TimingError::InvalidDistance(d))
    } else {
        Ok(())
    }
}

/// Per-mode durations in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DurationTable {
    pub tau_se: f64,
    pub tau_se_gates: f64,
    pub tau_meas: f64,
    pub tau_cx: f64,
    pub tau_h: f64,
    pub tau_mx: f64,
    pub tau_mz: f64,
    pub tau_r: f64,
    pub tau_prep0: f64,
    pub tau_prep_plus: f64,
    pub tau_prep_t: f64,
    pub tau_prep_y: f64,
    pub tau_prep_phi: f64,
    /// One R5 swap over a single cell pitch.
    pub tau_swap: f64,
}

impl DurationTable {
    /// The fixed table used for reproducing the headline estimates.
    pub fn pinned() -> Self {
        let tau_se = 120.0 * US;
        let tau_r = 220.0 * US;
        let tau_cx = 150.0 * US;
        Self {
            tau_se,
            tau_se_gates: 20.0 * US,
            tau_meas: 100.0 * US,
            tau_cx,
            tau_h: 90.0 * US,
            tau_mx: 100.0 * US,
            tau_mz: 100.0 * US,
            tau_r,
            tau_prep0: 2.0 * tau_se,
            tau_prep_plus: 2.0 * tau_se,
            tau_prep_t: tau_r,
            tau_prep_y: tau_r,
            tau_prep_phi: tau_r,
            tau_swap: tau_cx / 2.0,
        }
    }

    pub fn tau_m(&self) -> f64 {
        self.tau_mx.max(self.tau_mz)
    }

    pub fn tau_ops(&self) -> f64 {
        self.tau_h.max(self.tau_m()).max(self.tau_cx)
    }

    /// `τ_r + max(τ_H, τ_M, τ_CX) + 2 τ_SE`.
    pub fn tau_cycle(&self) -> f64 {
        self.tau_r + self.tau_ops() + 2.0 * self.tau_se
    }
}

/// Mean two-leg routing time over ordered pairs of distinct cells, moving
/// along x first and then along y.
pub fn route_time_avg(pitch: f64, cols: usize, rows: usize, cfg: &TimingConfig) -> f64 {
    let cells = cols * rows;
    if cells < 2 {
        return 0.0;
    }
    // count ordered pairs per |dx| and per |dy| instead of looping over pairs
    let mut total = 0.0;
    for dx in 0..cols {
        let nx = if dx == 0 { cols } else { 2 * (cols - dx) };
        for dy in 0..rows {
            if dx == 0 && dy == 0 {
                continue;
            }
            let ny = if dy == 0 { rows } else { 2 * (rows - dy) };
            total += (nx * ny) as f64 * (leg(dx as f64 * pitch, cfg) + leg(dy as f64 * pitch, cfg));
        }
    }
    total / (cells * (cells - 1)) as f64
}

/// Physics-mode durations for distance `d`.
pub fn mode_durations(d: usize, cfg: &TimingConfig) -> Result<DurationTable, TimingError> {
    check_d(d)?;
    cfg.validate()?;
    let cell = d as f64 * cfg.lattice;
    let pitch = cell * (1.0 + cfg.buffer_fraction);
    let tau_se = cfg.tau_se_gates + cfg.tau_meas;
    let tau_r = route_time_avg(pitch, cfg.grid_cols, cfg.grid_rows, cfg);
    let tau_prep = cfg.tau_resource_prep.unwrap_or(tau_r);
    Ok(DurationTable {
        tau_se,
        tau_se_gates: cfg.tau_se_gates,
        tau_meas: cfg.tau_meas,
        tau_cx: 2.0 * shuttle_time(cell, cfg.profile, cfg)?,
        tau_h: hadamard_time(d, HadamardMethod::DirectRotation, cfg)?,
        tau_mx: cfg.tau_meas,
        tau_mz: cfg.tau_meas,
        tau_r,
        tau_prep0: 2.0 * tau_se,
        tau_prep_plus: 2.0 * tau_se,
        tau_prep_t: tau_prep,
        tau_prep_y: tau_prep,
        tau_prep_phi: tau_prep,
        tau_swap: shuttle_time(pitch, cfg.profile, cfg)?,
    })
}

/// Durations from either source.
pub fn durations(source: TimingSource, d: usize, cfg: &TimingConfig) -> Result<DurationTable, TimingError> {
    match source {
        TimingSource::Pinned => Ok(DurationTable::pinned()),
        TimingSource::Physics => mode_durations(d, cfg),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HadamardMethod {
    DirectRotation,
    AodSort { space_efficient: bool },
}

impl FromStr for HadamardMethod {
    type Err = TimingError;
    fn from_str(s: &str) -> Result<Self, TimingError> {
        match s {
            "direct_rotation" | "direct" => Ok(Self::DirectRotation),
            "aod_sort" | "aod" => Ok(Self::AodSort { space_efficient: false }),
            "aod_sort_space_efficient" | "aod_space" => Ok(Self::AodSort { space_efficient: true }),
            _ => Err(TimingError::Unknown {
                kind: "hadamard method",
                value: s.into(),
            }),
        }
    }
}

/// Reflection steps of the divide-and-conquer rearrangement: `ceil(log2 d) + 1`.
pub fn aod_sort_steps(d: usize) -> usize {
    (usize::BITS - (d.max(1) - 1).leading_zeros()) as usize + 1
}

/// Logical Hadamard time, excluding the transversal single-qubit layer for
/// the AOD sort (which is dominated by the shuttles).
pub fn hadamard_time(d: usize, method: HadamardMethod, cfg: &TimingConfig) -> Result<f64, TimingError> {
    if d < 3 {
        return Err(TimingError::InvalidDistance(d));
    }
    let l = cfg.lattice;
    match method {
        HadamardMethod::DirectRotation => {
            // outermost atom sweeps a quarter circle of radius √2 (d-1) L / 2
            let arc = PI / 2.0 * 2f64.sqrt() * (d - 1) as f64 * l / 2.0;
            Ok(shuttle_time(arc, cfg.profile, cfg)? + cfg.aod_switch)
        }
        HadamardMethod::AodSort { space_efficient } => {
            let step = shuttle_time(d as f64 * l, cfg.profile, cfg)?;
            let t = aod_sort_steps(d) as f64 * step;
            Ok(if space_efficient { 2.0 * t } else { t })
        }
    }
}

/// Fold-transversal S by diagonal AOD shuttles: stage `k` pairs atoms `k`
/// lattice sites from the diagonal, a diagonal hop of `√2 k L` there and back,
/// followed by an AOD reconfiguration. Space-efficient layouts double it.
pub fn fold_transversal_s_time(d: usize, space_efficient: bool, cfg: &TimingConfig) -> Result<f64, TimingError> {
    if d < 3 {
        return Err(TimingError::InvalidDistance(d));
    }
    let mut t = 0.0;
    for k in 1..d {
        let hop = 2f64.sqrt() * k as f64 * cfg.lattice;
        t += 2.0 * shuttle_time(hop, cfg.profile, cfg)? + cfg.aod_switch;
    }
    Ok(if space_efficient { 2.0 * t } else { t })
}

/// Shuttling-based SE gate time for a zoned layout: syndrome qubits move into
/// the block and out again (one cell length each) and hop one lattice site for
/// each of the four entangling layers. Measurement is not included.
pub fn shuttled_se_time(d: usize, cfg: &TimingConfig) -> Result<f64, TimingError> {
    if d < 3 {
        return Err(TimingError::InvalidDistance(d));
    }
    let cell = shuttle_time(d as f64 * cfg.lattice, cfg.profile, cfg)?;
    let hop = shuttle_time(cfg.lattice, cfg.profile, cfg)?;
    Ok(2.0 * cell + 4.0 * hop + cfg.tau_se_gates)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub d: usize,
    pub tau_se: f64,
    pub tau_cx: f64,
    pub tau_h_direct: f64,
    pub tau_h_aod: f64,
    pub tau_r: f64,
    pub tau_fold_s: f64,
}

pub fn sweep_row(d: usize, cfg: &TimingConfig) -> Result<SweepRow, TimingError> {
    let t = mode_durations(d, cfg)?;
    Ok(SweepRow {
        d,
        tau_se: t.tau_se,
        tau_cx: t.tau_cx,
        tau_h_direct: t.tau_h,
        tau_h_aod: hadamard_time(d, HadamardMethod::AodSort { space_efficient: false }, cfg)?,
        tau_r: t.tau_r,
        tau_fold_s: fold_transversal_s_time(d, false, cfg)?,
    })
}

/// CSV over odd distances in `dmin..=dmax`, times in seconds.
pub fn sweep_csv(dmin: usize, dmax: usize, cfg: &TimingConfig) -> Result<String, TimingError> {
    let mut out = String::from("d,tau_SE,tau_CX,tau_H_direct,tau_H_aod,tau_r,tau_foldS\n");
    for d in (dmin..=dmax).filter(|d| d % 2 == 1 && *d >= 3) {
        let r = sweep_row(d, cfg)?;
        out.push_str(&format!(
            "{},{:e},{:e},{:e},{:e},{:e},{:e}\n",
            r.d, r.tau_se, r.tau_cx, r.tau_h_direct, r.tau_h_aod, r.tau_r, r.tau_fold_s
        ));
    }
    Ok(out)
}
