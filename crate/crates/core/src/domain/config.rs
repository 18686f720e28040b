//! Simulation configuration: defaults, the flat `key = value` file format and
//! validation into a [`ValidConfig`] with derived slot counts.

use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};

pub use crate::error::ConfigError;
use crate::scalar::Scalar;

/// Speed with an explicit unit tag, e.g. `40 km/h` or `11.5 m/s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Speed<F> {
    Mps(F),
    Kmh(F),
}

impl<F: Scalar> Speed<F> {
    pub fn to_mps(self) -> F {
        match self {
            Speed::Mps(v) => v,
            Speed::Kmh(v) => v / F::lit(3.6),
        }
    }
}

impl<F: Scalar> fmt::Display for Speed<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Speed::Mps(v) => write!(f, "{v} m/s"),
            Speed::Kmh(v) => write!(f, "{v} km/h"),
        }
    }
}

/// Power with an explicit unit tag, e.g. `-70 dBm` or `1 W`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Power<F> {
    Watts(F),
    Dbm(F),
}

impl<F: Scalar> Power<F> {
    pub fn to_watts(self) -> F {
        match self {
            Power::Watts(w) => w,
            Power::Dbm(p) => crate::channel::dbm_to_watts(p),
        }
    }
}

impl<F: Scalar> fmt::Display for Power<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Power::Watts(v) => write!(f, "{v} W"),
            Power::Dbm(v) => write!(f, "{v} dBm"),
        }
    }
}

/// CH selection scheme under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    Proposed,
    Random,
    Vmasc,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Proposed, Scheme::Vmasc, Scheme::Random];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::Random => "random",
            Scheme::Vmasc => "vmasc",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "proposed" => Ok(Scheme::Proposed),
            "random" => Ok(Scheme::Random),
            "vmasc" => Ok(Scheme::Vmasc),
            other => Err(format!("unknown scheme `{other}` (expected proposed | random | vmasc)")),
        }
    }
}

macro_rules! keyword_enum {
    ($(#[$meta:meta])* $name:ident { $($(#[$vmeta:meta])* $variant:ident => $kw:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum $name { $($(#[$vmeta])* $variant),+ }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($name::$variant => $kw),+ })
            }
        }

        impl FromStr for $name {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s.trim() {
                    $($kw => Ok($name::$variant),)+
                    other => Err(format!("unknown value `{other}`")),
                }
            }
        }
    };
}

keyword_enum!(
    /// How the residual path ξ of a candidate CH is estimated.
    ResidualPathMode {
        /// `2 r_U - v_avg * horizon`, position-independent.
        Printed => "printed",
        /// Distance left to the coverage-disc boundary along the direction of travel.
        Geometric => "geometric",
    }
);

keyword_enum!(
    /// How backup-list criteria are turned into scores.
    BackupScoring {
        Rank => "rank",
        /// Weighted sum of the raw criterion values.
        Raw => "raw",
    }
);

keyword_enum!(
    /// Which residual-path values rank best in the backup list.
    PathOrientation {
        LargerIsBetter => "larger",
        SmallerIsBetter => "smaller",
    }
);

keyword_enum!(
    /// Channel gain used for CH-to-member SNR samples.
    SnrMode {
        Instantaneous => "instantaneous",
        LargeScale => "large_scale",
    }
);

keyword_enum!(
    UavPolicy {
        Static => "static",
        /// Drift toward the cluster centroid, capped by `uav_max_speed` and `uav_min_separation`.
        FollowCentroid => "follow",
    }
);

/// Every tunable of a simulation run. Construct with [`Default`] or
/// [`SimConfig::parse`], then call [`SimConfig::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig<F> {
    pub num_vehicles: usize,
    pub num_uavs: usize,
    pub road_length: F,
    /// Lateral offsets of the forward and backward lanes.
    pub lane_offsets: [F; 2],
    pub speed_min: Speed<F>,
    pub speed_max: Speed<F>,
    pub uav_altitude: F,
    pub coverage_radius: F,
    pub uav_min_separation: F,
    pub uav_max_speed: Speed<F>,
    pub slot: F,
    pub duration: F,
    pub cam_interval: F,
    pub beacon_interval: F,
    pub cluster_interval: F,
    /// `T_w`, number of speed samples averaged.
    pub speed_window: usize,
    pub ref_gain: F,
    pub noise_power: Power<F>,
    pub vehicle_tx_power: Power<F>,
    pub uav_tx_power: Power<F>,
    pub v2v_path_loss: F,
    pub path_loss_exponent: F,
    pub shadowing_db: F,
    pub neighbor_range: F,
    pub eps_d: F,
    pub eps_n: usize,
    pub w_s: F,
    pub w_n: F,
    pub w_p: F,
    pub w_r: F,
    pub w_snr: F,
    pub lambda_r: F,
    pub snr_mean: F,
    pub snr_var: F,
    pub residual_path: ResidualPathMode,
    /// Travel time used by the printed residual path; `None` follows `cluster_interval`.
    pub residual_horizon: Option<F>,
    pub backup_scoring: BackupScoring,
    pub path_orientation: PathOrientation,
    pub snr_mode: SnrMode,
    /// Lets the benchmark schemes use the backup list too.
    pub benchmark_backup: bool,
    pub uav_policy: UavPolicy,
    pub scheme: Scheme,
    pub seed: u64,
}

impl<F: Scalar> Default for SimConfig<F> {
    fn default() -> Self {
        Self {
            num_vehicles: 12,
            num_uavs: 3,
            road_length: F::lit(1000.0),
            lane_offsets: [F::lit(-2.0), F::lit(2.0)],
            speed_min: Speed::Kmh(F::lit(40.0)),
            speed_max: Speed::Kmh(F::lit(60.0)),
            uav_altitude: F::lit(100.0),
            coverage_radius: F::lit(500.0),
            uav_min_separation: F::lit(100.0),
            uav_max_speed: Speed::Mps(F::lit(20.0)),
            slot: F::lit(1.0),
            duration: F::lit(700.0),
            cam_interval: F::lit(10.0),
            beacon_interval: F::lit(10.0),
            cluster_interval: F::lit(70.0),
            speed_window: 10,
            ref_gain: F::lit(1e-5),
            noise_power: Power::Dbm(F::lit(-114.0)),
            vehicle_tx_power: Power::Dbm(F::lit(-70.0)),
            uav_tx_power: Power::Watts(F::lit(1.0)),
            v2v_path_loss: F::lit(1e-5),
            path_loss_exponent: F::lit(3.0),
            shadowing_db: F::lit(4.0),
            neighbor_range: F::lit(150.0),
            eps_d: F::lit(100.0),
            eps_n: 1,
            w_s: F::lit(0.5),
            w_n: F::lit(0.25),
            w_p: F::lit(0.25),
            w_r: F::lit(0.6),
            w_snr: F::lit(0.4),
            lambda_r: F::lit(0.5),
            snr_mean: F::lit(1.0),
            snr_var: F::lit(0.1),
            residual_path: ResidualPathMode::Printed,
            residual_horizon: None,
            backup_scoring: BackupScoring::Rank,
            path_orientation: PathOrientation::LargerIsBetter,
            snr_mode: SnrMode::Instantaneous,
            benchmark_backup: false,
            uav_policy: UavPolicy::Static,
            scheme: Scheme::Proposed,
            seed: 42,
        }
    }
}

/// Keys accepted by [`SimConfig::set`], in echo order.
pub const CONFIG_KEYS: &[&str] = &[
    "num_vehicles",
    "num_uavs",
    "road_length",
    "lane_offsets",
    "speed_min",
    "speed_max",
    "uav_altitude",
    "coverage_radius",
    "uav_min_separation",
    "uav_max_speed",
    "slot",
    "duration",
    "cam_interval",
    "beacon_interval",
    "cluster_interval",
    "speed_window",
    "ref_gain",
    "noise_power",
    "vehicle_tx_power",
    "uav_tx_power",
    "v2v_path_loss",
    "path_loss_exponent",
    "shadowing_db",
    "neighbor_range",
    "eps_d",
    "eps_n",
    "w_s",
    "w_n",
    "w_p",
    "w_r",
    "w_snr",
    "lambda_r",
    "snr_mean",
    "snr_var",
    "residual_path",
    "residual_horizon",
    "backup_scoring",
    "path_orientation",
    "snr_mode",
    "benchmark_backup",
    "uav_policy",
    "scheme",
    "seed",
];

fn parse_scalar<F: Scalar>(field: &'static str, value: &str) -> Result<F, ConfigError> {
    value
        .trim()
        .parse::<F>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| ConfigError::BadValue { field, value: value.to_string() })
}

fn parse_plain<T: FromStr>(field: &'static str, value: &str) -> Result<T, ConfigError> {
    value.trim().parse::<T>().map_err(|_| ConfigError::BadValue { field, value: value.to_string() })
}

fn parse_speed<F: Scalar>(field: &'static str, value: &str) -> Result<Speed<F>, ConfigError> {
    let v = value.trim();
    if let Some(num) = v.strip_suffix("km/h") {
        Ok(Speed::Kmh(parse_scalar(field, num)?))
    } else if let Some(num) = v.strip_suffix("m/s") {
        Ok(Speed::Mps(parse_scalar(field, num)?))
    } else {
        Err(ConfigError::BadValue { field, value: format!("{value} (unit tag km/h or m/s required)") })
    }
}

fn parse_power<F: Scalar>(field: &'static str, value: &str) -> Result<Power<F>, ConfigError> {
    let v = value.trim();
    if let Some(num) = v.strip_suffix("dBm") {
        Ok(Power::Dbm(parse_scalar(field, num)?))
    } else if let Some(num) = v.strip_suffix('W') {
        Ok(Power::Watts(parse_scalar(field, num)?))
    } else {
        Err(ConfigError::BadValue { field, value: format!("{value} (unit tag dBm or W required)") })
    }
}

impl<F: Scalar> SimConfig<F> {
    /// Parses the flat `key = value` format on top of the defaults.
    /// Blank lines and `#` comments are ignored; unknown keys are errors.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: idx + 1 })?;
            cfg.set(key.trim(), value.trim()).map_err(|e| match e {
                ConfigError::UnknownKey { key, .. } => ConfigError::UnknownKey { line: idx + 1, key },
                other => other,
            })?;
        }
        Ok(cfg)
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "num_vehicles" => self.num_vehicles = parse_plain("num_vehicles", value)?,
            "num_uavs" => self.num_uavs = parse_plain("num_uavs", value)?,
            "road_length" => self.road_length = parse_scalar("road_length", value)?,
            "lane_offsets" => {
                let parts: Vec<&str> = value.split(',').collect();
                if parts.len() != 2 {
                    return Err(ConfigError::BadValue { field: "lane_offsets", value: value.to_string() });
                }
                self.lane_offsets =
                    [parse_scalar("lane_offsets", parts[0])?, parse_scalar("lane_offsets", parts[1])?];
            }
            "speed_min" => self.speed_min = parse_speed("speed_min", value)?,
            "speed_max" => self.speed_max = parse_speed("speed_max", value)?,
            "uav_altitude" => self.uav_altitude = parse_scalar("uav_altitude", value)?,
            "coverage_radius" => self.coverage_radius = parse_scalar("coverage_radius", value)?,
            "uav_min_separation" => self.uav_min_separation = parse_scalar("uav_min_separation", value)?,
            "uav_max_speed" => self.uav_max_speed = parse_speed("uav_max_speed", value)?,
            "slot" => self.slot = parse_scalar("slot", value)?,
            "duration" => self.duration = parse_scalar("duration", value)?,
            "cam_interval" => self.cam_interval = parse_scalar("cam_interval", value)?,
            "beacon_interval" => self.beacon_interval = parse_scalar("beacon_interval", value)?,
            "cluster_interval" => self.cluster_interval = parse_scalar("cluster_interval", value)?,
            "speed_window" => self.speed_window = parse_plain("speed_window", value)?,
            "ref_gain" => self.ref_gain = parse_scalar("ref_gain", value)?,
            "noise_power" => self.noise_power = parse_power("noise_power", value)?,
            "vehicle_tx_power" => self.vehicle_tx_power = parse_power("vehicle_tx_power", value)?,
            "uav_tx_power" => self.uav_tx_power = parse_power("uav_tx_power", value)?,
            "v2v_path_loss" => self.v2v_path_loss = parse_scalar("v2v_path_loss", value)?,
            "path_loss_exponent" => self.path_loss_exponent = parse_scalar("path_loss_exponent", value)?,
            "shadowing_db" => self.shadowing_db = parse_scalar("shadowing_db", value)?,
            "neighbor_range" => self.neighbor_range = parse_scalar("neighbor_range", value)?,
            "eps_d" => self.eps_d = parse_scalar("eps_d", value)?,
            "eps_n" => self.eps_n = parse_plain("eps_n", value)?,
            "w_s" => self.w_s = parse_scalar("w_s", value)?,
            "w_n" => self.w_n = parse_scalar("w_n", value)?,
            "w_p" => self.w_p = parse_scalar("w_p", value)?,
            "w_r" => self.w_r = parse_scalar("w_r", value)?,
            "w_snr" => self.w_snr = parse_scalar("w_snr", value)?,
            "lambda_r" => self.lambda_r = parse_scalar("lambda_r", value)?,
            "snr_mean" => self.snr_mean = parse_scalar("snr_mean", value)?,
            "snr_var" => self.snr_var = parse_scalar("snr_var", value)?,
            "residual_path" => self.residual_path = parse_plain("residual_path", value)?,
            "residual_horizon" => {
                self.residual_horizon = match value.trim() {
                    "auto" => None,
                    v => Some(parse_scalar("residual_horizon", v)?),
                }
            }
            "backup_scoring" => self.backup_scoring = parse_plain("backup_scoring", value)?,
            "path_orientation" => self.path_orientation = parse_plain("path_orientation", value)?,
            "snr_mode" => self.snr_mode = parse_plain("snr_mode", value)?,
            "benchmark_backup" => self.benchmark_backup = parse_plain("benchmark_backup", value)?,
            "uav_policy" => self.uav_policy = parse_plain("uav_policy", value)?,
            "scheme" => self.scheme = parse_plain("scheme", value)?,
            "seed" => self.seed = parse_plain("seed", value)?,
            other => return Err(ConfigError::UnknownKey { line: 0, key: other.to_string() }),
        }
        Ok(())
    }

    /// Textual value of one key, in the same syntax [`SimConfig::set`] accepts.
    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "num_vehicles" => self.num_vehicles.to_string(),
            "num_uavs" => self.num_uavs.to_string(),
            "road_length" => self.road_length.to_string(),
            "lane_offsets" => format!("{}, {}", self.lane_offsets[0], self.lane_offsets[1]),
            "speed_min" => self.speed_min.to_string(),
            "speed_max" => self.speed_max.to_string(),
            "uav_altitude" => self.uav_altitude.to_string(),
            "coverage_radius" => self.coverage_radius.to_string(),
            "uav_min_separation" => self.uav_min_separation.to_string(),
            "uav_max_speed" => self.uav_max_speed.to_string(),
            "slot" => self.slot.to_string(),
            "duration" => self.duration.to_string(),
            "cam_interval" => self.cam_interval.to_string(),
            "beacon_interval" => self.beacon_interval.to_string(),
            "cluster_interval" => self.cluster_interval.to_string(),
            "speed_window" => self.speed_window.to_string(),
            "ref_gain" => self.ref_gain.to_string(),
            "noise_power" => self.noise_power.to_string(),
            "vehicle_tx_power" => self.vehicle_tx_power.to_string(),
            "uav_tx_power" => self.uav_tx_power.to_string(),
            "v2v_path_loss" => self.v2v_path_loss.to_string(),
            "path_loss_exponent" => self.path_loss_exponent.to_string(),
            "shadowing_db" => self.shadowing_db.to_string(),
            "neighbor_range" => self.neighbor_range.to_string(),
            "eps_d" => self.eps_d.to_string(),
            "eps_n" => self.eps_n.to_string(),
            "w_s" => self.w_s.to_string(),
            "w_n" => self.w_n.to_string(),
            "w_p" => self.w_p.to_string(),
            "w_r" => self.w_r.to_string(),
            "w_snr" => self.w_snr.to_string(),
            "lambda_r" => self.lambda_r.to_string(),
            "snr_mean" => self.snr_mean.to_string(),
            "snr_var" => self.snr_var.to_string(),
            "residual_path" => self.residual_path.to_string(),
            "residual_horizon" => self.residual_horizon.map_or_else(|| "auto".to_string(), |h| h.to_string()),
            "backup_scoring" => self.backup_scoring.to_string(),
            "path_orientation" => self.path_orientation.to_string(),
            "snr_mode" => self.snr_mode.to_string(),
            "benchmark_backup" => self.benchmark_backup.to_string(),
            "uav_policy" => self.uav_policy.to_string(),
            "scheme" => self.scheme.to_string(),
            "seed" => self.seed.to_string(),
            _ => return None,
        })
    }

    /// Canonical `key = value` rendering; [`SimConfig::parse`] reads it back.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        for key in CONFIG_KEYS {
            out.push_str(key);
            out.push_str(" = ");
            out.push_str(&self.get(key).unwrap_or_default());
            out.push('\n');
        }
        out
    }

    /// Hash of every key except `scheme` and `seed`. Runs sharing a digest
    /// belong to one experiment family and may be aggregated together.
    pub fn family_digest(&self) -> String {
        let mut hasher = Sha256::new();
        for key in CONFIG_KEYS.iter().filter(|k| !matches!(**k, "scheme" | "seed")) {
            hasher.update(key.as_bytes());
            hasher.update(b"=");
            hasher.update(self.get(key).unwrap_or_default().as_bytes());
            hasher.update(b"\n");
        }
        hasher.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<ValidConfig<F>, ConfigError> {
        fn positive<F: Scalar>(field: &'static str, v: F) -> Result<(), ConfigError> {
            if v.is_finite() && v > F::zero() {
                Ok(())
            } else {
                Err(ConfigError::Invalid { field, reason: format!("must be positive, got {v}") })
            }
        }
        fn non_negative<F: Scalar>(field: &'static str, v: F) -> Result<(), ConfigError> {
            if v.is_finite() && v >= F::zero() {
                Ok(())
            } else {
                Err(ConfigError::Invalid { field, reason: format!("must be non-negative, got {v}") })
            }
        }
        fn slot_multiple<F: Scalar>(field: &'static str, interval: F, slot: F) -> Result<usize, ConfigError> {
            let ratio = (interval / slot).as_f64();
            let rounded = ratio.round();
            if rounded >= 1.0 && (ratio - rounded).abs() <= 1e-9 * ratio.max(1.0) {
                Ok(rounded as usize)
            } else {
                Err(ConfigError::NotSlotMultiple { field, interval: interval.as_f64(), slot: slot.as_f64() })
            }
        }

        if self.num_vehicles == 0 {
            return Err(ConfigError::Invalid { field: "num_vehicles", reason: "must be at least 1".into() });
        }
        if self.num_uavs == 0 {
            return Err(ConfigError::Invalid { field: "num_uavs", reason: "must be at least 1".into() });
        }
        positive("road_length", self.road_length)?;
        let [lane_a, lane_b] = self.lane_offsets;
        if !(lane_a.is_finite() && lane_b.is_finite()) || lane_a == lane_b {
            return Err(ConfigError::Invalid { field: "lane_offsets", reason: "need two distinct finite offsets".into() });
        }
        let v_min = self.speed_min.to_mps();
        let v_max = self.speed_max.to_mps();
        positive("speed_min", v_min)?;
        positive("speed_max", v_max)?;
        if v_min > v_max {
            return Err(ConfigError::Invalid { field: "speed_min", reason: "exceeds speed_max".into() });
        }
        positive("uav_altitude", self.uav_altitude)?;
        positive("coverage_radius", self.coverage_radius)?;
        positive("uav_min_separation", self.uav_min_separation)?;
        let uav_v_max = self.uav_max_speed.to_mps();
        positive("uav_max_speed", uav_v_max)?;
        if self.num_uavs > 1 {
            let spacing = self.road_length / F::from_usize(self.num_uavs).unwrap_or_else(F::one);
            if spacing < self.uav_min_separation {
                return Err(ConfigError::Invalid {
                    field: "uav_min_separation",
                    reason: format!("hover spacing {spacing} m is below the minimum separation"),
                });
            }
        }

        positive("slot", self.slot)?;
        positive("duration", self.duration)?;
        positive("cam_interval", self.cam_interval)?;
        positive("beacon_interval", self.beacon_interval)?;
        positive("cluster_interval", self.cluster_interval)?;
        let n_slots = slot_multiple("duration", self.duration, self.slot)?;
        let cam_every = slot_multiple("cam_interval", self.cam_interval, self.slot)?;
        let beacon_every = slot_multiple("beacon_interval", self.beacon_interval, self.slot)?;
        let cluster_every = slot_multiple("cluster_interval", self.cluster_interval, self.slot)?;

        if self.speed_window == 0 {
            return Err(ConfigError::Invalid { field: "speed_window", reason: "must be at least 1".into() });
        }
        positive("ref_gain", self.ref_gain)?;
        let noise = self.noise_power.to_watts();
        let vehicle_tx = self.vehicle_tx_power.to_watts();
        let uav_tx = self.uav_tx_power.to_watts();
        positive("noise_power", noise)?;
        positive("vehicle_tx_power", vehicle_tx)?;
        positive("uav_tx_power", uav_tx)?;
        positive("v2v_path_loss", self.v2v_path_loss)?;
        positive("path_loss_exponent", self.path_loss_exponent)?;
        non_negative("shadowing_db", self.shadowing_db)?;
        positive("neighbor_range", self.neighbor_range)?;
        if !self.eps_d.is_finite() {
            return Err(ConfigError::Invalid { field: "eps_d", reason: "must be finite".into() });
        }

        non_negative("w_s", self.w_s)?;
        non_negative("w_n", self.w_n)?;
        non_negative("w_p", self.w_p)?;
        let ahp = self.w_s + self.w_n + self.w_p;
        if (ahp - F::one()).abs() > F::lit(1e-6) {
            return Err(ConfigError::AhpWeightSum(ahp.as_f64()));
        }
        non_negative("w_r", self.w_r)?;
        non_negative("w_snr", self.w_snr)?;
        let lik = self.w_r + self.w_snr;
        if (lik - F::one()).abs() > F::lit(1e-6) {
            return Err(ConfigError::LikelihoodWeightSum(lik.as_f64()));
        }
        positive("lambda_r", self.lambda_r)?;
        if !self.snr_mean.is_finite() {
            return Err(ConfigError::Invalid { field: "snr_mean", reason: "must be finite".into() });
        }
        positive("snr_var", self.snr_var)?;
        let residual_horizon = self.residual_horizon.unwrap_or(self.cluster_interval);
        positive("residual_horizon", residual_horizon)?;

        let mut cfg = self.clone();
        cfg.duration = self.slot * F::from_usize(n_slots).unwrap_or_else(F::zero);
        Ok(ValidConfig {
            cfg,
            v_min,
            v_max,
            uav_v_max,
            noise,
            vehicle_tx,
            uav_tx,
            n_slots,
            cam_every,
            beacon_every,
            cluster_every,
            residual_horizon,
        })
    }
}

/// A configuration that passed [`SimConfig::validate`], with SI-unit values and
/// slot counts resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidConfig<F> {
    cfg: SimConfig<F>,
    /// Speeds in m/s.
    pub v_min: F,
    pub v_max: F,
    pub uav_v_max: F,
    /// Powers in watts.
    pub noise: F,
    pub vehicle_tx: F,
    pub uav_tx: F,
    /// `N_t`, so that `n_slots * slot == duration`.
    pub n_slots: usize,
    pub cam_every: usize,
    pub beacon_every: usize,
    pub cluster_every: usize,
    pub residual_horizon: F,
}

impl<F> std::ops::Deref for ValidConfig<F> {
    type Target = SimConfig<F>;
    fn deref(&self) -> &SimConfig<F> {
        &self.cfg
    }
}

impl<F: Scalar> ValidConfig<F> {
    pub fn config(&self) -> &SimConfig<F> {
        &self.cfg
    }

    pub(crate) fn config_mut(&mut self) -> &mut SimConfig<F> {
        &mut self.cfg
    }

    /// Lane offset for a travel direction.
    pub fn lane_y(&self, dir: crate::domain::Direction) -> F {
        match dir {
            crate::domain::Direction::Forward => self.cfg.lane_offsets[0],
            crate::domain::Direction::Backward => self.cfg.lane_offsets[1],
        }
    }
}

#[cfg(test)]
#[allow(clippy::field_reassign_with_default)]
mod tests {
    use super::*;

    #[test]
    fn default_scenario_is_valid() {
        let v = SimConfig::<f64>::default().validate().unwrap();
        assert_eq!(v.num_vehicles, 12);
        assert_eq!(v.num_uavs, 3);
        assert_eq!(v.n_slots, 700);
        assert_eq!(v.cluster_every, 70);
        assert_eq!(v.cam_every, 10);
        assert!((v.v_min - 40.0 / 3.6).abs() < 1e-12);
        assert!((v.noise - 3.981_071_705_534_97e-15).abs() < 1e-24);
    }

    #[test]
    fn weight_sum_is_checked() {
        let cfg = SimConfig::<f64> { w_s: 0.7, ..Default::default() };
        assert!(matches!(cfg.validate(), Err(ConfigError::AhpWeightSum(s)) if (s - 1.2).abs() < 1e-12));
        let cfg = SimConfig::<f64> { w_r: 0.5, ..Default::default() };
        assert!(matches!(cfg.validate(), Err(ConfigError::LikelihoodWeightSum(_))));
    }

    #[test]
    fn cam_interval_must_divide_by_slot() {
        let cfg = SimConfig::<f64> { slot: 7.0, ..Default::default() };
        assert!(matches!(cfg.validate(), Err(ConfigError::NotSlotMultiple { field: "cam_interval", .. })));
    }

    #[test]
    fn errors_name_the_field() {
        let cfg = SimConfig::<f64> { coverage_radius: 0.0, ..Default::default() };
        assert!(cfg.validate().unwrap_err().to_string().contains("coverage_radius"));
        let cfg = SimConfig::<f64> { uav_min_separation: 400.0, ..Default::default() };
        assert!(cfg.validate().unwrap_err().to_string().contains("uav_min_separation"));
    }

    #[test]
    fn duration_is_exact_multiple_after_validation() {
        let cfg = SimConfig::<f64> { slot: 0.1, cam_interval: 10.0, ..Default::default() };
        let v = cfg.validate().unwrap();
        assert_eq!(v.n_slots, 7000);
        assert_eq!(v.slot * v.n_slots as f64, v.duration);
    }

    #[test]
    fn parse_round_trips_the_echo() {
        let mut cfg = SimConfig::<f64>::default();
        cfg.speed_min = Speed::Mps(9.5);
        cfg.scheme = Scheme::Vmasc;
        cfg.residual_horizon = Some(35.0);
        let back = SimConfig::<f64>::parse(&cfg.to_kv()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn parse_rejects_unknown_keys_and_missing_units() {
        let err = SimConfig::<f64>::parse("num_vehicles = 5\nbogus = 3\n").unwrap_err();
        assert_eq!(err, ConfigError::UnknownKey { line: 2, key: "bogus".into() });
        assert!(SimConfig::<f64>::parse("speed_min = 40").is_err());
        let cfg = SimConfig::<f64>::parse("# comment\nspeed_min = 36 km/h  # trailing\n").unwrap();
        assert_eq!(cfg.speed_min, Speed::Kmh(36.0));
    }

    #[test]
    fn digest_ignores_scheme_and_seed() {
        let a = SimConfig::<f64>::default();
        let b = SimConfig::<f64> { scheme: Scheme::Random, seed: 7, ..Default::default() };
        let c = SimConfig::<f64> { num_vehicles: 13, ..Default::default() };
        assert_eq!(a.family_digest(), b.family_digest());
        assert_ne!(a.family_digest(), c.family_digest());
    }
}
