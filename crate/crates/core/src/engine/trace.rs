//! Event trace records and their line-oriented text form.
//!
//! ```text
//! # uavnet-trace v1 scheme=<name> run=<i> seed=<base> mobility=<s> fading=<s> scheme_seed=<s> digest=<hex> clusters=<J> duration=<T> sample_interval=<s>
//! <time>\t<kind>\t<ids>\t<payload>
//! ```
//!
//! `ids` is `c=<cluster> v=<vehicle>` (either part optional) or `-`; `payload`
//! is space-separated `key=value` pairs or `-`. Floats use Rust's shortest
//! round-trip formatting, so writing and re-reading a trace is lossless.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::domain::{ClusterId, Scheme, VehicleId};
use crate::error::TraceParseError;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKind {
    ClusteringRound,
    CamBatch,
    BeaconOk,
    BeaconMissed,
    ChSelected,
    ChDeparted,
    ChReplacedFromBackup,
    ChReselectedFull,
    VehicleRespawn,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::ClusteringRound => "clustering_round",
            EventKind::CamBatch => "cam_batch",
            EventKind::BeaconOk => "beacon_ok",
            EventKind::BeaconMissed => "beacon_missed",
            EventKind::ChSelected => "ch_selected",
            EventKind::ChDeparted => "ch_departed",
            EventKind::ChReplacedFromBackup => "ch_replaced_from_backup",
            EventKind::ChReselectedFull => "ch_reselected_full",
            EventKind::VehicleRespawn => "vehicle_respawn",
        }
    }

    /// Events that count as a CH re-selection.
    pub fn is_reselection(self) -> bool {
        matches!(self, EventKind::ChReplacedFromBackup | EventKind::ChReselectedFull)
    }
}

impl FromStr for EventKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "clustering_round" => EventKind::ClusteringRound,
            "cam_batch" => EventKind::CamBatch,
            "beacon_ok" => EventKind::BeaconOk,
            "beacon_missed" => EventKind::BeaconMissed,
            "ch_selected" => EventKind::ChSelected,
            "ch_departed" => EventKind::ChDeparted,
            "ch_replaced_from_backup" => EventKind::ChReplacedFromBackup,
            "ch_reselected_full" => EventKind::ChReselectedFull,
            "vehicle_respawn" => EventKind::VehicleRespawn,
            other => return Err(format!("unknown event kind `{other}`")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepartureReason {
    /// Out of the UAV's coverage radius at beacon time.
    Coverage,
    /// Left the road and re-entered at the far end.
    Respawn,
}

impl DepartureReason {
    fn name(self) -> &'static str {
        match self {
            DepartureReason::Coverage => "coverage",
            DepartureReason::Respawn => "respawn",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload<F> {
    None,
    /// Cluster sizes after association, indexed by cluster.
    Round { sizes: Vec<usize> },
    /// CAMs the UAV received and the mean CH-to-member SNR, if a CH was seated.
    Cams { received: usize, snr: Option<F> },
    Selection { degraded: bool },
    /// `remaining` is the number of connected members left to choose from.
    Departure { reason: DepartureReason, remaining: usize },
    /// Stale backup entries discarded before the replacement was found.
    Replacement { skipped: usize },
    Respawn { speed: F },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimEvent<F> {
    pub time: F,
    pub kind: EventKind,
    pub cluster: Option<ClusterId>,
    pub vehicle: Option<VehicleId>,
    pub payload: Payload<F>,
}

impl<F: Scalar> SimEvent<F> {
    pub fn new(time: F, kind: EventKind) -> Self {
        Self { time, kind, cluster: None, vehicle: None, payload: Payload::None }
    }

    pub fn cluster(mut self, c: ClusterId) -> Self {
        self.cluster = Some(c);
        self
    }

    pub fn vehicle(mut self, v: VehicleId) -> Self {
        self.vehicle = Some(v);
        self
    }

    pub fn payload(mut self, p: Payload<F>) -> Self {
        self.payload = p;
        self
    }
}

impl<F: Scalar> fmt::Display for SimEvent<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t", self.time, self.kind.name())?;
        match (self.cluster, self.vehicle) {
            (None, None) => f.write_str("-")?,
            (Some(c), None) => write!(f, "c={c}")?,
            (None, Some(v)) => write!(f, "v={v}")?,
            (Some(c), Some(v)) => write!(f, "c={c} v={v}")?,
        }
        f.write_str("\t")?;
        match &self.payload {
            Payload::None => f.write_str("-"),
            Payload::Round { sizes } => {
                let s: Vec<String> = sizes.iter().map(|n| n.to_string()).collect();
                write!(f, "sizes={}", s.join(","))
            }
            Payload::Cams { received, snr: Some(s) } => write!(f, "received={received} snr={s:e}"),
            Payload::Cams { received, snr: None } => write!(f, "received={received} snr=-"),
            Payload::Selection { degraded } => write!(f, "degraded={}", u8::from(*degraded)),
            Payload::Departure { reason, remaining } => write!(f, "reason={} remaining={remaining}", reason.name()),
            Payload::Replacement { skipped } => write!(f, "skipped={skipped}"),
            Payload::Respawn { speed } => write!(f, "speed={speed:e}"),
        }
    }
}

/// Everything a run emitted plus the metadata needed to aggregate it.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace<F> {
    pub scheme: Scheme,
    pub run: usize,
    pub seed: u64,
    pub streams: crate::experiment::StreamSeeds,
    pub digest: String,
    pub clusters: usize,
    pub duration: F,
    /// Spacing of the cumulative re-selection grid (the CAM interval).
    pub sample_interval: F,
    pub events: Vec<SimEvent<F>>,
}

impl<F: Scalar> Trace<F> {
    pub fn header(&self) -> String {
        format!(
            "# uavnet-trace v1 scheme={} run={} seed={} mobility={} fading={} scheme_seed={} digest={} clusters={} duration={} sample_interval={}",
            self.scheme,
            self.run,
            self.seed,
            self.streams.mobility,
            self.streams.fading,
            self.streams.scheme,
            self.digest,
            self.clusters,
            self.duration,
            self.sample_interval
        )
    }

    pub fn to_text(&self) -> String {
        let mut out = self.header();
        out.push('\n');
        for e in &self.events {
            let _ = writeln!(out, "{e}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, TraceParseError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(TraceParseError { line: 1, reason: "empty trace".into() })?;
        let err0 = |reason: String| TraceParseError { line: 1, reason };
        let rest = header
            .strip_prefix("# uavnet-trace v1 ")
            .ok_or_else(|| err0("missing `# uavnet-trace v1` header".into()))?;
        let kv = parse_pairs(rest).map_err(err0)?;
        let get = |k: &str| kv.iter().find(|(kk, _)| kk == k).map(|(_, v)| v.as_str()).ok_or_else(|| err0(format!("header lacks `{k}`")));
        fn num<T: FromStr>(v: &str, k: &str) -> Result<T, String> {
            v.parse().map_err(|_| format!("bad header value {k}={v}"))
        }
        let streams = crate::experiment::StreamSeeds {
            mobility: num(get("mobility")?, "mobility").map_err(err0)?,
            fading: num(get("fading")?, "fading").map_err(err0)?,
            scheme: num(get("scheme_seed")?, "scheme_seed").map_err(err0)?,
        };
        let mut trace = Trace {
            scheme: get("scheme")?.parse().map_err(err0)?,
            run: num(get("run")?, "run").map_err(err0)?,
            seed: num(get("seed")?, "seed").map_err(err0)?,
            streams,
            digest: get("digest")?.to_string(),
            clusters: num(get("clusters")?, "clusters").map_err(err0)?,
            duration: num(get("duration")?, "duration").map_err(err0)?,
            sample_interval: num(get("sample_interval")?, "sample_interval").map_err(err0)?,
            events: Vec::new(),
        };
        for (idx, line) in lines {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let event = parse_event(line).map_err(|reason| TraceParseError { line: idx + 1, reason })?;
            trace.events.push(event);
        }
        Ok(trace)
    }
}

fn parse_pairs(s: &str) -> Result<Vec<(String, String)>, String> {
    s.split_whitespace()
        .map(|tok| {
            tok.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| format!("expected key=value, got `{tok}`"))
        })
        .collect()
}

fn parse_event<F: Scalar>(line: &str) -> Result<SimEvent<F>, String> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != 4 {
        return Err(format!("expected 4 tab-separated columns, got {}", cols.len()));
    }
    let time: F = cols[0].parse().map_err(|_| format!("bad time `{}`", cols[0]))?;
    let kind: EventKind = cols[1].parse()?;
    let mut event = SimEvent::new(time, kind);
    if cols[2] != "-" {
        for (k, v) in parse_pairs(cols[2])? {
            let id: u32 = v.parse().map_err(|_| format!("bad id `{v}`"))?;
            match k.as_str() {
                "c" => event.cluster = Some(ClusterId(id)),
                "v" => event.vehicle = Some(VehicleId(id)),
                _ => return Err(format!("unknown id key `{k}`")),
            }
        }
    }
    let pairs = if cols[3] == "-" { Vec::new() } else { parse_pairs(cols[3])? };
    let field = |k: &str| {
        pairs.iter().find(|(kk, _)| kk == k).map(|(_, v)| v.as_str()).ok_or_else(|| format!("{} lacks `{k}`", kind.name()))
    };
    let int = |k: &str| -> Result<usize, String> { field(k)?.parse().map_err(|_| format!("bad {k}")) };
    event.payload = match kind {
        EventKind::ClusteringRound => Payload::Round {
            sizes: field("sizes")?
                .split(',')
                .filter(|s| !s.is_empty())
                .map(|s| s.parse().map_err(|_| format!("bad size `{s}`")))
                .collect::<Result<_, _>>()?,
        },
        EventKind::CamBatch => Payload::Cams {
            received: int("received")?,
            snr: match field("snr")? {
                "-" => None,
                s => Some(s.parse().map_err(|_| format!("bad snr `{s}`"))?),
            },
        },
        EventKind::ChSelected | EventKind::ChReselectedFull => Payload::Selection { degraded: field("degraded")? == "1" },
        EventKind::ChDeparted => Payload::Departure {
            reason: match field("reason")? {
                "coverage" => DepartureReason::Coverage,
                "respawn" => DepartureReason::Respawn,
                r => return Err(format!("unknown departure reason `{r}`")),
            },
            remaining: int("remaining")?,
        },
        EventKind::ChReplacedFromBackup => Payload::Replacement { skipped: int("skipped")? },
        EventKind::VehicleRespawn => {
            let s = field("speed")?;
            Payload::Respawn { speed: s.parse().map_err(|_| format!("bad speed `{s}`"))? }
        }
        EventKind::BeaconOk | EventKind::BeaconMissed => Payload::None,
    };
    Ok(event)
}
