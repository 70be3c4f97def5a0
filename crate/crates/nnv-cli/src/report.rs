//! Run records and their JSON and table forms.

use nnv_core::{Payload, Status, VerificationResult};
use serde::{Deserialize, Serialize};

use crate::problem::SetDesc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatusDesc {
    Holds,
    Violated,
    Unknown,
}

impl From<Status> for StatusDesc {
    fn from(s: Status) -> Self {
        match s {
            Status::Holds => StatusDesc::Holds,
            Status::Violated => StatusDesc::Violated,
            Status::Unknown => StatusDesc::Unknown,
        }
    }
}

impl StatusDesc {
    pub fn as_str(self) -> &'static str {
        match self {
            StatusDesc::Holds => "holds",
            StatusDesc::Violated => "violated",
            StatusDesc::Unknown => "unknown",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayloadDesc {
    None,
    CounterExample(Vec<f64>),
    MaxDisturbance(f64),
    Reachable(Vec<SetDesc>),
    Error(String),
}

impl From<&Payload> for PayloadDesc {
    fn from(p: &Payload) -> Self {
        match p {
            Payload::None => PayloadDesc::None,
            Payload::CounterExample(x) => PayloadDesc::CounterExample(x.clone()),
            Payload::MaxDisturbance(e) => PayloadDesc::MaxDisturbance(*e),
            Payload::Reachable(s) => PayloadDesc::Reachable(s.iter().map(SetDesc::from_set).collect()),
        }
    }
}

impl PayloadDesc {
    fn summary(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(", ");
        match self {
            PayloadDesc::None => String::new(),
            PayloadDesc::CounterExample(x) => format!("counter example [{}]", list(x)),
            PayloadDesc::MaxDisturbance(e) => format!("max disturbance {e:.6}"),
            PayloadDesc::Reachable(s) => format!("{} reachable set(s)", s.len()),
            PayloadDesc::Error(e) => format!("error: {e}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub solver: String,
    pub status: StatusDesc,
    pub payload: PayloadDesc,
    #[serde(default)]
    pub time_s: Option<f64>,
    #[serde(default)]
    pub oracle_status: Option<StatusDesc>,
    #[serde(default)]
    pub agree: Option<bool>,
    /// Whether a returned counter example re-verifies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valid: Option<bool>,
}

impl RunRecord {
    pub fn new(
        solver: &str,
        result: &VerificationResult,
        time_s: Option<f64>,
        oracle: Option<Status>,
        valid: Option<bool>,
    ) -> Self {
        let status = StatusDesc::from(result.status);
        let oracle_status = oracle.map(StatusDesc::from);
        RunRecord {
            solver: solver.to_string(),
            status,
            payload: (&result.payload).into(),
            time_s,
            oracle_status,
            agree: oracle_status.map(|o| status == o || status == StatusDesc::Unknown),
            valid,
        }
    }

    pub fn failed(solver: &str, msg: String, time_s: Option<f64>, oracle: Option<Status>) -> Self {
        RunRecord {
            solver: solver.to_string(),
            status: StatusDesc::Unknown,
            payload: PayloadDesc::Error(msg),
            time_s,
            oracle_status: oracle.map(StatusDesc::from),
            agree: oracle.map(|_| true),
            valid: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("records serialize")
    }

    pub fn from_json(src: &str) -> serde_json::Result<Self> {
        serde_json::from_str(src)
    }

    pub fn table_row(&self) -> String {
        let opt = |s: Option<StatusDesc>| s.map_or("-", StatusDesc::as_str);
        let time = self.time_s.map_or("-".to_string(), |t| format!("{t:.4}"));
        let agree = self.agree.map_or("-", |a| if a { "yes" } else { "NO" });
        format!(
            "{:<11} {:<9} {:<9} {:<6} {:>9}  {}",
            self.solver,
            self.status.as_str(),
            opt(self.oracle_status),
            agree,
            time,
            self.payload.summary()
        )
    }
}

pub fn table_header() -> String {
    format!("{:<11} {:<9} {:<9} {:<6} {:>9}  {}", "solver", "status", "oracle", "agree", "time_s", "payload")
}
