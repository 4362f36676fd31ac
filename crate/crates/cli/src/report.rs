//! Result tables and provenance records.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use snetcalc::{BoundResult, Error, ThetaGrid};

use crate::config::AnalysisConfig;

/// Bounds at or above this value (seconds or bits) are flagged as diverged.
pub const SENTINEL: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "thm2")]
    UnionBound,
    #[serde(rename = "thm3")]
    Independent,
    #[serde(rename = "closed-form")]
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    /// Finite but above [`SENTINEL`].
    Diverged,
    /// No stable θ on the grid.
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sweep {
    None,
    Hops,
    Flows,
}

/// One sweep point evaluated by one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub sweep: Sweep,
    /// Value of the swept variable.
    pub value: f64,
    pub hops: usize,
    pub through_flows: u32,
    pub cross_flows: u32,
    pub method: Method,
    /// seconds for delay, bits for backlog and output burst
    pub bound: f64,
    /// `bound / (H (1 + ln H))`
    pub bound_per_hop_log: f64,
    pub theta: f64,
    /// bits/second
    pub delta: f64,
    pub epsilon_achieved: f64,
    pub status: Status,
}

/// Where a row sits in a sweep and the network it describes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub sweep: Sweep,
    pub value: f64,
    pub hops: usize,
    pub through_flows: u32,
    pub cross_flows: u32,
}

impl ReportRow {
    fn at(
        point: Point,
        method: Method,
        bound: f64,
        theta: f64,
        delta: f64,
        achieved: f64,
        status: Status,
    ) -> Self {
        let h = point.hops as f64;
        Self {
            sweep: point.sweep,
            value: point.value,
            hops: point.hops,
            through_flows: point.through_flows,
            cross_flows: point.cross_flows,
            method,
            bound,
            bound_per_hop_log: bound / (h * (1.0 + h.ln())),
            theta,
            delta,
            epsilon_achieved: achieved,
            status,
        }
    }

    pub fn from_result(point: Point, method: Method, r: &BoundResult) -> Self {
        let status = if r.value >= SENTINEL {
            Status::Diverged
        } else {
            Status::Ok
        };
        Self::at(point, method, r.value, r.theta, r.delta, r.achieved, status)
    }

    pub fn from_closed_form(
        point: Point,
        theta: f64,
        delta: f64,
        value: f64,
        epsilon: f64,
    ) -> Self {
        let status = if value >= SENTINEL {
            Status::Diverged
        } else {
            Status::Ok
        };
        Self::at(
            point,
            Method::ClosedForm,
            value,
            theta,
            delta,
            epsilon,
            status,
        )
    }

    /// Row for a point where no θ is stable: infinite bound at the θ with
    /// the largest stability margin.
    pub fn infeasible(point: Point, method: Method, closest_theta: f64) -> Self {
        Self::at(
            point,
            method,
            f64::INFINITY,
            closest_theta,
            0.0,
            1.0,
            Status::Infeasible,
        )
    }

    pub fn from_error(point: Point, method: Method, err: &Error) -> Option<Self> {
        match err {
            Error::Infeasible { closest_theta, .. } => {
                Some(Self::infeasible(point, method, *closest_theta))
            }
            _ => None,
        }
    }
}

pub fn write_rows(rows: &[ReportRow], w: impl Write) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_rows(r: impl Read) -> csv::Result<Vec<ReportRow>> {
    csv::Reader::from_reader(r).deserialize().collect()
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub arguments: Vec<String>,
    pub config_text: String,
    pub config: serde_json::Value,
    pub theta_grid: GridRecord,
    pub rows: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRecord {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub thetas: usize,
}

impl Provenance {
    pub fn new(
        command: &str,
        arguments: Vec<String>,
        text: &str,
        cfg: &AnalysisConfig,
        rows: usize,
    ) -> Self {
        let g: ThetaGrid = cfg.theta_grid();
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            arguments,
            config_text: text.to_string(),
            config: serde_json::to_value(cfg).unwrap_or(serde_json::Value::Null),
            theta_grid: GridRecord {
                min: g.min,
                max: g.max,
                points: g.points,
                thetas: g.thetas().len(),
            },
            rows,
        }
    }
}
