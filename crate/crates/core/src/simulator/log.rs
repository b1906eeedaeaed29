use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    /// Still waiting when the run stopped.
    Pending,
    Served { start: f64, end: f64, server: u32 },
    Abandoned { at: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CustomerRecord {
    pub id: u64,
    pub arrival: f64,
    pub patience: f64,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdleInterval {
    pub server: u32,
    pub start: f64,
    /// `inf` when the server was still idle at the end of the run.
    pub end: f64,
}

/// Complete trace of one replication. The `initial` customers present at time
/// zero are not listed individually; their completions appear in
/// `completions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventLog {
    pub servers: u32,
    pub initial: u32,
    /// Service completion epochs with the server that finished.
    pub completions: Vec<(f64, u32)>,
    pub idle: Vec<IdleInterval>,
    /// Arriving customers in arrival order.
    pub customers: Vec<CustomerRecord>,
}

const GZIP_ROWS: usize = 100_000;

impl EventLog {
    /// Writes the per-customer table as CSV. Logs with more than 100 000
    /// customers are gzip-compressed and `.gz` is appended to the path.
    /// Returns the path actually written.
    pub fn export_csv(&self, path: &Path) -> io::Result<PathBuf> {
        if self.customers.len() > GZIP_ROWS {
            let mut target = path.as_os_str().to_owned();
            target.push(".gz");
            let target = PathBuf::from(target);
            let enc = flate2::write::GzEncoder::new(File::create(&target)?, flate2::Compression::default());
            let enc = self.write_csv(enc)?;
            enc.finish()?;
            Ok(target)
        } else {
            self.write_csv(File::create(path)?)?;
            Ok(path.to_path_buf())
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<W> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["customer_id", "arrival", "patience", "outcome", "service_start", "service_end", "abandon_time"])?;
        for c in &self.customers {
            let (outcome, start, end, abandon) = match c.outcome {
                Outcome::Pending => ("pending", String::new(), String::new(), String::new()),
                Outcome::Served { start, end, .. } => ("served", start.to_string(), end.to_string(), String::new()),
                Outcome::Abandoned { at } => ("abandoned", String::new(), String::new(), at.to_string()),
            };
            w.write_record([c.id.to_string(), c.arrival.to_string(), c.patience.to_string(), outcome.into(), start, end, abandon])?;
        }
        w.into_inner().map_err(|e| e.into_error())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirtualWait {
    pub epoch: f64,
    pub offered_wait: f64,
    /// False when a server idled during `(t, t + W(t)]`, in which case the
    /// value is estimated (see [`virtual_waits`]).
    pub exact: bool,
}

/// Offered waiting time `W(t−)` of every arriving customer, rebuilt from the
/// departure counting process as
/// `inf{u ≥ 0 : X(0) + E(t−) − L(t−) − D(t+u) < n}`, where `L` counts
/// arrivals that eventually abandon and `D` service completions.
///
/// The identity relies on all servers staying busy over `(t, t + W(t)]`. When
/// an idle interval intersects it, served customers get their actual wait and
/// abandoning customers inherit the service start of the next served
/// customer behind them, and the sample is flagged inexact.
pub fn virtual_waits(log: &EventLog, n: u32) -> Vec<VirtualWait> {
    let mut epochs: Vec<f64> = log.completions.iter().map(|c| c.0).collect();
    epochs.sort_by(f64::total_cmp);
    let mut idle: Vec<(f64, f64)> = log.idle.iter().map(|i| (i.start, i.end)).collect();
    idle.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut max_end = Vec::with_capacity(idle.len());
    let mut m = f64::NEG_INFINITY;
    for &(_, e) in &idle {
        m = m.max(e);
        max_end.push(m);
    }
    // Does some idle interval meet (t, until)?
    let idles_during = |t: f64, until: f64| {
        let started = idle.partition_point(|&(s, _)| s <= t);
        let open_at_t = started > 0 && max_end[started - 1] > t;
        open_at_t || idle.partition_point(|&(s, _)| s < until) > started
    };

    // Service start of the next served customer at or behind each position.
    let mut next_start = vec![f64::NAN; log.customers.len() + 1];
    for (k, c) in log.customers.iter().enumerate().rev() {
        next_start[k] = match c.outcome {
            Outcome::Served { start, .. } => start,
            _ => next_start[k + 1],
        };
    }

    let x0 = log.initial as i64;
    let mut abandoned_before: i64 = 0;
    let mut out = Vec::with_capacity(log.customers.len());
    for (k, c) in log.customers.iter().enumerate() {
        let t = c.arrival;
        let need = x0 + k as i64 - abandoned_before - n as i64 + 1;
        let until = if need <= 0 { t } else { epochs.get(need as usize - 1).copied().unwrap_or(f64::NAN) };
        let w = (until - t).max(0.0);
        let exact = w.is_finite() && (w == 0.0 || !idles_during(t, until));
        let offered_wait = if exact {
            w
        } else {
            match c.outcome {
                Outcome::Served { start, .. } => start - t,
                _ => next_start[k + 1] - t,
            }
        };
        out.push(VirtualWait { epoch: t, offered_wait, exact });
        if matches!(c.outcome, Outcome::Abandoned { .. }) {
            abandoned_before += 1;
        }
    }
    out
}
