use std::collections::HashSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{ExperimentConfig, LoadLevel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub config: ExperimentConfig,
    /// Observed output (s).
    pub y: f64,
}

/// CSV row layout `l,dt_s,u0_A,du_A,omega_m_rpm,load,y_s`.
#[derive(Debug, Serialize, Deserialize)]
struct Row {
    l: u32,
    dt_s: f64,
    #[serde(rename = "u0_A")]
    u0_a: f64,
    #[serde(rename = "du_A")]
    du_a: f64,
    omega_m_rpm: f64,
    load: LoadLevel,
    y_s: f64,
}

/// Experiments ordered by id; every sum over experiments runs in that order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentSet {
    records: Vec<ExperimentRecord>,
}

impl ExperimentSet {
    pub fn new(mut records: Vec<ExperimentRecord>) -> Result<Self> {
        let mut seen = HashSet::new();
        for r in &records {
            if !seen.insert(r.config.id) {
                return Err(Error::InvalidArgument(format!("duplicate experiment id {}", r.config.id)));
            }
            if !r.y.is_finite() {
                return Err(Error::InvalidArgument(format!("experiment {} has a non-finite outcome", r.config.id)));
            }
            let c = &r.config;
            if !(c.dt.is_finite() && c.u0.is_finite() && c.du.is_finite() && c.omega_m_rpm > 0.0) {
                return Err(Error::InvalidArgument(format!("experiment {} has invalid settings", c.id)));
            }
        }
        records.sort_by_key(|r| r.config.id);
        Ok(Self { records })
    }

    pub fn records(&self) -> &[ExperimentRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let expected = ["l", "dt_s", "u0_A", "du_A", "omega_m_rpm", "load", "y_s"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(Error::Parse(format!(
                "experiments header must be {}, found {}",
                expected.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut records = Vec::new();
        for (k, row) in rdr.deserialize::<Row>().enumerate() {
            let row = row.map_err(|e| Error::Parse(format!("experiments line {}: {e}", k + 2)))?;
            records.push(ExperimentRecord {
                config: ExperimentConfig {
                    id: row.l,
                    dt: row.dt_s,
                    u0: row.u0_a,
                    du: row.du_a,
                    omega_m_rpm: row.omega_m_rpm,
                    load: row.load,
                },
                y: row.y_s,
            });
        }
        Self::new(records)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.records {
            let c = &r.config;
            w.serialize(Row {
                l: c.id,
                dt_s: c.dt,
                u0_a: c.u0,
                du_a: c.du,
                omega_m_rpm: c.omega_m_rpm,
                load: c.load,
                y_s: r.y,
            })?;
        }
        w.flush()?;
        Ok(())
    }
}
