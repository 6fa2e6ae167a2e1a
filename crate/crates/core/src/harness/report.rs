use std::io::Write;

use serde::{Deserialize, Serialize};

/// Acceptance rule attached to a metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule")]
pub enum Check {
    AtMost {
        limit: f64,
    },
    LessThan {
        limit: f64,
    },
    AtLeast {
        limit: f64,
    },
    Within {
        lo: f64,
        hi: f64,
    },
    /// Reported without a verdict.
    Info,
}

impl Check {
    pub fn verdict(&self, value: f64) -> Option<bool> {
        match *self {
            Check::AtMost { limit } => Some(value <= limit),
            Check::LessThan { limit } => Some(value < limit),
            Check::AtLeast { limit } => Some(value >= limit),
            Check::Within { lo, hi } => Some(value >= lo && value <= hi),
            Check::Info => None,
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            Check::AtMost { limit } => format!("<= {limit}"),
            Check::LessThan { limit } => format!("< {limit}"),
            Check::AtLeast { limit } => format!(">= {limit}"),
            Check::Within { lo, hi } => format!("in [{lo}, {hi}]"),
            Check::Info => "info".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    pub check: Check,
    /// `None` for informational metrics.
    pub pass: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: String,
    pub exploratory: bool,
    pub parameters: serde_json::Value,
    pub replicas: usize,
    pub master_seed: Option<u64>,
    pub seeds: Vec<u64>,
    pub metrics: Vec<Metric>,
    pub tables: Vec<Table>,
    pub notes: Vec<String>,
    /// Measured run time.  Kept out of the serialized report so that re-runs
    /// produce identical bytes; the run manifest records it instead.
    #[serde(skip)]
    pub wall_clock_seconds: f64,
}

impl ExperimentReport {
    pub fn new(kind: &str, parameters: serde_json::Value) -> Self {
        ExperimentReport {
            kind: kind.into(),
            exploratory: false,
            parameters,
            replicas: 0,
            master_seed: None,
            seeds: Vec::new(),
            metrics: Vec::new(),
            tables: Vec::new(),
            notes: Vec::new(),
            wall_clock_seconds: 0.0,
        }
    }

    pub fn metric(&mut self, name: impl Into<String>, value: f64, check: Check) -> &mut Metric {
        let check = if self.exploratory { Check::Info } else { check };
        self.metrics.push(Metric {
            name: name.into(),
            value,
            check,
            pass: check.verdict(value),
            note: None,
        });
        self.metrics.last_mut().expect("just pushed")
    }

    pub fn info(&mut self, name: impl Into<String>, value: f64) -> &mut Metric {
        self.metric(name, value, Check::Info)
    }

    pub fn get(&self, name: &str) -> Option<&Metric> {
        self.metrics.iter().find(|m| m.name == name)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.get(name).map(|m| m.value)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// True when every checked metric passes.
    pub fn passed(&self) -> bool {
        self.metrics.iter().all(|m| m.pass != Some(false))
    }

    pub fn failures(&self) -> Vec<&Metric> {
        self.metrics
            .iter()
            .filter(|m| m.pass == Some(false))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdicts() {
        assert_eq!(Check::AtMost { limit: 1.0 }.verdict(1.0), Some(true));
        assert_eq!(Check::LessThan { limit: 1.0 }.verdict(1.0), Some(false));
        assert_eq!(
            Check::Within {
                lo: -0.75,
                hi: -0.25
            }
            .verdict(-0.9),
            Some(false)
        );
        assert_eq!(Check::Info.verdict(f64::NAN), None);
        assert_eq!(Check::AtMost { limit: 1.0 }.verdict(f64::NAN), Some(false));
    }

    #[test]
    fn report_roundtrip_and_exploratory_mode() {
        let mut r = ExperimentReport::new("demo", serde_json::json!({"N": 8}));
        r.metric("a", 0.5, Check::AtMost { limit: 1.0 });
        r.metric("b", 2.0, Check::AtMost { limit: 1.0 }).note = Some("too big".into());
        assert!(!r.passed());
        assert_eq!(r.failures().len(), 1);
        let mut t = Table::new("tab", &["x", "y"]);
        t.push(vec![1.0, 2.0]);
        r.tables.push(t);
        r.wall_clock_seconds = 3.0;
        let json = serde_json::to_string(&r).unwrap();
        assert!(!json.contains("wall_clock"));
        let back: ExperimentReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.metrics, r.metrics);

        let mut e = ExperimentReport::new("explore", serde_json::Value::Null);
        e.exploratory = true;
        e.metric("d", 9.0, Check::AtMost { limit: 1.0 });
        assert!(e.passed());
        assert_eq!(e.metrics[0].pass, None);
    }

    #[test]
    fn table_csv() {
        let mut t = Table::new("x", &["t", "u", "density"]);
        t.push(vec![0.5, 0.25, 0.125]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "t,u,density\n5e-1,2.5e-1,1.25e-1\n"
        );
    }
}
