use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u64,
    pub epoch: u64,
    pub g_loss: f64,
    pub d_loss: f64,
    pub gp: f64,
    pub cat_loss: f64,
    pub con_loss: f64,
    pub g_lr: f64,
    pub d_lr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogRecord {
    Step(StepRecord),
    Eval { step: u64, epoch: u64, fid: f64 },
    /// A NaN was caught; training restarted from `restored_step`.
    Recovery { step: u64, restored_step: u64, lr_scale: f64 },
}

impl LogRecord {
    pub fn step(&self) -> u64 {
        match self {
            LogRecord::Step(r) => r.step,
            LogRecord::Eval { step, .. } | LogRecord::Recovery { step, .. } => *step,
        }
    }
}

/// Line-delimited JSON run history.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunLog {
    pub records: Vec<LogRecord>,
}

impl RunLog {
    pub fn push(&mut self, r: LogRecord) {
        self.records.push(r);
    }

    pub fn steps(&self) -> impl Iterator<Item = &StepRecord> {
        self.records.iter().filter_map(|r| match r {
            LogRecord::Step(s) => Some(s),
            _ => None,
        })
    }

    pub fn evals(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.records.iter().filter_map(|r| match r {
            LogRecord::Eval { step, fid, .. } => Some((*step, *fid)),
            _ => None,
        })
    }

    /// Drops step and eval records after `step`.
    pub fn truncate_after(&mut self, step: u64) {
        self.records.retain(|r| matches!(r, LogRecord::Recovery { .. }) || r.step() <= step);
    }

    pub fn write(&self, w: impl Write) -> Result<()> {
        let mut w = BufWriter::new(w);
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write(File::create(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut records = Vec::new();
        for line in BufReader::new(File::open(path)?).lines() {
            let line = line?;
            if !line.trim().is_empty() {
                records.push(serde_json::from_str(&line)?);
            }
        }
        Ok(Self { records })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_round_trip() {
        let mut log = RunLog::default();
        log.push(LogRecord::Step(StepRecord {
            step: 1,
            epoch: 0,
            g_loss: -0.5,
            d_loss: 2.0,
            gp: 1.0,
            cat_loss: 2.3,
            con_loss: 0.1,
            g_lr: 0.05,
            d_lr: 0.08,
        }));
        log.push(LogRecord::Eval { step: 1, epoch: 0, fid: 3.5 });
        let mut bytes = Vec::new();
        log.write(&mut bytes).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().nth(1).unwrap().starts_with(r#"{"type":"eval""#));
        let dir = tempfile::tempdir().unwrap();
        log.save(dir.path().join("l.jsonl")).unwrap();
        assert_eq!(RunLog::load(dir.path().join("l.jsonl")).unwrap(), log);
    }
}
