use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Fid,
    DiscreteAcc,
    HueMse,
}

/// Result of one evaluation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub kind: MetricKind,
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rounds: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub per_class: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub offset: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub flip: Option<bool>,
    /// Hue MSE × 360.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub degrees: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub unreliable: Option<bool>,
}

impl MetricReport {
    pub fn new(kind: MetricKind, value: f64, stderr: f64, samples: usize) -> Self {
        Self {
            kind,
            value,
            stderr,
            samples,
            rounds: None,
            per_class: None,
            offset: None,
            flip: None,
            degrees: None,
            unreliable: None,
        }
    }

    /// One JSON object on a single line.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Mean and standard error of the mean (0 for a single value).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
