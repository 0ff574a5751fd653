use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::model::Variant;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub variant: Variant,
    pub dataset: String,
    /// Test accuracy in percent.
    pub accuracy: f64,
    /// Wall time of the fit call alone; absent when evaluating a saved model.
    pub train_time_s: Option<f64>,
    pub seed: u64,
    pub train_rows: usize,
    pub test_rows: usize,
    /// `confusion[true][predicted]` counts on the test rows.
    pub confusion: Vec<Vec<u64>>,
    /// The resolved config that produced the model.
    pub config: serde_json::Value,
}

pub fn confusion(truth: &[usize], predicted: &[usize], classes: usize) -> Vec<Vec<u64>> {
    let mut m = vec![vec![0u64; classes]; classes];
    for (&t, &p) in truth.iter().zip(predicted) {
        m[t][p] += 1;
    }
    m
}

pub fn accuracy_pct(confusion: &[Vec<u64>]) -> f64 {
    let total: u64 = confusion.iter().flatten().sum();
    if total == 0 {
        return 0.0;
    }
    let hits: u64 = confusion.iter().enumerate().map(|(i, row)| row[i]).sum();
    100.0 * hits as f64 / total as f64
}

impl RunReport {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    pub fn to_table(&self) -> String {
        let time = self.train_time_s.map_or("—".to_string(), |t| format!("{t:.3}"));
        let rows = [
            ("variant", self.variant.to_string()),
            ("dataset", self.dataset.clone()),
            ("accuracy (%)", format!("{:.2}", self.accuracy)),
            ("train time (s)", time),
            ("seed", self.seed.to_string()),
            ("train rows", self.train_rows.to_string()),
            ("test rows", self.test_rows.to_string()),
        ];
        let mut out = String::new();
        for (k, v) in rows {
            let _ = writeln!(out, "{k:<16}{v}");
        }
        let k = self.confusion.len();
        let width = self
            .confusion
            .iter()
            .flatten()
            .map(|c| c.to_string().len())
            .chain([k.to_string().len(), 4])
            .max()
            .unwrap_or(4);
        let _ = writeln!(out, "confusion (rows: true class, columns: predicted)");
        let _ = write!(out, "{:>width$}", "");
        for j in 0..k {
            let _ = write!(out, " {j:>width$}");
        }
        out.push('\n');
        for (i, row) in self.confusion.iter().enumerate() {
            let _ = write!(out, "{i:>width$}");
            for c in row {
                let _ = write!(out, " {c:>width$}");
            }
            out.push('\n');
        }
        out
    }
}

/// One (variant, dataset) cell of a benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchCell {
    pub variant: Variant,
    pub dataset: String,
    pub outcome: std::result::Result<(f64, f64), String>,
}

fn fmt_acc(cell: Option<&BenchCell>) -> String {
    match cell.map(|c| &c.outcome) {
        Some(Ok((acc, _))) => format!("{acc:.2}"),
        _ => "—".into(),
    }
}

fn fmt_time(cell: Option<&BenchCell>) -> String {
    match cell.map(|c| &c.outcome) {
        Some(Ok((_, t))) => format!("{t:.2}"),
        _ => "—".into(),
    }
}

/// Rows are variants, then accuracy columns for every dataset followed by
/// training time columns for every dataset.
pub fn bench_table(datasets: &[String], cells: &[BenchCell]) -> String {
    let find = |v: Variant, d: &str| cells.iter().find(|c| c.variant == v && c.dataset == d);
    let mut grid: Vec<Vec<String>> = vec![
        std::iter::once("Method".to_string())
            .chain(datasets.iter().map(|_| "Testing accuracy (%)".to_string()))
            .chain(datasets.iter().map(|_| "Training time (s)".to_string()))
            .collect(),
        std::iter::once(String::new())
            .chain(datasets.iter().cloned())
            .chain(datasets.iter().cloned())
            .collect(),
    ];
    for v in Variant::ALL {
        grid.push(
            std::iter::once(v.to_string())
                .chain(datasets.iter().map(|d| fmt_acc(find(v, d))))
                .chain(datasets.iter().map(|d| fmt_time(find(v, d))))
                .collect(),
        );
    }
    let cols = grid[0].len();
    let widths: Vec<usize> = (0..cols)
        .map(|j| grid.iter().map(|r| r[j].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, row) in grid.iter().enumerate() {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(j, (s, &w))| {
                let pad = w - s.chars().count();
                if j == 0 {
                    format!("{s}{}", " ".repeat(pad))
                } else {
                    format!("{}{s}", " ".repeat(pad))
                }
            })
            .collect();
        let _ = writeln!(out, "{}", line.join(" | ").trim_end());
        if i == 1 {
            let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
            let _ = writeln!(out, "{}", rule.join("-+-"));
        }
    }
    out
}

pub fn bench_csv(cells: &[BenchCell]) -> String {
    let mut out = String::from("variant,dataset,accuracy,train_time_s,error\n");
    for c in cells {
        let (acc, time, err) = match &c.outcome {
            Ok(_) => (fmt_acc(Some(c)), fmt_time(Some(c)), String::new()),
            Err(e) => (String::new(), String::new(), e.replace(['\n', ','], " ")),
        };
        let _ = writeln!(out, "{},{},{acc},{time},{err}", c.variant.key(), c.dataset);
    }
    out
}
