use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::MetricsReport;

/// Strategy rows by summarizer columns, each cell holding Recall@k and MRR.
#[derive(Debug, Clone, Default)]
pub struct ResultGrid {
    k: usize,
    rows: Vec<String>,
    cols: Vec<String>,
    cells: BTreeMap<(usize, usize), (f64, f64)>,
}

fn position(list: &mut Vec<String>, name: &str) -> usize {
    match list.iter().position(|x| x == name) {
        Some(i) => i,
        None => {
            list.push(name.to_owned());
            list.len() - 1
        }
    }
}

/// MRR printed as in published tables: ".30", "1.00".
fn format_mrr(mrr: f64) -> String {
    let s = format!("{mrr:.2}");
    s.strip_prefix('0').map(str::to_owned).unwrap_or(s)
}

impl ResultGrid {
    /// `k` is the recall cutoff shown in each cell.
    pub fn new(k: usize) -> Self {
        Self {
            k,
            ..Self::default()
        }
    }

    /// Adds or replaces a cell. Rows and columns keep first-seen order.
    /// Panics if `report` lacks Recall@k.
    pub fn insert(&mut self, row: &str, col: &str, report: &MetricsReport) {
        let recall = *report
            .recall_at
            .get(&self.k)
            .unwrap_or_else(|| panic!("report has no Recall@{}", self.k));
        let r = position(&mut self.rows, row);
        let c = position(&mut self.cols, col);
        self.cells.insert((r, c), (recall, report.mrr));
    }

    pub fn get(&self, row: &str, col: &str) -> Option<(f64, f64)> {
        let r = self.rows.iter().position(|x| x == row)?;
        let c = self.cols.iter().position(|x| x == col)?;
        self.cells.get(&(r, c)).copied()
    }

    pub fn render(&self) -> String {
        let header_cell = format!("R@{} MRR", self.k);
        let mut table: Vec<Vec<String>> = Vec::new();
        let mut header = vec!["strategy".to_owned()];
        header.extend(self.cols.iter().cloned());
        table.push(header);
        let mut sub = vec![String::new()];
        sub.extend(self.cols.iter().map(|_| header_cell.clone()));
        table.push(sub);
        for (r, row) in self.rows.iter().enumerate() {
            let mut line = vec![row.clone()];
            for c in 0..self.cols.len() {
                line.push(match self.cells.get(&(r, c)) {
                    Some((recall, mrr)) => format!("{recall:.2} {}", format_mrr(*mrr)),
                    None => "-".to_owned(),
                });
            }
            table.push(line);
        }
        let ncols = self.cols.len() + 1;
        let widths: Vec<usize> = (0..ncols)
            .map(|i| table.iter().map(|l| l[i].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for line in &table {
            let cells: Vec<String> = line
                .iter()
                .enumerate()
                .map(|(i, cell)| {
                    if i == 0 {
                        format!("{cell:<w$}", w = widths[i])
                    } else {
                        format!("{cell:>w$}", w = widths[i])
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", cells.join("  ").trim_end());
        }
        out
    }
}

/// `k,recall` lines for plotting a recall curve.
pub fn curve_csv(curve: &BTreeMap<usize, f64>) -> String {
    let mut out = String::from("k,recall\n");
    for (k, recall) in curve {
        let _ = writeln!(out, "{k},{recall:.4}");
    }
    out
}
