use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::integrate::IntegrationMode;
use super::io::write_text;
use super::pipeline::Record;
use super::HarnessError;
use crate::planners::PlannerKind;

pub const CSV_HEADER: &str =
    "class,planner,mode,k,n,success_rate,mean_ms,median_ms,p95_ms,mean_iterations,mean_tree_size,runtime_ratio_vs_baseline";

/// Aggregate of one `(class, planner, mode)` cell. Cost columns hold
/// milliseconds, or iterations when iterations are the cost measure.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub class: String,
    pub planner: PlannerKind,
    pub mode: IntegrationMode,
    pub n: usize,
    pub success_rate: f64,
    pub mean_ms: f64,
    pub median_ms: f64,
    pub p95_ms: f64,
    pub mean_iterations: f64,
    pub mean_tree_size: f64,
    pub runtime_ratio_vs_baseline: Option<f64>,
    /// Class label of the baseline row to compare against, if not `class`.
    pub baseline_key: Option<String>,
    /// Solved plans that failed post-hoc validation.
    pub invalid_plans: usize,
    /// Queries answered by a stored plan without running the planner.
    pub memory_hits: usize,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

/// Median and nearest-rank 95th percentile of `xs`.
fn quantiles(mut xs: Vec<f64>) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    let median = if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    };
    let rank = ((0.95 * n as f64).ceil() as usize).clamp(1, n);
    (median, xs[rank - 1])
}

impl ReportRow {
    pub fn aggregate(class: &str, planner: PlannerKind, mode: IntegrationMode, recs: &[Record]) -> Self {
        let n = recs.len();
        let (median_ms, p95_ms) = quantiles(recs.iter().map(|r| r.cost).collect());
        Self {
            class: class.to_string(),
            planner,
            mode,
            n,
            success_rate: if n == 0 {
                0.0
            } else {
                recs.iter().filter(|r| r.solved).count() as f64 / n as f64
            },
            mean_ms: mean(recs.iter().map(|r| r.cost)),
            median_ms,
            p95_ms,
            mean_iterations: mean(recs.iter().map(|r| r.iterations as f64)),
            mean_tree_size: mean(recs.iter().map(|r| r.tree_size as f64)),
            runtime_ratio_vs_baseline: None,
            baseline_key: None,
            invalid_plans: recs.iter().filter(|r| r.invalid).count(),
            memory_hits: recs.iter().filter(|r| r.from_memory).count(),
        }
    }

    fn base_class(&self) -> &str {
        self.class.split('@').next().unwrap_or(&self.class)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub rows: Vec<ReportRow>,
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.6}")
    } else {
        String::new()
    }
}

fn parse_num(s: &str) -> Result<f64, ()> {
    if s.is_empty() {
        Ok(f64::NAN)
    } else {
        s.parse().map_err(|_| ())
    }
}

impl Report {
    pub fn find(&self, class: &str, planner: PlannerKind, mode: IntegrationMode) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.class == class && r.planner == planner && r.mode == mode)
    }

    /// Sets each row's mean-cost ratio against the baseline row of its class
    /// (or `baseline_key`) and planner.
    pub fn fill_ratios(&mut self) {
        let base: Vec<Option<f64>> = self
            .rows
            .iter()
            .map(|r| {
                let key = r.baseline_key.as_deref().unwrap_or(&r.class);
                self.find(key, r.planner, IntegrationMode::Baseline).map(|b| b.mean_ms)
            })
            .collect();
        for (r, b) in self.rows.iter_mut().zip(base) {
            r.runtime_ratio_vs_baseline = b.filter(|b| *b > 0.0).map(|b| r.mean_ms / b);
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                r.class,
                r.planner,
                r.mode.name(),
                r.mode.k(),
                r.n,
                num(r.success_rate),
                num(r.mean_ms),
                num(r.median_ms),
                num(r.p95_ms),
                num(r.mean_iterations),
                num(r.mean_tree_size),
                r.runtime_ratio_vs_baseline.map(num).unwrap_or_default(),
            );
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self, HarnessError> {
        let err = |line: usize, msg: &str| HarnessError::Parse {
            what: "report".into(),
            line,
            msg: msg.into(),
        };
        let mut lines = text.lines();
        if lines.next() != Some(CSV_HEADER) {
            return Err(err(1, "unexpected header"));
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
            let n = i + 2;
            let c: Vec<&str> = line.split(',').collect();
            if c.len() != 12 {
                return Err(err(n, "expected 12 columns"));
            }
            let planner: PlannerKind = c[1].parse().map_err(|_| err(n, "bad planner"))?;
            let mode: IntegrationMode = if c[2] == "baseline" {
                IntegrationMode::Baseline
            } else {
                format!("{}_{}", c[2], c[3]).parse().map_err(|_| err(n, "bad mode"))?
            };
            let f = |j: usize| parse_num(c[j]).map_err(|_| err(n, "bad number"));
            let ratio = f(11)?;
            rows.push(ReportRow {
                class: c[0].to_string(),
                planner,
                mode,
                n: c[4].parse().map_err(|_| err(n, "bad count"))?,
                success_rate: f(5)?,
                mean_ms: f(6)?,
                median_ms: f(7)?,
                p95_ms: f(8)?,
                mean_iterations: f(9)?,
                mean_tree_size: f(10)?,
                runtime_ratio_vs_baseline: ratio.is_finite().then_some(ratio),
                baseline_key: None,
                invalid_plans: 0,
                memory_hits: 0,
            });
        }
        Ok(Report { rows })
    }

    /// Grouped bar chart of mean cost per class: one group per planner, one
    /// bar per mode (and experience level).
    pub fn svg_charts(&self) -> Vec<(String, String)> {
        let mut by_class: BTreeMap<&str, Vec<&ReportRow>> = BTreeMap::new();
        for r in &self.rows {
            by_class.entry(r.base_class()).or_default().push(r);
        }
        by_class.into_iter().map(|(c, rows)| (c.to_string(), svg_chart(c, &rows))).collect()
    }

    /// Writes `report.csv` and one `<class>.svg` per class into `dir`.
    pub fn emit(&self, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
        let mut written = Vec::new();
        let csv = dir.join("report.csv");
        write_text(&csv, &self.to_csv())?;
        written.push(csv);
        for (class, svg) in self.svg_charts() {
            let path = dir.join(format!("{class}.svg"));
            write_text(&path, &svg)?;
            written.push(path);
        }
        Ok(written)
    }
}

const PALETTE: [&str; 8] = ["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860", "#da8bc3", "#8c8c8c"];

fn series_name(r: &ReportRow) -> String {
    match r.class.split_once('@') {
        Some((_, level)) => format!("{} @{level}", r.mode),
        None => r.mode.to_string(),
    }
}

fn svg_chart(class: &str, rows: &[&ReportRow]) -> String {
    let mut planners: Vec<PlannerKind> = rows.iter().map(|r| r.planner).collect();
    planners.sort();
    planners.dedup();
    let mut series: Vec<String> = Vec::new();
    for r in rows {
        let s = series_name(r);
        if !series.contains(&s) {
            series.push(s);
        }
    }
    let (w, h) = (120.0 + 40.0 * (series.len() * planners.len()) as f64 + 40.0 * planners.len() as f64, 360.0);
    let (left, top, plot_h) = (60.0, 40.0, 240.0);
    let max = rows.iter().map(|r| r.mean_ms).filter(|v| v.is_finite()).fold(0.0, f64::max).max(1e-9);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(s, "<title>Mean planning cost, {class}</title>");
    let _ = writeln!(s, "<desc>Memory modes include retrieval and validation time.</desc>");
    let _ = writeln!(s, r#"<text x="{left}" y="20" font-size="14">{class}</text>"#);
    let _ = writeln!(
        s,
        r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{:.1}" stroke="black"/>"#,
        top + plot_h
    );
    let _ = writeln!(s, r#"<text x="4" y="{:.1}">{:.1}</text>"#, top + 4.0, max);
    let _ = writeln!(s, r#"<text x="4" y="{:.1}">0</text>"#, top + plot_h);
    let bar_w = 30.0;
    let mut x = left + 20.0;
    for p in &planners {
        let start = x;
        for (si, name) in series.iter().enumerate() {
            let Some(r) = rows.iter().find(|r| r.planner == *p && series_name(r) == *name) else {
                continue;
            };
            let v = if r.mean_ms.is_finite() { r.mean_ms } else { 0.0 };
            let bh = plot_h * v / max;
            let _ = writeln!(
                s,
                r#"<rect x="{x:.1}" y="{:.1}" width="{bar_w}" height="{bh:.1}" fill="{}"><title>{name}: {v:.3}</title></rect>"#,
                top + plot_h - bh,
                PALETTE[si % PALETTE.len()]
            );
            x += bar_w + 4.0;
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{p}</text>"#,
            0.5 * (start + x),
            top + plot_h + 16.0
        );
        x += 30.0;
    }
    for (si, name) in series.iter().enumerate() {
        let ly = top + plot_h + 34.0 + 14.0 * (si / 4) as f64;
        let lx = left + 130.0 * (si % 4) as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{lx:.1}" y="{:.1}" width="10" height="10" fill="{}"/><text x="{:.1}" y="{ly:.1}">{name}</text>"#,
            ly - 9.0,
            PALETTE[si % PALETTE.len()],
            lx + 14.0
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(cost: f64, solved: bool) -> Record {
        Record {
            solved,
            cost,
            iterations: 3,
            tree_size: 10,
            invalid: false,
            from_memory: false,
        }
    }

    #[test]
    fn quantiles_by_hand() {
        assert_eq!(quantiles(vec![4.0, 1.0, 3.0, 2.0]), (2.5, 4.0));
        let xs: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(quantiles(xs), (50.5, 95.0));
    }

    #[test]
    fn aggregate_and_ratio() {
        let base = ReportRow::aggregate("curves", PlannerKind::Gust, IntegrationMode::Baseline, &[rec(10.0, true), rec(30.0, false)]);
        let mm = ReportRow::aggregate("curves", PlannerKind::Gust, IntegrationMode::ClosedBox { k: 1 }, &[rec(5.0, true), rec(5.0, true)]);
        assert_eq!(base.success_rate, 0.5);
        let mut r = Report { rows: vec![base, mm] };
        r.fill_ratios();
        assert_eq!(r.rows[0].runtime_ratio_vs_baseline, Some(1.0));
        assert_eq!(r.rows[1].runtime_ratio_vs_baseline, Some(0.25));
    }

    #[test]
    fn csv_round_trip() {
        let mut r = Report {
            rows: vec![
                ReportRow::aggregate("trap", PlannerKind::Rrt, IntegrationMode::Baseline, &[rec(2.0, true)]),
                ReportRow::aggregate("trap", PlannerKind::Rrt, IntegrationMode::OpenBox { k: 5 }, &[rec(1.0, true)]),
            ],
        };
        r.fill_ratios();
        let csv = r.to_csv();
        assert_eq!(Report::from_csv(&csv).unwrap().to_csv(), csv);
        assert_eq!(Report::default().to_csv(), format!("{CSV_HEADER}\n"));
    }
}
