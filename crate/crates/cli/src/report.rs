//! Serializable reports and their text renderings.
//!
//! Every report carries `schema_version`. Cells that cannot be computed
//! (a log relative difference below the precision floor in every run) are
//! `null` in JSON and counted in `below_precision_floor`.

use std::fmt::Write as _;

use gcka::{
    AlignmentValue, Arrangement, Centering, GeometryReport, MedianConvention, Onset, RunSummary, SynthSpec,
};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata<C> {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: C,
    /// Seconds since the Unix epoch; only present with `--timestamp`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

impl<C> Metadata<C> {
    pub fn new(command: &str, config: C) -> Self {
        Self {
            tool: "gcka".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config,
            timestamp: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Source {
    Files { x: String, y: String, header: bool },
    /// Run r uses `spec.seed + r`.
    Synthetic { spec: SynthSpec },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CkaReport {
    pub schema_version: u32,
    pub metadata: Metadata<Source>,
    pub cka: AlignmentValue,
    pub hsic: AlignmentValue,
}

impl CkaReport {
    pub fn render(&self) -> String {
        let c = &self.cka;
        let label = if c.kernel_k.centering == Centering::None { "alignment" } else { "cka" };
        let mut out = String::new();
        writeln!(out, "n          {}", c.n).unwrap();
        writeln!(out, "kernel x   {}", c.kernel_k.kernel).unwrap();
        writeln!(out, "kernel y   {}", c.kernel_l.kernel).unwrap();
        writeln!(out, "centering  {}", c.kernel_k.centering).unwrap();
        writeln!(out, "{label:<10} {:.10}", c.reported()).unwrap();
        writeln!(out, "hsic       {:.10e}", self.hsic.value).unwrap();
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryOutput {
    pub schema_version: u32,
    pub metadata: Metadata<Source>,
    pub n: usize,
    pub geometry: GeometryReport,
}

impl GeometryOutput {
    pub fn render(&self) -> String {
        let g = &self.geometry;
        let mut out = String::new();
        writeln!(out, "n          {}", self.n).unwrap();
        writeln!(out, "{:<10} {:>14} {:>14} {:>14}", "", "diameter", "median", "rho").unwrap();
        writeln!(out, "{:<10} {:>14.8} {:>14.8} {:>14.8}", "x", g.diam_x, g.median_x, g.rho_x).unwrap();
        writeln!(out, "{:<10} {:>14.8} {:>14.8} {:>14.8}", "y", g.diam_y, g.median_y, g.rho_y).unwrap();
        writeln!(out, "rho        {:.8}", g.rho).unwrap();
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEcho {
    pub source: Source,
    pub runs: usize,
    pub log2_sigma_grid: Vec<f64>,
    pub centering: Centering,
    pub arrangement: Arrangement,
    pub median: MedianConvention,
    pub threshold: f64,
    pub tail_points: usize,
    pub quantile_rule: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunGeometry {
    pub run: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub geometry: GeometryReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub log2_sigma: f64,
    pub cka_gaussian: RunSummary,
    pub cka_linear: RunSummary,
    pub rel_diff: RunSummary,
    /// Over the runs above the precision floor; `None` if there are none.
    pub log_rel_diff: Option<RunSummary>,
    pub below_precision_floor: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnsetRow {
    pub run: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub onset: Onset,
    pub tail_slope: Option<f64>,
    pub cka_linear: f64,
    pub r_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema_version: u32,
    pub metadata: Metadata<SweepEcho>,
    pub geometry: Vec<RunGeometry>,
    pub rho: RunSummary,
    pub sweep_table: Vec<SweepRow>,
    pub onset_table: Vec<OnsetRow>,
    /// Over the runs with a finite tail fit; `None` if there are none.
    pub tail_slope: Option<RunSummary>,
    pub onset_not_reached: usize,
}

const CSV_HEADER: &str = "log2_sigma,cka_gaussian_mean,cka_gaussian_se,cka_linear_mean,cka_linear_se,\
log_rel_diff_mean,log_rel_diff_se,below_precision_floor";

impl SweepReport {
    /// The sweep table alone; empty cells are below the precision floor.
    pub fn render_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.sweep_table {
            let (m, s) = r.log_rel_diff.map_or((String::new(), String::new()), |l| (l.mean.to_string(), l.se.to_string()));
            writeln!(
                out,
                "{},{},{},{},{},{m},{s},{}",
                r.log2_sigma, r.cka_gaussian.mean, r.cka_gaussian.se, r.cka_linear.mean, r.cka_linear.se,
                r.below_precision_floor
            )
            .unwrap();
        }
        out
    }

    pub fn render(&self) -> String {
        let runs = self.metadata.config.runs;
        let mut out = String::new();
        writeln!(
            out,
            "{:>6}  {:>12} {:>10}  {:>12} {:>10}  {:>10} {:>8}  {:>7}",
            "log2s", "cka_gauss", "se", "cka_linear", "se", "log2_rel", "se", "floored"
        )
        .unwrap();
        for r in &self.sweep_table {
            let (m, s) = match r.log_rel_diff {
                Some(l) => (format!("{:.4}", l.mean), format!("{:.4}", l.se)),
                None => ("-".into(), "-".into()),
            };
            writeln!(
                out,
                "{:>6}  {:>12.8} {:>10.2e}  {:>12.8} {:>10.2e}  {m:>10} {s:>8}  {:>3}/{runs:<3}",
                r.log2_sigma, r.cka_gaussian.mean, r.cka_gaussian.se, r.cka_linear.mean, r.cka_linear.se,
                r.below_precision_floor
            )
            .unwrap();
        }
        out.push('\n');
        match self.tail_slope {
            Some(s) => writeln!(out, "tail slope   {:.4} (se {:.4}, {} runs)", s.mean, s.se, s.runs).unwrap(),
            None => writeln!(out, "tail slope   - (too few points above the precision floor)").unwrap(),
        }
        writeln!(out, "rho          {:.4} (se {:.4})", self.rho.mean, self.rho.se).unwrap();
        writeln!(out, "onset        {}/{runs} runs reached", runs - self.onset_not_reached).unwrap();
        writeln!(out, "\n{:>5} {:>20} {:>10} {:>10}", "run", "seed", "log2 s*0", "slope").unwrap();
        for o in &self.onset_table {
            let seed = o.seed.map_or("-".into(), |s| s.to_string());
            let onset = o.onset.log2_sigma().map_or("none".into(), |v| v.to_string());
            let slope = o.tail_slope.map_or("-".into(), |v| format!("{v:.4}"));
            writeln!(out, "{:>5} {seed:>20} {onset:>10} {slope:>10}", o.run).unwrap();
        }
        out
    }
}
