//! CSV and JSON renderings of results, and the output directory that records
//! what a run wrote.

use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use srcbias_core::eval::Bundles;
use srcbias_core::metrics::{DeltaReport, MetricBundle, MetricValues};
use srcbias_core::pvector::{ClusterStats, Projection2d, ShiftDelta};
use srcbias_core::stats::{FlowEntropySummary, TTestResult};
use srcbias_core::train::TrainHistory;

use crate::config::Settings;
use crate::error::Result;
use crate::io::write_bytes;

fn values_json(values: &MetricValues) -> Value {
    Value::Object(values.iter().map(|(m, v)| (m.to_string(), json!(v))).collect())
}

pub fn pretty(value: &Value) -> String {
    serde_json::to_string_pretty(value).expect("serializing JSON") + "\n"
}

pub fn deltas_value(d: &DeltaReport) -> Value {
    json!({
        "relative": values_json(&d.relative),
        "location": values_json(&d.location),
        "normalized": values_json(&d.normalized),
        "mixr": {
            "relative": d.mixr.relative,
            "location": d.mixr.location,
            "normalized": d.mixr.normalized,
        },
    })
}

pub fn deltas_json(d: &DeltaReport) -> String {
    pretty(&deltas_value(d))
}

/// One row per metric plus a `MixR` row.
pub fn deltas_csv(d: &DeltaReport) -> String {
    let mut out = String::from("metric,relative,location,normalized\n");
    for (((m, r), (_, l)), (_, n)) in d.relative.iter().zip(d.location.iter()).zip(d.normalized.iter()) {
        out.push_str(&format!("{m},{r},{l},{n}\n"));
    }
    out.push_str(&format!("MixR,{},{},{}\n", d.mixr.relative, d.mixr.location, d.mixr.normalized));
    out
}

/// Location deltas alone, for the interleaving subcommand.
pub fn location_csv(values: &MetricValues, mixr: f64) -> String {
    let mut out = String::from("metric,location\n");
    for (m, v) in values.iter() {
        out.push_str(&format!("{m},{v}\n"));
    }
    out.push_str(&format!("MixR,{mixr}\n"));
    out
}

pub fn location_json(values: &MetricValues, mixr: f64, seeds: usize) -> String {
    pretty(&json!({ "location": values_json(values), "mixr": mixr, "seeds": seeds }))
}

pub fn bundles_csv(b: &Bundles) -> String {
    let rows: [(&str, &MetricBundle); 4] = [
        ("REAL", &b.real),
        ("AI", &b.ai),
        ("mixed-REAL", &b.mixed_real),
        ("mixed-AI", &b.mixed_ai),
    ];
    let mut out = String::from("table");
    for (m, _) in b.real.values().iter() {
        out.push_str(&format!(",{m}"));
    }
    out.push('\n');
    for (name, bundle) in rows {
        out.push_str(name);
        for (_, v) in bundle.values().iter() {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

pub fn history_csv(h: &TrainHistory) -> String {
    let mut out = String::from("epoch,base_loss,debias_loss,normalized_delta_r1\n");
    for e in &h.epochs {
        out.push_str(&format!(
            "{},{},{},{}\n",
            e.epoch, e.base_loss, e.debias_loss, e.normalized_delta_r1
        ));
    }
    out
}

pub fn shift_json(before: &DeltaReport, after: &DeltaReport, delta: &ShiftDelta) -> String {
    pretty(&json!({
        "before": deltas_value(before),
        "after": deltas_value(after),
        "delta": {
            "normalized": values_json(&delta.per_metric),
            "mixr": delta.mixr,
        },
    }))
}

pub fn shift_csv(before: &DeltaReport, after: &DeltaReport, delta: &ShiftDelta) -> String {
    let mut out = String::from("metric,before,after,delta\n");
    for (((m, b), (_, a)), (_, d)) in before
        .normalized
        .iter()
        .zip(after.normalized.iter())
        .zip(delta.per_metric.iter())
    {
        out.push_str(&format!("{m},{b},{a},{d}\n"));
    }
    out.push_str(&format!(
        "MixR,{},{},{}\n",
        before.mixr.normalized, after.mixr.normalized, delta.mixr
    ));
    out
}

pub fn cluster_json(stats: &ClusterStats, p_avg_norm: f64, n: usize) -> String {
    pretty(&json!({
        "n": n,
        "mean_pairwise_cos_p": stats.mean_pairwise_cos_p,
        "mean_pairwise_cos_h": stats.mean_pairwise_cos_h,
        "silhouette": stats.silhouette,
        "p_avg_norm": p_avg_norm,
    }))
}

pub fn projection_csv(proj: &Projection2d<(String, String)>) -> String {
    let mut out = String::from("id,label,x,y\n");
    for p in &proj.points {
        out.push_str(&format!("{},{},{},{}\n", p.label.0, p.label.1, p.x, p.y));
    }
    out
}

pub fn ttest_json(t: &TTestResult, mean_real: f64, mean_ai: f64, n: usize) -> String {
    pretty(&json!({
        "n": n,
        "mean_real": mean_real,
        "mean_ai": mean_ai,
        "t_statistic": t.t_statistic,
        "degrees_of_freedom": t.degrees_of_freedom,
        "p_value": t.p_value,
    }))
}

pub fn flow_csv(ids: &[(String, String)], entropies: &[(f64, f64)]) -> String {
    let mut out = String::from("real_id,ai_id,entropy_real,entropy_ai\n");
    for ((r, a), (hr, ha)) in ids.iter().zip(entropies) {
        out.push_str(&format!("{r},{a},{hr},{ha}\n"));
    }
    out
}

pub fn flow_json(s: &FlowEntropySummary, bins: usize) -> String {
    pretty(&json!({
        "bins": bins,
        "n_pairs": s.n_pairs,
        "mean_entropy_real": s.mean_entropy_real,
        "mean_entropy_ai": s.mean_entropy_ai,
        "higher_count_real": s.higher_count_real,
        "higher_count_ai": s.higher_count_ai,
    }))
}

/// An output directory that remembers every file written to it, so the
/// closing `manifest.json` can list them.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
    warnings: Vec<String>,
}

impl OutputDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self {
            root: root.into(),
            written: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        write_bytes(&self.path(name), contents.as_ref())?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Record a file written by another routine.
    pub fn record(&mut self, name: &str) {
        self.written.push(name.to_string());
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        let message = message.into();
        log::warn!("{message}");
        self.warnings.push(message);
    }

    /// Write `manifest.json` with the resolved settings, seeds and outputs.
    pub fn finish(mut self, command: &str, settings: &Settings, seed: u64, derived_seed: u64) -> Result<()> {
        self.written.sort();
        self.written.dedup();
        let config: Map<String, Value> = settings.entries().map(|(k, v)| (k.to_string(), json!(v))).collect();
        let manifest = json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "seed": seed,
            "derived_seed": derived_seed,
            "config": config,
            "outputs": self.written,
            "warnings": self.warnings,
        });
        write_bytes(&self.path("manifest.json"), pretty(&manifest).as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use srcbias_core::metrics::Metric;

    fn report() -> DeltaReport {
        let rel = MetricValues::new(vec![
            (Metric::RecallAt(1), -77.62),
            (Metric::MedR, -76.92),
            (Metric::MeanR, -18.71),
        ]);
        let loc = MetricValues::new(vec![
            (Metric::RecallAt(1), -10.0),
            (Metric::MedR, 0.1 + 0.2),
            (Metric::MeanR, 3.0),
        ]);
        DeltaReport::new(rel, loc).unwrap()
    }

    #[test]
    fn deltas_json_round_trips_exactly() {
        let d = report();
        let v: Value = serde_json::from_str(&deltas_json(&d)).unwrap();
        for (m, n) in d.normalized.iter() {
            let key = m.to_string();
            let r = v["relative"][&key].as_f64().unwrap();
            let l = v["location"][&key].as_f64().unwrap();
            assert_eq!(v["normalized"][&key].as_f64().unwrap(), n);
            assert_eq!(r - l, n);
        }
        let keys: Vec<&String> = v["relative"].as_object().unwrap().keys().collect();
        assert_eq!(keys, ["R@1", "MedR", "MeanR"]);
    }

    #[test]
    fn deltas_csv_has_metric_rows_and_mixr() {
        let text = deltas_csv(&report());
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "metric,relative,location,normalized");
        assert!(lines[1].starts_with("R@1,-77.62,-10,"));
        assert!(lines[4].starts_with("MixR,"));
        assert_eq!(lines.len(), 5);
    }
}
