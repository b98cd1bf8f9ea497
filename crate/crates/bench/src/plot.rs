//! Figure data: tidy `x,series,y,yerr` tables and a minimal SVG rendering.
//!
//! Plot data is rebuilt from the tables an experiment already wrote, so it
//! can be regenerated for any finished run.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{BenchError, BenchResult};
use crate::output::{write_atomic, write_json, ResultRecord};

type Row = HashMap<String, String>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log10,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotMeta {
    pub experiment_id: String,
    pub kind: String,
    pub x_name: String,
    pub series_name: String,
    pub y_name: String,
    pub x_scale: Scale,
    pub y_scale: Scale,
    /// Horizontal reference lines, e.g. a Haar value.
    pub references: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotPoint {
    pub x: String,
    pub series: String,
    pub y: f64,
    pub yerr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotData {
    pub meta: PlotMeta,
    pub points: Vec<PlotPoint>,
    /// Extra constant columns appended to every row.
    pub extra: Vec<(String, f64)>,
}

fn load_table(dir: &Path, name: &str) -> BenchResult<Vec<Row>> {
    let csv_path = dir.join(format!("{name}.csv"));
    if csv_path.exists() {
        let mut rdr = csv::Reader::from_path(&csv_path).map_err(|e| BenchError::io(&csv_path, e))?;
        let header: Vec<String> = rdr.headers().map_err(|e| BenchError::io(&csv_path, e))?.iter().map(String::from).collect();
        return rdr
            .records()
            .map(|r| {
                let r = r.map_err(|e| BenchError::io(&csv_path, e))?;
                Ok(header.iter().cloned().zip(r.iter().map(String::from)).collect())
            })
            .collect();
    }
    let json_path = dir.join(format!("{name}.json"));
    let text = std::fs::read_to_string(&json_path).map_err(|e| BenchError::io(&json_path, e))?;
    let rows: Vec<serde_json::Map<String, serde_json::Value>> =
        serde_json::from_str(&text).map_err(|e| BenchError::io(&json_path, e))?;
    Ok(rows
        .into_iter()
        .map(|obj| {
            obj.into_iter()
                .map(|(k, v)| {
                    let s = match v {
                        serde_json::Value::String(s) => s,
                        serde_json::Value::Null => String::new(),
                        other => other.to_string(),
                    };
                    (k, s)
                })
                .collect()
        })
        .collect())
}

fn num(row: &Row, key: &str) -> f64 {
    row.get(key).and_then(|s| s.parse().ok()).unwrap_or(f64::NAN)
}

fn text(row: &Row, key: &str) -> String {
    row.get(key).cloned().unwrap_or_default()
}

/// Mean and standard error of `y` grouped by `(series, x)`, in first-seen order.
fn grouped(rows: &[Row], x: impl Fn(&Row) -> String, series: impl Fn(&Row) -> String, y: &str) -> Vec<PlotPoint> {
    let mut order: Vec<(String, String)> = Vec::new();
    let mut groups: HashMap<(String, String), Vec<f64>> = HashMap::new();
    for r in rows {
        let v = num(r, y);
        if !v.is_finite() {
            continue;
        }
        let key = (series(r), x(r));
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(v);
    }
    order
        .into_iter()
        .map(|key| {
            let vals = &groups[&key];
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            let se = if vals.len() > 1 {
                let var = vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (vals.len() - 1) as f64;
                (var / vals.len() as f64).sqrt()
            } else {
                0.0
            };
            PlotPoint { series: key.0, x: key.1, y: m, yerr: se }
        })
        .collect()
}

fn col(name: &'static str) -> impl Fn(&Row) -> String {
    move |r: &Row| text(r, name)
}

fn fixed(name: &'static str) -> impl Fn(&Row) -> String {
    move |_: &Row| name.to_string()
}

/// Build plot data for the experiment whose results live in `dir`.
pub fn emit_plot_data(dir: &Path) -> BenchResult<PlotData> {
    let record = ResultRecord::load(&dir.join("summary.json"))?;
    let meta = |x: &str, series: &str, y: &str, xs: Scale, ys: Scale| PlotMeta {
        experiment_id: record.experiment_id.clone(),
        kind: record.kind.clone(),
        x_name: x.into(),
        series_name: series.into(),
        y_name: y.into(),
        x_scale: xs,
        y_scale: ys,
        references: BTreeMap::new(),
    };
    use Scale::{Linear, Log10};
    let mut extra = Vec::new();
    let (meta, points) = match record.kind.as_str() {
        "gradvar" => {
            let rows = load_table(dir, "gradvar")?;
            let pts = rows
                .iter()
                .map(|r| {
                    let v = num(r, "grad_var");
                    let k = num(r, "seeds");
                    PlotPoint { x: text(r, "n"), series: text(r, "family"), y: v, yerr: v * (2.0 / (k - 1.0)).sqrt() }
                })
                .collect();
            (meta("n", "family", "variance", Linear, Log10), pts)
        }
        "init_sweep" => {
            let rows = load_table(dir, "init_sweep")?;
            let sigmas: Vec<String> = rows.iter().map(|r| text(r, "sigma")).filter(|s| !s.is_empty()).collect();
            let mut pts = Vec::new();
            for r in &rows {
                let (y, s) = (num(r, "grad_var"), text(r, "sigma"));
                if s.is_empty() {
                    pts.extend(sigmas.iter().map(|x| PlotPoint { x: x.clone(), series: "hea_uniform".into(), y, yerr: 0.0 }));
                } else {
                    pts.push(PlotPoint { x: s, series: text(r, "family"), y, yerr: 0.0 });
                }
            }
            (meta("sigma", "family", "variance", Log10, Log10), pts)
        }
        "vqe" => (meta("step", "family", "energy", Linear, Linear), grouped(&load_table(dir, "trace")?, col("step"), col("family"), "energy")),
        "landscape" => (
            meta("theta_i", "family", "cost", Linear, Linear),
            grouped(&load_table(dir, "landscape")?, col("theta_i"), col("family"), "cost"),
        ),
        "noise" => (
            meta("backend", "family", "energy", Linear, Linear),
            grouped(&load_table(dir, "noise")?, col("backend"), col("family"), "estimate"),
        ),
        "shots" => {
            let rows = load_table(dir, "shots")?;
            let mut pts = grouped(&rows, col("shots"), col("family"), "mse");
            pts.extend(grouped(&rows, col("shots"), |r| format!("{}_predicted", text(r, "family")), "predicted_mse"));
            (meta("shots", "family", "mse", Log10, Log10), pts)
        }
        "shot_noise" => (
            meta("family", "family", "relative_error", Linear, Linear),
            grouped(&load_table(dir, "shot_noise")?, col("family"), col("family"), "relative_error"),
        ),
        "entanglement" => (
            meta("ensemble", "state", "entropy_nats", Linear, Linear),
            grouped(&load_table(dir, "entanglement")?, col("ensemble"), col("state"), "entropy_nats"),
        ),
        "purity" => {
            let rows = load_table(dir, "purity")?;
            let limit = rows.first().map_or(f64::NAN, |r| num(r, "haar_limit"));
            extra.push(("haar_limit".to_string(), limit));
            let mut m = meta("ensemble", "quantity", "purity", Linear, Log10);
            m.references.insert("haar_limit".into(), limit);
            (m, grouped(&rows, col("ensemble"), fixed("purity"), "purity"))
        }
        "fidelity" => (
            meta("family", "quantity", "fidelity", Linear, Linear),
            grouped(&load_table(dir, "fidelity")?, col("family"), fixed("fidelity"), "fidelity"),
        ),
        "param_efficiency" => (
            meta("num_params", "family", "best_relative_error", Linear, Log10),
            grouped(&load_table(dir, "param_efficiency")?, col("num_params"), col("family"), "best_relative_error"),
        ),
        "theory" => (
            meta("w", "quantity", "mean_mass", Linear, Log10),
            grouped(&load_table(dir, "hamming")?, col("w"), fixed("mean_mass"), "mean_mass"),
        ),
        "framepotential" => {
            let rows = load_table(dir, "framepotential")?;
            let pts = rows
                .iter()
                .map(|r| PlotPoint {
                    x: text(r, "ensemble"),
                    series: "frame_potential_t2".into(),
                    y: num(r, "frame_potential_t2"),
                    yerr: num(r, "stderr"),
                })
                .collect();
            let mut m = meta("ensemble", "quantity", "frame_potential_t2", Linear, Log10);
            m.references.insert("haar".into(), 2.0);
            (m, pts)
        }
        "stats_compare" => (
            meta("family", "quantity", "final_energy", Linear, Linear),
            grouped(&load_table(dir, "final")?, col("family"), fixed("final_energy"), "final_energy"),
        ),
        "size_scaling" => (
            meta("n", "family", "relative_error", Linear, Log10),
            grouped(&load_table(dir, "size_scaling")?, col("n"), col("family"), "relative_error"),
        ),
        "optimizer_robustness" => (
            meta("optimizer", "family", "relative_error", Linear, Log10),
            grouped(&load_table(dir, "optimizers")?, col("optimizer"), col("family"), "relative_error"),
        ),
        other => return Err(BenchError::Validation(format!("kind: no plot mapping for `{other}`"))),
    };
    Ok(PlotData { meta, points, extra })
}

impl PlotData {
    pub fn to_csv(&self) -> BenchResult<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["x".to_string(), "series".into(), "y".into(), "yerr".into()];
        header.extend(self.extra.iter().map(|(k, _)| k.clone()));
        w.write_record(&header).map_err(|e| BenchError::io("plot.csv", e))?;
        for p in &self.points {
            let mut rec = vec![p.x.clone(), p.series.clone(), p.y.to_string(), p.yerr.to_string()];
            rec.extend(self.extra.iter().map(|(_, v)| v.to_string()));
            w.write_record(&rec).map_err(|e| BenchError::io("plot.csv", e))?;
        }
        w.into_inner().map_err(|e| BenchError::io("plot.csv", e))
    }

    pub fn to_svg(&self) -> String {
        render_svg(self)
    }

    /// Write `plot.csv`, `plot.json` and `plot.svg` into `dir`.
    pub fn write(&self, dir: &Path) -> BenchResult<Vec<String>> {
        write_atomic(&dir.join("plot.csv"), &self.to_csv()?)?;
        write_json(&dir.join("plot.json"), &self.meta)?;
        write_atomic(&dir.join("plot.svg"), self.to_svg().as_bytes())?;
        Ok(vec!["plot.csv".into(), "plot.json".into(), "plot.svg".into()])
    }
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let vals: Vec<f64> = values.filter(|v| v.is_finite() && (!log || *v > 0.0)).map(|v| if log { v.log10() } else { v }).collect();
        let (mut lo, mut hi) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        }
        Axis { lo, hi, log }
    }

    fn frac(&self, v: f64) -> Option<f64> {
        let t = if self.log {
            if v <= 0.0 {
                return None;
            }
            v.log10()
        } else {
            v
        };
        t.is_finite().then(|| (t - self.lo) / (self.hi - self.lo))
    }

    fn tick_label(&self, k: usize, count: usize) -> String {
        let t = self.lo + (self.hi - self.lo) * k as f64 / count as f64;
        if self.log {
            format!("1e{t:.1}")
        } else {
            format!("{t:.3}")
        }
    }
}

fn render_svg(data: &PlotData) -> String {
    let categorical = data.points.iter().any(|p| p.x.parse::<f64>().is_err());
    let mut categories: Vec<String> = Vec::new();
    for p in &data.points {
        if !categories.contains(&p.x) {
            categories.push(p.x.clone());
        }
    }
    let xval = |p: &PlotPoint| -> f64 {
        if categorical {
            categories.iter().position(|c| *c == p.x).unwrap_or(0) as f64
        } else {
            p.x.parse().unwrap_or(f64::NAN)
        }
    };
    let xlog = !categorical && data.meta.x_scale == Scale::Log10;
    let ylog = data.meta.y_scale == Scale::Log10;
    let xa = Axis::new(data.points.iter().map(xval), xlog);
    let ya = Axis::new(data.points.iter().map(|p| p.y).chain(data.meta.references.values().copied()), ylog);
    let px = |f: f64| MARGIN + f * (W - 2.0 * MARGIN);
    let py = |f: f64| H - MARGIN - f * (H - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(&data.meta.experiment_id)
    );
    let _ = writeln!(
        s,
        r#"<line x1="{m}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{m}" y1="{t}" x2="{m}" y2="{b}" stroke="black"/>"#,
        m = MARGIN,
        b = H - MARGIN,
        r = W - MARGIN,
        t = MARGIN
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end" font-size="10">{}</text>"#,
            MARGIN - 4.0,
            py(f) + 3.0,
            ya.tick_label(k, 4)
        );
        if !categorical {
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle" font-size="10">{}</text>"#,
                px(f),
                H - MARGIN + 14.0,
                xa.tick_label(k, 4)
            );
        }
    }
    if categorical {
        for (i, c) in categories.iter().enumerate() {
            if let Some(f) = xa.frac(i as f64) {
                let _ = writeln!(
                    s,
                    r#"<text x="{}" y="{}" text-anchor="middle" font-size="10">{}</text>"#,
                    px(f),
                    H - MARGIN + 14.0,
                    escape(c)
                );
            }
        }
    }
    let scale_note = |sc: Scale| if sc == Scale::Log10 { " (log10)" } else { "" };
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}{}</text>"#,
        W / 2.0,
        H - 20.0,
        escape(&data.meta.x_name),
        scale_note(if xlog { Scale::Log10 } else { Scale::Linear })
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 16 {})">{}{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(&data.meta.y_name),
        scale_note(data.meta.y_scale)
    );
    for (name, v) in &data.meta.references {
        if let Some(f) = ya.frac(*v) {
            let _ = writeln!(
                s,
                r#"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="gray" stroke-dasharray="4 3"/><text x="{}" y="{}" font-size="10" fill="gray">{}</text>"#,
                MARGIN,
                W - MARGIN,
                W - MARGIN + 2.0,
                py(f) + 3.0,
                escape(name),
                y = py(f)
            );
        }
    }
    let mut series: Vec<&str> = Vec::new();
    for p in &data.points {
        if !series.contains(&p.series.as_str()) {
            series.push(&p.series);
        }
    }
    for (k, name) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<(f64, f64)> = data
            .points
            .iter()
            .filter(|p| p.series == *name)
            .filter_map(|p| Some((px(xa.frac(xval(p))?), py(ya.frac(p.y)?))))
            .collect();
        if pts.len() > 1 && !categorical {
            let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
            let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" points="{}"/>"#, path.join(" "));
        }
        for (x, y) in &pts {
            let _ = writeln!(s, r#"<circle cx="{x:.1}" cy="{y:.1}" r="2.5" fill="{color}"/>"#);
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="11" fill="{color}">{}</text>"#,
            W - MARGIN - 120.0,
            MARGIN + 14.0 * k as f64,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
