//! Result-bundle plumbing: trajectory CSVs, a one-row summary CSV, a flat
//! key=value metadata file, and optional SVG line charts.
//!
//! CSVs are the source of truth and must be byte-identical across reruns of
//! the same config; metadata carries wall time and is exempt.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use restrain_core::probes::TrajectoryRecord;

pub const CSV_HEADER: &str = "iteration,loss,grad_inf,state_inf,sharpness,rel_l1";

/// Shortest round-trip decimal; non-finite values serialize as empty fields
/// ("absent observable").
fn cell(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(cell).unwrap_or_default()
}

/// Render a trajectory in the fixed schema.
pub fn trajectory_csv(rec: &TrajectoryRecord) -> String {
    let mut out = String::with_capacity(32 * (rec.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for i in 0..rec.len() {
        let _ = writeln!(
            out,
            "{i},{},{},{},{},{}",
            cell(rec.loss[i]),
            cell(rec.grad_inf[i]),
            cell(rec.state_inf[i]),
            opt_cell(rec.sharpness[i]),
            opt_cell(rec.rel_l1[i]),
        );
    }
    out
}

/// Parse a trajectory CSV back (tests + round-trip guarantees).
pub fn parse_trajectory_csv(text: &str) -> Result<TrajectoryRecord> {
    let mut lines = text.lines();
    let header = lines.next().context("empty CSV")?;
    anyhow::ensure!(header == CSV_HEADER, "unexpected CSV header `{header}`");
    let mut rec = TrajectoryRecord::new();
    for (lineno, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        anyhow::ensure!(f.len() == 6, "line {}: expected 6 fields, got {}", lineno + 2, f.len());
        let num = |s: &str| -> Result<f64> {
            if s.is_empty() {
                Ok(f64::NAN)
            } else {
                s.parse::<f64>().with_context(|| format!("line {}: bad number `{s}`", lineno + 2))
            }
        };
        let opt = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                Ok(Some(num(s)?))
            }
        };
        rec.push_full(num(f[1])?, num(f[2])?, num(f[3])?, opt(f[4])?, opt(f[5])?);
    }
    Ok(rec)
}

/// One-row summary CSV: named columns, one value row.
pub fn summary_csv(pairs: &[(String, String)]) -> String {
    let header: Vec<&str> = pairs.iter().map(|(k, _)| k.as_str()).collect();
    let row: Vec<&str> = pairs.iter().map(|(_, v)| v.as_str()).collect();
    format!("{}\n{}\n", header.join(","), row.join(","))
}

/// Minimal SVG polyline chart of one or more series (index on x).
/// Non-finite samples break the polyline.
pub fn svg_chart(title: &str, series: &[(&str, &[f64])]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const PAD: f64 = 40.0;
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

    let finite: Vec<f64> = series
        .iter()
        .flat_map(|(_, s)| s.iter().copied())
        .filter(|v| v.is_finite())
        .collect();
    let (lo, hi) = finite
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let (lo, hi) = if finite.is_empty() {
        (0.0, 1.0)
    } else if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    };
    let max_len = series.iter().map(|(_, s)| s.len()).max().unwrap_or(1).max(2);

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
    );
    let _ = writeln!(out, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">{}</text>",
        W / 2.0,
        title
    );
    let _ = writeln!(
        out,
        "<rect x=\"{PAD}\" y=\"{PAD}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#999\"/>",
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    for (si, (name, s)) in series.iter().enumerate() {
        let color = colors[si % colors.len()];
        let mut segments: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
        for (i, &v) in s.iter().enumerate() {
            if v.is_finite() {
                let x = PAD + (W - 2.0 * PAD) * i as f64 / (max_len - 1) as f64;
                let y = H - PAD - (H - 2.0 * PAD) * (v - lo) / (hi - lo);
                segments.last_mut().unwrap().push((x, y));
            } else if !segments.last().unwrap().is_empty() {
                segments.push(Vec::new());
            }
        }
        for seg in segments.iter().filter(|s| s.len() >= 2) {
            let pts: Vec<String> = seg.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            let _ = writeln!(
                out,
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
                pts.join(" ")
            );
        }
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"{color}\">{name}</text>",
            PAD + 6.0,
            PAD + 16.0 + 16.0 * si as f64
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Destination for one experiment's artifacts. With no directory the writers
/// are no-ops, so experiments can also run purely in-memory (tests).
pub struct OutputSink {
    dir: Option<PathBuf>,
    pub emit_svg: bool,
    written: Vec<PathBuf>,
}

impl OutputSink {
    pub fn new(dir: Option<&Path>, emit_svg: bool) -> Result<Self> {
        if let Some(d) = dir {
            std::fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
        }
        Ok(OutputSink {
            dir: dir.map(Path::to_path_buf),
            emit_svg,
            written: Vec::new(),
        })
    }

    pub fn sink_only() -> Self {
        OutputSink {
            dir: None,
            emit_svg: false,
            written: Vec::new(),
        }
    }

    fn write(&mut self, name: &str, content: &str) -> Result<()> {
        if let Some(dir) = &self.dir {
            let path = dir.join(name);
            std::fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
            self.written.push(path);
        }
        Ok(())
    }

    pub fn trajectory(&mut self, name: &str, rec: &TrajectoryRecord) -> Result<()> {
        self.write(&format!("{name}.csv"), &trajectory_csv(rec))?;
        if self.emit_svg {
            self.write(&format!("{name}.svg"), &svg_chart(name, &[("loss", &rec.loss)]))?;
        }
        Ok(())
    }

    pub fn summary(&mut self, pairs: &[(String, String)]) -> Result<()> {
        self.write("summary.csv", &summary_csv(pairs))
    }

    pub fn metadata(&mut self, lines: &[(String, String)]) -> Result<()> {
        let mut text = String::new();
        for (k, v) in lines {
            let _ = writeln!(text, "{k}={v}");
        }
        self.write("metadata.txt", &text)
    }

    pub fn chart(&mut self, name: &str, title: &str, series: &[(&str, &[f64])]) -> Result<()> {
        if self.emit_svg {
            self.write(&format!("{name}.svg"), &svg_chart(title, series))?;
        }
        Ok(())
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trips_including_empty_fields() {
        let mut rec = TrajectoryRecord::new();
        rec.push(0.75, 0.1, 3.0);
        rec.push_full(0.7000000000000002, f64::NAN, 3.1, Some(1.5), None);
        rec.push_full(f64::INFINITY, f64::INFINITY, 2.9, None, Some(1e-7));
        let text = trajectory_csv(&rec);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "0,0.75,0.1,3,,");
        // shortest round-trip keeps the full double
        assert_eq!(lines[2], "1,0.7000000000000002,,3.1,1.5,");
        assert_eq!(lines[3], "2,,,2.9,,0.0000001");
        let back = parse_trajectory_csv(&text).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(back.loss[1].to_bits(), rec.loss[1].to_bits());
        assert!(back.grad_inf[1].is_nan());
        assert_eq!(back.sharpness[1], Some(1.5));
        assert_eq!(back.rel_l1[2], Some(1e-7));
    }

    #[test]
    fn rendering_is_deterministic() {
        let mut rec = TrajectoryRecord::new();
        for i in 0..50 {
            rec.push((i as f64 * 0.37).sin(), 0.1, 1.0);
        }
        assert_eq!(trajectory_csv(&rec), trajectory_csv(&rec));
        let s = [("loss", rec.loss.as_slice())];
        assert_eq!(svg_chart("t", &s), svg_chart("t", &s));
    }

    #[test]
    fn summary_has_one_header_and_one_row() {
        let text = summary_csv(&[
            ("alpha_max".into(), "200000000".into()),
            ("classification".into(), "stable".into()),
        ]);
        assert_eq!(text, "alpha_max,classification\n200000000,stable\n");
    }

    #[test]
    fn svg_is_wellformed_enough() {
        let data = [1.0, 2.0, f64::NAN, 3.0, 2.5];
        let svg = svg_chart("demo", &[("a", &data)]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2); // NaN splits the line
    }

    #[test]
    fn sink_writes_into_directory() {
        let dir = tempfile::tempdir().unwrap();
        let mut sink = OutputSink::new(Some(dir.path()), true).unwrap();
        let mut rec = TrajectoryRecord::new();
        for _ in 0..20 {
            rec.push(1.0, 0.5, 2.0);
        }
        sink.trajectory("demo", &rec).unwrap();
        sink.summary(&[("k".into(), "v".into())]).unwrap();
        sink.metadata(&[("config.seed".into(), "0".into())]).unwrap();
        assert!(dir.path().join("demo.csv").exists());
        assert!(dir.path().join("demo.svg").exists());
        assert!(dir.path().join("summary.csv").exists());
        assert!(dir.path().join("metadata.txt").exists());
        assert_eq!(sink.written().len(), 4);
    }
}
