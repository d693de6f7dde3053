//! Learning-curve summaries, `curves.csv`, SVG plots and run logs.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use plotters::prelude::*;

use super::{ExperimentConfig, ExperimentResult, RunRecord};
use crate::{Error, Result};

/// Per-episode mean and sample standard deviation across repetitions.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Summary {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }
}

/// Standard deviation uses the n − 1 denominator; with a single
/// repetition it is 0.
pub fn summarize_returns(curves: &[&[f64]]) -> Result<Summary> {
    let first = curves.first().ok_or(Error::Empty("records"))?;
    let episodes = first.len();
    if let Some(bad) = curves.iter().find(|c| c.len() != episodes) {
        return Err(Error::Ragged { expected: episodes, found: bad.len() });
    }
    let n = curves.len() as f64;
    let mut mean = Vec::with_capacity(episodes);
    let mut std = Vec::with_capacity(episodes);
    for e in 0..episodes {
        let m = curves.iter().map(|c| c[e]).sum::<f64>() / n;
        let s = if curves.len() < 2 {
            0.0
        } else {
            (curves.iter().map(|c| (c[e] - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        mean.push(m);
        std.push(s);
    }
    Ok(Summary { mean, std })
}

pub fn summarize(records: &[RunRecord]) -> Result<Summary> {
    let curves: Vec<&[f64]> = records.iter().map(|r| r.episode_returns.as_slice()).collect();
    summarize_returns(&curves)
}

/// Six significant digits with trailing zeros kept, like C's `%#.6g`.
pub fn format_g6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0.00000".into() } else { "0.00000".into() };
    }
    // the exponent after rounding to six digits decides the style
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else if exp == 5 {
        // `#` keeps the decimal point even with no fractional digits
        format!("{x:.0}.")
    } else {
        format!("{:.*}", (5 - exp) as usize, x)
    }
}

fn warn_if_exists(path: &Path) {
    if path.exists() {
        log::warn!("overwriting {}", path.display());
    }
}

/// Header `episode,mean,std,rep<i>...`, one row per episode.
pub fn emit_csv(summary: &Summary, records: &[RunRecord], path: &Path) -> Result<()> {
    if let Some(r) = records.iter().find(|r| r.episode_returns.len() != summary.len()) {
        return Err(Error::Ragged { expected: summary.len(), found: r.episode_returns.len() });
    }
    let mut s = String::from("episode,mean,std");
    for r in records {
        let _ = write!(s, ",rep{}", r.repetition);
    }
    s.push('\n');
    for e in 0..summary.len() {
        let _ = write!(s, "{e},{},{}", format_g6(summary.mean[e]), format_g6(summary.std[e]));
        for r in records {
            let _ = write!(s, ",{}", format_g6(r.episode_returns[e]));
        }
        s.push('\n');
    }
    warn_if_exists(path);
    fs::write(path, s)?;
    Ok(())
}

/// Mean and std columns of a `curves.csv`.
pub fn read_curves_csv(path: &Path) -> Result<Summary> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or(Error::Empty("curves file"))?;
    if !header.starts_with("episode,mean,std") {
        return Err(Error::Parse(format!("{}: unexpected header `{header}`", path.display())));
    }
    let mut summary = Summary { mean: Vec::new(), std: Vec::new() };
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        let num = |k: usize| -> Result<f64> {
            fields
                .get(k)
                .ok_or_else(|| Error::Parse(format!("row {i}: too few fields")))?
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("row {i}: {e}")))
        };
        summary.mean.push(num(1)?);
        summary.std.push(num(2)?);
    }
    Ok(summary)
}

#[derive(Debug, Clone)]
pub struct PlotSeries<'a> {
    pub label: String,
    pub summary: &'a Summary,
}

pub fn emit_plot(summary: &Summary, label: &str, path: &Path) -> Result<()> {
    emit_plot_overlay(&[PlotSeries { label: label.to_string(), summary }], path)
}

/// Mean curves with ±1 std bands, one colour per series.
pub fn emit_plot_overlay(series: &[PlotSeries<'_>], path: &Path) -> Result<()> {
    let episodes = series.iter().map(|s| s.summary.len()).max().unwrap_or(0);
    if episodes == 0 {
        return Err(Error::Empty("plot series"));
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in series {
        for (m, d) in s.summary.mean.iter().zip(&s.summary.std) {
            lo = lo.min(m - d);
            hi = hi.max(m + d);
        }
    }
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::Plot("summary contains non-finite values".into()));
    }
    let pad = ((hi - lo) * 0.05).max(1.0);
    let (lo, hi) = (lo - pad, hi + pad);
    warn_if_exists(path);
    draw(series, episodes, lo, hi, path).map_err(|e| Error::Plot(e.to_string()))
}

fn draw(
    series: &[PlotSeries<'_>],
    episodes: usize,
    lo: f64,
    hi: f64,
    path: &Path,
) -> std::result::Result<(), Box<dyn std::error::Error>> {
    let root = SVGBackend::new(path, (800, 500)).into_drawing_area();
    root.fill(&WHITE)?;
    let x_max = (episodes.max(2) - 1) as f64;
    let mut chart = ChartBuilder::on(&root)
        .margin(15)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(0f64..x_max, lo..hi)?;
    chart
        .configure_mesh()
        .x_desc("episode")
        .y_desc("cumulative reward")
        .draw()?;
    for (i, s) in series.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        let m = &s.summary.mean;
        let d = &s.summary.std;
        let mut band: Vec<(f64, f64)> = (0..m.len()).map(|e| (e as f64, m[e] + d[e])).collect();
        band.extend((0..m.len()).rev().map(|e| (e as f64, m[e] - d[e])));
        chart.draw_series(std::iter::once(Polygon::new(band, color.mix(0.2).filled())))?;
        chart
            .draw_series(LineSeries::new((0..m.len()).map(|e| (e as f64, m[e])), color.stroke_width(2)))?
            .label(s.label.clone())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()?;
    root.present()?;
    Ok(())
}

pub(super) fn write_meta(config: &ExperimentConfig, result: &ExperimentResult, path: &Path) -> Result<()> {
    let mut s = format!("# build = {} {}\n", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"));
    s.push_str(&config.to_text());
    for (rep, msg) in &result.failures {
        let _ = writeln!(s, "# repetition {rep} failed: {msg}");
    }
    for r in &result.records {
        if !r.resets.is_empty() {
            let _ = writeln!(s, "# repetition {} reset after episode {:?}", r.repetition, r.resets);
        }
    }
    warn_if_exists(path);
    fs::write(path, s)?;
    Ok(())
}

pub(super) fn write_solver_log(records: &[RunRecord], path: &Path) -> Result<()> {
    warn_if_exists(path);
    let mut w = BufWriter::new(fs::File::create(path)?);
    for r in records {
        for s in &r.solves {
            match &s.failure {
                Some(msg) => writeln!(w, "rep {} step {} observed {} failed: {msg}", r.repetition, s.step, s.observed)?,
                None => writeln!(
                    w,
                    "rep {} step {} observed {} iterations {} J0 {:e} J {:e} converged {}",
                    r.repetition, s.step, s.observed, s.iterations, s.initial_cost, s.cost, s.converged
                )?,
            }
            for it in &s.trace {
                writeln!(w, "  {} {:e} {:e} {:e}", it.iteration, it.cost, it.distance_u, it.distance_v)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(rep: usize, returns: Vec<f64>) -> RunRecord {
        RunRecord {
            repetition: rep,
            seed: rep as u64,
            episode_steps: vec![1; returns.len()],
            reached_goal: vec![false; returns.len()],
            episode_returns: returns,
            resets: vec![],
            solves: vec![],
            provenance: vec![],
        }
    }

    #[test]
    fn g6_formatting() {
        assert_eq!(format_g6(15.0), "15.0000");
        assert_eq!(format_g6(7.0710678118654755), "7.07107");
        assert_eq!(format_g6(-200.0), "-200.000");
        assert_eq!(format_g6(0.0), "0.00000");
        assert_eq!(format_g6(123456.0), "123456.");
        assert_eq!(format_g6(1234567.0), "1.23457e+06");
        assert_eq!(format_g6(0.0001), "0.000100000");
        assert_eq!(format_g6(0.00001234), "1.23400e-05");
        assert_eq!(format_g6(999999.7), "1.00000e+06");
    }

    #[test]
    fn summary_cases() {
        let s = summarize(&[record(0, vec![-200.0]), record(1, vec![-100.0])]).unwrap();
        assert_eq!(s.mean, vec![-150.0]);
        assert!((s.std[0] - 70.710_678_118_654_76).abs() < 1e-9);
        let s = summarize(&[record(0, vec![3.0, 4.0])]).unwrap();
        assert_eq!(s.std, vec![0.0, 0.0]);
        let s = summarize(&[record(0, vec![3.0, 4.0]), record(1, vec![3.0, 4.0])]).unwrap();
        assert_eq!(s.std, vec![0.0, 0.0]);
        assert!(matches!(summarize(&[]), Err(Error::Empty(_))));
        assert!(matches!(
            summarize(&[record(0, vec![1.0]), record(1, vec![1.0, 2.0])]),
            Err(Error::Ragged { .. })
        ));
    }

    #[test]
    fn csv_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curves.csv");
        let recs = [record(0, vec![10.0]), record(1, vec![20.0])];
        emit_csv(&summarize(&recs).unwrap(), &recs, &path).unwrap();
        assert_eq!(
            fs::read_to_string(&path).unwrap(),
            "episode,mean,std,rep0,rep1\n0,15.0000,7.07107,10.0000,20.0000\n"
        );
        let back = read_curves_csv(&path).unwrap();
        assert_eq!(back.mean, vec![15.0]);

        let empty = [record(0, vec![])];
        emit_csv(&summarize(&empty).unwrap(), &empty, &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "episode,mean,std,rep0\n");
    }

    #[test]
    fn csv_unwritable_path() {
        let recs = [record(0, vec![1.0])];
        let s = summarize(&recs).unwrap();
        assert!(emit_csv(&s, &recs, Path::new("/nonexistent/dir/curves.csv")).is_err());
    }

    #[test]
    fn plots_are_svg() {
        let dir = tempfile::tempdir().unwrap();
        let a = Summary { mean: vec![-200.0, -150.0, -120.0], std: vec![0.0, 10.0, 5.0] };
        let flat = Summary { mean: vec![1.0; 4], std: vec![0.0; 4] };
        let path = dir.path().join("plot.svg");
        emit_plot_overlay(
            &[
                PlotSeries { label: "paug-q".into(), summary: &a },
                PlotSeries { label: "eps".into(), summary: &flat },
            ],
            &path,
        )
        .unwrap();
        let svg = fs::read_to_string(&path).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("paug-q") && svg.contains("cumulative reward"));
        assert!(emit_plot(&Summary { mean: vec![], std: vec![] }, "x", &path).is_err());
    }
}
