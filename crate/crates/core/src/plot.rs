//! Static SVG figure generation from aggregate records.
//!
//! Three figure families, one file per (dataset, kind, metric):
//!
//! * `impact`: metric against bias level for the unmitigated model, one curve
//!   per evaluation mode.
//! * `comparison`: per-method curves in two panels (fair test, biased test)
//!   with the fair baseline drawn as a dashed horizontal black line. Groups
//!   that lost a majority of folds appear as cross markers, not curve points;
//!   a failed group with no surviving value pins its cross to the top edge.
//! * `scatter`: fair against biased aggregate means with the x=y diagonal;
//!   points at magnitude 1 or beyond use an open square marker.
//!
//! Everything is drawn by a small internal vector layer (lines, markers,
//! text); output is deterministic for identical input.

use crate::bias::BiasKind;
use crate::error::Error;
use crate::metrics::METRIC_NAMES;
use crate::mitigate::Method;
use crate::pipeline::{diagonal_scatter, AggregateRecord, EvalMode};
use crate::Result;
use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PlotFamily {
    Impact,
    Comparison,
    Scatter,
}

impl PlotFamily {
    pub const ALL: [PlotFamily; 3] = [
        PlotFamily::Impact,
        PlotFamily::Comparison,
        PlotFamily::Scatter,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PlotFamily::Impact => "impact",
            PlotFamily::Comparison => "comparison",
            PlotFamily::Scatter => "scatter",
        }
    }
}

impl std::fmt::Display for PlotFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PlotFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "impact" => Ok(PlotFamily::Impact),
            "comparison" => Ok(PlotFamily::Comparison),
            "scatter" => Ok(PlotFamily::Scatter),
            other => Err(Error::InvalidInput(format!(
                "unknown plot family {other:?}; expected impact, comparison, or scatter"
            ))),
        }
    }
}

/// One rendered figure: target file name plus SVG body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlotFile {
    pub name: String,
    pub svg: String,
}

/// Renders one figure family from aggregates. Empty input or a selection
/// that yields no figures is an error so callers can exit nonzero.
pub fn render(family: PlotFamily, aggregates: &[AggregateRecord]) -> Result<Vec<PlotFile>> {
    if aggregates.is_empty() {
        return Err(Error::InvalidInput("no aggregates to plot".into()));
    }
    let files = match family {
        PlotFamily::Impact => render_impact(aggregates),
        PlotFamily::Comparison => render_comparison(aggregates),
        PlotFamily::Scatter => render_scatter(aggregates),
    };
    if files.is_empty() {
        return Err(Error::InvalidInput(format!(
            "selection produced no {family} figures"
        )));
    }
    Ok(files)
}

fn method_color(m: Method) -> &'static str {
    match m {
        Method::Unmitigated => "#000000",
        Method::Reweighing => "#1f77b4",
        Method::Massaging => "#ff7f0e",
        Method::Ftu => "#2ca02c",
        Method::Eop => "#d62728",
        Method::Ceo => "#9467bd",
        Method::RocSpd => "#8c564b",
        Method::RocEqop => "#e377c2",
        Method::RocAvod => "#17becf",
    }
}

fn mode_color(mode: EvalMode) -> &'static str {
    match mode {
        EvalMode::Fair => "#1f77b4",
        EvalMode::Biased => "#d62728",
    }
}

/// Pads a closed interval by 5% of its span; a degenerate interval borrows
/// its scale from the value's magnitude so single-point plots stay readable.
fn pad_domain(min: f64, max: f64) -> (f64, f64) {
    let span = max - min;
    let pad = 0.05 * if span > 0.0 { span } else { min.abs().max(1.0) };
    (min - pad, max + pad)
}

fn min_max(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let mut out: Option<(f64, f64)> = None;
    for v in values.filter(|v| v.is_finite()) {
        out = Some(match out {
            None => (v, v),
            Some((lo, hi)) => (lo.min(v), hi.max(v)),
        });
    }
    out
}

struct LinScale {
    d0: f64,
    d1: f64,
    r0: f64,
    r1: f64,
}

impl LinScale {
    fn new(domain: (f64, f64), range: (f64, f64)) -> Self {
        LinScale {
            d0: domain.0,
            d1: domain.1,
            r0: range.0,
            r1: range.1,
        }
    }

    fn map(&self, v: f64) -> f64 {
        self.r0 + (v - self.d0) / (self.d1 - self.d0) * (self.r1 - self.r0)
    }
}

fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if v.abs() < 0.005 {
        return format!("{v:.1e}");
    }
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.to_string() }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Canvas {
    w: f64,
    h: f64,
    body: String,
}

impl Canvas {
    fn new(w: f64, h: f64) -> Self {
        let mut body = String::new();
        let _ = writeln!(
            body,
            "<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"#ffffff\"/>"
        );
        Canvas { w, h, body }
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, width: f64, class: Option<&str>, dash: Option<&str>) {
        let class = class.map(|c| format!(" class=\"{c}\"")).unwrap_or_default();
        let dash = dash
            .map(|d| format!(" stroke-dasharray=\"{d}\""))
            .unwrap_or_default();
        let _ = writeln!(
            self.body,
            "<line{class} x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" stroke=\"{stroke}\" stroke-width=\"{width}\"{dash}/>"
        );
    }

    fn polyline(&mut self, pts: &[(f64, f64)], stroke: &str, width: f64) {
        if pts.len() < 2 {
            return;
        }
        let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(
            self.body,
            "<polyline class=\"curve\" points=\"{}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"{width}\"/>",
            coords.join(" ")
        );
    }

    fn circle(&mut self, x: f64, y: f64, r: f64, fill: &str) {
        let _ = writeln!(
            self.body,
            "<circle class=\"pt\" cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"{r}\" fill=\"{fill}\"/>"
        );
    }

    fn cross(&mut self, x: f64, y: f64, arm: f64, stroke: &str) {
        let _ = writeln!(
            self.body,
            "<path class=\"fail-mark\" d=\"M {:.2} {:.2} L {:.2} {:.2} M {:.2} {:.2} L {:.2} {:.2}\" stroke=\"{stroke}\" stroke-width=\"1.6\" fill=\"none\"/>",
            x - arm, y - arm, x + arm, y + arm, x - arm, y + arm, x + arm, y - arm
        );
    }

    fn square(&mut self, x: f64, y: f64, half: f64, stroke: &str) {
        let _ = writeln!(
            self.body,
            "<rect class=\"clipped\" x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"1.4\"/>",
            x - half,
            y - half,
            2.0 * half,
            2.0 * half
        );
    }

    fn text(&mut self, x: f64, y: f64, s: &str, size: f64, anchor: &str, fill: &str) {
        let _ = writeln!(
            self.body,
            "<text x=\"{x:.2}\" y=\"{y:.2}\" font-family=\"sans-serif\" font-size=\"{size}\" text-anchor=\"{anchor}\" fill=\"{fill}\">{}</text>",
            esc(s)
        );
    }

    fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n{}</svg>\n",
            self.w, self.h, self.w, self.h, self.body
        )
    }
}

/// Plot area with fitted scales; draws its own frame, ticks, and labels.
struct Panel {
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
    xs: LinScale,
    ys: LinScale,
}

impl Panel {
    fn new(area: (f64, f64, f64, f64), x_domain: (f64, f64), y_domain: (f64, f64)) -> Self {
        let (x0, y0, x1, y1) = area;
        Panel {
            x0,
            y0,
            x1,
            y1,
            xs: LinScale::new(x_domain, (x0, x1)),
            ys: LinScale::new(y_domain, (y1, y0)),
        }
    }

    fn frame(&self, c: &mut Canvas, x_label: &str, y_label: &str) {
        c.line(self.x0, self.y1, self.x1, self.y1, "#333333", 1.0, None, None);
        c.line(self.x0, self.y0, self.x0, self.y1, "#333333", 1.0, None, None);
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let xv = self.xs.d0 + f * (self.xs.d1 - self.xs.d0);
            let xp = self.xs.map(xv);
            c.line(xp, self.y1, xp, self.y1 + 4.0, "#333333", 1.0, None, None);
            c.text(xp, self.y1 + 16.0, &fmt_num(xv), 10.0, "middle", "#333333");
            let yv = self.ys.d0 + f * (self.ys.d1 - self.ys.d0);
            let yp = self.ys.map(yv);
            c.line(self.x0 - 4.0, yp, self.x0, yp, "#333333", 1.0, None, None);
            c.text(self.x0 - 7.0, yp + 3.5, &fmt_num(yv), 10.0, "end", "#333333");
        }
        c.text(
            (self.x0 + self.x1) / 2.0,
            self.y1 + 32.0,
            x_label,
            11.0,
            "middle",
            "#333333",
        );
        c.text(self.x0, self.y0 - 8.0, y_label, 11.0, "start", "#333333");
    }
}

fn file_name(family: PlotFamily, dataset: &str, kind: BiasKind, metric: &str) -> String {
    format!("{family}_{dataset}_{}_{metric}.svg", kind.as_str())
}

/// Point sets for one (dataset, kind, metric, method, mode) curve.
struct Series {
    color: &'static str,
    /// (level, value) of healthy aggregates, ascending by level.
    points: Vec<(f64, f64)>,
    /// (level, Some(value)) failed-with-value, (level, None) failed-empty.
    failures: Vec<(f64, Option<f64>)>,
}

fn series_values(s: &Series) -> impl Iterator<Item = f64> + '_ {
    s.points
        .iter()
        .map(|&(_, v)| v)
        .chain(s.failures.iter().filter_map(|&(_, v)| v))
}

fn series_levels(s: &Series) -> impl Iterator<Item = f64> + '_ {
    s.points
        .iter()
        .map(|&(l, _)| l)
        .chain(s.failures.iter().map(|&(l, _)| l))
}

fn collect_series(
    rows: &[&AggregateRecord],
    metric: usize,
    mode: EvalMode,
    method: Method,
    color: &'static str,
) -> Series {
    let mut points = Vec::new();
    let mut failures = Vec::new();
    let mut rows: Vec<&&AggregateRecord> = rows
        .iter()
        .filter(|a| a.method == method && a.eval_mode == mode)
        .collect();
    rows.sort_by(|a, b| a.level.total_cmp(&b.level));
    for a in rows {
        let value = a.mean.values()[metric];
        if a.failed {
            failures.push((a.level, value));
        } else if let Some(v) = value {
            points.push((a.level, v));
        }
    }
    Series {
        color,
        points,
        failures,
    }
}

fn draw_series(c: &mut Canvas, p: &Panel, s: &Series) {
    let pts: Vec<(f64, f64)> = s
        .points
        .iter()
        .map(|&(l, v)| (p.xs.map(l), p.ys.map(v)))
        .collect();
    c.polyline(&pts, s.color, 1.5);
    for &(x, y) in &pts {
        c.circle(x, y, 2.6, s.color);
    }
    for &(l, v) in &s.failures {
        let x = p.xs.map(l);
        // A failure with no surviving folds has no honest y position; pin it
        // to the top edge, outside the data region.
        let y = v.map(|v| p.ys.map(v)).unwrap_or(p.y0);
        c.cross(x, y, 4.0, s.color);
    }
}

fn group_by_dataset_kind(
    aggregates: &[AggregateRecord],
) -> BTreeMap<(String, BiasKind), Vec<&AggregateRecord>> {
    let mut groups: BTreeMap<(String, BiasKind), Vec<&AggregateRecord>> = BTreeMap::new();
    for a in aggregates {
        groups
            .entry((a.dataset.clone(), a.kind))
            .or_default()
            .push(a);
    }
    groups
}

fn render_impact(aggregates: &[AggregateRecord]) -> Vec<PlotFile> {
    let mut files = Vec::new();
    for ((dataset, kind), rows) in group_by_dataset_kind(aggregates) {
        for (metric, name) in METRIC_NAMES.iter().enumerate() {
            let series: Vec<(EvalMode, Series)> = EvalMode::ALL
                .into_iter()
                .map(|mode| {
                    (
                        mode,
                        collect_series(&rows, metric, mode, Method::Unmitigated, mode_color(mode)),
                    )
                })
                .collect();
            let Some(y_domain) =
                min_max(series.iter().flat_map(|(_, s)| series_values(s)))
            else {
                continue;
            };
            let Some(x_domain) = min_max(series.iter().flat_map(|(_, s)| series_levels(s)))
            else {
                continue;
            };
            let mut c = Canvas::new(560.0, 400.0);
            let panel = Panel::new(
                (64.0, 44.0, 536.0, 352.0),
                pad_domain(x_domain.0, x_domain.1),
                pad_domain(y_domain.0, y_domain.1),
            );
            c.text(
                280.0,
                20.0,
                &format!("impact: {dataset} {kind} {name}"),
                13.0,
                "middle",
                "#000000",
            );
            panel.frame(&mut c, "bias level", name);
            for (i, (mode, s)) in series.iter().enumerate() {
                draw_series(&mut c, &panel, s);
                c.text(
                    panel.x1 - 8.0,
                    panel.y0 + 14.0 + 14.0 * i as f64,
                    &format!("{mode} test"),
                    10.0,
                    "end",
                    s.color,
                );
            }
            files.push(PlotFile {
                name: file_name(PlotFamily::Impact, &dataset, kind, name),
                svg: c.finish(),
            });
        }
    }
    files
}

/// The fair reference value: the unmitigated model evaluated fairly with the
/// bias knob at zero. Absent when the grid does not include level 0.
fn fair_baseline(rows: &[&AggregateRecord], metric: usize) -> Option<f64> {
    rows.iter()
        .find(|a| {
            a.method == Method::Unmitigated
                && a.eval_mode == EvalMode::Fair
                && a.level == 0.0
                && !a.failed
        })
        .and_then(|a| a.mean.values()[metric])
}

fn render_comparison(aggregates: &[AggregateRecord]) -> Vec<PlotFile> {
    let mut files = Vec::new();
    for ((dataset, kind), rows) in group_by_dataset_kind(aggregates) {
        let mut methods: Vec<Method> = Method::ALL
            .into_iter()
            .filter(|&m| rows.iter().any(|a| a.method == m))
            .collect();
        methods.sort();
        for (metric, name) in METRIC_NAMES.iter().enumerate() {
            let per_mode: Vec<(EvalMode, Vec<Series>)> = EvalMode::ALL
                .into_iter()
                .map(|mode| {
                    (
                        mode,
                        methods
                            .iter()
                            .map(|&m| collect_series(&rows, metric, mode, m, method_color(m)))
                            .collect(),
                    )
                })
                .collect();
            let baseline = fair_baseline(&rows, metric);
            let all_series = || per_mode.iter().flat_map(|(_, ss)| ss.iter());
            let Some(y_raw) = min_max(
                all_series()
                    .flat_map(series_values)
                    .chain(baseline.iter().copied()),
            ) else {
                continue;
            };
            let Some(x_raw) = min_max(all_series().flat_map(series_levels)) else {
                continue;
            };
            let x_domain = pad_domain(x_raw.0, x_raw.1);
            let y_domain = pad_domain(y_raw.0, y_raw.1);
            let mut c = Canvas::new(960.0, 420.0);
            c.text(
                410.0,
                20.0,
                &format!("comparison: {dataset} {kind} {name}"),
                13.0,
                "middle",
                "#000000",
            );
            for (i, (mode, series)) in per_mode.iter().enumerate() {
                let x0 = 64.0 + 380.0 * i as f64;
                let panel = Panel::new((x0, 56.0, x0 + 310.0, 360.0), x_domain, y_domain);
                c.text(
                    (panel.x0 + panel.x1) / 2.0,
                    44.0,
                    &format!("{mode} test"),
                    11.0,
                    "middle",
                    "#333333",
                );
                panel.frame(&mut c, "bias level", name);
                if let Some(b) = baseline {
                    let y = panel.ys.map(b);
                    c.line(panel.x0, y, panel.x1, y, "#000000", 1.2, Some("baseline"), Some("6 4"));
                }
                for s in series {
                    draw_series(&mut c, &panel, s);
                }
            }
            for (i, &m) in methods.iter().enumerate() {
                c.text(
                    850.0,
                    66.0 + 16.0 * i as f64,
                    m.as_str(),
                    10.0,
                    "start",
                    method_color(m),
                );
            }
            if baseline.is_some() {
                c.text(
                    850.0,
                    66.0 + 16.0 * methods.len() as f64,
                    "fair baseline",
                    10.0,
                    "start",
                    "#000000",
                );
            }
            files.push(PlotFile {
                name: file_name(PlotFamily::Comparison, &dataset, kind, name),
                svg: c.finish(),
            });
        }
    }
    files
}

fn render_scatter(aggregates: &[AggregateRecord]) -> Vec<PlotFile> {
    let points = diagonal_scatter(aggregates);
    let mut groups: BTreeMap<(String, BiasKind, &'static str), Vec<&crate::pipeline::ScatterPoint>> =
        BTreeMap::new();
    for p in &points {
        groups
            .entry((p.dataset.clone(), p.kind, p.metric))
            .or_default()
            .push(p);
    }
    let mut files = Vec::new();
    for ((dataset, kind, metric), pts) in groups {
        let Some(raw) = min_max(pts.iter().flat_map(|p| [p.fair, p.biased])) else {
            continue;
        };
        let domain = pad_domain(raw.0, raw.1);
        let mut c = Canvas::new(480.0, 480.0);
        let panel = Panel::new((64.0, 44.0, 440.0, 420.0), domain, domain);
        c.text(
            252.0,
            20.0,
            &format!("scatter: {dataset} {kind} {metric}"),
            13.0,
            "middle",
            "#000000",
        );
        panel.frame(&mut c, &format!("fair {metric}"), &format!("biased {metric}"));
        c.line(
            panel.xs.map(domain.0),
            panel.ys.map(domain.0),
            panel.xs.map(domain.1),
            panel.ys.map(domain.1),
            "#888888",
            1.0,
            Some("diag"),
            Some("4 4"),
        );
        let mut methods: Vec<Method> = Vec::new();
        for p in &pts {
            let x = panel.xs.map(p.fair);
            let y = panel.ys.map(p.biased);
            if p.clipped {
                c.square(x, y, 3.2, method_color(p.method));
            } else {
                c.circle(x, y, 2.6, method_color(p.method));
            }
            if !methods.contains(&p.method) {
                methods.push(p.method);
            }
        }
        methods.sort();
        for (i, &m) in methods.iter().enumerate() {
            c.text(
                panel.x0 + 8.0,
                panel.y0 + 14.0 + 14.0 * i as f64,
                m.as_str(),
                10.0,
                "start",
                method_color(m),
            );
        }
        files.push(PlotFile {
            name: file_name(PlotFamily::Scatter, &dataset, kind, metric),
            svg: c.finish(),
        });
    }
    files
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::report_from_values;

    fn agg(
        level: f64,
        method: Method,
        eval_mode: EvalMode,
        spd: Option<f64>,
        failed: bool,
    ) -> AggregateRecord {
        let mut values = [None; 10];
        values[0] = spd.map(|_| 0.8);
        values[2] = spd;
        AggregateRecord {
            dataset: "toy".into(),
            kind: BiasKind::Label,
            level,
            method,
            eval_mode,
            n_folds: 3,
            fail_count: if failed { 2 } else { 0 },
            failed,
            mean: report_from_values(values),
            std: report_from_values([Some(0.0); 10]),
            usage_mean: Some(0.5),
            usage_std: Some(0.0),
        }
    }

    fn paired(level: f64, method: Method, spd: (f64, f64)) -> [AggregateRecord; 2] {
        [
            agg(level, method, EvalMode::Fair, Some(spd.0), false),
            agg(level, method, EvalMode::Biased, Some(spd.1), false),
        ]
    }

    #[test]
    fn family_names_round_trip() {
        for f in PlotFamily::ALL {
            assert_eq!(f.as_str().parse::<PlotFamily>().unwrap(), f);
        }
        assert!("surface".parse::<PlotFamily>().is_err());
    }

    #[test]
    fn empty_aggregates_are_rejected() {
        for f in PlotFamily::ALL {
            assert!(render(f, &[]).is_err());
        }
    }

    #[test]
    fn impact_emits_one_file_per_present_metric() {
        let mut aggs = Vec::new();
        for level in [0.0, 0.5] {
            aggs.extend(paired(level, Method::Unmitigated, (0.1, 0.2)));
        }
        let files = render(PlotFamily::Impact, &aggs).unwrap();
        // Only accuracy and spd carry values in the fabricated aggregates.
        assert_eq!(files.len(), 2);
        assert_eq!(files[0].name, "impact_toy_label_accuracy.svg");
        assert_eq!(files[1].name, "impact_toy_label_spd.svg");
        for f in &files {
            assert!(f.svg.starts_with("<svg "));
            assert!(f.svg.ends_with("</svg>\n"));
            assert_eq!(f.svg.matches("<polyline").count(), 2, "one curve per mode");
        }
    }

    #[test]
    fn comparison_draws_baseline_and_failure_crosses() {
        let mut aggs = Vec::new();
        for level in [0.0, 0.5] {
            aggs.extend(paired(level, Method::Unmitigated, (0.1, 0.2)));
        }
        aggs.extend(paired(0.0, Method::Eop, (0.05, 0.05)));
        aggs.push(agg(0.5, Method::Eop, EvalMode::Fair, Some(0.3), true));
        aggs.push(agg(0.5, Method::Eop, EvalMode::Biased, None, true));
        let files = render(PlotFamily::Comparison, &aggs).unwrap();
        let spd = files.iter().find(|f| f.name.contains("_spd")).unwrap();
        assert_eq!(spd.svg.matches("class=\"baseline\"").count(), 2, "one per panel");
        assert!(spd.svg.contains("stroke-dasharray=\"6 4\""));
        assert_eq!(spd.svg.matches("class=\"fail-mark\"").count(), 2);
        assert!(spd.svg.contains(">eop<"));
        assert!(spd.svg.contains(">fair baseline<"));
    }

    #[test]
    fn level_zero_only_baseline_sits_on_the_point() {
        let aggs = paired(0.0, Method::Unmitigated, (0.1, 0.1));
        let files = render(PlotFamily::Comparison, &aggs).unwrap();
        let spd = files.iter().find(|f| f.name.contains("_spd")).unwrap();
        let base_line = spd
            .svg
            .lines()
            .find(|l| l.contains("class=\"baseline\""))
            .unwrap();
        let y1 = base_line.split("y1=\"").nth(1).unwrap().split('"').next().unwrap();
        let point = spd.svg.lines().find(|l| l.contains("class=\"pt\"")).unwrap();
        let cy = point.split("cy=\"").nth(1).unwrap().split('"').next().unwrap();
        assert_eq!(y1, cy, "baseline height equals the single point height");
    }

    #[test]
    fn scatter_has_diagonal_and_clip_markers() {
        let mut aggs = Vec::new();
        aggs.extend(paired(0.3, Method::Reweighing, (0.04, 0.06)));
        aggs.extend(paired(0.3, Method::Massaging, (1.2, 0.5)));
        let files = render(PlotFamily::Scatter, &aggs).unwrap();
        let spd = files.iter().find(|f| f.name.contains("_spd")).unwrap();
        assert_eq!(spd.svg.matches("class=\"diag\"").count(), 1);
        assert_eq!(spd.svg.matches("class=\"clipped\"").count(), 1);
        // accuracy point (0.8, 0.8) per pair plus the unclipped spd point.
        assert!(spd.svg.matches("class=\"pt\"").count() >= 1);
        // Failed pairs never plot.
        let mut failing = aggs.clone();
        for a in &mut failing {
            a.failed = true;
        }
        assert!(render(PlotFamily::Scatter, &failing).is_err());
    }

    #[test]
    fn rendering_is_deterministic() {
        let mut aggs = Vec::new();
        for level in [0.0, 0.4, 0.8] {
            aggs.extend(paired(level, Method::Unmitigated, (0.1, 0.2)));
            aggs.extend(paired(level, Method::Ftu, (0.15, 0.1)));
        }
        for family in PlotFamily::ALL {
            assert_eq!(render(family, &aggs).unwrap(), render(family, &aggs).unwrap());
        }
    }

    #[test]
    fn padding_is_five_percent_of_span() {
        assert_eq!(pad_domain(0.0, 1.0), (-0.05, 1.05));
        let (lo, hi) = pad_domain(0.3, 0.3);
        assert!((lo - 0.25).abs() < 1e-12 && (hi - 0.35).abs() < 1e-12);
        assert_eq!(pad_domain(0.0, 0.0), (-0.05, 0.05));
        let (lo, hi) = pad_domain(100.0, 100.0);
        assert_eq!((lo, hi), (95.0, 105.0));
    }

    #[test]
    fn tick_labels_compact() {
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(0.25), "0.25");
        assert_eq!(fmt_num(-0.0001), "-1.0e-4");
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(-0.0004), "-4.0e-4");
    }
}
