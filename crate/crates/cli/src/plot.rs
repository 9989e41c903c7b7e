//! Self-contained SVG figures from result CSVs.
//!
//! Output is a pure function of the CSV bytes: numbers are printed with fixed
//! precision and every grouping uses ordered maps.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context as _, Result};
use cdm_core::harness::{series, summarize, AnytimeRow, PccRow, SummaryRow, SweepRow, WeightRow};
use cdm_core::metrics::crossover_step;
use cdm_core::stats::linear_fit;
use serde::de::DeserializeOwned;

const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 300.0;
const MARGIN_L: f64 = 52.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 40.0;
const LEGEND_H: f64 = 20.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf", "#bcbd22",
];

/// Which figure a CSV produces, decided from its header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureKind {
    Sweep,
    Summary,
    Anytime,
    Weights,
    Pcc,
}

impl FigureKind {
    pub fn detect(headers: &csv::StringRecord) -> Result<Self> {
        let has = |name: &str| headers.iter().any(|h| h == name);
        Ok(if has("scaled_reward") && has("algorithm") {
            Self::Sweep
        } else if has("series") && has("t") {
            Self::Anytime
        } else if has("series") && has("variant") {
            Self::Summary
        } else if has("metacmab_weight") {
            Self::Weights
        } else if has("pcc") && has("distance") {
            Self::Pcc
        } else {
            bail!(
                "unrecognised CSV header: {}",
                headers.iter().collect::<Vec<_>>().join(",")
            )
        })
    }
}

struct Line {
    label: String,
    color: String,
    dashed: bool,
    points: Vec<(f64, f64, f64)>,
}

struct LinePanel {
    title: String,
    x_label: String,
    x_range: (f64, f64),
    lines: Vec<Line>,
    baseline: Vec<(f64, f64)>,
    markers: Vec<(f64, String)>,
}

struct ScatterPanel {
    title: String,
    x_label: String,
    y_label: String,
    points: Vec<(f64, f64, bool)>,
    fit: Option<(f64, f64)>,
}

enum Panel {
    Lines(LinePanel),
    Scatter(ScatterPanel),
}

fn read_rows<T: DeserializeOwned>(bytes: &[u8]) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(bytes);
    let rows = r.deserialize().collect::<std::result::Result<Vec<T>, _>>()?;
    if rows.is_empty() {
        bail!("CSV has no data rows");
    }
    Ok(rows)
}

/// Renders the figure for `bytes`; fails on an empty or unknown CSV.
pub fn render(bytes: &[u8]) -> Result<(FigureKind, String)> {
    let headers = csv::Reader::from_reader(bytes)
        .headers()
        .context("reading CSV header")?
        .clone();
    if headers.is_empty() {
        bail!("CSV is empty");
    }
    let kind = FigureKind::detect(&headers)?;
    let panels = match kind {
        FigureKind::Sweep => summary_panels(&summarize(&read_rows::<SweepRow>(bytes)?)),
        FigureKind::Summary => summary_panels(&read_rows::<SummaryRow>(bytes)?),
        FigureKind::Anytime => anytime_panels(&read_rows::<AnytimeRow>(bytes)?),
        FigureKind::Weights => weight_panels(&read_rows::<WeightRow>(bytes)?)?,
        FigureKind::Pcc => vec![pcc_panel(&read_rows::<PccRow>(bytes)?)?],
    };
    Ok((kind, draw(&panels)))
}

/// Reads `csv_path` and writes the SVG to `svg_path`. Nothing is written on error.
pub fn plot_file(csv_path: &Path, svg_path: &Path) -> Result<FigureKind> {
    let bytes = std::fs::read(csv_path).with_context(|| format!("reading {}", csv_path.display()))?;
    let (kind, svg) = render(&bytes).with_context(|| format!("plotting {}", csv_path.display()))?;
    std::fs::write(svg_path, svg).with_context(|| format!("writing {}", svg_path.display()))?;
    Ok(kind)
}

fn panel_letter(i: usize) -> char {
    (b'A' + (i % 26) as u8) as char
}

/// Panel order A-D: (4,4), (32,4), (4,32), (32,32), i.e. experts then arms.
fn panel_keys<I: Iterator<Item = (usize, usize)>>(it: I) -> Vec<(usize, usize)> {
    let mut keys: Vec<(usize, usize)> = it.map(|(a, e)| (e, a)).collect();
    keys.sort_unstable();
    keys.dedup();
    keys.into_iter().map(|(e, a)| (a, e)).collect()
}

fn color_for(name: &str, others: &mut BTreeMap<String, usize>) -> String {
    match name {
        "metacmab" => "#1f77b4".into(),
        "exp4p" => "#2ca02c".into(),
        "metamab" => "#9467bd".into(),
        "wmv" => "#ff7f0e".into(),
        "random" => "#7f7f7f".into(),
        n if n == series::BEST_EXPERT || n == series::WORST_EXPERT || n == series::EXPERT_MEAN => "#444444".into(),
        n => {
            let next = others.len();
            let i = *others.entry(n.to_string()).or_insert(next);
            PALETTE[(4 + i) % PALETTE.len()].into()
        }
    }
}

fn summary_panels(rows: &[SummaryRow]) -> Vec<Panel> {
    // Labels only carry the dimensions that actually vary.
    let distinct = |f: &dyn Fn(&SummaryRow) -> String| {
        let mut v: Vec<String> = rows.iter().map(f).collect();
        v.sort();
        v.dedup();
        v.len() > 1
    };
    let show_kind = distinct(&|r| r.kind.name().to_string());
    let show_variant = distinct(&|r| r.variant.clone());
    let show_conf = distinct(&|r| r.confidence.clone());
    let mut colors = BTreeMap::new();
    let mut out = Vec::new();
    for (i, (arms, experts)) in panel_keys(rows.iter().map(|r| (r.arms, r.experts)))
        .into_iter()
        .enumerate()
    {
        let mut lines: BTreeMap<String, Line> = BTreeMap::new();
        let mut baseline = BTreeMap::new();
        for r in rows.iter().filter(|r| r.arms == arms && r.experts == experts) {
            if r.series == series::RANDOM {
                baseline.insert(key_of(r.delta), (r.delta, r.mean));
                continue;
            }
            if r.series == series::EXPERT_MEAN {
                continue;
            }
            let mut label = display_name(&r.series);
            if show_kind {
                label = format!("{label} {}", r.kind.name());
            }
            if show_variant && r.variant != "full" {
                label = format!("{label} {}", if r.variant == "top" { "50%" } else { &r.variant });
            }
            if show_conf {
                label = format!("{label} [{}]", r.confidence);
            }
            let dashed = r.variant != "full" || r.series == series::BEST_EXPERT || r.series == series::WORST_EXPERT;
            let color = color_for(&r.series, &mut colors);
            lines
                .entry(label.clone())
                .or_insert_with(|| Line {
                    label,
                    color,
                    dashed,
                    points: Vec::new(),
                })
                .points
                .push((r.delta, r.mean, r.std));
        }
        let mut lines: Vec<Line> = lines.into_values().collect();
        for l in &mut lines {
            l.points.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
        out.push(Panel::Lines(LinePanel {
            title: format!("{}) {arms} arms and {experts} experts", panel_letter(i)),
            x_label: "distance".into(),
            x_range: (0.0, 1.0),
            lines,
            baseline: baseline.into_values().collect(),
            markers: Vec::new(),
        }));
    }
    out
}

fn key_of(x: f64) -> i64 {
    (x * 1e9).round() as i64
}

fn display_name(s: &str) -> String {
    match s {
        "metacmab" => "meta-CMAB".into(),
        "metamab" => "meta-MAB".into(),
        "exp4p" => "EXP4.P".into(),
        "wmv" => "WMV".into(),
        "random" => "random".into(),
        "best_expert" => "Best expert".into(),
        "worst_expert" => "Worst expert".into(),
        other => other.into(),
    }
}

fn anytime_panels(rows: &[AnytimeRow]) -> Vec<Panel> {
    let mut colors = BTreeMap::new();
    let mut groups: BTreeMap<(usize, usize, String, i64), Vec<&AnytimeRow>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.experts, r.arms, r.kind.name().to_string(), key_of(r.delta)))
            .or_default()
            .push(r);
    }
    let mut out = Vec::new();
    for (i, ((experts, arms, kind, _), group)) in groups.into_iter().enumerate() {
        let delta = group[0].delta;
        let mut by_series: BTreeMap<String, Vec<(f64, f64, f64)>> = BTreeMap::new();
        for r in &group {
            by_series
                .entry(r.series.clone())
                .or_default()
                .push((r.t as f64, r.mean, r.std));
        }
        for pts in by_series.values_mut() {
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
        let t_max = group.iter().map(|r| r.t).max().unwrap_or(1) as f64;
        let baseline: Vec<(f64, f64)> = by_series
            .get(series::RANDOM)
            .map(|p| p.iter().map(|&(t, m, _)| (t, m)).collect())
            .unwrap_or_default();
        let mut markers = Vec::new();
        if let Some(best) = by_series.get(series::BEST_EXPERT) {
            let reference: Vec<f64> = best.iter().map(|p| p.1).collect();
            for (name, pts) in &by_series {
                if is_reference(name) {
                    continue;
                }
                let curve: Vec<f64> = pts.iter().map(|p| p.1).collect();
                if let Some(at) = crossover_step(&curve, &reference) {
                    markers.push((pts[at].0, display_name(name)));
                }
            }
        }
        let lines = by_series
            .into_iter()
            .filter(|(name, _)| name != series::RANDOM && name != series::EXPERT_MEAN)
            .map(|(name, points)| Line {
                label: display_name(&name),
                color: color_for(&name, &mut colors),
                dashed: name == series::BEST_EXPERT || name == series::WORST_EXPERT,
                points,
            })
            .collect();
        out.push(Panel::Lines(LinePanel {
            title: format!(
                "{}) {arms} arms, {experts} experts, {kind}, distance {delta:.2}",
                panel_letter(i)
            ),
            x_label: "timestep".into(),
            x_range: (1.0, t_max.max(2.0)),
            lines,
            baseline,
            markers,
        }));
    }
    out
}

fn is_reference(name: &str) -> bool {
    [
        series::BEST_EXPERT,
        series::WORST_EXPERT,
        series::EXPERT_MEAN,
        series::RANDOM,
    ]
    .contains(&name)
}

fn weight_panels(rows: &[WeightRow]) -> Result<Vec<Panel>> {
    let mut out = Vec::new();
    for (name, pick) in [
        (
            "meta-CMAB",
            (|r: &WeightRow| r.metacmab_weight) as fn(&WeightRow) -> Option<f64>,
        ),
        ("EXP4.P", |r: &WeightRow| r.exp4p_weight),
    ] {
        let points: Vec<(f64, f64, bool)> = rows
            .iter()
            .filter_map(|r| pick(r).map(|w| (r.expected_reward, w, r.is_best)))
            .collect();
        if points.is_empty() {
            continue;
        }
        let fit = if name == "meta-CMAB" && points.len() >= 2 {
            let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
            let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
            linear_fit(&xs, &ys).ok()
        } else {
            None
        };
        out.push(Panel::Scatter(ScatterPanel {
            title: format!("{}) {name}", panel_letter(out.len())),
            x_label: "expected reward".into(),
            y_label: "weight".into(),
            points,
            fit,
        }));
    }
    if out.is_empty() {
        bail!("weights CSV has no weight columns filled in");
    }
    Ok(out)
}

fn pcc_panel(rows: &[PccRow]) -> Result<Panel> {
    let xs: Vec<f64> = rows.iter().map(|r| r.distance).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.pcc).collect();
    let fit = if rows.len() >= 2 {
        linear_fit(&xs, &ys).ok()
    } else {
        None
    };
    Ok(Panel::Scatter(ScatterPanel {
        title: "value correlation against distance".into(),
        x_label: "distance".into(),
        y_label: "PCC".into(),
        points: xs.into_iter().zip(ys).map(|(x, y)| (x, y, false)).collect(),
        fit,
    }))
}

struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    xr: (f64, f64),
    yr: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        self.x0 + (x - self.xr.0) / (self.xr.1 - self.xr.0) * self.w
    }

    fn py(&self, y: f64) -> f64 {
        self.y0 + self.h - (y - self.yr.0) / (self.yr.1 - self.yr.0) * self.h
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn draw(panels: &[Panel]) -> String {
    let cols = if panels.len() > 1 { 2 } else { 1 };
    let rows = panels.len().div_ceil(cols);
    let legend_rows = panels
        .iter()
        .map(|p| match p {
            Panel::Lines(l) => l.lines.len() + 1,
            Panel::Scatter(_) => 0,
        })
        .max()
        .unwrap_or(0)
        .div_ceil(3);
    let cell_h = PANEL_H + legend_rows as f64 * LEGEND_H;
    let (w, h) = (cols as f64 * PANEL_W, rows as f64 * cell_h);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, p) in panels.iter().enumerate() {
        let (ox, oy) = ((i % cols) as f64 * PANEL_W, (i / cols) as f64 * cell_h);
        match p {
            Panel::Lines(l) => draw_lines(&mut s, l, ox, oy),
            Panel::Scatter(sc) => draw_scatter(&mut s, sc, ox, oy),
        }
    }
    s.push_str("</svg>\n");
    s
}

fn axes(s: &mut String, f: &Frame, title: &str, x_label: &str, y_label: &str) {
    let _ = writeln!(
        s,
        r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        f.x0, f.y0, f.w, f.h
    );
    for i in 0..=4 {
        let fx = f.xr.0 + (f.xr.1 - f.xr.0) * i as f64 / 4.0;
        let fy = f.yr.0 + (f.yr.1 - f.yr.0) * i as f64 / 4.0;
        let (x, y) = (f.px(fx), f.py(fy));
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            f.y0 + f.h,
            f.y0 + f.h + 4.0,
            f.y0 + f.h + 15.0,
            tick(fx)
        );
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            f.x0,
            f.x0 + f.w,
            f.x0 - 4.0,
            y + 4.0,
            tick(fy)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-weight="bold">{}</text>"#,
        f.x0,
        f.y0 - 10.0,
        esc(title)
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        f.x0 + f.w / 2.0,
        f.y0 + f.h + 30.0,
        esc(x_label)
    );
    let (lx, ly) = (f.x0 - 38.0, f.y0 + f.h / 2.0);
    let _ = writeln!(
        s,
        r#"<text x="{lx:.2}" y="{ly:.2}" text-anchor="middle" transform="rotate(-90 {lx:.2} {ly:.2})">{}</text>"#,
        esc(y_label)
    );
}

fn tick(v: f64) -> String {
    if v.abs() >= 10.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn path(points: impl Iterator<Item = (f64, f64)>) -> String {
    let mut d = String::new();
    for (i, (x, y)) in points.enumerate() {
        let _ = write!(d, "{}{x:.2},{y:.2}", if i == 0 { "M" } else { " L" });
    }
    d
}

fn frame(ox: f64, oy: f64, xr: (f64, f64), yr: (f64, f64)) -> Frame {
    Frame {
        x0: ox + MARGIN_L,
        y0: oy + MARGIN_T,
        w: PANEL_W - MARGIN_L - MARGIN_R,
        h: PANEL_H - MARGIN_T - MARGIN_B,
        xr,
        yr,
    }
}

fn draw_lines(s: &mut String, p: &LinePanel, ox: f64, oy: f64) {
    let f = frame(ox, oy, p.x_range, (0.0, 1.0));
    axes(s, &f, &p.title, &p.x_label, "scaled reward");
    for l in &p.lines {
        // Std band, clipped to the plotting range.
        let upper = l.points.iter().map(|&(x, m, sd)| (f.px(x), f.py((m + sd).min(1.0))));
        let lower = l
            .points
            .iter()
            .rev()
            .map(|&(x, m, sd)| (f.px(x), f.py((m - sd).max(0.0))));
        let _ = writeln!(
            s,
            r#"<path d="{} Z" fill="{}" fill-opacity="0.15" stroke="none"/>"#,
            path(upper.chain(lower)),
            l.color
        );
    }
    for l in &p.lines {
        let dash = if l.dashed { r#" stroke-dasharray="6,3""# } else { "" };
        let _ = writeln!(
            s,
            r#"<path d="{}" fill="none" stroke="{}" stroke-width="1.6"{dash}/>"#,
            path(l.points.iter().map(|&(x, m, _)| (f.px(x), f.py(m)))),
            l.color
        );
    }
    if !p.baseline.is_empty() {
        let _ = writeln!(
            s,
            r#"<path d="{}" fill="none" stroke="red" stroke-width="1.4" stroke-dasharray="8,3,2,3"/>"#,
            path(p.baseline.iter().map(|&(x, y)| (f.px(x), f.py(y))))
        );
    }
    for (x, label) in &p.markers {
        let px = f.px(*x);
        let _ = writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="black" stroke-dasharray="2,2"/><text x="{:.2}" y="{:.2}" font-size="9">{} crosses at {x:.0}</text>"#,
            f.y0,
            f.y0 + f.h,
            px + 3.0,
            f.y0 + 12.0,
            esc(label)
        );
    }
    let mut entries: Vec<(&str, &str, &str)> = p
        .lines
        .iter()
        .map(|l| (l.label.as_str(), l.color.as_str(), if l.dashed { "6,3" } else { "" }))
        .collect();
    if !p.baseline.is_empty() {
        entries.push(("random policy", "red", "8,3,2,3"));
    }
    for (i, (label, color, dash)) in entries.iter().enumerate() {
        let x = ox + MARGIN_L + (i % 3) as f64 * 120.0;
        let y = oy + PANEL_H + (i / 3) as f64 * LEGEND_H - 4.0;
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2" stroke-dasharray="{dash}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            x + 18.0,
            x + 22.0,
            y + 4.0,
            esc(label)
        );
    }
}

fn draw_scatter(s: &mut String, p: &ScatterPanel, ox: f64, oy: f64) {
    let range = |v: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
        let pad = ((hi - lo) * 0.05).max(1e-3);
        (lo - pad, hi + pad)
    };
    let xr = range(&mut p.points.iter().map(|q| q.0));
    let yr = range(&mut p.points.iter().map(|q| q.1));
    let f = frame(ox, oy, xr, yr);
    axes(s, &f, &p.title, &p.x_label, &p.y_label);
    // Highlighted points last so they stay visible.
    for highlight in [false, true] {
        let color = if highlight { "red" } else { "#1f77b4" };
        for &(x, y, _) in p.points.iter().filter(|q| q.2 == highlight) {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{color}" fill-opacity="0.6"/>"#,
                f.px(x),
                f.py(y)
            );
        }
    }
    if let Some((a, b)) = p.fit {
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="red" stroke-width="1.5"/><text x="{:.2}" y="{:.2}" fill="red">y = {a:.3} + {b:.3}x</text>"#,
            f.px(xr.0),
            f.py(a + b * xr.0),
            f.px(xr.1),
            f.py(a + b * xr.1),
            f.x0 + 6.0,
            f.y0 + 14.0
        );
    }
}
