//! Deterministic CSV, JSON, and SVG export.
//!
//! Column schemas are fixed per engine; floats are written in shortest
//! round-trip form so identical runs produce byte-identical files.

use std::fmt::Write as _;
use std::io::Write;

use crate::analytics::{EnergyBounds, LatticeClm1d, LatticeClm2d};
use crate::dynamics::EvolutionResult;
use crate::error::Result;
use crate::response::SweepResult;
use crate::spectral::StateStats;

/// Shortest round-trip float formatting, with exponent form outside
/// [1e-4, 1e6) so tiny magnitudes stay compact.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let a = x.abs();
    if (1e-4..1e6).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// `idx,re_E,im_E,pr,mean_x,mean_y,residual`
pub fn write_spectrum_csv<W: Write>(mut w: W, table: &[StateStats]) -> Result<()> {
    writeln!(w, "idx,re_E,im_E,pr,mean_x,mean_y,residual")?;
    for (i, s) in table.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            i,
            fmt_f64(s.e.re),
            fmt_f64(s.e.im),
            fmt_f64(s.pr),
            fmt_f64(s.mean_x),
            fmt_f64(s.mean_y),
            fmt_f64(s.residual)
        )?;
    }
    Ok(())
}

/// `omega,site,amplitude` (1-based sites)
pub fn write_sweep_csv<W: Write>(mut w: W, sweep: &SweepResult) -> Result<()> {
    writeln!(w, "omega,site,amplitude")?;
    for (omega, profile) in sweep.omegas.iter().zip(&sweep.profiles) {
        for (j, a) in profile.iter().enumerate() {
            writeln!(w, "{},{},{}", fmt_f64(*omega), j + 1, fmt_f64(*a))?;
        }
    }
    Ok(())
}

/// `t,center_x,center_y,width_x,width_y,log_norm`
pub fn write_evolution_csv<W: Write>(mut w: W, evo: &EvolutionResult) -> Result<()> {
    writeln!(w, "t,center_x,center_y,width_x,width_y,log_norm")?;
    for (i, t) in evo.times.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt_f64(*t),
            fmt_f64(evo.center[i].0),
            fmt_f64(evo.center[i].1),
            fmt_f64(evo.width[i].0),
            fmt_f64(evo.width[i].1),
            fmt_f64(evo.log_norm[i])
        )?;
    }
    Ok(())
}

/// Key-value descriptor record for a 2D ansatz.
pub fn descriptor_record_2d(clm: &LatticeClm2d) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "model=clm2d");
    let _ = writeln!(s, "k={} {}", fmt_f64(clm.k[0]), fmt_f64(clm.k[1]));
    let _ = writeln!(s, "q={} {}", fmt_f64(clm.q[0]), fmt_f64(clm.q[1]));
    let _ = writeln!(s, "E={} {}", fmt_f64(clm.e.re), fmt_f64(clm.e.im));
    let _ = writeln!(s, "mu={}", fmt_f64(clm.mu));
    let _ = writeln!(s, "nu={}", fmt_f64(clm.nu));
    let _ = writeln!(s, "tau={} {}", fmt_f64(clm.tau_x), fmt_f64(clm.tau_y));
    let _ = writeln!(s, "r0={} {}", fmt_f64(clm.r0[0]), fmt_f64(clm.r0[1]));
    let _ = writeln!(s, "exists={}", clm.exists);
    s
}

/// Key-value descriptor record for a 1D ansatz.
pub fn descriptor_record_1d(clm: &LatticeClm1d) -> String {
    let mut s = String::new();
    let model = match clm.model {
        crate::analytics::Model1dKind::Nonreciprocal => "nonreciprocal1d",
        crate::analytics::Model1dKind::GainLoss => "gainloss1d",
    };
    let _ = writeln!(s, "model={model}");
    let _ = writeln!(s, "k={}", fmt_f64(clm.k));
    let _ = writeln!(s, "q={}", fmt_f64(clm.q));
    let _ = writeln!(s, "E={} {}", fmt_f64(clm.e.re), fmt_f64(clm.e.im));
    let _ = writeln!(s, "c={}", fmt_f64(clm.c));
    let _ = writeln!(s, "tau={}", fmt_f64(clm.tau));
    let _ = writeln!(s, "r0={}", fmt_f64(clm.x0));
    let _ = writeln!(s, "exists={}", clm.exists);
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Five-anchor sequential colormap (dark violet -> teal -> yellow).
pub fn colormap(t: f64) -> String {
    const ANCHORS: [(f64, f64, f64); 5] = [
        (68.0, 1.0, 84.0),
        (59.0, 82.0, 139.0),
        (33.0, 145.0, 140.0),
        (94.0, 201.0, 98.0),
        (253.0, 231.0, 37.0),
    ];
    let t = t.clamp(0.0, 1.0) * (ANCHORS.len() - 1) as f64;
    let i = (t.floor() as usize).min(ANCHORS.len() - 2);
    let f = t - i as f64;
    let (r0, g0, b0) = ANCHORS[i];
    let (r1, g1, b1) = ANCHORS[i + 1];
    format!(
        "#{:02x}{:02x}{:02x}",
        (r0 + f * (r1 - r0)).round() as u8,
        (g0 + f * (g1 - g0)).round() as u8,
        (b0 + f * (b1 - b0)).round() as u8
    )
}

const PLOT_W: f64 = 640.0;
const PLOT_H: f64 = 480.0;
const MARGIN: f64 = 56.0;

/// Minimal SVG plot surface with data-coordinate mapping.
pub struct SvgPlot {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    body: String,
    title: String,
    x_label: String,
    y_label: String,
}

impl SvgPlot {
    pub fn new(
        x_range: (f64, f64),
        y_range: (f64, f64),
        title: &str,
        x_label: &str,
        y_label: &str,
    ) -> Self {
        let pad_x = 0.05 * (x_range.1 - x_range.0).abs().max(1e-12);
        let pad_y = 0.05 * (y_range.1 - y_range.0).abs().max(1e-12);
        Self {
            x_min: x_range.0 - pad_x,
            x_max: x_range.1 + pad_x,
            y_min: y_range.0 - pad_y,
            y_max: y_range.1 + pad_y,
            body: String::new(),
            title: title.to_string(),
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
        }
    }

    fn sx(&self, x: f64) -> f64 {
        MARGIN + (x - self.x_min) / (self.x_max - self.x_min) * (PLOT_W - 2.0 * MARGIN)
    }

    fn sy(&self, y: f64) -> f64 {
        PLOT_H - MARGIN - (y - self.y_min) / (self.y_max - self.y_min) * (PLOT_H - 2.0 * MARGIN)
    }

    pub fn circle(&mut self, x: f64, y: f64, radius: f64, color: &str) {
        let _ = write!(
            self.body,
            r#"<circle cx="{:.2}" cy="{:.2}" r="{radius}" fill="{color}"/>"#,
            self.sx(x),
            self.sy(y)
        );
        self.body.push('\n');
    }

    /// Axis-aligned filled cell given in data coordinates.
    pub fn cell(&mut self, x0: f64, x1: f64, y0: f64, y1: f64, color: &str) {
        let (sx0, sx1) = (self.sx(x0), self.sx(x1));
        let (sy0, sy1) = (self.sy(y1), self.sy(y0));
        let _ = write!(
            self.body,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{color}"/>"#,
            sx0.min(sx1),
            sy0.min(sy1),
            (sx1 - sx0).abs(),
            (sy1 - sy0).abs()
        );
        self.body.push('\n');
    }

    pub fn line(&mut self, x0: f64, y0: f64, x1: f64, y1: f64, color: &str, dashed: bool) {
        let dash = if dashed {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        let _ = write!(
            self.body,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="1.5" fill="none"{dash}/>"#,
            self.sx(x0),
            self.sy(y0),
            self.sx(x1),
            self.sy(y1)
        );
        self.body.push('\n');
    }

    /// Dashed rectangle centered at the origin with half-widths
    /// (re_max, im_max).
    pub fn bound_box(&mut self, bounds: &EnergyBounds) {
        let (hx, hy) = (bounds.re_max, bounds.im_max);
        self.line(-hx, -hy, hx, -hy, "#333333", true);
        self.line(hx, -hy, hx, hy, "#333333", true);
        self.line(hx, hy, -hx, hy, "#333333", true);
        self.line(-hx, hy, -hx, -hy, "#333333", true);
    }

    pub fn trend(&mut self, slope: f64, intercept: f64) {
        let y0 = slope * self.x_min + intercept;
        let y1 = slope * self.x_max + intercept;
        self.line(self.x_min, y0, self.x_max, y1, "#000000", true);
    }

    pub fn polyline(&mut self, pts: &[(f64, f64)], color: &str) {
        if pts.is_empty() {
            return;
        }
        let coords: Vec<String> = pts
            .iter()
            .map(|(x, y)| format!("{:.2},{:.2}", self.sx(*x), self.sy(*y)))
            .collect();
        let _ = write!(
            self.body,
            r#"<polyline points="{}" stroke="{color}" stroke-width="1.5" fill="none"/>"#,
            coords.join(" ")
        );
        self.body.push('\n');
    }

    pub fn finish(self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{PLOT_W}" height="{PLOT_H}" viewBox="0 0 {PLOT_W} {PLOT_H}">"#
        );
        let _ = writeln!(
            s,
            r#"<rect x="0" y="0" width="{PLOT_W}" height="{PLOT_H}" fill="white"/>"#
        );
        s.push_str(&self.body);
        let _ = writeln!(
            s,
            r#"<rect x="{m}" y="{m}" width="{w:.2}" height="{h:.2}" fill="none" stroke="black" stroke-width="1"/>"#,
            m = MARGIN,
            w = PLOT_W - 2.0 * MARGIN,
            h = PLOT_H - 2.0 * MARGIN
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="11" text-anchor="middle">{}</text>"#,
            MARGIN,
            PLOT_H - MARGIN + 16.0,
            xml_escape(&fmt_f64(self.x_min))
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="11" text-anchor="middle">{}</text>"#,
            PLOT_W - MARGIN,
            PLOT_H - MARGIN + 16.0,
            xml_escape(&fmt_f64(self.x_max))
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{}</text>"#,
            MARGIN - 6.0,
            PLOT_H - MARGIN,
            xml_escape(&fmt_f64(self.y_min))
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{}</text>"#,
            MARGIN - 6.0,
            MARGIN + 4.0,
            xml_escape(&fmt_f64(self.y_max))
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="14" text-anchor="middle">{}</text>"#,
            PLOT_W / 2.0,
            PLOT_H - 14.0,
            xml_escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="14" y="{}" font-size="14" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
            PLOT_H / 2.0,
            PLOT_H / 2.0,
            xml_escape(&self.y_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="22" font-size="15" text-anchor="middle">{}</text>"#,
            PLOT_W / 2.0,
            xml_escape(&self.title)
        );
        s.push_str("</svg>\n");
        s
    }
}

/// Scatter plot input: points at (x, y) colored by the third component
/// (normalized internally), optional dashed bound box and trend line.
pub struct ScatterSpec<'a> {
    pub points: &'a [(f64, f64, f64)],
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub bounds: Option<EnergyBounds>,
    pub trend: Option<(f64, f64)>,
}

pub fn scatter_svg(spec: &ScatterSpec) -> String {
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut c_min, mut c_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y, c) in spec.points {
        x_min = x_min.min(x);
        x_max = x_max.max(x);
        y_min = y_min.min(y);
        y_max = y_max.max(y);
        c_min = c_min.min(c);
        c_max = c_max.max(c);
    }
    if let Some(b) = &spec.bounds {
        x_min = x_min.min(-b.re_max);
        x_max = x_max.max(b.re_max);
        y_min = y_min.min(-b.im_max);
        y_max = y_max.max(b.im_max);
    }
    if spec.points.is_empty() {
        x_min = 0.0;
        x_max = 1.0;
        y_min = 0.0;
        y_max = 1.0;
    }
    let span = (c_max - c_min).max(1e-300);
    let mut plot = SvgPlot::new(
        (x_min, x_max),
        (y_min, y_max),
        spec.title,
        spec.x_label,
        spec.y_label,
    );
    if let Some(b) = &spec.bounds {
        plot.bound_box(b);
    }
    for &(x, y, c) in spec.points {
        let color = colormap((c - c_min) / span);
        plot.circle(x, y, 2.2, &color);
    }
    if let Some((slope, intercept)) = spec.trend {
        plot.trend(slope, intercept);
    }
    plot.finish()
}

/// Sweep heatmap: one cell per (omega, site), color by amplitude.
pub fn sweep_heatmap_svg(sweep: &SweepResult, title: &str) -> String {
    let n_omega = sweep.omegas.len();
    let n_sites = sweep.profiles.first().map_or(0, Vec::len);
    let a_max = sweep
        .profiles
        .iter()
        .flatten()
        .cloned()
        .fold(0.0, f64::max)
        .max(1e-300);
    let dw = if n_omega > 1 {
        sweep.omegas[1] - sweep.omegas[0]
    } else {
        1.0
    };
    let mut plot = SvgPlot::new(
        (
            sweep.omegas[0] - dw / 2.0,
            sweep.omegas[n_omega - 1] + dw / 2.0,
        ),
        (0.5, n_sites as f64 + 0.5),
        title,
        "omega",
        "site",
    );
    for (i, profile) in sweep.profiles.iter().enumerate() {
        let w = sweep.omegas[i];
        for (j, a) in profile.iter().enumerate() {
            let color = colormap(a / a_max);
            plot.cell(
                w - dw / 2.0,
                w + dw / 2.0,
                j as f64 + 0.5,
                j as f64 + 1.5,
                &color,
            );
        }
    }
    plot.finish()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::linalg::C64;
    use crate::spectral::StateStats;

    /// Minimal XML well-formedness check: balanced tags, quoted attributes.
    pub fn assert_well_formed_xml(s: &str) {
        let mut stack: Vec<String> = Vec::new();
        let mut rest = s;
        while let Some(start) = rest.find('<') {
            let end = rest[start..].find('>').expect("unclosed tag") + start;
            let tag = &rest[start + 1..end];
            rest = &rest[end + 1..];
            if tag.starts_with('?') || tag.starts_with('!') {
                continue;
            }
            assert_eq!(tag.matches('"').count() % 2, 0, "unbalanced quotes in {tag}");
            if let Some(name) = tag.strip_prefix('/') {
                let open = stack.pop().unwrap_or_else(|| panic!("stray </{name}>"));
                assert_eq!(open, name, "mismatched close tag");
            } else if !tag.ends_with('/') {
                let name: String = tag.chars().take_while(|c| !c.is_whitespace()).collect();
                stack.push(name);
            }
        }
        assert!(stack.is_empty(), "unclosed tags: {stack:?}");
    }

    fn sample_table() -> Vec<StateStats> {
        (0..5)
            .map(|i| StateStats {
                e: C64::new(i as f64 * 0.5 - 1.0, 0.25 * i as f64),
                pr: 10.0 + i as f64,
                mean_x: i as f64 - 2.0,
                mean_y: 0.5 * i as f64,
                residual: 1e-12,
            })
            .collect()
    }

    #[test]
    fn spectrum_csv_schema_and_roundtrip() {
        let table = sample_table();
        let mut buf = Vec::new();
        write_spectrum_csv(&mut buf, &table).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "idx,re_E,im_E,pr,mean_x,mean_y,residual"
        );
        for (i, line) in lines.enumerate() {
            let f: Vec<&str> = line.split(',').collect();
            assert_eq!(f.len(), 7);
            assert_eq!(f[0].parse::<usize>().unwrap(), i);
            let re: f64 = f[1].parse().unwrap();
            assert_eq!(re, table[i].e.re);
            let pr: f64 = f[3].parse().unwrap();
            assert_eq!(pr, table[i].pr);
        }
    }

    #[test]
    fn float_formatting_roundtrips_extremes() {
        for x in [
            0.0,
            1.0,
            -0.3,
            1e-300,
            -2.5e17,
            0.1 + 0.2,
            f64::MIN_POSITIVE,
        ] {
            let s = fmt_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, x, "{x} went through {s}");
            assert!(s.len() < 32, "{s} too long");
        }
    }

    #[test]
    fn scatter_svg_is_well_formed() {
        let table = sample_table();
        let points: Vec<(f64, f64, f64)> =
            table.iter().map(|s| (s.e.re, s.e.im, s.pr)).collect();
        let svg = scatter_svg(&ScatterSpec {
            points: &points,
            title: "spectrum",
            x_label: "Re E",
            y_label: "Im E",
            bounds: Some(EnergyBounds {
                re_max: 11.0,
                im_max: 11.0,
            }),
            trend: Some((0.5, 0.0)),
        });
        assert!(svg.starts_with("<?xml"));
        assert_well_formed_xml(&svg);
        assert!(svg.contains("stroke-dasharray"));
    }

    #[test]
    fn heatmap_has_one_cell_per_point() {
        let sweep = SweepResult {
            omegas: vec![-1.0, 0.0, 1.0],
            profiles: vec![vec![0.1, 0.2]; 3],
            peaks: vec![2, 2, 2],
            kappa: 0.2,
            gamma: 1.9,
            seed: 1,
        };
        let svg = sweep_heatmap_svg(&sweep, "sweep");
        assert_well_formed_xml(&svg);
        let cells = svg.matches("<rect").count();
        // 3 omegas x 2 sites + background + frame
        assert_eq!(cells, 8);
    }

    #[test]
    fn colormap_endpoints() {
        assert_eq!(colormap(0.0), "#440154");
        assert_eq!(colormap(1.0), "#fde725");
    }
}
