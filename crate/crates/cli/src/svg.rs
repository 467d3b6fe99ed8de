//! Static SVG rendering of loop projections.

use std::fmt::Write;

use choreo::model::FullLoop;
use clap::ValueEnum;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Projection {
    Xy,
    Xz,
    Yz,
    #[value(name = "3d-oblique")]
    Oblique,
}

impl Projection {
    fn map(self, p: [f64; 3]) -> (f64, f64) {
        match self {
            Projection::Xy => (p[0], p[1]),
            Projection::Xz => (p[0], p[2]),
            Projection::Yz => (p[1], p[2]),
            // cabinet projection, receding z axis at 30 degrees
            Projection::Oblique => {
                let (c, s) = (30f64.to_radians().cos(), 30f64.to_radians().sin());
                (p[0] + 0.5 * c * p[2], p[1] + 0.5 * s * p[2])
            }
        }
    }

    fn labels(self) -> (&'static str, &'static str) {
        match self {
            Projection::Xy => ("x", "y"),
            Projection::Xz => ("x", "z"),
            Projection::Yz => ("y", "z"),
            Projection::Oblique => ("x", "y"),
        }
    }
}

const SIZE: f64 = 640.0;
const MARGIN: f64 = 40.0;

/// All body tracks in grey, `q_0` and `q_n` highlighted, with the
/// coordinate axes through the origin separating the quadrants.
pub fn render(lp: &FullLoop, proj: Projection, title: &str) -> String {
    let n = lp.bodies() / 2;
    let tracks: Vec<Vec<(f64, f64)>> =
        (0..lp.bodies()).map(|i| lp.track(i).into_iter().map(|p| proj.map(p)).collect()).collect();
    let extent = tracks.iter().flatten().fold(1e-9f64, |m, &(u, v)| m.max(u.abs()).max(v.abs())) * 1.05;
    let scale = (SIZE / 2.0 - MARGIN) / extent;
    let to_px = |(u, v): (f64, f64)| (SIZE / 2.0 + u * scale, SIZE / 2.0 - v * scale);
    let path = |pts: &[(f64, f64)]| {
        let mut d = String::new();
        for (k, &p) in pts.iter().enumerate() {
            let (x, y) = to_px(p);
            let _ = write!(d, "{}{x:.2},{y:.2} ", if k == 0 { "M" } else { "L" });
        }
        d.push('Z');
        d
    };
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let c = SIZE / 2.0;
    let _ = writeln!(
        out,
        r##"<g stroke="#999" stroke-width="0.8" stroke-dasharray="4 3"><line x1="{MARGIN}" y1="{c}" x2="{}" y2="{c}"/><line x1="{c}" y1="{MARGIN}" x2="{c}" y2="{}"/></g>"##,
        SIZE - MARGIN,
        SIZE - MARGIN
    );
    let (hx, vy) = proj.labels();
    let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="14">{hx}</text>"#, SIZE - MARGIN + 6.0, c + 5.0);
    let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="14">{vy}</text>"#, c - 4.0, MARGIN - 8.0);
    let _ = writeln!(out, r#"<text x="{MARGIN}" y="24" font-size="14">{title}</text>"#);
    for (i, t) in tracks.iter().enumerate() {
        if i != 0 && i != n {
            let _ = writeln!(out, r##"<path d="{}" fill="none" stroke="#ccc" stroke-width="0.6"/>"##, path(t));
        }
    }
    let _ = writeln!(out, r##"<path d="{}" fill="none" stroke="#1f4e9c" stroke-width="1.8"/>"##, path(&tracks[0]));
    let _ = writeln!(out, r##"<path d="{}" fill="none" stroke="#b2242a" stroke-width="1.8"/>"##, path(&tracks[n]));
    for i in 0..lp.bodies() {
        let (x, y) = to_px(tracks[i][0]);
        let fill = if i < n { "#1f4e9c" } else { "#b2242a" };
        let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{fill}"/>"#);
    }
    out.push_str("</svg>\n");
    out
}
