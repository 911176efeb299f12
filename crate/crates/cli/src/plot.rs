//! Static SVG plots of nodal quantities: a line plot for 1D fields, a heat
//! map for 2D fields and for the `z = 0` slice of 3D fields.

use std::fmt::Write as _;

use anyhow::{bail, Result};
use qlab_core::{QField, QTensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Quantity {
    /// Scalar order parameter.
    S,
    /// Biaxiality parameter.
    Beta,
    /// Angle between the director line and the z axis, in degrees.
    Angle,
}

impl Quantity {
    fn label(self) -> &'static str {
        match self {
            Quantity::S => "s",
            Quantity::Beta => "beta",
            Quantity::Angle => "director angle to z (deg)",
        }
    }

    fn eval(self, q: &QTensor<f64>, tol: f64) -> f64 {
        let d = q.decompose(tol);
        match self {
            Quantity::S => d.s,
            Quantity::Beta => d.beta,
            Quantity::Angle => d.n[2].abs().min(1.0).acos().to_degrees(),
        }
    }
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;

fn fmt(v: f64) -> String {
    format!("{v:.4}")
}

/// Five-stop blue-to-yellow ramp.
fn colour(t: f64) -> String {
    const STOPS: [[f64; 3]; 5] = [
        [68.0, 1.0, 84.0],
        [59.0, 82.0, 139.0],
        [33.0, 145.0, 140.0],
        [94.0, 201.0, 98.0],
        [253.0, 231.0, 37.0],
    ];
    let t = if t.is_finite() {
        t.clamp(0.0, 1.0)
    } else {
        0.0
    };
    let u = t * 4.0;
    let k = (u.floor() as usize).min(3);
    let f = u - k as f64;
    let c: Vec<u8> = (0..3)
        .map(|j| (STOPS[k][j] + f * (STOPS[k + 1][j] - STOPS[k][j])).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn range(values: &[f64]) -> (f64, f64) {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < 1e-300 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

pub fn render(field: &QField<f64>, quantity: Quantity, tol: f64) -> Result<String> {
    let grid = field.grid();
    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )?;
    writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#)?;
    let (pw, ph) = (WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
    match grid.dim() {
        1 => {
            let pts: Vec<(f64, f64)> = (0..grid.len())
                .map(|i| (grid.position(i)[0], quantity.eval(&field.value(i), tol)))
                .collect();
            let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
            let (x0, x1) = range(&xs);
            let (y0, y1) = range(&ys);
            let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * pw;
            let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * ph;
            let path: Vec<String> = pts
                .iter()
                .map(|&(x, y)| format!("{},{}", fmt(sx(x)), fmt(sy(y))))
                .collect();
            writeln!(
                svg,
                r#"<rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
            )?;
            writeln!(
                svg,
                r##"<polyline fill="none" stroke="#3b528b" stroke-width="2" points="{}"/>"##,
                path.join(" ")
            )?;
            axis_labels(&mut svg, (x0, x1), (y0, y1), "x", quantity.label())?;
        }
        2 | 3 => {
            let h = grid.h();
            let cells: Vec<(f64, f64, f64)> = (0..grid.len())
                .filter_map(|i| {
                    let x = grid.position(i);
                    (grid.dim() == 2 || x[2].abs() < 0.5 * h)
                        .then(|| (x[0], x[1], quantity.eval(&field.value(i), tol)))
                })
                .collect();
            if cells.is_empty() {
                bail!("no nodes in the z = 0 slice");
            }
            let xs: Vec<f64> = cells.iter().map(|c| c.0).collect();
            let ys: Vec<f64> = cells.iter().map(|c| c.1).collect();
            let vs: Vec<f64> = cells.iter().map(|c| c.2).collect();
            let (x0, x1) = range(&xs);
            let (y0, y1) = range(&ys);
            let (v0, v1) = range(&vs);
            let scale = (pw / (x1 - x0 + h)).min(ph / (y1 - y0 + h));
            let side = h * scale;
            for &(x, y, v) in &cells {
                let px = MARGIN + (x - x0) * scale;
                let py = HEIGHT - MARGIN - (y - y0) * scale - side;
                writeln!(
                    svg,
                    r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
                    fmt(px),
                    fmt(py),
                    fmt(side),
                    fmt(side),
                    colour((v - v0) / (v1 - v0))
                )?;
            }
            let title = if grid.dim() == 3 {
                format!("{} (z = 0 slice)", quantity.label())
            } else {
                quantity.label().to_string()
            };
            writeln!(
                svg,
                r#"<text x="{MARGIN}" y="{}" font-size="14">{title}: {} .. {}</text>"#,
                MARGIN - 20.0,
                fmt(v0),
                fmt(v1)
            )?;
        }
        d => bail!("cannot plot a {d}-dimensional field"),
    }
    writeln!(svg, "</svg>")?;
    Ok(svg)
}

fn axis_labels(svg: &mut String, x: (f64, f64), y: (f64, f64), xl: &str, yl: &str) -> Result<()> {
    let bottom = HEIGHT - MARGIN;
    writeln!(
        svg,
        r#"<text x="{MARGIN}" y="{}" font-size="12">{}</text>"#,
        bottom + 18.0,
        fmt(x.0)
    )?;
    writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="end">{}</text>"#,
        WIDTH - MARGIN,
        bottom + 18.0,
        fmt(x.1)
    )?;
    writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="14" text-anchor="middle">{xl}</text>"#,
        WIDTH / 2.0,
        bottom + 36.0
    )?;
    writeln!(
        svg,
        r#"<text x="4" y="{}" font-size="12">{}</text>"#,
        bottom,
        fmt(y.0)
    )?;
    writeln!(
        svg,
        r#"<text x="4" y="{}" font-size="12">{}</text>"#,
        MARGIN + 4.0,
        fmt(y.1)
    )?;
    writeln!(
        svg,
        r#"<text x="{MARGIN}" y="{}" font-size="14">{yl}</text>"#,
        MARGIN - 20.0
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn colour_ramp_ends() {
        assert_eq!(colour(0.0), "#440154");
        assert_eq!(colour(1.0), "#fde725");
        assert_eq!(colour(f64::NAN), "#440154");
    }
}
