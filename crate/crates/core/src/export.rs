//! Plain-text exporters: band structures to CSV, d=1 band plots to
//! hand-rolled SVG, verification summaries to CSV. All output is
//! deterministic (fixed field order, fixed float formatting).

use std::fmt::Write as _;

use crate::floquet::{BandStructure, MinimaSet};
use crate::verifier::VerificationReport;

fn fmt_float(x: f64) -> String {
    // shortest round-trip representation; stable across runs
    format!("{}", x)
}

/// CSV with columns θ_1..θ_d, E_1..E_n.
pub fn bands_to_csv(band: &BandStructure) -> String {
    let d = band.model.dimension();
    let mut out = String::new();
    let mut header: Vec<String> = (1..=d).map(|a| format!("theta_{a}")).collect();
    header.extend((1..=band.n_bands).map(|b| format!("E_{b}")));
    out.push_str(&header.join(","));
    out.push('\n');
    for (theta, bands) in band.thetas.iter().zip(&band.bands) {
        let mut row: Vec<String> = theta.iter().map(|&t| fmt_float(t)).collect();
        row.extend(bands.iter().map(|&e| fmt_float(e)));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// One row per configuration: label, λ, E_min, θ*, resolution estimate.
pub fn verification_to_csv(report: &VerificationReport) -> String {
    let mut out = String::from("label,lambda,e_min,theta_star,resolution_estimate\n");
    for s in &report.spectra {
        let theta = s
            .theta_star
            .iter()
            .map(|&t| fmt_float(t))
            .collect::<Vec<_>>()
            .join(";");
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            s.label,
            fmt_float(s.lambda),
            fmt_float(s.e_min),
            theta,
            fmt_float(s.resolution_estimate)
        );
    }
    out
}

const SVG_W: f64 = 800.0;
const SVG_H: f64 = 500.0;
const MARGIN: f64 = 60.0;

/// d=1 band plot: one polyline per band, axes with tick labels, and
/// circle markers at the refined minima when provided.
pub fn bands_to_svg(band: &BandStructure, minima: Option<&MinimaSet>) -> String {
    assert_eq!(band.model.dimension(), 1, "SVG export is d=1 only");
    let xs: Vec<f64> = band.thetas.iter().map(|t| t[0]).collect();
    let (x_min, x_max) = (
        xs.iter().cloned().fold(f64::INFINITY, f64::min),
        xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for row in &band.bands {
        for &e in row {
            y_min = y_min.min(e);
            y_max = y_max.max(e);
        }
    }
    if y_max - y_min < 1e-12 {
        y_max = y_min + 1.0;
    }
    let pad = 0.05 * (y_max - y_min);
    let (y_min, y_max) = (y_min - pad, y_max + pad);

    let to_px = |x: f64, y: f64| -> (f64, f64) {
        let px = MARGIN + (x - x_min) / (x_max - x_min) * (SVG_W - 2.0 * MARGIN);
        let py = SVG_H - MARGIN - (y - y_min) / (y_max - y_min) * (SVG_H - 2.0 * MARGIN);
        (px, py)
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect width="{SVG_W}" height="{SVG_H}" fill="white"/>"#
    );
    // axes
    let _ = writeln!(
        svg,
        r#"<line x1="{m}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/>"#,
        m = MARGIN,
        b = SVG_H - MARGIN,
        r = SVG_W - MARGIN
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{m}" y1="{t}" x2="{m}" y2="{b}" stroke="black"/>"#,
        m = MARGIN,
        t = MARGIN,
        b = SVG_H - MARGIN
    );
    // ticks: 5 per axis
    for i in 0..=4 {
        let x = x_min + (x_max - x_min) * i as f64 / 4.0;
        let (px, _) = to_px(x, y_min);
        let _ = writeln!(
            svg,
            r#"<line x1="{px}" y1="{b}" x2="{px}" y2="{b2}" stroke="black"/><text x="{px}" y="{ty}" font-size="12" text-anchor="middle">{label:.3}</text>"#,
            b = SVG_H - MARGIN,
            b2 = SVG_H - MARGIN + 6.0,
            ty = SVG_H - MARGIN + 20.0,
            label = x
        );
        let y = y_min + (y_max - y_min) * i as f64 / 4.0;
        let (_, py) = to_px(x_min, y);
        let _ = writeln!(
            svg,
            r#"<line x1="{m2}" y1="{py}" x2="{m}" y2="{py}" stroke="black"/><text x="{tx}" y="{tyy}" font-size="12" text-anchor="end">{label:.4}</text>"#,
            m = MARGIN,
            m2 = MARGIN - 6.0,
            tx = MARGIN - 10.0,
            tyy = py + 4.0,
            label = y
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{x}" y="{y}" font-size="14" text-anchor="middle">theta</text>"#,
        x = SVG_W / 2.0,
        y = SVG_H - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{y}" font-size="14" text-anchor="middle" transform="rotate(-90 18 {y})">E_n(theta)</text>"#,
        y = SVG_H / 2.0
    );

    const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
    for b in 0..band.n_bands {
        let pts: Vec<String> = xs
            .iter()
            .zip(&band.bands)
            .map(|(&x, row)| {
                let (px, py) = to_px(x, row[b]);
                format!("{px:.2},{py:.2}")
            })
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
            pts.join(" "),
            COLORS[b % COLORS.len()]
        );
    }
    if let Some(minima) = minima {
        for p in &minima.points {
            let (px, py) = to_px(p[0], minima.e_min);
            let _ = writeln!(
                svg,
                r#"<circle cx="{px:.2}" cy="{py:.2}" r="4" fill="none" stroke="black" stroke-width="1.5"/>"#
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floquet::{compute_band_structure, find_band_minima};
    use crate::model::ModelFamily;
    use crate::potential::{build_single_site, Bump, DisorderConfiguration, PeriodicBackground};

    fn band() -> BandStructure {
        let f = build_single_site(
            vec![Bump {
                center: vec![0.0],
                radius: 0.1,
                amplitude: 1.0,
            }],
            1,
        )
        .unwrap();
        let fam = ModelFamily::new(1, 16, PeriodicBackground::cosine(1, 1.0), f, (0.0, 1.0))
            .unwrap();
        let model = fam
            .model(
                0.0,
                DisorderConfiguration::constant(1, 0.0, (0.0, 1.0)).unwrap(),
            )
            .unwrap();
        compute_band_structure(&model, 17, 3).unwrap()
    }

    #[test]
    fn csv_shape_and_determinism() {
        let b = band();
        let csv = bands_to_csv(&b);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "theta_1,E_1,E_2,E_3");
        assert_eq!(lines.len(), 1 + 17);
        for line in &lines[1..] {
            assert_eq!(line.split(',').count(), 4);
        }
        assert_eq!(csv, bands_to_csv(&b));
    }

    #[test]
    fn svg_contains_polylines_and_markers() {
        let b = band();
        let minima = find_band_minima(&b, 1e-6, 0.6).unwrap();
        let svg = bands_to_svg(&b, Some(&minima));
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert_eq!(svg.matches("<circle").count(), minima.count);
        assert_eq!(svg, bands_to_svg(&b, Some(&minima)));
    }

    #[test]
    fn verification_csv_has_one_row_per_config() {
        let f = build_single_site(
            vec![Bump {
                center: vec![0.0],
                radius: 0.1,
                amplitude: 1.0,
            }],
            1,
        )
        .unwrap();
        let fam = ModelFamily::new(1, 8, PeriodicBackground::zero(1), f, (0.0, 1.0)).unwrap();
        let report =
            crate::verifier::monotone_case_oracle(&fam, 0.5, &[0.0, 1.0], 2, 9).unwrap();
        let csv = verification_to_csv(&report);
        assert_eq!(csv.lines().count(), 1 + report.spectra.len());
    }
}
