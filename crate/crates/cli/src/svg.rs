//! Two-dimensional scatter plot of the region assignment with walls drawn on
//! top.

use std::fmt::Write;

use adclust_core::walls::WallKind;
use adclust_core::{Dataset, Region, Wall};

const SIZE: f64 = 640.0;
const MARGIN: f64 = 24.0;
const WALL_SEGMENTS: usize = 120;

pub fn region_color(region: Region) -> &'static str {
    match region {
        Region::NormalCore => "#1f77b4",
        Region::AbnormalRegion => "#ff7f0e",
        Region::MixedOverlap => "#9467bd",
        Region::UnknownCluster => "#e3c800",
        Region::Outlier => "#000000",
    }
}

/// Boundary polygon of a two-dimensional wall.
pub fn wall_outline(wall: &Wall) -> Vec<[f64; 2]> {
    let m = &wall.stats.mean;
    match wall.kind {
        WallKind::Euclidean => {
            // x = mean + L * sqrt(r) * (cos, sin) with L L^T = covariance
            let c = &wall.stats.covariance;
            let l11 = c[0][0].sqrt();
            let l21 = c[1][0] / l11;
            let l22 = (c[1][1] - l21 * l21).max(0.0).sqrt();
            let r = wall.radius.sqrt();
            (0..WALL_SEGMENTS)
                .map(|i| {
                    let th = i as f64 / WALL_SEGMENTS as f64 * std::f64::consts::TAU;
                    let (u, v) = (r * th.cos(), r * th.sin());
                    [m[0] + l11 * u, m[1] + l21 * u + l22 * v]
                })
                .collect()
        }
        WallKind::Manhattan => {
            let (dx, dy) = (wall.radius * wall.stats.stddevs[0], wall.radius * wall.stats.stddevs[1]);
            vec![[m[0] + dx, m[1]], [m[0], m[1] + dy], [m[0] - dx, m[1]], [m[0], m[1] - dy]]
        }
    }
}

/// `None` unless the data is two-dimensional.
pub fn scatter(data: &Dataset, regions: &[Region], walls: &[&Wall]) -> Option<String> {
    if data.dim() != 2 {
        return None;
    }
    let ranges = data.ranges();
    let span = |(lo, hi): (f64, f64)| {
        let pad = ((hi - lo) * 0.05).max(1e-9);
        (lo - pad, hi + pad)
    };
    let (x0, x1) = span(ranges[0]);
    let (y0, y1) = span(ranges[1]);
    let inner = SIZE - 2.0 * MARGIN;
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * inner;
    let py = |y: f64| SIZE - MARGIN - (y - y0) / (y1 - y0) * inner;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (p, x) in data.points().enumerate() {
        let labeled = data.label(p).is_labeled();
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="{}" fill="{}"{}/>"#,
            px(x[0]),
            py(x[1]),
            if labeled { 4 } else { 2 },
            region_color(regions[p]),
            if labeled { r#" stroke="black" stroke-width="1""# } else { "" }
        );
    }
    let _ = writeln!(s, r#"<g fill="none" stroke="red" stroke-width="2">"#);
    for wall in walls {
        let pts: Vec<String> = wall_outline(wall)
            .iter()
            .map(|[x, y]| format!("{:.2},{:.2}", px(*x), py(*y)))
            .collect();
        let _ = writeln!(s, r#"<polygon points="{}"/>"#, pts.join(" "));
    }
    s.push_str("</g>\n</svg>\n");
    Some(s)
}
