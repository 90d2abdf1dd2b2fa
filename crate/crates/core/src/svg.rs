//! Standalone log–log SVG plots for decay profiles and regularity scans.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fourier::{DecayProfile, DecayStatus};
use crate::regularity::RegularityReport;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

/// Data for one log–log chart. Lines are given as `(c, exponent)` for `y = c·x^exponent`.
#[derive(Debug, Clone)]
pub struct LogLogPlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<(f64, f64)>,
    pub fit: Option<(f64, f64)>,
    pub envelope: Option<(f64, f64)>,
    pub annotation: Option<String>,
}

impl LogLogPlot {
    pub fn from_profile(profile: &DecayProfile, target_sigma: Option<f64>) -> Result<Self> {
        if profile.bands.is_empty() {
            return Err(Error::InvalidArgument("decay profile has no bands to plot".into()));
        }
        let points = profile.bands.iter().filter(|b| b.sup > 0.0).map(|b| ((1u64 << b.band) as f64, b.sup)).collect();
        let fit = profile.fit.map(|f| (f.c_hat, -f.sigma_hat / 2.0));
        let envelope = match (profile.fit, target_sigma) {
            (Some(f), Some(s)) => Some((f.c_hat, -s / 2.0)),
            _ => None,
        };
        Ok(LogLogPlot {
            title: format!("band suprema of |mu_hat_{}(k)|", profile.level),
            x_label: "k".into(),
            y_label: "sup |mu_hat(k)|".into(),
            points,
            fit,
            envelope,
            annotation: (profile.status == DecayStatus::FlatZero).then(|| "no decay data".to_string()),
        })
    }

    /// Largest sampled mass per radius, with the envelope `C_upper·r^t`.
    pub fn from_regularity(report: &RegularityReport) -> Result<Self> {
        let mut per_radius: Vec<(f64, f64)> = Vec::new();
        for s in &report.samples {
            let r = crate::regularity::parse_rational(&s.r).map(|v| rat_f64(&v))?;
            let m = crate::regularity::parse_rational(&s.mass).map(|v| rat_f64(&v))?;
            match per_radius.iter_mut().find(|(x, _)| *x == r) {
                Some(p) => p.1 = p.1.max(m),
                None => per_radius.push((r, m)),
            }
        }
        per_radius.retain(|p| p.1 > 0.0);
        if per_radius.is_empty() {
            return Err(Error::InvalidArgument("regularity report has no samples to plot".into()));
        }
        per_radius.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(LogLogPlot {
            title: format!("largest ball mass at level {}", report.level),
            x_label: "r".into(),
            y_label: "max mu_n(B(x, r))".into(),
            fit: least_squares(&per_radius),
            envelope: Some((report.c_upper, report.t)),
            points: per_radius,
            annotation: None,
        })
    }
}

fn rat_f64(v: &num_rational::BigRational) -> f64 {
    num_traits::ToPrimitive::to_f64(v).unwrap_or(f64::NAN)
}

fn least_squares(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / sxx;
    Some(((my - slope * mx).exp(), slope))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the plot. The root element carries `data-log-x-min` and friends
/// (decimal logarithms of the axis limits) so the mapping can be inverted.
pub fn emit_svg(plot: &LogLogPlot) -> Result<String> {
    if plot.points.is_empty() && plot.annotation.is_none() {
        return Err(Error::InvalidArgument("nothing to plot".into()));
    }
    let (lx0, lx1, ly0, ly1) = if plot.points.is_empty() {
        (0.0, 1.0, -1.0, 0.0)
    } else {
        let lx = plot.points.iter().map(|p| p.0.log10());
        let ly = plot.points.iter().map(|p| p.1.log10());
        let (mut lx0, mut lx1) = lx.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        let (mut ly0, mut ly1) = ly.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if lx1 - lx0 < 1e-9 {
            lx0 -= 0.5;
            lx1 += 0.5;
        }
        if ly1 - ly0 < 1e-9 {
            ly0 -= 0.5;
            ly1 += 0.5;
        }
        let pad = 0.05 * (ly1 - ly0);
        (lx0, lx1, ly0 - pad, ly1 + pad)
    };
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x.log10() - lx0) / (lx1 - lx0) * pw;
    let py = |y: f64| TOP + ph - (y.log10() - ly0) / (ly1 - ly0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" data-log-x-min="{lx0}" data-log-x-max="{lx1}" data-log-y-min="{ly0}" data-log-y-max="{ly1}" data-plot-left="{LEFT}" data-plot-top="{TOP}" data-plot-width="{pw}" data-plot-height="{ph}">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(&plot.title)
    );
    let _ = writeln!(
        s,
        r##"<rect id="frame" x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>"##
    );
    // decade ticks
    for d in (lx0.ceil() as i64)..=(lx1.floor() as i64) {
        let x = LEFT + (d as f64 - lx0) / (lx1 - lx0) * pw;
        let _ = writeln!(
            s,
            r##"<line x1="{x:.3}" y1="{}" x2="{x:.3}" y2="{}" stroke="#333"/><text x="{x:.3}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="11">1e{d}</text>"##,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 18.0
        );
    }
    for d in (ly0.ceil() as i64)..=(ly1.floor() as i64) {
        let y = TOP + ph - (d as f64 - ly0) / (ly1 - ly0) * ph;
        let _ = writeln!(
            s,
            r##"<line x1="{}" y1="{y:.3}" x2="{LEFT}" y2="{y:.3}" stroke="#333"/><text x="{}" y="{:.3}" text-anchor="end" font-family="sans-serif" font-size="11">1e{d}</text>"##,
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 10.0,
        escape(&plot.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 16 {})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&plot.y_label)
    );

    if !plot.points.is_empty() {
        let (x_lo, x_hi) = (10f64.powf(lx0), 10f64.powf(lx1));
        let line = |id: &str, (c, e): (f64, f64), style: &str, s: &mut String| {
            let (y_lo, y_hi) = (c * x_lo.powf(e), c * x_hi.powf(e));
            if y_lo > 0.0 && y_hi > 0.0 && y_lo.is_finite() && y_hi.is_finite() {
                let _ = writeln!(
                    s,
                    r#"<path id="{id}" d="M {:.3} {:.3} L {:.3} {:.3}" fill="none" {style}/>"#,
                    px(x_lo),
                    py(y_lo),
                    px(x_hi),
                    py(y_hi)
                );
            }
        };
        let _ = writeln!(
            s,
            r#"<clipPath id="plot-area"><rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}"/></clipPath><g clip-path="url(#plot-area)">"#
        );
        if let Some(env) = plot.envelope {
            line("envelope", env, r##"stroke="#c33" stroke-dasharray="6 4""##, &mut s);
        }
        if let Some(fit) = plot.fit {
            line("fit", fit, r##"stroke="#236" stroke-width="1.5""##, &mut s);
        }
        let _ = writeln!(s, "</g>");
        let _ = writeln!(s, r#"<g id="points">"#);
        for &(x, y) in &plot.points {
            let _ = writeln!(s, r##"<circle cx="{:.3}" cy="{:.3}" r="3.5" fill="#236"/>"##, px(x), py(y));
        }
        let _ = writeln!(s, "</g>");
    }
    if let Some(note) = &plot.annotation {
        let _ = writeln!(
            s,
            r##"<text id="annotation" x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="14" fill="#555">{}</text>"##,
            LEFT + pw / 2.0,
            TOP + ph / 2.0,
            escape(note)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}
