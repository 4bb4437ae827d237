//! CSV and SVG writers. Both produce identical bytes for identical input.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use qdarwin::experiments::{Fig2Row, SweepPoint, SweepResult};

pub const SWEEP_HEADER: &str = "model,realizations,time,fragment_size,I_mean,I_stderr,chi_mean,\
chi_stderr,discord_mean,S_mean,ratio_mean";

/// Formats `x` with 12 significant digits in the style of C's `%.12g`.
pub fn fmt_g12(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci
        .split_once('e')
        .expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let out = if (-4..12).contains(&exp) {
        trim_zeros(&format!("{:.*}", (11 - exp) as usize, x))
    } else {
        format!(
            "{}e{}{:02}",
            trim_zeros(mantissa),
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        )
    };
    if out == "-0" {
        "0".into()
    } else {
        out
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn sorted_points(result: &SweepResult) -> Vec<&SweepPoint> {
    let mut points: Vec<&SweepPoint> = result.points.iter().collect();
    points.sort_by(|a, b| {
        a.time
            .total_cmp(&b.time)
            .then(a.fragment_size.cmp(&b.fragment_size))
    });
    points
}

pub fn sweep_csv(result: &SweepResult) -> String {
    let model = result.config.model.name();
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for p in sorted_points(result) {
        let opt = |v: Option<f64>| v.map(fmt_g12).unwrap_or_default();
        let _ = writeln!(
            out,
            "{model},{},{},{},{},{},{},{},{},{},{}",
            result.realizations,
            fmt_g12(p.time),
            p.fragment_size,
            fmt_g12(p.mutual_info.mean),
            fmt_g12(p.mutual_info.stderr),
            opt(p.holevo.map(|s| s.mean)),
            opt(p.holevo.map(|s| s.stderr)),
            opt(p.discord.map(|s| s.mean)),
            fmt_g12(p.system_entropy.mean),
            fmt_g12(p.ratio.mean),
        );
    }
    out
}

pub fn write_csv(result: &SweepResult, path: &Path) -> io::Result<()> {
    fs::write(path, sweep_csv(result))
}

pub fn fig2_csv(rows: &[Fig2Row]) -> String {
    let mut out = String::from("n,I_inf,chi_inf\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.n, fmt_g12(r.i_inf), fmt_g12(r.chi_inf));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Quantity {
    Ratio,
    I,
    Chi,
}

impl Quantity {
    fn label(self) -> &'static str {
        match self {
            Quantity::Ratio => "ratio",
            Quantity::I => "I(S:F)",
            Quantity::Chi => "chi(S:F)",
        }
    }

    fn value(self, p: &SweepPoint) -> Option<f64> {
        match self {
            Quantity::Ratio => Some(p.ratio.mean),
            Quantity::I => Some(p.mutual_info.mean),
            Quantity::Chi => p.holevo.map(|s| s.mean),
        }
    }
}

const CELL_W: f64 = 12.0;
const CELL_H: f64 = 24.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;
const LEGEND_W: f64 = 110.0;

/// Viridis end points and midpoint.
const STOPS: [(f64, f64, f64); 3] = [
    (68.0, 1.0, 84.0),
    (33.0, 145.0, 140.0),
    (253.0, 231.0, 37.0),
];

fn color(u: f64) -> String {
    let u = u.clamp(0.0, 1.0) * 2.0;
    let (lo, hi, f) = if u <= 1.0 {
        (STOPS[0], STOPS[1], u)
    } else {
        (STOPS[1], STOPS[2], u - 1.0)
    };
    let mix = |a: f64, b: f64| (a + (b - a) * f).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(lo.0, hi.0),
        mix(lo.1, hi.1),
        mix(lo.2, hi.2)
    )
}

fn unique_sorted<T: Copy + PartialOrd>(mut xs: Vec<T>) -> Vec<T> {
    xs.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    xs.dedup();
    xs
}

/// Heatmap with time on the horizontal axis and fragment size on the
/// vertical axis (smallest at the bottom). Returns `None` if the quantity was
/// not computed for this sweep.
pub fn heatmap_svg(result: &SweepResult, quantity: Quantity) -> Option<String> {
    let times = unique_sorted(result.points.iter().map(|p| p.time).collect());
    let sizes = unique_sorted(result.points.iter().map(|p| p.fragment_size).collect());
    let cells: Vec<(usize, usize, f64)> = result
        .points
        .iter()
        .map(|p| {
            let ti = times.iter().position(|&t| t == p.time).unwrap();
            let ni = sizes.iter().position(|&n| n == p.fragment_size).unwrap();
            quantity.value(p).map(|v| (ti, ni, v))
        })
        .collect::<Option<_>>()?;
    let min = cells.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);
    let max = cells.iter().map(|c| c.2).fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;

    let plot_w = CELL_W * times.len() as f64;
    let plot_h = CELL_H * sizes.len() as f64;
    let width = MARGIN_L + plot_w + LEGEND_W;
    let height = MARGIN_T + plot_h + MARGIN_B;
    let bottom = MARGIN_T + plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN_L}" y="20" font-size="13">{} {}, {} realizations</text>"#,
        result.config.model.name(),
        quantity.label(),
        result.realizations
    );
    for (ti, ni, v) in &cells {
        let u = if span > 0.0 { (v - min) / span } else { 0.0 };
        let x = MARGIN_L + CELL_W * *ti as f64;
        let y = bottom - CELL_H * (*ni as f64 + 1.0);
        let _ = writeln!(
            s,
            r#"<rect x="{x}" y="{y}" width="{CELL_W}" height="{CELL_H}" fill="{}"/>"#,
            color(u)
        );
    }
    // axes
    let _ = writeln!(
        s,
        r#"<path d="M{MARGIN_L} {MARGIN_T} V{bottom} H{}" fill="none" stroke="black"/>"#,
        MARGIN_L + plot_w
    );
    for (ni, n) in sizes.iter().enumerate() {
        let y = bottom - CELL_H * (ni as f64 + 0.5) + 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{y}" text-anchor="end">{n}</text>"#,
            MARGIN_L - 6.0
        );
    }
    let stride = times.len().div_ceil(8).max(1);
    for (ti, t) in times
        .iter()
        .enumerate()
        .filter(|(i, _)| i % stride == 0 || *i + 1 == times.len())
    {
        let x = MARGIN_L + CELL_W * (ti as f64 + 0.5);
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{}" text-anchor="middle">{}</text>"#,
            bottom + 16.0,
            fmt_g12(*t)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">time</text>"#,
        MARGIN_L + plot_w / 2.0,
        bottom + 36.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">fragment size</text>"#,
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0
    );
    // color bar with min and max
    let bar_x = MARGIN_L + plot_w + 20.0;
    let _ = writeln!(
        s,
        r#"<defs><linearGradient id="cmap" x1="0" y1="1" x2="0" y2="0">"#
    );
    for (k, stop) in ["0%", "50%", "100%"].iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<stop offset="{stop}" stop-color="{}"/>"#,
            color(k as f64 / 2.0)
        );
    }
    let _ = writeln!(s, "</linearGradient></defs>");
    let _ = writeln!(
        s,
        r#"<rect x="{bar_x}" y="{MARGIN_T}" width="14" height="{plot_h}" fill="url(#cmap)" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}">max {}</text>"#,
        bar_x + 20.0,
        MARGIN_T + 10.0,
        fmt_g12(max)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{bottom}">min {}</text>"#,
        bar_x + 20.0,
        fmt_g12(min)
    );
    s.push_str("</svg>\n");
    Some(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g12_matches_printf() {
        let cases = [
            (0.0, "0"),
            (-0.0, "0"),
            (1.0, "1"),
            (0.5, "0.5"),
            (-2.25, "-2.25"),
            (1.0 / 3.0, "0.333333333333"),
            (2.0 / 3.0, "0.666666666667"),
            (123456.789, "123456.789"),
            (1e-5, "1e-05"),
            (1.5e-7, "1.5e-07"),
            (1e12, "1e+12"),
            (999999999999.5, "1e+12"),
            (123456789012.0, "123456789012"),
            (0.9999999999996, "1"),
            (-1.234e-20, "-1.234e-20"),
        ];
        for (x, want) in cases {
            assert_eq!(fmt_g12(x), want, "{x}");
        }
    }

    #[test]
    fn g12_round_trips_to_twelve_digits() {
        for x in [std::f64::consts::PI, 1e-9 / 7.0, 0.97184973, -3.3e8 / 9.0] {
            let back: f64 = fmt_g12(x).parse().unwrap();
            assert!((back - x).abs() <= 5e-12 * x.abs());
            assert_eq!(fmt_g12(back), fmt_g12(x));
        }
    }

    #[test]
    fn colormap_end_points() {
        assert_eq!(color(0.0), "#440154");
        assert_eq!(color(1.0), "#fde725");
        assert_eq!(color(0.5), "#21918c");
        assert_eq!(color(-3.0), color(0.0));
    }
}
