//! Static SVG line charts with a logarithmic y axis.

use std::fmt::Write as _;

use fourier_debias::experiments::SimulationRow;

use crate::error::CliResult;
use crate::manifest::RunManifest;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#7f7f7f", "#9467bd", "#8c564b",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    /// Reference curves are drawn dashed.
    pub dashed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

impl Chart {
    /// Points with non-positive or non-finite `y` cannot sit on a log axis and are dropped.
    fn visible(&self) -> impl Iterator<Item = (usize, Vec<(f64, f64)>)> + '_ {
        self.series.iter().enumerate().map(|(i, s)| {
            (
                i,
                s.points
                    .iter()
                    .copied()
                    .filter(|(x, y)| x.is_finite() && y.is_finite() && *y > 0.0)
                    .collect(),
            )
        })
    }

    pub fn render(&self, manifest: &RunManifest) -> CliResult<String> {
        let pts: Vec<(f64, f64)> = self.visible().flat_map(|(_, p)| p).collect();
        let (mut x0, mut x1) = pts
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
                (a.min(p.0), b.max(p.0))
            });
        let (ly0, ly1) = pts
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
                (a.min(p.1.log10()), b.max(p.1.log10()))
            });
        if !x0.is_finite() {
            (x0, x1) = (0.0, 1.0);
        }
        if x1 <= x0 {
            (x0, x1) = (x0 - 0.05, x1 + 0.05);
        }
        let (mut d0, mut d1) = if ly0.is_finite() {
            (ly0.floor(), ly1.ceil())
        } else {
            (-1.0, 0.0)
        };
        if d1 <= d0 {
            (d0, d1) = (d0 - 1.0, d1 + 1.0);
        }
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + (d1 - y.log10()) / (d1 - d0) * ph;

        let mut s = manifest.xml_comment()?;
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(
            s,
            r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&self.title)
        );

        // decade grid on the log axis
        let mut dec = d0 as i32;
        while dec as f64 <= d1 {
            let y = TOP + (d1 - dec as f64) / (d1 - d0) * ph;
            let _ = writeln!(
                s,
                r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
                LEFT + pw
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.2}" text-anchor="end">1e{dec}</text>"#,
                LEFT - 6.0,
                y + 4.0
            );
            dec += 1;
        }
        let ticks = 5;
        for i in 0..=ticks {
            let x = x0 + (x1 - x0) * i as f64 / ticks as f64;
            let px = sx(x);
            let _ = writeln!(
                s,
                r##"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="#333333"/>"##,
                TOP + ph,
                TOP + ph + 5.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{x:.3}</text>"#,
                TOP + ph + 18.0
            );
        }
        let _ = writeln!(
            s,
            r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#333333"/>"##
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 18.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        for (i, points) in self.visible() {
            let series = &self.series[i];
            let color = PALETTE[i % PALETTE.len()];
            let dash = if series.dashed {
                r#" stroke-dasharray="6 4""#
            } else {
                ""
            };
            let coords: Vec<String> = points
                .iter()
                .map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline class="{}" fill="none" stroke="{color}" stroke-width="1.8"{dash} points="{}"/>"#,
                if series.dashed {
                    "reference"
                } else {
                    "estimator"
                },
                coords.join(" ")
            );
            let ly = TOP + 14.0 + 20.0 * i as f64;
            let lx = LEFT + pw + 14.0;
            let _ = writeln!(
                s,
                r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="1.8"{dash}/>"#,
                lx + 28.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
                lx + 34.0,
                ly + 4.0,
                escape(&series.name)
            );
        }
        s.push_str("</svg>\n");
        Ok(s)
    }
}

/// Which statistic a sweep chart shows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Bias,
    Variance,
    Mse,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Bias, Metric::Variance, Metric::Mse];

    pub fn file_name(self) -> &'static str {
        match self {
            Self::Bias => "bias.svg",
            Self::Variance => "variance.svg",
            Self::Mse => "mse.svg",
        }
    }

    fn label(self) -> &'static str {
        match self {
            Self::Bias => "|bias|",
            Self::Variance => "variance",
            Self::Mse => "MSE",
        }
    }
}

/// Estimator curves plus the matching reference lines against alpha.
pub fn sweep_chart(rows: &[SimulationRow], metric: Metric, base_name: &str) -> Chart {
    let pick = |s: &fourier_debias::experiments::ErrorStats| match metric {
        Metric::Bias => s.bias,
        Metric::Variance => s.variance,
        Metric::Mse => s.mse,
    };
    let line = |name: &str, dashed: bool, f: &dyn Fn(&SimulationRow) -> Option<f64>| Series {
        name: name.to_string(),
        points: rows
            .iter()
            .filter_map(|r| f(r).map(|y| (r.alpha, y)))
            .collect(),
        dashed,
    };
    let mut series = vec![
        line("plug-in", false, &|r| Some(pick(&r.plugin))),
        line("TF", false, &|r| Some(pick(&r.tf))),
    ];
    if rows.iter().any(|r| r.adaptive.is_some()) {
        series.push(line("adaptive", false, &|r| r.adaptive.as_ref().map(pick)));
    }
    match metric {
        Metric::Bias => {
            series.push(line("(d/n)^(s/2)", true, &|r| Some(r.reference.half_power)));
            series.push(line("n^(-1/2)", true, &|r| Some(r.reference.root_n)));
        }
        Metric::Variance | Metric::Mse => {
            series.push(line("n^(-1)", true, &|r| Some(r.reference.inv_n)));
            series.push(line("(d/n)^s", true, &|r| Some(r.reference.full_power)));
        }
    }
    Chart {
        title: format!("{} of estimators, base {base_name}", metric.label()),
        x_label: "alpha (d = n^alpha)".to_string(),
        y_label: metric.label().to_string(),
        series,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn chart() -> Chart {
        Chart {
            title: "t <1>".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            series: vec![
                Series {
                    name: "a".into(),
                    points: vec![(0.4, 1e-3), (0.5, 1e-2), (0.6, 0.0), (0.7, 1.0)],
                    dashed: false,
                },
                Series {
                    name: "ref".into(),
                    points: vec![(0.4, 1e-4), (0.7, 1e-1)],
                    dashed: true,
                },
            ],
        }
    }

    #[test]
    fn structure() {
        let m = RunManifest::new("simulate", 3, BTreeMap::new());
        let s = chart().render(&m).unwrap();
        assert!(s.starts_with("<!-- manifest {"));
        assert_eq!(s.matches("<polyline").count(), 2);
        assert_eq!(s.matches(r#"class="reference""#).count(), 1);
        assert!(s.contains("stroke-dasharray"));
        assert!(s.contains("t &lt;1&gt;"));
        // zero dropped on the log axis: three points in the estimator polyline
        let est = s
            .lines()
            .find(|l| l.contains(r#"class="estimator""#))
            .unwrap();
        let pts = est.split("points=\"").nth(1).unwrap();
        assert_eq!(pts.split_whitespace().count(), 3);
        // decades 1e-4 .. 1e0
        for d in -4..=0 {
            assert!(s.contains(&format!(">1e{d}<")));
        }
        assert!(s.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn empty_chart_renders() {
        let m = RunManifest::new("simulate", 3, BTreeMap::new());
        let c = Chart {
            title: "e".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            series: vec![],
        };
        assert!(c.render(&m).unwrap().contains("</svg>"));
    }
}
