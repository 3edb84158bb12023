//! Native deterministic SVG line plots: fixed 800 x 500 viewport, log-scaled
//! x axis, one polyline per series, optional horizontal guide lines. The same
//! input always produces byte-identical output.

pub struct PlotSeries<'a> {
    pub label: &'a str,
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub color: &'a str,
}

pub struct PlotSpec<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    /// y-values of dashed horizontal guide lines.
    pub guides: &'a [f64],
}

const W: f64 = 800.0;
const H: f64 = 500.0;
const ML: f64 = 70.0;
const MR: f64 = 20.0;
const MT: f64 = 40.0;
const MB: f64 = 55.0;

/// Nine significant digits, deterministic.
fn fmt9(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        format!("{:.8e}", x)
    }
}

pub fn emit_plot(series: &[PlotSeries<'_>], spec: &PlotSpec<'_>) -> String {
    let mut xs_min = f64::INFINITY;
    let mut xs_max = f64::NEG_INFINITY;
    let mut ys_min = f64::INFINITY;
    let mut ys_max = f64::NEG_INFINITY;
    for s in series {
        for &x in s.x {
            if x > 0.0 {
                xs_min = xs_min.min(x);
                xs_max = xs_max.max(x);
            }
        }
        for &y in s.y {
            ys_min = ys_min.min(y);
            ys_max = ys_max.max(y);
        }
    }
    for &g in spec.guides {
        ys_min = ys_min.min(g);
        ys_max = ys_max.max(g);
    }
    if !xs_min.is_finite() || xs_min <= 0.0 {
        xs_min = 1e-3;
        xs_max = 1.0;
    }
    if !ys_min.is_finite() {
        ys_min = 0.0;
        ys_max = 1.0;
    }
    if (ys_max - ys_min).abs() < 1e-300 {
        ys_min -= 0.5;
        ys_max += 0.5;
    }
    let pad = 0.05 * (ys_max - ys_min);
    let (ylo, yhi) = (ys_min - pad, ys_max + pad);
    let (lx0, lx1) = (xs_min.log10(), xs_max.log10());

    let to_px = |x: f64| -> f64 {
        if lx1 > lx0 {
            ML + (x.log10() - lx0) / (lx1 - lx0) * (W - ML - MR)
        } else {
            ML + 0.5 * (W - ML - MR)
        }
    };
    let to_py = |y: f64| -> f64 { H - MB - (y - ylo) / (yhi - ylo) * (H - MT - MB) };

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    ));
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    out.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-family=\"monospace\" font-size=\"15\">{}</text>\n",
        ML,
        xml_escape(spec.title)
    ));
    // axes
    out.push_str(&format!(
        "<line x1=\"{ML}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        H - MB,
        W - MR,
        H - MB
    ));
    out.push_str(&format!(
        "<line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{}\" stroke=\"black\"/>\n",
        H - MB
    ));
    // decade ticks on the log axis
    let mut decade = lx0.floor() as i64;
    while (decade as f64) <= lx1.ceil() {
        let xv = 10f64.powi(decade as i32);
        if xv >= xs_min * 0.999 && xv <= xs_max * 1.001 {
            let px = to_px(xv);
            out.push_str(&format!(
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
                fmt9(px),
                H - MB,
                fmt9(px),
                H - MB + 6.0
            ));
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"middle\">1e{}</text>\n",
                fmt9(px),
                H - MB + 20.0,
                decade
            ));
        }
        decade += 1;
    }
    // y ticks: five evenly spaced labels
    for i in 0..=4 {
        let yv = ylo + (yhi - ylo) * i as f64 / 4.0;
        let py = to_py(yv);
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{ML}\" y2=\"{}\" stroke=\"black\"/>\n",
            ML - 6.0,
            fmt9(py),
            fmt9(py)
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"end\">{}</text>\n",
            ML - 10.0,
            fmt9(py + 4.0),
            fmt9(yv)
        ));
    }
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n",
        ML + (W - ML - MR) / 2.0,
        H - 12.0,
        xml_escape(spec.x_label)
    ));
    out.push_str(&format!(
        "<text x=\"18\" y=\"{}\" font-family=\"monospace\" font-size=\"13\" transform=\"rotate(-90 18 {})\" text-anchor=\"middle\">{}</text>\n",
        MT + (H - MT - MB) / 2.0,
        MT + (H - MT - MB) / 2.0,
        xml_escape(spec.y_label)
    ));
    for &g in spec.guides {
        let py = to_py(g);
        out.push_str(&format!(
            "<line x1=\"{ML}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"gray\" stroke-dasharray=\"6,4\"/>\n",
            fmt9(py),
            W - MR,
            fmt9(py)
        ));
    }
    for (i, s) in series.iter().enumerate() {
        let mut pts = String::new();
        for (x, y) in s.x.iter().zip(s.y.iter()) {
            if *x <= 0.0 {
                continue;
            }
            if !pts.is_empty() {
                pts.push(' ');
            }
            pts.push_str(&format!("{},{}", fmt9(to_px(*x)), fmt9(to_py(*y))));
        }
        out.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            s.color, pts
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" fill=\"{}\">{}</text>\n",
            W - MR - 180.0,
            MT + 16.0 * (i + 1) as f64,
            s.color,
            xml_escape(s.label)
        ));
    }
    out.push_str("</svg>\n");
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
