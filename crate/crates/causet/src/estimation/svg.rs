//! Minimal SVG emission for step curves and bands: pure geometry, no
//! external renderer.

use super::bootstrap::ContrastBand;
use super::step_curve::StepCurve;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN: f64 = 52.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

struct Frame {
    t_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn x(&self, t: f64) -> f64 {
        MARGIN + (t / self.t_max).clamp(0.0, 1.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn y(&self, v: f64) -> f64 {
        let span = (self.y_max - self.y_min).max(1e-12);
        HEIGHT - MARGIN - ((v - self.y_min) / span).clamp(0.0, 1.0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn step_path(curve: &StepCurve, t_max: f64, frame: &Frame) -> String {
    let mut d = format!("M {:.2} {:.2}", frame.x(0.0), frame.y(curve.initial()));
    let mut prev = curve.initial();
    for (&t, &v) in curve.times().iter().zip(curve.values()) {
        if t > t_max {
            break;
        }
        d.push_str(&format!(" H {:.2} V {:.2}", frame.x(t), frame.y(v)));
        prev = v;
    }
    let _ = prev;
    d.push_str(&format!(" H {:.2}", frame.x(t_max)));
    d
}

fn axes(frame: &Frame, title: &str) -> String {
    let mut s = String::new();
    let x0 = frame.x(0.0);
    let y0 = frame.y(frame.y_min);
    s.push_str(&format!(
        "<line x1=\"{x0:.2}\" y1=\"{y0:.2}\" x2=\"{:.2}\" y2=\"{y0:.2}\" stroke=\"black\"/>\n",
        frame.x(frame.t_max)
    ));
    s.push_str(&format!(
        "<line x1=\"{x0:.2}\" y1=\"{y0:.2}\" x2=\"{x0:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        frame.y(frame.y_max)
    ));
    for k in 0..=4 {
        let t = frame.t_max * k as f64 / 4.0;
        let v = frame.y_min + (frame.y_max - frame.y_min) * k as f64 / 4.0;
        s.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"middle\">{t:.2}</text>\n",
            frame.x(t),
            y0 + 16.0
        ));
        s.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"end\">{v:.3}</text>\n",
            x0 - 6.0,
            frame.y(v) + 4.0
        ));
    }
    s.push_str(&format!(
        "<text x=\"{:.2}\" y=\"24\" font-size=\"14\" text-anchor=\"middle\">{title}</text>\n",
        WIDTH / 2.0
    ));
    s
}

/// Render labelled step curves over `[0, t_max]`.
pub fn curves_svg(curves: &[(&str, &StepCurve)], t_max: f64, title: &str) -> String {
    let mut y_min = 0.0f64;
    let mut y_max = 1e-9f64;
    for (_, c) in curves {
        y_min = y_min.min(c.initial()).min(c.values().iter().copied().fold(0.0, f64::min));
        y_max = y_max.max(c.initial()).max(c.values().iter().copied().fold(0.0, f64::max));
    }
    let frame = Frame { t_max, y_min, y_max };
    let mut svg = String::from(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"440\" \
         viewBox=\"0 0 720 440\">\n<rect width=\"720\" height=\"440\" fill=\"white\"/>\n",
    );
    svg.push_str(&axes(&frame, title));
    for (k, (label, curve)) in curves.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        svg.push_str(&format!(
            "<path d=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.6\"/>\n",
            step_path(curve, t_max, &frame)
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" fill=\"{color}\">{label}</text>\n",
            WIDTH - MARGIN - 170.0,
            34.0 + 16.0 * k as f64
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Render a band (point estimate plus lower/upper envelope) over `[0, t_max]`.
pub fn band_svg(band: &ContrastBand, t_max: f64, title: &str) -> String {
    let mut y_min = 0.0f64;
    let mut y_max = 1e-9f64;
    for v in band.lower.iter().chain(&band.upper).chain(&band.point) {
        y_min = y_min.min(*v);
        y_max = y_max.max(*v);
    }
    let frame = Frame { t_max, y_min, y_max };
    let mut svg = String::from(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"440\" \
         viewBox=\"0 0 720 440\">\n<rect width=\"720\" height=\"440\" fill=\"white\"/>\n",
    );
    svg.push_str(&axes(&frame, title));
    // Envelope polygon: lower forward, upper backward.
    let mut pts = String::new();
    for (&t, &v) in band.times.iter().zip(&band.lower) {
        pts.push_str(&format!("{:.2},{:.2} ", frame.x(t), frame.y(v)));
    }
    for (&t, &v) in band.times.iter().zip(&band.upper).rev() {
        pts.push_str(&format!("{:.2},{:.2} ", frame.x(t), frame.y(v)));
    }
    svg.push_str(&format!(
        "<polygon points=\"{}\" fill=\"#1f77b4\" opacity=\"0.2\" stroke=\"none\"/>\n",
        pts.trim_end()
    ));
    let mut d = String::new();
    for (k, (&t, &v)) in band.times.iter().zip(&band.point).enumerate() {
        d.push_str(&format!("{} {:.2} {:.2}", if k == 0 { "M" } else { " L" }, frame.x(t), frame.y(v)));
    }
    svg.push_str(&format!(
        "<path d=\"{d}\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.6\"/>\n"
    ));
    let zero_y = frame.y(0.0);
    svg.push_str(&format!(
        "<line x1=\"{:.2}\" y1=\"{zero_y:.2}\" x2=\"{:.2}\" y2=\"{zero_y:.2}\" stroke=\"#888\" stroke-dasharray=\"4 3\"/>\n",
        frame.x(0.0),
        frame.x(t_max)
    ));
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svg_is_well_formed_enough() {
        let c = StepCurve::new(1.0, vec![0.5, 1.0], vec![0.6, 0.2]);
        let svg = curves_svg(&[("survival", &c)], 2.0, "demo");
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert!(svg.contains("survival"));
    }
}
