// SPDX-License-Identifier: MIT OR Apache-2.0

use super::Rgb;
use crate::error::{CvError, Result};

/// HSV to 8-bit RGB with round-half-up channels. Hue wraps modulo 360.
pub fn hsv_to_rgb(h: f64, s: f64, v: f64) -> Result<Rgb> {
    if !h.is_finite() || !(0.0..=1.0).contains(&s) || !(0.0..=1.0).contains(&v) {
        return Err(CvError::InvalidInput(format!(
            "hsv out of range: ({h}, {s}, {v})"
        )));
    }
    let h = h.rem_euclid(360.0);
    let c = v * s;
    let hp = h / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    let q = |ch: f64| ((ch + m) * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8;
    Ok([q(r), q(g), q(b)])
}
