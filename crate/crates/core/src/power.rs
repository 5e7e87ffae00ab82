//! Per-neuron power as a function of pixel, interpolated from measured anchors.

use thiserror::Error;

use crate::codec::ImageU8;
use crate::model::Pixel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PowerError {
    #[error("bad power model: {0}")]
    BadModel(String),
}

/// Measured single-neuron power, black to white.
pub const TABLE_ANCHORS_NW: [(u8, f64); 3] = [(0, 701.57), (127, 543.9), (255, 392.1)];

/// Piecewise-linear power curve through `(pixel, nanowatts)` anchors.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerModel {
    anchors: Vec<(u8, f64)>,
}

impl Default for PowerModel {
    fn default() -> Self {
        PowerModel {
            anchors: TABLE_ANCHORS_NW.to_vec(),
        }
    }
}

impl PowerModel {
    /// Anchors must span 0..=255 with strictly increasing pixels and
    /// strictly decreasing positive power.
    pub fn new(anchors: Vec<(u8, f64)>) -> Result<Self, PowerError> {
        if anchors.len() < 2 {
            return Err(PowerError::BadModel("need at least two anchors".into()));
        }
        if anchors.first().map(|a| a.0) != Some(0) || anchors.last().map(|a| a.0) != Some(255) {
            return Err(PowerError::BadModel("anchors must include pixels 0 and 255".into()));
        }
        if anchors.iter().any(|&(_, nw)| !(nw.is_finite() && nw > 0.0)) {
            return Err(PowerError::BadModel("anchor power must be positive and finite".into()));
        }
        for w in anchors.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(PowerError::BadModel(format!(
                    "anchor pixels must be strictly increasing ({} then {})",
                    w[0].0, w[1].0
                )));
            }
            if w[1].1 >= w[0].1 {
                return Err(PowerError::BadModel(format!(
                    "anchor power must strictly decrease ({} nW at {} then {} nW at {})",
                    w[0].1, w[0].0, w[1].1, w[1].0
                )));
            }
        }
        Ok(PowerModel { anchors })
    }

    pub fn anchors(&self) -> &[(u8, f64)] {
        &self.anchors
    }

    /// Power in nanowatts. Exact at anchors.
    pub fn power_nw(&self, p: Pixel) -> f64 {
        let x = p.value();
        let upper = self.anchors.partition_point(|&(ap, _)| ap < x);
        let (x1, y1) = self.anchors[upper];
        if x1 == x || upper == 0 {
            return y1;
        }
        let (x0, y0) = self.anchors[upper - 1];
        let frac = f64::from(x - x0) / f64::from(x1 - x0);
        y0 + frac * (y1 - y0)
    }
}

/// Power of one neuron at a pixel, watts.
pub fn power_of_pixel(p: Pixel, model: &PowerModel) -> f64 {
    model.power_nw(p) * 1e-9
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImagePowerReport {
    /// Watts per pixel, scan order.
    pub per_pixel: Vec<f64>,
    /// Mean watts; `None` for an empty image.
    pub mean: Option<f64>,
    /// `mean * M * N * t_samp`, joules per neuron.
    pub energy: f64,
}

pub fn image_power_report(img: &ImageU8, model: &PowerModel, t_samp: f64) -> ImagePowerReport {
    let per_pixel: Vec<f64> = img.pixels().map(|p| power_of_pixel(p, model)).collect();
    if per_pixel.is_empty() {
        return ImagePowerReport {
            per_pixel,
            mean: None,
            energy: 0.0,
        };
    }
    let mean = per_pixel.iter().sum::<f64>() / per_pixel.len() as f64;
    let energy = mean * per_pixel.len() as f64 * t_samp;
    ImagePowerReport {
        per_pixel,
        mean: Some(mean),
        energy,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchors_exact() {
        let m = PowerModel::default();
        assert_eq!(m.power_nw(Pixel(0)), 701.57);
        assert_eq!(m.power_nw(Pixel(127)), 543.9);
        assert_eq!(m.power_nw(Pixel(255)), 392.1);
        assert_eq!(power_of_pixel(Pixel(0), &m), 701.57 * 1e-9);
    }

    #[test]
    fn interpolated_value() {
        let m = PowerModel::default();
        // 543.9 + 64/128 * (392.1 - 543.9)
        assert!((m.power_nw(Pixel(191)) - 468.0).abs() < 1e-9);
    }

    #[test]
    fn monotone_and_continuous() {
        let m = PowerModel::default();
        let vals: Vec<f64> = Pixel::all().map(|p| m.power_nw(p)).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
        // Largest step is the slope of the steepest segment.
        let max_step = vals.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max);
        assert!(max_step < 157.67 / 127.0 + 1e-9);
    }

    #[test]
    fn bad_models() {
        assert!(PowerModel::new(vec![(0, 5.0)]).is_err());
        assert!(PowerModel::new(vec![(0, 5.0), (200, 4.0)]).is_err());
        assert!(PowerModel::new(vec![(0, 5.0), (100, 6.0), (255, 1.0)]).is_err());
        assert!(PowerModel::new(vec![(0, 5.0), (100, 4.0), (100, 3.0), (255, 1.0)]).is_err());
        assert!(PowerModel::new(vec![(0, 5.0), (255, 1.0)]).is_ok());
    }

    #[test]
    fn image_reports() {
        let m = PowerModel::default();
        let t = 1.0 / 1.1e6;
        let r = image_power_report(&ImageU8::filled(2, 2, 0), &m, t);
        assert!((r.mean.unwrap() - 701.57e-9).abs() < 1e-20);
        assert!((r.energy - 701.57e-9 * 4.0 * t).abs() < 1e-24);

        let r = image_power_report(&ImageU8::filled(3, 1, 191), &m, t);
        assert!((r.mean.unwrap() - 468.0e-9).abs() < 1e-17);

        let r = image_power_report(&ImageU8::default(), &m, t);
        assert_eq!(r.mean, None);
        assert_eq!(r.energy, 0.0);
    }
}
