//! Whole-image encoding on the global timeline and the analytic-vs-simulated
//! deviation study.
//!
//! Pixels are scanned row-major. The pixel at flat index `j` owns the enable
//! window `[j * t_samp, (j + 1) * t_samp)`, so an `M x N` image takes
//! `M * N * t_samp` to encode.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{
    branch_integrating_time, decode_pixel_between, interval_closed_form, interval_from_integrating_times,
    validate_params, BranchSet, DecodeTolerance, DeviceParams, ModelError, Pixel, ValidationReport,
};
use crate::simulator::{measure_intervals, simulate_pixel, SimConfig, SimError, SpikeEvent, SpikeTrain};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodecError {
    #[error("invalid configuration:\n{0}")]
    InvalidConfig(ValidationReport),
    #[error("window {window} has {events} spike(s); at least 2 are needed to decode")]
    CorruptWindow { window: usize, events: usize },
    #[error("window {window}: {source}")]
    Model {
        window: usize,
        #[source]
        source: ModelError,
    },
    #[error("window {window}: {source}")]
    Sim {
        window: usize,
        #[source]
        source: SimError,
    },
    #[error("pixel buffer has {len} values, expected {rows}x{cols}")]
    Shape { rows: usize, cols: usize, len: usize },
    #[error("deviation report is empty")]
    EmptyReport,
}

/// Grayscale 8-bit image, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ImageU8 {
    rows: usize,
    cols: usize,
    pixels: Vec<u8>,
}

impl ImageU8 {
    pub fn new(rows: usize, cols: usize, pixels: Vec<u8>) -> Result<Self, CodecError> {
        if rows.checked_mul(cols) != Some(pixels.len()) {
            return Err(CodecError::Shape {
                rows,
                cols,
                len: pixels.len(),
            });
        }
        Ok(ImageU8 { rows, cols, pixels })
    }

    pub fn filled(rows: usize, cols: usize, value: u8) -> Self {
        ImageU8 {
            rows,
            cols,
            pixels: vec![value; rows * cols],
        }
    }

    /// 16x16 card holding every pixel value once, in row-major order.
    pub fn test_card() -> Self {
        ImageU8 {
            rows: 16,
            cols: 16,
            pixels: (0..=255u8).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels(&self) -> impl Iterator<Item = Pixel> + '_ {
        self.pixels.iter().copied().map(Pixel)
    }

    pub fn get(&self, row: usize, col: usize) -> Option<Pixel> {
        if row < self.rows && col < self.cols {
            Some(Pixel(self.pixels[row * self.cols + col]))
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncodeMode {
    /// Spike times from the closed-form integrating time.
    Analytic,
    /// Spike times from the behavioral simulator.
    Simulated,
}

impl EncodeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EncodeMode::Analytic => "analytic",
            EncodeMode::Simulated => "simulated",
        }
    }
}

impl fmt::Display for EncodeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for EncodeMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "analytic" => Ok(EncodeMode::Analytic),
            "sim" | "simulated" => Ok(EncodeMode::Simulated),
            other => Err(format!("unknown mode {other:?} (expected analytic or sim)")),
        }
    }
}

/// A branch that did not spike in a pixel's window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SilentBranch {
    pub window: usize,
    pub branch_id: usize,
}

/// Spike trains for every pixel window of an image.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedImage {
    pub rows: usize,
    pub cols: usize,
    pub t_samp: f64,
    pub mode: EncodeMode,
    /// One train per pixel, in scan order, with absolute spike times.
    pub windows: Vec<SpikeTrain>,
    pub warnings: Vec<SilentBranch>,
}

impl EncodedImage {
    /// Total encoding time, `rows * cols * t_samp`.
    pub fn duration(&self) -> f64 {
        (self.rows * self.cols) as f64 * self.t_samp
    }

    pub fn window_start(&self, index: usize) -> f64 {
        index as f64 * self.t_samp
    }

    pub fn event_count(&self) -> usize {
        self.windows.iter().map(SpikeTrain::len).sum()
    }
}

fn encode_window(
    index: usize,
    p: Pixel,
    bset: &BranchSet,
    params: &DeviceParams,
    sim: &SimConfig,
    mode: EncodeMode,
    window_start: f64,
) -> Result<(SpikeTrain, Vec<SilentBranch>), CodecError> {
    match mode {
        EncodeMode::Analytic => {
            let mut events = Vec::with_capacity(bset.len());
            let mut silent = Vec::new();
            for (branch_id, b) in bset.branches().iter().enumerate() {
                match branch_integrating_time(p, b, params) {
                    Ok(x) if x < params.t_samp => events.push(SpikeEvent {
                        branch_id,
                        t: window_start + x,
                    }),
                    _ => silent.push(SilentBranch {
                        window: index,
                        branch_id,
                    }),
                }
            }
            Ok((SpikeTrain::sorted(events), silent))
        }
        EncodeMode::Simulated => {
            let out = simulate_pixel(p, bset, params, sim, window_start)
                .map_err(|source| CodecError::Sim { window: index, source })?;
            let silent = out
                .silent_branches
                .into_iter()
                .map(|branch_id| SilentBranch {
                    window: index,
                    branch_id,
                })
                .collect();
            Ok((out.train, silent))
        }
    }
}

/// Encode an image into per-pixel spike trains.
///
/// `sim` is only consulted in simulated mode; `None` uses the default step.
pub fn encode_image(
    img: &ImageU8,
    bset: &BranchSet,
    params: &DeviceParams,
    sim: Option<&SimConfig>,
    mode: EncodeMode,
) -> Result<EncodedImage, CodecError> {
    let report = validate_params(bset, params);
    if !report.is_ok() {
        return Err(CodecError::InvalidConfig(report));
    }
    let sim = sim.copied().unwrap_or_else(|| SimConfig::for_params(params));
    let encoded: Vec<_> = img
        .pixels
        .par_iter()
        .enumerate()
        .map(|(j, &v)| encode_window(j, Pixel(v), bset, params, &sim, mode, j as f64 * params.t_samp))
        .collect::<Result<_, _>>()?;
    let mut windows = Vec::with_capacity(encoded.len());
    let mut warnings = Vec::new();
    for (train, silent) in encoded {
        windows.push(train);
        warnings.extend(silent);
    }
    Ok(EncodedImage {
        rows: img.rows,
        cols: img.cols,
        t_samp: params.t_samp,
        mode,
        windows,
        warnings,
    })
}

/// Median of integer decodes; even counts average the middle pair, rounding half up.
fn median_pixel(mut values: Vec<u8>) -> u8 {
    values.sort_unstable();
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        let (a, b) = (u16::from(values[n / 2 - 1]), u16::from(values[n / 2]));
        (a + b).div_ceil(2) as u8
    }
}

/// Decode one window: every consecutive pair of spikes yields one pixel estimate.
pub fn decode_window(
    window: usize,
    train: &SpikeTrain,
    bset: &BranchSet,
    params: &DeviceParams,
    tol: DecodeTolerance,
) -> Result<Pixel, CodecError> {
    if train.len() < 2 {
        return Err(CodecError::CorruptWindow {
            window,
            events: train.len(),
        });
    }
    let intervals = measure_intervals(train).map_err(|source| CodecError::Sim { window, source })?;
    let decodes = train
        .events
        .windows(2)
        .zip(intervals)
        .map(|(pair, d)| {
            decode_pixel_between(d, pair[0].branch_id, pair[1].branch_id, bset, params, tol).map(Pixel::value)
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|source| CodecError::Model { window, source })?;
    Ok(Pixel(median_pixel(decodes)))
}

/// Reconstruct the image from its spike trains.
pub fn decode_image(enc: &EncodedImage, bset: &BranchSet, params: &DeviceParams) -> Result<ImageU8, CodecError> {
    let expected = enc.rows * enc.cols;
    if enc.windows.len() != expected {
        return Err(CodecError::Shape {
            rows: enc.rows,
            cols: enc.cols,
            len: enc.windows.len(),
        });
    }
    let tol = DecodeTolerance::default();
    let pixels = enc
        .windows
        .iter()
        .enumerate()
        .map(|(j, train)| decode_window(j, train, bset, params, tol).map(Pixel::value))
        .collect::<Result<Vec<_>, _>>()?;
    ImageU8::new(enc.rows, enc.cols, pixels)
}

/// One analytic/simulated interval pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationRow {
    pub pixel: Pixel,
    pub interval_index: usize,
    pub analytic: f64,
    pub simulated: f64,
}

impl DeviationRow {
    /// `100 * |simulated - analytic| / analytic`.
    pub fn percent_deviation(&self) -> f64 {
        100.0 * (self.simulated - self.analytic).abs() / self.analytic
    }
}

/// Analytic vs simulated intervals per pixel, ordered by (pixel, interval).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DeviationReport {
    pub rows: Vec<DeviationRow>,
    pub interval_count: usize,
}

impl DeviationReport {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows for one interval index, in pixel order.
    pub fn interval(&self, index: usize) -> impl Iterator<Item = &DeviationRow> {
        self.rows.iter().filter(move |r| r.interval_index == index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationSummary {
    pub max_percent: f64,
    pub mean_percent: f64,
}

/// The leak-omitted model interval used as the analytic column of a sweep.
///
/// Closed form for shared weights, otherwise the leak-free integrating-time
/// difference.
fn leak_omitted_interval(p: Pixel, index: usize, bset: &BranchSet, params: &DeviceParams) -> Result<f64, ModelError> {
    match interval_closed_form(p, index, bset, params) {
        Err(ModelError::MixedWeights { .. }) => {
            interval_from_integrating_times(p, index, bset, &params.without_leak())
        }
        other => other,
    }
}

/// Analytic (leak-omitted closed form) and simulated intervals for every
/// pixel in `pixels` and every interval index.
pub fn sweep_intervals(
    pixels: impl IntoIterator<Item = Pixel>,
    bset: &BranchSet,
    params: &DeviceParams,
    sim: &SimConfig,
) -> Result<DeviationReport, CodecError> {
    let report = validate_params(bset, params);
    if !report.is_ok() {
        return Err(CodecError::InvalidConfig(report));
    }
    let pixels: Vec<Pixel> = pixels.into_iter().collect();
    let per_pixel: Vec<Vec<DeviationRow>> = pixels
        .par_iter()
        .map(|&p| {
            let window = usize::from(p.value());
            let out = simulate_pixel(p, bset, params, sim, 0.0).map_err(|source| CodecError::Sim { window, source })?;
            if !out.silent_branches.is_empty() {
                return Err(CodecError::Sim {
                    window,
                    source: SimError::NonSpiking,
                });
            }
            let simulated = measure_intervals(&out.train).map_err(|source| CodecError::Sim { window, source })?;
            simulated
                .into_iter()
                .enumerate()
                .map(|(i, s)| {
                    let analytic = leak_omitted_interval(p, i, bset, params)
                        .map_err(|source| CodecError::Model { window, source })?;
                    Ok(DeviationRow {
                        pixel: p,
                        interval_index: i,
                        analytic,
                        simulated: s,
                    })
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    Ok(DeviationReport {
        rows: per_pixel.into_iter().flatten().collect(),
        interval_count: bset.interval_count(),
    })
}

/// Max and mean percent deviation over every row.
pub fn deviation_summary(report: &DeviationReport) -> Result<DeviationSummary, CodecError> {
    if report.rows.is_empty() {
        return Err(CodecError::EmptyReport);
    }
    let (max, sum) = report
        .rows
        .iter()
        .map(DeviationRow::percent_deviation)
        .fold((0.0f64, 0.0f64), |(m, s), d| (m.max(d), s + d));
    Ok(DeviationSummary {
        max_percent: max,
        mean_percent: sum / report.rows.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leak_free() -> DeviceParams {
        DeviceParams::default().without_leak()
    }

    #[test]
    fn single_pixel_encoding() {
        let p = leak_free();
        let img = ImageU8::filled(1, 1, 0);
        let enc = encode_image(&img, &BranchSet::default(), &p, None, EncodeMode::Analytic).unwrap();
        let times: Vec<f64> = enc.windows[0].events.iter().map(|e| e.t).collect();
        let want = [2.258_523_462_734_688_7e-8, 4.517_046_925_469_377_4e-8, 6.775_570_388_204_066e-8];
        for (t, w) in times.iter().zip(want) {
            assert!(((t - w) / w).abs() < 1e-12);
        }
        assert!((enc.duration() - 9.090_909_090_909_091e-7).abs() < 1e-20);
    }

    #[test]
    fn empty_image() {
        let img = ImageU8::new(0, 0, vec![]).unwrap();
        let enc = encode_image(&img, &BranchSet::default(), &DeviceParams::default(), None, EncodeMode::Simulated).unwrap();
        assert!(enc.windows.is_empty());
        assert_eq!(enc.duration(), 0.0);
        assert_eq!(decode_image(&enc, &BranchSet::default(), &DeviceParams::default()).unwrap(), img);
    }

    #[test]
    fn image_shape_checked() {
        assert!(matches!(ImageU8::new(2, 2, vec![0; 3]), Err(CodecError::Shape { .. })));
        let img = ImageU8::new(2, 3, (0..6).collect()).unwrap();
        assert_eq!(img.get(1, 0), Some(Pixel(3)));
        assert_eq!(img.get(2, 0), None);
    }

    #[test]
    fn invalid_config_refused() {
        let p = DeviceParams {
            t_samp: 100e-9,
            ..DeviceParams::default()
        };
        let err = encode_image(&ImageU8::filled(1, 1, 0), &BranchSet::default(), &p, None, EncodeMode::Analytic);
        assert!(matches!(err, Err(CodecError::InvalidConfig(_))));
    }

    #[test]
    fn corrupt_window() {
        let p = DeviceParams::default();
        let bset = BranchSet::default();
        let mut enc = encode_image(&ImageU8::filled(1, 2, 9), &bset, &p, None, EncodeMode::Analytic).unwrap();
        enc.windows[1].events.truncate(1);
        assert_eq!(
            decode_image(&enc, &bset, &p),
            Err(CodecError::CorruptWindow { window: 1, events: 1 })
        );
    }

    #[test]
    fn decode_survives_missing_middle_branch() {
        let p = DeviceParams::default();
        let bset = BranchSet::default();
        let mut enc = encode_image(&ImageU8::filled(1, 1, 201), &bset, &p, None, EncodeMode::Analytic).unwrap();
        enc.windows[0].events.remove(1);
        assert_eq!(decode_image(&enc, &bset, &p).unwrap().as_bytes(), &[201]);
    }

    #[test]
    fn median_of_decodes() {
        assert_eq!(median_pixel(vec![3, 200, 4]), 4);
        assert_eq!(median_pixel(vec![10, 11]), 11);
        assert_eq!(median_pixel(vec![10, 12]), 11);
        assert_eq!(median_pixel(vec![7]), 7);
    }

    #[test]
    fn round_trip_both_modes() {
        let bset = BranchSet::default();
        let card = ImageU8::test_card();
        for params in [DeviceParams::default(), leak_free()] {
            for mode in [EncodeMode::Analytic, EncodeMode::Simulated] {
                let enc = encode_image(&card, &bset, &params, None, mode).unwrap();
                assert!(enc.warnings.is_empty());
                assert_eq!(decode_image(&enc, &bset, &params).unwrap(), card, "{mode}");
            }
        }
    }

    #[test]
    fn sweep_shapes() {
        let p = leak_free();
        let bset = BranchSet::default();
        let sim = SimConfig::for_params(&p);
        let empty = sweep_intervals(std::iter::empty(), &bset, &p, &sim).unwrap();
        assert!(empty.is_empty());
        assert_eq!(deviation_summary(&empty), Err(CodecError::EmptyReport));

        let one = sweep_intervals([Pixel(0)], &bset, &p, &sim).unwrap();
        assert_eq!(one.rows.len(), 2);
        for r in &one.rows {
            assert!(((r.analytic - 2.258_523_462_734_688_7e-8) / r.analytic).abs() < 1e-12);
            assert!(r.percent_deviation() < 1e-4);
        }
    }

    #[test]
    fn identity_comparison_is_zero() {
        let p = leak_free();
        let bset = BranchSet::default();
        let rows = Pixel::all()
            .map(|px| {
                let a = interval_closed_form(px, 0, &bset, &p).unwrap();
                DeviationRow {
                    pixel: px,
                    interval_index: 0,
                    analytic: a,
                    simulated: a,
                }
            })
            .collect();
        let report = DeviationReport { rows, interval_count: 1 };
        let s = deviation_summary(&report).unwrap();
        assert_eq!(s.max_percent, 0.0);
        assert_eq!(s.mean_percent, 0.0);
    }

    #[test]
    fn leak_deviation_matches_charging_time_oracle() {
        // Brute force over all pixels: the leaky charging-time difference
        // against the leak-omitted closed form. mpmath gives
        // max 0.758490050208 %, mean 0.339138964227 %.
        let p = DeviceParams::default();
        let bset = BranchSet::default();
        let report = sweep_intervals(Pixel::all(), &bset, &p, &SimConfig::for_params(&p)).unwrap();
        let s = deviation_summary(&report).unwrap();
        assert!((s.max_percent - 0.758_490_050_208_393).abs() < 1e-6);
        assert!((s.mean_percent - 0.339_138_964_226_710_4).abs() < 1e-6);
    }
}
