//! Spike tables as CSV.
//!
//! ```text
//! # rows=1
//! # cols=1
//! # t_samp_seconds=9.09090909090909e-7
//! # mode=analytic
//! # events=3
//! pixel_index,branch_id,spike_time_ns
//! 0,0,22.585235
//! ```
//!
//! Times are absolute nanoseconds with exactly six decimals. An encoding
//! without events is written as the metadata preamble alone. `events` is
//! optional on read; when present a table with a different row count is
//! rejected as truncated.

use std::io::{self, Write};

use thiserror::Error;

use crate::codec::{EncodeMode, EncodedImage};
use crate::simulator::{SpikeEvent, SpikeTrain};

pub const HEADER: &str = "pixel_index,branch_id,spike_time_ns";
const TIME_DECIMALS: usize = 6;
/// Upper bound on windows accepted from a table, about 16.7M pixels.
const MAX_WINDOWS: usize = 1 << 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpikeTableError {
    #[error("line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("missing metadata key `{0}`")]
    MissingMetadata(&'static str),
    #[error("table declares {expected} spike rows but has {found}")]
    EventCountMismatch { expected: usize, found: usize },
}

pub fn write_spike_table<W: Write>(enc: &EncodedImage, mut sink: W) -> io::Result<()> {
    writeln!(sink, "# rows={}", enc.rows)?;
    writeln!(sink, "# cols={}", enc.cols)?;
    writeln!(sink, "# t_samp_seconds={:e}", enc.t_samp)?;
    writeln!(sink, "# mode={}", enc.mode)?;
    writeln!(sink, "# events={}", enc.event_count())?;
    if enc.event_count() == 0 {
        return Ok(());
    }
    writeln!(sink, "{HEADER}")?;
    for (j, train) in enc.windows.iter().enumerate() {
        for ev in &train.events {
            writeln!(sink, "{},{},{:.*}", j, ev.branch_id, TIME_DECIMALS, ev.t * 1e9)?;
        }
    }
    sink.flush()
}

#[derive(Default)]
struct Preamble {
    rows: Option<usize>,
    cols: Option<usize>,
    t_samp: Option<f64>,
    mode: Option<EncodeMode>,
    events: Option<usize>,
}

fn malformed(line: usize, reason: impl Into<String>) -> SpikeTableError {
    SpikeTableError::MalformedRow {
        line,
        reason: reason.into(),
    }
}

fn parse_time_ns(field: &str, line: usize) -> Result<f64, SpikeTableError> {
    let decimals = field.split_once('.').map(|(_, frac)| frac);
    match decimals {
        Some(frac) if frac.len() == TIME_DECIMALS && frac.bytes().all(|b| b.is_ascii_digit()) => {}
        _ => return Err(malformed(line, format!("spike time {field:?} must have {TIME_DECIMALS} decimals"))),
    }
    let ns: f64 = field
        .parse()
        .map_err(|_| malformed(line, format!("bad spike time {field:?}")))?;
    if !(ns.is_finite() && ns >= 0.0) {
        return Err(malformed(line, format!("bad spike time {field:?}")));
    }
    Ok(ns)
}

pub fn read_spike_table(source: &str) -> Result<EncodedImage, SpikeTableError> {
    let mut meta = Preamble::default();
    let mut lines = source.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    let mut header_seen = false;
    for (n, line) in lines.by_ref() {
        if let Some(rest) = line.strip_prefix('#') {
            let (key, value) = rest
                .trim()
                .split_once('=')
                .ok_or_else(|| malformed(n, "metadata line must be `# key=value`"))?;
            let bad = || malformed(n, format!("bad value for {key}: {value:?}"));
            match key.trim() {
                "rows" => meta.rows = Some(value.trim().parse().map_err(|_| bad())?),
                "cols" => meta.cols = Some(value.trim().parse().map_err(|_| bad())?),
                "t_samp_seconds" => {
                    let t: f64 = value.trim().parse().map_err(|_| bad())?;
                    if !(t > 0.0 && t.is_finite()) {
                        return Err(bad());
                    }
                    meta.t_samp = Some(t);
                }
                "mode" => meta.mode = Some(value.trim().parse().map_err(|_| bad())?),
                "events" => meta.events = Some(value.trim().parse().map_err(|_| bad())?),
                _ => {}
            }
        } else if line.is_empty() {
            continue;
        } else if line == HEADER {
            header_seen = true;
            break;
        } else {
            return Err(malformed(n, format!("expected header `{HEADER}`, found {line:?}")));
        }
    }
    let rows = meta.rows.ok_or(SpikeTableError::MissingMetadata("rows"))?;
    let cols = meta.cols.ok_or(SpikeTableError::MissingMetadata("cols"))?;
    let t_samp = meta.t_samp.ok_or(SpikeTableError::MissingMetadata("t_samp_seconds"))?;
    let mode = meta.mode.ok_or(SpikeTableError::MissingMetadata("mode"))?;
    let count = rows
        .checked_mul(cols)
        .filter(|&c| c <= MAX_WINDOWS)
        .ok_or_else(|| malformed(0, format!("{rows}x{cols} image is too large")))?;

    let mut windows = vec![SpikeTrain::default(); count];
    let mut found = 0;
    if header_seen {
        let mut last: Option<(usize, f64)> = None;
        for (n, line) in lines {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let [pix, branch, time] = fields.as_slice() else {
                return Err(malformed(n, format!("expected 3 fields, found {}", fields.len())));
            };
            let pixel_index: usize = pix
                .parse()
                .map_err(|_| malformed(n, format!("bad pixel index {pix:?}")))?;
            if pixel_index >= count {
                return Err(malformed(n, format!("pixel index {pixel_index} outside {rows}x{cols} image")));
            }
            let branch_id: usize = branch
                .parse()
                .map_err(|_| malformed(n, format!("bad branch id {branch:?}")))?;
            let ns = parse_time_ns(time, n)?;
            if let Some((lp, lt)) = last {
                if (pixel_index, ns) < (lp, lt) {
                    return Err(malformed(n, "rows not sorted by (pixel_index, spike_time_ns)"));
                }
            }
            last = Some((pixel_index, ns));
            windows[pixel_index].events.push(SpikeEvent { branch_id, t: ns * 1e-9 });
            found += 1;
        }
    }
    if let Some(expected) = meta.events {
        if expected != found {
            return Err(SpikeTableError::EventCountMismatch { expected, found });
        }
    }
    for w in &mut windows {
        *w = SpikeTrain::sorted(std::mem::take(&mut w.events));
    }
    Ok(EncodedImage {
        rows,
        cols,
        t_samp,
        mode,
        windows,
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{encode_image, ImageU8};
    use crate::model::{BranchSet, DeviceParams};

    fn table(enc: &EncodedImage) -> String {
        let mut buf = Vec::new();
        write_spike_table(enc, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn single_pixel_table() {
        let p = DeviceParams::default().without_leak();
        let enc = encode_image(&ImageU8::filled(1, 1, 0), &BranchSet::default(), &p, None, EncodeMode::Analytic).unwrap();
        let text = table(&enc);
        let data: Vec<&str> = text.lines().skip_while(|l| *l != HEADER).skip(1).collect();
        // 22.585234627 / 45.170469255 / 67.755703882 ns
        assert_eq!(data, ["0,0,22.585235", "0,1,45.170469", "0,2,67.755704"]);
        assert!(text.starts_with("# rows=1\n# cols=1\n# t_samp_seconds="));
    }

    #[test]
    fn empty_encoding_is_preamble_only() {
        let enc = encode_image(&ImageU8::default(), &BranchSet::default(), &DeviceParams::default(), None, EncodeMode::Analytic).unwrap();
        let text = table(&enc);
        assert_eq!(text.lines().count(), 5);
        assert!(text.lines().all(|l| l.starts_with("# ")));
        let back = read_spike_table(&text).unwrap();
        assert_eq!((back.rows, back.cols), (0, 0));
        assert!(back.windows.is_empty());
    }

    #[test]
    fn read_back() {
        let p = DeviceParams::default();
        let enc = encode_image(&ImageU8::test_card(), &BranchSet::default(), &p, None, EncodeMode::Simulated).unwrap();
        let back = read_spike_table(&table(&enc)).unwrap();
        assert_eq!(back.t_samp, enc.t_samp);
        assert_eq!(back.mode, EncodeMode::Simulated);
        assert_eq!(back.windows.len(), 256);
        for (a, b) in back.windows.iter().zip(&enc.windows) {
            assert_eq!(a.len(), b.len());
            for (x, y) in a.events.iter().zip(&b.events) {
                assert_eq!(x.branch_id, y.branch_id);
                assert!((x.t - y.t).abs() <= 0.5e-15 * (1.0 + 1e-6));
            }
        }
    }

    #[test]
    fn misspelled_header() {
        let text = "# rows=1\n# cols=1\n# t_samp_seconds=1e-6\n# mode=analytic\npixel_idx,branch_id,spike_time_ns\n";
        assert!(matches!(read_spike_table(text), Err(SpikeTableError::MalformedRow { line: 5, .. })));
    }

    #[test]
    fn dropped_rows_detected() {
        let enc = encode_image(&ImageU8::filled(1, 2, 30), &BranchSet::default(), &DeviceParams::default(), None, EncodeMode::Analytic).unwrap();
        let text = table(&enc);
        let cut = &text[..text.trim_end().rfind('\n').unwrap() + 1];
        assert_eq!(
            read_spike_table(cut),
            Err(SpikeTableError::EventCountMismatch { expected: 6, found: 5 })
        );
        let without_count: String = text.lines().filter(|l| !l.starts_with("# events")).map(|l| format!("{l}\n")).collect();
        assert_eq!(read_spike_table(&without_count).unwrap().event_count(), 6);
    }

    #[test]
    fn missing_metadata() {
        let text = "# rows=1\n# t_samp_seconds=1e-6\n# mode=analytic\n";
        assert_eq!(read_spike_table(text), Err(SpikeTableError::MissingMetadata("cols")));
    }

    #[test]
    fn bad_rows() {
        let pre = "# rows=1\n# cols=2\n# t_samp_seconds=1e-6\n# mode=sim\npixel_index,branch_id,spike_time_ns\n";
        for row in ["0,0,22.58", "0,0", "2,0,1.000000", "x,0,1.000000", "0,0,-1.000000", "0,0,1.0000000"] {
            let err = read_spike_table(&format!("{pre}{row}\n")).unwrap_err();
            assert!(matches!(err, SpikeTableError::MalformedRow { line: 6, .. }), "{row}: {err}");
        }
        let unsorted = format!("{pre}1,0,1000.000000\n0,0,10.000000\n");
        assert!(read_spike_table(&unsorted).is_err());
    }
}
