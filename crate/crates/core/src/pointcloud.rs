//! Timestamped LiDAR scans, file ingestion, window superposition and
//! per-frame restriction.
//!
//! All scans are assumed to be registered in one static sensor frame. Every
//! frame carries a single timestamp which its points inherit.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::numfmt::format_sig9;

/// Header of the scan CSV format.
pub const SCAN_CSV_HEADER: &str = "frame,t,x,y,z";
/// Header of the timestamp sidecar in a PCD series directory.
pub const PCD_TIMESTAMPS_HEADER: &str = "frame,t";
/// Name of the timestamp sidecar in a PCD series directory.
pub const PCD_TIMESTAMPS_FILE: &str = "timestamps.csv";

#[derive(Debug, Error)]
pub enum CloudError {
    #[error("{source_name}:{line}: malformed field `{field}`: {reason}")]
    MalformedRecord {
        source_name: String,
        line: usize,
        field: String,
        reason: String,
    },
    #[error("frame timestamps are not strictly increasing: frame {frame} has t={current} after t={previous}")]
    NonMonotonicTimestamps {
        frame: usize,
        previous: f64,
        current: f64,
    },
    #[error("scan sequence contains no frames")]
    EmptySequence,
    #[error("frame indices are not contiguous: expected frame {expected}, found {found}")]
    FrameGap { expected: usize, found: usize },
    #[error("frame {frame}: {reason}")]
    InvalidFrame { frame: usize, reason: String },
    #[error("window [{start}, {end}] is out of range for a {frames}-frame sequence")]
    WindowOutOfRange {
        start: usize,
        end: usize,
        frames: usize,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = CloudError> = std::result::Result<T, E>;

/// A single LiDAR return.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Timestamp of the originating frame, in seconds.
    pub t: f64,
    pub frame_index: usize,
}

impl Point {
    pub fn position(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    fn bit_key(&self) -> (usize, u64, u64, u64, u64) {
        (
            self.frame_index,
            self.t.to_bits(),
            self.x.to_bits(),
            self.y.to_bits(),
            self.z.to_bits(),
        )
    }
}

/// One scan. May legitimately be empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    index: usize,
    timestamp: f64,
    points: Vec<Point>,
}

impl Frame {
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn timestamp(&self) -> f64 {
        self.timestamp
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Inclusive frame range `start..=end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct WindowSpec {
    pub start: usize,
    pub end: usize,
}

impl WindowSpec {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, frame: usize) -> bool {
        (self.start..=self.end).contains(&frame)
    }

    pub fn frames(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end
    }
}

/// Ordered, timestamped scans with contiguous indices `0..f`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanSequence {
    frames: Vec<Frame>,
    /// `offsets[i]` is the position of frame i's first point in the
    /// full-window superposition; the last entry is the total point count.
    offsets: Vec<usize>,
}

impl ScanSequence {
    /// Build a sequence from `(timestamp, positions)` pairs given in frame
    /// order. Frame `i` of the result is the i-th entry.
    pub fn from_frames<I>(frames: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, Vec<[f64; 3]>)>,
    {
        let mut out: Vec<Frame> = Vec::new();
        for (index, (timestamp, positions)) in frames.into_iter().enumerate() {
            if !timestamp.is_finite() || timestamp < 0.0 {
                return Err(CloudError::InvalidFrame {
                    frame: index,
                    reason: format!("timestamp {timestamp} must be finite and non-negative"),
                });
            }
            if let Some(prev) = out.last() {
                if timestamp <= prev.timestamp {
                    return Err(CloudError::NonMonotonicTimestamps {
                        frame: index,
                        previous: prev.timestamp,
                        current: timestamp,
                    });
                }
            }
            let mut points = Vec::with_capacity(positions.len());
            for p in positions {
                if !p.iter().all(|c| c.is_finite()) {
                    return Err(CloudError::InvalidFrame {
                        frame: index,
                        reason: format!("non-finite coordinate {p:?}"),
                    });
                }
                points.push(Point {
                    x: p[0],
                    y: p[1],
                    z: p[2],
                    t: timestamp,
                    frame_index: index,
                });
            }
            out.push(Frame {
                index,
                timestamp,
                points,
            });
        }
        if out.is_empty() {
            return Err(CloudError::EmptySequence);
        }
        let mut offsets = Vec::with_capacity(out.len() + 1);
        let mut acc = 0;
        for f in &out {
            offsets.push(acc);
            acc += f.len();
        }
        offsets.push(acc);
        Ok(Self {
            frames: out,
            offsets,
        })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn frame(&self, index: usize) -> Option<&Frame> {
        self.frames.get(index)
    }

    /// Number of frames, `f`.
    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn point_count(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn timestamps(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.timestamp).collect()
    }

    /// Window covering every frame.
    pub fn full_window(&self) -> WindowSpec {
        WindowSpec::new(0, self.frames.len() - 1)
    }

    /// Range of indices occupied by the frames of `w` inside the
    /// full-window superposition.
    pub fn point_range(&self, w: WindowSpec) -> Result<std::ops::Range<usize>> {
        self.check_window(w)?;
        Ok(self.offsets[w.start]..self.offsets[w.end + 1])
    }

    /// Frame index of the point at position `i` of the full superposition.
    pub fn frame_of_point(&self, i: usize) -> usize {
        self.offsets.partition_point(|&o| o <= i) - 1
    }

    fn check_window(&self, w: WindowSpec) -> Result<()> {
        if w.start > w.end || w.end >= self.frames.len() {
            return Err(CloudError::WindowOutOfRange {
                start: w.start,
                end: w.end,
                frames: self.frames.len(),
            });
        }
        Ok(())
    }

    /// Union of the points of frames `w.start..=w.end`, in frame order.
    pub fn superimpose(&self, w: WindowSpec) -> Result<PointSet> {
        self.check_window(w)?;
        let points = self.frames[w.start..=w.end]
            .iter()
            .flat_map(|f| f.points.iter().copied())
            .collect();
        Ok(PointSet { points })
    }

    pub fn load(path: &Path, format: ScanFormat) -> Result<Self> {
        match format {
            ScanFormat::Csv => {
                let text = read_to_string(path)?;
                parse_scan_csv(&text, &path.display().to_string())
            }
            ScanFormat::PcdSeries => load_pcd_series(path),
        }
    }

    /// Scan CSV text. Empty frames are written as a row with blank
    /// coordinates so their timestamps survive.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(32 * self.point_count() + 16);
        out.push_str(SCAN_CSV_HEADER);
        out.push('\n');
        for f in &self.frames {
            let t = format_sig9(f.timestamp);
            if f.points.is_empty() {
                let _ = writeln!(out, "{},{},,,", f.index, t);
            }
            for p in &f.points {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    f.index,
                    t,
                    format_sig9(p.x),
                    format_sig9(p.y),
                    format_sig9(p.z)
                );
            }
        }
        out
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        write_file(path, self.to_csv_string().as_bytes())
    }

    /// Write one ASCII PCD per frame plus the timestamp sidecar.
    pub fn save_pcd_series(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|source| CloudError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let mut stamps = String::from(PCD_TIMESTAMPS_HEADER);
        stamps.push('\n');
        for f in &self.frames {
            let _ = writeln!(stamps, "{},{}", f.index, format_sig9(f.timestamp));
            let mut pcd = String::new();
            let n = f.points.len();
            let _ = write!(
                pcd,
                "# .PCD v0.7 - Point Cloud Data file format\nVERSION 0.7\nFIELDS x y z\n\
                 SIZE 8 8 8\nTYPE F F F\nCOUNT 1 1 1\nWIDTH {n}\nHEIGHT 1\n\
                 VIEWPOINT 0 0 0 1 0 0 0\nPOINTS {n}\nDATA ascii\n"
            );
            for p in &f.points {
                let _ = writeln!(
                    pcd,
                    "{} {} {}",
                    format_sig9(p.x),
                    format_sig9(p.y),
                    format_sig9(p.z)
                );
            }
            write_file(&dir.join(pcd_file_name(f.index)), pcd.as_bytes())?;
        }
        write_file(&dir.join(PCD_TIMESTAMPS_FILE), stamps.as_bytes())
    }
}

/// On-disk layout of a scan sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanFormat {
    Csv,
    PcdSeries,
}

impl std::str::FromStr for ScanFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Self::Csv),
            "pcd_series" | "pcd-series" => Ok(Self::PcdSeries),
            other => Err(format!("unknown scan format `{other}` (expected csv or pcd_series)")),
        }
    }
}

pub fn load_sequence(path: &Path, format: ScanFormat) -> Result<ScanSequence> {
    ScanSequence::load(path, format)
}

pub fn pcd_file_name(frame: usize) -> String {
    format!("{frame:06}.pcd")
}

/// A multiset of points, possibly spanning several frames.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointSet {
    points: Vec<Point>,
}

impl PointSet {
    pub fn new(points: Vec<Point>) -> Self {
        Self { points }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }

    /// Cardinality.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points originating from frame `n`. Empty if none.
    pub fn restrict_to_frame(&self, n: usize) -> PointSet {
        PointSet {
            points: self
                .points
                .iter()
                .filter(|p| p.frame_index == n)
                .copied()
                .collect(),
        }
    }

    /// Multiset equality ignoring point order.
    pub fn same_content(&self, other: &PointSet) -> bool {
        if self.len() != other.len() {
            return false;
        }
        let mut a: Vec<_> = self.points.iter().map(Point::bit_key).collect();
        let mut b: Vec<_> = other.points.iter().map(Point::bit_key).collect();
        a.sort_unstable();
        b.sort_unstable();
        a == b
    }
}

impl FromIterator<Point> for PointSet {
    fn from_iter<I: IntoIterator<Item = Point>>(iter: I) -> Self {
        Self {
            points: iter.into_iter().collect(),
        }
    }
}

pub fn superimpose(seq: &ScanSequence, w: WindowSpec) -> Result<PointSet> {
    seq.superimpose(w)
}

pub fn restrict_to_frame(ps: &PointSet, n: usize) -> PointSet {
    ps.restrict_to_frame(n)
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CloudError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| CloudError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn malformed(source_name: &str, line: usize, field: &str, reason: impl Into<String>) -> CloudError {
    CloudError::MalformedRecord {
        source_name: source_name.to_string(),
        line,
        field: field.to_string(),
        reason: reason.into(),
    }
}

fn parse_index(s: &str, source_name: &str, line: usize, field: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| malformed(source_name, line, field, format!("`{s}` is not a frame index")))
}

fn parse_finite(s: &str, source_name: &str, line: usize, field: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| malformed(source_name, line, field, format!("`{s}` is not a number")))?;
    if !v.is_finite() {
        return Err(malformed(source_name, line, field, format!("`{s}` is not finite")));
    }
    Ok(v)
}

fn parse_timestamp(s: &str, source_name: &str, line: usize) -> Result<f64> {
    let t = parse_finite(s, source_name, line, "t")?;
    if t < 0.0 {
        return Err(malformed(source_name, line, "t", "timestamp is negative"));
    }
    Ok(t)
}

fn check_header(first: Option<(usize, &str)>, expected: &str, source_name: &str) -> Result<()> {
    match first {
        Some((_, h)) if h.trim().trim_start_matches('\u{feff}') == expected => Ok(()),
        Some((i, h)) => Err(malformed(
            source_name,
            i + 1,
            "header",
            format!("expected `{expected}`, found `{}`", h.trim()),
        )),
        None => Err(CloudError::EmptySequence),
    }
}

/// Per-frame accumulator keyed by frame index: the timestamp, the line it
/// was first seen on, and the positions.
type FrameRows = BTreeMap<usize, (f64, usize, Vec<[f64; 3]>)>;

fn assemble(rows: FrameRows) -> Result<ScanSequence> {
    if rows.is_empty() {
        return Err(CloudError::EmptySequence);
    }
    let mut frames = Vec::with_capacity(rows.len());
    for (expected, (found, (t, _, positions))) in rows.into_iter().enumerate() {
        if found != expected {
            return Err(CloudError::FrameGap { expected, found });
        }
        frames.push((t, positions));
    }
    ScanSequence::from_frames(frames)
}

fn record_timestamp<'a>(
    rows: &'a mut FrameRows,
    frame: usize,
    t: f64,
    source_name: &str,
    line: usize,
) -> Result<&'a mut Vec<[f64; 3]>> {
    let entry = rows.entry(frame).or_insert((t, line, Vec::new()));
    if entry.0.to_bits() != t.to_bits() {
        return Err(malformed(
            source_name,
            line,
            "t",
            format!(
                "frame {frame} already has t={} (line {}), found t={t}",
                entry.0, entry.1
            ),
        ));
    }
    Ok(&mut entry.2)
}

/// Parse scan CSV text (`frame,t,x,y,z`).
pub fn parse_scan_csv(text: &str, source_name: &str) -> Result<ScanSequence> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    check_header(lines.next(), SCAN_CSV_HEADER, source_name)?;
    let mut rows = FrameRows::new();
    for (i, raw) in lines {
        let line = i + 1;
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 5 {
            return Err(malformed(
                source_name,
                line,
                "row",
                format!("expected 5 fields, found {}", fields.len()),
            ));
        }
        let frame = parse_index(fields[0], source_name, line, "frame")?;
        let t = parse_timestamp(fields[1], source_name, line)?;
        let coords = &fields[2..];
        let positions = record_timestamp(&mut rows, frame, t, source_name, line)?;
        if coords.iter().all(|c| c.trim().is_empty()) {
            continue;
        }
        let mut p = [0.0; 3];
        for (k, name) in ["x", "y", "z"].iter().enumerate() {
            p[k] = parse_finite(coords[k], source_name, line, name)?;
        }
        positions.push(p);
    }
    assemble(rows)
}

/// Parse an ASCII PCD document, returning its x/y/z triples.
pub fn parse_pcd_ascii(text: &str, source_name: &str) -> Result<Vec<[f64; 3]>> {
    let mut fields: Vec<String> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    let mut declared_points: Option<usize> = None;
    let mut width_height: (Option<usize>, Option<usize>) = (None, None);
    let mut data_line = None;
    let lines: Vec<&str> = text.lines().collect();
    for (i, raw) in lines.iter().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let key = it.next().unwrap_or_default().to_ascii_uppercase();
        let rest: Vec<&str> = it.collect();
        let num = |s: &str, f: &str| parse_index(s, source_name, i + 1, f);
        match key.as_str() {
            "FIELDS" => fields = rest.iter().map(|s| s.to_ascii_lowercase()).collect(),
            "COUNT" => {
                counts = rest
                    .iter()
                    .map(|s| num(s, "COUNT"))
                    .collect::<Result<_>>()?
            }
            "POINTS" => declared_points = Some(num(rest.first().unwrap_or(&""), "POINTS")?),
            "WIDTH" => width_height.0 = Some(num(rest.first().unwrap_or(&""), "WIDTH")?),
            "HEIGHT" => width_height.1 = Some(num(rest.first().unwrap_or(&""), "HEIGHT")?),
            "DATA" => {
                let kind = rest.first().copied().unwrap_or("");
                if !kind.eq_ignore_ascii_case("ascii") {
                    return Err(malformed(
                        source_name,
                        i + 1,
                        "DATA",
                        format!("only ascii PCD data is supported, found `{kind}`"),
                    ));
                }
                data_line = Some(i + 1);
                break;
            }
            _ => {}
        }
    }
    let data_start = data_line.ok_or_else(|| malformed(source_name, lines.len(), "DATA", "missing DATA line"))?;
    if counts.is_empty() {
        counts = vec![1; fields.len()];
    }
    if counts.len() != fields.len() {
        return Err(malformed(
            source_name,
            data_start,
            "COUNT",
            "COUNT and FIELDS have different lengths",
        ));
    }
    let mut column = BTreeMap::new();
    let mut offset = 0;
    for (name, c) in fields.iter().zip(&counts) {
        column.insert(name.as_str(), offset);
        offset += c;
    }
    let columns_per_row = offset;
    let mut xyz = [0usize; 3];
    for (k, name) in ["x", "y", "z"].iter().enumerate() {
        xyz[k] = *column
            .get(name)
            .ok_or_else(|| malformed(source_name, data_start, "FIELDS", format!("no `{name}` field")))?;
    }
    let expected = declared_points.or(match width_height {
        (Some(w), Some(h)) => Some(w * h),
        _ => None,
    });
    let mut out = Vec::with_capacity(expected.unwrap_or(0));
    for (i, raw) in lines.iter().enumerate().skip(data_start) {
        if raw.trim().is_empty() {
            continue;
        }
        let line = i + 1;
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        if tokens.len() != columns_per_row {
            return Err(malformed(
                source_name,
                line,
                "row",
                format!("expected {columns_per_row} values, found {}", tokens.len()),
            ));
        }
        let mut p = [0.0; 3];
        for (k, name) in ["x", "y", "z"].iter().enumerate() {
            p[k] = parse_finite(tokens[xyz[k]], source_name, line, name)?;
        }
        out.push(p);
    }
    if let Some(n) = expected {
        if n != out.len() {
            return Err(malformed(
                source_name,
                data_start,
                "POINTS",
                format!("header declares {n} points, data has {}", out.len()),
            ));
        }
    }
    Ok(out)
}

fn load_pcd_series(dir: &Path) -> Result<ScanSequence> {
    let stamps_path = dir.join(PCD_TIMESTAMPS_FILE);
    let stamps_name = stamps_path.display().to_string();
    let text = read_to_string(&stamps_path)?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    check_header(lines.next(), PCD_TIMESTAMPS_HEADER, &stamps_name)?;
    let mut rows = FrameRows::new();
    for (i, raw) in lines {
        let line = i + 1;
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 2 {
            return Err(malformed(
                &stamps_name,
                line,
                "row",
                format!("expected 2 fields, found {}", fields.len()),
            ));
        }
        let frame = parse_index(fields[0], &stamps_name, line, "frame")?;
        let t = parse_timestamp(fields[1], &stamps_name, line)?;
        if rows.contains_key(&frame) {
            return Err(malformed(&stamps_name, line, "frame", format!("frame {frame} listed twice")));
        }
        record_timestamp(&mut rows, frame, t, &stamps_name, line)?;
    }
    for (&frame, entry) in rows.iter_mut() {
        let path = dir.join(pcd_file_name(frame));
        let body = read_to_string(&path)?;
        entry.2 = parse_pcd_ascii(&body, &path.display().to_string())?;
    }
    assemble(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq_5_0_7() -> ScanSequence {
        let frame = |n: usize, off: f64| (0..n).map(|i| [i as f64 + off, 0.0, 1.0]).collect();
        ScanSequence::from_frames(vec![(0.0, frame(5, 0.0)), (0.1, vec![]), (0.2, frame(7, 0.5))])
            .unwrap()
    }

    #[test]
    fn two_row_csv() {
        let seq = parse_scan_csv("frame,t,x,y,z\n0,0.0,1.0,2.0,3.0\n1,0.1,1.1,2.0,3.0\n", "mem").unwrap();
        assert_eq!(seq.frame_count(), 2);
        assert_eq!(seq.frame(0).unwrap().len(), 1);
        assert_eq!(seq.frame(1).unwrap().len(), 1);
        let p = seq.frame(1).unwrap().points()[0];
        assert_eq!((p.x, p.y, p.z, p.t, p.frame_index), (1.1, 2.0, 3.0, 0.1, 1));
    }

    #[test]
    fn nan_coordinate_is_malformed() {
        let err = parse_scan_csv("frame,t,x,y,z\n0,0.0,nan,2.0,3.0\n", "mem").unwrap_err();
        match err {
            CloudError::MalformedRecord { line, field, .. } => {
                assert_eq!(line, 2);
                assert_eq!(field, "x");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_scan_csv("frame,t,x,y,z\n0,0.0,1,inf,3.0\n", "mem").is_err());
    }

    #[test]
    fn rejects_bad_structure() {
        assert!(matches!(
            parse_scan_csv("frame,t,x,y,z\n", "mem"),
            Err(CloudError::EmptySequence)
        ));
        assert!(matches!(parse_scan_csv("", "mem"), Err(CloudError::EmptySequence)));
        assert!(matches!(
            parse_scan_csv("frame,t,x,y,z\n0,0.5,1,2,3\n1,0.2,1,2,3\n", "mem"),
            Err(CloudError::NonMonotonicTimestamps { frame: 1, .. })
        ));
        assert!(matches!(
            parse_scan_csv("frame,t,x,y,z\n0,0.1,1,2,3\n2,0.2,1,2,3\n", "mem"),
            Err(CloudError::FrameGap { expected: 1, found: 2 })
        ));
        assert!(matches!(
            parse_scan_csv("frame,t,x,y,z\n0,0.1,1,2,3\n0,0.2,1,2,3\n", "mem"),
            Err(CloudError::MalformedRecord { line: 3, .. })
        ));
        assert!(matches!(
            parse_scan_csv("t,x,y,z\n0.1,1,2,3\n", "mem"),
            Err(CloudError::MalformedRecord { line: 1, .. })
        ));
        assert!(matches!(
            parse_scan_csv("frame,t,x,y,z\n0,-1,1,2,3\n", "mem"),
            Err(CloudError::MalformedRecord { .. })
        ));
    }

    #[test]
    fn rows_need_not_be_grouped() {
        let seq = parse_scan_csv(
            "frame,t,x,y,z\n1,0.2,5,5,5\n0,0.1,1,1,1\n1,0.2,6,6,6\n",
            "mem",
        )
        .unwrap();
        assert_eq!(seq.frame(0).unwrap().len(), 1);
        assert_eq!(seq.frame(1).unwrap().len(), 2);
    }

    #[test]
    fn empty_frames_survive_csv() {
        let seq = seq_5_0_7();
        let text = seq.to_csv_string();
        assert!(text.contains("\n1,0.1,,,\n"));
        let back = parse_scan_csv(&text, "mem").unwrap();
        assert_eq!(back, seq);
    }

    #[test]
    fn superimpose_counts() {
        let seq = seq_5_0_7();
        assert_eq!(seq.superimpose(WindowSpec::new(0, 2)).unwrap().len(), 12);
        let first = seq.superimpose(WindowSpec::new(0, 0)).unwrap();
        assert_eq!(first.points(), seq.frame(0).unwrap().points());
        assert!(matches!(
            seq.superimpose(WindowSpec::new(1, 3)),
            Err(CloudError::WindowOutOfRange { .. })
        ));
        assert!(matches!(
            seq.superimpose(WindowSpec::new(2, 1)),
            Err(CloudError::WindowOutOfRange { .. })
        ));
    }

    #[test]
    fn restrict_partitions_window() {
        let seq = seq_5_0_7();
        let all = seq.superimpose(seq.full_window()).unwrap();
        assert_eq!(all.restrict_to_frame(2).points(), seq.frame(2).unwrap().points());
        assert!(all.restrict_to_frame(1).is_empty());
        assert!(all.restrict_to_frame(9).is_empty());
        let first = seq.superimpose(WindowSpec::new(0, 0)).unwrap();
        assert!(first.restrict_to_frame(2).is_empty());
    }

    #[test]
    fn point_offsets() {
        let seq = seq_5_0_7();
        assert_eq!(seq.point_range(WindowSpec::new(1, 2)).unwrap(), 5..12);
        assert_eq!(seq.frame_of_point(0), 0);
        assert_eq!(seq.frame_of_point(4), 0);
        assert_eq!(seq.frame_of_point(5), 2);
        assert_eq!(seq.frame_of_point(11), 2);
    }

    #[test]
    fn pcd_header_variants() {
        let text = "# comment\nVERSION .7\nFIELDS x y z intensity normal\nSIZE 4 4 4 4 4\n\
                    TYPE F F F F F\nCOUNT 1 1 1 1 3\nWIDTH 2\nHEIGHT 1\nPOINTS 2\nDATA ascii\n\
                    1 2 3 9 0 0 1\n4 5 6 9 0 0 1\n";
        let pts = parse_pcd_ascii(text, "mem").unwrap();
        assert_eq!(pts, vec![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]);

        let binary = "FIELDS x y z\nPOINTS 0\nDATA binary\n";
        assert!(parse_pcd_ascii(binary, "mem").is_err());
        let short = "FIELDS x y z\nPOINTS 2\nDATA ascii\n1 2 3\n";
        assert!(parse_pcd_ascii(short, "mem").is_err());
        let nan = "FIELDS x y z\nPOINTS 1\nDATA ascii\nnan 2 3\n";
        assert!(parse_pcd_ascii(nan, "mem").is_err());
        let no_z = "FIELDS x y\nPOINTS 1\nDATA ascii\n1 2\n";
        assert!(parse_pcd_ascii(no_z, "mem").is_err());
    }

    #[test]
    fn pcd_series_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let seq = seq_5_0_7();
        seq.save_pcd_series(dir.path()).unwrap();
        assert!(dir.path().join("000002.pcd").exists());
        let back = load_sequence(dir.path(), ScanFormat::PcdSeries).unwrap();
        assert_eq!(back, seq);
    }

    #[test]
    fn constructor_rejects_non_finite() {
        assert!(ScanSequence::from_frames(vec![(0.0, vec![[f64::NAN, 0.0, 0.0]])]).is_err());
        assert!(ScanSequence::from_frames(vec![(f64::INFINITY, vec![])]).is_err());
        assert!(matches!(
            ScanSequence::from_frames(Vec::new()),
            Err(CloudError::EmptySequence)
        ));
    }
}
