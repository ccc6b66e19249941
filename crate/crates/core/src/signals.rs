//! Uniformly sampled traces, the square-wave message source and CSV
//! persistence.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// A uniformly sampled real-valued time series.
///
/// Sample `k` sits at `t0 + k * dt`. Samples are always finite and there is
/// always at least one of them.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    dt: f64,
    t0: f64,
    samples: Vec<f64>,
}

impl Trace {
    pub fn new(dt: f64, t0: f64, samples: Vec<f64>) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sample interval must be positive, got {dt}"
            )));
        }
        if !t0.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "start time must be finite, got {t0}"
            )));
        }
        if samples.is_empty() {
            return Err(Error::InvalidParameter(
                "trace must hold at least one sample".into(),
            ));
        }
        if let Some((index, &value)) = samples.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Trace { dt, t0, samples })
    }

    /// Builds a trace from samples the caller already knows to be finite.
    pub(crate) fn from_finite(dt: f64, t0: f64, samples: Vec<f64>) -> Self {
        debug_assert!(dt > 0.0 && !samples.is_empty());
        debug_assert!(samples.iter().all(|v| v.is_finite()));
        Trace { dt, t0, samples }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time_at(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    /// Time of the last sample.
    pub fn end_time(&self) -> f64 {
        self.time_at(self.samples.len() - 1)
    }

    /// Index of the sample nearest to time `t`, if it lies within the trace.
    pub fn index_at(&self, t: f64) -> Option<usize> {
        let k = ((t - self.t0) / self.dt).round();
        if k < 0.0 || k >= self.samples.len() as f64 {
            None
        } else {
            Some(k as usize)
        }
    }

    /// Applies `f` samplewise, keeping the time base.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Trace> {
        Trace::new(
            self.dt,
            self.t0,
            self.samples.iter().map(|&v| f(v)).collect(),
        )
    }

    /// True when `other` has the same time base and length.
    pub fn same_grid(&self, other: &Trace) -> bool {
        self.samples.len() == other.samples.len() && self.dt == other.dt && self.t0 == other.t0
    }
}

/// Square-wave message parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MessageSpec {
    /// Hz.
    pub frequency: f64,
    pub low_level: f64,
    pub high_level: f64,
    /// Fraction of each period spent at `high_level`.
    pub duty: f64,
    /// Fraction of a period in `[0, 1)` added to the phase at `t = 0`.
    pub phase: f64,
}

impl Default for MessageSpec {
    fn default() -> Self {
        MessageSpec {
            frequency: 6222.0,
            low_level: 0.0,
            high_level: 5.0,
            duty: 0.5,
            phase: 0.0,
        }
    }
}

impl MessageSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.frequency.is_finite() && self.frequency > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "message frequency must be positive, got {}",
                self.frequency
            )));
        }
        if !(self.low_level.is_finite() && self.high_level.is_finite())
            || self.low_level >= self.high_level
        {
            return Err(Error::InvalidParameter(format!(
                "message levels must satisfy low < high, got {} and {}",
                self.low_level, self.high_level
            )));
        }
        if !(self.duty > 0.0 && self.duty < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "duty must lie in (0, 1), got {}",
                self.duty
            )));
        }
        if !(0.0..1.0).contains(&self.phase) {
            return Err(Error::InvalidParameter(format!(
                "phase must lie in [0, 1), got {}",
                self.phase
            )));
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        1.0 / self.frequency
    }

    /// Duration of one message bit: each half period of the square wave
    /// carries one bit.
    pub fn bit_period(&self) -> f64 {
        0.5 / self.frequency
    }

    /// Logic value of the message at time `t`.
    pub fn bit_at(&self, t: f64) -> bool {
        let x = t * self.frequency + self.phase;
        x - x.floor() < self.duty
    }

    pub fn level_at(&self, t: f64) -> f64 {
        if self.bit_at(t) {
            self.high_level
        } else {
            self.low_level
        }
    }

    /// Mid-bit sampling instants falling inside `[from, to]`, in order.
    pub fn mid_bit_times(&self, from: f64, to: f64) -> Vec<f64> {
        // Bit j spans (j/2 - phase)/f .. ((j+1)/2 - phase)/f.
        let first = ((from * self.frequency + self.phase) * 2.0 - 0.5).ceil() as i64;
        let mut out = Vec::new();
        let mut j = first;
        loop {
            let t = ((j as f64 + 0.5) * 0.5 - self.phase) / self.frequency;
            if t > to {
                break;
            }
            if t >= from {
                out.push(t);
            }
            j += 1;
        }
        out
    }
}

/// Samples the square-wave message on `n` points spaced `dt` apart from
/// `t = 0`.
pub fn generate_message(spec: &MessageSpec, dt: f64, n: usize) -> Result<Trace> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameter(
            "sample count must be at least 1".into(),
        ));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sample interval must be positive, got {dt}"
        )));
    }
    let half_period = 0.5 / spec.frequency;
    if dt >= half_period {
        return Err(Error::Undersampled { dt, half_period });
    }
    let samples = (0..n).map(|k| spec.level_at(k as f64 * dt)).collect();
    Ok(Trace::from_finite(dt, 0.0, samples))
}

/// Shortest representation that parses back to the same `f64`.
pub(crate) fn format_number(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Writes `contents` to `path` via a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidParameter(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    let mut file = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    file.write_all(contents).map_err(|e| Error::io(&tmp, e))?;
    file.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Serializes traces sharing one time base into CSV text.
///
/// Header is `t,<name1>,<name2>,...`; the first column is time in seconds.
pub fn traces_to_csv(traces: &[(String, Trace)]) -> Result<Vec<u8>> {
    let (_, first) = traces
        .first()
        .ok_or_else(|| Error::TraceMismatch("no traces to write".into()))?;
    for (name, tr) in traces {
        if !tr.same_grid(first) {
            return Err(Error::TraceMismatch(format!(
                "trace `{name}` has {} samples at dt={} but `{}` has {} at dt={}",
                tr.len(),
                tr.dt(),
                traces[0].0,
                first.len(),
                first.dt()
            )));
        }
    }
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let mut header = vec!["t".to_string()];
    header.extend(traces.iter().map(|(n, _)| n.clone()));
    wtr.write_record(&header).map_err(csv_to_io)?;
    let mut row = Vec::with_capacity(traces.len() + 1);
    for k in 0..first.len() {
        row.clear();
        row.push(format_number(first.time_at(k)));
        row.extend(traces.iter().map(|(_, tr)| format_number(tr.samples()[k])));
        wtr.write_record(&row).map_err(csv_to_io)?;
    }
    wtr.into_inner()
        .map_err(|e| Error::io(PathBuf::new(), e.into_error()))
}

fn csv_to_io(e: csv::Error) -> Error {
    Error::io(PathBuf::new(), std::io::Error::other(e))
}

/// Writes named traces to `path` as CSV.
pub fn write_trace_csv(traces: &[(String, Trace)], path: &Path) -> Result<()> {
    let bytes = traces_to_csv(traces)?;
    write_atomic(path, &bytes)
}

/// Reads a CSV written by [`write_trace_csv`]; column order is preserved.
pub fn read_trace_csv(path: &Path) -> Result<Vec<(String, Trace)>> {
    let malformed = |reason: String| Error::MalformedCsv {
        path: path.to_path_buf(),
        reason,
    };
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file);
    let header = rdr.headers().map_err(|e| malformed(e.to_string()))?.clone();
    if header.len() < 2 || &header[0] != "t" {
        return Err(malformed(
            "header must start with `t` followed by at least one column".into(),
        ));
    }
    let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut times = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| malformed(e.to_string()))?;
        if record.len() != header.len() {
            return Err(malformed(format!(
                "row {} has {} fields, expected {}",
                line + 2,
                record.len(),
                header.len()
            )));
        }
        for (col, field) in record.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                malformed(format!(
                    "row {}: cannot parse `{field}` as a number",
                    line + 2
                ))
            })?;
            if !v.is_finite() {
                return Err(malformed(format!(
                    "row {}: non-finite value `{field}`",
                    line + 2
                )));
            }
            if col == 0 {
                times.push(v);
            } else {
                columns[col - 1].push(v);
            }
        }
    }
    if times.len() < 2 {
        return Err(malformed(
            "at least two rows are needed to recover the sample interval".into(),
        ));
    }
    let t0 = times[0];
    let dt = (times[times.len() - 1] - t0) / (times.len() - 1) as f64;
    if dt.is_nan() || dt <= 0.0 {
        return Err(malformed("time column is not increasing".into()));
    }
    for (k, &t) in times.iter().enumerate() {
        let expected = t0 + k as f64 * dt;
        if (t - expected).abs() > 1e-6 * dt {
            return Err(malformed(format!(
                "time column is not uniform at row {}",
                k + 2
            )));
        }
    }
    names
        .into_iter()
        .zip(columns)
        .map(|(name, samples)| Ok((name, Trace::new(dt, t0, samples)?)))
        .collect()
}
