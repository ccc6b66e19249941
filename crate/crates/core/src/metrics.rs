//! Synchronization and decode quality measures.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::signals::{MessageSpec, Trace};

/// Correlation at or below which a pair counts as anti-synchronized.
pub const ANTISYNC_THRESHOLD: f64 = -0.9;

/// Wrong-valued runs shorter than this fraction of a bit are glitches.
pub const GLITCH_FRACTION: f64 = 0.1;

/// Decoded samples above this level read as logic 1.
pub const DECODE_THRESHOLD: f64 = 2.5;

/// Fewest mid-bit samples a BER estimate may rest on.
pub const MIN_BITS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncReport {
    pub ber: f64,
    pub ber_polarity_agnostic: f64,
    /// RMS of the transmitter/receiver difference on the comparator input.
    pub sync_rms: f64,
    pub correlation: f64,
    pub antisync: bool,
    /// Seconds the decoded stream trails the message.
    pub alignment_lag: f64,
    pub glitches: usize,
}

/// Mid-bit comparison counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BitErrors {
    pub bits: usize,
    pub errors: usize,
    /// Errors against the complemented decoded stream.
    pub inverted_errors: usize,
}

impl BitErrors {
    pub fn ber(&self) -> f64 {
        self.errors as f64 / self.bits as f64
    }

    pub fn ber_polarity_agnostic(&self) -> f64 {
        self.errors.min(self.inverted_errors) as f64 / self.bits as f64
    }
}

fn first_index_at_or_after(tr: &Trace, t: f64) -> usize {
    let k = ((t - tr.t0()) / tr.dt() - 1e-9).ceil();
    if k <= 0.0 {
        0
    } else {
        (k as usize).min(tr.len())
    }
}

fn lag_samples(lag: f64, dt: f64) -> i64 {
    (lag / dt).round() as i64
}

fn require_same_grid(a: &Trace, b: &Trace) -> Result<()> {
    if a.same_grid(b) {
        Ok(())
    } else {
        Err(Error::TraceMismatch(format!(
            "traces differ in time base: {} samples at dt={} vs {} at dt={}",
            a.len(),
            a.dt(),
            b.len(),
            b.dt()
        )))
    }
}

/// Lag (seconds, multiple of `dt`) in `[-max_lag, max_lag]` that maximizes
/// the normalized cross-correlation of `signal` against `reference`.
///
/// A positive lag means `signal` trails `reference`.
pub fn align_lag(reference: &Trace, signal: &Trace, max_lag: f64) -> Result<f64> {
    require_same_grid(reference, signal)?;
    let n = reference.len();
    let dt = reference.dt();
    let max_k = ((max_lag / dt).floor().max(0.0) as usize).min(n.saturating_sub(2));

    let center = |x: &[f64]| {
        let m = x.iter().sum::<f64>() / x.len() as f64;
        x.iter().map(|v| v - m).collect::<Vec<f64>>()
    };
    let a = center(reference.samples());
    let b = center(signal.samples());
    let is_flat = |x: &[f64]| x.iter().all(|&v| v == x[0]);
    if is_flat(reference.samples()) || is_flat(signal.samples()) {
        return Err(Error::Degenerate("cannot align a constant trace".into()));
    }

    // cross[l] = sum_k a[k] b[k + l] for l in -max_k..=max_k, via FFT.
    let size = (n + max_k + 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let mut fa: Vec<Complex<f64>> = a.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fa.resize(size, Complex::new(0.0, 0.0));
    let mut fb: Vec<Complex<f64>> = b.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fb.resize(size, Complex::new(0.0, 0.0));
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x = x.conj() * y;
    }
    inv.process(&mut fa);
    let scale = 1.0 / size as f64;
    let cross = |l: i64| {
        let idx = if l >= 0 {
            l as usize
        } else {
            size - (-l) as usize
        };
        fa[idx].re * scale
    };

    let prefix = |x: &[f64]| {
        let mut s = vec![0.0; x.len() + 1];
        let mut s2 = vec![0.0; x.len() + 1];
        for (i, v) in x.iter().enumerate() {
            s[i + 1] = s[i] + v;
            s2[i + 1] = s2[i] + v * v;
        }
        (s, s2)
    };
    let (sa, sa2) = prefix(&a);
    let (sb, sb2) = prefix(&b);

    let mut best: Option<(f64, i64)> = None;
    for l in -(max_k as i64)..=(max_k as i64) {
        // Overlap: a[i0..i1] against b[i0 + l..i1 + l].
        let (i0, i1) = if l >= 0 {
            (0, n - l as usize)
        } else {
            ((-l) as usize, n)
        };
        let j0 = (i0 as i64 + l) as usize;
        let j1 = (i1 as i64 + l) as usize;
        let m = (i1 - i0) as f64;
        let (sum_a, sum_b) = (sa[i1] - sa[i0], sb[j1] - sb[j0]);
        let var_a = (sa2[i1] - sa2[i0]) - sum_a * sum_a / m;
        let var_b = (sb2[j1] - sb2[j0]) - sum_b * sum_b / m;
        if var_a <= 0.0 || var_b <= 0.0 {
            continue;
        }
        let r = (cross(l) - sum_a * sum_b / m) / (var_a * var_b).sqrt();
        let better = match best {
            None => true,
            Some((rb, lb)) => r > rb + 1e-12 || (r > rb - 1e-12 && l.abs() < lb.abs()),
        };
        if better {
            best = Some((r, l));
        }
    }
    let (_, l) = best.ok_or_else(|| Error::Degenerate("no lag with non-zero variance".into()))?;
    Ok(l as f64 * dt)
}

/// Compares the message and decoded stream at mid-bit instants after
/// `settle`, reading the decoded stream `lag` seconds later.
pub fn bit_errors(
    message: &Trace,
    decoded: &Trace,
    spec: &MessageSpec,
    lag: f64,
    settle: f64,
) -> Result<BitErrors> {
    require_same_grid(message, decoded)?;
    let msg_threshold = 0.5 * (spec.low_level + spec.high_level);
    let start = settle.max(message.t0());
    let mut counts = BitErrors {
        bits: 0,
        errors: 0,
        inverted_errors: 0,
    };
    for t in spec.mid_bit_times(start, message.end_time()) {
        let (Some(mi), Some(di)) = (message.index_at(t), decoded.index_at(t + lag)) else {
            continue;
        };
        let sent = message.samples()[mi] > msg_threshold;
        let got = decoded.samples()[di] > DECODE_THRESHOLD;
        counts.bits += 1;
        if sent != got {
            counts.errors += 1;
        } else {
            counts.inverted_errors += 1;
        }
    }
    if counts.bits < MIN_BITS {
        return Err(Error::TooFewBits {
            found: counts.bits,
            needed: MIN_BITS,
        });
    }
    Ok(counts)
}

/// Plain bit error rate; see [`bit_errors`] for the polarity-agnostic rate.
pub fn bit_error_rate(
    message: &Trace,
    decoded: &Trace,
    spec: &MessageSpec,
    lag: f64,
    settle: f64,
) -> Result<f64> {
    bit_errors(message, decoded, spec, lag, settle).map(|c| c.ber())
}

fn post_settle<'a>(tx: &'a Trace, rx: &'a Trace, settle: f64) -> Result<(&'a [f64], &'a [f64])> {
    require_same_grid(tx, rx)?;
    let k = first_index_at_or_after(tx, settle);
    if tx.len() - k < 2 {
        return Err(Error::Degenerate(
            "fewer than two samples after settling".into(),
        ));
    }
    Ok((&tx.samples()[k..], &rx.samples()[k..]))
}

/// RMS of `tx - rx` over samples at or after `settle`.
pub fn sync_error_rms(tx: &Trace, rx: &Trace, settle: f64) -> Result<f64> {
    let (a, b) = post_settle(tx, rx, settle)?;
    Ok(rms_difference(a, b))
}

pub(crate) fn rms_difference(a: &[f64], b: &[f64]) -> f64 {
    let ss: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (ss / a.len() as f64).sqrt()
}

/// Pearson correlation of `tx` and `rx` over samples at or after `settle`.
pub fn correlation(tx: &Trace, rx: &Trace, settle: f64) -> Result<f64> {
    let (a, b) = post_settle(tx, rx, settle)?;
    pearson(a, b)
}

pub(crate) fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    let constant = |v: &[f64]| v.iter().all(|x| *x == v[0]);
    if constant(a) || constant(b) || saa == 0.0 || sbb == 0.0 {
        return Err(Error::Degenerate("correlation of a constant trace".into()));
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

pub fn is_antisync(correlation: f64) -> bool {
    correlation <= ANTISYNC_THRESHOLD
}

/// A maximal run of decoded samples disagreeing with the aligned message.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WrongRun {
    /// Index into the message trace.
    pub start: usize,
    pub len: usize,
}

/// Maximal wrong-valued runs of the decoded stream (shifted back by `lag`)
/// against the message, from `settle` onwards.
pub fn wrong_runs(
    decoded: &Trace,
    message: &Trace,
    spec: &MessageSpec,
    lag: f64,
    settle: f64,
) -> Result<Vec<WrongRun>> {
    require_same_grid(message, decoded)?;
    let msg_threshold = 0.5 * (spec.low_level + spec.high_level);
    let shift = lag_samples(lag, message.dt());
    let first = first_index_at_or_after(message, settle) as i64;
    let k0 = first.max(-shift).max(0) as usize;
    let k1 = (message.len() as i64)
        .min(message.len() as i64 - shift)
        .max(0) as usize;
    let mut runs = Vec::new();
    let mut open: Option<usize> = None;
    for k in k0..k1 {
        let sent = message.samples()[k] > msg_threshold;
        let got = decoded.samples()[(k as i64 + shift) as usize] > DECODE_THRESHOLD;
        match (sent != got, open) {
            (true, None) => open = Some(k),
            (false, Some(s)) => {
                runs.push(WrongRun {
                    start: s,
                    len: k - s,
                });
                open = None;
            }
            _ => {}
        }
    }
    if let Some(s) = open {
        runs.push(WrongRun {
            start: s,
            len: k1 - s,
        });
    }
    Ok(runs)
}

/// Longest run, in samples, still counted as a glitch.
pub fn glitch_width_limit(spec: &MessageSpec, dt: f64) -> usize {
    let limit = GLITCH_FRACTION * spec.bit_period() / dt;
    let nearest = limit.round();
    if (limit - nearest).abs() < 1e-9 * nearest.max(1.0) {
        (nearest as usize).saturating_sub(1)
    } else {
        limit.floor() as usize
    }
}

/// Number of wrong-valued runs shorter than a tenth of a bit.
pub fn count_glitches(
    decoded: &Trace,
    message: &Trace,
    spec: &MessageSpec,
    lag: f64,
    settle: f64,
) -> Result<usize> {
    let runs = wrong_runs(decoded, message, spec, lag, settle)?;
    let limit = glitch_width_limit(spec, message.dt());
    Ok(runs.iter().filter(|r| r.len <= limit).count())
}
