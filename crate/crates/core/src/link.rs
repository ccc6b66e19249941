//! Transmitter, channel(s) and receiver assembled into end-to-end links.
//!
//! The transmitter never sees the receiver, so every run integrates the
//! transmitter first, builds the channel signals, adds noise, and then
//! integrates the receiver against the received samples.
//!
//! * Circuit A: one shared line carries the masked output `Vout`; the
//!   receiver's oscillator is driven by the received copy exactly where the
//!   transmitter's own feedback enters.
//! * Circuits B, Ca, Cb: a separate sync line carries one state variable and
//!   the receiver integrates the remaining subsystem with that variable
//!   replaced by the received copy (complete substitution). Received
//!   samples are held constant across each integration step.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{add_noise, ChannelRole, NoisePlacement, NoiseSpec};
use crate::codec::{
    bit_from_voltage, comparator_bit, threshold_decode, xor_mask, CodecParams, FilterSpec, LowPass,
    LOGIC_HIGH,
};
use crate::error::{Error, Result};
use crate::metrics::{self, SyncReport};
use crate::oscillators::{
    check_guard, perturbed_initial_state, rk4_step, rk4_step_driven, ChuaParams, CircuitAParams,
    LorenzLikeParams, DEFAULT_BLOWUP_GUARD,
};
use crate::signals::{format_number, generate_message, MessageSpec, Trace};

/// Longest run, in steps, a single link may request.
pub const MAX_STEPS: f64 = 1e8;

/// ChaCha stream ids for initial conditions; noise uses 1 and 2.
const TX_IC_STREAM: u64 = 3;
const RX_IC_STREAM: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Circuit {
    /// Non-autonomous oscillator, single shared channel.
    A,
    /// Chua-like oscillator, sync on `VC2`, comparator on `VC1`.
    B,
    /// Lorenz-like oscillator, sync on `V1`, comparator on `V3`.
    Ca,
    /// Lorenz-like oscillator, sync on `V3`, comparator on `V1`.
    Cb,
}

impl Circuit {
    pub const ALL: [Circuit; 4] = [Circuit::A, Circuit::B, Circuit::Ca, Circuit::Cb];

    pub fn state_names(&self) -> &'static [&'static str] {
        match self {
            Circuit::A => &["v1", "v2"],
            Circuit::B => &["vc1", "vc2", "il"],
            Circuit::Ca | Circuit::Cb => &["v1", "v2", "v3"],
        }
    }

    /// Index of the state variable feeding the comparator.
    pub fn comparator_index(&self) -> usize {
        match self {
            Circuit::A => 1,
            Circuit::B => 0,
            Circuit::Ca => 2,
            Circuit::Cb => 0,
        }
    }

    /// Index of the state variable sent over the sync channel.
    pub fn sync_index(&self) -> Option<usize> {
        match self {
            Circuit::A => None,
            Circuit::B => Some(1),
            Circuit::Ca => Some(0),
            Circuit::Cb => Some(2),
        }
    }

    pub fn default_filter(&self) -> FilterSpec {
        match self {
            Circuit::A => FilterSpec::Filter2,
            Circuit::B => FilterSpec::Filter1,
            Circuit::Ca | Circuit::Cb => FilterSpec::Filter3,
        }
    }

    pub fn default_dt(&self) -> f64 {
        match self {
            Circuit::A | Circuit::B => 1e-7,
            Circuit::Ca | Circuit::Cb => 1e-8,
        }
    }

    /// Comparator reference: 2 V everywhere except Cb, which uses -20 mV.
    pub fn default_reference(&self) -> f64 {
        match self {
            Circuit::Cb => -0.02,
            _ => 2.0,
        }
    }

    pub fn default_placement(&self) -> NoisePlacement {
        match self {
            Circuit::A => NoisePlacement::SingleSharedChannel,
            _ => NoisePlacement::Both,
        }
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Circuit::A => "a",
            Circuit::B => "b",
            Circuit::Ca => "ca",
            Circuit::Cb => "cb",
        })
    }
}

impl FromStr for Circuit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a" => Ok(Circuit::A),
            "b" => Ok(Circuit::B),
            "ca" => Ok(Circuit::Ca),
            "cb" => Ok(Circuit::Cb),
            other => Err(Error::Config(format!(
                "unknown circuit `{other}` (expected a, b, ca or cb)"
            ))),
        }
    }
}

/// Everything needed to reproduce one link run.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkConfig {
    pub circuit: Circuit,
    pub message: MessageSpec,
    pub codec: CodecParams,
    pub filter: FilterSpec,
    pub noise: NoiseSpec,
    pub dt: f64,
    pub duration: f64,
    /// Transmitter run-in before `t = 0`, so the receiver starts against a
    /// transmitter already on its attractor.
    pub warmup: f64,
    /// Transmitter state at the start of the warm-up; drawn from `seed` when
    /// absent.
    pub tx_initial: Option<Vec<f64>>,
    /// Receiver state at `t = 0`; drawn from `seed` when absent.
    pub rx_initial: Option<Vec<f64>>,
    pub seed: u64,
    pub circuit_a: CircuitAParams,
    pub chua: ChuaParams,
    pub lorenz: LorenzLikeParams,
    pub guard: f64,
}

impl LinkConfig {
    /// Defaults for `circuit`: component tables, per-circuit filter,
    /// reference and step, 20 ms run, noiseless.
    pub fn for_circuit(circuit: Circuit) -> Self {
        LinkConfig {
            circuit,
            message: MessageSpec::default(),
            codec: CodecParams {
                vo: circuit.default_reference(),
                ..CodecParams::default()
            },
            filter: circuit.default_filter(),
            noise: NoiseSpec::noiseless(circuit.default_placement()),
            dt: circuit.default_dt(),
            duration: 20e-3,
            warmup: 2e-3,
            tx_initial: None,
            rx_initial: None,
            seed: 0,
            circuit_a: CircuitAParams::default(),
            chua: ChuaParams::default(),
            lorenz: LorenzLikeParams::default(),
            guard: DEFAULT_BLOWUP_GUARD,
        }
    }

    /// Sets both the initial-condition seed and the noise seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.noise.seed = seed;
        self
    }

    pub fn with_noise(mut self, amplitude_percent: f64) -> Self {
        self.noise.amplitude_percent = amplitude_percent;
        self
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    pub fn warmup_steps(&self) -> usize {
        (self.warmup / self.dt).round() as usize
    }

    /// Start of the scored window: 10% of the run, at least 2 ms when the
    /// run allows it.
    pub fn settle_time(&self) -> f64 {
        (0.1 * self.duration).max(2e-3_f64.min(0.5 * self.duration))
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        positive("dt", self.dt)?;
        positive("duration", self.duration)?;
        positive("guard", self.guard)?;
        if !(self.warmup.is_finite() && self.warmup >= 0.0) {
            return Err(Error::Config(format!(
                "warmup must be non-negative, got {}",
                self.warmup
            )));
        }
        if (self.duration + self.warmup) / self.dt > MAX_STEPS {
            return Err(Error::Config(format!(
                "run needs {:.3e} steps, above the limit of {MAX_STEPS:e}",
                (self.duration + self.warmup) / self.dt
            )));
        }
        self.message.validate()?;
        self.codec.validate()?;
        self.noise.validate()?;
        match (self.circuit, self.noise.placement) {
            (Circuit::A, NoisePlacement::SingleSharedChannel) => {}
            (Circuit::A, p) => {
                return Err(Error::Config(format!(
                    "circuit a has a single shared channel; noise target `{p}` does not apply"
                )))
            }
            (c, NoisePlacement::SingleSharedChannel) => {
                return Err(Error::Config(format!(
                    "noise target `shared` applies only to circuit a, not `{c}`"
                )))
            }
            _ => {}
        }
        match self.circuit {
            Circuit::A => self.circuit_a.validate()?,
            Circuit::B => self.chua.validate()?,
            Circuit::Ca | Circuit::Cb => self.lorenz.validate()?,
        }
        if self.filter != FilterSpec::None {
            LowPass::new(&self.filter, self.dt)?;
        }
        let dim = self.circuit.state_names().len();
        for (name, ic) in [("tx", &self.tx_initial), ("rx", &self.rx_initial)] {
            if let Some(ic) = ic {
                if ic.len() != dim || ic.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Config(format!(
                        "{name} initial state must have {dim} finite components"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Transmitter and receiver initial states, explicit or seeded.
    pub fn initial_states(&self) -> (Vec<f64>, Vec<f64>) {
        let draw = |stream: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            rng.set_stream(stream);
            match self.circuit {
                Circuit::A => perturbed_initial_state::<2, _>(&mut rng).to_vec(),
                _ => perturbed_initial_state::<3, _>(&mut rng).to_vec(),
            }
        };
        (
            self.tx_initial
                .clone()
                .unwrap_or_else(|| draw(TX_IC_STREAM)),
            self.rx_initial
                .clone()
                .unwrap_or_else(|| draw(RX_IC_STREAM)),
        )
    }
}

/// Traces and scores of one run. Every trace shares the same time base.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkResult {
    pub circuit: Circuit,
    pub tx_states: Vec<(String, Trace)>,
    pub rx_states: Vec<(String, Trace)>,
    /// Message `M`.
    pub message: Trace,
    /// Transmitter and receiver keystreams `H` as 0/5 V.
    pub tx_keystream: Trace,
    pub rx_keystream: Trace,
    /// Masked output `Vout` before and after the channel.
    pub info_sent: Trace,
    pub info_received: Trace,
    /// Sync signal before and after the channel (absent for circuit A).
    pub sync_sent: Option<Trace>,
    pub sync_received: Option<Trace>,
    /// Receiver XOR output `Vout2`, filter output `VC` and decoded `VM`.
    pub vout2: Trace,
    pub filter_output: Trace,
    pub decoded_vm: Trace,
    pub settle: f64,
    pub report: SyncReport,
}

impl LinkResult {
    /// Comparator-input state of the transmitter and the receiver.
    pub fn observed_pair(&self) -> (&Trace, &Trace) {
        let i = self.circuit.comparator_index();
        (&self.tx_states[i].1, &self.rx_states[i].1)
    }

    /// Difference of the comparator inputs, transmitter minus receiver.
    pub fn sync_error(&self) -> Trace {
        let (tx, rx) = self.observed_pair();
        let diff = tx
            .samples()
            .iter()
            .zip(rx.samples())
            .map(|(a, b)| a - b)
            .collect();
        Trace::from_finite(tx.dt(), tx.t0(), diff)
    }

    /// Every trace of the run with a CSV column name.
    pub fn named_traces(&self) -> Vec<(String, Trace)> {
        let mut out = vec![
            ("m".to_string(), self.message.clone()),
            ("hs_tx".to_string(), self.tx_keystream.clone()),
            ("hs_rx".to_string(), self.rx_keystream.clone()),
            ("vout".to_string(), self.info_sent.clone()),
            ("vout_rx".to_string(), self.info_received.clone()),
        ];
        if let (Some(s), Some(r)) = (&self.sync_sent, &self.sync_received) {
            out.push(("sync".to_string(), s.clone()));
            out.push(("sync_rx".to_string(), r.clone()));
        }
        out.push(("vout2".to_string(), self.vout2.clone()));
        out.push(("vc".to_string(), self.filter_output.clone()));
        out.push(("vm".to_string(), self.decoded_vm.clone()));
        for (prefix, states) in [("tx_", &self.tx_states), ("rx_", &self.rx_states)] {
            for (name, tr) in states {
                out.push((format!("{prefix}{name}"), tr.clone()));
            }
        }
        out
    }
}

struct TxRun<const N: usize> {
    states: [Vec<f64>; N],
    keystream: Vec<f64>,
    vout: Vec<f64>,
}

struct RxRun<const N: usize> {
    states: [Vec<f64>; N],
    keystream: Vec<f64>,
    vout2: Vec<f64>,
    vc: Vec<f64>,
    vm: Vec<f64>,
}

/// Receiver decode stage: XOR with the local keystream, filter, threshold.
struct Decoder {
    codec: CodecParams,
    filter: Option<LowPass>,
    vc: f64,
}

impl Decoder {
    fn new(cfg: &LinkConfig) -> Result<Self> {
        let filter = match cfg.filter {
            FilterSpec::None => None,
            f => Some(LowPass::new(&f, cfg.dt)?),
        };
        Ok(Decoder {
            codec: cfg.codec,
            filter,
            vc: 0.0,
        })
    }

    /// Returns `(Vout2, VC, VM)` for one sample.
    #[inline]
    fn step(&mut self, received_info: f64, h_rx: bool) -> (f64, f64, f64) {
        let f = bit_from_voltage(received_info, self.codec.decode_threshold);
        let vout2 = xor_mask(f, h_rx, &self.codec);
        self.vc = match &self.filter {
            Some(lp) => lp.step(self.vc, vout2),
            None => vout2,
        };
        (vout2, self.vc, threshold_decode(self.vc, &self.codec))
    }
}

fn keystream_level(h: bool) -> f64 {
    if h {
        LOGIC_HIGH
    } else {
        0.0
    }
}

fn to_array<const N: usize>(v: &[f64]) -> Result<[f64; N]> {
    v.try_into()
        .map_err(|_| Error::Config(format!("expected a {N}-component state")))
}

/// Transmitter pass shared by all circuits.
///
/// `step` advances the state by one step given the masked output on the line.
fn run_transmitter<const N: usize>(
    cfg: &LinkConfig,
    x0: [f64; N],
    cmp_index: usize,
    step: impl Fn(&[f64; N], f64) -> [f64; N],
) -> Result<TxRun<N>> {
    let n = cfg.steps();
    let dt = cfg.dt;
    let w = cfg.warmup_steps();
    let mut x = x0;
    for k in 0..w {
        let t = (k as f64 - w as f64) * dt;
        let h = comparator_bit(x[cmp_index], cfg.codec.vo);
        let vout = xor_mask(cfg.message.bit_at(t), h, &cfg.codec);
        x = step(&x, vout);
        check_guard(&x, cfg.guard, t + dt)?;
    }
    let mut states: [Vec<f64>; N] = std::array::from_fn(|_| Vec::with_capacity(n));
    let mut keystream = Vec::with_capacity(n);
    let mut vout_line = Vec::with_capacity(n);
    for k in 0..n {
        let t = k as f64 * dt;
        let h = comparator_bit(x[cmp_index], cfg.codec.vo);
        let vout = xor_mask(cfg.message.bit_at(t), h, &cfg.codec);
        for (c, v) in states.iter_mut().zip(x) {
            c.push(v);
        }
        keystream.push(keystream_level(h));
        vout_line.push(vout);
        x = step(&x, vout);
        check_guard(&x, cfg.guard, t + dt)?;
    }
    Ok(TxRun {
        states,
        keystream,
        vout: vout_line,
    })
}

/// Receiver pass shared by all circuits.
///
/// `step(x, k)` advances the receiver by one step using received sample `k`.
/// `pin` overwrites the driven component of a recorded state, if any.
fn run_receiver<const N: usize>(
    cfg: &LinkConfig,
    x0: [f64; N],
    cmp_index: usize,
    received_info: &[f64],
    pin: impl Fn(&mut [f64; N], usize),
    step: impl Fn(&[f64; N], usize) -> [f64; N],
) -> Result<RxRun<N>> {
    let n = received_info.len();
    let mut decoder = Decoder::new(cfg)?;
    let mut x = x0;
    let mut out = RxRun {
        states: std::array::from_fn(|_| Vec::with_capacity(n)),
        keystream: Vec::with_capacity(n),
        vout2: Vec::with_capacity(n),
        vc: Vec::with_capacity(n),
        vm: Vec::with_capacity(n),
    };
    for (k, &line) in received_info.iter().enumerate() {
        pin(&mut x, k);
        let h = comparator_bit(x[cmp_index], cfg.codec.vo);
        let (vout2, vc, vm) = decoder.step(line, h);
        for (c, v) in out.states.iter_mut().zip(x) {
            c.push(v);
        }
        out.keystream.push(keystream_level(h));
        out.vout2.push(vout2);
        out.vc.push(vc);
        out.vm.push(vm);
        x = step(&x, k);
        check_guard(&x, cfg.guard, (k + 1) as f64 * cfg.dt)?;
    }
    Ok(out)
}

fn noisy(clean: &Trace, noise: &NoiseSpec, role: ChannelRole) -> Result<Trace> {
    if noise.placement.affects(role) {
        add_noise(clean, noise, role)
    } else {
        Ok(clean.clone())
    }
}

fn trace(cfg: &LinkConfig, samples: Vec<f64>) -> Trace {
    Trace::from_finite(cfg.dt, 0.0, samples)
}

fn named<const N: usize>(cfg: &LinkConfig, states: [Vec<f64>; N]) -> Vec<(String, Trace)> {
    cfg.circuit
        .state_names()
        .iter()
        .zip(states)
        .map(|(name, s)| (name.to_string(), trace(cfg, s)))
        .collect()
}

/// Scores a run: lag alignment, BER, sync error, correlation and glitches.
pub fn evaluate(
    message: &Trace,
    decoded: &Trace,
    tx_observed: &Trace,
    rx_observed: &Trace,
    spec: &MessageSpec,
    settle: f64,
) -> Result<SyncReport> {
    let k = message.index_at(settle).unwrap_or(0);
    let window = |tr: &Trace| Trace::new(tr.dt(), tr.time_at(k), tr.samples()[k..].to_vec());
    let max_lag = 0.25 * spec.bit_period();
    let alignment_lag = match metrics::align_lag(&window(message)?, &window(decoded)?, max_lag) {
        Ok(lag) => lag,
        // A constant decoded stream has no edges to align on.
        Err(Error::Degenerate(_)) => 0.0,
        Err(e) => return Err(e),
    };
    let bits = metrics::bit_errors(message, decoded, spec, alignment_lag, settle)?;
    let correlation = metrics::correlation(tx_observed, rx_observed, settle)?;
    Ok(SyncReport {
        ber: bits.ber(),
        ber_polarity_agnostic: bits.ber_polarity_agnostic(),
        sync_rms: metrics::sync_error_rms(tx_observed, rx_observed, settle)?,
        correlation,
        antisync: metrics::is_antisync(correlation),
        alignment_lag,
        glitches: metrics::count_glitches(decoded, message, spec, alignment_lag, settle)?,
    })
}

#[allow(clippy::too_many_arguments)]
fn assemble<const N: usize>(
    cfg: &LinkConfig,
    message: Trace,
    tx: TxRun<N>,
    rx: RxRun<N>,
    info_sent: Trace,
    info_received: Trace,
    sync: Option<(Trace, Trace)>,
) -> Result<LinkResult> {
    let settle = cfg.settle_time();
    let (sync_sent, sync_received) = match sync {
        Some((s, r)) => (Some(s), Some(r)),
        None => (None, None),
    };
    let mut result = LinkResult {
        circuit: cfg.circuit,
        tx_states: named(cfg, tx.states),
        rx_states: named(cfg, rx.states),
        message,
        tx_keystream: trace(cfg, tx.keystream),
        rx_keystream: trace(cfg, rx.keystream),
        info_sent,
        info_received,
        sync_sent,
        sync_received,
        vout2: trace(cfg, rx.vout2),
        filter_output: trace(cfg, rx.vc),
        decoded_vm: trace(cfg, rx.vm),
        settle,
        report: SyncReport {
            ber: 0.0,
            ber_polarity_agnostic: 0.0,
            sync_rms: 0.0,
            correlation: 0.0,
            antisync: false,
            alignment_lag: 0.0,
            glitches: 0,
        },
    };
    let (tx_obs, rx_obs) = result.observed_pair();
    result.report = evaluate(
        &result.message,
        &result.decoded_vm,
        tx_obs,
        rx_obs,
        &cfg.message,
        settle,
    )?;
    Ok(result)
}

/// Circuit A: one shared line; the received `Vout'` both drives the
/// receiver oscillator and is decoded.
pub fn run_link_a(cfg: &LinkConfig) -> Result<LinkResult> {
    if cfg.circuit != Circuit::A {
        return Err(Error::Config(format!(
            "run_link_a called for circuit {}",
            cfg.circuit
        )));
    }
    cfg.validate()?;
    let p = cfg.circuit_a;
    let (tx0, rx0) = cfg.initial_states();
    let message = generate_message(&cfg.message, cfg.dt, cfg.steps())?;
    let dt = cfg.dt;
    let cmp = Circuit::A.comparator_index();

    let tx = run_transmitter::<2>(cfg, to_array(&tx0)?, cmp, |x, vout| {
        rk4_step(|y| p.deriv(y, vout), x, dt)
    })?;
    let info_sent = trace(cfg, tx.vout.clone());
    let info_received = noisy(&info_sent, &cfg.noise, ChannelRole::Info)?;
    let line = info_received.samples();
    let rx = run_receiver::<2>(
        cfg,
        to_array(&rx0)?,
        cmp,
        line,
        |_, _| {},
        |x, k| rk4_step(|y| p.deriv(y, line[k]), x, dt),
    )?;
    assemble(cfg, message, tx, rx, info_sent, info_received.clone(), None)
}

fn run_drive_response(
    cfg: &LinkConfig,
    rhs: impl Fn(&[f64; 3]) -> [f64; 3] + Copy,
) -> Result<LinkResult> {
    cfg.validate()?;
    let circuit = cfg.circuit;
    let cmp = circuit.comparator_index();
    let sync_index = circuit
        .sync_index()
        .ok_or_else(|| Error::Config(format!("circuit {circuit} has no sync channel")))?;
    let (tx0, rx0) = cfg.initial_states();
    let message = generate_message(&cfg.message, cfg.dt, cfg.steps())?;
    let dt = cfg.dt;

    let tx = run_transmitter::<3>(cfg, to_array(&tx0)?, cmp, |x, _| rk4_step(rhs, x, dt))?;
    let info_sent = trace(cfg, tx.vout.clone());
    let sync_sent = trace(cfg, tx.states[sync_index].clone());
    let info_received = noisy(&info_sent, &cfg.noise, ChannelRole::Info)?;
    let sync_received = noisy(&sync_sent, &cfg.noise, ChannelRole::Sync)?;
    let drive = sync_received.samples();
    let rx = run_receiver::<3>(
        cfg,
        to_array(&rx0)?,
        cmp,
        info_received.samples(),
        |x, k| x[sync_index] = drive[k],
        |x, k| rk4_step_driven(rhs, x, sync_index, drive[k], dt),
    )?;
    assemble(
        cfg,
        message,
        tx,
        rx,
        info_sent,
        info_received.clone(),
        Some((sync_sent, sync_received.clone())),
    )
}

/// Circuit B: Chua-like drive-response link, `VC2` on the sync channel.
pub fn run_link_chua(cfg: &LinkConfig) -> Result<LinkResult> {
    if cfg.circuit != Circuit::B {
        return Err(Error::Config(format!(
            "run_link_chua called for circuit {}",
            cfg.circuit
        )));
    }
    let p = cfg.chua;
    run_drive_response(cfg, move |x| p.deriv(x))
}

/// Circuits Ca and Cb: Lorenz-like drive-response links.
pub fn run_link_lorenz(cfg: &LinkConfig) -> Result<LinkResult> {
    if !matches!(cfg.circuit, Circuit::Ca | Circuit::Cb) {
        return Err(Error::Config(format!(
            "run_link_lorenz called for circuit {}",
            cfg.circuit
        )));
    }
    let coeffs = cfg.lorenz.coefficients();
    run_drive_response(cfg, move |x| coeffs.deriv(x))
}

/// Runs the link selected by `cfg.circuit`.
pub fn run_link(cfg: &LinkConfig) -> Result<LinkResult> {
    match cfg.circuit {
        Circuit::A => run_link_a(cfg),
        Circuit::B => run_link_chua(cfg),
        Circuit::Ca | Circuit::Cb => run_link_lorenz(cfg),
    }
}

/// Seed of repeat `repeat` derived from a base seed (SplitMix64 finalizer).
pub fn derive_seed(base: u64, repeat: u64) -> u64 {
    let mut z = base.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(repeat + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One run of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRun {
    pub circuit: Circuit,
    pub placement: NoisePlacement,
    pub amplitude_pct: f64,
    pub repeat: usize,
    pub seed: u64,
    /// The run's scores, or the error message when it failed.
    pub outcome: std::result::Result<SyncReport, String>,
}

/// Aggregate over the repeats at one amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub circuit: Circuit,
    pub placement: NoisePlacement,
    pub amplitude_pct: f64,
    pub ber_mean: f64,
    pub ber_std: f64,
    pub ber_polarity_agnostic_mean: f64,
    pub sync_rms_mean: f64,
    pub antisync_fraction: f64,
    pub completed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub runs: Vec<SweepRun>,
    pub summary: Vec<SweepSummary>,
}

/// Runs `base` at each amplitude for `repeats` seeds derived from
/// `base.seed`. Repeat `k` uses the same seed at every amplitude. Runs may
/// execute in parallel; results are ordered by amplitude then repeat.
pub fn sweep_noise(base: &LinkConfig, amplitudes: &[f64], repeats: usize) -> Result<SweepOutcome> {
    if amplitudes.is_empty() {
        return Err(Error::Config("amplitude list is empty".into()));
    }
    if let Some(a) = amplitudes.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
        return Err(Error::Config(format!(
            "noise amplitude must be non-negative, got {a}"
        )));
    }
    if repeats == 0 {
        return Err(Error::Config("repeats must be at least 1".into()));
    }
    let jobs: Vec<(f64, usize)> = amplitudes
        .iter()
        .flat_map(|&a| (0..repeats).map(move |r| (a, r)))
        .collect();
    let runs: Vec<SweepRun> = jobs
        .par_iter()
        .map(|&(a, r)| {
            let seed = derive_seed(base.seed, r as u64);
            let cfg = base.clone().with_seed(seed).with_noise(a);
            SweepRun {
                circuit: base.circuit,
                placement: base.noise.placement,
                amplitude_pct: a,
                repeat: r,
                seed,
                outcome: run_link(&cfg)
                    .map(|res| res.report)
                    .map_err(|e| e.to_string()),
            }
        })
        .collect();
    let summary = amplitudes
        .iter()
        .enumerate()
        .map(|(i, &a)| summarize(base, a, &runs[i * repeats..(i + 1) * repeats]))
        .collect();
    Ok(SweepOutcome { runs, summary })
}

fn summarize(base: &LinkConfig, amplitude: f64, runs: &[SweepRun]) -> SweepSummary {
    let ok: Vec<&SyncReport> = runs
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok())
        .collect();
    let n = ok.len() as f64;
    let mean = |f: &dyn Fn(&SyncReport) -> f64| {
        if ok.is_empty() {
            f64::NAN
        } else {
            ok.iter().map(|r| f(r)).sum::<f64>() / n
        }
    };
    let ber_mean = mean(&|r| r.ber);
    let ber_std = if ok.is_empty() {
        f64::NAN
    } else {
        (ok.iter().map(|r| (r.ber - ber_mean).powi(2)).sum::<f64>() / n).sqrt()
    };
    SweepSummary {
        circuit: base.circuit,
        placement: base.noise.placement,
        amplitude_pct: amplitude,
        ber_mean,
        ber_std,
        ber_polarity_agnostic_mean: mean(&|r| r.ber_polarity_agnostic),
        sync_rms_mean: mean(&|r| r.sync_rms),
        antisync_fraction: mean(&|r| if r.antisync { 1.0 } else { 0.0 }),
        completed: ok.len(),
        failed: runs.len() - ok.len(),
    }
}

pub const SWEEP_HEADER: &str =
    "circuit,placement,amplitude_pct,repeat,ber,ber_polarity_agnostic,sync_rms,corr,antisync,glitches,error";

/// Per-run sweep table; failed runs leave the score columns empty and fill
/// `error`.
pub fn sweep_runs_csv(runs: &[SweepRun]) -> Vec<u8> {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for run in runs {
        let prefix = format!(
            "{},{},{},{}",
            run.circuit,
            run.placement,
            format_number(run.amplitude_pct),
            run.repeat
        );
        match &run.outcome {
            Ok(r) => out.push_str(&format!(
                "{prefix},{},{},{},{},{},{},\n",
                format_number(r.ber),
                format_number(r.ber_polarity_agnostic),
                format_number(r.sync_rms),
                format_number(r.correlation),
                r.antisync,
                r.glitches
            )),
            Err(e) => out.push_str(&format!("{prefix},,,,,,,{}\n", csv_escape(e))),
        }
    }
    out.into_bytes()
}

pub const SUMMARY_HEADER: &str = "circuit,placement,amplitude_pct,ber_mean,ber_std,ber_polarity_agnostic_mean,sync_rms_mean,antisync_fraction,completed,failed";

pub fn sweep_summary_csv(summary: &[SweepSummary]) -> Vec<u8> {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for s in summary {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            s.circuit,
            s.placement,
            format_number(s.amplitude_pct),
            format_number(s.ber_mean),
            format_number(s.ber_std),
            format_number(s.ber_polarity_agnostic_mean),
            format_number(s.sync_rms_mean),
            format_number(s.antisync_fraction),
            s.completed,
            s.failed
        ));
    }
    out.into_bytes()
}

/// Two whitespace-separated columns, amplitude and mean BER.
pub fn sweep_plot_data(summary: &[SweepSummary]) -> Vec<u8> {
    let mut out = String::from("# amplitude_pct mean_ber\n");
    for s in summary {
        out.push_str(&format!(
            "{} {}\n",
            format_number(s.amplitude_pct),
            format_number(s.ber_mean)
        ));
    }
    out.into_bytes()
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
