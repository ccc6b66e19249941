//! Vector fields of the three oscillators and the fixed-step integrator.
//!
//! All voltages are in volts, currents in amperes, time in seconds.

use rand::Rng;

use crate::error::{Error, Result};
use crate::signals::Trace;

/// States beyond this magnitude are treated as a diverged integration.
pub const DEFAULT_BLOWUP_GUARD: f64 = 100.0;

/// Longest free run accepted by [`free_run`] unless overridden.
pub const DEFAULT_MAX_DURATION: f64 = 10.0;

fn require_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

/// Component values of the non-autonomous oscillator (circuit A).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitAParams {
    pub r: f64,
    pub rs: f64,
    pub rf: f64,
    pub c: f64,
    pub vsat: f64,
}

impl Default for CircuitAParams {
    fn default() -> Self {
        CircuitAParams {
            r: 10e3,
            rs: 510e3,
            rf: 18e3,
            c: 1e-9,
            vsat: 7.5,
        }
    }
}

impl CircuitAParams {
    pub fn validate(&self) -> Result<()> {
        require_positive("R", self.r)?;
        require_positive("Rs", self.rs)?;
        require_positive("Rf", self.rf)?;
        require_positive("C", self.c)?;
        require_positive("Vsat", self.vsat)
    }

    pub fn time_constant(&self) -> f64 {
        self.r * self.c
    }

    /// `[dV1/dt, dV2/dt]` for state `[V1, V2]` driven by `vout`.
    #[inline]
    pub fn deriv(&self, x: &[f64; 2], vout: f64) -> [f64; 2] {
        let rc = self.r * self.c;
        let loss = self.r / self.rs;
        let v = -(self.r / self.rf) * vout - x[1];
        [(-v - loss * x[0]) / rc, (-x[0] - loss * x[1]) / rc]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CircuitAState {
    pub v1: f64,
    pub v2: f64,
}

impl CircuitAState {
    pub fn to_array(self) -> [f64; 2] {
        [self.v1, self.v2]
    }

    pub fn from_array(x: [f64; 2]) -> Self {
        CircuitAState { v1: x[0], v2: x[1] }
    }
}

/// Time derivative of the circuit A oscillator.
///
/// `vout_drive` is the masked signal entering the inverting amplifier: the
/// transmitter's own output, or the received channel signal at the receiver.
pub fn circuit_a_rhs(
    s: &CircuitAState,
    vout_drive: f64,
    p: &CircuitAParams,
) -> Result<CircuitAState> {
    if !(s.v1.is_finite() && s.v2.is_finite() && vout_drive.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "non-finite input to circuit A field: {s:?}, vout = {vout_drive}"
        )));
    }
    Ok(CircuitAState::from_array(
        p.deriv(&s.to_array(), vout_drive),
    ))
}

/// Component values of the Chua-like oscillator (circuit B).
///
/// `rc_effective = pot_fraction * pot_max`. The diode is built from two
/// negative-impedance converters: `rg1`/`ra` set the first, `rb`/`rg2` the
/// second. With `saturation_segments` off the diode is the three-segment
/// characteristic alone; with it on, the outer segments where the first
/// converter saturates are added as well (slope `1/ra + 1/rb` beyond
/// `rg1 / (ra + rg1) * esat`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChuaParams {
    pub c1: f64,
    pub c2: f64,
    pub l: f64,
    pub pot_fraction: f64,
    pub pot_max: f64,
    pub ra: f64,
    pub rb: f64,
    pub rg1: f64,
    pub rg2: f64,
    pub esat: f64,
    pub saturation_segments: bool,
}

impl Default for ChuaParams {
    fn default() -> Self {
        ChuaParams {
            c1: 10e-9,
            c2: 100e-9,
            l: 18e-3,
            pot_fraction: 0.5,
            pot_max: 2e3,
            ra: 220.0,
            rb: 22e3,
            rg1: 2.2e3,
            rg2: 3.3e3,
            esat: 7.5,
            saturation_segments: true,
        }
    }
}

impl ChuaParams {
    pub fn validate(&self) -> Result<()> {
        require_positive("C1", self.c1)?;
        require_positive("C2", self.c2)?;
        require_positive("L", self.l)?;
        require_positive("RA", self.ra)?;
        require_positive("RB", self.rb)?;
        require_positive("Rg1", self.rg1)?;
        require_positive("Rg2", self.rg2)?;
        require_positive("Esat", self.esat)?;
        require_positive("pot max", self.pot_max)?;
        if !(self.pot_fraction > 0.0 && self.pot_fraction <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "pot fraction must lie in (0, 1], got {}",
                self.pot_fraction
            )));
        }
        Ok(())
    }

    pub fn rc_effective(&self) -> f64 {
        self.pot_fraction * self.pot_max
    }

    /// Coupling conductance `G = 1/Rc`.
    pub fn coupling(&self) -> f64 {
        1.0 / self.rc_effective()
    }

    /// Outer slope of the three-segment characteristic.
    pub fn m0(&self) -> f64 {
        1.0 / self.rb - 1.0 / self.rg1
    }

    /// Inner slope.
    pub fn m1(&self) -> f64 {
        -(1.0 / self.rg1 + 1.0 / self.rg2)
    }

    /// Inner breakpoint.
    pub fn bp(&self) -> f64 {
        self.rg2 / (self.rb + self.rg2) * self.esat
    }

    /// Slope once both converters saturate.
    pub fn m2(&self) -> f64 {
        1.0 / self.ra + 1.0 / self.rb
    }

    /// Breakpoint where the first converter saturates.
    pub fn saturation_breakpoint(&self) -> f64 {
        self.rg1 / (self.ra + self.rg1) * self.esat
    }

    /// `[dVC1/dt, dVC2/dt, diL/dt]` for state `[VC1, VC2, iL]`.
    #[inline]
    pub fn deriv(&self, x: &[f64; 3]) -> [f64; 3] {
        let g = self.coupling();
        let [vc1, vc2, il] = *x;
        [
            (g * (vc2 - vc1) - chua_nonlinearity(vc1, self)) / self.c1,
            (g * (vc1 - vc2) + il) / self.c2,
            -vc2 / self.l,
        ]
    }
}

/// Current drawn by the Chua diode at voltage `v`.
#[inline]
pub fn chua_nonlinearity(v: f64, p: &ChuaParams) -> f64 {
    let (m0, m1, bp) = (p.m0(), p.m1(), p.bp());
    let mut i = m0 * v + 0.5 * (m1 - m0) * ((v + bp).abs() - (v - bp).abs());
    if p.saturation_segments {
        let e = p.saturation_breakpoint();
        if v > e {
            i += (p.m2() - m0) * (v - e);
        } else if v < -e {
            i += (p.m2() - m0) * (v + e);
        }
    }
    i
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChuaState {
    pub vc1: f64,
    pub vc2: f64,
    pub il: f64,
}

impl ChuaState {
    pub fn to_array(self) -> [f64; 3] {
        [self.vc1, self.vc2, self.il]
    }

    pub fn from_array(x: [f64; 3]) -> Self {
        ChuaState {
            vc1: x[0],
            vc2: x[1],
            il: x[2],
        }
    }
}

pub fn chua_rhs(s: &ChuaState, p: &ChuaParams) -> ChuaState {
    ChuaState::from_array(p.deriv(&s.to_array()))
}

/// How the coefficients of the Lorenz-like circuit are read from its
/// component values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LorenzForm {
    /// Coefficients exactly as printed for the circuit. The `V3` term of the
    /// `V1` equation and the bilinear term of the `V3` equation lack a
    /// resistance in the numerator; with these values the flow collapses
    /// onto a slow line and never oscillates.
    AsPrinted,
    /// Same circuit with the two missing numerators restored: the `V1`
    /// equation becomes `-(R50/(Rx C R)) (V1 + V3)` and the bilinear `V3`
    /// coefficient `(R/(Rx C R200)) (1 + R30/Rx)`. Chaotic with the default
    /// component values.
    #[default]
    Consistent,
}

/// Component values of the Lorenz-like oscillator (circuit C).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorenzLikeParams {
    pub r: f64,
    pub r50: f64,
    pub rx: f64,
    pub r200: f64,
    pub r30: f64,
    pub r3: f64,
    pub r6: f64,
    pub c: f64,
    pub form: LorenzForm,
}

impl Default for LorenzLikeParams {
    fn default() -> Self {
        LorenzLikeParams {
            r: 10e3,
            r50: 50e3,
            rx: 1e3,
            r200: 200e3,
            r30: 30e3,
            r3: 3e3,
            r6: 6e3,
            c: 100e-9,
            form: LorenzForm::default(),
        }
    }
}

/// Expanded coefficients of the Lorenz-like field:
///
/// ```text
/// dV1/dt = -a11 V1 - a13 V3
/// dV2/dt = -a22 V2 + k2 V1 V3
/// dV3/dt = -a31 V1 - k3 V1 V2
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorenzCoefficients {
    pub a11: f64,
    pub a13: f64,
    pub a22: f64,
    pub k2: f64,
    pub a31: f64,
    pub k3: f64,
}

impl LorenzLikeParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("R", self.r),
            ("R50", self.r50),
            ("Rx", self.rx),
            ("R200", self.r200),
            ("R30", self.r30),
            ("R3", self.r3),
            ("R6", self.r6),
            ("C", self.c),
        ] {
            require_positive(name, v)?;
        }
        Ok(())
    }

    /// Base rate `1/(Rx C)`.
    pub fn base_rate(&self) -> f64 {
        1.0 / (self.rx * self.c)
    }

    pub fn coefficients(&self) -> LorenzCoefficients {
        let rxc = self.rx * self.c;
        let gain = 1.0 + self.r30 / self.rx;
        let a11 = self.r50 / (rxc * self.r);
        let (a13, k3) = match self.form {
            LorenzForm::AsPrinted => (1.0 / (rxc * self.r), gain / (rxc * self.r200)),
            LorenzForm::Consistent => (a11, self.r / (rxc * self.r200) * gain),
        };
        LorenzCoefficients {
            a11,
            a13,
            a22: self.r6 / (rxc * self.r3),
            k2: gain / rxc,
            a31: self.r200 / (rxc * self.r),
            k3,
        }
    }
}

impl LorenzCoefficients {
    /// `[dV1/dt, dV2/dt, dV3/dt]` for state `[V1, V2, V3]`.
    #[inline]
    pub fn deriv(&self, x: &[f64; 3]) -> [f64; 3] {
        let [v1, v2, v3] = *x;
        [
            -self.a11 * v1 - self.a13 * v3,
            -self.a22 * v2 + self.k2 * v1 * v3,
            -self.a31 * v1 - self.k3 * v1 * v2,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LorenzLikeState {
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
}

impl LorenzLikeState {
    pub fn to_array(self) -> [f64; 3] {
        [self.v1, self.v2, self.v3]
    }

    pub fn from_array(x: [f64; 3]) -> Self {
        LorenzLikeState {
            v1: x[0],
            v2: x[1],
            v3: x[2],
        }
    }
}

pub fn lorenz_like_rhs(s: &LorenzLikeState, p: &LorenzLikeParams) -> LorenzLikeState {
    LorenzLikeState::from_array(p.coefficients().deriv(&s.to_array()))
}

/// One classical fourth-order Runge-Kutta step.
///
/// Exogenous inputs are whatever `rhs` captures; they stay fixed across the
/// four stages.
#[inline]
pub fn rk4_step<const N: usize>(
    rhs: impl Fn(&[f64; N]) -> [f64; N],
    x: &[f64; N],
    dt: f64,
) -> [f64; N] {
    let offset = |k: &[f64; N], h: f64| {
        let mut y = *x;
        for i in 0..N {
            y[i] += h * k[i];
        }
        y
    };
    let k1 = rhs(x);
    let k2 = rhs(&offset(&k1, 0.5 * dt));
    let k3 = rhs(&offset(&k2, 0.5 * dt));
    let k4 = rhs(&offset(&k3, dt));
    let mut out = *x;
    for i in 0..N {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// RK4 step of a drive-response subsystem: component `driven` is pinned to
/// `value` and only the remaining components evolve.
#[inline]
pub fn rk4_step_driven<const N: usize>(
    rhs: impl Fn(&[f64; N]) -> [f64; N],
    x: &[f64; N],
    driven: usize,
    value: f64,
    dt: f64,
) -> [f64; N] {
    let mut start = *x;
    start[driven] = value;
    let pinned = |y: &[f64; N]| {
        let mut y = *y;
        y[driven] = value;
        let mut d = rhs(&y);
        d[driven] = 0.0;
        d
    };
    rk4_step(pinned, &start, dt)
}

/// Fails when any component is non-finite or exceeds `guard` in magnitude.
#[inline]
pub fn check_guard<const N: usize>(x: &[f64; N], guard: f64, time: f64) -> Result<()> {
    if x.iter().all(|v| v.abs() <= guard) {
        Ok(())
    } else {
        Err(Error::Diverged { time, guard })
    }
}

/// Uniform initial state in `[-0.1, 0.1]` per component, never the origin.
pub fn perturbed_initial_state<const N: usize, R: Rng + ?Sized>(rng: &mut R) -> [f64; N] {
    loop {
        let x: [f64; N] = std::array::from_fn(|_| rng.random_range(-0.1..=0.1));
        if x.iter().any(|&v| v != 0.0) {
            return x;
        }
    }
}

/// An oscillator run on its own, without a partner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FreeRunSystem {
    /// Circuit A with a constant drive held on the inverting amplifier.
    CircuitA {
        params: CircuitAParams,
        vout: f64,
    },
    Chua(ChuaParams),
    LorenzLike(LorenzLikeParams),
}

impl FreeRunSystem {
    pub fn dimension(&self) -> usize {
        match self {
            FreeRunSystem::CircuitA { .. } => 2,
            FreeRunSystem::Chua(_) | FreeRunSystem::LorenzLike(_) => 3,
        }
    }

    pub fn component_names(&self) -> &'static [&'static str] {
        match self {
            FreeRunSystem::CircuitA { .. } => &["v1", "v2"],
            FreeRunSystem::Chua(_) => &["vc1", "vc2", "il"],
            FreeRunSystem::LorenzLike(_) => &["v1", "v2", "v3"],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeRunOptions {
    pub guard: f64,
    pub max_duration: f64,
}

impl Default for FreeRunOptions {
    fn default() -> Self {
        FreeRunOptions {
            guard: DEFAULT_BLOWUP_GUARD,
            max_duration: DEFAULT_MAX_DURATION,
        }
    }
}

fn integrate<const N: usize>(
    rhs: impl Fn(&[f64; N]) -> [f64; N],
    initial: &[f64],
    dt: f64,
    n: usize,
    guard: f64,
) -> Result<Vec<Vec<f64>>> {
    let mut x: [f64; N] = initial
        .try_into()
        .map_err(|_| Error::InvalidParameter(format!("expected {N} initial components")))?;
    check_guard(&x, guard, 0.0)?;
    let mut out: Vec<Vec<f64>> = (0..N).map(|_| Vec::with_capacity(n + 1)).collect();
    for (c, v) in out.iter_mut().zip(x) {
        c.push(v);
    }
    for k in 1..=n {
        x = rk4_step(&rhs, &x, dt);
        check_guard(&x, guard, k as f64 * dt)?;
        for (c, v) in out.iter_mut().zip(x) {
            c.push(v);
        }
    }
    Ok(out)
}

/// Integrates `system` from `initial` for `n` steps of `dt`, returning the
/// `n + 1` visited states as one named trace per component.
pub fn free_run(
    system: &FreeRunSystem,
    initial: &[f64],
    dt: f64,
    n: usize,
    opts: &FreeRunOptions,
) -> Result<Vec<(String, Trace)>> {
    require_positive("dt", dt)?;
    if n as f64 * dt > opts.max_duration {
        return Err(Error::InvalidParameter(format!(
            "run of {} s exceeds the configured maximum of {} s",
            n as f64 * dt,
            opts.max_duration
        )));
    }
    if initial.len() != system.dimension() {
        return Err(Error::InvalidParameter(format!(
            "expected {} initial components, got {}",
            system.dimension(),
            initial.len()
        )));
    }
    let columns = match *system {
        FreeRunSystem::CircuitA { params, vout } => {
            params.validate()?;
            integrate::<2>(|x| params.deriv(x, vout), initial, dt, n, opts.guard)?
        }
        FreeRunSystem::Chua(params) => {
            params.validate()?;
            integrate::<3>(|x| params.deriv(x), initial, dt, n, opts.guard)?
        }
        FreeRunSystem::LorenzLike(params) => {
            params.validate()?;
            let coeffs = params.coefficients();
            integrate::<3>(|x| coeffs.deriv(x), initial, dt, n, opts.guard)?
        }
    };
    Ok(system
        .component_names()
        .iter()
        .zip(columns)
        .map(|(name, samples)| (name.to_string(), Trace::from_finite(dt, 0.0, samples)))
        .collect())
}
