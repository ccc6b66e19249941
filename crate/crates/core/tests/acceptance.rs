//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary so the lines are always printed; exits non-zero
//! when any criterion fails.

mod common;

use std::collections::HashMap;
use std::time::Instant;

use chaoscomm::channel::NoisePlacement;
use chaoscomm::codec::{FilterSpec, LowPass};
use chaoscomm::link::{
    run_link, sweep_noise, sweep_runs_csv, Circuit, LinkConfig, SweepOutcome, SweepRun,
};
use chaoscomm::oscillators::{
    chua_nonlinearity, rk4_step, ChuaParams, CircuitAParams, LorenzForm, LorenzLikeParams,
};
use sha2::{Digest, Sha256};

const SWEEP_SEED: u64 = 7;
const SCENARIO_SEED: u64 = 42;
const REPEATS: usize = 10;
const GRID: [f64; 8] = [0.01, 0.1, 1.0, 5.0, 10.0, 20.0, 50.0, 100.0];
const A_GRID: [f64; 7] = [0.01, 0.1, 1.0, 5.0, 10.0, 20.0, 50.0];
const C_GRID: [f64; 5] = [0.01, 0.1, 1.0, 5.0, 10.0];

type Check = fn(&mut Ctx) -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

#[derive(Default)]
struct Ctx {
    sweeps: HashMap<Circuit, SweepOutcome>,
}

impl Ctx {
    fn sweep(&mut self, circuit: Circuit) -> &SweepOutcome {
        self.sweeps.entry(circuit).or_insert_with(|| {
            let base = LinkConfig::for_circuit(circuit).with_seed(SWEEP_SEED);
            sweep_noise(&base, &GRID, REPEATS).expect("sweep")
        })
    }
}

fn mean_ber(outcome: &SweepOutcome, amplitude: f64) -> f64 {
    outcome
        .summary
        .iter()
        .find(|s| s.amplitude_pct == amplitude)
        .map(|s| s.ber_mean)
        .expect("amplitude in grid")
}

fn runs_at(outcome: &SweepOutcome, amplitudes: &[f64]) -> Vec<SweepRun> {
    outcome
        .runs
        .iter()
        .filter(|r| amplitudes.contains(&r.amplitude_pct))
        .cloned()
        .collect()
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn fmt_bers(outcome: &SweepOutcome, grid: &[f64]) -> String {
    grid.iter()
        .map(|&a| format!("{a}%:{:.4}", mean_ber(outcome, a)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn criterion_1(_: &mut Ctx) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for circuit in Circuit::ALL {
        let base = LinkConfig::for_circuit(circuit).with_seed(SWEEP_SEED);
        let out = sweep_noise(&base, &[0.0], REPEATS).expect("sweep");
        let bers: Vec<f64> = out
            .runs
            .iter()
            .map(|r| r.outcome.as_ref().map_or(f64::NAN, |rep| rep.ber))
            .collect();
        let ok = bers.iter().all(|&b| b == 0.0);
        pass &= ok;
        let worst = bers.iter().cloned().fold(0.0_f64, f64::max);
        parts.push(format!(
            "{circuit}: max BER {worst} over {} ICs",
            bers.len()
        ));
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn criterion_2(ctx: &mut Ctx) -> Outcome {
    let out = ctx.sweep(Circuit::A);
    let low_max = [0.01, 0.1, 1.0, 5.0, 10.0]
        .iter()
        .map(|&a| mean_ber(out, a))
        .fold(f64::NEG_INFINITY, f64::max);
    let high_min = mean_ber(out, 20.0).min(mean_ber(out, 50.0));
    let (b10, b50) = (mean_ber(out, 10.0), mean_ber(out, 50.0));
    Outcome {
        pass: low_max < high_min && b50 >= 2.0 * b10,
        detail: format!(
            "{}; max(<=10%) {low_max:.4} < min(20,50%) {high_min:.4}; 50%/10% ratio {}",
            fmt_bers(out, &A_GRID),
            if b10 > 0.0 {
                format!("{:.1}", b50 / b10)
            } else {
                "inf".into()
            }
        ),
    }
}

fn criterion_3(_: &mut Ctx) -> Outcome {
    let cfg = LinkConfig::for_circuit(Circuit::B)
        .with_seed(SCENARIO_SEED)
        .with_noise(10.0);
    assert_eq!(cfg.noise.placement, NoisePlacement::Both);
    let res = run_link(&cfg).expect("circuit b run");
    let err = res.sync_error();
    let e = err.samples();
    let n = e.len();
    let early = common::rms(&e[..n / 10]);
    let late = common::rms(&e[n / 2..]);
    let ratio = early / late;
    let ber = res.report.ber;
    Outcome {
        pass: ber < 0.05 && ratio >= 5.0,
        detail: format!(
            "seed {SCENARIO_SEED}: BER {ber:.4}; sync-error RMS first 10% {early:.4} V, last 50% {late:.4} V, ratio {ratio:.2} (need >= 5)"
        ),
    }
}

fn criterion_4(ctx: &mut Ctx) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for circuit in [Circuit::Ca, Circuit::Cb] {
        let out = ctx.sweep(circuit);
        let low_max = [0.01, 0.1, 1.0]
            .iter()
            .map(|&a| mean_ber(out, a))
            .fold(f64::NEG_INFINITY, f64::max);
        let high_min = mean_ber(out, 5.0).min(mean_ber(out, 10.0));
        let clean_at_1 = out
            .runs
            .iter()
            .filter(|r| r.amplitude_pct == 1.0)
            .filter(|r| matches!(&r.outcome, Ok(rep) if rep.ber_polarity_agnostic == 0.0))
            .count();
        let ok = low_max < high_min && clean_at_1 >= 8;
        pass &= ok;
        parts.push(format!(
            "{circuit}: {}; max(<=1%) {low_max:.4} vs min(5,10%) {high_min:.4}; clean seeds at 1% {clean_at_1}/10",
            fmt_bers(out, &C_GRID)
        ));
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn criterion_5(ctx: &mut Ctx) -> Outcome {
    let mut onset = HashMap::new();
    for circuit in Circuit::ALL {
        let out = ctx.sweep(circuit);
        let first = GRID
            .iter()
            .copied()
            .find(|&a| mean_ber(out, a) > 0.05)
            .unwrap_or(f64::INFINITY);
        onset.insert(circuit, first);
    }
    let c_max = onset[&Circuit::Ca].max(onset[&Circuit::Cb]);
    let pass = onset[&Circuit::A] > c_max && onset[&Circuit::B] > c_max;
    let show = |a: f64| {
        if a.is_finite() {
            format!("{a}%")
        } else {
            "none up to 100%".into()
        }
    };
    Outcome {
        pass,
        detail: format!(
            "smallest amplitude with mean BER > 5%: a {}, b {}, ca {}, cb {}",
            show(onset[&Circuit::A]),
            show(onset[&Circuit::B]),
            show(onset[&Circuit::Ca]),
            show(onset[&Circuit::Cb])
        ),
    }
}

fn criterion_6(_: &mut Ctx) -> Outcome {
    let base = LinkConfig::for_circuit(Circuit::Cb).with_seed(SWEEP_SEED);
    let out = sweep_noise(&base, &[0.0], 20).expect("sweep");
    let reports: Vec<_> = out
        .runs
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok())
        .collect();
    let hits = reports
        .iter()
        .filter(|r| r.correlation <= -0.9 && r.ber_polarity_agnostic == 0.0)
        .count();
    let min_corr = reports
        .iter()
        .map(|r| r.correlation)
        .fold(f64::INFINITY, f64::min);
    Outcome {
        pass: hits >= 1,
        detail: format!(
            "{} seeded ICs: anti-sync fraction {:.2} ({hits} runs with corr <= -0.9 and clean decode); lowest corr(V1_tx, V1_rx) {min_corr:.4}",
            reports.len(),
            out.summary[0].antisync_fraction
        ),
    }
}

fn criterion_7(_: &mut Ctx) -> Outcome {
    let base = LinkConfig::for_circuit(Circuit::A)
        .with_seed(SCENARIO_SEED)
        .with_noise(10.0);
    let report = |filter| {
        run_link(&LinkConfig {
            filter,
            ..base.clone()
        })
        .expect("circuit a run")
        .report
    };
    let none = report(FilterSpec::None);
    let f1 = report(FilterSpec::Filter1);
    let f2 = report(FilterSpec::Filter2);
    let pass = none.glitches > f1.glitches
        && f1.glitches >= f2.glitches
        && f2.glitches == 0
        && f1.alignment_lag != 0.0
        && f2.alignment_lag != 0.0;
    Outcome {
        pass,
        detail: format!(
            "seed {SCENARIO_SEED}: glitches none {} / filter1 {} / filter2 {}; lag filter1 {:.2e} s, filter2 {:.2e} s",
            none.glitches, f1.glitches, f2.glitches, f1.alignment_lag, f2.alignment_lag
        ),
    }
}

fn rk4_order() -> f64 {
    // y'' = -y over [0, 1], exact solution cos t.
    let err = |n: usize| {
        let dt = 1.0 / n as f64;
        let mut x = [1.0, 0.0];
        for _ in 0..n {
            x = rk4_step(|y: &[f64; 2]| [y[1], -y[0]], &x, dt);
        }
        ((x[0] - 1f64.cos()).powi(2) + (x[1] + 1f64.sin()).powi(2)).sqrt()
    };
    (err(10) / err(20)).log2()
}

fn measured_gain(filter: FilterSpec, frequency: f64) -> f64 {
    let dt = 1e-8;
    let lp = LowPass::new(&filter, dt).unwrap();
    let period = 1.0 / frequency;
    let total = (6.0 * period / dt) as usize;
    let tail_start = (4.0 * period / dt) as usize;
    let mut vc = 0.0;
    let mut peak = 0.0_f64;
    for k in 0..total {
        let vin = (2.0 * std::f64::consts::PI * frequency * k as f64 * dt).sin();
        vc = lp.step(vc, vin);
        if k >= tail_start {
            peak = peak.max(vc.abs());
        }
    }
    peak
}

fn criterion_8(_: &mut Ctx) -> Outcome {
    let mut checks: Vec<(String, bool)> = Vec::new();

    let order = rk4_order();
    checks.push((
        format!("RK4 order {order:.3}"),
        (3.8..=4.2).contains(&order),
    ));

    let f = 6222.0;
    for (filter, re, ce) in [
        (FilterSpec::Filter1, 40.0, 7e-9),
        (FilterSpec::Filter2, 1e3, 2.5e-9),
        (FilterSpec::Filter3, 1e3, 7e-9),
    ] {
        let w = 2.0 * std::f64::consts::PI * f;
        let oracle = 1.0 / (1.0 + (w * re * ce).powi(2)).sqrt();
        let g = measured_gain(filter, f);
        checks.push((
            format!("filter {filter} gain {g:.5} vs {oracle:.5}"),
            ((g - oracle) / oracle).abs() < 0.005,
        ));
    }
    let g3 = FilterSpec::Filter3.gain_at(f);
    checks.push((
        format!("filter 3 nominal gain {g3:.5} vs 0.9646"),
        ((g3 - 0.9646) / 0.9646).abs() < 0.005,
    ));

    let p = ChuaParams::default();
    let bp = p.bp();
    let jump = [bp, -bp]
        .iter()
        .map(|&b| {
            let eps = 1e-15 * b.abs();
            (chua_nonlinearity(b + eps, &p) - chua_nonlinearity(b - eps, &p)).abs()
        })
        .fold(0.0, f64::max);
    checks.push((format!("g jump at +-Bp {jump:.1e}"), jump < 1e-12));

    // Independent recomputation from the component table.
    let (rb, rg1, rg2, esat) = (22e3, 2.2e3, 3.3e3, 7.5);
    let bp_oracle = rg2 / (rb + rg2) * esat;
    let m0_oracle = 1.0 / rb - 1.0 / rg1;
    let m1_oracle = -(1.0 / rg1 + 1.0 / rg2);
    checks.push((
        format!("Bp {:.4} m0 {:.4e} m1 {:.4e}", p.bp(), p.m0(), p.m1()),
        (p.bp() - bp_oracle).abs() < 1e-12
            && (p.m0() - m0_oracle).abs() < 1e-15
            && (p.m1() - m1_oracle).abs() < 1e-15
            && (p.bp() - 0.9783).abs() < 5e-5
            && (p.m0() + 4.091e-4).abs() < 5e-8
            && (p.m1() + 7.576e-4).abs() < 5e-8,
    ));

    let a = CircuitAParams::default().deriv(&[0.0, 0.0], 0.0);
    let c = p.deriv(&[0.0; 3]);
    let l1 = LorenzLikeParams::default().coefficients().deriv(&[0.0; 3]);
    let l2 = LorenzLikeParams {
        form: LorenzForm::AsPrinted,
        ..LorenzLikeParams::default()
    }
    .coefficients()
    .deriv(&[0.0; 3]);
    let origin_exact = a.iter().chain(&c).chain(&l1).chain(&l2).all(|v| *v == 0.0);
    checks.push(("origin fixed points".into(), origin_exact));

    Outcome {
        pass: checks.iter().all(|(_, ok)| *ok),
        detail: checks
            .iter()
            .map(|(d, ok)| format!("{d}{}", if *ok { "" } else { " [x]" }))
            .collect::<Vec<_>>()
            .join("; "),
    }
}

fn criterion_9(_: &mut Ctx) -> Outcome {
    let seed = 1;
    let mut pass = true;
    let mut parts = Vec::new();
    for fraction in [0.05, 0.3, 0.5, 0.9] {
        let p = ChuaParams {
            pot_fraction: fraction,
            ..ChuaParams::default()
        };
        let s = common::chua_screen(&p, seed);
        let ok = if fraction < 0.7 {
            s.non_fixed_point()
        } else {
            !s.chaotic(&p)
        };
        pass &= ok;
        parts.push(format!(
            "{fraction}: bounded {} spread {:.2} V lyapunov {:.0}/s chaotic {}",
            s.bounded,
            s.spread,
            s.lyapunov,
            s.chaotic(&p)
        ));
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn criterion_10(ctx: &mut Ctx) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (circuit, grid) in [
        (Circuit::A, &A_GRID[..]),
        (Circuit::Ca, &C_GRID[..]),
        (Circuit::Cb, &C_GRID[..]),
    ] {
        let first = sha256_hex(&sweep_runs_csv(&runs_at(ctx.sweep(circuit), grid)));
        let base = LinkConfig::for_circuit(circuit).with_seed(SWEEP_SEED);
        let again = sweep_noise(&base, grid, REPEATS).expect("sweep");
        let second = sha256_hex(&sweep_runs_csv(&again.runs));
        pass &= first == second;
        parts.push(format!("{circuit} {} vs {}", &first[..12], &second[..12]));
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn main() {
    let criteria: [(&str, Check); 10] = [
        ("noiseless decode, all circuits", criterion_1),
        ("circuit A degrades above 10%", criterion_2),
        ("circuit B robust at 10%, decaying transient", criterion_3),
        ("circuit C degrades above 1%", criterion_4),
        ("A and B withstand more noise than C", criterion_5),
        ("anti-synchronization in Cb", criterion_6),
        ("filter comparison on circuit A", criterion_7),
        ("numerical core", criterion_8),
        ("Chua potentiometer range", criterion_9),
        ("determinism", criterion_10),
    ];
    let mut ctx = Ctx::default();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check(&mut ctx);
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} criterion {} ({name}): {} [{:.1} s]",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
