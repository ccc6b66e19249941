//! Helpers shared by the integration test targets.

#![allow(dead_code)]

use chaoscomm::oscillators::{check_guard, perturbed_initial_state, rk4_step, ChuaParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Largest Lyapunov exponent (1/s) by two-trajectory renormalization.
///
/// Returns `None` when the reference trajectory leaves the `guard` box.
pub fn largest_lyapunov<const N: usize>(
    rhs: impl Fn(&[f64; N]) -> [f64; N] + Copy,
    x0: [f64; N],
    dt: f64,
    transient: usize,
    steps: usize,
    renorm_every: usize,
    guard: f64,
) -> Option<f64> {
    let mut x = x0;
    for _ in 0..transient {
        x = rk4_step(rhs, &x, dt);
        check_guard(&x, guard, 0.0).ok()?;
    }
    let d0 = 1e-8;
    let mut y = x;
    y[0] += d0;
    let mut log_sum = 0.0;
    for k in 1..=steps {
        x = rk4_step(rhs, &x, dt);
        y = rk4_step(rhs, &y, dt);
        check_guard(&x, guard, 0.0).ok()?;
        if k % renorm_every == 0 {
            let d = x
                .iter()
                .zip(&y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            log_sum += (d / d0).ln();
            for i in 0..N {
                y[i] = x[i] + (y[i] - x[i]) * d0 / d;
            }
        }
    }
    Some(log_sum / ((steps / renorm_every * renorm_every) as f64 * dt))
}

/// Outcome of the boundedness / non-convergence / chaos screen.
#[derive(Debug, Clone, Copy)]
pub struct ChaosScreen {
    pub bounded: bool,
    /// Standard deviation of `VC1` over the scored tail, volts.
    pub spread: f64,
    /// Largest Lyapunov exponent in 1/s (NaN when unbounded).
    pub lyapunov: f64,
}

impl ChaosScreen {
    pub fn non_fixed_point(&self) -> bool {
        self.bounded && self.spread > 0.05
    }

    /// Chaotic when the exponent exceeds 1% of the inverse tank period.
    pub fn chaotic(&self, p: &ChuaParams) -> bool {
        let tank = 2.0 * std::f64::consts::PI * (p.l * p.c2).sqrt();
        self.bounded && self.lyapunov > 0.01 / tank
    }
}

/// Screens the Chua oscillator from a seeded initial state near the origin.
pub fn chua_screen(p: &ChuaParams, seed: u64) -> ChaosScreen {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x0: [f64; 3] = perturbed_initial_state(&mut rng);
    let dt = 1e-7;
    let guard = 100.0;
    let rhs = |x: &[f64; 3]| p.deriv(x);
    let (transient, scored) = (200_000, 400_000);

    let mut x = x0;
    let mut bounded = true;
    let mut tail = Vec::with_capacity(scored);
    for k in 0..transient + scored {
        x = rk4_step(rhs, &x, dt);
        if check_guard(&x, guard, 0.0).is_err() {
            bounded = false;
            break;
        }
        if k >= transient {
            tail.push(x[0]);
        }
    }
    if !bounded {
        return ChaosScreen {
            bounded,
            spread: f64::NAN,
            lyapunov: f64::NAN,
        };
    }
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let spread = (tail.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / tail.len() as f64).sqrt();
    let lyapunov = largest_lyapunov(rhs, x0, dt, transient, scored, 100, guard).unwrap_or(f64::NAN);
    ChaosScreen {
        bounded,
        spread,
        lyapunov,
    }
}

/// RMS of a slice.
pub fn rms(v: &[f64]) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}
