//! Direct discretization of the memory-kernel integro-differential
//! equations.
//!
//! The history integrals are accumulated with composite trapezoid weights.
//! Because the kernel is a single exponential, each accumulator obeys
//! `z(t + h) = I(h) z(t) + (new-interval quadrature)`, turning the naive
//! O(N^2) convolution into O(N) total work. Time stepping is an explicit
//! predictor plus one trapezoidal corrector pass, second order in `h`. This
//! backend validates the Laplace and pseudomode routes from first
//! principles; it is not the production path.

use num_complex::Complex64;

use crate::model::{AmplitudeState, InitialState, SystemParams, Trajectory};
use crate::{Error, Result};

/// Running kernel-weighted history integrals for the two amplitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvolutionAccumulator {
    pub z1: Complex64,
    pub z2: Complex64,
    pub h: f64,
}

impl ConvolutionAccumulator {
    fn new(h: f64) -> Self {
        Self {
            z1: Complex64::new(0.0, 0.0),
            z2: Complex64::new(0.0, 0.0),
            h,
        }
    }

    /// Advance both history integrals by one step: decay the accumulated
    /// past by `I(h)` and add the trapezoid contribution of the new
    /// interval.
    fn advance(
        &self,
        kernel_h: Complex64,
        c_old: (Complex64, Complex64),
        c_new: (Complex64, Complex64),
    ) -> Self {
        let w = self.h / 2.0;
        Self {
            z1: kernel_h * self.z1 + w * (kernel_h * c_old.0 + c_new.0),
            z2: kernel_h * self.z2 + w * (kernel_h * c_old.1 + c_new.1),
            h: self.h,
        }
    }
}

fn derivative(
    s: &crate::model::ScaledParams,
    c1: Complex64,
    c2: Complex64,
    z: &ConvolutionAccumulator,
) -> (Complex64, Complex64) {
    let mihj = Complex64::new(0.0, -s.j / 2.0);
    (
        mihj * c2 - (s.g1 * s.g1 * z.z1 + s.g1 * s.g2 * z.z2),
        mihj * c1 - (s.g2 * s.g2 * z.z2 + s.g1 * s.g2 * z.z1),
    )
}

/// Solve the integro-differential system on a uniform grid of step `h` up
/// to `t_end` (both in physical units). The returned trajectory holds every
/// grid sample; use [`Trajectory::downsample`] to thin it.
///
/// The step must resolve every rate: `h <= 0.01 / max(gamma, |J|, g1^2,
/// g2^2, 1)` in units of gamma.
pub fn solve_volterra(
    params: &SystemParams,
    init: &InitialState,
    t_end: f64,
    h: f64,
) -> Result<Trajectory> {
    if t_end <= 0.0 || h <= 0.0 {
        return Err(Error::InvalidParams("t_end and h must be positive".into()));
    }
    let s = params.in_gamma_units();
    let h_scaled = h * params.gamma;
    let t_end_scaled = t_end * params.gamma;
    let rate = [1.0, s.j.abs(), s.g1 * s.g1, s.g2 * s.g2]
        .into_iter()
        .fold(1.0f64, f64::max);
    let max_h = 0.01 / rate;
    if h_scaled > max_h {
        return Err(Error::StepTooLarge {
            h: h_scaled,
            max_h,
        });
    }

    let n = (t_end_scaled / h_scaled).round().max(1.0) as usize;
    let kernel_h = (-(Complex64::new(0.5, s.delta_c)) * h_scaled).exp();
    let mut acc = ConvolutionAccumulator::new(h_scaled);
    let mut c1 = init.c1();
    let mut c2 = init.c2();

    let push = |traj: &mut Trajectory, i: usize, c1, c2, acc: &ConvolutionAccumulator| {
        let b = Complex64::new(0.0, -1.0) * (s.g1 * acc.z1 + s.g2 * acc.z2);
        traj.push(
            i as f64 * h_scaled / params.gamma,
            AmplitudeState { c1, c2, b },
        );
    };

    let mut traj = Trajectory::with_capacity(n + 1);
    push(&mut traj, 0, c1, c2, &acc);

    for i in 0..n {
        let f_old = derivative(&s, c1, c2, &acc);
        // Predictor: explicit forward step.
        let c1_p = c1 + h_scaled * f_old.0;
        let c2_p = c2 + h_scaled * f_old.1;
        let acc_p = acc.advance(kernel_h, (c1, c2), (c1_p, c2_p));
        let f_p = derivative(&s, c1_p, c2_p, &acc_p);
        // Corrector: one trapezoidal pass.
        let c1_n = c1 + (h_scaled / 2.0) * (f_old.0 + f_p.0);
        let c2_n = c2 + (h_scaled / 2.0) * (f_old.1 + f_p.1);
        acc = acc.advance(kernel_h, (c1, c2), (c1_n, c2_n));
        c1 = c1_n;
        c2 = c2_n;
        push(&mut traj, i + 1, c1, c2, &acc);
    }
    Ok(traj)
}
