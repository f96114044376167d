//! Pseudomode reformulation of the memory-kernel dynamics.
//!
//! Eliminating the pseudomode amplitude from
//!
//! ```text
//! d/dt [c1, c2, b] = m [c1, c2, b],   b(0) = 0
//! ```
//!
//! with the generator below reproduces the Lorentzian memory integral
//! exactly, so the 3-component linear ODE is an equivalent formulation of
//! the integro-differential system, not an approximation. Integration uses
//! an adaptive Dormand-Prince 5(4) pair with dense output.

use num_complex::Complex64;

use crate::model::{AmplitudeState, InitialState, SystemParams, Trajectory};
use crate::{Error, Result};

/// Relative local error tolerance per step.
const RTOL: f64 = 1e-10;
/// Absolute local error tolerance per step.
const ATOL: f64 = 1e-12;

type State = [Complex64; 3];

/// Generator matrix of the three-amplitude linear system.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub m: [[Complex64; 3]; 3],
    pub(crate) gamma: f64,
}

/// Build the pseudomode generator for the given parameters.
pub fn build_generator(params: &SystemParams) -> Generator {
    let z = Complex64::new(0.0, 0.0);
    let mihj = Complex64::new(0.0, -params.j / 2.0);
    let mig1 = Complex64::new(0.0, -params.g1);
    let mig2 = Complex64::new(0.0, -params.g2);
    let a = params.cavity_rate();
    Generator {
        m: [
            [z, mihj, mig1],
            [mihj, z, mig2],
            [mig1, mig2, -a],
        ],
        gamma: params.gamma,
    }
}

impl Generator {
    /// Coefficients of the characteristic polynomial `s^3 + c2 s^2 + c1 s +
    /// c0` computed from matrix traces (Faddeev-LeVerrier). This is an
    /// arithmetic route independent of the Laplace-side assembly and is used
    /// to confirm that the generator and the reduced cubic share a spectrum.
    pub fn characteristic_coeffs(&self) -> [Complex64; 4] {
        let m = &self.m;
        let tr1: Complex64 = m[0][0] + m[1][1] + m[2][2];
        let mut m2 = [[Complex64::new(0.0, 0.0); 3]; 3];
        for i in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    m2[i][k] += m[i][l] * m[l][k];
                }
            }
        }
        let tr2 = m2[0][0] + m2[1][1] + m2[2][2];
        let mut tr3 = Complex64::new(0.0, 0.0);
        for i in 0..3 {
            for l in 0..3 {
                tr3 += m2[i][l] * m[l][i];
            }
        }
        let c2 = -tr1;
        let c1 = (tr1 * tr1 - tr2) / 2.0;
        let c0 = -(tr1 * tr1 * tr1 - 3.0 * tr1 * tr2 + 2.0 * tr3) / 6.0;
        [Complex64::new(1.0, 0.0), c2, c1, c0]
    }
}

fn rhs(gen: &Generator, y: &State) -> State {
    let m = &gen.m;
    let mut out = [Complex64::new(0.0, 0.0); 3];
    for i in 0..3 {
        out[i] = m[i][0] * y[0] + m[i][1] * y[1] + m[i][2] * y[2];
    }
    out
}

fn axpy(y: &State, scale: f64, k: &[State], weights: &[f64]) -> State {
    let mut out = *y;
    for (ki, &wi) in k.iter().zip(weights.iter()) {
        if wi != 0.0 {
            for c in 0..3 {
                out[c] += scale * wi * ki[c];
            }
        }
    }
    out
}

// Dormand-Prince 5(4) tableau.
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B5: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];
// Dense-output weights for the quartic interpolant.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

struct DenseSegment {
    t0: f64,
    h: f64,
    r1: State,
    r2: State,
    r3: State,
    r4: State,
    r5: State,
}

impl DenseSegment {
    fn eval(&self, t: f64) -> State {
        let theta = (t - self.t0) / self.h;
        let th1 = 1.0 - theta;
        let mut out = [Complex64::new(0.0, 0.0); 3];
        for c in 0..3 {
            out[c] = self.r1[c]
                + theta
                    * (self.r2[c]
                        + th1 * (self.r3[c] + theta * (self.r4[c] + th1 * self.r5[c])));
        }
        out
    }
}

/// Integrate the pseudomode system from `t = 0` to `t_end`, sampling the
/// trajectory at `t = 0, dt_out, ..., t_end`. The pseudomode starts in
/// vacuum (`b(0) = 0`).
pub fn integrate(
    gen: &Generator,
    init: &InitialState,
    t_end: f64,
    dt_out: f64,
) -> Result<Trajectory> {
    if t_end <= 0.0 || dt_out <= 0.0 {
        return Err(Error::InvalidParams(
            "t_end and dt_out must be positive".into(),
        ));
    }
    let n_out = (t_end / dt_out).floor() as usize;
    let mut traj = Trajectory::with_capacity(n_out + 1);

    let mut y: State = [init.c1(), init.c2(), Complex64::new(0.0, 0.0)];
    let mut t = 0.0f64;
    traj.push(
        0.0,
        AmplitudeState { c1: y[0], c2: y[1], b: y[2] },
    );
    let mut next_out = 1usize;

    // Initial step from the dominant rate scale.
    let rate = gen
        .m
        .iter()
        .flatten()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
        .max(1e-3);
    let mut h = (0.01 / rate).min(t_end);
    let mut k1 = rhs(gen, &y);

    while t < t_end {
        if h < 1e-13 * t_end.max(1.0) {
            return Err(Error::IntegratorStall { t, h });
        }
        if t + h > t_end {
            h = t_end - t;
        }
        let k2 = rhs(gen, &axpy(&y, h, &[k1], &A2));
        let k3 = rhs(gen, &axpy(&y, h, &[k1, k2], &A3));
        let k4 = rhs(gen, &axpy(&y, h, &[k1, k2, k3], &A4));
        let k5 = rhs(gen, &axpy(&y, h, &[k1, k2, k3, k4], &A5));
        let k6 = rhs(gen, &axpy(&y, h, &[k1, k2, k3, k4, k5], &A6));
        let y1 = axpy(&y, h, &[k1, k2, k3, k4, k5, k6], &B5);
        let k7 = rhs(gen, &y1);

        let ks = [k1, k2, k3, k4, k5, k6, k7];
        let mut err_sq = 0.0f64;
        for c in 0..3 {
            let mut e = Complex64::new(0.0, 0.0);
            for (ki, &wi) in ks.iter().zip(E.iter()) {
                e += wi * ki[c];
            }
            e *= h;
            let sc = ATOL + RTOL * y[c].norm().max(y1[c].norm());
            err_sq += (e.norm() / sc).powi(2);
        }
        let err = (err_sq / 3.0).sqrt();

        if err <= 1.0 {
            // Accepted: emit dense output inside (t, t + h].
            let mut r5 = [Complex64::new(0.0, 0.0); 3];
            for c in 0..3 {
                let mut acc = Complex64::new(0.0, 0.0);
                for (ki, &di) in ks.iter().zip(D.iter()) {
                    acc += di * ki[c];
                }
                r5[c] = h * acc;
            }
            let mut r2 = [Complex64::new(0.0, 0.0); 3];
            let mut r3 = [Complex64::new(0.0, 0.0); 3];
            let mut r4 = [Complex64::new(0.0, 0.0); 3];
            for c in 0..3 {
                let ydiff = y1[c] - y[c];
                let bspl = h * k1[c] - ydiff;
                r2[c] = ydiff;
                r3[c] = bspl;
                r4[c] = ydiff - h * k7[c] - bspl;
            }
            let seg = DenseSegment { t0: t, h, r1: y, r2, r3, r4, r5 };

            let t_new = t + h;
            while next_out <= n_out {
                let t_target = next_out as f64 * dt_out;
                if t_target > t_new + 1e-14 * t_end {
                    break;
                }
                let ys = if (t_target - t_new).abs() <= 1e-14 * t_end {
                    y1
                } else {
                    seg.eval(t_target)
                };
                traj.push(
                    t_target,
                    AmplitudeState { c1: ys[0], c2: ys[1], b: ys[2] },
                );
                next_out += 1;
            }

            t = t_new;
            y = y1;
            k1 = k7;
            let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
            h *= fac;
        } else {
            let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            h *= fac;
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{NamedState, Tolerances};
    use crate::spectral::{amplitudes_at, assemble, find_poles};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn params(g1: f64, g2: f64, j: f64, gamma: f64, delta_c: f64) -> SystemParams {
        SystemParams::new(g1, g2, j, gamma, delta_c).unwrap()
    }

    fn random_state(rng: &mut ChaCha8Rng) -> InitialState {
        loop {
            let v: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 1e-3 {
                return InitialState::new(c(v[0] / n, v[1] / n), c(v[2] / n, v[3] / n))
                    .unwrap();
            }
        }
    }

    #[test]
    fn generator_matrix_layout() {
        let p = params(0.3, -0.7, 1.4, 2.0, 0.9);
        let gen = build_generator(&p);
        assert_eq!(gen.m[0][1], c(0.0, -0.7));
        assert_eq!(gen.m[1][0], c(0.0, -0.7));
        assert_eq!(gen.m[0][2], c(0.0, -0.3));
        assert_eq!(gen.m[1][2], c(0.0, 0.7));
        assert_eq!(gen.m[2][2], c(-1.0, -0.9));
        assert_eq!(gen.m[0][0], c(0.0, 0.0));
    }

    #[test]
    fn characteristic_polynomial_matches_reduced_cubic() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..1000 {
            let p = params(
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-5.0..5.0),
                rng.gen_range(0.3..2.5),
                rng.gen_range(-5.0..5.0),
            );
            let char_coeffs = build_generator(&p).characteristic_coeffs();
            let sol = assemble(&p, &NamedState::Plus.state());
            let scale = sol.cubic_den.iter().map(|v| v.norm()).fold(1.0, f64::max);
            for (a, b) in char_coeffs.iter().zip(sol.cubic_den.iter()) {
                assert!((a - b).norm() < 1e-12 * scale, "{a} vs {b} for {p:?}");
            }
        }
    }

    #[test]
    fn generator_eigenvalues_match_poles_in_block_limit() {
        // g1 = g2 = 0, J = 1: eigenvalues {i/2, -i/2, -a} read off the block
        // structure.
        let p = params(0.0, 0.0, 1.0, 1.0, 0.4);
        let gen = build_generator(&p);
        let v1 = [c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0)];
        let mv = rhs(&gen, &v1);
        for i in 0..3 {
            assert!((mv[i] - c(0.0, 0.5) * v1[i]).norm() < 1e-15);
        }
        let sol = assemble(&p, &NamedState::E1G2.state());
        let dec = find_poles(&sol, &Tolerances::default()).unwrap();
        for target in [c(0.0, 0.5), c(0.0, -0.5), -p.cavity_rate()] {
            let d = dec
                .poles
                .iter()
                .map(|s| (s - target).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(d < 1e-12);
        }
    }

    #[test]
    fn subradiant_combination_is_an_exact_eigenvector() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..200 {
            let g = rng.gen_range(-3.0..3.0);
            let j: f64 = rng.gen_range(-4.0..4.0);
            let p = params(g, g, j, 1.0, rng.gen_range(-5.0..5.0));
            let gen = build_generator(&p);
            let r = std::f64::consts::FRAC_1_SQRT_2;
            let v = [c(r, 0.0), c(-r, 0.0), c(0.0, 0.0)];
            let mv = rhs(&gen, &v);
            let lam = c(0.0, j / 2.0);
            for i in 0..3 {
                assert!((mv[i] - lam * v[i]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn rabi_exchange_closed_form() {
        // Decoupled qubits exchange the excitation at rate J/2.
        let p = params(0.0, 0.0, 1.0, 1.0, 0.0);
        let gen = build_generator(&p);
        let traj = integrate(&gen, &NamedState::E1G2.state(), 20.0, 0.01).unwrap();
        for (i, &t) in traj.times.iter().enumerate() {
            let expect1 = c((0.5 * t).cos(), 0.0);
            let expect2 = c(0.0, -(0.5 * t).sin());
            assert!((traj.states[i].c1 - expect1).norm() < 1e-8, "t = {t}");
            assert!((traj.states[i].c2 - expect2).norm() < 1e-8, "t = {t}");
            assert!((traj.concurrences[i] - t.sin().abs()).abs() < 1e-8);
        }
    }

    #[test]
    fn dark_state_concurrence_is_preserved() {
        let p = params(1.0, 1.0, 0.0, 1.0, 0.0);
        let gen = build_generator(&p);
        let traj = integrate(&gen, &NamedState::Minus.state(), 20.0, 0.01).unwrap();
        for (i, &t) in traj.times.iter().enumerate() {
            assert!((traj.concurrences[i] - 1.0).abs() < 1e-9, "t = {t}");
        }
    }

    #[test]
    fn superradiant_state_dies() {
        let p = params(1.0, 1.0, 0.0, 1.0, 0.0);
        let gen = build_generator(&p);
        let traj = integrate(&gen, &NamedState::Plus.state(), 20.0, 0.001).unwrap();
        let min_c = traj.concurrences.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min_c < 1e-6, "concurrence never collapsed, min = {min_c}");
        // Late-time envelope is tiny as well.
        assert!(*traj.concurrences.last().unwrap() < 1e-3);
    }

    #[test]
    fn norm_never_grows() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let p = params(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(0.4..2.0),
                rng.gen_range(-3.0..3.0),
            );
            let gen = build_generator(&p);
            let traj = integrate(&gen, &random_state(&mut rng), 15.0, 0.05).unwrap();
            let mut prev = f64::INFINITY;
            for st in traj.states.iter() {
                let n = st.norm_sq();
                assert!(n <= prev + 1e-9, "norm grew: {prev} -> {n}");
                assert!(n <= 1.0 + 1e-9);
                prev = n;
            }
        }
    }

    #[test]
    fn matches_spectral_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..60 {
            let p = params(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-3.0..3.0),
                1.0,
                rng.gen_range(-3.0..3.0),
            );
            let init = random_state(&mut rng);
            let dec = match find_poles(&assemble(&p, &init), &Tolerances::default()) {
                Ok(d) if !d.degenerate => d,
                _ => continue,
            };
            let gen = build_generator(&p);
            let traj = integrate(&gen, &init, 20.0, 0.25).unwrap();
            for (i, &t) in traj.times.iter().enumerate() {
                let (s1, s2) = amplitudes_at(&dec, t).unwrap();
                let d1 = (traj.states[i].c1 - s1).norm();
                let d2 = (traj.states[i].c2 - s2).norm();
                assert!(d1 < 1e-6 && d2 < 1e-6, "t = {t}: {d1}, {d2} for {p:?}");
            }
        }
    }

    #[test]
    fn rejects_bad_spans() {
        let gen = build_generator(&params(1.0, 1.0, 0.0, 1.0, 0.0));
        assert!(integrate(&gen, &NamedState::E1G2.state(), 0.0, 0.1).is_err());
        assert!(integrate(&gen, &NamedState::E1G2.state(), 1.0, 0.0).is_err());
    }
}
