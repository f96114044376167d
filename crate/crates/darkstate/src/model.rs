//! Physical parameter space, initial states, the reservoir memory kernel,
//! and the concurrence functional shared by every solver backend.
//!
//! All rates are angular frequencies; the Lorentzian width `gamma` sets the
//! natural scale and the solvers work internally in units of `gamma`.

use num_complex::Complex64;

use crate::{Error, Result};

/// Tolerance on the unit norm of an initial state.
pub const NORM_TOL: f64 = 1e-12;

/// The five physical rates that fully define a system instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Qubit-1 to reservoir coupling. May be negative.
    pub g1: f64,
    /// Qubit-2 to reservoir coupling. May be negative.
    pub g2: f64,
    /// Qubit-qubit exchange strength.
    pub j: f64,
    /// Lorentzian full width. Strictly positive.
    pub gamma: f64,
    /// Detuning of the Lorentzian peak from the qubit transition.
    pub delta_c: f64,
}

impl SystemParams {
    pub fn new(g1: f64, g2: f64, j: f64, gamma: f64, delta_c: f64) -> Result<Self> {
        if ![g1, g2, j, gamma, delta_c].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParams("all rates must be finite".into()));
        }
        if gamma <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "gamma must be strictly positive, got {gamma}"
            )));
        }
        Ok(Self { g1, g2, j, gamma, delta_c })
    }

    /// Complex cavity rate `a = gamma/2 + i delta_c` that damps the
    /// pseudomode and shifts every memory effect.
    pub fn cavity_rate(&self) -> Complex64 {
        Complex64::new(self.gamma / 2.0, self.delta_c)
    }

    /// Same system expressed in units of `gamma` (so that gamma = 1).
    pub(crate) fn in_gamma_units(&self) -> ScaledParams {
        ScaledParams {
            g1: self.g1 / self.gamma,
            g2: self.g2 / self.gamma,
            j: self.j / self.gamma,
            delta_c: self.delta_c / self.gamma,
        }
    }
}

/// Rates in units of `gamma`; the scaled width is identically 1.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ScaledParams {
    pub g1: f64,
    pub g2: f64,
    pub j: f64,
    pub delta_c: f64,
}

/// The two excited-amplitude coefficients at t = 0, with the reservoir in
/// vacuum. Must be unit-normalized; construction rejects anything else
/// rather than silently renormalizing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialState {
    c1: Complex64,
    c2: Complex64,
}

impl InitialState {
    pub fn new(c1: Complex64, c2: Complex64) -> Result<Self> {
        let norm_sq = c1.norm_sqr() + c2.norm_sqr();
        if !norm_sq.is_finite() || (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm_sq });
        }
        Ok(Self { c1, c2 })
    }

    pub fn c1(&self) -> Complex64 {
        self.c1
    }

    pub fn c2(&self) -> Complex64 {
        self.c2
    }
}

/// Named initial two-qubit states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedState {
    /// Qubit 1 excited: (1, 0).
    E1G2,
    /// Qubit 2 excited: (0, 1).
    G1E2,
    /// Symmetric superposition (1, 1)/sqrt(2).
    Plus,
    /// Antisymmetric superposition (1, -1)/sqrt(2).
    Minus,
    /// Circular superposition (1, i)/sqrt(2).
    PlusI,
    /// Circular superposition (1, -i)/sqrt(2).
    MinusI,
}

impl NamedState {
    pub const ALL: [NamedState; 6] = [
        NamedState::E1G2,
        NamedState::G1E2,
        NamedState::Plus,
        NamedState::Minus,
        NamedState::PlusI,
        NamedState::MinusI,
    ];

    pub fn state(self) -> InitialState {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let (c1, c2) = match self {
            NamedState::E1G2 => (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)),
            NamedState::G1E2 => (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)),
            NamedState::Plus => (Complex64::new(r, 0.0), Complex64::new(r, 0.0)),
            NamedState::Minus => (Complex64::new(r, 0.0), Complex64::new(-r, 0.0)),
            NamedState::PlusI => (Complex64::new(r, 0.0), Complex64::new(0.0, r)),
            NamedState::MinusI => (Complex64::new(r, 0.0), Complex64::new(0.0, -r)),
        };
        InitialState { c1, c2 }
    }

    pub fn name(self) -> &'static str {
        match self {
            NamedState::E1G2 => "e1g2",
            NamedState::G1E2 => "g1e2",
            NamedState::Plus => "plus",
            NamedState::Minus => "minus",
            NamedState::PlusI => "plus_i",
            NamedState::MinusI => "minus_i",
        }
    }
}

impl std::str::FromStr for NamedState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "e1g2" => Ok(NamedState::E1G2),
            "g1e2" => Ok(NamedState::G1E2),
            "plus" => Ok(NamedState::Plus),
            "minus" => Ok(NamedState::Minus),
            "plus_i" | "plusi" => Ok(NamedState::PlusI),
            "minus_i" | "minusi" => Ok(NamedState::MinusI),
            other => Err(Error::UnknownState(other.to_string())),
        }
    }
}

/// Instantaneous three-amplitude state: the two qubit excitation amplitudes
/// and the pseudomode amplitude that carries the reservoir's collective
/// response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeState {
    pub c1: Complex64,
    pub c2: Complex64,
    pub b: Complex64,
}

impl AmplitudeState {
    pub fn norm_sq(&self) -> f64 {
        self.c1.norm_sqr() + self.c2.norm_sqr() + self.b.norm_sqr()
    }

    pub fn concurrence(&self) -> f64 {
        concurrence(self.c1, self.c2)
    }
}

/// Numeric tolerances shared by the solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Max |Re(s)| in units of gamma for a pole to count as non-decaying.
    pub pole_survival_eps: f64,
    /// Cross-backend trajectory agreement tolerance.
    pub backend_agreement_eps: f64,
    /// Newton-polish stopping threshold on |P(s)|/|P'(s)|.
    pub root_polish_eps: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            pole_survival_eps: 1e-9,
            backend_agreement_eps: 1e-6,
            root_polish_eps: 1e-13,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let ok = self.pole_survival_eps > 0.0
            && self.backend_agreement_eps > 0.0
            && self.root_polish_eps > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(
                "all tolerances must be strictly positive".into(),
            ))
        }
    }
}

/// Time series of the three amplitudes with the concurrence attached per
/// sample. Times are in physical units (1/gamma once rescaled).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<AmplitudeState>,
    pub concurrences: Vec<f64>,
}

impl Trajectory {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            times: Vec::with_capacity(n),
            states: Vec::with_capacity(n),
            concurrences: Vec::with_capacity(n),
        }
    }

    pub fn push(&mut self, t: f64, state: AmplitudeState) {
        self.times.push(t);
        self.concurrences.push(state.concurrence());
        self.states.push(state);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Nearest-sample downsampling onto a `dt_out` grid. Used to thin dense
    /// fixed-step output to a requested cadence.
    pub fn downsample(&self, dt_out: f64) -> Trajectory {
        if self.is_empty() || dt_out <= 0.0 {
            return self.clone();
        }
        let t0 = self.times[0];
        let t_end = *self.times.last().unwrap();
        let n_out = ((t_end - t0) / dt_out).round() as usize;
        let mut out = Trajectory::with_capacity(n_out + 1);
        let mut k = 0usize;
        for i in 0..=n_out {
            let target = t0 + i as f64 * dt_out;
            while k + 1 < self.times.len()
                && (self.times[k + 1] - target).abs() <= (self.times[k] - target).abs()
            {
                k += 1;
            }
            out.times.push(self.times[k]);
            out.states.push(self.states[k]);
            out.concurrences.push(self.concurrences[k]);
        }
        out
    }
}

/// Reservoir memory kernel for a Lorentzian density of states:
/// `I(tau) = exp(-(gamma/2 + i delta_c) tau)`.
///
/// Only defined for ordered times, i.e. `tau >= 0`.
pub fn kernel_eval(tau: f64, params: &SystemParams) -> Result<Complex64> {
    if tau < 0.0 {
        return Err(Error::NegativeLag(tau));
    }
    Ok((-params.cavity_rate() * tau).exp())
}

/// Two-qubit concurrence of a pure single-excitation state: `2 |c1 c2*|`.
pub fn concurrence(c1: Complex64, c2: Complex64) -> f64 {
    2.0 * (c1 * c2.conj()).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::str::FromStr;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn params(g1: f64, g2: f64, j: f64, gamma: f64, delta_c: f64) -> SystemParams {
        SystemParams::new(g1, g2, j, gamma, delta_c).unwrap()
    }

    #[test]
    fn kernel_at_zero_lag_is_one() {
        let p = params(0.3, -1.2, 0.7, 2.0, -0.4);
        let k = kernel_eval(0.0, &p).unwrap();
        assert_eq!(k, c(1.0, 0.0));
    }

    #[test]
    fn kernel_pure_decay_on_resonance() {
        let p = params(1.0, 1.0, 0.0, 1.0, 0.0);
        let k = kernel_eval(2.0, &p).unwrap();
        assert!((k.re - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(k.im, 0.0);
    }

    #[test]
    fn kernel_detuned_closed_form() {
        // tau = 1, gamma = 1, delta_c = pi: exp(-1/2) (cos pi - i sin pi).
        let p = params(1.0, 1.0, 0.0, 1.0, std::f64::consts::PI);
        let k = kernel_eval(1.0, &p).unwrap();
        let expect = -(-0.5f64).exp();
        assert!((k.re - expect).abs() < 1e-15, "re = {}", k.re);
        assert!(k.im.abs() < 1e-15, "im = {}", k.im);
    }

    #[test]
    fn kernel_matches_lorentzian_quadrature() {
        // Independent route: integrate the Lorentzian DOS against the phase
        // factor with Simpson's rule over a wide truncated window.
        let p = params(0.5, 0.5, 0.0, 1.0, std::f64::consts::PI);
        let tau = 1.0;
        let (gamma, dc) = (p.gamma, p.delta_c);
        let half = gamma / 2.0;
        let span = 4000.0;
        let n = 1_600_000usize; // even
        let h = 2.0 * span / n as f64;
        let f = |x: f64| -> Complex64 {
            // x = omega - omega_eg; Lorentzian centered at delta_c.
            let dos = half / std::f64::consts::PI / ((x - dc).powi(2) + half * half);
            dos * c(0.0, -x * tau).exp()
        };
        let mut acc = f(-span) + f(span);
        for i in 1..n {
            let x = -span + i as f64 * h;
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(x);
        }
        let integral = acc * (h / 3.0);
        let closed = kernel_eval(tau, &p).unwrap();
        assert!(
            (integral - closed).norm() < 1e-4,
            "quadrature {integral} vs closed form {closed}"
        );
    }

    #[test]
    fn kernel_rejects_negative_lag() {
        let p = params(1.0, 1.0, 0.0, 1.0, 0.0);
        assert!(matches!(
            kernel_eval(-0.1, &p),
            Err(Error::NegativeLag(_))
        ));
    }

    #[test]
    fn kernel_semigroup_property() {
        let p = params(0.0, 0.0, 0.0, 1.7, -2.3);
        let mut t1 = 0.13;
        let mut t2 = 2.71;
        for _ in 0..40 {
            let lhs = kernel_eval(t1 + t2, &p).unwrap();
            let rhs = kernel_eval(t1, &p).unwrap() * kernel_eval(t2, &p).unwrap();
            assert!((lhs - rhs).norm() < 1e-12);
            t1 = (t1 * 1.37 + 0.11) % 5.0;
            t2 = (t2 * 0.73 + 0.29) % 7.0;
        }
    }

    #[test]
    fn concurrence_examples() {
        assert!((concurrence(c(0.5, 0.0), c(-0.5, 0.0)) - 0.5).abs() < 1e-15);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((concurrence(c(r, 0.0), c(0.0, r)) - 1.0).abs() < 1e-15);
        assert_eq!(concurrence(c(1.0, 0.0), c(0.0, 0.0)), 0.0);
    }

    #[test]
    fn concurrence_symmetry_and_scaling() {
        let a = c(0.3, -0.4);
        let b = c(-0.1, 0.7);
        assert_eq!(concurrence(a, b), concurrence(b, a));
        let lam = c(0.0, -1.3);
        assert!(
            (concurrence(lam * a, b) - lam.norm() * concurrence(a, b)).abs() < 1e-15
        );
        // Phase invariance, global and relative.
        let phase = c(0.0, 0.9).exp();
        assert!((concurrence(a * phase, b * phase) - concurrence(a, b)).abs() < 1e-15);
        assert!((concurrence(a * phase, b) - concurrence(a, b)).abs() < 1e-15);
    }

    #[test]
    fn library_states_are_normalized() {
        for s in NamedState::ALL {
            let st = s.state();
            let norm = st.c1().norm_sqr() + st.c2().norm_sqr();
            assert!((norm - 1.0).abs() < 1e-15, "{s:?} norm {norm}");
        }
    }

    #[test]
    fn library_state_values() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let e = NamedState::E1G2.state();
        assert_eq!((e.c1(), e.c2()), (c(1.0, 0.0), c(0.0, 0.0)));
        let m = NamedState::Minus.state();
        assert_eq!((m.c1(), m.c2()), (c(r, 0.0), c(-r, 0.0)));
        let pi = NamedState::PlusI.state();
        assert_eq!((pi.c1(), pi.c2()), (c(r, 0.0), c(0.0, r)));
    }

    #[test]
    fn state_names_round_trip() {
        for s in NamedState::ALL {
            assert_eq!(NamedState::from_str(s.name()).unwrap(), s);
        }
        assert!(matches!(
            NamedState::from_str("bell"),
            Err(Error::UnknownState(_))
        ));
    }

    #[test]
    fn initial_state_rejects_unnormalized() {
        assert!(InitialState::new(c(1.0, 0.0), c(0.1, 0.0)).is_err());
        assert!(InitialState::new(c(0.6, 0.0), c(0.8, 0.0)).is_ok());
    }

    #[test]
    fn params_reject_bad_gamma() {
        assert!(SystemParams::new(1.0, 1.0, 0.0, 0.0, 0.0).is_err());
        assert!(SystemParams::new(1.0, 1.0, 0.0, -1.0, 0.0).is_err());
        assert!(SystemParams::new(1.0, f64::NAN, 0.0, 1.0, 0.0).is_err());
        // Negative couplings are allowed.
        assert!(SystemParams::new(-1.0, -2.0, 0.5, 1.0, 0.0).is_ok());
    }

    #[test]
    fn tolerances_must_be_positive() {
        let mut t = Tolerances::default();
        t.validate().unwrap();
        t.pole_survival_eps = 0.0;
        assert!(t.validate().is_err());
    }
}
