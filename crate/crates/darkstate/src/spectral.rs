//! Closed-form Laplace-domain solution.
//!
//! Multiplying both Laplace equations by `(s + a)`, `a = gamma/2 + i
//! delta_c`, turns the system into a 2x2 polynomial linear system. Cramer's
//! rule gives each amplitude as a rational function whose common quartic
//! denominator factors exactly as `(s + a) Q(s)` with `Q` a monic cubic; the
//! spurious root `-a` is deflated analytically and only `Q` is ever solved.
//! Poles are the roots of `Q`, amplitudes are residue sums `c_i(t) = sum_j
//! R_ij exp(s_j t)`.

use num_complex::Complex64;

use crate::model::{AmplitudeState, InitialState, SystemParams, Tolerances, Trajectory};
use crate::{Error, Result};

/// Pole separation (in units of gamma) below which a decomposition is
/// flagged degenerate and refused by the closed-form evaluator.
pub const DEGENERACY_SEPARATION: f64 = 1e-6;

/// Residue magnitude above which a degenerate decomposition is reported as
/// near-defective instead of being returned.
pub const NEAR_DEFECTIVE_RESIDUE: f64 = 1e6;

/// Laplace solution `F_i(s) = N_i(s) / Q(s)` in coefficient form.
///
/// Coefficients are stored highest degree first: `cubic_den = [1, q2, q1,
/// q0]` is the monic reduced denominator, `num1`/`num2` are the quadratic
/// numerators for the two qubit amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalSolution {
    pub cubic_den: [Complex64; 4],
    pub num1: [Complex64; 3],
    pub num2: [Complex64; 3],
    pub(crate) gamma: f64,
}

/// Poles of the reduced cubic with per-amplitude residues.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleDecomposition {
    pub poles: [Complex64; 3],
    pub residues1: [Complex64; 3],
    pub residues2: [Complex64; 3],
    /// Set when the minimum pairwise pole distance drops below
    /// [`DEGENERACY_SEPARATION`] times gamma.
    pub degenerate: bool,
    pub(crate) gamma: f64,
}

/// Evaluate a polynomial given coefficients highest degree first.
fn eval_poly(coeffs: &[Complex64], s: Complex64) -> Complex64 {
    coeffs
        .iter()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
}

/// Product of two coefficient arrays (highest degree first).
fn poly_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Build the reduced rational solution from system parameters and the
/// initial state.
pub fn assemble(params: &SystemParams, init: &InitialState) -> RationalSolution {
    let a = params.cavity_rate();
    let (g1, g2, j) = (params.g1, params.g2, params.j);
    let (c1, c2) = (init.c1(), init.c2());
    let ihj = Complex64::new(0.0, j / 2.0); // i J / 2
    let g1g2 = Complex64::new(g1 * g2, 0.0);

    // Q(s) = s^2 (s + a) + (g1^2 + g2^2) s + (J^2/4)(s + a) - i J g1 g2
    let q1 = Complex64::new(g1 * g1 + g2 * g2 + j * j / 4.0, 0.0);
    let q0 = a * (j * j / 4.0) - Complex64::new(0.0, j) * g1g2;
    let cubic_den = [Complex64::new(1.0, 0.0), a, q1, q0];

    // A12(s) = (i J / 2)(s + a) + g1 g2, linear in s.
    // N1 = c1 A22 - c2 A12, N2 = c2 A11 - c1 A12 with A_ii = s(s+a) + g_i^2.
    let a12_const = ihj * a + g1g2;
    let num1 = [
        c1,
        c1 * a - c2 * ihj,
        c1 * (g2 * g2) - c2 * a12_const,
    ];
    let num2 = [
        c2,
        c2 * a - c1 * ihj,
        c2 * (g1 * g1) - c1 * a12_const,
    ];

    RationalSolution {
        cubic_den,
        num1,
        num2,
        gamma: params.gamma,
    }
}

/// The unreduced quartic `P(s) = A11 A22 - A12^2` assembled by direct
/// polynomial multiplication, highest degree first. `P(-a) = 0` is an
/// analytic identity and `P = (s + a) Q` holds coefficient-wise; both are
/// used as structural cross-checks of [`assemble`].
pub fn unreduced_quartic(params: &SystemParams) -> [Complex64; 5] {
    let a = params.cavity_rate();
    let (g1, g2, j) = (params.g1, params.g2, params.j);
    let one = Complex64::new(1.0, 0.0);
    let a11 = [one, a, Complex64::new(g1 * g1, 0.0)];
    let a22 = [one, a, Complex64::new(g2 * g2, 0.0)];
    let a12 = [
        Complex64::new(0.0, j / 2.0),
        Complex64::new(0.0, j / 2.0) * a + Complex64::new(g1 * g2, 0.0),
    ];
    let p = poly_mul(&a11, &a22);
    let q = poly_mul(&a12, &a12);
    let mut out = [Complex64::new(0.0, 0.0); 5];
    for (i, v) in p.into_iter().enumerate() {
        out[i] = v;
    }
    out[2] -= q[0];
    out[3] -= q[1];
    out[4] -= q[2];
    out
}

/// Stable complex quadratic roots of `s^2 + b s + c`.
fn quadratic_roots(b: Complex64, c: Complex64) -> [Complex64; 2] {
    if c.norm() == 0.0 {
        return [Complex64::new(0.0, 0.0), -b];
    }
    let disc = b * b - 4.0 * c;
    let sq = disc.sqrt();
    // Pick the sign that avoids cancellation in b + sq.
    let r = if (b.conj() * sq).re >= 0.0 {
        -(b + sq) / 2.0
    } else {
        -(b - sq) / 2.0
    };
    [r, c / r]
}

/// Roots of the monic cubic `s^3 + q2 s^2 + q1 s + q0` via the complex
/// Cardano resolvent. Exact zero constant terms are deflated first so that
/// structurally exact roots at the origin stay exact.
fn cubic_roots(q2: Complex64, q1: Complex64, q0: Complex64) -> [Complex64; 3] {
    let zero = Complex64::new(0.0, 0.0);
    if q0 == zero {
        let [r1, r2] = quadratic_roots(q2, q1);
        return [zero, r1, r2];
    }
    // Depress: s = z - q2/3, z^3 + p z + q = 0.
    let shift = q2 / 3.0;
    let p = q1 - q2 * q2 / 3.0;
    let q = q0 - q1 * q2 / 3.0 + 2.0 * q2 * q2 * q2 / 27.0;
    if p == zero && q == zero {
        return [-shift, -shift, -shift];
    }
    let disc = (q / 2.0) * (q / 2.0) + (p / 3.0) * (p / 3.0) * (p / 3.0);
    let sq = disc.sqrt();
    // Choose the branch with the larger magnitude to keep u well away from 0.
    let u3a = -q / 2.0 + sq;
    let u3b = -q / 2.0 - sq;
    let u3 = if u3a.norm() >= u3b.norm() { u3a } else { u3b };
    let u = u3.cbrt();
    let v = if u.norm() == 0.0 { zero } else { -p / (3.0 * u) };
    let w = Complex64::new(-0.5, 0.75f64.sqrt());
    let wc = w.conj();
    [
        u + v - shift,
        u * w + v * wc - shift,
        u * wc + v * w - shift,
    ]
}

/// One Newton polish pass: iterate `s -= Q(s)/Q'(s)` until the update drops
/// below `polish_eps` or the iteration cap is reached.
fn newton_polish(coeffs: &[Complex64; 4], mut s: Complex64, polish_eps: f64) -> Complex64 {
    let deriv = [3.0 * coeffs[0], 2.0 * coeffs[1], coeffs[2]];
    for _ in 0..60 {
        let d = eval_poly(&deriv, s);
        if d.norm() == 0.0 {
            break;
        }
        let step = eval_poly(coeffs, s) / d;
        s -= step;
        if step.norm() < polish_eps * (1.0 + s.norm()) {
            break;
        }
    }
    s
}

/// Find the three poles and per-amplitude residues of a rational solution.
///
/// The cubic is solved in units of gamma (closed-form resolvent plus a
/// mandatory Newton polish), rescaled back, and sorted by descending real
/// part. Residues of simple poles are `N_i(s_j) / Q'(s_j)`. A decomposition
/// whose poles nearly collide is flagged `degenerate`; if on top of that the
/// residues blow past [`NEAR_DEFECTIVE_RESIDUE`] it is reported as an error
/// rather than returned.
pub fn find_poles(sol: &RationalSolution, tol: &Tolerances) -> Result<PoleDecomposition> {
    tol.validate()?;
    let g = sol.gamma;
    // Rescale to gamma = 1: s = gamma * sigma.
    let q2 = sol.cubic_den[1] / g;
    let q1 = sol.cubic_den[2] / (g * g);
    let q0 = sol.cubic_den[3] / (g * g * g);
    let scaled = [Complex64::new(1.0, 0.0), q2, q1, q0];
    let mut roots = cubic_roots(q2, q1, q0);
    for r in roots.iter_mut() {
        *r = newton_polish(&scaled, *r, tol.root_polish_eps);
    }
    roots.sort_by(|x, y| {
        y.re.partial_cmp(&x.re)
            .unwrap()
            .then(x.im.partial_cmp(&y.im).unwrap())
    });

    let mut min_sep = f64::INFINITY;
    for i in 0..3 {
        for k in (i + 1)..3 {
            min_sep = min_sep.min((roots[i] - roots[k]).norm());
        }
    }
    let degenerate = min_sep < DEGENERACY_SEPARATION;

    let poles = [roots[0] * g, roots[1] * g, roots[2] * g];
    let dq = [
        3.0 * sol.cubic_den[0],
        2.0 * sol.cubic_den[1],
        sol.cubic_den[2],
    ];
    let mut residues1 = [Complex64::new(0.0, 0.0); 3];
    let mut residues2 = [Complex64::new(0.0, 0.0); 3];
    let mut max_residue = 0.0f64;
    for (k, &s) in poles.iter().enumerate() {
        let d = eval_poly(&dq, s);
        residues1[k] = eval_poly(&sol.num1, s) / d;
        residues2[k] = eval_poly(&sol.num2, s) / d;
        max_residue = max_residue.max(residues1[k].norm()).max(residues2[k].norm());
    }
    if degenerate && !(max_residue <= NEAR_DEFECTIVE_RESIDUE) {
        return Err(Error::NearDefective {
            min_separation: min_sep,
            max_residue,
        });
    }

    Ok(PoleDecomposition {
        poles,
        residues1,
        residues2,
        degenerate,
        gamma: g,
    })
}

/// Closed-form qubit amplitudes at time `t >= 0`.
///
/// Refuses degenerate decompositions: a `t exp(st)` branch is never
/// synthesized, the ODE backend handles those cases instead.
pub fn amplitudes_at(dec: &PoleDecomposition, t: f64) -> Result<(Complex64, Complex64)> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    if dec.degenerate {
        let mut min_sep = f64::INFINITY;
        for i in 0..3 {
            for k in (i + 1)..3 {
                min_sep = min_sep.min((dec.poles[i] - dec.poles[k]).norm() / dec.gamma);
            }
        }
        return Err(Error::DegeneratePoles {
            min_separation: min_sep,
        });
    }
    let mut c1 = Complex64::new(0.0, 0.0);
    let mut c2 = Complex64::new(0.0, 0.0);
    for k in 0..3 {
        let e = (dec.poles[k] * t).exp();
        c1 += dec.residues1[k] * e;
        c2 += dec.residues2[k] * e;
    }
    Ok((c1, c2))
}

/// Full trajectory from the closed form, sampled at `t = 0, dt_out, ...,
/// t_end`, including the pseudomode amplitude reconstructed from its own
/// four-pole residue expansion.
pub fn trajectory(
    params: &SystemParams,
    init: &InitialState,
    tol: &Tolerances,
    t_end: f64,
    dt_out: f64,
) -> Result<Trajectory> {
    if t_end <= 0.0 || dt_out <= 0.0 {
        return Err(Error::InvalidParams(
            "t_end and dt_out must be positive".into(),
        ));
    }
    let sol = assemble(params, init);
    let dec = find_poles(&sol, tol)?;
    if dec.degenerate {
        let mut min_sep = f64::INFINITY;
        for i in 0..3 {
            for k in (i + 1)..3 {
                min_sep = min_sep.min((dec.poles[i] - dec.poles[k]).norm() / dec.gamma);
            }
        }
        return Err(Error::DegeneratePoles {
            min_separation: min_sep,
        });
    }

    // b(t): B(s) = -i (g1 N1 + g2 N2) / ((s+a) Q(s)) has the three qubit
    // poles plus one at -a. Decoupled systems never populate the pseudomode.
    let a = params.cavity_rate();
    let coupled = params.g1 != 0.0 || params.g2 != 0.0;
    let mut b_res = [Complex64::new(0.0, 0.0); 4];
    if coupled {
        let dq = [
            3.0 * sol.cubic_den[0],
            2.0 * sol.cubic_den[1],
            sol.cubic_den[2],
        ];
        let mi = Complex64::new(0.0, -1.0);
        for k in 0..3 {
            let s = dec.poles[k];
            let num = params.g1 * eval_poly(&sol.num1, s) + params.g2 * eval_poly(&sol.num2, s);
            b_res[k] = mi * num / ((s + a) * eval_poly(&dq, s));
        }
        let num = params.g1 * eval_poly(&sol.num1, -a) + params.g2 * eval_poly(&sol.num2, -a);
        b_res[3] = mi * num / eval_poly(&sol.cubic_den, -a);
    }

    let n = (t_end / dt_out).floor() as usize;
    let mut traj = Trajectory::with_capacity(n + 1);
    for i in 0..=n {
        let t = i as f64 * dt_out;
        let (c1, c2) = amplitudes_at(&dec, t)?;
        let b = if coupled {
            b_res[0] * (dec.poles[0] * t).exp()
                + b_res[1] * (dec.poles[1] * t).exp()
                + b_res[2] * (dec.poles[2] * t).exp()
                + b_res[3] * (-a * t).exp()
        } else {
            Complex64::new(0.0, 0.0)
        };
        traj.push(t, AmplitudeState { c1, c2, b });
    }
    Ok(traj)
}
