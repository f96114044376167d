//! Parallel steady-state concurrence maps over rectangular coupling grids.
//!
//! Cells are pure functions of their parameters, so the sweep is an
//! embarrassingly parallel map. Work is partitioned by grid rows into a
//! preallocated output, which makes the result independent of worker count
//! and scheduling, byte for byte.

use rayon::prelude::*;

use crate::model::{InitialState, Tolerances};
use crate::steady::{steady_concurrence, SolutionMethod};
use crate::{Error, Result, SystemParams};

/// Uniform closed grid `min, ..., max` with `n` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRange {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl GridRange {
    pub fn new(min: f64, max: f64, n: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) || min >= max || n < 2 {
            return Err(Error::InvalidParams(format!(
                "grid requires finite min < max and n >= 2, got [{min}, {max}] x {n}"
            )));
        }
        Ok(Self { min, max, n })
    }

    pub fn value(&self, i: usize) -> f64 {
        self.min + i as f64 * (self.max - self.min) / (self.n - 1) as f64
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.value(i))
    }
}

/// A rectangular `(g1, g2)` sweep at fixed exchange, width and detuning.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub g1_range: GridRange,
    pub g2_range: GridRange,
    pub j: f64,
    pub gamma: f64,
    pub delta_c: f64,
    pub init: InitialState,
    pub tol: Tolerances,
}

impl SweepSpec {
    fn validate(&self) -> Result<()> {
        SystemParams::new(0.0, 0.0, self.j, self.gamma, self.delta_c)?;
        self.tol.validate()
    }
}

/// One evaluated grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SweepCell {
    pub g1: f64,
    pub g2: f64,
    pub ssc: f64,
    pub n_surviving: usize,
    pub oscillatory: bool,
    pub degenerate_fallback: bool,
}

/// Row-major sweep output: cell `(i1, i2)` lives at `i2 * n1 + i1`, with
/// `g1` varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub n1: usize,
    pub n2: usize,
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn cell(&self, i1: usize, i2: usize) -> &SweepCell {
        &self.cells[i2 * self.n1 + i1]
    }
}

fn eval_cell(spec: &SweepSpec, g1: f64, g2: f64) -> Result<SweepCell> {
    let params = SystemParams::new(g1, g2, spec.j, spec.gamma, spec.delta_c)?;
    let r = steady_concurrence(&params, &spec.init, &spec.tol)?;
    Ok(SweepCell {
        g1,
        g2,
        ssc: r.ssc,
        n_surviving: r.surviving_poles.len(),
        oscillatory: r.oscillatory,
        degenerate_fallback: r.method == SolutionMethod::IntegratorFallback,
    })
}

/// Evaluate the full grid on `workers` threads.
///
/// The output is deterministic and identical for every worker count.
pub fn run_sweep(spec: &SweepSpec, workers: usize) -> Result<SweepResult> {
    spec.validate()?;
    if workers == 0 {
        return Err(Error::InvalidParams("workers must be >= 1".into()));
    }
    let (n1, n2) = (spec.g1_range.n, spec.g2_range.n);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParams(format!("worker pool: {e}")))?;

    let mut cells: Vec<Result<SweepCell>> = vec![Ok(SweepCell::default()); n1 * n2];
    pool.install(|| {
        cells
            .par_chunks_mut(n1)
            .enumerate()
            .for_each(|(i2, row)| {
                let g2 = spec.g2_range.value(i2);
                for (i1, slot) in row.iter_mut().enumerate() {
                    *slot = eval_cell(spec, spec.g1_range.value(i1), g2);
                }
            });
    });
    let cells = cells.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { n1, n2, cells })
}

/// One sweep per requested detuning, all on the same grid.
pub fn run_detuning_comparison(
    spec: &SweepSpec,
    detunings: &[f64],
    workers: usize,
) -> Result<Vec<SweepResult>> {
    detunings
        .iter()
        .map(|&dc| {
            let mut s = spec.clone();
            s.delta_c = dc;
            run_sweep(&s, workers)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NamedState;
    use crate::ode;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec(j: f64, delta_c: f64, init: NamedState, half: f64, n: usize) -> SweepSpec {
        SweepSpec {
            g1_range: GridRange::new(-half, half, n).unwrap(),
            g2_range: GridRange::new(-half, half, n).unwrap(),
            j,
            gamma: 1.0,
            delta_c,
            init: init.state(),
            tol: Tolerances::default(),
        }
    }

    #[test]
    fn grid_endpoints_are_exact() {
        let g = GridRange::new(-2.0, 2.0, 401).unwrap();
        assert_eq!(g.value(0), -2.0);
        assert_eq!(g.value(400), 2.0);
        assert!(GridRange::new(1.0, 1.0, 10).is_err());
        assert!(GridRange::new(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn identical_across_worker_counts() {
        let s = spec(1.0, 0.0, NamedState::Plus, 2.0, 41);
        let r1 = run_sweep(&s, 1).unwrap();
        let r2 = run_sweep(&s, 2).unwrap();
        let r4 = run_sweep(&s, 4).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(r1, r4);
    }

    #[test]
    fn joint_sign_flip_symmetry_for_real_initial_states() {
        // Exactly negated inputs give bitwise-identical cells.
        let s = spec(1.3, 0.7, NamedState::E1G2, 1.5, 31);
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        for _ in 0..50 {
            let g1: f64 = rng.gen_range(-2.0..2.0);
            let g2: f64 = rng.gen_range(-2.0..2.0);
            let a = eval_cell(&s, g1, g2).unwrap();
            let b = eval_cell(&s, -g1, -g2).unwrap();
            assert_eq!(a.ssc, b.ssc, "({g1},{g2})");
            assert_eq!(a.n_surviving, b.n_surviving);
        }
        // Grid mirror cells sit one ulp apart in their inputs, so allow
        // round-off there.
        let r = run_sweep(&s, 2).unwrap();
        let n = 31;
        for i2 in 0..n {
            for i1 in 0..n {
                let a = r.cell(i1, i2);
                let b = r.cell(n - 1 - i1, n - 1 - i2);
                assert!((a.ssc - b.ssc).abs() <= 1e-12, "cells ({i1},{i2})");
            }
        }
    }

    #[test]
    fn spot_check_against_long_time_integration() {
        use crate::spectral::{assemble, find_poles};
        let s = spec(0.8, 0.0, NamedState::PlusI, 1.5, 21);
        let r = run_sweep(&s, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let mut checked = 0;
        while checked < 5 {
            let i1 = rng.gen_range(0..21);
            let i2 = rng.gen_range(0..21);
            let cell = r.cell(i1, i2);
            if cell.degenerate_fallback || cell.oscillatory {
                continue;
            }
            let p = SystemParams::new(cell.g1, cell.g2, s.j, s.gamma, s.delta_c).unwrap();
            // Integrate past the slowest transient; skip cells whose
            // transients outlive a sane horizon.
            let dec = find_poles(&assemble(&p, &s.init), &s.tol).unwrap();
            let kappa = dec
                .poles
                .iter()
                .filter(|z| z.re.abs() > 1e-9)
                .map(|z| z.re.abs())
                .fold(f64::INFINITY, f64::min);
            if kappa < 0.1 {
                continue;
            }
            let t_end = 60.0 + 12.0 / kappa;
            let gen = ode::build_generator(&p);
            let traj = ode::integrate(&gen, &s.init, t_end, 0.05).unwrap();
            let tail: Vec<f64> = traj
                .times
                .iter()
                .zip(traj.concurrences.iter())
                .filter(|(t, _)| **t >= t_end - 10.0)
                .map(|(_, c)| *c)
                .collect();
            let avg = tail.iter().sum::<f64>() / tail.len() as f64;
            assert!(
                (avg - cell.ssc).abs() < 1e-4,
                "cell ({},{}) ssc {} vs ode {avg}",
                cell.g1,
                cell.g2,
                cell.ssc
            );
            checked += 1;
        }
    }

    #[test]
    fn exchange_confines_finite_ssc_to_the_diagonals() {
        let n = 41;
        let s = spec(1.0, 0.0, NamedState::Plus, 2.0, n);
        let r = run_sweep(&s, 2).unwrap();
        for i2 in 0..n {
            for i1 in 0..n {
                let cell = r.cell(i1, i2);
                let on_diag = i1 == i2;
                let on_anti = i1 + i2 == n - 1;
                if on_anti && !on_diag {
                    assert!((cell.ssc - 1.0).abs() < 1e-9, "anti cell ({i1},{i2})");
                } else if !on_diag {
                    assert!(cell.ssc == 0.0, "off-line cell ({i1},{i2}) = {}", cell.ssc);
                }
            }
        }
    }

    #[test]
    fn detuning_comparison_mirror_at_zero_detuning() {
        // With init (0,1) and delta_c = 0 the map is symmetric under
        // g2 -> -g2.
        let s = spec(4.0, 0.0, NamedState::G1E2, 2.0, 25);
        let r = &run_detuning_comparison(&s, &[0.0], 2).unwrap()[0];
        let n = 25;
        for i2 in 0..n {
            for i1 in 0..n {
                let a = r.cell(i1, i2).ssc;
                let b = r.cell(i1, n - 1 - i2).ssc;
                assert!((a - b).abs() < 1e-10, "cells ({i1},{i2}): {a} vs {b}");
            }
        }
    }
}
