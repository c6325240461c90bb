//! Derivative-free local minimisation.

use argmin::core::{CostFunction, Error as ArgminError, Executor, State, TerminationReason, TerminationStatus};
use argmin::solver::neldermead::NelderMead;

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: u64,
    /// False when the iteration budget ran out before the simplex collapsed.
    pub converged: bool,
}

struct Objective<F>(F);

impl<F: Fn(&[f64]) -> f64> CostFunction for Objective<F> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> Result<f64, ArgminError> {
        let v = (self.0)(p);
        Ok(if v.is_nan() { f64::INFINITY } else { v })
    }
}

/// Nelder-Mead from `x0` with an axis-aligned initial simplex of edge `step`.
///
/// Never returns a point worse than `x0`.
pub fn nelder_mead<F>(f: F, x0: &[f64], step: f64, max_iter: u64, tol: f64) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let f0 = {
        let v = f(x0);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex = vec![x0.to_vec()];
    for k in 0..x0.len() {
        let mut v = x0.to_vec();
        v[k] += step;
        simplex.push(v);
    }
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(tol)
        .expect("tolerance is non-negative");
    let fallback = Minimum {
        x: x0.to_vec(),
        value: f0,
        iterations: 0,
        converged: false,
    };
    let Ok(res) = Executor::new(Objective(&f), solver)
        .configure(|s| s.max_iters(max_iter))
        .run()
    else {
        return fallback;
    };
    let state = res.state();
    let converged = matches!(
        state.get_termination_status(),
        TerminationStatus::Terminated(TerminationReason::SolverConverged)
    );
    match state.get_best_param() {
        Some(x) if state.get_best_cost() < f0 => Minimum {
            x: x.clone(),
            value: state.get_best_cost(),
            iterations: state.get_iter(),
            converged,
        },
        _ => Minimum {
            iterations: state.get_iter(),
            converged,
            ..fallback
        },
    }
}
