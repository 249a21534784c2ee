//! Box-constrained limited-memory quasi-Newton minimization.
//!
//! Search directions come from the L-BFGS two-loop recursion restricted to
//! the free variables (those not held at a bound by the gradient), and steps
//! are projected back onto the box. The Armijo test is applied along the
//! projected path, so accepted iterates never increase the objective.

use alloc::collections::VecDeque;

use super::{check_theta, DecisionPoint, Objective};
use crate::error::{invalid, Error, Result};
use crate::numerics::central_gradient;
use crate::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop once the projected-gradient norm falls to this level.
    pub tol: f64,
    pub max_iter: usize,
    /// Number of curvature pairs kept.
    pub memory: usize,
    /// Relative step of the central-difference gradient.
    pub gradient_step: f64,
    pub armijo: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 500,
            memory: 10,
            gradient_step: 1e-6,
            armijo: 1e-4,
        }
    }
}

const MAX_HALVINGS: usize = 60;
const BOX_TOL: f64 = 1e-12;

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn minimize<P: Objective + ?Sized>(
    problem: &P,
    theta: &[f64],
    x0: &[f64],
    opts: SolverOptions,
) -> Result<DecisionPoint> {
    check_theta(problem, theta)?;
    if !(opts.tol > 0.0) {
        return Err(invalid("solver tolerance must be positive"));
    }
    let bounds = problem.bounds();
    if x0.len() != bounds.len() {
        return Err(Error::DimensionMismatch(alloc::format!(
            "start point has {} coordinates, expected {}",
            x0.len(),
            bounds.len()
        )));
    }
    if x0.iter().zip(bounds).any(|(&v, b)| !b.contains(v, BOX_TOL)) {
        return Err(invalid("start point lies outside the box"));
    }
    let f = |x: &[f64]| problem.evaluate(x, theta);
    let project = |x: &mut [f64]| {
        for (v, b) in x.iter_mut().zip(bounds) {
            *v = b.clamp(*v);
        }
    };

    let mut x: Vec<f64> = x0.to_vec();
    project(&mut x);
    let mut fx = f(&x);
    if !fx.is_finite() {
        return Err(Error::NonFiniteEvaluation);
    }
    let mut g = central_gradient(f, &x, opts.gradient_step)?;
    let mut history: VecDeque<Pair> = VecDeque::with_capacity(opts.memory);
    let n = x.len();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        let pg: Vec<f64> = (0..n)
            .map(|i| bounds[i].clamp(x[i] - g[i]) - x[i])
            .collect();
        if norm(&pg) <= opts.tol {
            converged = true;
            break;
        }
        // Coordinates pinned at a bound with the gradient pushing outward.
        let free: Vec<bool> = (0..n)
            .map(|i| {
                let at_lower = x[i] <= bounds[i].lower + BOX_TOL && g[i] > 0.0;
                let at_upper = x[i] >= bounds[i].upper - BOX_TOL && g[i] < 0.0;
                !(at_lower || at_upper)
            })
            .collect();

        let mut direction = two_loop(&g, &history, &free);
        let mut slope = dot(&g, &direction);
        if !(slope < 0.0) {
            history.clear();
            direction = (0..n).map(|i| if free[i] { -g[i] } else { 0.0 }).collect();
            slope = dot(&g, &direction);
        }
        let step0 = if history.is_empty() {
            (1.0 / norm(&direction)).min(1.0)
        } else {
            1.0
        };

        let accepted = line_search(&f, &x, fx, &g, &direction, step0, opts.armijo, &project);
        let (x_new, f_new) = match accepted {
            Some(v) => v,
            None if !history.is_empty() => {
                // Stale curvature; retry from steepest descent.
                history.clear();
                continue;
            }
            None => break,
        };
        iterations += 1;

        let g_new = central_gradient(f, &x_new, opts.gradient_step)?;
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) && sy > 0.0 {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back(Pair {
                s,
                y,
                rho: 1.0 / sy,
            });
        }
        x = x_new;
        fx = f_new;
        g = g_new;
    }

    if !converged && iterations >= opts.max_iter {
        let pg: Vec<f64> = (0..n)
            .map(|i| bounds[i].clamp(x[i] - g[i]) - x[i])
            .collect();
        converged = norm(&pg) <= opts.tol;
    }
    Ok(DecisionPoint {
        x,
        value: fx,
        converged,
        iterations,
    })
}

fn two_loop(g: &[f64], history: &VecDeque<Pair>, free: &[bool]) -> Vec<f64> {
    let mask = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .zip(free)
            .map(|(&a, &f)| if f { a } else { 0.0 })
            .collect()
    };
    let mut q = mask(g);
    let mut alphas = Vec::with_capacity(history.len());
    for pair in history.iter().rev() {
        let a = pair.rho * dot(&mask(&pair.s), &q);
        for (qi, yi) in q.iter_mut().zip(mask(&pair.y)) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some(last) = history.back() {
        let y = mask(&last.y);
        let yy = dot(&y, &y);
        let sy = dot(&mask(&last.s), &y);
        if yy > 0.0 && sy > 0.0 {
            let gamma = sy / yy;
            q.iter_mut().for_each(|v| *v *= gamma);
        }
    }
    for (pair, a) in history.iter().zip(alphas.into_iter().rev()) {
        let b = pair.rho * dot(&mask(&pair.y), &q);
        for (qi, si) in q.iter_mut().zip(mask(&pair.s)) {
            *qi += (a - b) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}

#[allow(clippy::too_many_arguments)]
fn line_search<F, Proj>(
    f: &F,
    x: &[f64],
    fx: f64,
    g: &[f64],
    direction: &[f64],
    step0: f64,
    armijo: f64,
    project: &Proj,
) -> Option<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> f64,
    Proj: Fn(&mut [f64]),
{
    let mut step = step0;
    for _ in 0..MAX_HALVINGS {
        let mut trial: Vec<f64> = x.iter().zip(direction).map(|(a, d)| a + step * d).collect();
        project(&mut trial);
        let decrease: f64 = trial
            .iter()
            .zip(x)
            .zip(g)
            .map(|((t, a), gi)| (t - a) * gi)
            .sum();
        if !(decrease < 0.0) {
            return None;
        }
        let ft = f(&trial);
        if ft.is_finite() && ft <= fx + armijo * decrease {
            return Some((trial, ft));
        }
        step *= 0.5;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{Bound, ClosureObjective};

    #[test]
    fn unconstrained_quadratic() {
        let p = ClosureObjective::new("q", vec![Bound::FREE], 2, |x: &[f64], t: &[f64]| {
            t[1] / 2.0 * x[0] * x[0] + t[0] * x[0]
        });
        let r = minimize(&p, &[10.0, 5.0], &[0.0], SolverOptions::default()).unwrap();
        assert!(r.converged);
        assert!((r.x[0] + 2.0).abs() < 1e-8, "{:?}", r);
    }

    #[test]
    fn rosenbrock_in_a_box() {
        let b = Bound::new(-2.0, 2.0).unwrap();
        let p = ClosureObjective::new("rosen", vec![b, b], 0, |x: &[f64], _t: &[f64]| {
            (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
        });
        let opts = SolverOptions {
            tol: 1e-6,
            ..Default::default()
        };
        let r = minimize(&p, &[], &[-1.2, 1.0], opts).unwrap();
        assert!(
            (r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4,
            "{:?}",
            r
        );
    }

    #[test]
    fn active_bounds_are_respected() {
        let b = Bound::new(0.0, 1.0).unwrap();
        let p = ClosureObjective::new("lin", vec![b, b], 0, |x: &[f64], _t: &[f64]| {
            (x[0] - 3.0).powi(2) + (x[1] + 1.0).powi(2)
        });
        let r = minimize(&p, &[], &[0.5, 0.5], SolverOptions::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.x, vec![1.0, 0.0]);
    }

    #[test]
    fn start_outside_box_is_rejected() {
        let b = Bound::new(0.0, 1.0).unwrap();
        let p = ClosureObjective::new("lin", vec![b], 0, |x: &[f64], _t: &[f64]| x[0]);
        assert!(minimize(&p, &[], &[2.0], SolverOptions::default()).is_err());
    }

    #[test]
    fn non_finite_objective() {
        let p = ClosureObjective::new("nan", vec![Bound::FREE], 0, |_x: &[f64], _t: &[f64]| {
            f64::NAN
        });
        assert_eq!(
            minimize(&p, &[], &[0.0], SolverOptions::default()),
            Err(Error::NonFiniteEvaluation)
        );
    }
}
