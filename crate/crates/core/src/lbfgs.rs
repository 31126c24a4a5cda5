//! Limited-memory BFGS with a strong-Wolfe line search.
//!
//! The inverse Hessian is approximated from the last `history` pairs
//! `s = x_{k+1} − x_k`, `y = g_{k+1} − g_k` via the two-loop recursion,
//! scaled by `γ = sᵀy / yᵀy`. Pairs failing the curvature test `sᵀy > 0`
//! are skipped. The line search brackets a step and refines it with cubic
//! interpolation until both Wolfe conditions hold:
//!
//! ```text
//! f(x + t·d) ≤ f(x) + c1·t·gᵀd
//! |∇f(x + t·d)ᵀd| ≤ c2·|gᵀd|
//! ```
//!
//! An iterate is only accepted if it strictly lowers the objective, so the
//! loss sequence reported in [`LbfgsOutcome::history`] never increases.

use std::collections::VecDeque;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsOptions {
    pub history: usize,
    pub max_iters: usize,
    /// Stop once `‖g‖∞` drops below this.
    pub grad_tol: f64,
    pub c1: f64,
    pub c2: f64,
    pub max_line_search: usize,
    /// Bracket width (scaled by `‖d‖∞`) below which zooming gives up.
    pub tolerance_change: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions {
            history: 10,
            max_iters: 250,
            grad_tol: 1e-7,
            c1: 1e-4,
            c2: 0.9,
            max_line_search: 25,
            tolerance_change: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxIterations,
    GradientTolerance,
    /// No step along either the quasi-Newton or the steepest-descent
    /// direction lowered the objective.
    NoProgress,
}

#[derive(Debug, Clone)]
pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// Objective at the start and after every accepted iteration.
    pub history: Vec<f64>,
    pub stop: StopReason,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

fn two_loop(g: &[f64], pairs: &VecDeque<Pair>) -> Vec<f64> {
    let mut q: Vec<f64> = g.to_vec();
    let mut alpha = vec![0.0; pairs.len()];
    for (k, p) in pairs.iter().enumerate().rev() {
        alpha[k] = p.rho * dot(&p.s, &q);
        for (qi, yi) in q.iter_mut().zip(&p.y) {
            *qi -= alpha[k] * yi;
        }
    }
    if let Some(p) = pairs.back() {
        let gamma = dot(&p.s, &p.y) / dot(&p.y, &p.y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for (k, p) in pairs.iter().enumerate() {
        let beta = p.rho * dot(&p.y, &q);
        for (qi, si) in q.iter_mut().zip(&p.s) {
            *qi += (alpha[k] - beta) * si;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

/// Minimizer of the cubic interpolating `(x1, f1, g1)` and `(x2, f2, g2)`,
/// clamped into `bounds` (defaulting to the interval between the points).
fn cubic_interpolate(
    (x1, f1, g1): (f64, f64, f64),
    (x2, f2, g2): (f64, f64, f64),
    bounds: Option<(f64, f64)>,
) -> f64 {
    let (lo, hi) = bounds.unwrap_or(if x1 <= x2 { (x1, x2) } else { (x2, x1) });
    let d1 = g1 + g2 - 3.0 * (f1 - f2) / (x1 - x2);
    let d2_sq = d1 * d1 - g1 * g2;
    if d2_sq >= 0.0 {
        let d2 = d2_sq.sqrt();
        let t = if x1 <= x2 {
            x2 - (x2 - x1) * ((g2 + d2 - d1) / (g2 - g1 + 2.0 * d2))
        } else {
            x1 - (x1 - x2) * ((g1 + d2 - d1) / (g1 - g2 + 2.0 * d2))
        };
        if t.is_finite() {
            return t.clamp(lo, hi);
        }
    }
    (lo + hi) / 2.0
}

#[derive(Clone)]
struct Trial {
    t: f64,
    f: f64,
    g: Vec<f64>,
    gtd: f64,
}

/// Line-search workspace: evaluates `f(x + t·d)` with non-finite values
/// mapped to `+∞` so they always fail the sufficient-decrease test.
struct Probe<'a, F> {
    objective: &'a mut F,
    x: &'a [f64],
    d: &'a [f64],
    buf: Vec<f64>,
    evals: usize,
}

impl<F: FnMut(&[f64], &mut [f64]) -> f64> Probe<'_, F> {
    fn eval(&mut self, t: f64) -> Trial {
        for ((b, x), d) in self.buf.iter_mut().zip(self.x).zip(self.d) {
            *b = x + t * d;
        }
        let mut g = vec![0.0; self.x.len()];
        let mut f = (self.objective)(&self.buf, &mut g);
        self.evals += 1;
        if !f.is_finite() {
            f = f64::INFINITY;
        }
        let gtd = dot(&g, self.d);
        Trial { t, f, g, gtd }
    }
}

fn strong_wolfe<F: FnMut(&[f64], &mut [f64]) -> f64>(
    probe: &mut Probe<'_, F>,
    start: Trial,
    t0: f64,
    opts: &LbfgsOptions,
) -> Trial {
    let (f0, gtd0) = (start.f, start.gtd);
    let d_norm = inf_norm(probe.d);
    let armijo = |tr: &Trial| tr.f > f0 + opts.c1 * tr.t * gtd0;
    let curvature = |tr: &Trial| tr.gtd.abs() <= -opts.c2 * gtd0;

    let mut prev = start.clone();
    let mut cur = probe.eval(t0);
    let mut ls_iter = 0;
    let mut bracket: Option<[Trial; 2]> = None;

    while ls_iter < opts.max_line_search {
        if armijo(&cur) || (ls_iter > 1 && cur.f >= prev.f) {
            bracket = Some([prev.clone(), cur.clone()]);
            break;
        }
        if curvature(&cur) {
            return cur;
        }
        if cur.gtd >= 0.0 {
            bracket = Some([prev.clone(), cur.clone()]);
            break;
        }
        let min_step = cur.t + 0.01 * (cur.t - prev.t);
        let max_step = cur.t * 10.0;
        let t = cubic_interpolate(
            (prev.t, prev.f, prev.gtd),
            (cur.t, cur.f, cur.gtd),
            Some((min_step, max_step)),
        );
        prev = cur;
        cur = probe.eval(t);
        ls_iter += 1;
    }
    let mut br = bracket.unwrap_or_else(|| [start.clone(), cur]);

    // Zoom: shrink the bracket around a point satisfying both conditions.
    let mut insufficient = false;
    let (mut lo, mut hi) = if br[0].f <= br[1].f { (0, 1) } else { (1, 0) };
    while ls_iter < opts.max_line_search {
        let (bmin, bmax) = (br[0].t.min(br[1].t), br[0].t.max(br[1].t));
        if (bmax - bmin) * d_norm < opts.tolerance_change {
            break;
        }
        let mut t = cubic_interpolate(
            (br[0].t, br[0].f, br[0].gtd),
            (br[1].t, br[1].f, br[1].gtd),
            None,
        );
        let eps = 0.1 * (bmax - bmin);
        if (bmax - t).min(t - bmin) < eps {
            if insufficient || t >= bmax || t <= bmin {
                t = if (t - bmax).abs() < (t - bmin).abs() {
                    bmax - eps
                } else {
                    bmin + eps
                };
                insufficient = false;
            } else {
                insufficient = true;
            }
        } else {
            insufficient = false;
        }
        let tr = probe.eval(t);
        ls_iter += 1;
        if armijo(&tr) || tr.f >= br[lo].f {
            br[hi] = tr;
            (lo, hi) = if br[0].f <= br[1].f { (0, 1) } else { (1, 0) };
        } else {
            let done = curvature(&tr);
            if !done && tr.gtd * (br[hi].t - br[lo].t) >= 0.0 {
                br[hi] = br[lo].clone();
            }
            br[lo] = tr;
            if done {
                break;
            }
        }
    }
    let [a, b] = br;
    if lo == 0 {
        a
    } else {
        b
    }
}

/// Minimizes `objective` from `x0`. The objective writes the gradient into
/// its second argument and returns the function value.
///
/// Fails with [`Error::NonFiniteLoss`] if the starting value, or the
/// gradient at an accepted iterate, is not finite.
pub fn minimize<F>(mut objective: F, x0: Vec<f64>, opts: &LbfgsOptions) -> Result<LbfgsOutcome>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut f = objective(&x, &mut g);
    let mut evaluations = 1;
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteLoss { iteration: 0 });
    }
    let mut history = vec![f];
    let mut pairs: VecDeque<Pair> = VecDeque::with_capacity(opts.history);
    let mut iterations = 0;

    let stop = loop {
        if inf_norm(&g) < opts.grad_tol {
            break StopReason::GradientTolerance;
        }
        if iterations >= opts.max_iters {
            break StopReason::MaxIterations;
        }

        let mut accepted = None;
        // Quasi-Newton direction first; on failure drop the history and
        // retry along steepest descent.
        for attempt in 0..2 {
            if attempt == 1 {
                if pairs.is_empty() {
                    break;
                }
                pairs.clear();
            }
            let mut d = two_loop(&g, &pairs);
            let mut gtd = dot(&g, &d);
            if gtd.is_nan() || gtd >= 0.0 {
                pairs.clear();
                d = g.iter().map(|v| -v).collect();
                gtd = dot(&g, &d);
            }
            let t0 = if pairs.is_empty() {
                (1.0 / g.iter().map(|v| v.abs()).sum::<f64>()).min(1.0)
            } else {
                1.0
            };
            let start = Trial {
                t: 0.0,
                f,
                g: g.clone(),
                gtd,
            };
            let mut probe = Probe {
                objective: &mut objective,
                x: &x,
                d: &d,
                buf: vec![0.0; n],
                evals: 0,
            };
            let tr = strong_wolfe(&mut probe, start, t0, opts);
            evaluations += probe.evals;
            if tr.t > 0.0 && tr.f < f {
                accepted = Some((tr, d));
                break;
            }
        }

        let Some((tr, d)) = accepted else {
            break StopReason::NoProgress;
        };
        iterations += 1;
        if tr.g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteLoss {
                iteration: iterations,
            });
        }
        let s: Vec<f64> = d.iter().map(|v| v * tr.t).collect();
        let y: Vec<f64> = tr.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-10 * dot(&y, &y).max(f64::MIN_POSITIVE) {
            if pairs.len() == opts.history {
                pairs.pop_front();
            }
            pairs.push_back(Pair { s, y, rho: 1.0 / sy });
        }
        for (xi, di) in x.iter_mut().zip(&d) {
            *xi += tr.t * di;
        }
        f = tr.f;
        g = tr.g;
        history.push(f);
    };

    Ok(LbfgsOutcome {
        x,
        f,
        iterations,
        evaluations,
        history,
        stop,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64], g: &mut [f64]) -> f64 {
        let mut f = 0.0;
        g.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..x.len() - 1 {
            let a = x[k + 1] - x[k] * x[k];
            let b = 1.0 - x[k];
            f += 100.0 * a * a + b * b;
            g[k] += -400.0 * x[k] * a - 2.0 * b;
            g[k + 1] += 200.0 * a;
        }
        f
    }

    #[test]
    fn solves_rosenbrock() {
        let opts = LbfgsOptions {
            max_iters: 500,
            ..Default::default()
        };
        let out = minimize(rosenbrock, vec![-1.2, 1.0, -1.2, 1.0], &opts).unwrap();
        assert_eq!(out.stop, StopReason::GradientTolerance);
        for v in &out.x {
            assert!((v - 1.0).abs() < 1e-6, "{:?}", out.x);
        }
        assert!(out.history.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn quadratic_converges_quickly() {
        // f = Σ k·x_k², minimum at 0
        let f = |x: &[f64], g: &mut [f64]| {
            let mut v = 0.0;
            for (k, (xi, gi)) in x.iter().zip(g.iter_mut()).enumerate() {
                let c = (k + 1) as f64;
                v += c * xi * xi;
                *gi = 2.0 * c * xi;
            }
            v
        };
        let out = minimize(f, vec![1.0; 8], &LbfgsOptions::default()).unwrap();
        assert!(out.f < 1e-12);
        assert!(out.iterations < 30);
    }

    #[test]
    fn zero_iterations_returns_start() {
        let opts = LbfgsOptions {
            max_iters: 0,
            ..Default::default()
        };
        let out = minimize(rosenbrock, vec![0.3, 0.4], &opts).unwrap();
        assert_eq!(out.x, vec![0.3, 0.4]);
        assert_eq!(out.iterations, 0);
        assert_eq!(out.stop, StopReason::MaxIterations);
    }

    #[test]
    fn non_finite_start_is_an_error() {
        let f = |_: &[f64], _: &mut [f64]| f64::NAN;
        assert!(matches!(
            minimize(f, vec![0.0], &LbfgsOptions::default()),
            Err(Error::NonFiniteLoss { iteration: 0 })
        ));
    }

    #[test]
    fn steps_into_non_finite_region_are_backtracked() {
        // log barrier: finite only for x < 1
        let f = |x: &[f64], g: &mut [f64]| {
            if x[0] >= 1.0 {
                return f64::NAN;
            }
            g[0] = -1.0 + 1.0 / (1.0 - x[0]);
            -x[0] - (1.0 - x[0]).ln()
        };
        let out = minimize(f, vec![-5.0], &LbfgsOptions::default()).unwrap();
        assert!(out.x[0].abs() < 1e-6, "{:?}", out);
        assert!(out.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn cubic_interpolation_finds_quadratic_minimum() {
        // f(t) = (t − 2)², sampled at 0 and 5
        let t = cubic_interpolate((0.0, 4.0, -4.0), (5.0, 9.0, 6.0), None);
        assert!((t - 2.0).abs() < 1e-12);
    }
}
