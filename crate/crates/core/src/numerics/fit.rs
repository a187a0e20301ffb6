//! Nonlinear least squares (Levenberg-Marquardt with a forward-difference Jacobian).

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct LsqResult {
    pub params: Vec<f64>,
    /// Root-mean-square residual at the solution.
    pub rms: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimise `sum(residual(params)^2)` starting from `start`.
pub fn levenberg_marquardt<R>(residual: R, start: &[f64], max_iter: usize) -> LsqResult
where
    R: Fn(&[f64]) -> Vec<f64>,
{
    let np = start.len();
    let mut p = start.to_vec();
    let mut res = residual(&p);
    let m = res.len();
    let mut cost: f64 = res.iter().map(|r| r * r).sum();
    let mut damping = 1e-3;
    let mut converged = false;
    let mut it = 0;
    while it < max_iter {
        it += 1;
        let mut jac = DMatrix::<f64>::zeros(m, np);
        for j in 0..np {
            let step = 1e-7 * p[j].abs().max(1e-3);
            let mut q = p.clone();
            q[j] += step;
            let rq = residual(&q);
            for i in 0..m {
                jac[(i, j)] = (rq[i] - res[i]) / step;
            }
        }
        let r = DVector::from_vec(res.clone());
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let g = &jt * r;
        let mut improved = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for k in 0..np {
                a[(k, k)] += damping * jtj[(k, k)].max(1e-12);
            }
            let Some(delta) = a.lu().solve(&(-&g)) else {
                damping *= 10.0;
                continue;
            };
            let q: Vec<f64> = p.iter().zip(delta.iter()).map(|(a, b)| a + b).collect();
            let rq = residual(&q);
            let cq: f64 = rq.iter().map(|r| r * r).sum();
            if cq.is_finite() && cq < cost {
                let rel = (cost - cq) / cost.max(1e-300);
                let step_small = delta.norm() <= 1e-12 * (1.0 + p.iter().map(|v| v * v).sum::<f64>().sqrt());
                p = q;
                res = rq;
                cost = cq;
                damping = (damping / 3.0).max(1e-12);
                improved = true;
                if rel < 1e-14 || step_small {
                    converged = true;
                }
                break;
            }
            damping *= 4.0;
        }
        if !improved {
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }
    LsqResult {
        params: p,
        rms: (cost / m as f64).sqrt(),
        iterations: it,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_damped_cosine() {
        let t: Vec<f64> = (0..200).map(|i| i as f64 * 0.1).collect();
        let truth = [0.3, 1.2, 0.25, 1.7, 0.4];
        let model = |p: &[f64], t: f64| p[0] + p[1] * (-p[2] * t).exp() * (p[3] * t + p[4]).cos();
        let y: Vec<f64> = t.iter().map(|&s| model(&truth, s)).collect();
        let fit = levenberg_marquardt(
            |p| t.iter().zip(&y).map(|(&s, &v)| model(p, s) - v).collect(),
            &[0.0, 1.0, 0.2, 1.6, 0.0],
            500,
        );
        for (a, b) in fit.params.iter().zip(truth) {
            assert!((a - b).abs() < 1e-6, "{:?}", fit.params);
        }
    }
}
