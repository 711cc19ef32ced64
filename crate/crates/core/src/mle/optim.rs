//! Nelder–Mead simplex minimization.

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

#[derive(Debug, Clone)]
pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `f` from `x0` with an axis-aligned initial simplex of edge
/// `step`. NaN values count as +∞. Stops when the spread of function values
/// falls below `tol · (|f_best| + tol)` or after `max_iter` iterations.
pub(crate) fn nelder_mead<F>(f: F, x0: &[f64], step: f64, max_iter: usize, tol: f64) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let n = x0.len();
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    pts.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += step;
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| eval(p)).collect();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let (best, worst) = (vals[0], vals[n]);
        if best.is_finite() && worst - best <= tol * (best.abs() + tol) {
            converged = true;
            break;
        }
        if collapsed(&pts) {
            converged = best.is_finite();
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for p in &pts[..n] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / n as f64;
            }
        }
        let toward = |coef: f64, from: &[f64]| -> Vec<f64> {
            centroid
                .iter()
                .zip(from)
                .map(|(c, x)| c + coef * (x - c))
                .collect()
        };

        let xr = toward(-REFLECT, &pts[n]);
        let fr = eval(&xr);
        if fr < vals[0] {
            let xe = toward(EXPAND, &xr);
            let fe = eval(&xe);
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
            continue;
        }
        let (xc, fc, accept) = if fr < vals[n] {
            let xc = toward(CONTRACT, &xr);
            let fc = eval(&xc);
            let ok = fc <= fr;
            (xc, fc, ok)
        } else {
            let xc = toward(CONTRACT, &pts[n]);
            let fc = eval(&xc);
            let ok = fc < vals[n];
            (xc, fc, ok)
        };
        if accept {
            pts[n] = xc;
            vals[n] = fc;
            continue;
        }
        let anchor = pts[0].clone();
        for i in 1..=n {
            for (x, a) in pts[i].iter_mut().zip(&anchor) {
                *x = a + SHRINK * (*x - a);
            }
            vals[i] = eval(&pts[i]);
        }
    }

    let best = (0..=n)
        .min_by(|&a, &b| vals[a].total_cmp(&vals[b]))
        .expect("simplex is never empty");
    Minimum {
        x: pts[best].clone(),
        f: vals[best],
        iterations,
        converged,
    }
}

fn collapsed(pts: &[Vec<f64>]) -> bool {
    let first = &pts[0];
    pts[1..].iter().all(|p| {
        p.iter()
            .zip(first)
            .all(|(a, b)| (a - b).abs() <= 1e-15 * (1.0 + b.abs()))
    })
}

/// Repeats the simplex search from the incumbent until a restart no longer
/// improves the objective by more than the tolerance.
pub(crate) fn minimize_with_restarts<F>(f: F, x0: &[f64], max_iter: usize, tol: f64) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    const MAX_RESTARTS: usize = 20;
    let mut best = nelder_mead(&f, x0, 0.5, max_iter, tol);
    let mut iterations = best.iterations;
    let mut converged = best.converged;
    for _ in 0..MAX_RESTARTS {
        if !best.f.is_finite() {
            break;
        }
        let next = nelder_mead(&f, &best.x, 0.1, max_iter, tol);
        iterations += next.iterations;
        converged = next.converged;
        let gain = best.f - next.f;
        if next.f < best.f {
            best = next;
        }
        if gain <= tol * (best.f.abs() + tol) {
            break;
        }
    }
    best.iterations = iterations;
    best.converged = converged && best.f.is_finite();
    best
}
