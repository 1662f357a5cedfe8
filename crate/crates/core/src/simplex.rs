//! Nelder-Mead minimisation with dimension-adaptive coefficients.

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Best value after each iteration.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub max_evaluations: usize,
    /// Stop once the spread of simplex values drops below this.
    pub f_tol: f64,
    /// Initial edge length along each axis.
    pub step: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_evaluations: 1000,
            f_tol: 1e-10,
            step: 0.5,
        }
    }
}

/// Minimises `f` from `x0`. Non-finite values are treated as `+inf`.
pub fn minimize<F>(mut f: F, x0: &[f64], opts: SimplexOptions) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let nf = n.max(1) as f64;
    let (alpha, beta, gamma, sigma) =
        (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf);
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0, &mut evals)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += opts.step;
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let point = |c: &[f64], w: &[f64], t: f64| -> Vec<f64> {
        c.iter().zip(w).map(|(ci, wi)| ci + t * (wi - ci)).collect()
    };

    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        history.push(simplex[0].1);
        let spread = simplex[n].1 - simplex[0].1;
        if spread.abs() <= opts.f_tol {
            converged = true;
            break;
        }
        if evals >= opts.max_evaluations {
            break;
        }
        iterations += 1;
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / nf;
            }
        }
        let worst = simplex[n].clone();
        let xr = point(&centroid, &worst.0, -alpha);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = point(&centroid, &worst.0, -alpha * beta);
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst.1 {
            let xc = point(&centroid, &xr, gamma);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = point(&centroid, &worst.0, gamma);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc < fr.min(worst.1) {
            simplex[n] = (xc, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for v in simplex.iter_mut().skip(1) {
            v.0 = point(&best, &v.0, sigma);
            v.1 = eval(&v.0, &mut evals);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    SimplexResult {
        x,
        value,
        evaluations: evals,
        iterations,
        converged,
        history,
    }
}
