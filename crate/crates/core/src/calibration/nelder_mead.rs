use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Stop when the spread of simplex values falls below this fraction of the best value.
    pub f_tol: f64,
    /// Also required: simplex diameter (max coordinate distance to the best vertex).
    pub x_tol: f64,
    pub initial_step: f64,
    /// Fresh simplices built around the best point after convergence; the search
    /// stops early once a restart no longer improves the value.
    pub restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_evals: 2_000,
            f_tol: 1e-10,
            x_tol: 1e-6,
            initial_step: 0.5,
            restarts: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evaluations: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Best value after each iteration.
    pub trace: Vec<f64>,
}

/// Unconstrained Nelder-Mead with dimension-adaptive coefficients: reflection 1,
/// expansion `1 + 2/n`, contraction `3/4 - 1/(2n)`, shrink `1 - 1/n` (the standard
/// 1, 2, 1/2, 1/2 in two dimensions).
/// Non-finite objective values are treated as +inf.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(f: F, x0: &[f64], opts: &NelderMeadOptions) -> NelderMeadResult {
    nelder_mead_with(f, x0, opts, |x| x)
}

/// As [`nelder_mead`], with the simplex diameter measured on `metric(x_j)` per
/// coordinate, e.g. the position inside a box for a search run through a squashing
/// transform.
pub fn nelder_mead_with<F, M>(mut f: F, x0: &[f64], opts: &NelderMeadOptions, metric: M) -> NelderMeadResult
where
    F: FnMut(&[f64]) -> f64,
    M: Fn(f64) -> f64,
{
    let mut best = run(&mut f, x0, opts, opts.max_evals, &metric);
    for _ in 0..opts.restarts {
        let left = opts.max_evals.saturating_sub(best.evaluations);
        if !best.converged || left <= x0.len() + 1 {
            break;
        }
        let next = run(&mut f, &best.x.clone(), opts, left, &metric);
        let gain = best.f - next.f;
        best.evaluations += next.evaluations;
        best.iterations += next.iterations;
        best.trace.extend(next.trace.iter().map(|v| v.min(best.f)));
        let settled = gain <= opts.f_tol * best.f.abs();
        if next.f < best.f {
            best.x = next.x;
            best.f = next.f;
        }
        best.converged = next.converged;
        if settled {
            break;
        }
    }
    best
}

fn run<F, M>(f: &mut F, x0: &[f64], opts: &NelderMeadOptions, max_evals: usize, metric: &M) -> NelderMeadResult
where
    F: FnMut(&[f64]) -> f64,
    M: Fn(f64) -> f64,
{
    let n = x0.len();
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
    let dim = n.max(2) as f64;
    let (expand, contract, shrink) = (1.0 + 2.0 / dim, 0.75 - 0.5 / dim, 1.0 - 1.0 / dim);
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += if p[i] == 0.0 { opts.initial_step } else { opts.initial_step * p[i].abs().max(1.0) };
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| eval(p, &mut evals)).collect();
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    while evals < max_evals {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();
        trace.push(values[0]);

        let spread = values[n] - values[0];
        let diameter = simplex[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&simplex[0]).map(|(&a, &b)| (metric(a) - metric(b)).abs()))
            .fold(0.0, f64::max);
        if spread <= opts.f_tol * values[0].abs() && diameter <= opts.x_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|j| centroid[j] + t * (simplex[n][j] - centroid[j])).collect() };

        let xr = along(-1.0);
        let fr = eval(&xr, &mut evals);
        if fr < values[0] {
            let xe = along(-expand);
            let fe = eval(&xe, &mut evals);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[n] {
            let xc = along(-contract);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = along(contract);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc < values[n].min(fr) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        for i in 1..=n {
            let p: Vec<f64> = (0..n).map(|j| simplex[0][j] + shrink * (simplex[i][j] - simplex[0][j])).collect();
            values[i] = eval(&p, &mut evals);
            simplex[i] = p;
        }
    }
    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    NelderMeadResult {
        x: simplex[best].clone(),
        f: values[best],
        evaluations: evals,
        iterations,
        converged,
        trace,
    }
}

/// Minimiser of a unimodal function on `[lo, hi]`.
pub(crate) fn golden_section<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while (hi - lo) > tol * (1.0 + c.abs()) {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}
