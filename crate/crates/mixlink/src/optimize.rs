//! Damped Gauss–Newton (Levenberg–Marquardt) for small nonlinear least-squares problems.

#[derive(Clone, Debug)]
pub struct LmOptions {
    pub max_iter: usize,
    /// Stop once the max-norm of the residual falls below this.
    pub ftol: f64,
    /// Stop once the step becomes smaller than this.
    pub xtol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions { max_iter: 200, ftol: 1e-14, xtol: 1e-15 }
    }
}

#[derive(Clone, Debug)]
pub struct LmResult {
    pub x: Vec<f64>,
    /// Max-norm of the residual at `x`.
    pub residual: f64,
    pub iterations: usize,
}

fn sq(r: &[f64]) -> f64 {
    r.iter().map(|a| a * a).sum()
}

fn max_abs(r: &[f64]) -> f64 {
    r.iter().fold(0.0, |m, a| m.max(a.abs()))
}

/// Solves `A x = b` in place by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

fn jacobian<F: Fn(&[f64]) -> Vec<f64>>(f: &F, x: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut j = vec![vec![0.0; n]; m];
    let mut xp = x.to_vec();
    for k in 0..n {
        let h = 1e-7 * x[k].abs().max(1.0);
        xp[k] = x[k] + h;
        let fp = f(&xp);
        xp[k] = x[k] - h;
        let fm = f(&xp);
        xp[k] = x[k];
        for i in 0..m {
            j[i][k] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    j
}

/// Minimizes `½‖f(x)‖²` from `x0` with a central-difference Jacobian.
pub fn levenberg_marquardt<F: Fn(&[f64]) -> Vec<f64>>(f: F, x0: &[f64], opts: &LmOptions) -> LmResult {
    let mut x = x0.to_vec();
    let mut r = f(&x);
    let m = r.len();
    let n = x.len();
    let mut cost = sq(&r);
    let mut lambda = 1e-3;
    let mut it = 0;
    while it < opts.max_iter {
        it += 1;
        if max_abs(&r) <= opts.ftol || !cost.is_finite() {
            break;
        }
        let j = jacobian(&f, &x, m);
        let mut jtj = vec![vec![0.0; n]; n];
        let mut jtr = vec![0.0; n];
        for i in 0..m {
            for a in 0..n {
                jtr[a] += j[i][a] * r[i];
                for b in 0..n {
                    jtj[a][b] += j[i][a] * j[i][b];
                }
            }
        }
        let mut improved = false;
        let mut small_step = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for k in 0..n {
                a[k][k] += lambda * jtj[k][k].max(1e-12);
            }
            let Some(step) = solve(a, jtr.iter().map(|v| -v).collect()) else {
                lambda *= 10.0;
                continue;
            };
            let xn: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + b).collect();
            let rn = f(&xn);
            let cn = sq(&rn);
            if cn.is_finite() && cn < cost {
                small_step = max_abs(&step) <= opts.xtol * (1.0 + max_abs(&x));
                x = xn;
                r = rn;
                cost = cn;
                lambda = (lambda * 0.3).max(1e-12);
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if !improved || small_step {
            break;
        }
    }
    LmResult { residual: max_abs(&r), x, iterations: it }
}
