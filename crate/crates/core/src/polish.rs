//! Small dense Levenberg–Marquardt solver for zero-residual refinement.
//!
//! Handles both over- and under-determined systems; the Jacobian is taken by
//! central differences.

pub(crate) struct LmOptions {
    pub max_iterations: usize,
    pub step: f64,
    pub target: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            step: 1e-7,
            target: 1e-28,
        }
    }
}

pub(crate) struct LmOutcome {
    pub x: Vec<f64>,
    /// `‖r(x)‖²`.
    pub cost: f64,
}

fn cost(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Jacobian as rows (one per residual).
fn jacobian<F: Fn(&[f64]) -> Vec<f64>>(f: &F, x: &[f64], m: usize, h: f64) -> Vec<Vec<f64>> {
    let mut jac = vec![vec![0.0; x.len()]; m];
    let mut xp = x.to_vec();
    for j in 0..x.len() {
        xp[j] = x[j] + h;
        let rp = f(&xp);
        xp[j] = x[j] - h;
        let rm = f(&xp);
        xp[j] = x[j];
        for i in 0..m {
            jac[i][j] = (rp[i] - rm[i]) / (2.0 * h);
        }
    }
    jac
}

/// Solves `A y = b` in place by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in (col + 1)..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut y = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = ((row + 1)..n).map(|k| a[row][k] * y[k]).sum();
        y[row] = (b[row] - s) / a[row][row];
    }
    Some(y)
}

/// Damped Gauss–Newton step `δ` minimizing `‖r + Jδ‖² + λ‖δ‖²`.
fn lm_step(jac: &[Vec<f64>], r: &[f64], lambda: f64) -> Option<Vec<f64>> {
    let m = r.len();
    let n = jac.first().map_or(0, |row| row.len());
    if m < n {
        // δ = −Jᵀ (JJᵀ + λI)⁻¹ r
        let mut a = vec![vec![0.0; m]; m];
        for i in 0..m {
            for k in 0..m {
                a[i][k] = jac[i].iter().zip(&jac[k]).map(|(p, q)| p * q).sum();
            }
            a[i][i] += lambda;
        }
        let y = solve(a, r.to_vec())?;
        Some((0..n).map(|j| -(0..m).map(|i| jac[i][j] * y[i]).sum::<f64>()).collect())
    } else {
        // δ = −(JᵀJ + λI)⁻¹ Jᵀ r
        let mut a = vec![vec![0.0; n]; n];
        for j in 0..n {
            for k in 0..n {
                a[j][k] = (0..m).map(|i| jac[i][j] * jac[i][k]).sum();
            }
            a[j][j] += lambda;
        }
        let g: Vec<f64> = (0..n).map(|j| (0..m).map(|i| jac[i][j] * r[i]).sum()).collect();
        let y = solve(a, g)?;
        Some(y.into_iter().map(|v| -v).collect())
    }
}

pub(crate) fn levenberg_marquardt<F: Fn(&[f64]) -> Vec<f64>>(f: F, x0: &[f64], opts: &LmOptions) -> LmOutcome {
    let mut x = x0.to_vec();
    let mut r = f(&x);
    let mut c = cost(&r);
    let mut lambda = 1e-3;
    for _ in 0..opts.max_iterations {
        if c <= opts.target {
            break;
        }
        let jac = jacobian(&f, &x, r.len(), opts.step);
        let mut improved = false;
        for _ in 0..30 {
            let Some(delta) = lm_step(&jac, &r, lambda) else {
                lambda *= 10.0;
                continue;
            };
            let xn: Vec<f64> = x.iter().zip(&delta).map(|(a, d)| a + d).collect();
            let rn = f(&xn);
            let cn = cost(&rn);
            if cn < c {
                x = xn;
                r = rn;
                c = cn;
                lambda = (lambda * 0.3).max(1e-15);
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    LmOutcome { x, cost: c }
}
