//! Dense linear-algebra helpers: sorted symmetric eigendecomposition,
//! exact covariance discretization, and a Bartels-Stewart Lyapunov solver.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Eigendecomposition of a symmetric matrix with eigenvalues ascending and
/// eigenvector columns permuted to match.
pub fn sym_eigen_ascending(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let eig = a.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(k));
    }
    (values, vectors)
}

pub fn frobenius(a: &DMatrix<f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn symmetrize(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = m;
            a[(j, i)] = m;
        }
    }
}

/// Exact one-step discretization of dΣ/dt = MΣ + ΣMᵀ + D over a step `dt`:
/// returns (E, D_step) with E = exp(M·dt) and
/// D_step = ∫₀^dt exp(Ms) D exp(Mᵀs) ds, so that
/// Σ(t+dt) = E Σ(t) Eᵀ + D_step holds exactly for constant D.
///
/// Uses the block-exponential construction
/// exp([[M, D], [0, -Mᵀ]]·dt) = [[E, F], [0, E⁻ᵀ]] with D_step = F·Eᵀ.
pub fn discretize_lyapunov(m: &DMatrix<f64>, d: &DMatrix<f64>, dt: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(&(m * dt));
    h.view_mut((0, n), (n, n)).copy_from(&(d * dt));
    h.view_mut((n, n), (n, n)).copy_from(&(-m.transpose() * dt));
    let eh = h.exp();
    let e = eh.view((0, 0), (n, n)).into_owned();
    let f = eh.view((0, n), (n, n)).into_owned();
    let mut d_step = &f * e.transpose();
    symmetrize(&mut d_step);
    (e, d_step)
}

/// Real parts of the eigenvalues read off the quasi-triangular Schur factor.
fn schur_real_parts(t: &DMatrix<f64>) -> Vec<f64> {
    let n = t.nrows();
    let mut parts = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)].abs() > 1e-300 {
            // 2x2 block: complex pair with real part = trace/2.
            let re = 0.5 * (t[(i, i)] + t[(i + 1, i + 1)]);
            parts.push(re);
            parts.push(re);
            i += 2;
        } else {
            parts.push(t[(i, i)]);
            i += 1;
        }
    }
    parts
}

/// Solve MX + XMᵀ + Q = 0 for symmetric Q via real Schur reduction and
/// block back-substitution. Requires M Hurwitz (all eigenvalues with
/// negative real part); otherwise no bounded steady state exists.
pub fn lyapunov_solve(m: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    if m.ncols() != n || q.nrows() != n || q.ncols() != n {
        return Err(Error::InvalidConfig("lyapunov_solve needs square same-size M, Q".into()));
    }
    let schur = m.clone().schur();
    let (z, t) = schur.unpack();
    if schur_real_parts(&t).iter().any(|&re| re >= 0.0) {
        return Err(Error::NoSteadyState(
            "drift matrix has a non-decaying eigenvalue (undamped heated mode)".into(),
        ));
    }

    // Block partition of the quasi-triangular T.
    let mut starts = Vec::new();
    {
        let mut i = 0;
        while i < n {
            starts.push(i);
            if i + 1 < n && t[(i + 1, i)].abs() > 1e-300 {
                i += 2;
            } else {
                i += 1;
            }
        }
    }
    let nb = starts.len();
    let block = |k: usize| -> (usize, usize) {
        let s = starts[k];
        let e = if k + 1 < nb { starts[k + 1] } else { n };
        (s, e - s)
    };

    // T Y + Y Tᵀ = C with C = -Zᵀ Q Z.
    let c = -(z.transpose() * q * &z);
    let mut y = DMatrix::<f64>::zeros(n, n);

    for jb in (0..nb).rev() {
        let (js, jn) = block(jb);
        for ib in (0..=jb).rev() {
            let (is, in_) = block(ib);
            // RHS = C_IJ - sum_{K>I} T_IK Y_KJ - sum_{K>J} Y_IK T_JKᵀ
            let mut rhs = c.view((is, js), (in_, jn)).into_owned();
            if is + in_ < n {
                let t_right = t.view((is, is + in_), (in_, n - is - in_));
                let y_below = y.view((is + in_, js), (n - is - in_, jn));
                rhs -= t_right * y_below;
            }
            if js + jn < n {
                let y_right = y.view((is, js + jn), (in_, n - js - jn));
                let t_jrow = t.view((js, js + jn), (jn, n - js - jn));
                rhs -= y_right * t_jrow.transpose();
            }
            // Solve T_II X + X T_JJᵀ = rhs via the small Kronecker system.
            let tii = t.view((is, is), (in_, in_)).into_owned();
            let tjj = t.view((js, js), (jn, jn)).into_owned();
            let p = in_ * jn;
            let mut sys = DMatrix::<f64>::zeros(p, p);
            // vec(T_II X) = (I_jn ⊗ T_II) vec(X); vec(X T_JJᵀ) = (T_JJ ⊗ I_in) vec(X)
            for cj in 0..jn {
                for ci in 0..in_ {
                    let row = cj * in_ + ci;
                    for k in 0..in_ {
                        sys[(row, cj * in_ + k)] += tii[(ci, k)];
                    }
                    for k in 0..jn {
                        sys[(row, k * in_ + ci)] += tjj[(cj, k)];
                    }
                }
            }
            let rhs_vec = DVector::from_fn(p, |r, _| rhs[(r % in_, r / in_)]);
            let sol = sys
                .lu()
                .solve(&rhs_vec)
                .ok_or_else(|| Error::Numeric("singular Sylvester block".into()))?;
            for cj in 0..jn {
                for ci in 0..in_ {
                    y[(is + ci, js + cj)] = sol[cj * in_ + ci];
                }
            }
            // Mirror the symmetric block.
            if ib != jb {
                for cj in 0..jn {
                    for ci in 0..in_ {
                        y[(js + cj, is + ci)] = y[(is + ci, js + cj)];
                    }
                }
            }
        }
    }

    let mut x = &z * y * z.transpose();
    symmetrize(&mut x);

    let residual = frobenius(&(m * &x + &x * m.transpose() + q));
    let scale = frobenius(q).max(1e-300);
    if residual > 1e-8 * scale {
        return Err(Error::Numeric(format!(
            "Lyapunov residual {residual:.3e} exceeds 1e-8 x ||Q|| = {:.3e}",
            1e-8 * scale
        )));
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pseudo_random(n: usize, seed: u64) -> DMatrix<f64> {
        let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
        DMatrix::from_fn(n, n, |_, _| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        })
    }

    #[test]
    fn eigen_sorted_and_orthogonal() {
        let a0 = pseudo_random(12, 3);
        let a = &a0 + a0.transpose();
        let (vals, vecs) = sym_eigen_ascending(&a);
        for w in vals.windows(2) {
            assert!(w[0] <= w[1]);
        }
        let id = vecs.transpose() * &vecs;
        assert!(frobenius(&(id - DMatrix::identity(12, 12))) < 1e-10);
        let rec = &vecs * DMatrix::from_diagonal(&DVector::from_vec(vals)) * vecs.transpose();
        assert!(frobenius(&(rec - a)) < 1e-9);
    }

    #[test]
    fn lyapunov_against_kronecker_oracle() {
        let n = 7;
        let m = pseudo_random(n, 11) - DMatrix::identity(n, n) * 1.5;
        let q0 = pseudo_random(n, 12);
        let q = &q0 * q0.transpose();
        let x = lyapunov_solve(&m, &q).unwrap();

        // Independent oracle: solve the n^2 x n^2 Kronecker system
        // (I ⊗ M + M ⊗ I) vec(X) = -vec(Q).
        let p = n * n;
        let mut big = DMatrix::<f64>::zeros(p, p);
        for cj in 0..n {
            for ci in 0..n {
                let row = cj * n + ci;
                for k in 0..n {
                    big[(row, cj * n + k)] += m[(ci, k)];
                    big[(row, k * n + ci)] += m[(cj, k)];
                }
            }
        }
        let qv = DVector::from_fn(p, |r, _| -q[(r % n, r / n)]);
        let xv = big.lu().solve(&qv).unwrap();
        for cj in 0..n {
            for ci in 0..n {
                assert_relative_eq!(x[(ci, cj)], xv[cj * n + ci], epsilon = 1e-9, max_relative = 1e-7);
            }
        }
    }

    #[test]
    fn lyapunov_rejects_unstable_drift() {
        let n = 4;
        let mut m = pseudo_random(n, 21) - DMatrix::identity(n, n);
        m[(0, 0)] = 0.3; // push an eigenvalue across zero
        m[(0, 1)] = 0.0;
        m[(0, 2)] = 0.0;
        m[(0, 3)] = 0.0;
        let q = DMatrix::identity(n, n);
        assert!(matches!(lyapunov_solve(&m, &q), Err(Error::NoSteadyState(_))));
    }

    #[test]
    fn discretization_matches_fine_stepping() {
        // Damped 1D oscillator: M = [[0, 1], [-w^2, -g]], D only in pp.
        let w2 = 2.3;
        let g = 0.4;
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -w2, -g]);
        let mut d = DMatrix::zeros(2, 2);
        d[(1, 1)] = 0.7;
        let (e, dstep) = discretize_lyapunov(&m, &d, 0.5);

        // Oracle: compose many tiny exact steps.
        let k = 512;
        let (e_small, d_small) = discretize_lyapunov(&m, &d, 0.5 / k as f64);
        let mut sig = DMatrix::<f64>::zeros(2, 2);
        for _ in 0..k {
            sig = &e_small * sig * e_small.transpose() + &d_small;
        }
        let coarse = &e * DMatrix::<f64>::zeros(2, 2) * e.transpose() + &dstep;
        assert!(frobenius(&(coarse - sig)) < 1e-11);
    }

    #[test]
    fn steady_state_fixed_point_of_discretization() {
        let n = 6;
        let m = pseudo_random(n, 33) - DMatrix::identity(n, n) * 2.0;
        let q0 = pseudo_random(n, 34);
        let q = &q0 * q0.transpose() + DMatrix::identity(n, n) * 0.1;
        let x = lyapunov_solve(&m, &q).unwrap();
        let (e, dstep) = discretize_lyapunov(&m, &q, 0.7);
        let x_next = &e * &x * e.transpose() + &dstep;
        assert!(frobenius(&(x_next - &x)) < 1e-9 * frobenius(&x));
    }
}
