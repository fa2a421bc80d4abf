//! Exact null-space computation for the intertwiner equations.
//!
//! A candidate normaliser N with prescribed generator images U ↦ U′ satisfies
//! NU = U′N. Flattening N row-major (n_{dj+k} = N_{j,k}) turns each prescribed
//! pair into the linear system (I ⊗ Uᵀ − U′ ⊗ I)·n⃗ = 0; stacking the systems
//! for all generators and solving exactly gives every simultaneous intertwiner.

use crate::cyclotomic::Cyclo;
use crate::matrix::{CMatrix, MatrixError};

/// Rows of (I ⊗ Uᵀ − U′ ⊗ I) for one prescribed image pair.
pub fn intertwiner_rows(u: &CMatrix, u_img: &CMatrix) -> Vec<Vec<Cyclo>> {
    let d = u.dim();
    debug_assert_eq!(d, u_img.dim());
    let n = d * d;
    let mut rows = Vec::with_capacity(n);
    for j in 0..d {
        for l in 0..d {
            let mut row = vec![Cyclo::zero(); n];
            for k in 0..d {
                // Σ_k N_{j,k} U_{k,l}  −  Σ_k U′_{j,k} N_{k,l}
                row[d * j + k] = row[d * j + k].add(&u[(k, l)]);
                row[d * k + l] = row[d * k + l].sub(&u_img[(j, k)]);
            }
            rows.push(row);
        }
    }
    rows
}

/// Basis of the right null space {x : Rx = 0}, exact, deterministic.
pub fn kernel_basis(rows: &[Vec<Cyclo>], ncols: usize) -> Vec<Vec<Cyclo>> {
    let mut mat: Vec<Vec<Cyclo>> = rows
        .iter()
        .filter(|r| r.iter().any(|e| !e.is_zero()))
        .cloned()
        .collect();
    let mut pivot_cols = Vec::new();
    let mut rank = 0usize;
    for col in 0..ncols {
        let pivot = (rank..mat.len()).find(|&r| !mat[r][col].is_zero());
        let Some(pr) = pivot else { continue };
        mat.swap(rank, pr);
        let pinv = mat[rank][col].inv().expect("nonzero pivot");
        for c in col..ncols {
            mat[rank][c] = mat[rank][c].mul(&pinv);
        }
        for r in 0..mat.len() {
            if r == rank || mat[r][col].is_zero() {
                continue;
            }
            let factor = mat[r][col].clone();
            for c in col..ncols {
                let delta = factor.mul(&mat[rank][c]);
                mat[r][c] = mat[r][c].sub(&delta);
            }
        }
        pivot_cols.push(col);
        rank += 1;
        if rank == mat.len() {
            break;
        }
    }
    let is_pivot: Vec<bool> = {
        let mut v = vec![false; ncols];
        for &c in &pivot_cols {
            v[c] = true;
        }
        v
    };
    let mut basis = Vec::new();
    for free in (0..ncols).filter(|&c| !is_pivot[c]) {
        let mut x = vec![Cyclo::zero(); ncols];
        x[free] = Cyclo::one();
        for (r, &pc) in pivot_cols.iter().enumerate() {
            x[pc] = mat[r][free].neg();
        }
        basis.push(x);
    }
    basis
}

/// Restrict an existing solution basis by additional constraint rows:
/// given columns B spanning the current space and rows K, return a basis of
/// {By : K·(By) = 0}.
pub fn restrict_kernel(basis: &[Vec<Cyclo>], rows: &[Vec<Cyclo>]) -> Vec<Vec<Cyclo>> {
    if basis.is_empty() {
        return Vec::new();
    }
    let ncols = basis[0].len();
    let m = basis.len();
    // project constraints onto the basis: (K·B) is rows × m
    let projected: Vec<Vec<Cyclo>> = rows
        .iter()
        .map(|row| {
            (0..m)
                .map(|b| {
                    let mut acc = Cyclo::zero();
                    for (c, e) in row.iter().enumerate() {
                        if !e.is_zero() && !basis[b][c].is_zero() {
                            acc = acc.add(&e.mul(&basis[b][c]));
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect();
    let small = kernel_basis(&projected, m);
    small
        .into_iter()
        .map(|y| {
            let mut x = vec![Cyclo::zero(); ncols];
            for (b, coeff) in y.iter().enumerate() {
                if coeff.is_zero() {
                    continue;
                }
                for c in 0..ncols {
                    if !basis[b][c].is_zero() {
                        x[c] = x[c].add(&coeff.mul(&basis[b][c]));
                    }
                }
            }
            x
        })
        .collect()
}

/// Reshape a flattened solution back into a d×d matrix (n_{dj+k} = N_{j,k}).
pub fn reshape(vec: &[Cyclo]) -> CMatrix {
    let n = vec.len();
    let d = (n as f64).sqrt().round() as usize;
    assert_eq!(d * d, n, "solution length must be a perfect square");
    CMatrix::new(d, vec.to_vec())
}

/// Exact basis of the joint null space of the stacked intertwiner constraints,
/// reshaped to matrices.
pub fn kron_constraint_nullspace(
    pairs: &[(CMatrix, CMatrix)],
) -> Result<Vec<CMatrix>, MatrixError> {
    if pairs.is_empty() {
        return Ok(Vec::new());
    }
    let d = pairs[0].0.dim();
    for (u, v) in pairs {
        if u.dim() != d || v.dim() != d {
            return Err(MatrixError::DimensionMismatch(d, u.dim().max(v.dim())));
        }
    }
    let mut rows = Vec::new();
    for (u, v) in pairs {
        rows.extend(intertwiner_rows(u, v));
    }
    let basis = kernel_basis(&rows, d * d);
    Ok(basis.iter().map(|v| reshape(v)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::gates::*;

    #[test]
    fn swap_of_x_and_z_is_hadamard() {
        let sols = kron_constraint_nullspace(&[
            (pauli_z(), pauli_x()),
            (pauli_x(), pauli_z()),
        ])
        .unwrap();
        assert_eq!(sols.len(), 1);
        let n = sols[0].projective_normal_form();
        let h = hadamard().projective_normal_form();
        assert_eq!(n, h);
    }

    #[test]
    fn identity_assignment_gives_identity_and_more() {
        // intertwiners fixing X and Z: scalars only (Pauli pair acts irreducibly)
        let sols = kron_constraint_nullspace(&[
            (pauli_x(), pauli_x()),
            (pauli_z(), pauli_z()),
        ])
        .unwrap();
        assert_eq!(sols.len(), 1);
        assert!(sols[0].projective_normal_form().is_identity());
    }

    #[test]
    fn anticommutant_of_x_contains_z() {
        // X ↦ −X = ZXZ†, Z unconstrained: solutions anticommute with X
        let minus_x = pauli_x().neg();
        let sols = kron_constraint_nullspace(&[(pauli_x(), minus_x)]).unwrap();
        assert_eq!(sols.len(), 2);
        let z = pauli_z();
        let span_contains_z = {
            // check Z = a·B₀ + b·B₁ by solving the 2-form exactly
            let rows: Vec<Vec<Cyclo>> = (0..4)
                .map(|e| {
                    vec![
                        sols[0].entries()[e].clone(),
                        sols[1].entries()[e].clone(),
                        z.entries()[e].neg(),
                    ]
                })
                .collect();
            // consistent iff kernel of [B₀ B₁ −Z] has a vector with last coord ≠ 0
            kernel_basis(&rows, 3)
                .iter()
                .any(|v| !v[2].is_zero())
        };
        assert!(span_contains_z);
    }

    #[test]
    fn restriction_matches_direct_stack() {
        let first = intertwiner_rows(&pauli_z(), &pauli_x());
        let second = intertwiner_rows(&pauli_x(), &pauli_z());
        let b1 = kernel_basis(&first, 4);
        let restricted = restrict_kernel(&b1, &second);
        let direct = kron_constraint_nullspace(&[
            (pauli_z(), pauli_x()),
            (pauli_x(), pauli_z()),
        ])
        .unwrap();
        assert_eq!(restricted.len(), direct.len());
        assert_eq!(
            reshape(&restricted[0]).projective_normal_form(),
            direct[0].projective_normal_form()
        );
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let err = kron_constraint_nullspace(&[(pauli_x(), cz())]);
        assert!(matches!(err, Err(MatrixError::DimensionMismatch(_, _))));
    }

    #[test]
    fn kernel_of_full_rank_system_is_empty() {
        let rows = vec![
            vec![Cyclo::one(), Cyclo::zero()],
            vec![Cyclo::zero(), Cyclo::one()],
        ];
        assert!(kernel_basis(&rows, 2).is_empty());
    }
}
