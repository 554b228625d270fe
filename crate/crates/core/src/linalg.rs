//! Dense symmetric linear algebra: packed symmetric matrices, full
//! eigendecomposition by cyclic Jacobi, leftmost eigenpair, spectral norm.
//!
//! Everything here targets desk-scale problems (n up to a few hundred);
//! exactness of the full spectrum is what the subproblem solver needs to
//! treat the hard case without heuristics.

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Dense symmetric matrix storing only the lower triangle, row-major packed:
/// entry (i, j) with i >= j lives at `i*(i+1)/2 + j`.
///
/// Symmetry holds by construction; `set` writes a single triangle slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Zero matrix of dimension `n`.
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * (n + 1) / 2],
        }
    }

    /// Identity of dimension `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Diagonal matrix from the given entries.
    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    /// Build from a callback over (row, col) with row >= col.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Build from full row-major entries, symmetrizing as (A + A^T)/2.
    /// Rows must all have length `n`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        Self::from_fn(n, |i, j| 0.5 * (rows[i][j] + rows[j][i]))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(i: usize, j: usize) -> usize {
        debug_assert!(i >= j);
        i * (i + 1) / 2 + j
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i >= j {
            self.data[Self::idx(i, j)]
        } else {
            self.data[Self::idx(j, i)]
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        if i >= j {
            self.data[Self::idx(i, j)] = v;
        } else {
            self.data[Self::idx(j, i)] = v;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// y = A x.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "matvec dimension mismatch");
        let mut y = vec![0.0; self.n];
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, &xj) in x.iter().enumerate() {
                acc += self.get(i, j) * xj;
            }
            *yi = acc;
        }
        y
    }

    /// x^T A x.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.matvec(x))
    }

    /// A + c I.
    pub fn shifted(&self, c: f64) -> SymMatrix {
        let mut m = self.clone();
        for i in 0..self.n {
            let v = m.get(i, i);
            m.set(i, i, v + c);
        }
        m
    }

    /// c A.
    pub fn scaled(&self, c: f64) -> SymMatrix {
        let mut m = self.clone();
        for v in &mut m.data {
            *v *= c;
        }
        m
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                let v = self.get(i, j);
                acc += v * v;
            }
        }
        acc.sqrt()
    }

    fn ensure_finite(&self) -> Result<(), Error> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFiniteInput("symmetric matrix"))
        }
    }
}

/// Eigenvalue with a unit eigenvector.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
}

/// Full spectral decomposition A = V diag(values) V^T with `values`
/// ascending and `vectors[k]` the unit eigenvector for `values[k]`.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

impl Eigen {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Coefficients of `x` in the eigenbasis: w_k = v_k^T x.
    pub fn to_eigenbasis(&self, x: &[f64]) -> Vec<f64> {
        self.vectors.iter().map(|v| dot(v, x)).collect()
    }

    /// Reassemble sum_k w_k v_k.
    pub fn from_eigenbasis(&self, w: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut x = vec![0.0; n];
        for (k, v) in self.vectors.iter().enumerate() {
            for i in 0..n {
                x[i] += w[k] * v[i];
            }
        }
        x
    }

    /// Solve (A + shift I) y = rhs through the spectrum. Caller must ensure
    /// every `value + shift` is safely away from zero.
    pub fn solve_shifted(&self, rhs: &[f64], shift: f64) -> Vec<f64> {
        let mut w = self.to_eigenbasis(rhs);
        for (k, wk) in w.iter_mut().enumerate() {
            *wk /= self.values[k] + shift;
        }
        self.from_eigenbasis(&w)
    }
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order; each eigenvector is unit norm with
/// the first component of magnitude above `1e-14 * max|component|` made
/// positive, so repeated runs produce identical signs.
#[allow(clippy::needless_range_loop)] // rotations touch paired rows/columns
pub fn eigendecompose(a: &SymMatrix) -> Result<Eigen, Error> {
    a.ensure_finite()?;
    let n = a.dim();
    if n == 0 {
        return Err(Error::NonFiniteInput("empty matrix"));
    }

    // Work on a full dense copy; rotations touch both triangles.
    let mut m = vec![vec![0.0; n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, e) in row.iter_mut().enumerate() {
            *e = a.get(i, j);
        }
    }
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }

    let scale = a.frobenius_norm().max(1.0);
    let tol = 1e-15 * scale;

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[p][q] * m[p][q];
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..(n - 1) {
            for q in (p + 1)..n {
                let apq = m[p][q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                let app = m[p][p];
                let aqq = m[q][q];
                m[p][p] = app - t * apq;
                m[q][q] = aqq + t * apq;
                m[p][q] = 0.0;
                m[q][p] = 0.0;
                for i in 0..n {
                    if i != p && i != q {
                        let aip = m[i][p];
                        let aiq = m[i][q];
                        m[i][p] = aip - s * (aiq + tau * aip);
                        m[p][i] = m[i][p];
                        m[i][q] = aiq + s * (aip - tau * aiq);
                        m[q][i] = m[i][q];
                    }
                }
                for row in v.iter_mut() {
                    let vip = row[p];
                    let viq = row[q];
                    row[p] = vip - s * (viq + tau * vip);
                    row[q] = viq + s * (vip - tau * viq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i][i].partial_cmp(&m[j][j]).unwrap());

    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for &k in &order {
        values.push(m[k][k]);
        let mut col: Vec<f64> = v.iter().map(|row| row[k]).collect();
        normalize(&mut col);
        fix_sign(&mut col);
        vectors.push(col);
    }
    Ok(Eigen { values, vectors })
}

/// The algebraically smallest eigenvalue with its unit eigenvector.
pub fn leftmost_eigenpair(a: &SymMatrix) -> Result<EigenPair, Error> {
    let eig = eigendecompose(a)?;
    Ok(EigenPair {
        value: eig.values[0],
        vector: eig.vectors[0].clone(),
    })
}

/// min{0, lambda}.
pub fn negative_part(lambda: f64) -> f64 {
    lambda.min(0.0)
}

/// Operator two-norm, i.e. max |eigenvalue|.
pub fn spectral_norm(a: &SymMatrix) -> Result<f64, Error> {
    let eig = eigendecompose(a)?;
    Ok(eig
        .values
        .iter()
        .fold(0.0f64, |acc, &v| acc.max(v.abs())))
}

/// Flip the vector so its first component of non-negligible magnitude is
/// positive. Keeps eigenvector signs reproducible across runs.
fn fix_sign(v: &mut [f64]) {
    let max_abs = v.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let thresh = 1e-14 * max_abs;
    for &x in v.iter() {
        if x.abs() > thresh {
            if x < 0.0 {
                for e in v.iter_mut() {
                    *e = -*e;
                }
            }
            return;
        }
    }
}

fn normalize(v: &mut [f64]) {
    let n = norm(v);
    if n > 0.0 {
        for e in v.iter_mut() {
            *e /= n;
        }
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// a + c*b.
pub fn axpy(a: &[f64], c: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + c * y).collect()
}

pub fn scale(v: &[f64], c: f64) -> Vec<f64> {
    v.iter().map(|x| c * x).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(n: usize, rng: &mut impl Rng) -> SymMatrix {
        SymMatrix::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
    }

    /// det(A - t I) by Gaussian elimination with partial pivoting.
    fn char_poly(a: &SymMatrix, t: f64) -> f64 {
        let n = a.dim();
        let mut m: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| a.get(i, j) - if i == j { t } else { 0.0 })
                    .collect()
            })
            .collect();
        let mut det = 1.0;
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
                .unwrap();
            if m[piv][col] == 0.0 {
                return 0.0;
            }
            if piv != col {
                m.swap(piv, col);
                det = -det;
            }
            det *= m[col][col];
            for row in (col + 1)..n {
                let f = m[row][col] / m[col][col];
                for k in col..n {
                    m[row][k] -= f * m[col][k];
                }
            }
        }
        det
    }

    /// All real roots of det(A - t I) by sign-change scan + bisection over the
    /// Gershgorin interval. Independent of the Jacobi path.
    fn char_poly_roots(a: &SymMatrix, scan_steps: usize) -> Vec<f64> {
        let n = a.dim();
        let mut lo = f64::MAX;
        let mut hi = f64::MIN;
        for i in 0..n {
            let mut r = 0.0;
            for j in 0..n {
                if i != j {
                    r += a.get(i, j).abs();
                }
            }
            lo = lo.min(a.get(i, i) - r);
            hi = hi.max(a.get(i, i) + r);
        }
        lo -= 1.0;
        hi += 1.0;
        let mut roots = Vec::new();
        let step = (hi - lo) / scan_steps as f64;
        let mut t0 = lo;
        let mut f0 = char_poly(a, t0);
        for k in 1..=scan_steps {
            let t1 = lo + step * k as f64;
            let f1 = char_poly(a, t1);
            if f0 == 0.0 {
                roots.push(t0);
            } else if f0 * f1 < 0.0 {
                let (mut a0, mut b0) = (t0, t1);
                let mut fa = f0;
                for _ in 0..200 {
                    let mid = 0.5 * (a0 + b0);
                    let fm = char_poly(a, mid);
                    if fa * fm <= 0.0 {
                        b0 = mid;
                    } else {
                        a0 = mid;
                        fa = fm;
                    }
                }
                roots.push(0.5 * (a0 + b0));
            }
            t0 = t1;
            f0 = f1;
        }
        roots
    }

    #[test]
    fn leftmost_diagonal() {
        let a = SymMatrix::from_diag(&[2.0, -1.0]);
        let p = leftmost_eigenpair(&a).unwrap();
        assert_eq!(p.value, -1.0);
        assert!((p.vector[0]).abs() < 1e-12);
        assert!((p.vector[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn leftmost_identity_sign_convention() {
        let a = SymMatrix::identity(3);
        let p = leftmost_eigenpair(&a).unwrap();
        assert!((p.value - 1.0).abs() < 1e-12);
        assert!((norm(&p.vector) - 1.0).abs() < 1e-12);
        // First non-negligible component positive.
        let first = p.vector.iter().find(|x| x.abs() > 1e-12).unwrap();
        assert!(*first > 0.0);
    }

    #[test]
    fn leftmost_matches_char_poly_bisection() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let a = random_sym(4, &mut rng);
            let roots = char_poly_roots(&a, 4000);
            assert_eq!(roots.len(), 4, "oracle found all simple roots");
            let p = leftmost_eigenpair(&a).unwrap();
            assert!(
                (p.value - roots[0]).abs() < 1e-8,
                "leftmost {} vs oracle {}",
                p.value,
                roots[0]
            );
        }
    }

    #[test]
    fn spectral_norm_diagonal_and_zero() {
        assert_eq!(
            spectral_norm(&SymMatrix::from_diag(&[2.0, -3.0])).unwrap(),
            3.0
        );
        assert_eq!(spectral_norm(&SymMatrix::zeros(3)).unwrap(), 0.0);
    }

    #[test]
    fn spectral_norm_matches_power_iteration() {
        // Power iteration on A^2 converges to the dominant |eigenvalue|^2.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let a = random_sym(3, &mut rng);
            let mut x: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            normalize(&mut x);
            for _ in 0..20_000 {
                let mut y = a.matvec(&a.matvec(&x));
                normalize(&mut y);
                x = y;
            }
            let oracle = norm(&a.matvec(&x));
            let got = spectral_norm(&a).unwrap();
            assert!(
                (got - oracle).abs() < 1e-8,
                "spectral norm {got} vs power iteration {oracle}"
            );
        }
    }

    #[test]
    fn negative_part_cases() {
        assert_eq!(negative_part(-2.0), -2.0);
        assert_eq!(negative_part(3.0), 0.0);
        assert_eq!(negative_part(0.0), 0.0);
    }

    #[test]
    fn eigenpair_residual_and_rayleigh_lower_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [1usize, 2, 5, 10, 30] {
            let a = random_sym(n, &mut rng);
            let anorm = spectral_norm(&a).unwrap();
            let p = leftmost_eigenpair(&a).unwrap();
            let resid = norm(&sub(&a.matvec(&p.vector), &scale(&p.vector, p.value)));
            assert!(
                resid <= 1e-10 * anorm.max(1.0),
                "residual {resid} too large for n={n}"
            );
            assert!((norm(&p.vector) - 1.0).abs() <= 1e-12);
            for _ in 0..1000 {
                let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                if norm(&v) == 0.0 {
                    continue;
                }
                normalize(&mut v);
                let rayleigh = dot(&v, &a.matvec(&v));
                assert!(
                    p.value <= rayleigh + 1e-10 * anorm.max(1.0),
                    "leftmost not a lower bound: {} > {}",
                    p.value,
                    rayleigh
                );
            }
        }
    }

    #[test]
    fn shift_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..25 {
            let a = random_sym(6, &mut rng);
            let c = rng.gen_range(-3.0..3.0);
            let base = leftmost_eigenpair(&a).unwrap().value;
            let shifted = leftmost_eigenpair(&a.shifted(c)).unwrap().value;
            assert!(
                (shifted - (base + c)).abs() < 1e-10,
                "shift equivariance broke: {shifted} vs {}",
                base + c
            );
        }
    }

    #[test]
    fn non_finite_rejected() {
        let mut a = SymMatrix::zeros(2);
        a.set(0, 1, f64::NAN);
        assert!(matches!(
            leftmost_eigenpair(&a),
            Err(Error::NonFiniteInput(_))
        ));
    }

    #[test]
    fn decomposition_reconstructs_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let a = random_sym(8, &mut rng);
        let eig = eigendecompose(&a).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let mut acc = 0.0;
                for k in 0..8 {
                    acc += eig.values[k] * eig.vectors[k][i] * eig.vectors[k][j];
                }
                assert!((acc - a.get(i, j)).abs() < 1e-11);
            }
        }
        // ascending order
        for k in 1..8 {
            assert!(eig.values[k] >= eig.values[k - 1]);
        }
    }

    #[test]
    fn solve_shifted_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let a = random_sym(5, &mut rng);
        let eig = eigendecompose(&a).unwrap();
        let shift = 10.0; // safely PD after shifting
        let rhs: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y = eig.solve_shifted(&rhs, shift);
        let back = axpy(&a.matvec(&y), shift, &y);
        for i in 0..5 {
            assert!((back[i] - rhs[i]).abs() < 1e-10);
        }
    }
}
