//! Dense complex linear algebra helpers: scaling-and-squaring matrix
//! exponential, bordered (deflated) solves, and a frozen-Jacobian Newton
//! iteration for the isolated eigenvalue near zero.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Factorize, LUFactorized, OperationNorm, Solve, SVD};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

const THETA: [(usize, f64); 5] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
    (13, 5.371920351148152e0),
];

fn pade_coeffs(m: usize) -> &'static [f64] {
    match m {
        3 => &[120., 60., 12., 1.],
        5 => &[30240., 15120., 3360., 420., 30., 1.],
        7 => &[17297280., 8648640., 1995840., 277200., 25200., 1512., 56., 1.],
        9 => &[
            17643225600., 8821612800., 2075673600., 302702400., 30270240., 2162160., 110880.,
            3960., 90., 1.,
        ],
        13 => &[
            64764752532480000.,
            32382376266240000.,
            7771770303897600.,
            1187353796428800.,
            129060195264000.,
            10559470521600.,
            670442572800.,
            33522128640.,
            1323241920.,
            40840800.,
            960960.,
            16380.,
            182.,
            1.,
        ],
        _ => unreachable!(),
    }
}

fn solve_matrix(a: &Array2<C64>, b: &Array2<C64>) -> Result<Array2<C64>> {
    let f = a.factorize()?;
    let n = b.nrows();
    let mut out = Array2::zeros((n, b.ncols()));
    for (j, col) in b.columns().into_iter().enumerate() {
        let x = f.solve(&col.to_owned())?;
        out.column_mut(j).assign(&x);
    }
    Ok(out)
}

/// Matrix exponential by Padé approximation with scaling and squaring.
pub fn expm(a: &Array2<C64>) -> Result<Array2<C64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch("expm needs a square matrix".into()));
    }
    let norm = a.opnorm_one()?;
    let (order, scaling) = if norm <= THETA[4].1 {
        (THETA.iter().find(|(_, th)| norm <= *th).unwrap().0, 0u32)
    } else {
        let s = ((norm / THETA[4].1).log2()).ceil().max(0.0) as u32;
        (13, s)
    };
    let a = a.mapv(|x| x / (2f64.powi(scaling as i32)));
    let b = pade_coeffs(order);
    let eye = Array2::<C64>::eye(n);
    let a2 = a.dot(&a);

    let (u, v) = if order < 13 {
        // U = A (sum_k b_{2k+1} A^{2k}), V = sum_k b_{2k} A^{2k}
        let mut term = eye.clone();
        let mut usum = Array2::<C64>::zeros((n, n));
        let mut vsum = Array2::<C64>::zeros((n, n));
        for k in 0..=(order / 2) {
            usum = usum + term.mapv(|x| x * b[2 * k + 1]);
            vsum = vsum + term.mapv(|x| x * b[2 * k]);
            if k < order / 2 {
                term = term.dot(&a2);
            }
        }
        (a.dot(&usum), vsum)
    } else {
        let a4 = a2.dot(&a2);
        let a6 = a4.dot(&a2);
        let u_hi = a6.mapv(|x| x * b[13]) + a4.mapv(|x| x * b[11]) + a2.mapv(|x| x * b[9]);
        let u_lo = a6.mapv(|x| x * b[7])
            + a4.mapv(|x| x * b[5])
            + a2.mapv(|x| x * b[3])
            + eye.mapv(|x| x * b[1]);
        let u = a.dot(&(a6.dot(&u_hi) + u_lo));
        let v_hi = a6.mapv(|x| x * b[12]) + a4.mapv(|x| x * b[10]) + a2.mapv(|x| x * b[8]);
        let v = a6.dot(&v_hi)
            + a6.mapv(|x| x * b[6])
            + a4.mapv(|x| x * b[4])
            + a2.mapv(|x| x * b[2])
            + eye.mapv(|x| x * b[0]);
        (u, v)
    };

    let p = &v + &u;
    let q = &v - &u;
    let mut r = solve_matrix(&q, &p)?;
    for _ in 0..scaling {
        r = r.dot(&r);
    }
    Ok(r)
}

/// Largest singular value.
pub fn spectral_norm(a: &Array2<C64>) -> Result<f64> {
    let (_, s, _) = a.svd(false, false)?;
    Ok(s.iter().cloned().fold(0.0, f64::max))
}

/// Smallest singular value.
pub fn smallest_singular(a: &Array2<C64>) -> Result<f64> {
    let (_, s, _) = a.svd(false, false)?;
    Ok(s.iter().cloned().fold(f64::INFINITY, f64::min))
}

/// LU factorization of the bordered matrix `[[A, c], [c^H, 0]]`, realizing
/// the inverse of `A` restricted to the orthogonal complement of `c`.
pub struct BorderedSolver {
    lu: LUFactorized<ndarray::OwnedRepr<C64>>,
    n: usize,
}

impl BorderedSolver {
    pub fn new(a: &Array2<C64>, c: &Array1<C64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || c.len() != n {
            return Err(Error::DimensionMismatch("bordered solver shape".into()));
        }
        let mut m = Array2::<C64>::zeros((n + 1, n + 1));
        m.slice_mut(ndarray::s![..n, ..n]).assign(a);
        for i in 0..n {
            m[[i, n]] = c[i];
            m[[n, i]] = c[i].conj();
        }
        let lu = m.factorize()?;
        Ok(BorderedSolver { lu, n })
    }

    /// Solve `A x + mult c = b` subject to `c^H x = beta`; returns `(x, mult)`.
    pub fn solve(&self, b: &Array1<C64>, beta: C64) -> Result<(Array1<C64>, C64)> {
        let mut rhs = Array1::<C64>::zeros(self.n + 1);
        rhs.slice_mut(ndarray::s![..self.n]).assign(b);
        rhs[self.n] = beta;
        let sol = self.lu.solve(&rhs)?;
        let x = sol.slice(ndarray::s![..self.n]).to_owned();
        Ok((x, sol[self.n]))
    }
}

/// Sparse matrix in CSR form, for residuals and matvecs.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<C64>,
}

impl SparseMatrix {
    /// Build from triplets (duplicates are summed).
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, C64)]) -> Self {
        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            rows[i].push((j, v));
        }
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for row in rows.iter_mut() {
            row.sort_by_key(|&(j, _)| j);
            let mut k = 0;
            while k < row.len() {
                let j = row[k].0;
                let mut v = row[k].1;
                while k + 1 < row.len() && row[k + 1].0 == j {
                    k += 1;
                    v += row[k].1;
                }
                indices.push(j);
                data.push(v);
                k += 1;
            }
            indptr.push(indices.len());
        }
        SparseMatrix { n, indptr, indices, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn matvec(&self, x: &[C64], out: &mut [C64]) {
        for i in 0..self.n {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.indptr[i]..self.indptr[i + 1] {
                acc += self.data[k] * x[self.indices[k]];
            }
            out[i] = acc;
        }
    }

    pub fn adjoint_matvec(&self, x: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        for i in 0..self.n {
            let xi = x[i];
            for k in self.indptr[i]..self.indptr[i + 1] {
                out[self.indices[k]] += self.data[k].conj() * xi;
            }
        }
    }

    pub fn to_dense(&self) -> Array2<C64> {
        let mut a = Array2::zeros((self.n, self.n));
        for i in 0..self.n {
            for k in self.indptr[i]..self.indptr[i + 1] {
                a[[i, self.indices[k]]] += self.data[k];
            }
        }
        a
    }
}

/// Find the isolated eigenvalue of `op` near zero by a frozen-Jacobian Newton
/// iteration on the bordered system, reusing a factorization of a nearby
/// reference operator.
///
/// `solver` must be the bordered factorization of a reference matrix whose
/// distance to `op` is small compared to the spectral gap around the target
/// eigenvalue; `guess` is the starting eigenvector (the reference kernel
/// vector works).
pub fn eigen_near_zero(
    op: &SparseMatrix,
    solver: &BorderedSolver,
    guess: &Array1<C64>,
    scale: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(C64, Array1<C64>)> {
    let n = op.dim();
    let mut v = guess.to_owned();
    let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    v.mapv_inplace(|x| x / norm);
    let c = guess.to_owned();
    // normalize so c^H v = 1
    let cv: C64 = c.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
    v.mapv_inplace(|x| x / cv);
    let mut lambda = C64::new(0.0, 0.0);
    let mut buf = vec![C64::new(0.0, 0.0); n];
    let mut last_res = f64::INFINITY;
    for _ in 0..max_iter {
        op.matvec(v.as_slice().unwrap(), &mut buf);
        let mut residual = Array1::from_vec(buf.clone());
        residual.zip_mut_with(&v, |r, &vi| *r -= lambda * vi);
        let res_norm = residual.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let v_norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if res_norm <= tol * scale * v_norm {
            // Rayleigh quotient for the final eigenvalue estimate
            op.matvec(v.as_slice().unwrap(), &mut buf);
            let num: C64 = v.iter().zip(buf.iter()).map(|(a, b)| a.conj() * b).sum();
            let den: f64 = v.iter().map(|x| x.norm_sqr()).sum();
            return Ok((num / den, v));
        }
        if res_norm > 10.0 * last_res.max(tol * scale) && last_res.is_finite() {
            return Err(Error::NoConvergence(format!(
                "deflated Newton diverging: residual {res_norm} after {last_res}"
            )));
        }
        last_res = res_norm;
        // frozen-Jacobian Newton step: solve [[A0, c],[c^H, 0]] d = -F
        let cv: C64 = c.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
        let target = residual.mapv(|x| -x);
        let (dv, mult) = solver.solve(&target, C64::new(1.0, 0.0) - cv)?;
        let dlambda = -mult;
        v = &v + &dv;
        lambda += dlambda;
        // keep the normalization c^H v = 1 exact
        let cv: C64 = c.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
        if cv.norm() > 1e-14 {
            v.mapv_inplace(|x| x / cv);
        }
    }
    Err(Error::NoConvergence(format!(
        "deflated Newton did not reach tolerance {tol} in {max_iter} iterations (residual {last_res})"
    )))
}
