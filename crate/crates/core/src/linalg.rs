//! Sparse and banded kernels used by the solvers: a compressed-row matrix,
//! Jacobi-preconditioned conjugate gradients, and a banded LDLᵀ
//! factorization whose pivots give the inertia of shifted pencils.

/// Square matrix in compressed sparse row form.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds the matrix from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            assert!(i < n && j < n, "triplet ({i}, {j}) out of range for n = {n}");
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.vals[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            y[i] = acc;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// Largest `|i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, _)| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }

    /// Largest asymmetry `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

/// Preconditioned conjugate gradients for `a x = b`, `a` symmetric positive
/// definite. The residual is measured as `sqrt(Σ r_i² / w_i)` relative to the
/// same norm of `b`; `x` holds the initial guess on entry.
pub fn pcg(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    norm_weights: &[f64],
    jacobi: bool,
    rel_tol: f64,
    max_iters: usize,
    mut on_iter: impl FnMut(usize, f64),
) -> CgOutcome {
    let n = a.n();
    let wnorm = |v: &[f64]| -> f64 {
        v.iter()
            .zip(norm_weights)
            .map(|(r, w)| r * r / w)
            .sum::<f64>()
            .sqrt()
    };
    let bnorm = wnorm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return CgOutcome {
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }
    let inv_diag: Vec<f64> = if jacobi {
        a.diagonal()
            .iter()
            .map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 })
            .collect()
    } else {
        vec![1.0; n]
    };
    let mut r = a.matvec(x);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut rel = wnorm(&r) / bnorm;
    if rel <= rel_tol {
        return CgOutcome {
            iterations: 0,
            relative_residual: rel,
            converged: true,
        };
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    for it in 1..=max_iters {
        a.matvec_into(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 || !pap.is_finite() {
            return CgOutcome {
                iterations: it,
                relative_residual: rel,
                converged: false,
            };
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rel = wnorm(&r) / bnorm;
        on_iter(it, rel);
        if rel <= rel_tol {
            return CgOutcome {
                iterations: it,
                relative_residual: rel,
                converged: true,
            };
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    CgOutcome {
        iterations: max_iters,
        relative_residual: rel,
        converged: false,
    }
}

/// Symmetric band matrix storing the lower band: entry `(i, j)` with
/// `i - bw <= j <= i` lives at `data[i * (bw + 1) + (j + bw - i)]`.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    /// Lower band of `a - shift * diag(m)`.
    pub fn from_csr_shifted(a: &CsrMatrix, shift: f64, m: &[f64]) -> Self {
        let bw = a.bandwidth();
        let mut band = Self::zeros(a.n(), bw);
        for i in 0..a.n() {
            for (j, v) in a.row(i) {
                if j <= i {
                    band.add(i, j, v);
                }
            }
            if shift != 0.0 {
                band.add(i, i, -shift * m[i]);
            }
        }
        band
    }

    pub fn from_csr(a: &CsrMatrix) -> Self {
        Self::from_csr_shifted(a, 0.0, &[])
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.bw + 1) + (j + self.bw - i)
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(j <= i && i - j <= self.bw);
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// LDLᵀ without pivoting. Fails only on an exactly zero pivot.
    pub fn factor(mut self) -> Option<LdlFactor> {
        let (n, bw) = (self.n, self.bw);
        let mut d = vec![0.0; n];
        // scratch row: L[i][k] * D[k]
        let mut ld = vec![0.0; bw + 1];
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..i {
                let k0 = j0.max(j.saturating_sub(bw));
                let mut s = self.data[self.idx(i, j)];
                for k in k0..j {
                    s -= ld[k - j0] * self.data[self.idx(j, k)];
                }
                let lij = s / d[j];
                let pos = self.idx(i, j);
                self.data[pos] = lij;
                ld[j - j0] = lij * d[j];
            }
            let mut di = self.data[self.idx(i, i)];
            for k in j0..i {
                di -= ld[k - j0] * self.data[self.idx(i, k)];
            }
            if di == 0.0 || !di.is_finite() {
                return None;
            }
            d[i] = di;
        }
        Some(LdlFactor { band: self, d })
    }
}

#[derive(Debug, Clone)]
pub struct LdlFactor {
    band: BandMatrix,
    d: Vec<f64>,
}

impl LdlFactor {
    /// Number of negative pivots, equal to the number of negative
    /// eigenvalues of the factored matrix.
    pub fn negative_pivots(&self) -> usize {
        self.d.iter().filter(|&&v| v < 0.0).count()
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, bw) = (self.band.n, self.band.bw);
        let b = &self.band;
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            let mut s = x[i];
            for j in j0..i {
                s -= b.data[b.idx(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in 0..n {
            x[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..(i + bw + 1).min(n) {
                s -= b.data[b.idx(k, i)] * x[k];
            }
            x[i] = s;
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Number of eigenvalues of the pencil `(a, diag(m))` strictly below `shift`,
/// or `None` when the shift hits an eigenvalue exactly.
pub fn count_below(a: &CsrMatrix, m: &[f64], shift: f64) -> Option<usize> {
    BandMatrix::from_csr_shifted(a, shift, m)
        .factor()
        .map(|f| f.negative_pivots())
}
