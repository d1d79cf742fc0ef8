//! Small dense least-squares kernels.
//!
//! Matrices here are tiny (at most a few dozen columns), so plain `Vec<f64>`
//! storage beats pulling in a general linear-algebra crate. The QR uses
//! Householder reflections with column pivoting on remaining column norms,
//! which makes the diagonal of `R` non-increasing in magnitude and exposes
//! rank deficiency.

/// Relative size of `|R_jj|` below which a column is treated as dependent.
pub const RANK_TOL: f64 = 1e-9;

/// Column-pivoted QR of an `n × k` matrix, `A P = Q R`.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    n: usize,
    k: usize,
    /// Column-major; `R` on and above the diagonal, Householder vectors below.
    a: Vec<f64>,
    tau: Vec<f64>,
    rdiag: Vec<f64>,
    /// `perm[j]` is the original column placed at position `j`.
    perm: Vec<usize>,
}

impl PivotedQr {
    /// Factorizes a column-major `n × k` matrix.
    pub fn new(mut a: Vec<f64>, n: usize, k: usize) -> Self {
        debug_assert_eq!(a.len(), n * k);
        let steps = n.min(k);
        let mut tau = vec![0.0; steps];
        let mut rdiag = vec![0.0; steps];
        let mut perm: Vec<usize> = (0..k).collect();

        for j in 0..steps {
            // Pivot: remaining column with the largest trailing norm.
            let mut best = j;
            let mut best_norm = -1.0;
            for c in j..k {
                let col = &a[c * n + j..(c + 1) * n];
                let s: f64 = col.iter().map(|v| v * v).sum();
                if s > best_norm {
                    best_norm = s;
                    best = c;
                }
            }
            if best != j {
                for i in 0..n {
                    a.swap(j * n + i, best * n + i);
                }
                perm.swap(j, best);
            }

            let col = &mut a[j * n + j..(j + 1) * n];
            let norm = best_norm.max(0.0).sqrt();
            if norm == 0.0 {
                rdiag[j] = 0.0;
                tau[j] = 0.0;
                continue;
            }
            let x0 = col[0];
            let beta = if x0 >= 0.0 { -norm } else { norm };
            tau[j] = (beta - x0) / beta;
            let scale = 1.0 / (x0 - beta);
            for v in col.iter_mut().skip(1) {
                *v *= scale;
            }
            col[0] = beta;
            rdiag[j] = beta;

            // Apply H = I - tau v v' to the trailing columns.
            for c in j + 1..k {
                let (head, tail) = a.split_at_mut(c * n);
                let v = &head[j * n + j..(j + 1) * n];
                let target = &mut tail[j..n];
                let mut w = target[0];
                for i in 1..v.len() {
                    w += v[i] * target[i];
                }
                w *= tau[j];
                target[0] -= w;
                for i in 1..v.len() {
                    target[i] -= w * v[i];
                }
            }
        }

        Self {
            n,
            k,
            a,
            tau,
            rdiag,
            perm,
        }
    }

    pub fn rank(&self) -> usize {
        let lead = self.rdiag.first().map_or(0.0, |v| v.abs());
        if lead == 0.0 {
            return 0;
        }
        self.rdiag.iter().take_while(|d| d.abs() > RANK_TOL * lead).count()
    }

    pub fn is_full_rank(&self) -> bool {
        self.n >= self.k && self.rank() == self.k
    }

    /// Overwrites `b` (length `n`) with `Qᵀ b`.
    fn apply_qt(&self, b: &mut [f64]) {
        let n = self.n;
        for j in 0..self.tau.len() {
            if self.tau[j] == 0.0 {
                continue;
            }
            let v = &self.a[j * n + j..(j + 1) * n];
            let target = &mut b[j..n];
            let mut w = target[0];
            for i in 1..v.len() {
                w += v[i] * target[i];
            }
            w *= self.tau[j];
            target[0] -= w;
            for i in 1..v.len() {
                target[i] -= w * v[i];
            }
        }
    }

    fn r(&self, i: usize, j: usize) -> f64 {
        self.a[j * self.n + i]
    }

    /// Least-squares solution for a full-rank factorization.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let k = self.k;
        let mut qtb = b.to_vec();
        self.apply_qt(&mut qtb);
        let mut z = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = qtb[i];
            for (j, zj) in z.iter().enumerate().skip(i + 1) {
                s -= self.r(i, j) * zj;
            }
            z[i] = s / self.r(i, i);
        }
        let mut x = vec![0.0; k];
        for (pos, &orig) in self.perm.iter().enumerate() {
            x[orig] = z[pos];
        }
        x
    }

    /// `(AᵀA)⁻¹` as a row-major `k × k` matrix, for a full-rank factorization.
    pub fn gram_inverse(&self) -> Vec<f64> {
        let k = self.k;
        // R⁻¹ (upper triangular), row-major.
        let mut rinv = vec![0.0; k * k];
        for col in 0..k {
            rinv[col * k + col] = 1.0 / self.r(col, col);
            for row in (0..col).rev() {
                let mut s = 0.0;
                for m in row + 1..=col {
                    s += self.r(row, m) * rinv[m * k + col];
                }
                rinv[row * k + col] = -s / self.r(row, row);
            }
        }
        let mut g = vec![0.0; k * k];
        for a in 0..k {
            for b in a..k {
                let s: f64 = (b..k).map(|l| rinv[a * k + l] * rinv[b * k + l]).sum();
                let (oa, ob) = (self.perm[a], self.perm[b]);
                g[oa * k + ob] = s;
                g[ob * k + oa] = s;
            }
        }
        g
    }
}

/// Quadratic form `xᵀ G x` for row-major symmetric `G`.
pub fn quad_form(g: &[f64], x: &[f64]) -> f64 {
    let k = x.len();
    let mut total = 0.0;
    for i in 0..k {
        let row = &g[i * k..(i + 1) * k];
        let mut s = 0.0;
        for j in 0..k {
            s += row[j] * x[j];
        }
        total += x[i] * s;
    }
    total
}

/// Cross-product matrix of `[1, X, y]`, used to score many column subsets
/// of the same data without refactorizing the design each time.
#[derive(Debug, Clone)]
pub struct CrossProducts {
    dim: usize,
    m: Vec<f64>,
}

impl CrossProducts {
    /// `rows` yields covariate rows; index 0 is the intercept, `1..=p` the
    /// covariates and `p + 1` the response.
    pub fn new<'a>(rows: impl Iterator<Item = (&'a [f64], f64)>, p: usize) -> Self {
        let dim = p + 2;
        let mut m = vec![0.0; dim * dim];
        let mut z = vec![0.0; dim];
        for (x, y) in rows {
            z[0] = 1.0;
            z[1..=p].copy_from_slice(x);
            z[p + 1] = y;
            for a in 0..dim {
                let za = z[a];
                for b in a..dim {
                    m[a * dim + b] += za * z[b];
                }
            }
        }
        for a in 0..dim {
            for b in 0..a {
                m[a * dim + b] = m[b * dim + a];
            }
        }
        Self { dim, m }
    }

    /// Residual sum of squares of `y` on the intercept plus the covariates
    /// `cols` (0-based), or `None` if those columns are linearly dependent.
    pub fn sse(&self, cols: &[usize]) -> Option<f64> {
        let idx: Vec<usize> = std::iter::once(0)
            .chain(cols.iter().map(|&c| c + 1))
            .chain(std::iter::once(self.dim - 1))
            .collect();
        let d = idx.len();
        let mut l = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..=i {
                let mut s = self.m[idx[i] * self.dim + idx[j]];
                for t in 0..j {
                    s -= l[i * d + t] * l[j * d + t];
                }
                if i == j {
                    if i + 1 == d {
                        // Response row: what is left is the residual sum of squares.
                        return Some(s.max(0.0));
                    }
                    let orig = self.m[idx[i] * self.dim + idx[i]];
                    if s <= 1e-12 * orig || s <= 0.0 {
                        return None;
                    }
                    l[i * d + i] = s.sqrt();
                } else {
                    l[i * d + j] = s / l[j * d + j];
                }
            }
        }
        unreachable!("response row always terminates the loop")
    }
}
