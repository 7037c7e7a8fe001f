use super::StefanError;

/// Banded matrix with LU factorisation by partial pivoting.
///
/// Row `i` stores columns `i−kl ..= i+ku+kl`; the extra `kl` upper diagonals
/// hold pivoting fill-in.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
    pivots: Vec<usize>,
    factored: bool,
}

impl BandedLu {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
            pivots: vec![0; n],
            factored: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku + self.kl);
        i * self.width + (j + self.kl - i)
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && j + self.kl >= i && j <= i + self.ku
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band");
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.ku + self.kl || i >= self.n || j >= self.n {
            return 0.0;
        }
        self.data[self.idx(i, j)]
    }

    pub fn factor(&mut self) -> Result<(), StefanError> {
        let (n, kl) = (self.n, self.kl);
        let reach = self.ku + self.kl;
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.idx(k, k)].abs();
            for r in k + 1..=last {
                let v = self.data[self.idx(r, k)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(StefanError::Singular(k));
            }
            self.pivots[k] = p;
            let jmax = (k + reach).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    let (a, b) = (self.idx(k, j), self.idx(p, j));
                    self.data.swap(a, b);
                }
            }
            let piv = self.data[self.idx(k, k)];
            for r in k + 1..=last {
                let ir = self.idx(r, k);
                let l = self.data[ir] / piv;
                self.data[ir] = l;
                if l == 0.0 {
                    continue;
                }
                for j in k + 1..=jmax {
                    let (a, b) = (self.idx(r, j), self.idx(k, j));
                    self.data[a] -= l * self.data[b];
                }
            }
        }
        self.factored = true;
        Ok(())
    }

    pub fn solve(&self, rhs: &mut [f64]) {
        assert!(self.factored, "solve before factor");
        let (n, kl) = (self.n, self.kl);
        let reach = self.ku + self.kl;
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                rhs.swap(k, p);
            }
            let last = (k + kl).min(n - 1);
            for r in k + 1..=last {
                rhs[r] -= self.data[self.idx(r, k)] * rhs[k];
            }
        }
        for k in (0..n).rev() {
            let jmax = (k + reach).min(n - 1);
            let mut acc = rhs[k];
            for j in k + 1..=jmax {
                acc -= self.data[self.idx(k, j)] * rhs[j];
            }
            rhs[k] = acc / self.data[self.idx(k, k)];
        }
    }
}

/// Solves `(B + a gᵀ) x = f` given the factored band `B`.
pub(crate) fn solve_rank_one(
    band: &BandedLu,
    a: &[f64],
    g: &[f64],
    f: &mut [f64],
) -> Result<(), StefanError> {
    let mut z = a.to_vec();
    band.solve(&mut z);
    band.solve(f);
    let gy: f64 = g.iter().zip(f.iter()).map(|(x, y)| x * y).sum();
    let gz: f64 = g.iter().zip(&z).map(|(x, y)| x * y).sum();
    let denom = 1.0 + gz;
    if denom.abs() < 1e-300 || !denom.is_finite() {
        return Err(StefanError::Singular(band.dim()));
    }
    let c = gy / denom;
    for (fi, zi) in f.iter_mut().zip(&z) {
        *fi -= c * zi;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense_matvec(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        m.iter()
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    proptest! {
        #[test]
        fn banded_rank_one_solve(
            vals in proptest::collection::vec(-1.0f64..1.0, 20 * 7),
            a in proptest::collection::vec(-1.0f64..1.0, 20),
            g in proptest::collection::vec(-0.2f64..0.2, 20),
            b in proptest::collection::vec(-1.0f64..1.0, 20),
        ) {
            let n = 20;
            let (kl, ku) = (3, 3);
            let mut band = BandedLu::zeros(n, kl, ku);
            let mut dense = vec![vec![0.0; n]; n];
            for i in 0..n {
                for (k, j) in (i.saturating_sub(kl)..=(i + ku).min(n - 1)).enumerate() {
                    // zero diagonal on odd rows forces pivoting
                    let mut v = vals[i * 7 + k];
                    if j == i {
                        v = if i % 2 == 1 { 0.0 } else { v + 4.0 };
                    }
                    if j + 1 == i && i % 2 == 1 {
                        v += 4.0;
                    }
                    band.add(i, j, v);
                    dense[i][j] += v;
                }
            }
            for i in 0..n {
                for j in 0..n {
                    dense[i][j] += a[i] * g[j];
                }
            }
            if band.factor().is_err() {
                return Ok(());
            }
            let mut x = b.clone();
            solve_rank_one(&band, &a, &g, &mut x).unwrap();
            let ax = dense_matvec(&dense, &x);
            let res = ax.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            let xn = x.iter().map(|v| v.abs()).fold(1.0, f64::max);
            prop_assert!(res < 1e-9 * xn, "res {}", res);
        }
    }
}
