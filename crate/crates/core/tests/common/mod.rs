//! Generators and brute-force oracles shared by the integration tests.
//! Nothing here calls into the library's own structure or linear algebra.
#![allow(dead_code)]

use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type C64 = Complex<f64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Boolean off-diagonal support.
pub fn support(a: &[Vec<f64>]) -> Vec<Vec<bool>> {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| i != j && a[i][j] > 0.0).collect()).collect()
}

/// Reachability (reflexive) by Floyd–Warshall.
pub fn transitive_closure(adj: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let n = adj.len();
    let mut r: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| i == j || adj[i][j]).collect()).collect();
    for k in 0..n {
        for i in 0..n {
            if r[i][k] {
                for j in 0..n {
                    if r[k][j] {
                        r[i][j] = true;
                    }
                }
            }
        }
    }
    r
}

pub fn strongly_connected(adj: &[Vec<bool>]) -> bool {
    transitive_closure(adj).iter().all(|row| row.iter().all(|&x| x))
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// gcd of the lengths `k <= n^2` of closed walks through vertex 0,
/// read off the diagonal of boolean matrix powers. 0 when there are none.
pub fn period_by_walks(adj: &[Vec<bool>]) -> usize {
    let n = adj.len();
    let mut power = adj.to_vec();
    let mut g = 0;
    for k in 1..=(n * n).max(2) {
        if power[0][0] {
            g = gcd(g, k);
        }
        let next: Vec<Vec<bool>> = (0..n)
            .map(|i| (0..n).map(|j| (0..n).any(|m| power[i][m] && adj[m][j])).collect())
            .collect();
        power = next;
    }
    g
}

/// Partial-pivot Gaussian elimination determinant.
pub fn det(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    let mut a = m.to_vec();
    let mut d = 1.0;
    for col in 0..n {
        let p = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
        if a[p][col] == 0.0 {
            return 0.0;
        }
        if p != col {
            a.swap(p, col);
            d = -d;
        }
        d *= a[col][col];
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
        }
    }
    d
}

fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect()).collect()
}

/// Characteristic polynomial coefficients `[1, c1, ..., cn]` of
/// `det(lambda I - M)` by Faddeev–LeVerrier.
pub fn char_poly(m: &[Vec<f64>]) -> Vec<f64> {
    let n = m.len();
    let mut coeffs = vec![1.0];
    let mut mk: Vec<Vec<f64>> = vec![vec![0.0; n]; n];
    for k in 1..=n {
        // M_k = M (M_{k-1} + c_{k-1} I)
        let mut inner = mk.clone();
        for (i, row) in inner.iter_mut().enumerate() {
            row[i] += coeffs[k - 1];
        }
        mk = matmul(m, &inner);
        let trace: f64 = (0..n).map(|i| mk[i][i]).sum();
        coeffs.push(-trace / k as f64);
    }
    coeffs
}

fn horner(coeffs: &[f64], z: C64) -> (C64, C64) {
    let mut p = C64::new(0.0, 0.0);
    let mut dp = C64::new(0.0, 0.0);
    for &c in coeffs {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Eigenvalues as the roots of the characteristic polynomial: Durand–Kerner
/// iteration followed by a few Newton polishing steps.
pub fn eigenvalues(m: &[Vec<f64>]) -> Vec<C64> {
    let coeffs = char_poly(m);
    let n = coeffs.len() - 1;
    let seed = C64::new(0.4, 0.9);
    let scale = 1.0 + coeffs.iter().skip(1).fold(0.0f64, |a, c| a.max(c.abs()));
    let mut roots: Vec<C64> = (0..n).map(|k| seed.powu(k as u32) * scale).collect();
    for _ in 0..2000 {
        let mut delta = 0.0f64;
        for i in 0..n {
            let (p, _) = horner(&coeffs, roots[i]);
            let mut denom = C64::new(1.0, 0.0);
            for j in 0..n {
                if j != i {
                    denom *= roots[i] - roots[j];
                }
            }
            let step = p / denom;
            roots[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 {
            break;
        }
    }
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = horner(&coeffs, *r);
            if dp.norm() > 1e-300 {
                let next = *r - p / dp;
                if next.re.is_finite() && next.im.is_finite() {
                    *r = next;
                }
            }
        }
    }
    roots
}

/// Row-normalises positive weights so every row sums to exactly one.
fn normalise(rows: &mut [Vec<f64>]) {
    for row in rows.iter_mut() {
        let s: f64 = row.iter().sum();
        for x in row.iter_mut() {
            *x /= s;
        }
        // Push the rounding error onto the largest entry.
        let total: f64 = row.iter().sum();
        let k = (0..row.len()).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
        row[k] += 1.0 - total;
        if row.iter().sum::<f64>() > 1.0 {
            row[k] = f64::from_bits(row[k].to_bits() - 1);
        }
    }
}

/// A random irreducible stochastic matrix on `n` agents without self-loops
/// in its support graph, except that diagonal weights are added to some
/// rows. Roughly half the draws are bipartite.
pub fn random_irreducible_class(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    assert!(n >= 2);
    let bipartite = rng.random_bool(0.5);
    let self_loops = rng.random_bool(0.3);
    loop {
        let side: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        if bipartite && (side.iter().all(|&s| s) || side.iter().all(|&s| !s)) {
            continue;
        }
        let density = rng.random_range(0.3..0.9);
        let mut a = vec![vec![0.0; n]; n];
        for (i, row) in a.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                let allowed = i != j && (!bipartite || side[i] != side[j]);
                if allowed && rng.random_bool(density) {
                    *x = rng.random_range(0.1..1.0);
                }
            }
            if self_loops && rng.random_bool(0.5) {
                row[i] = rng.random_range(0.05..0.8);
            }
        }
        if strongly_connected(&support(&a)) {
            normalise(&mut a);
            return a;
        }
    }
}

/// Random sub- or fully stochastic matrix with a mix of closed and open
/// classes: each row gets a few random positive entries.
pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    let mut a = vec![vec![0.0; n]; n];
    for row in a.iter_mut() {
        let k = rng.random_range(1..=n.min(3));
        for _ in 0..k {
            let j = rng.random_range(0..n);
            row[j] += rng.random_range(0.1..1.0);
        }
        let total: f64 = row.iter().sum();
        let mass = if rng.random_bool(0.6) { 1.0 } else { rng.random_range(0.3..0.95) };
        for x in row.iter_mut() {
            *x *= mass / total;
        }
        if mass == 1.0 {
            normalise(std::slice::from_mut(row));
        }
    }
    a
}

pub fn permute_matrix(a: &[Vec<f64>], perm: &[usize]) -> Vec<Vec<f64>> {
    // new[perm[i]][perm[j]] = a[i][j]
    let n = a.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            out[perm[i]][perm[j]] = a[i][j];
        }
    }
    out
}
