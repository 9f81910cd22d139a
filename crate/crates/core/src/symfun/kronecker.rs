//! Brute-force generalized Kronecker sums. Cost grows like m!^2, so these are
//! reference evaluations for m <= 6 only.

use nalgebra::DMatrix;

/// Visits every ordered tuple of `len` distinct indices from `0..m` avoiding `skip`.
fn for_each_tuple(m: usize, len: usize, skip: Option<usize>, f: &mut impl FnMut(&[usize])) {
    let mut tuple = Vec::with_capacity(len);
    let mut used = vec![false; m];
    if let Some(s) = skip {
        used[s] = true;
    }
    fn rec(m: usize, len: usize, tuple: &mut Vec<usize>, used: &mut [bool], f: &mut impl FnMut(&[usize])) {
        if tuple.len() == len {
            f(tuple);
            return;
        }
        for i in 0..m {
            if !used[i] {
                used[i] = true;
                tuple.push(i);
                rec(m, len, tuple, used, f);
                tuple.pop();
                used[i] = false;
            }
        }
    }
    rec(m, len, &mut tuple, &mut used, f);
}

/// Visits every permutation of `0..len` with its sign.
fn for_each_permutation(len: usize, f: &mut impl FnMut(&[usize], f64)) {
    let mut perm: Vec<usize> = (0..len).collect();
    fn rec(k: usize, perm: &mut Vec<usize>, sign: f64, f: &mut impl FnMut(&[usize], f64)) {
        if k + 1 >= perm.len() {
            f(perm, sign);
            return;
        }
        for i in k..perm.len() {
            perm.swap(k, i);
            rec(k + 1, perm, if i == k { sign } else { -sign }, f);
            perm.swap(k, i);
        }
    }
    if len == 0 {
        f(&[], 1.0);
        return;
    }
    rec(0, &mut perm, 1.0, f);
}

fn factorial(q: usize) -> f64 {
    (1..=q).map(|j| j as f64).product()
}

/// `(1/q!) sum delta^{i_1..i_q}_{j_1..j_q} M_1^{j_1}_{i_1} ... M_q^{j_q}_{i_q}`.
pub fn multilinear_sigma(mats: &[&DMatrix<f64>]) -> f64 {
    let q = mats.len();
    let m = mats.first().map_or(0, |a| a.nrows());
    let mut total = 0.0;
    for_each_tuple(m, q, None, &mut |upper| {
        for_each_permutation(q, &mut |perm, sign| {
            let mut p = sign;
            for a in 0..q {
                p *= mats[a][(upper[perm[a]], upper[a])];
            }
            total += p;
        });
    });
    total / factorial(q)
}

/// `(1/q!) sum delta^{i i_1..i_q}_{j j_1..j_q} M_1^{j_1}_{i_1} ... M_q^{j_q}_{i_q}`
/// as a matrix indexed by (i, j).
pub fn multilinear_newton(mats: &[&DMatrix<f64>], m: usize) -> DMatrix<f64> {
    let q = mats.len();
    let mut out = DMatrix::zeros(m, m);
    for i in 0..m {
        for_each_tuple(m, q, Some(i), &mut |rest| {
            let mut upper = Vec::with_capacity(q + 1);
            upper.push(i);
            upper.extend_from_slice(rest);
            for_each_permutation(q + 1, &mut |perm, sign| {
                let j = upper[perm[0]];
                let mut p = sign;
                for a in 0..q {
                    p *= mats[a][(upper[perm[a + 1]], upper[a + 1])];
                }
                out[(i, j)] += p;
            });
        });
    }
    out / factorial(q)
}

/// Reference sigma_{q,r}(A, B).
pub fn mixed_sigma(a: &DMatrix<f64>, b: &DMatrix<f64>, q: usize, r: usize) -> f64 {
    let mats: Vec<&DMatrix<f64>> = (0..q).map(|s| if s < r { a } else { b }).collect();
    multilinear_sigma(&mats)
}

/// Reference T_{q,r}(A, B).
pub fn mixed_newton(a: &DMatrix<f64>, b: &DMatrix<f64>, q: usize, r: usize) -> DMatrix<f64> {
    let mats: Vec<&DMatrix<f64>> = (0..q).map(|s| if s < r { a } else { b }).collect();
    multilinear_newton(&mats, a.nrows())
}

/// Reference sigma_q(A).
pub fn sigma(a: &DMatrix<f64>, q: usize) -> f64 {
    mixed_sigma(a, a, q, q)
}

/// Generalized Kronecker symbol: the sign of the permutation taking `upper`
/// to `lower`, or zero.
pub fn delta(upper: &[usize], lower: &[usize]) -> f64 {
    if upper.len() != lower.len() {
        return 0.0;
    }
    for (a, x) in upper.iter().enumerate() {
        if upper[..a].contains(x) {
            return 0.0;
        }
    }
    let mut pos = Vec::with_capacity(lower.len());
    for y in lower {
        match upper.iter().position(|x| x == y) {
            Some(p) if !pos.contains(&p) => pos.push(p),
            _ => return 0.0,
        }
    }
    let mut sign = 1.0;
    for a in 0..pos.len() {
        for b in a + 1..pos.len() {
            if pos[a] > pos[b] {
                sign = -sign;
            }
        }
    }
    sign
}
