use rand::seq::{index, SliceRandom};
use rayon::prelude::*;

use super::compensated_sum;
use crate::error::{Error, Result};
use crate::measures::SampleSet;
use crate::rng::rng_from_seed;

/// Absolute tolerance for comparisons inside the shortest-path search.
/// Among near-equal candidates the lowest column index wins.
pub const TIE_EPS: f64 = 1e-12;

/// Largest size accepted by [`brute_force_assignment`].
pub const BRUTE_FORCE_MAX: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssignMethod {
    Sorted1d,
    ExactLp,
    MinibatchRefine,
    BruteForce,
}

impl AssignMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            AssignMethod::Sorted1d => "sorted_1d",
            AssignMethod::ExactLp => "exact_lp",
            AssignMethod::MinibatchRefine => "minibatch_refine",
            AssignMethod::BruteForce => "brute_force",
        }
    }
}

/// A coupling `i -> sigma[i]` of source to target indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub sigma: Vec<usize>,
    pub total_sq_cost: f64,
    pub method: AssignMethod,
}

impl Assignment {
    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn is_bijection(&self) -> bool {
        let mut seen = vec![false; self.sigma.len()];
        self.sigma.iter().all(|&j| j < seen.len() && !std::mem::replace(&mut seen[j], true))
    }

    /// Total cost of `sigma` under `cost`, summed in row order.
    pub fn cost_under(&self, cost: &CostMatrix) -> f64 {
        permutation_cost(cost, &self.sigma)
    }
}

/// Dense square cost matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    n: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::SizeMismatch { left: n * n, right: data.len() });
        }
        Ok(Self { n, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(r) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::SizeMismatch { left: n, right: r.len() });
        }
        Ok(Self {
            n,
            data: rows.concat(),
        })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    /// `C[i][j] = |x_i - y_j|^2`. Rows are filled in parallel.
    pub fn squared_euclidean(xs: &SampleSet, ys: &SampleSet) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::SizeMismatch { left: xs.len(), right: ys.len() });
        }
        if xs.dim() != ys.dim() {
            return Err(Error::SizeMismatch { left: xs.dim(), right: ys.dim() });
        }
        Ok(Self::squared_euclidean_raw(xs.points(), ys.points(), xs.dim()))
    }

    pub(crate) fn squared_euclidean_raw(xs: &[f64], ys: &[f64], dim: usize) -> Self {
        let n = xs.len() / dim;
        let mut data = vec![0.0; n * n];
        let fill = |(i, row): (usize, &mut [f64])| {
            let x = &xs[i * dim..(i + 1) * dim];
            for (j, c) in row.iter_mut().enumerate() {
                let y = &ys[j * dim..(j + 1) * dim];
                *c = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
            }
        };
        if n >= 256 {
            data.par_chunks_mut(n).enumerate().for_each(fill);
        } else {
            data.chunks_mut(n.max(1)).enumerate().for_each(fill);
        }
        Self { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }
}

fn permutation_cost(cost: &CostMatrix, sigma: &[usize]) -> f64 {
    compensated_sum(sigma.iter().enumerate().map(|(i, &j)| cost.get(i, j)))
}

/// Minimum-cost perfect matching by successive shortest augmenting paths
/// (Hungarian method with row/column potentials).
///
/// Potentials start from a column reduction, and every column whose minimum
/// is attained at a still-free row is matched greedily; the remaining rows
/// are inserted one at a time by a dense Dijkstra search over reduced
/// costs. Deterministic: near-ties within [`TIE_EPS`] go to the lowest
/// column index.
pub fn assignment_exact(cost: &CostMatrix) -> Result<Assignment> {
    let n = cost.n;
    if let Some(v) = cost.data.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("cost entry {v}")));
    }
    if n == 0 {
        return Ok(Assignment {
            sigma: Vec::new(),
            total_sq_cost: 0.0,
            method: AssignMethod::ExactLp,
        });
    }

    const NONE: usize = usize::MAX;
    let mut u = vec![0.0f64; n];
    let mut v = vec![0.0f64; n];
    let mut row_of = vec![NONE; n];
    let mut col_of = vec![NONE; n];

    // column reduction: v_j = min_i c_ij, tight at the lowest minimizing row
    let mut argmin = vec![0usize; n];
    v.copy_from_slice(cost.row(0));
    for i in 1..n {
        for (j, &c) in cost.row(i).iter().enumerate() {
            if c < v[j] {
                v[j] = c;
                argmin[j] = i;
            }
        }
    }
    for j in 0..n {
        let i = argmin[j];
        if col_of[i] == NONE {
            col_of[i] = j;
            row_of[j] = i;
        }
    }

    let mut dist = vec![0.0f64; n];
    let mut pred = vec![0usize; n];
    let mut todo: Vec<usize> = Vec::with_capacity(n);
    let mut scanned: Vec<usize> = Vec::with_capacity(n);

    for start in 0..n {
        if col_of[start] != NONE {
            continue;
        }
        // Dijkstra from the free row `start`; `todo` holds unscanned columns
        todo.clear();
        todo.extend(0..n);
        scanned.clear();
        let urow = u[start];
        let crow = cost.row(start);
        let mut best = f64::INFINITY;
        let mut pos = 0;
        for (k, &j) in todo.iter().enumerate() {
            let d = crow[j] - urow - v[j];
            dist[j] = d;
            pred[j] = start;
            if d < best - TIE_EPS {
                best = d;
                pos = k;
            }
        }
        let (sink, delta) = loop {
            let jbest = todo.swap_remove(pos);
            scanned.push(jbest);
            let i = row_of[jbest];
            if i == NONE {
                break (jbest, best);
            }
            let ui = u[i];
            let ci = cost.row(i);
            let base = best - ci[jbest] + ui + v[jbest];
            best = f64::INFINITY;
            let mut best_j = usize::MAX;
            for (k, &j) in todo.iter().enumerate() {
                let cand = base + ci[j] - ui - v[j];
                let mut d = dist[j];
                if cand < d {
                    d = cand;
                    dist[j] = d;
                    pred[j] = i;
                }
                if d < best - TIE_EPS || (d <= best + TIE_EPS && j < best_j) {
                    best = d;
                    best_j = j;
                    pos = k;
                }
            }
        };

        // dual update on the scanned tree keeps reduced costs nonnegative
        for &j in &scanned {
            if j != sink {
                let i = row_of[j];
                let shift = delta - dist[j];
                v[j] -= shift;
                u[i] += shift;
            }
        }
        u[start] += delta;

        // augment along predecessors
        let mut j = sink;
        loop {
            let i = pred[j];
            row_of[j] = i;
            let prev = std::mem::replace(&mut col_of[i], j);
            if i == start {
                break;
            }
            j = prev;
        }
    }

    let sigma = col_of;
    let total = permutation_cost(cost, &sigma);
    Ok(Assignment {
        sigma,
        total_sq_cost: total,
        method: AssignMethod::ExactLp,
    })
}

/// Exhaustive minimum over all permutations, for `n <= 9`. Ties keep the
/// lexicographically first permutation.
pub fn brute_force_assignment(cost: &CostMatrix) -> Result<Assignment> {
    let n = cost.n;
    if n > BRUTE_FORCE_MAX {
        return Err(Error::TooLarge { n, cap: BRUTE_FORCE_MAX });
    }
    if let Some(v) = cost.data.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("cost entry {v}")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = perm.clone();
    let mut best_cost = permutation_cost(cost, &perm);
    while next_permutation(&mut perm) {
        let c = permutation_cost(cost, &perm);
        if c < best_cost {
            best_cost = c;
            best.copy_from_slice(&perm);
        }
    }
    Ok(Assignment {
        sigma: best,
        total_sq_cost: best_cost,
        method: AssignMethod::BruteForce,
    })
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let Some(i) = (0..n - 1).rev().find(|&i| p[i] < p[i + 1]) else {
        return false;
    };
    let j = (i + 1..n).rev().find(|&j| p[j] > p[i]).expect("successor exists");
    p.swap(i, j);
    p[i + 1..].reverse();
    true
}

/// Local refinement of a random coupling. Each round draws `batch` source
/// indices, solves the exact assignment among their current partners and
/// splices the result back, so the total cost never increases.
pub fn assignment_minibatch_refine(
    xs: &SampleSet,
    ys: &SampleSet,
    batch: usize,
    rounds: usize,
    seed: u64,
) -> Result<Assignment> {
    minibatch_refine_traced(xs, ys, batch, rounds, seed).map(|(a, _)| a)
}

/// As [`assignment_minibatch_refine`], also returning the total cost after
/// each round (entry 0 is the initial random coupling).
pub fn minibatch_refine_traced(
    xs: &SampleSet,
    ys: &SampleSet,
    batch: usize,
    rounds: usize,
    seed: u64,
) -> Result<(Assignment, Vec<f64>)> {
    let n = xs.len();
    if ys.len() != n {
        return Err(Error::SizeMismatch { left: n, right: ys.len() });
    }
    if xs.dim() != ys.dim() {
        return Err(Error::SizeMismatch { left: xs.dim(), right: ys.dim() });
    }
    if batch < 2 || batch > n {
        return Err(Error::BatchOutOfRange { batch, n });
    }
    let dim = xs.dim();
    let sq = |i: usize, j: usize| -> f64 {
        xs.point(i).iter().zip(ys.point(j)).map(|(a, b)| (a - b) * (a - b)).sum()
    };
    let mut rng = rng_from_seed(seed);
    let mut sigma: Vec<usize> = (0..n).collect();
    sigma.shuffle(&mut rng);
    let total = |sigma: &[usize]| compensated_sum(sigma.iter().enumerate().map(|(i, &j)| sq(i, j)));
    let mut trace = Vec::with_capacity(rounds + 1);
    trace.push(total(&sigma));

    let mut xbuf = Vec::with_capacity(batch * dim);
    let mut ybuf = Vec::with_capacity(batch * dim);
    for _ in 0..rounds {
        let mut subset = index::sample(&mut rng, n, batch).into_vec();
        subset.sort_unstable();
        xbuf.clear();
        ybuf.clear();
        for &i in &subset {
            xbuf.extend_from_slice(xs.point(i));
            ybuf.extend_from_slice(ys.point(sigma[i]));
        }
        let local = CostMatrix::squared_euclidean_raw(&xbuf, &ybuf, dim);
        let current: f64 = compensated_sum((0..batch).map(|a| local.get(a, a)));
        let solved = assignment_exact(&local)?;
        if solved.total_sq_cost < current {
            let partners: Vec<usize> = subset.iter().map(|&i| sigma[i]).collect();
            for (a, &i) in subset.iter().enumerate() {
                sigma[i] = partners[solved.sigma[a]];
            }
        }
        trace.push(total(&sigma));
    }
    let total_sq_cost = *trace.last().expect("nonempty trace");
    Ok((
        Assignment {
            sigma,
            total_sq_cost,
            method: AssignMethod::MinibatchRefine,
        },
        trace,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_matrix(n: usize, seed: u64) -> CostMatrix {
        let mut rng = rng_from_seed(seed);
        CostMatrix::from_fn(n, |_, _| rng.random::<f64>())
    }

    #[test]
    fn diagonal_favoring_matrix() {
        let c = CostMatrix::from_fn(5, |i, j| if i == j { 0.0 } else { 1.0 });
        let a = assignment_exact(&c).unwrap();
        assert_eq!(a.sigma, vec![0, 1, 2, 3, 4]);
        assert_eq!(a.total_sq_cost, 0.0);
    }

    #[test]
    fn brute_force_small_cases() {
        let a = brute_force_assignment(&CostMatrix::from_rows(&[vec![7.0]]).unwrap()).unwrap();
        assert_eq!(a.sigma, vec![0]);
        let a = brute_force_assignment(&CostMatrix::from_rows(&[vec![0.0, 5.0], vec![5.0, 0.0]]).unwrap()).unwrap();
        assert_eq!((a.sigma.clone(), a.total_sq_cost), (vec![0, 1], 0.0));
        // 3! totals: (0,1,2)=6, (0,2,1)=11, (1,0,2)=5, (1,2,0)=9, (2,0,1)=7, (2,1,0)=8
        let c = CostMatrix::from_rows(&[vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]]).unwrap();
        let a = brute_force_assignment(&c).unwrap();
        assert_eq!(a.sigma, vec![1, 0, 2]);
        assert_eq!(a.total_sq_cost, 5.0);
        assert_eq!(assignment_exact(&c).unwrap().total_sq_cost, 5.0);
        assert!(brute_force_assignment(&CostMatrix::from_fn(10, |_, _| 0.0)).is_err());
    }

    #[test]
    fn exact_matches_brute_force() {
        for seed in 0..40 {
            let n = 2 + (seed as usize % 7);
            let c = random_matrix(n, seed);
            let e = assignment_exact(&c).unwrap();
            let b = brute_force_assignment(&c).unwrap();
            assert!(e.is_bijection());
            assert_eq!(e.total_sq_cost, b.total_sq_cost, "seed {seed}");
        }
    }

    #[test]
    fn ties_are_deterministic() {
        let c = CostMatrix::from_fn(6, |_, _| 1.0);
        let a = assignment_exact(&c).unwrap();
        assert_eq!(a, assignment_exact(&c).unwrap());
        assert!(a.is_bijection());
        assert_eq!(a.total_sq_cost, 6.0);
        let c = CostMatrix::from_fn(7, |i, j| ((i * 3 + j * 5) % 4) as f64);
        assert_eq!(
            assignment_exact(&c).unwrap().total_sq_cost,
            brute_force_assignment(&c).unwrap().total_sq_cost
        );
    }

    #[test]
    fn scaling_keeps_argmin() {
        let c = random_matrix(30, 11);
        let a = assignment_exact(&c).unwrap();
        let b = assignment_exact(&c.scaled(17.5)).unwrap();
        assert_eq!(a.sigma, b.sigma);
    }

    #[test]
    fn rejects_non_finite() {
        let c = CostMatrix::from_rows(&[vec![0.0, f64::NAN], vec![1.0, 0.0]]).unwrap();
        assert!(assignment_exact(&c).is_err());
    }

    #[test]
    fn next_permutation_enumerates_all() {
        let mut p = vec![0, 1, 2, 3];
        let mut count = 1;
        while next_permutation(&mut p) {
            count += 1;
        }
        assert_eq!(count, 24);
    }
}
