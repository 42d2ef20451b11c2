use std::io::Write;
use std::path::Path;

use rand::seq::index;
use rayon::prelude::*;

use super::assignment::{assignment_exact, assignment_minibatch_refine, AssignMethod, Assignment, CostMatrix};
use super::compensated_sum;
use crate::error::{Error, Result};
use crate::measures::SampleSet;
use crate::rng::SeedStream;

#[derive(Debug, Clone, PartialEq)]
pub struct W2Result {
    pub value: f64,
    /// The realizing coupling; `None` for subsample averages, which have no
    /// single coupling of the full clouds.
    pub assignment: Option<Assignment>,
    pub exact: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum W2Method {
    ExactLp,
    MinibatchRefine { batch: usize, rounds: usize, seed: u64 },
    SubsampleAvg { k: usize, m: usize, seed: u64 },
}

impl W2Method {
    pub fn subsample_default(seed: u64) -> Self {
        W2Method::SubsampleAvg { k: 10, m: 1024, seed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct W2Options {
    /// Largest N accepted by the dense exact solver.
    pub exact_cap: usize,
}

impl Default for W2Options {
    fn default() -> Self {
        Self { exact_cap: 4096 }
    }
}

fn check_pair(xs: &SampleSet, ys: &SampleSet) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::SizeMismatch { left: xs.len(), right: ys.len() });
    }
    if xs.dim() != ys.dim() {
        return Err(Error::SizeMismatch { left: xs.dim(), right: ys.dim() });
    }
    Ok(())
}

fn sorted_order(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]).then(a.cmp(&b)));
    idx
}

/// Exact W2 between two equal-size 1D clouds by pairing order statistics.
pub fn w2_1d(xs: &SampleSet, ys: &SampleSet) -> Result<W2Result> {
    check_pair(xs, ys)?;
    if xs.dim() != 1 {
        return Err(Error::invalid(format!("w2_1d needs d = 1, got d = {}", xs.dim())));
    }
    let (a, b) = (xs.points(), ys.points());
    let ia = sorted_order(a);
    let ib = sorted_order(b);
    let mut sigma = vec![0usize; a.len()];
    for (&i, &j) in ia.iter().zip(&ib) {
        sigma[i] = j;
    }
    let total = compensated_sum(sigma.iter().enumerate().map(|(i, &j)| (a[i] - b[j]).powi(2)));
    Ok(W2Result {
        value: (total / a.len() as f64).sqrt(),
        assignment: Some(Assignment {
            sigma,
            total_sq_cost: total,
            method: AssignMethod::Sorted1d,
        }),
        exact: true,
    })
}

/// W2 value only, for 1D slices of equal length. Sorts copies.
pub fn w2_sorted(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::SizeMismatch { left: a.len(), right: b.len() });
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let total = compensated_sum(a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)));
    Ok((total / a.len() as f64).sqrt())
}

fn exact_lp(xs: &SampleSet, ys: &SampleSet, cap: usize) -> Result<W2Result> {
    if xs.len() > cap {
        return Err(Error::TooLarge { n: xs.len(), cap });
    }
    let cost = CostMatrix::squared_euclidean(xs, ys)?;
    let a = assignment_exact(&cost)?;
    Ok(W2Result {
        value: (a.total_sq_cost.max(0.0) / xs.len() as f64).sqrt(),
        assignment: Some(a),
        exact: true,
    })
}

/// W2 between point clouds of any dimension.
pub fn w2_point_clouds(xs: &SampleSet, ys: &SampleSet, method: W2Method, opts: W2Options) -> Result<W2Result> {
    match method {
        W2Method::ExactLp => {
            check_pair(xs, ys)?;
            exact_lp(xs, ys, opts.exact_cap)
        }
        W2Method::MinibatchRefine { batch, rounds, seed } => {
            let a = assignment_minibatch_refine(xs, ys, batch, rounds, seed)?;
            Ok(W2Result {
                value: (a.total_sq_cost.max(0.0) / xs.len() as f64).sqrt(),
                exact: batch == xs.len() && rounds >= 1,
                assignment: Some(a),
            })
        }
        W2Method::SubsampleAvg { k, m, seed } => {
            if xs.dim() != ys.dim() {
                return Err(Error::SizeMismatch { left: xs.dim(), right: ys.dim() });
            }
            let cap = xs.len().min(ys.len());
            if k == 0 || m == 0 || m > cap {
                return Err(Error::invalid(format!("subsample_avg needs k >= 1 and 1 <= m <= {cap}, got k = {k}, m = {m}")));
            }
            if m > opts.exact_cap {
                return Err(Error::TooLarge { n: m, cap: opts.exact_cap });
            }
            let stream = SeedStream::new(seed);
            let values: Vec<f64> = (0..k)
                .into_par_iter()
                .map(|r| {
                    let mut rng = stream.index(r as u64).rng();
                    let mut ix = index::sample(&mut rng, xs.len(), m).into_vec();
                    let mut iy = index::sample(&mut rng, ys.len(), m).into_vec();
                    ix.sort_unstable();
                    iy.sort_unstable();
                    let sx = xs.select(&ix)?;
                    let sy = ys.select(&iy)?;
                    if xs.dim() == 1 {
                        w2_sorted(sx.points(), sy.points())
                    } else {
                        exact_lp(&sx, &sy, opts.exact_cap).map(|r| r.value)
                    }
                })
                .collect::<Result<_>>()?;
            Ok(W2Result {
                value: values.iter().sum::<f64>() / k as f64,
                assignment: None,
                exact: false,
            })
        }
    }
}

/// Writes `i,sigma_i,sq_cost_i` rows.
pub fn write_assignment_csv(path: &Path, a: &Assignment, xs: &SampleSet, ys: &SampleSet) -> Result<()> {
    check_pair(xs, ys)?;
    if a.len() != xs.len() {
        return Err(Error::SizeMismatch { left: a.len(), right: xs.len() });
    }
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "i,sigma_i,sq_cost_i")?;
    for (i, &j) in a.sigma.iter().enumerate() {
        let c: f64 = xs.point(i).iter().zip(ys.point(j)).map(|(p, q)| (p - q).powi(2)).sum();
        writeln!(w, "{i},{j},{c:e}")?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::brute_force_assignment;

    fn cloud(v: &[f64], dim: usize) -> SampleSet {
        SampleSet::new(v.to_vec(), dim, "test", 0).unwrap()
    }

    #[test]
    fn one_dimensional_examples() {
        let a = cloud(&[0.1, 0.7, 0.4], 1);
        assert_eq!(w2_1d(&a, &a).unwrap().value, 0.0);
        assert_eq!(w2_1d(&cloud(&[0.0, 1.0], 1), &cloud(&[1.0, 0.0], 1)).unwrap().value, 0.0);
        let r = w2_1d(&cloud(&[0.0, 0.0], 1), &cloud(&[1.0, 3.0], 1)).unwrap();
        assert!((r.value - 5f64.sqrt()).abs() < 1e-15);
        assert!(w2_1d(&cloud(&[0.0], 1), &cloud(&[0.0, 1.0], 1)).is_err());
    }

    #[test]
    fn singleton_distance() {
        let r = w2_point_clouds(&cloud(&[0.0, 0.0], 2), &cloud(&[3.0, 4.0], 2), W2Method::ExactLp, W2Options::default()).unwrap();
        assert_eq!(r.value, 5.0);
    }

    #[test]
    fn planar_clouds_match_brute_force() {
        use rand::Rng;
        let mut rng = crate::rng::rng_from_seed(5);
        let xs = cloud(&(0..16).map(|_| rng.random::<f64>()).collect::<Vec<_>>(), 2);
        let ys = cloud(&(0..16).map(|_| rng.random::<f64>()).collect::<Vec<_>>(), 2);
        let r = w2_point_clouds(&xs, &ys, W2Method::ExactLp, W2Options::default()).unwrap();
        let b = brute_force_assignment(&CostMatrix::squared_euclidean(&xs, &ys).unwrap()).unwrap();
        assert!((r.value - (b.total_sq_cost / 8.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn cap_is_enforced() {
        let xs = cloud(&[0.0; 10], 1);
        let err = w2_point_clouds(&xs, &xs, W2Method::ExactLp, W2Options { exact_cap: 5 });
        assert!(matches!(err, Err(Error::TooLarge { n: 10, cap: 5 })));
    }

    #[test]
    fn subsample_average_is_approximate_and_deterministic() {
        let xs = cloud(&(0..200).map(|i| i as f64 / 200.0).collect::<Vec<_>>(), 1);
        let ys = cloud(&(0..200).map(|i| 0.5 + i as f64 / 200.0).collect::<Vec<_>>(), 1);
        let m = W2Method::SubsampleAvg { k: 4, m: 50, seed: 3 };
        let a = w2_point_clouds(&xs, &ys, m, W2Options::default()).unwrap();
        assert!(!a.exact && a.assignment.is_none());
        assert_eq!(a, w2_point_clouds(&xs, &ys, m, W2Options::default()).unwrap());
        assert!((a.value - 0.5).abs() < 0.1);
        let bad = W2Method::SubsampleAvg { k: 1, m: 500, seed: 0 };
        assert!(w2_point_clouds(&xs, &ys, bad, W2Options::default()).is_err());
    }

    #[test]
    fn assignment_csv_layout() {
        let xs = cloud(&[0.0, 1.0], 1);
        let ys = cloud(&[1.0, 3.0], 1);
        let r = w2_1d(&xs, &ys).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        write_assignment_csv(&p, r.assignment.as_ref().unwrap(), &xs, &ys).unwrap();
        let text = std::fs::read_to_string(p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "i,sigma_i,sq_cost_i");
        assert_eq!(lines[1], "0,0,1e0");
        assert_eq!(lines[2], "1,1,4e0");
    }
}
