//! Empirical Wasserstein-2 distances and optimal assignments between
//! equal-size point clouds.

mod assignment;
mod w2;

pub use assignment::{
    assignment_exact, assignment_minibatch_refine, brute_force_assignment, minibatch_refine_traced, AssignMethod, Assignment,
    CostMatrix, BRUTE_FORCE_MAX, TIE_EPS,
};
pub use w2::{w2_1d, w2_point_clouds, w2_sorted, write_assignment_csv, W2Method, W2Options, W2Result};

/// Neumaier compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
