//! The augmented-Lagrangian solver on a small problem of its own:
//! the point of the unit disk closest to (2, 1), with x held in [0, 0.5].

use gaitopt::solver::{solve, Nlp, SolverOptions};

struct Disk;

impl Nlp for Disk {
    fn n_variables(&self) -> usize {
        2
    }
    fn n_constraints(&self) -> usize {
        1
    }
    fn variable_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![0.0, f64::NEG_INFINITY], vec![0.5, f64::INFINITY])
    }
    fn constraint_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![f64::NEG_INFINITY], vec![1.0])
    }
    fn cost(&self, w: &[f64]) -> f64 {
        (w[0] - 2.0).powi(2) + (w[1] - 1.0).powi(2)
    }
    fn cost_gradient(&self, w: &[f64], grad: &mut [f64]) {
        grad[0] = 2.0 * (w[0] - 2.0);
        grad[1] = 2.0 * (w[1] - 1.0);
    }
    fn constraints(&self, w: &[f64], g: &mut [f64]) {
        g[0] = w[0] * w[0] + w[1] * w[1];
    }
    fn jacobian_structure(&self) -> (Vec<usize>, Vec<usize>) {
        (vec![0, 0], vec![0, 1])
    }
    fn jacobian_values(&self, w: &[f64], values: &mut [f64]) {
        values[0] = 2.0 * w[0];
        values[1] = 2.0 * w[1];
    }
}

fn main() -> gaitopt::Result<()> {
    let sol = solve(&Disk, &[0.0, 0.0], &SolverOptions::default())?;
    let expected = (0.5, 0.75f64.sqrt());
    println!("status    {}", sol.status);
    println!("solution  ({:.6}, {:.6})", sol.w[0], sol.w[1]);
    println!("expected  ({:.6}, {:.6})", expected.0, expected.1);
    println!("iterations {} ({} outer)", sol.iterations, sol.outer_iterations);
    Ok(())
}
