//! Solve loop that tightens range-of-motion enforcement where needed.

use super::problem::{GaitProblem, ProblemConfig};
use crate::schedule::FootId;
use crate::solver::{solve, Solution, SolverOptions, Status};
use crate::Result;

/// Rounds of refinement before the last solution is returned as is.
pub const MAX_REFINEMENTS: usize = 8;

#[derive(Debug, Clone)]
pub struct GaitSolution {
    /// The final, possibly refined, problem the solution belongs to.
    pub problem: GaitProblem,
    pub solution: Solution,
    /// Number of re-solves after the first.
    pub refinements: usize,
    /// Solver iterations summed over all solves.
    pub total_iterations: usize,
}

/// Solves the gait problem, then repeatedly adds continuous range-of-motion
/// bounds on the polynomials where a stance foot leaves its range between
/// junctions, warm-starting from the previous solution.
pub fn solve_gait(config: &ProblemConfig, opts: &SolverOptions) -> Result<GaitSolution> {
    let mut refine: Vec<(usize, FootId)> = Vec::new();
    let mut problem = GaitProblem::assemble(config.clone())?;
    let mut w = problem.initial_guess();
    let mut total_iterations = 0;
    let mut refinements = 0;
    loop {
        let solution = solve(&problem, &w, opts)?;
        total_iterations += solution.iterations;
        if solution.status != Status::Optimal || refinements == MAX_REFINEMENTS {
            return Ok(GaitSolution {
                problem,
                solution,
                refinements,
                total_iterations,
            });
        }
        let fresh: Vec<_> = problem
            .rom_control_excess(&solution.w)?
            .into_iter()
            .filter(|&(_, _, e)| e > opts.feasibility_tol)
            .map(|(k, f, _)| (k, f))
            .filter(|pair| !refine.contains(pair))
            .collect();
        if fresh.is_empty() {
            return Ok(GaitSolution {
                problem,
                solution,
                refinements,
                total_iterations,
            });
        }
        if opts.verbose {
            eprintln!("refining range of motion on {} polynomial(s)", fresh.len());
        }
        refine.extend(fresh);
        problem = GaitProblem::assemble_refined(config.clone(), &refine)?;
        w = solution.w;
        refinements += 1;
    }
}
