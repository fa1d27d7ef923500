//! Independent certification of per-carrier optima.
//!
//! For one carrier stage, the share matrix `phi` (one simplex column per
//! resource block) determines user rates `r_i = sum_j phi_ij * H_ij`, and
//! the stage objective is
//!
//! ```text
//! L(phi) = sum_i ln U_i(c_i + r_i)
//! ```
//!
//! where `c_i` is the rate a user already carries from earlier stages. With
//! strictly concave `ln U_i`, maximizing `L` over the product of simplices
//! is a convex program. This module solves it by projected gradient ascent
//! with a backtracking (Armijo) line search, entirely separate from the
//! online scheduler, so the two can certify each other:
//!
//! * [`solve_stage_optimum`] — the solver, stopping at a KKT residual.
//! * [`kkt_residual`] — how far a share matrix is from stationarity: on
//!   every block, each user holding share must price the block at the
//!   block's best marginal value `max_i U'_i H_ij / U_i`.
//! * [`grid_search_optimum`] — an exhaustive refining lattice search for
//!   tiny problems, used to vet the solver itself.

use thiserror::Error;

use crate::utility::Utility;

/// Share below which a user does not count as actively holding a resource
/// block when the KKT residual is evaluated.
pub const ACTIVE_SHARE_MIN: f64 = 1e-6;

/// Feasibility slack allowed on simplex columns passed to [`objective_l`].
pub const SIMPLEX_TOL: f64 = 1e-9;

const ARMIJO_SIGMA: f64 = 1e-4;
const MAX_ITERATIONS: u64 = 500_000;
const MAX_LINE_SEARCH: u32 = 90;
/// Consecutive iterations allowed in the terminal phase, where objective
/// improvements are below floating-point resolution and steps are accepted
/// on fp-level ties while the iterate keeps sliding toward stationarity.
const STALL_BUDGET: u32 = 500;

/// Errors raised by objective evaluation and the stage solver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("share matrix violates the per-block simplex: column {rb} sums to {sum}")]
    SimplexViolation { rb: usize, sum: f64 },
    #[error("malformed stage problem: {0}")]
    BadProblem(String),
    #[error(
        "projected gradient ascent stalled at KKT residual {best_residual:e} \
         (target {tol:e}) after {iterations} iterations"
    )]
    DidNotConverge {
        tol: f64,
        iterations: u64,
        best_residual: f64,
    },
}

/// One carrier's allocation problem: per-user/per-block rates, utilities,
/// and rates carried in from earlier stages.
#[derive(Debug, Clone, PartialEq)]
pub struct StageProblem {
    /// `rate_table[i][j]` is user `i`'s rate on block `j` if given the
    /// whole block.
    pub rate_table: Vec<Vec<f64>>,
    /// Per-user utility, aligned with the rate-table rows.
    pub utilities: Vec<Utility>,
    /// Per-user rate already granted by earlier stages.
    pub carried: Vec<f64>,
}

impl StageProblem {
    /// Builds a problem after checking shapes and signs.
    pub fn new(
        rate_table: Vec<Vec<f64>>,
        utilities: Vec<Utility>,
        carried: Vec<f64>,
    ) -> Result<Self, OracleError> {
        let problem = StageProblem {
            rate_table,
            utilities,
            carried,
        };
        problem.validate()?;
        Ok(problem)
    }

    /// Checks internal consistency; [`new`](Self::new) runs this for you.
    pub fn validate(&self) -> Result<(), OracleError> {
        let n_users = self.rate_table.len();
        if n_users == 0 {
            return Err(OracleError::BadProblem("no users".into()));
        }
        let n_rbs = self.rate_table[0].len();
        if n_rbs == 0 {
            return Err(OracleError::BadProblem("no resource blocks".into()));
        }
        if self.utilities.len() != n_users || self.carried.len() != n_users {
            return Err(OracleError::BadProblem(format!(
                "mismatched lengths: {} rate rows, {} utilities, {} carried rates",
                n_users,
                self.utilities.len(),
                self.carried.len()
            )));
        }
        for (i, row) in self.rate_table.iter().enumerate() {
            if row.len() != n_rbs {
                return Err(OracleError::BadProblem(format!(
                    "rate row {i} has {} entries, expected {n_rbs}",
                    row.len()
                )));
            }
            if row.iter().any(|h| !h.is_finite() || *h < 0.0) {
                return Err(OracleError::BadProblem(format!(
                    "rate row {i} contains a negative or non-finite entry"
                )));
            }
        }
        if self.carried.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(OracleError::BadProblem(
                "carried rates must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }

    pub fn n_users(&self) -> usize {
        self.rate_table.len()
    }

    pub fn n_rbs(&self) -> usize {
        self.rate_table.first().map_or(0, Vec::len)
    }

    /// `r_i = sum_j phi_ij * H_ij` for every user.
    pub fn rates(&self, phi: &[Vec<f64>]) -> Vec<f64> {
        self.rate_table
            .iter()
            .zip(phi)
            .map(|(row, shares)| {
                row.iter()
                    .zip(shares)
                    .map(|(h, p)| h * p.max(0.0))
                    .sum()
            })
            .collect()
    }
}

/// Objective `L(phi)` at arbitrary nonnegative shares, without feasibility
/// checks; `-inf` where some user's total rate and carried rate are both
/// zero. Useful for finite-difference probes and exhaustive searches; the
/// feasibility-checked entry point is [`objective_l`].
pub fn objective_at(phi: &[Vec<f64>], problem: &StageProblem) -> f64 {
    assert_eq!(phi.len(), problem.n_users(), "share matrix has wrong user count");
    problem
        .rates(phi)
        .iter()
        .zip(&problem.utilities)
        .zip(&problem.carried)
        .map(|((r, u), c)| u.log_value(c + r))
        .sum()
}

/// Objective `L(phi)` after verifying that every column is a probability
/// simplex within [`SIMPLEX_TOL`].
pub fn objective_l(phi: &[Vec<f64>], problem: &StageProblem) -> Result<f64, OracleError> {
    assert_eq!(phi.len(), problem.n_users(), "share matrix has wrong user count");
    for j in 0..problem.n_rbs() {
        let mut sum = 0.0;
        for row in phi {
            let p = row[j];
            if p < -SIMPLEX_TOL {
                return Err(OracleError::SimplexViolation { rb: j, sum: p });
            }
            sum += p;
        }
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(OracleError::SimplexViolation { rb: j, sum });
        }
    }
    Ok(objective_at(phi, problem))
}

/// Gradient of the objective: `dL/dphi_ij = U'_i(x_i) H_ij / U_i(x_i)` with
/// `x_i = c_i + r_i`. Entries can be `+inf` where a user's utility is zero.
pub fn stage_gradient(phi: &[Vec<f64>], problem: &StageProblem) -> Vec<Vec<f64>> {
    let rates = problem.rates(phi);
    let mut grad = Vec::with_capacity(problem.n_users());
    for i in 0..problem.n_users() {
        let ratio = problem.utilities[i].rate_ratio(problem.carried[i] + rates[i]);
        grad.push(problem.rate_table[i].iter().map(|h| ratio * h).collect());
    }
    grad
}

/// Stationarity gap of a feasible share matrix: the worst, over blocks, of
/// how far an actively held share's marginal value sits below the block's
/// best marginal value. Zero (to tolerance) exactly at an optimum.
pub fn kkt_residual(phi: &[Vec<f64>], problem: &StageProblem) -> f64 {
    let grad = stage_gradient(phi, problem);
    kkt_residual_with_gradient(phi, &grad, problem.n_rbs())
}

fn kkt_residual_with_gradient(phi: &[Vec<f64>], grad: &[Vec<f64>], n_rbs: usize) -> f64 {
    let mut residual: f64 = 0.0;
    for j in 0..n_rbs {
        let mut best = f64::NEG_INFINITY;
        for row in grad {
            best = best.max(row[j]);
        }
        for (shares, row) in phi.iter().zip(grad) {
            if shares[j] > ACTIVE_SHARE_MIN {
                residual = residual.max(best - row[j]);
            }
        }
    }
    residual
}

/// Euclidean projection of `v` onto the probability simplex, by the
/// sort-and-threshold rule: with entries sorted descending, find the
/// largest prefix whose running mean keeps every kept entry positive after
/// shifting, then clip.
fn project_to_simplex(v: &[f64], out: &mut [f64]) {
    let mut sorted: Vec<f64> = v.to_vec();
    sorted.sort_unstable_by(|a, b| b.partial_cmp(a).expect("simplex projection saw NaN"));
    let mut prefix = 0.0;
    let mut tau = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        prefix += u;
        let candidate = (prefix - 1.0) / (k + 1) as f64;
        if u - candidate > 0.0 {
            tau = candidate;
        }
    }
    for (o, &x) in out.iter_mut().zip(v) {
        *o = (x - tau).max(0.0);
    }
}

/// Result of a converged stage solve.
#[derive(Debug, Clone, PartialEq)]
pub struct StageSolution {
    /// Optimal share matrix; rows of excluded users are all zero.
    pub phi: Vec<Vec<f64>>,
    /// Objective at the solution, excluding any excluded user.
    pub objective: f64,
    /// Stationarity gap at the solution.
    pub kkt_residual: f64,
    /// Projected-gradient iterations spent.
    pub iterations: u64,
    /// Row indices of users with no usable block and no carried rate; their
    /// log-utility is `-inf` everywhere, so they are left out of the solve.
    pub excluded_users: Vec<usize>,
}

/// Maximizes the stage objective by projected gradient ascent from the
/// interior point `phi_ij = 1/n`, with Barzilai-Borwein step seeding and an
/// Armijo backtracking line search along the projection arc. Stops when the
/// KKT residual drops to `kkt_tol`.
///
/// Identical rate-table columns (the rule rather than the exception under
/// equal channel gains) make the optimum non-unique and starve first-order
/// steps. The objective depends on shares only through per-user totals, so
/// such columns are first merged into a single column with
/// multiplicity-scaled rates; the merged per-column share is replicated
/// across the original columns afterwards, which preserves the objective
/// exactly and can only shrink the per-column stationarity gap.
pub fn solve_stage_optimum(
    problem: &StageProblem,
    kkt_tol: f64,
) -> Result<StageSolution, OracleError> {
    problem.validate()?;
    let n_users = problem.n_users();
    let n_rbs = problem.n_rbs();

    // Group columns that are bitwise identical for every user.
    let mut representative: Vec<usize> = Vec::new();
    let mut group_of = vec![0usize; n_rbs];
    let mut multiplicity: Vec<f64> = Vec::new();
    for j in 0..n_rbs {
        match representative
            .iter()
            .position(|&j0| problem.rate_table.iter().all(|row| row[j] == row[j0]))
        {
            Some(g) => {
                group_of[j] = g;
                multiplicity[g] += 1.0;
            }
            None => {
                group_of[j] = representative.len();
                representative.push(j);
                multiplicity.push(1.0);
            }
        }
    }
    if representative.len() == n_rbs {
        return if n_rbs == 1 {
            solve_single_column(problem, kkt_tol)
        } else {
            solve_with_distinct_columns(problem, kkt_tol)
        };
    }

    let reduced_rates: Vec<Vec<f64>> = problem
        .rate_table
        .iter()
        .map(|row| {
            representative
                .iter()
                .zip(&multiplicity)
                .map(|(&j0, m)| row[j0] * m)
                .collect()
        })
        .collect();
    let reduced = StageProblem::new(
        reduced_rates,
        problem.utilities.clone(),
        problem.carried.clone(),
    )?;
    let merged = if reduced.n_rbs() == 1 {
        solve_single_column(&reduced, kkt_tol)?
    } else {
        solve_with_distinct_columns(&reduced, kkt_tol)?
    };

    let mut phi = vec![vec![0.0; n_rbs]; n_users];
    for j in 0..n_rbs {
        for i in 0..n_users {
            phi[i][j] = merged.phi[i][group_of[j]];
        }
    }
    // Re-certify on the original problem rather than trusting the scaled one.
    let rates = problem.rates(&phi);
    let objective = (0..n_users)
        .filter(|i| !merged.excluded_users.contains(i))
        .map(|i| problem.utilities[i].log_value(problem.carried[i] + rates[i]))
        .sum();
    Ok(StageSolution {
        kkt_residual: kkt_residual(&phi, problem),
        phi,
        objective,
        iterations: merged.iterations,
        excluded_users: merged.excluded_users,
    })
}

/// Exact solver for a stage whose blocks have collapsed to one column.
/// At the optimum every user holding a positive share sees the same
/// marginal value `rate_ratio(c_i + h_i s_i) * h_i`, and users at zero
/// share sit at or below it. Each marginal is strictly decreasing in the
/// share (the log-utilities are strictly concave), so the shares are an
/// explicit function of the common marginal value, which in turn is found
/// by bisection on the total-share constraint — a water-filling split that
/// is immune to the degeneracy that starves first-order ascent here.
fn solve_single_column(
    problem: &StageProblem,
    kkt_tol: f64,
) -> Result<StageSolution, OracleError> {
    problem.validate()?;
    if !(kkt_tol > 0.0) {
        return Err(OracleError::BadProblem(format!(
            "kkt_tol must be positive, got {kkt_tol}"
        )));
    }
    let n_users = problem.n_users();
    debug_assert_eq!(problem.n_rbs(), 1);

    let usable: Vec<bool> = problem
        .rate_table
        .iter()
        .map(|row| row.iter().any(|h| *h > 0.0))
        .collect();
    let active: Vec<usize> = (0..n_users).filter(|&i| usable[i]).collect();
    let excluded_users: Vec<usize> = (0..n_users)
        .filter(|&i| !usable[i] && problem.carried[i] == 0.0)
        .collect();
    let constant_rows: f64 = (0..n_users)
        .filter(|&i| !usable[i] && problem.carried[i] > 0.0)
        .map(|i| problem.utilities[i].log_value(problem.carried[i]))
        .sum();

    let mut phi = vec![vec![0.0; 1]; n_users];
    if active.is_empty() {
        for row in &mut phi {
            row[0] = 1.0 / n_users as f64;
        }
        return Ok(StageSolution {
            kkt_residual: kkt_residual(&phi, problem),
            phi,
            objective: constant_rows,
            iterations: 0,
            excluded_users,
        });
    }

    let marginal = |i: usize, s: f64| -> f64 {
        let h = problem.rate_table[i][0];
        problem.utilities[i].rate_ratio(problem.carried[i] + h * s) * h
    };
    // Invert user i's marginal at the trial value: clip to the simplex box,
    // otherwise bisect the share. 120 halvings take [0, 1] far below f64
    // spacing, so the loop bound is the terminator.
    let share_at = |i: usize, lambda: f64| -> f64 {
        if marginal(i, 1.0) >= lambda {
            return 1.0;
        }
        if marginal(i, 0.0) <= lambda {
            return 0.0;
        }
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..120 {
            let mid = 0.5 * (lo + hi);
            if marginal(i, mid) > lambda {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let total_at = |lambda: f64| -> f64 { active.iter().map(|&i| share_at(i, lambda)).sum() };

    // Bracket the common marginal value. At the smallest full-share
    // marginal every active user demands the whole column; demand shrinks
    // to zero as the value grows, so doubling finds the other side.
    let mut iterations: u64 = 0;
    let lambda_lo = active
        .iter()
        .map(|&i| marginal(i, 1.0))
        .fold(f64::INFINITY, f64::min);
    let mut lambda_hi = lambda_lo.max(1.0);
    while total_at(lambda_hi) > 1.0 {
        lambda_hi *= 2.0;
        iterations += 1;
        if !lambda_hi.is_finite() {
            return Err(OracleError::DidNotConverge {
                tol: kkt_tol,
                iterations,
                best_residual: f64::INFINITY,
            });
        }
    }
    let (mut lo, mut hi) = (lambda_lo, lambda_hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total_at(mid) >= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }

    // Shares at the demand-heavy end sum to 1 + O(eps); snap them onto the
    // simplex exactly, touching only the rows that took part.
    let raw: Vec<f64> = active.iter().map(|&i| share_at(i, lo)).collect();
    let mut snapped = vec![0.0; raw.len()];
    project_to_simplex(&raw, &mut snapped);
    for (&i, &s) in active.iter().zip(&snapped) {
        phi[i][0] = s;
    }

    let rates = problem.rates(&phi);
    let objective = active
        .iter()
        .map(|&i| problem.utilities[i].log_value(problem.carried[i] + rates[i]))
        .sum::<f64>()
        + constant_rows;
    let residual = kkt_residual(&phi, problem);
    if residual > kkt_tol {
        return Err(OracleError::DidNotConverge {
            tol: kkt_tol,
            iterations,
            best_residual: residual,
        });
    }
    Ok(StageSolution {
        phi,
        objective,
        kkt_residual: residual,
        iterations,
        excluded_users,
    })
}

fn solve_with_distinct_columns(
    problem: &StageProblem,
    kkt_tol: f64,
) -> Result<StageSolution, OracleError> {
    problem.validate()?;
    if !(kkt_tol > 0.0) {
        return Err(OracleError::BadProblem(format!(
            "kkt_tol must be positive, got {kkt_tol}"
        )));
    }
    let n_users = problem.n_users();
    let n_rbs = problem.n_rbs();

    // Users with an all-zero rate row cannot gain from any share. With a
    // carried rate they contribute a constant; with none their log-utility
    // is -inf everywhere and they are excluded and reported.
    let usable: Vec<bool> = problem
        .rate_table
        .iter()
        .map(|row| row.iter().any(|h| *h > 0.0))
        .collect();
    let active: Vec<usize> = (0..n_users).filter(|&i| usable[i]).collect();
    let excluded_users: Vec<usize> = (0..n_users)
        .filter(|&i| !usable[i] && problem.carried[i] == 0.0)
        .collect();
    let constant_rows: f64 = (0..n_users)
        .filter(|&i| !usable[i] && problem.carried[i] > 0.0)
        .map(|i| problem.utilities[i].log_value(problem.carried[i]))
        .sum();

    let mut phi = vec![vec![0.0; n_rbs]; n_users];
    if active.is_empty() {
        // Nothing competes for blocks; keep the uniform feasible point.
        for row in &mut phi {
            row.iter_mut().for_each(|p| *p = 1.0 / n_users as f64);
        }
        return Ok(StageSolution {
            kkt_residual: kkt_residual(&phi, problem),
            phi,
            objective: constant_rows,
            iterations: 0,
            excluded_users,
        });
    }
    for &i in &active {
        phi[i].iter_mut().for_each(|p| *p = 1.0 / active.len() as f64);
    }

    // Objective over rows that take part in the solve.
    let live_objective = |phi: &[Vec<f64>]| -> f64 {
        let rates = problem.rates(phi);
        active
            .iter()
            .map(|&i| problem.utilities[i].log_value(problem.carried[i] + rates[i]))
            .sum()
    };

    let mut l_current = live_objective(&phi);
    let mut prev_phi: Option<Vec<Vec<f64>>> = None;
    let mut prev_grad: Option<Vec<Vec<f64>>> = None;
    let mut alpha = 1.0;
    let mut best_residual = f64::INFINITY;
    let mut stalled_iterations: u32 = 0;
    let mut candidate = vec![vec![0.0; n_rbs]; n_users];
    let mut col = vec![0.0; active.len()];
    let mut col_proj = vec![0.0; active.len()];

    for iteration in 1..=MAX_ITERATIONS {
        let grad = stage_gradient(&phi, problem);
        let residual = kkt_residual_with_gradient(&phi, &grad, n_rbs);
        best_residual = best_residual.min(residual);
        if residual <= kkt_tol {
            let objective = live_objective(&phi) + constant_rows;
            return Ok(StageSolution {
                phi,
                objective,
                kkt_residual: residual,
                iterations: iteration - 1,
                excluded_users,
            });
        }

        // Barzilai-Borwein step seed; fall back to a gradient-scaled guess.
        alpha = match (&prev_phi, &prev_grad) {
            (Some(pp), Some(pg)) => {
                let mut ss = 0.0;
                let mut sy = 0.0;
                for &i in &active {
                    for j in 0..n_rbs {
                        let s = phi[i][j] - pp[i][j];
                        let y = grad[i][j] - pg[i][j];
                        ss += s * s;
                        sy += s * y;
                    }
                }
                if sy < 0.0 && ss > 0.0 {
                    (ss / -sy).clamp(1e-14, 1e12)
                } else {
                    (alpha * 4.0).clamp(1e-14, 1e12)
                }
            }
            _ => {
                let g_max = active
                    .iter()
                    .flat_map(|&i| grad[i].iter())
                    .fold(0.0f64, |m, g| m.max(g.abs()));
                1.0 / g_max.max(1e-12)
            }
        };

        let alpha_seed = alpha;
        let mut accepted = false;
        for _ in 0..MAX_LINE_SEARCH {
            // Project phi + alpha * grad column by column over active rows.
            for j in 0..n_rbs {
                for (slot, &i) in col.iter_mut().zip(&active) {
                    *slot = phi[i][j] + alpha * grad[i][j];
                }
                project_to_simplex(&col, &mut col_proj);
                for (&value, &i) in col_proj.iter().zip(&active) {
                    candidate[i][j] = value;
                }
            }
            let mut gdot = 0.0;
            let mut moved = false;
            for &i in &active {
                for j in 0..n_rbs {
                    let d = candidate[i][j] - phi[i][j];
                    if d != 0.0 {
                        moved = true;
                    }
                    gdot += grad[i][j] * d;
                }
            }
            if !moved {
                // The arc did not leave the current point; widen the step.
                alpha *= 8.0;
                if alpha > 1e14 {
                    break;
                }
                continue;
            }
            let l_candidate = live_objective(&candidate);
            if l_candidate.is_finite() && l_candidate >= l_current + ARMIJO_SIGMA * gdot {
                l_current = l_candidate;
                accepted = true;
                stalled_iterations = 0;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            // Terminal phase: sufficient increase is below floating-point
            // resolution of the objective, but the projection arc can still
            // carry the iterate toward stationarity. Accept the largest step
            // whose objective holds to an fp-level tie, within a budget of
            // consecutive tie-accepted iterations.
            let slack = 1e-12 * (1.0 + l_current.abs());
            alpha = alpha_seed;
            for _ in 0..MAX_LINE_SEARCH {
                for j in 0..n_rbs {
                    for (slot, &i) in col.iter_mut().zip(&active) {
                        *slot = phi[i][j] + alpha * grad[i][j];
                    }
                    project_to_simplex(&col, &mut col_proj);
                    for (&value, &i) in col_proj.iter().zip(&active) {
                        candidate[i][j] = value;
                    }
                }
                let moved = active
                    .iter()
                    .any(|&i| (0..n_rbs).any(|j| candidate[i][j] != phi[i][j]));
                if moved {
                    let l_candidate = live_objective(&candidate);
                    if l_candidate.is_finite() && l_candidate >= l_current - slack {
                        // Keep the higher watermark so slack never compounds.
                        l_current = l_current.max(l_candidate);
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            stalled_iterations += 1;
            if !accepted || stalled_iterations > STALL_BUDGET {
                return Err(OracleError::DidNotConverge {
                    tol: kkt_tol,
                    iterations: iteration,
                    best_residual,
                });
            }
        }
        // Rotate buffers: the accepted candidate becomes the current point,
        // and the pre-step point and gradient seed the next BB step.
        let old_phi = std::mem::replace(
            &mut phi,
            std::mem::replace(&mut candidate, vec![vec![0.0; n_rbs]; n_users]),
        );
        prev_phi = Some(old_phi);
        prev_grad = Some(grad);
    }
    Err(OracleError::DidNotConverge {
        tol: kkt_tol,
        iterations: MAX_ITERATIONS,
        best_residual,
    })
}

/// Exhaustive reference optimum for tiny problems: a lattice search over
/// the product of simplices, refined around the incumbent until the lattice
/// step is at most `resolution`. Concavity of the objective makes the local
/// refinement sound. Cost grows combinatorially, so keep problems to a few
/// users and blocks.
pub fn grid_search_optimum(problem: &StageProblem, resolution: f64) -> (Vec<Vec<f64>>, f64) {
    let n_users = problem.n_users();
    let n_rbs = problem.n_rbs();
    assert!(
        n_users <= 4 && n_rbs <= 3,
        "grid search is for tiny problems only ({n_users} users, {n_rbs} blocks)"
    );
    assert!(resolution > 0.0);

    let mut denom: u64 = 8;
    let mut best_phi: Option<Vec<Vec<f64>>> = None;
    let mut best_l = f64::NEG_INFINITY;
    loop {
        // Candidate lattice columns, optionally windowed around incumbent.
        let mut column_choices: Vec<Vec<Vec<f64>>> = Vec::with_capacity(n_rbs);
        for j in 0..n_rbs {
            let center: Option<Vec<f64>> =
                best_phi.as_ref().map(|phi| phi.iter().map(|row| row[j]).collect());
            // Window of 2.5 previous-level cells is enough to contain the
            // continuous argmax drift between refinement levels.
            let radius = 5.0 / denom as f64;
            let mut columns = Vec::new();
            let mut counts = vec![0u64; n_users];
            enumerate_compositions(denom, 0, &mut counts, &mut |counts| {
                let column: Vec<f64> =
                    counts.iter().map(|&c| c as f64 / denom as f64).collect();
                if let Some(center) = &center {
                    if column
                        .iter()
                        .zip(center)
                        .any(|(x, c)| (x - c).abs() > radius)
                    {
                        return;
                    }
                }
                columns.push(column);
            });
            column_choices.push(columns);
        }
        // Evaluate every combination of candidate columns.
        let mut phi = vec![vec![0.0; n_rbs]; n_users];
        let mut indices = vec![0usize; n_rbs];
        loop {
            for (j, &choice) in indices.iter().enumerate() {
                for (i, row) in phi.iter_mut().enumerate() {
                    row[j] = column_choices[j][choice][i];
                }
            }
            let l = objective_at(&phi, problem);
            if l > best_l {
                best_l = l;
                best_phi = Some(phi.clone());
            }
            // Odometer increment over the per-column choice lists.
            let mut j = 0;
            loop {
                if j == n_rbs {
                    break;
                }
                indices[j] += 1;
                if indices[j] < column_choices[j].len() {
                    break;
                }
                indices[j] = 0;
                j += 1;
            }
            if j == n_rbs {
                break;
            }
        }
        if 1.0 / denom as f64 <= resolution {
            break;
        }
        denom *= 2;
    }
    (best_phi.expect("grid search evaluated at least one point"), best_l)
}

/// Calls `emit` with every nonnegative integer vector summing to `total`.
fn enumerate_compositions(
    total: u64,
    index: usize,
    counts: &mut Vec<u64>,
    emit: &mut impl FnMut(&[u64]),
) {
    if index + 1 == counts.len() {
        counts[index] = total;
        emit(counts);
        return;
    }
    for take in 0..=total {
        counts[index] = take;
        enumerate_compositions(total - take, index + 1, counts, emit);
    }
}

// ---------------------------------------------------------------------------
