//! Two-phase bounded-variable primal simplex on a dense tableau.
//!
//! Each row `a_i·x rel b_i` becomes `a_i·x - r_i = 0` with a row-activity
//! variable `r_i` carrying the bound (`[b_i, inf)` for `>=`, `(-inf, b_i]`
//! for `<=`). Structural variables start nonbasic at their lower bound (upper
//! bound when the lower is infinite, zero when free); rows whose activity
//! violates the bound get an artificial variable, and phase I drives the
//! artificials to zero.
//!
//! Pricing is Dantzig's rule (largest reduced cost, lowest index among ties
//! within `opt_tol`). After `3 * (n_vars + n_constraints)` consecutive
//! degenerate steps Bland's rule takes over until the next improving step.

use super::{LpError, LpInstance, LpSolution, LpStatus, Relation, SolveOptions};

const PIVOT_TOL: f64 = 1e-9;
const RATIO_TIE: f64 = 1e-12;
const STEP_TOL: f64 = 1e-12;

struct Tableau {
    m: usize,
    ncols: usize,
    /// row-major `m x ncols`, equal to `B^-1 [A | -I | art]`
    t: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    value: Vec<f64>,
    basis: Vec<usize>,
    /// row holding each basic variable, `usize::MAX` when nonbasic
    row_of: Vec<usize>,
    /// columns that can never re-enter (nonbasic artificials after phase I)
    dead: Vec<bool>,
    cost: Vec<f64>,
    reduced: Vec<f64>,
    first_artificial: usize,
}

enum Step {
    Optimal,
    Unbounded,
    Moved { degenerate: bool },
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Rule {
    Dantzig,
    Bland,
}

fn start_value(l: f64, u: f64) -> f64 {
    if l.is_finite() {
        l
    } else if u.is_finite() {
        u
    } else {
        0.0
    }
}

impl Tableau {
    fn build(lp: &LpInstance) -> Tableau {
        let n = lp.n_vars();
        let m = lp.n_constraints();
        let mut value: Vec<f64> = (0..n).map(|j| start_value(lp.lower_bounds()[j], lp.upper_bounds()[j])).collect();
        let mut lower = lp.lower_bounds().to_vec();
        let mut upper = lp.upper_bounds().to_vec();

        // row activity variables
        let mut needs_artificial = Vec::new();
        for (i, row) in lp.constraints().iter().enumerate() {
            let (l, u) = match row.relation {
                Relation::Ge => (row.rhs, f64::INFINITY),
                Relation::Le => (f64::NEG_INFINITY, row.rhs),
            };
            lower.push(l);
            upper.push(u);
            let act = row.activity(&value[..n]);
            if act >= l && act <= u {
                value.push(act);
            } else {
                let beta = if act < l { l } else { u };
                value.push(beta);
                needs_artificial.push((i, beta - act));
            }
        }

        let first_artificial = n + m;
        let ncols = first_artificial + needs_artificial.len();
        let mut t = vec![0.0; m * ncols];
        let mut basis = vec![0; m];
        let mut row_of = vec![usize::MAX; ncols];

        // rows with a basic r_i: T row = -(a_i, -e_i)
        for (i, row) in lp.constraints().iter().enumerate() {
            let r = &mut t[i * ncols..(i + 1) * ncols];
            for &(j, a) in &row.coeffs {
                r[j] = -a;
            }
            r[n + i] = 1.0;
            basis[i] = n + i;
        }
        for (k, &(i, gap)) in needs_artificial.iter().enumerate() {
            let col = first_artificial + k;
            let sigma = gap.signum();
            // basis column sigma*e_i: T row = (a_i, -e_i, sigma e_i) / sigma
            let r = &mut t[i * ncols..(i + 1) * ncols];
            for x in r.iter_mut() {
                *x = -*x * sigma;
            }
            r[col] = 1.0;
            basis[i] = col;
            lower.push(0.0);
            upper.push(f64::INFINITY);
            value.push(gap.abs());
        }
        for (i, &b) in basis.iter().enumerate() {
            row_of[b] = i;
        }

        Tableau {
            m,
            ncols,
            t,
            lower,
            upper,
            value,
            basis,
            row_of,
            dead: vec![false; ncols],
            cost: vec![0.0; ncols],
            reduced: vec![0.0; ncols],
            first_artificial,
        }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.t[i * self.ncols..(i + 1) * self.ncols]
    }

    fn set_cost(&mut self, cost: Vec<f64>) {
        self.cost = cost;
        self.reduced.copy_from_slice(&self.cost);
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb != 0.0 {
                let start = i * self.ncols;
                for k in 0..self.ncols {
                    self.reduced[k] -= cb * self.t[start + k];
                }
            }
        }
        for &b in &self.basis {
            self.reduced[b] = 0.0;
        }
    }

    /// Recomputes basic values from the nonbasic ones: `x_B = -T_N x_N`.
    fn refresh_basic_values(&mut self) {
        for i in 0..self.m {
            let row = self.row(i);
            let mut s = 0.0;
            for (k, &a) in row.iter().enumerate() {
                if a != 0.0 && self.row_of[k] == usize::MAX {
                    s -= a * self.value[k];
                }
            }
            let b = self.basis[i];
            self.value[b] = s;
        }
    }

    fn eligible(&self, j: usize, opt_tol: f64) -> Option<(f64, f64)> {
        if self.row_of[j] != usize::MAX || self.dead[j] || self.lower[j] == self.upper[j] {
            return None;
        }
        let d = self.reduced[j];
        let v = self.value[j];
        if d < -opt_tol && v < self.upper[j] {
            Some((-d, 1.0))
        } else if d > opt_tol && v > self.lower[j] {
            Some((d, -1.0))
        } else {
            None
        }
    }

    fn choose_entering(&self, rule: Rule, opt_tol: f64) -> Option<(usize, f64)> {
        match rule {
            Rule::Bland => (0..self.ncols).find_map(|j| self.eligible(j, opt_tol).map(|(_, dir)| (j, dir))),
            Rule::Dantzig => {
                let best = (0..self.ncols)
                    .filter_map(|j| self.eligible(j, opt_tol).map(|(s, _)| s))
                    .fold(f64::NEG_INFINITY, f64::max);
                if best == f64::NEG_INFINITY {
                    return None;
                }
                (0..self.ncols).find_map(|j| match self.eligible(j, opt_tol) {
                    Some((s, dir)) if s >= best - opt_tol => Some((j, dir)),
                    _ => None,
                })
            }
        }
    }

    fn step(&mut self, rule: Rule, opt_tol: f64) -> Step {
        let Some((q, dir)) = self.choose_entering(rule, opt_tol) else {
            return Step::Optimal;
        };

        // ratio test: basic i moves by -T_iq * dir per unit step
        let span = if dir > 0.0 {
            self.upper[q] - self.value[q]
        } else {
            self.value[q] - self.lower[q]
        };
        let mut theta = f64::INFINITY;
        let mut limits: Vec<(usize, f64, f64)> = Vec::new();
        for i in 0..self.m {
            let a = self.t[i * self.ncols + q];
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let rate = -a * dir;
            let b = self.basis[i];
            let lim = if rate > 0.0 {
                if self.upper[b].is_finite() {
                    (self.upper[b] - self.value[b]) / rate
                } else {
                    continue;
                }
            } else if self.lower[b].is_finite() {
                (self.lower[b] - self.value[b]) / rate
            } else {
                continue;
            };
            let lim = lim.max(0.0);
            theta = theta.min(lim);
            limits.push((i, lim, rate));
        }

        if span <= theta {
            if span == f64::INFINITY {
                return Step::Unbounded;
            }
            // bound flip, no basis change
            self.shift(q, dir * span);
            self.value[q] = if dir > 0.0 { self.upper[q] } else { self.lower[q] };
            return Step::Moved { degenerate: span <= STEP_TOL };
        }

        let candidates = limits.iter().filter(|&&(_, lim, _)| lim <= theta + RATIO_TIE);
        let (r, _, rate) = match rule {
            Rule::Dantzig => candidates
                .copied()
                .reduce(|best, c| {
                    let (ab, ac) = (self.t[best.0 * self.ncols + q].abs(), self.t[c.0 * self.ncols + q].abs());
                    if ac > ab {
                        c
                    } else {
                        best
                    }
                })
                .expect("finite theta has a limiting row"),
            Rule::Bland => candidates
                .copied()
                .min_by_key(|&(i, _, _)| self.basis[i])
                .expect("finite theta has a limiting row"),
        };
        let theta = limits.iter().find(|l| l.0 == r).map(|l| l.1).unwrap_or(theta);

        let leaving = self.basis[r];
        self.shift(q, dir * theta);
        self.value[q] += dir * theta;
        self.value[leaving] = if rate > 0.0 { self.upper[leaving] } else { self.lower[leaving] };
        self.pivot(r, q);
        Step::Moved {
            degenerate: theta <= STEP_TOL,
        }
    }

    /// Moves every basic variable for a change `delta` of nonbasic `q`.
    fn shift(&mut self, q: usize, delta: f64) {
        if delta == 0.0 {
            return;
        }
        for i in 0..self.m {
            let a = self.t[i * self.ncols + q];
            if a != 0.0 {
                let b = self.basis[i];
                self.value[b] -= a * delta;
            }
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let nc = self.ncols;
        let piv = self.t[r * nc + q];
        let leaving = self.basis[r];

        let mut nz: Vec<(usize, f64)> = Vec::new();
        {
            let row = &mut self.t[r * nc..(r + 1) * nc];
            for (k, x) in row.iter_mut().enumerate() {
                if *x != 0.0 {
                    if self.dead[k] {
                        *x = 0.0;
                        continue;
                    }
                    *x /= piv;
                    nz.push((k, *x));
                }
            }
            row[q] = 1.0;
        }
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * nc + q];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i * nc..(i + 1) * nc];
            for &(k, v) in &nz {
                row[k] -= f * v;
            }
            row[q] = 0.0;
        }
        let dq = self.reduced[q];
        if dq != 0.0 {
            for &(k, v) in &nz {
                self.reduced[k] -= dq * v;
            }
        }
        self.reduced[q] = 0.0;

        self.basis[r] = q;
        self.row_of[q] = r;
        self.row_of[leaving] = usize::MAX;
        if leaving >= self.first_artificial && self.upper[leaving] == 0.0 {
            self.dead[leaving] = true;
        }
    }

    /// Runs simplex steps until optimal, unbounded or out of iterations.
    fn run(&mut self, opt_tol: f64, degenerate_limit: usize, iters: &mut usize, max_iters: usize) -> Option<LpStatus> {
        let mut degenerate_run = 0usize;
        loop {
            if *iters >= max_iters {
                return Some(LpStatus::IterationLimit);
            }
            let rule = if degenerate_run >= degenerate_limit {
                Rule::Bland
            } else {
                Rule::Dantzig
            };
            match self.step(rule, opt_tol) {
                Step::Optimal => return None,
                Step::Unbounded => return Some(LpStatus::Unbounded),
                Step::Moved { degenerate } => {
                    *iters += 1;
                    if degenerate {
                        degenerate_run += 1;
                    } else {
                        degenerate_run = 0;
                    }
                }
            }
        }
    }

    /// Fixes artificials at zero and pivots basic ones out where a usable
    /// pivot exists; rows without one are redundant.
    fn retire_artificials(&mut self) {
        for j in self.first_artificial..self.ncols {
            self.upper[j] = 0.0;
            self.value[j] = 0.0;
            if self.row_of[j] == usize::MAX {
                self.dead[j] = true;
            }
        }
        for r in 0..self.m {
            let b = self.basis[r];
            if b < self.first_artificial {
                continue;
            }
            let row = self.row(r);
            let pick = (0..self.first_artificial)
                .filter(|&k| self.row_of[k] == usize::MAX && !self.dead[k])
                .map(|k| (k, row[k].abs()))
                .filter(|&(_, a)| a > 1e-7)
                .fold(None, |best: Option<(usize, f64)>, c| match best {
                    Some(b) if b.1 >= c.1 => Some(b),
                    _ => Some(c),
                });
            if let Some((k, _)) = pick {
                self.pivot(r, k);
            }
        }
        self.refresh_basic_values();
    }
}

/// Solves `lp` with a two-phase bounded primal simplex.
pub fn solve(lp: &LpInstance, options: &SolveOptions) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let n = lp.n_vars();
    let m = lp.n_constraints();
    let max_iters = options.max_iters.unwrap_or(50 * (n + m));
    let degenerate_limit = 3 * (n + m);
    let mut iters = 0;

    let finish = |tab: &Tableau, status: LpStatus, iters: usize| {
        let values = tab.value[..n].to_vec();
        LpSolution {
            status,
            objective_value: lp.objective_value(&values),
            values,
            iterations: iters,
        }
    };

    let mut tab = Tableau::build(lp);

    if tab.ncols > tab.first_artificial {
        let mut phase1 = vec![0.0; tab.ncols];
        phase1[tab.first_artificial..].iter_mut().for_each(|c| *c = 1.0);
        tab.set_cost(phase1);
        if let Some(status) = tab.run(options.opt_tol, degenerate_limit, &mut iters, max_iters) {
            // phase I is bounded below by zero, so only the iteration limit can stop it
            return Ok(finish(&tab, status, iters));
        }
        tab.refresh_basic_values();
        let infeasibility: f64 = tab.value[tab.first_artificial..].iter().sum();
        log::debug!("phase I: {iters} iterations, infeasibility {infeasibility:e}");
        if infeasibility > options.feas_tol {
            return Ok(finish(&tab, LpStatus::Infeasible, iters));
        }
        tab.retire_artificials();
    }

    let mut phase2 = vec![0.0; tab.ncols];
    phase2[..n].copy_from_slice(lp.objective());
    tab.set_cost(phase2);
    let status = tab
        .run(options.opt_tol, degenerate_limit, &mut iters, max_iters)
        .unwrap_or(LpStatus::Optimal);
    tab.refresh_basic_values();

    // snap structural values that drifted marginally past a bound
    for j in 0..n {
        tab.value[j] = tab.value[j].clamp(tab.lower[j], tab.upper[j]);
    }
    let sol = finish(&tab, status, iters);
    if sol.status == LpStatus::Optimal {
        let viol = lp.max_violation(&sol.values);
        if viol > options.feas_tol {
            log::warn!("simplex finished with constraint violation {viol:e}");
        }
    }
    log::debug!("simplex: {:?} after {iters} iterations, objective {}", sol.status, sol.objective_value);
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> SolveOptions {
        SolveOptions::default()
    }

    #[test]
    fn zero_slack_is_enough() {
        // min s  s.t. x + s >= 0.01, s >= 0, -4 <= x <= 4
        let mut lp = LpInstance::new(2);
        lp.set_bounds(0, -4.0, 4.0);
        lp.set_cost(1, 1.0);
        lp.add_constraint(vec![(0, 1.0), (1, 1.0)], Relation::Ge, 0.01);
        let sol = solve(&lp, &opts()).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!(sol.objective_value.abs() < 1e-12);
        assert!(sol.values[0] >= 0.01 - 1e-9 && sol.values[0] <= 4.0);
        assert!(sol.values[1].abs() < 1e-12);
    }

    #[test]
    fn opposing_margins_need_slack() {
        // min s  s.t. x + s >= 0.01, -x + s >= 0.01
        let mut lp = LpInstance::new(2);
        lp.set_bounds(0, -4.0, 4.0);
        lp.set_cost(1, 1.0);
        lp.add_constraint(vec![(0, 1.0), (1, 1.0)], Relation::Ge, 0.01);
        lp.add_constraint(vec![(0, -1.0), (1, 1.0)], Relation::Ge, 0.01);
        let sol = solve(&lp, &opts()).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective_value - 0.01).abs() < 1e-12);
        assert!(sol.values[0].abs() < 1e-12);
        assert!((sol.values[1] - 0.01).abs() < 1e-12);
    }

    #[test]
    fn bound_contradiction_is_infeasible() {
        let mut lp = LpInstance::new(1);
        lp.set_bounds(0, -4.0, 4.0);
        lp.add_constraint(vec![(0, 1.0)], Relation::Ge, 5.0);
        assert_eq!(solve(&lp, &opts()).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_direction() {
        let mut lp = LpInstance::new(2);
        lp.set_cost(0, -1.0);
        lp.add_constraint(vec![(0, 1.0), (1, -1.0)], Relation::Le, 1.0);
        assert_eq!(solve(&lp, &opts()).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn free_and_half_bounded_variables() {
        // min x + y  s.t. x - y >= 1, x + y >= -3, x free, y <= 0
        let mut lp = LpInstance::new(2);
        lp.set_bounds(0, f64::NEG_INFINITY, f64::INFINITY);
        lp.set_bounds(1, f64::NEG_INFINITY, 0.0);
        lp.set_cost(0, 1.0);
        lp.set_cost(1, 1.0);
        lp.add_constraint(vec![(0, 1.0), (1, -1.0)], Relation::Ge, 1.0);
        lp.add_constraint(vec![(0, 1.0), (1, 1.0)], Relation::Ge, -3.0);
        let sol = solve(&lp, &opts()).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective_value + 3.0).abs() < 1e-9);
        assert!(lp.max_violation(&sol.values) < 1e-9);
    }

    #[test]
    fn malformed_instances_are_rejected() {
        let mut lp = LpInstance::new(1);
        lp.set_bounds(0, 1.0, -1.0);
        assert!(matches!(solve(&lp, &opts()), Err(LpError::MalformedInstance(_))));
        let mut lp = LpInstance::new(1);
        lp.set_cost(0, f64::NAN);
        assert!(solve(&lp, &opts()).is_err());
        let mut lp = LpInstance::new(1);
        lp.add_constraint(vec![(3, 1.0)], Relation::Ge, 0.0);
        assert!(solve(&lp, &opts()).is_err());
    }

    #[test]
    fn iteration_limit_is_reported() {
        let mut lp = LpInstance::new(3);
        for j in 0..3 {
            lp.set_bounds(j, -1.0, 1.0);
            lp.set_cost(j, -1.0);
        }
        lp.add_constraint(vec![(0, 1.0), (1, 1.0), (2, 1.0)], Relation::Le, 2.5);
        let sol = solve(&lp, &SolveOptions { max_iters: Some(1), ..opts() }).unwrap();
        assert_eq!(sol.status, LpStatus::IterationLimit);
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's classic cycling instance for the textbook Dantzig rule
        let mut lp = LpInstance::new(4);
        for (j, c) in [-0.75, 150.0, -0.02, 6.0].into_iter().enumerate() {
            lp.set_cost(j, c);
        }
        lp.add_constraint(vec![(0, 0.25), (1, -60.0), (2, -0.04), (3, 9.0)], Relation::Le, 0.0);
        lp.add_constraint(vec![(0, 0.5), (1, -90.0), (2, -0.02), (3, 3.0)], Relation::Le, 0.0);
        lp.add_constraint(vec![(2, 1.0)], Relation::Le, 1.0);
        let sol = solve(&lp, &opts()).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective_value + 0.05).abs() < 1e-9, "{}", sol.objective_value);
    }

    #[test]
    fn deterministic() {
        let mut lp = LpInstance::new(3);
        for j in 0..3 {
            lp.set_bounds(j, -2.0, 3.0);
        }
        lp.set_cost(0, 1.0);
        lp.set_cost(1, -2.0);
        lp.add_constraint(vec![(0, 1.0), (1, 1.0), (2, 1.0)], Relation::Le, 1.5);
        lp.add_constraint(vec![(0, -1.0), (1, 2.0)], Relation::Ge, -1.0);
        let a = solve(&lp, &opts()).unwrap();
        let b = solve(&lp, &opts()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }
}
