use super::LapSolution;

const NONE: usize = usize::MAX;
const SCALING_FACTOR: f64 = 5.0;

/// Forward-reverse auction with ε-scaling.
///
/// Works on benefits `a_ij = -C_ij` with object prices `p_j` and person
/// profits `π_i`, maintaining ε-complementary slackness
/// `π_i + p_j >= a_ij - ε`. Forward bids (persons for objects) and reverse
/// bids (objects for persons) alternate each time the number of assigned pairs
/// grows. Costs are used as given, without integer rescaling.
///
/// On return the column duals are `v_j = -p_j` and the row duals are derived as
/// `u_i = min_j (C_ij - v_j)`, after which the column duals are raised to
/// `min_i (C_ij - u_i)`. Every reduced cost is nonnegative and the assigned
/// reduced costs are at most ε.
#[derive(Debug, Default)]
pub struct AuctionSolver {
    benefit: Vec<f64>,
    price: Vec<f64>,
    profit: Vec<f64>,
    person_obj: Vec<usize>,
    obj_person: Vec<usize>,
    free_persons: Vec<usize>,
    free_objects: Vec<usize>,
}

impl AuctionSolver {
    pub fn new() -> Self {
        Self::default()
    }

    /// Solves to final slack `epsilon` (> 0). Prices from the previous call
    /// are discarded.
    pub fn solve(&mut self, cost: &[f64], n: usize, epsilon: f64, out: &mut LapSolution) {
        debug_assert_eq!(cost.len(), n * n);
        debug_assert!(epsilon > 0.0);
        out.assignment.clear();
        out.u.clear();
        out.v.clear();
        out.epsilon = epsilon;
        if n == 0 {
            out.objective = 0.0;
            return;
        }

        self.benefit.clear();
        self.benefit.extend(cost.iter().map(|c| -c));
        self.price.clear();
        self.price.resize(n, 0.0);
        self.profit.resize(n, 0.0);

        let (lo, hi) = cost
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &c| (lo.min(c), hi.max(c)));
        let range = hi - lo;

        let mut eps = (range / 2.0).max(epsilon);
        loop {
            self.phase(n, eps);
            if eps <= epsilon {
                break;
            }
            eps = (eps / SCALING_FACTOR).max(epsilon);
        }

        out.assignment.extend_from_slice(&self.person_obj);
        out.v.extend(self.price.iter().map(|p| -p));
        for i in 0..n {
            let row = &cost[i * n..(i + 1) * n];
            let ui = row
                .iter()
                .zip(&out.v)
                .map(|(c, v)| c - v)
                .fold(f64::INFINITY, f64::min);
            out.u.push(ui);
        }
        // tighten the column duals against the derived row duals
        for j in 0..n {
            out.v[j] = (0..n).map(|i| cost[i * n + j] - out.u[i]).fold(f64::INFINITY, f64::min);
        }
        out.objective = (0..n).map(|i| cost[i * n + out.assignment[i]]).sum();
    }

    fn phase(&mut self, n: usize, eps: f64) {
        self.person_obj.clear();
        self.person_obj.resize(n, NONE);
        self.obj_person.clear();
        self.obj_person.resize(n, NONE);
        for i in 0..n {
            let row = &self.benefit[i * n..(i + 1) * n];
            self.profit[i] = row
                .iter()
                .zip(&self.price)
                .map(|(a, p)| a - p)
                .fold(f64::NEG_INFINITY, f64::max);
        }
        if n == 1 {
            self.person_obj[0] = 0;
            self.obj_person[0] = 0;
            self.profit[0] = self.benefit[0] - self.price[0];
            return;
        }

        let mut assigned = 0usize;
        // free lists are kept in reverse so that pop() serves the lowest index
        self.free_persons.clear();
        self.free_persons.extend((0..n).rev());
        self.free_objects.clear();
        self.free_objects.extend((0..n).rev());

        while assigned < n {
            // forward: persons bid until one more pair is assigned
            let target = assigned + 1;
            while assigned < target {
                let i = match self.free_persons.pop() {
                    Some(i) if self.person_obj[i] == NONE => i,
                    Some(_) => continue,
                    None => break,
                };
                if self.forward_bid(n, i, eps) {
                    assigned += 1;
                }
            }
            if assigned == n {
                break;
            }
            self.refresh_free_objects(n);
            let target = assigned + 1;
            while assigned < target {
                let j = match self.free_objects.pop() {
                    Some(j) if self.obj_person[j] == NONE => j,
                    Some(_) => continue,
                    None => break,
                };
                if self.reverse_bid(n, j, eps) {
                    assigned += 1;
                }
            }
            self.refresh_free_persons(n);
        }
    }

    fn refresh_free_objects(&mut self, n: usize) {
        self.free_objects.clear();
        self.free_objects
            .extend((0..n).rev().filter(|&j| self.obj_person[j] == NONE));
    }

    fn refresh_free_persons(&mut self, n: usize) {
        self.free_persons.clear();
        self.free_persons
            .extend((0..n).rev().filter(|&i| self.person_obj[i] == NONE));
    }

    /// Returns true when the bid went to an unassigned object.
    fn forward_bid(&mut self, n: usize, i: usize, eps: f64) -> bool {
        let row = &self.benefit[i * n..(i + 1) * n];
        let (mut best, mut best_j, mut second) = (f64::NEG_INFINITY, NONE, f64::NEG_INFINITY);
        for (j, (&a, &p)) in row.iter().zip(&self.price).enumerate() {
            let value = a - p;
            if value > best {
                second = best;
                best = value;
                best_j = j;
            } else if value > second {
                second = value;
            }
        }
        self.price[best_j] = row[best_j] - second + eps;
        self.profit[i] = second - eps;
        let previous = self.obj_person[best_j];
        self.obj_person[best_j] = i;
        self.person_obj[i] = best_j;
        if previous != NONE {
            self.person_obj[previous] = NONE;
            self.free_persons.push(previous);
            false
        } else {
            true
        }
    }

    /// Returns true when the bid went to an unassigned person.
    fn reverse_bid(&mut self, n: usize, j: usize, eps: f64) -> bool {
        let (mut best, mut best_i, mut second) = (f64::NEG_INFINITY, NONE, f64::NEG_INFINITY);
        for i in 0..n {
            let value = self.benefit[i * n + j] - self.profit[i];
            if value > best {
                second = best;
                best = value;
                best_i = i;
            } else if value > second {
                second = value;
            }
        }
        self.profit[best_i] = self.benefit[best_i * n + j] - second + eps;
        self.price[j] = second - eps;
        let previous = self.person_obj[best_i];
        self.person_obj[best_i] = j;
        self.obj_person[j] = best_i;
        if previous != NONE {
            self.obj_person[previous] = NONE;
            self.free_objects.push(previous);
            false
        } else {
            true
        }
    }
}
