//! Envyfreeness and efficiency diagnostics, plus exhaustive oracles for small
//! markets.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};
use crate::market::{Allocation, Assignment, Market, Ranks, School, Student};
use crate::mechanisms::{ia, school_da, student_da};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BlockReason {
    /// The school has an empty seat. The outside option always does.
    Vacancy,
    /// The school admitted `occupant`, whom the student outranks.
    Priority { occupant: Student },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockingPair {
    pub student: Student,
    pub school: Assignment,
    pub reason: BlockReason,
}

impl fmt::Display for BlockingPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.reason {
            BlockReason::Vacancy => write!(f, "(i{}, {}, VACANCY)", self.student + 1, self.school),
            BlockReason::Priority { occupant } => write!(
                f,
                "(i{}, {}, PRIORITY over i{})",
                self.student + 1,
                self.school,
                occupant + 1
            ),
        }
    }
}

fn occupants(market: &Market, alloc: &Allocation) -> Vec<Vec<Student>> {
    let mut occ = vec![Vec::new(); market.m()];
    for i in 0..alloc.len() {
        if let Assignment::School(s) = alloc.get(i) {
            occ[s].push(i);
        }
    }
    occ
}

/// Every pair `(i, s)` with `s` preferred by `i` to their assignment and
/// either a free seat at `s` or a lower-priority occupant. When both hold,
/// the pair is reported with the lowest-priority occupant. A student placed
/// at a school they do not list blocks with the outside option.
pub fn blocking_pairs(market: &Market, alloc: &Allocation) -> Vec<BlockingPair> {
    let ranks = market.ranks();
    let occ = occupants(market, alloc);
    let mut out = Vec::new();
    for i in 0..market.n() {
        let current = alloc.get(i);
        let current_rank = ranks.assignment_rank(i, current);
        for &s in &market.preferences[i] {
            if ranks.preference(i, s) >= current_rank {
                break;
            }
            let lowest_below = occ[s]
                .iter()
                .copied()
                .filter(|&j| ranks.school_prefers(s, i, j))
                .max_by_key(|&j| (ranks.priority(s, j), j));
            let reason = match lowest_below {
                Some(occupant) => BlockReason::Priority { occupant },
                None if (occ[s].len() as u32) < market.capacities[s] => BlockReason::Vacancy,
                None => continue,
            };
            out.push(BlockingPair {
                student: i,
                school: Assignment::School(s),
                reason,
            });
        }
        if ranks.prefers(i, Assignment::Outside, current) {
            out.push(BlockingPair {
                student: i,
                school: Assignment::Outside,
                reason: BlockReason::Vacancy,
            });
        }
    }
    out
}

pub fn is_envyfree(market: &Market, alloc: &Allocation) -> bool {
    blocking_pairs(market, alloc).is_empty()
}

/// Students who prefer some school that admitted a lower-priority student.
pub fn justified_envy_students(market: &Market, alloc: &Allocation) -> BTreeSet<Student> {
    blocking_pairs(market, alloc)
        .into_iter()
        .filter(|b| matches!(b.reason, BlockReason::Priority { .. }))
        .map(|b| b.student)
        .collect()
}

/// School-level improvement graph of an allocation.
///
/// Node `m` is the outside option. There is an edge `a -> b` when some
/// student placed at `a` strictly prefers `b`. A node is open when it has a
/// free seat; the outside option always is. A student improves in some
/// Pareto-dominating allocation exactly when one of the nodes they prefer
/// reaches either their own node (a trading cycle) or an open node (a chain
/// ending in a free seat).
struct ImprovementGraph {
    nodes: usize,
    edges: Vec<Vec<usize>>,
    open: Vec<bool>,
}

impl ImprovementGraph {
    fn new(market: &Market, ranks: &Ranks, alloc: &Allocation) -> Self {
        let m = market.m();
        let nodes = m + 1;
        let node = |a: Assignment| a.school().unwrap_or(m);
        let mut adj = vec![false; nodes * nodes];
        for i in 0..market.n() {
            let from = node(alloc.get(i));
            for b in Self::better_nodes(market, ranks, alloc, i) {
                adj[from * nodes + b] = true;
            }
        }
        let edges = (0..nodes)
            .map(|a| (0..nodes).filter(|&b| adj[a * nodes + b]).collect())
            .collect();
        let occ = alloc.occupancy(m);
        let mut open: Vec<bool> = (0..m).map(|s| occ[s] < market.capacities[s]).collect();
        open.push(true);
        ImprovementGraph { nodes, edges, open }
    }

    /// Nodes student `i` strictly prefers to where they are.
    fn better_nodes<'a>(
        market: &'a Market,
        ranks: &'a Ranks,
        alloc: &Allocation,
        i: Student,
    ) -> impl Iterator<Item = usize> + 'a {
        let m = market.m();
        let current = alloc.get(i);
        let cut = ranks.assignment_rank(i, current);
        let schools = market.preferences[i]
            .iter()
            .take(cut.min(market.preferences[i].len() as u32) as usize)
            .copied();
        let outside = ranks
            .prefers(i, Assignment::Outside, current)
            .then_some(m);
        schools.chain(outside)
    }

    fn reachable_from(&self, start: usize) -> Vec<bool> {
        let mut seen = vec![false; self.nodes];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(a) = queue.pop_front() {
            for &b in &self.edges[a] {
                if !seen[b] {
                    seen[b] = true;
                    queue.push_back(b);
                }
            }
        }
        seen
    }

    fn has_cycle(&self) -> bool {
        // Kahn's algorithm: leftover nodes lie on or behind a cycle
        let mut indegree = vec![0usize; self.nodes];
        for targets in &self.edges {
            for &b in targets {
                indegree[b] += 1;
            }
        }
        let mut queue: VecDeque<usize> = (0..self.nodes).filter(|&a| indegree[a] == 0).collect();
        let mut done = 0;
        while let Some(a) = queue.pop_front() {
            done += 1;
            for &b in &self.edges[a] {
                indegree[b] -= 1;
                if indegree[b] == 0 {
                    queue.push_back(b);
                }
            }
        }
        done < self.nodes
    }
}

/// Pareto efficiency among feasible allocations: nobody wants a free seat
/// (or the outside option) and no group of students can trade seats in a
/// cycle.
pub fn is_pareto_efficient(market: &Market, alloc: &Allocation) -> bool {
    let ranks = market.ranks();
    let graph = ImprovementGraph::new(market, &ranks, alloc);
    for i in 0..market.n() {
        if ImprovementGraph::better_nodes(market, &ranks, alloc, i).any(|b| graph.open[b]) {
            return false;
        }
    }
    !graph.has_cycle()
}

/// Students who are strictly better off in some allocation that makes no
/// student worse off.
pub fn pareto_improvable_students(market: &Market, alloc: &Allocation) -> BTreeSet<Student> {
    let ranks = market.ranks();
    let graph = ImprovementGraph::new(market, &ranks, alloc);
    let m = market.m();
    let reach: Vec<Vec<bool>> = (0..graph.nodes).map(|a| graph.reachable_from(a)).collect();
    let leads_to_open: Vec<bool> = reach
        .iter()
        .map(|r| r.iter().zip(&graph.open).any(|(&seen, &open)| seen && open))
        .collect();
    (0..market.n())
        .filter(|&i| {
            let home = alloc.get(i).school().unwrap_or(m);
            ImprovementGraph::better_nodes(market, &ranks, alloc, i)
                .any(|b| leads_to_open[b] || reach[b][home])
        })
        .collect()
}

pub const ENVYFREE_MAX_STUDENTS: usize = 6;
pub const ENVYFREE_MAX_SCHOOLS: usize = 4;
pub const ENVYFREE_MAX_CAPACITY: u32 = 2;

/// Calls `visit` on every feasible allocation of `market`.
pub fn for_each_feasible_allocation(market: &Market, mut visit: impl FnMut(&Allocation)) {
    let (n, m) = (market.n(), market.m());
    let mut digits = vec![m; n];
    let mut occ = vec![0u32; m];
    let to_alloc = |digits: &[usize]| {
        Allocation::new(
            digits
                .iter()
                .map(|&d| if d == m { Assignment::Outside } else { Assignment::School(d) })
                .collect(),
        )
    };
    loop {
        if occ.iter().zip(&market.capacities).all(|(o, q)| o <= q) {
            visit(&to_alloc(&digits));
        }
        // odometer over {0..=m}^n, keeping occupancy in step
        let mut pos = 0;
        loop {
            if pos == n {
                return;
            }
            if digits[pos] < m {
                occ[digits[pos]] -= 1;
            }
            digits[pos] = if digits[pos] == m { 0 } else { digits[pos] + 1 };
            if digits[pos] < m {
                occ[digits[pos]] += 1;
            }
            if digits[pos] != m {
                break;
            }
            pos += 1;
        }
    }
}

fn check_envyfree_gate(market: &Market, operation: &'static str) -> Result<()> {
    let max_q = market.capacities.iter().copied().max().unwrap_or(0);
    if market.n() > ENVYFREE_MAX_STUDENTS
        || market.m() > ENVYFREE_MAX_SCHOOLS
        || max_q > ENVYFREE_MAX_CAPACITY
    {
        return Err(Error::InputTooLarge {
            operation,
            detail: format!(
                "n = {}, m = {}, max q = {max_q}; limits are n <= {ENVYFREE_MAX_STUDENTS}, m <= {ENVYFREE_MAX_SCHOOLS}, q <= {ENVYFREE_MAX_CAPACITY}",
                market.n(),
                market.m()
            ),
        });
    }
    Ok(())
}

/// All feasible envyfree allocations, by exhaustive search.
pub fn enumerate_envyfree(market: &Market) -> Result<BTreeSet<Allocation>> {
    check_envyfree_gate(market, "enumerate_envyfree")?;
    let mut out = BTreeSet::new();
    for_each_feasible_allocation(market, |alloc| {
        if is_envyfree(market, alloc) {
            out.insert(alloc.clone());
        }
    });
    Ok(out)
}

/// Uniqueness of the envyfree allocation, read off the two extremes of the
/// stable lattice.
pub fn envyfree_unique(market: &Market) -> bool {
    student_da(market) == school_da(market)
}

pub const IA_NASH_MAX_STUDENTS: usize = 3;
pub const IA_NASH_MAX_SCHOOLS: usize = 3;

/// Every ordered list of distinct schools drawn from `0..m`, including the
/// empty list.
pub fn all_reports(m: usize) -> Vec<Vec<School>> {
    fn extend(m: usize, prefix: &mut Vec<School>, used: &mut [bool], out: &mut Vec<Vec<School>>) {
        out.push(prefix.clone());
        for s in 0..m {
            if !used[s] {
                used[s] = true;
                prefix.push(s);
                extend(m, prefix, used, out);
                prefix.pop();
                used[s] = false;
            }
        }
    }
    let mut out = Vec::new();
    extend(m, &mut Vec::new(), &mut vec![false; m], &mut out);
    out
}

/// Outcomes of all pure Nash equilibria of the immediate-acceptance game
/// under complete information. A student's strategy is any ordered list of
/// distinct schools; payoffs are their true ordinal preferences.
pub fn enumerate_ia_nash_outcomes(market: &Market) -> Result<BTreeSet<Allocation>> {
    let (n, m) = (market.n(), market.m());
    if n > IA_NASH_MAX_STUDENTS || m > IA_NASH_MAX_SCHOOLS {
        return Err(Error::InputTooLarge {
            operation: "enumerate_ia_nash_outcomes",
            detail: format!(
                "n = {n}, m = {m}; limits are n <= {IA_NASH_MAX_STUDENTS}, m <= {IA_NASH_MAX_SCHOOLS}"
            ),
        });
    }
    let ranks = market.ranks();
    let strategies = all_reports(m);
    let k = strategies.len();
    let profiles = k.pow(n as u32);

    // outcome of profile p, where student i plays strategies[(p / k^i) % k]
    let mut outcomes = Vec::with_capacity(profiles);
    let mut reports = vec![Vec::new(); n];
    for p in 0..profiles {
        let mut code = p;
        for report in reports.iter_mut() {
            *report = strategies[code % k].clone();
            code /= k;
        }
        outcomes.push(ia(market, &reports));
    }

    let stride: Vec<usize> = (0..n).map(|i| k.pow(i as u32)).collect();
    let mut out = BTreeSet::new();
    for (p, outcome) in outcomes.iter().enumerate() {
        let stable = (0..n).all(|i| {
            let own = (p / stride[i]) % k;
            let base = p - own * stride[i];
            let current = ranks.assignment_rank(i, outcome.get(i));
            (0..k).all(|d| ranks.assignment_rank(i, outcomes[base + d * stride[i]].get(i)) >= current)
        });
        if stable {
            out.insert(outcome.clone());
        }
    }
    Ok(out)
}

/// Share of students (in percent) satisfying a per-student predicate.
pub fn percent_of_students(count: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        100.0 * count as f64 / n as f64
    }
}
