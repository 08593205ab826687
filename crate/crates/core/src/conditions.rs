//! Mutually-best-pairs machinery.
//!
//! [`simplify`] truncates every preference list at the student's safe school
//! (the first school that ranks them within capacity) and refilters priority
//! lists, iterating to a fixed point. [`check_sequential_mbp`] tries to
//! exhaust a market by repeatedly matching mutually best pairs, and
//! [`check_gmbp`] runs that check on the simplified market.
//!
//! [`check_mbp_everywhere`] and [`check_ergin_acyclicity`] are brute-force
//! comparison checks with explicit size gates.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::market::{Assignment, Market, Ranks, School, Student};

/// A market after iterated safe-school truncation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplifiedMarket {
    pub market: Market,
    /// The truncation point of each student's list, if they have one.
    pub safe_school: Vec<Option<School>>,
    /// Number of truncation rounds that changed at least one list.
    pub rounds: usize,
}

/// Iterated truncation at safe schools.
///
/// Each round finds, for every student simultaneously, the first school on
/// their current list whose current priority list ranks them within its
/// capacity, and drops everything below it. Priority lists are then
/// refiltered to the students still listing each school. Lists only shrink,
/// so the loop reaches a fixed point.
pub fn simplify(market: &Market) -> SimplifiedMarket {
    let (n, m) = (market.n(), market.m());
    let mut prefs = market.preferences.clone();
    let mut prio = market.priorities.clone();
    let mut safe = vec![None; n];
    let mut rounds = 0;
    // within[s * n + i] <=> i is among the top q_s of the current list of s
    let mut within = vec![false; m * n];
    let mut listed = vec![false; n * m];

    loop {
        within.fill(false);
        for (s, list) in prio.iter().enumerate() {
            for &i in list.iter().take(market.capacities[s] as usize) {
                within[s * n + i] = true;
            }
        }
        let mut truncated = false;
        for (i, list) in prefs.iter_mut().enumerate() {
            if let Some(k) = list.iter().position(|&s| within[s * n + i]) {
                safe[i] = Some(list[k]);
                if k + 1 < list.len() {
                    list.truncate(k + 1);
                    truncated = true;
                }
            }
        }
        if !truncated {
            break;
        }
        rounds += 1;
        listed.fill(false);
        for (i, list) in prefs.iter().enumerate() {
            for &s in list {
                listed[i * m + s] = true;
            }
        }
        for (s, list) in prio.iter_mut().enumerate() {
            list.retain(|&i| listed[i * m + s]);
        }
    }

    SimplifiedMarket {
        market: Market {
            capacities: market.capacities.clone(),
            preferences: prefs,
            priorities: prio,
        },
        safe_school: safe,
        rounds,
    }
}

/// Same fixed point as [`simplify`], reached one student at a time in the
/// given visiting order, with priority lists refiltered after every single
/// truncation.
pub fn simplify_in_order(market: &Market, order: &[Student]) -> Market {
    let mut prefs = market.preferences.clone();
    let mut prio = market.priorities.clone();
    loop {
        let mut changed = false;
        for &i in order {
            let cut = prefs[i].iter().position(|&s| {
                let q = market.capacities[s] as usize;
                prio[s].iter().take(q).any(|&j| j == i)
            });
            if let Some(k) = cut {
                if k + 1 < prefs[i].len() {
                    for s in prefs[i].drain(k + 1..) {
                        prio[s].retain(|&j| j != i);
                    }
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    Market {
        capacities: market.capacities.clone(),
        preferences: prefs,
        priorities: prio,
    }
}

/// Witness for the sequential mutually-best-pairs condition: the order in
/// which students were matched and where.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeqMbpCertificate {
    pub steps: Vec<(Student, Assignment)>,
    pub initial_capacities: Vec<u32>,
}

impl SeqMbpCertificate {
    /// Remaining capacity of every school just before each step.
    pub fn remaining_capacity_trace(&self) -> Vec<Vec<u32>> {
        let mut rem = self.initial_capacities.clone();
        let mut trace = Vec::with_capacity(self.steps.len());
        for &(_, a) in &self.steps {
            trace.push(rem.clone());
            if let Assignment::School(s) = a {
                rem[s] = rem[s].saturating_sub(1);
            }
        }
        trace
    }

    /// Replays the steps against `market`, checking at every step that the
    /// school is the student's best one with seats left and that the student
    /// is within the remaining seats among students not yet placed.
    pub fn verify(&self, market: &Market) -> std::result::Result<(), String> {
        let n = market.n();
        if self.initial_capacities != market.capacities {
            return Err("capacities differ from the market".into());
        }
        let mut seen = vec![false; n];
        for &(i, _) in &self.steps {
            if i >= n || seen[i] {
                return Err(format!("student {i} missing from range or repeated"));
            }
            seen[i] = true;
        }
        if self.steps.len() != n {
            return Err(format!("{} of {n} students placed", self.steps.len()));
        }

        let mut rem = market.capacities.clone();
        let mut remaining = vec![true; n];
        for (k, &(i, a)) in self.steps.iter().enumerate() {
            let best = market.preferences[i].iter().copied().find(|&s| rem[s] > 0);
            match (a, best) {
                (Assignment::Outside, None) => {}
                (Assignment::Outside, Some(s)) => {
                    return Err(format!("step {k}: i{} sent outside but s{} has seats", i + 1, s + 1))
                }
                (Assignment::School(s), best) => {
                    if best != Some(s) {
                        return Err(format!("step {k}: s{} is not the best available school of i{}", s + 1, i + 1));
                    }
                    let ahead = market.priorities[s]
                        .iter()
                        .take_while(|&&j| j != i)
                        .filter(|&&j| remaining[j])
                        .count();
                    if ahead >= rem[s] as usize {
                        return Err(format!(
                            "step {k}: i{} has {ahead} remaining students ahead at s{} with {} seats",
                            i + 1,
                            s + 1,
                            rem[s]
                        ));
                    }
                    rem[s] -= 1;
                }
            }
            remaining[i] = false;
        }
        Ok(())
    }
}

impl fmt::Display for SeqMbpCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let students: Vec<String> = self.steps.iter().map(|(i, _)| format!("i{}", i + 1)).collect();
        let schools: Vec<String> = self.steps.iter().map(|(_, a)| a.to_string()).collect();
        let width = students
            .iter()
            .chain(&schools)
            .map(String::len)
            .max()
            .unwrap_or(0);
        let row = |cells: &[String]| {
            cells
                .iter()
                .map(|c| format!("{c:<width$}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        writeln!(f, "{}", row(&students).trim_end())?;
        write!(f, "{}", row(&schools).trim_end())
    }
}

/// Greedy search for a sequential mutually-best-pairs ordering.
///
/// Students whose acceptable schools are all full are sent outside first;
/// then the lowest-indexed student whose best available school ranks them
/// within its remaining seats (among unplaced students) is matched. Returns
/// `None` as soon as unplaced students remain and no such student exists.
///
/// Runs in `O(n m log n)`: top-of-list windows and best-school pointers only
/// move forward, and candidates are revalidated lazily.
pub fn check_sequential_mbp(market: &Market) -> Option<SeqMbpCertificate> {
    SeqMbpSearch::new(market).run()
}

struct SeqMbpSearch<'a> {
    market: &'a Market,
    ranks: Ranks,
    rem: Vec<u32>,
    removed: Vec<bool>,
    pref_ptr: Vec<usize>,
    best: Vec<Option<School>>,
    // prio[s][..frontier[s]] holds exactly `top_count[s]` unplaced students
    frontier: Vec<usize>,
    top_count: Vec<u32>,
    watchers: Vec<Vec<Student>>,
    candidates: BTreeSet<Student>,
    exhausted: Vec<Student>,
    steps: Vec<(Student, Assignment)>,
}

impl<'a> SeqMbpSearch<'a> {
    fn new(market: &'a Market) -> Self {
        let (n, m) = (market.n(), market.m());
        let frontier: Vec<usize> = (0..m)
            .map(|s| (market.capacities[s] as usize).min(market.priorities[s].len()))
            .collect();
        let top_count = frontier.iter().map(|&f| f as u32).collect();
        let mut search = SeqMbpSearch {
            market,
            ranks: market.ranks(),
            rem: market.capacities.clone(),
            removed: vec![false; n],
            pref_ptr: vec![0; n],
            best: vec![None; n],
            frontier,
            top_count,
            watchers: vec![Vec::new(); m],
            candidates: BTreeSet::new(),
            exhausted: Vec::new(),
            steps: Vec::with_capacity(n),
        };
        for i in 0..n {
            search.refresh_best(i);
        }
        search
    }

    fn in_top(&self, s: School, i: Student) -> bool {
        (self.ranks.priority(s, i) as usize) < self.frontier[s]
    }

    fn qualifies(&self, i: Student) -> bool {
        !self.removed[i] && matches!(self.best[i], Some(s) if self.in_top(s, i))
    }

    /// Advances `i`'s pointer past full schools and files them as a
    /// candidate or as exhausted.
    fn refresh_best(&mut self, i: Student) {
        let prefs = &self.market.preferences[i];
        let mut p = self.pref_ptr[i];
        while p < prefs.len() && self.rem[prefs[p]] == 0 {
            p += 1;
        }
        self.pref_ptr[i] = p;
        self.best[i] = prefs.get(p).copied();
        match self.best[i] {
            Some(s) => {
                self.watchers[s].push(i);
                if self.in_top(s, i) {
                    self.candidates.insert(i);
                }
            }
            None => self.exhausted.push(i),
        }
    }

    fn remove(&mut self, i: Student) {
        self.removed[i] = true;
        for k in 0..self.market.preferences[i].len() {
            let s = self.market.preferences[i][k];
            if self.in_top(s, i) {
                self.top_count[s] -= 1;
                self.refill(s);
            }
        }
    }

    fn refill(&mut self, s: School) {
        let list = &self.market.priorities[s];
        while self.top_count[s] < self.rem[s] && self.frontier[s] < list.len() {
            let j = list[self.frontier[s]];
            self.frontier[s] += 1;
            if !self.removed[j] {
                self.top_count[s] += 1;
                if self.best[j] == Some(s) {
                    self.candidates.insert(j);
                }
            }
        }
    }

    fn flush_exhausted(&mut self) {
        while !self.exhausted.is_empty() {
            let mut batch = std::mem::take(&mut self.exhausted);
            batch.sort_unstable();
            batch.dedup();
            for i in batch {
                if !self.removed[i] {
                    self.steps.push((i, Assignment::Outside));
                    self.remove(i);
                }
            }
        }
    }

    fn run(mut self) -> Option<SeqMbpCertificate> {
        let n = self.market.n();
        loop {
            self.flush_exhausted();
            let pick = loop {
                let Some(i) = self.candidates.pop_first() else {
                    break None;
                };
                if self.qualifies(i) {
                    break Some(i);
                }
            };
            let Some(i) = pick else { break };
            let s = self.best[i].expect("qualified student has a best school");
            self.steps.push((i, Assignment::School(s)));
            self.rem[s] -= 1;
            self.remove(i);
            if self.rem[s] == 0 {
                for j in std::mem::take(&mut self.watchers[s]) {
                    if !self.removed[j] && self.best[j] == Some(s) {
                        self.refresh_best(j);
                    }
                }
            }
        }
        (self.steps.len() == n).then(|| SeqMbpCertificate {
            steps: self.steps,
            initial_capacities: self.market.capacities.clone(),
        })
    }
}

/// Generalized mutually best pairs: the sequential condition on the
/// simplified market.
pub fn check_gmbp(market: &Market) -> Option<(SimplifiedMarket, SeqMbpCertificate)> {
    let simplified = simplify(market);
    let cert = check_sequential_mbp(&simplified.market)?;
    Some((simplified, cert))
}

pub const MBP_EVERYWHERE_MAX_STUDENTS: usize = 12;
pub const MBP_EVERYWHERE_MAX_SCHOOLS: usize = 8;

/// Whether every submarket (any nonempty subset of students and of schools,
/// with original capacities) contains a mutually best pair. Submarkets in
/// which no student has an acceptable school pass vacuously.
pub fn check_mbp_everywhere(market: &Market) -> Result<bool> {
    let (n, m) = (market.n(), market.m());
    if n > MBP_EVERYWHERE_MAX_STUDENTS || m > MBP_EVERYWHERE_MAX_SCHOOLS {
        return Err(Error::InputTooLarge {
            operation: "check_mbp_everywhere",
            detail: format!(
                "n = {n}, m = {m}; limits are n <= {MBP_EVERYWHERE_MAX_STUDENTS}, m <= {MBP_EVERYWHERE_MAX_SCHOOLS}"
            ),
        });
    }
    for students in 1u32..(1 << n) {
        for schools in 1u32..(1 << m) {
            if !submarket_has_mbp(market, students, schools) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn submarket_has_mbp(market: &Market, students: u32, schools: u32) -> bool {
    let mut anyone_active = false;
    for i in 0..market.n() {
        if students & (1 << i) == 0 {
            continue;
        }
        let Some(&s) = market.preferences[i]
            .iter()
            .find(|&&s| schools & (1 << s) != 0)
        else {
            continue;
        };
        anyone_active = true;
        let ahead = market.priorities[s]
            .iter()
            .take_while(|&&j| j != i)
            .filter(|&&j| students & (1 << j) != 0)
            .count();
        if ahead < market.capacities[s] as usize {
            return true;
        }
    }
    !anyone_active
}

pub const ERGIN_MAX_STUDENTS: usize = 200;

/// Whether the priority structure has no Ergin cycle.
///
/// A cycle is distinct students `i, j, k` and schools `s != s'` with
/// `i` above `j` above `k` at `s` and `k` above `i` at `s'`, plus scarcity:
/// disjoint sets of other students, `q_s - 1` of them above `j` at `s` and
/// `q_s' - 1` of them above `i` at `s'`. Only students on a school's list
/// count.
pub fn check_ergin_acyclicity(market: &Market) -> Result<bool> {
    let (n, m) = (market.n(), market.m());
    if n > ERGIN_MAX_STUDENTS {
        return Err(Error::InputTooLarge {
            operation: "check_ergin_acyclicity",
            detail: format!("n = {n}; limit is n <= {ERGIN_MAX_STUDENTS}"),
        });
    }
    if n < 3 {
        return Ok(true);
    }
    let ranks = market.ranks();
    // both[x][y]: students ranked above position x at s and above y at s'
    let mut both = vec![0usize; (n + 1) * (n + 1)];
    for s in 0..m {
        let list_s = &market.priorities[s];
        if list_s.len() < 3 {
            continue;
        }
        for t in 0..m {
            if t == s {
                continue;
            }
            let list_t = &market.priorities[t];
            if list_t.len() < 2 {
                continue;
            }
            fill_joint_prefix_counts(&ranks, s, t, list_s.len(), list_t.len(), n, &mut both);
            let qa = market.capacities[s] as usize - 1;
            let qb = market.capacities[t] as usize - 1;
            for (pi, &i) in list_s.iter().enumerate() {
                let pos_i_t = ranks.priority(t, i);
                if pos_i_t == Ranks::UNRANKED {
                    continue;
                }
                let pos_i_t = pos_i_t as usize;
                for (pj, &j) in list_s.iter().enumerate().skip(pi + 1) {
                    // students above j at s, other than i
                    let above_j = pj - 1;
                    if above_j < qa {
                        continue;
                    }
                    let j_above_i_at_t = (ranks.priority(t, j) as usize) < pos_i_t;
                    for &k in &list_s[pj + 1..] {
                        let pos_k_t = ranks.priority(t, k);
                        if pos_k_t == Ranks::UNRANKED || pos_k_t as usize >= pos_i_t {
                            continue;
                        }
                        // students above i at t, other than j and k
                        let above_i = pos_i_t - 1 - usize::from(j_above_i_at_t);
                        if above_i < qb {
                            continue;
                        }
                        let overlap = both[pj * (n + 1) + pos_i_t];
                        if above_j + above_i - overlap >= qa + qb {
                            return Ok(false);
                        }
                    }
                }
            }
        }
    }
    Ok(true)
}

/// `out[x * (n + 1) + y]` = number of students with position `< x` on the
/// list of `s` and `< y` on the list of `t`.
fn fill_joint_prefix_counts(
    ranks: &Ranks,
    s: School,
    t: School,
    len_s: usize,
    len_t: usize,
    n: usize,
    out: &mut [usize],
) {
    let w = n + 1;
    out.fill(0);
    let mut grid = vec![0usize; w * w];
    for i in 0..n {
        let (ps, pt) = (ranks.priority(s, i), ranks.priority(t, i));
        if ps != Ranks::UNRANKED && pt != Ranks::UNRANKED {
            grid[(ps as usize + 1) * w + pt as usize + 1] = 1;
        }
    }
    for x in 1..=len_s {
        for y in 1..=len_t {
            out[x * w + y] =
                grid[x * w + y] + out[(x - 1) * w + y] + out[x * w + y - 1] - out[(x - 1) * w + y - 1];
        }
    }
}
