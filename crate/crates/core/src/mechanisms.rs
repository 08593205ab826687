//! Student- and school-proposing deferred acceptance, top trading cycles and
//! immediate acceptance.
//!
//! All four take a valid [`Market`] and return a feasible, individually
//! rational [`Allocation`]. Proposals are processed in simultaneous rounds.

use std::collections::BinaryHeap;

use crate::market::{Allocation, Assignment, Market, School, Student};

/// Student-proposing deferred acceptance.
///
/// Returns the student-optimal envyfree allocation.
pub fn student_da(market: &Market) -> Allocation {
    let (n, m) = (market.n(), market.m());
    let ranks = market.ranks();
    let mut next = vec![0usize; n];
    // max-heap on priority rank: the worst held student sits on top
    let mut held: Vec<BinaryHeap<(u32, Student)>> = (0..m).map(|_| BinaryHeap::new()).collect();
    let mut free: Vec<Student> = (0..n).collect();
    let mut touched = Vec::with_capacity(m);
    let mut is_touched = vec![false; m];

    while !free.is_empty() {
        for &i in &free {
            if let Some(&s) = market.preferences[i].get(next[i]) {
                next[i] += 1;
                held[s].push((ranks.priority(s, i), i));
                if !is_touched[s] {
                    is_touched[s] = true;
                    touched.push(s);
                }
            }
        }
        free.clear();
        for &s in &touched {
            is_touched[s] = false;
            let q = market.capacities[s] as usize;
            while held[s].len() > q {
                let (_, rejected) = held[s].pop().expect("heap is over capacity");
                free.push(rejected);
            }
        }
        touched.clear();
        free.sort_unstable();
    }

    let mut alloc = Allocation::all_outside(n);
    for (s, students) in held.iter().enumerate() {
        for &(_, i) in students {
            alloc.set(i, Assignment::School(s));
        }
    }
    alloc
}

/// School-proposing deferred acceptance.
///
/// Returns the student-pessimal envyfree allocation.
pub fn school_da(market: &Market) -> Allocation {
    let (n, m) = (market.n(), market.m());
    let ranks = market.ranks();
    let mut next = vec![0usize; m];
    let mut held_count = vec![0u32; m];
    let mut holding: Vec<Option<School>> = vec![None; n];
    let mut offers: Vec<Vec<School>> = vec![Vec::new(); n];
    let mut offered = Vec::new();

    loop {
        for s in 0..m {
            let list = &market.priorities[s];
            while held_count[s] < market.capacities[s] && next[s] < list.len() {
                let i = list[next[s]];
                next[s] += 1;
                held_count[s] += 1;
                if offers[i].is_empty() {
                    offered.push(i);
                }
                offers[i].push(s);
            }
        }
        if offered.is_empty() {
            break;
        }
        for &i in &offered {
            let mut best = holding[i];
            for &s in &offers[i] {
                let better = match best {
                    None => true,
                    Some(b) => ranks.preference(i, s) < ranks.preference(i, b),
                };
                if better {
                    if let Some(b) = best {
                        held_count[b] -= 1;
                    }
                    best = Some(s);
                } else {
                    held_count[s] -= 1;
                }
            }
            holding[i] = best;
            offers[i].clear();
        }
        offered.clear();
    }

    Allocation::new(
        holding
            .into_iter()
            .map(|h| h.map_or(Assignment::Outside, Assignment::School))
            .collect(),
    )
}

/// Top trading cycles with school pointers to their best remaining student.
///
/// Every cycle present in a round is executed in that round. A school with
/// several free seats still points to a single student, and each traversal
/// consumes one seat. Students with no school left are sent outside.
pub fn ttc(market: &Market) -> Allocation {
    let (n, m) = (market.n(), market.m());
    let mut alloc = Allocation::all_outside(n);
    let mut seats: Vec<u32> = market.capacities.clone();
    let mut removed = vec![false; n];
    let mut student_ptr = vec![0usize; n];
    let mut school_ptr = vec![0usize; m];

    // school -> school reached through its pointed-to student
    let mut target = vec![usize::MAX; m];
    let mut live = Vec::with_capacity(m);
    let mut stamp = vec![0usize; m];
    let mut path = Vec::with_capacity(m);

    loop {
        live.clear();
        for s in 0..m {
            target[s] = usize::MAX;
            if seats[s] == 0 {
                continue;
            }
            let list = &market.priorities[s];
            while let Some(&i) = list.get(school_ptr[s]) {
                if removed[i] {
                    school_ptr[s] += 1;
                    continue;
                }
                let prefs = &market.preferences[i];
                while student_ptr[i] < prefs.len() && seats[prefs[student_ptr[i]]] == 0 {
                    student_ptr[i] += 1;
                }
                match prefs.get(student_ptr[i]) {
                    Some(&t) => {
                        target[s] = t;
                        live.push(s);
                        break;
                    }
                    None => {
                        // points to the outside option: trivial cycle
                        removed[i] = true;
                        school_ptr[s] += 1;
                    }
                }
            }
        }
        if live.is_empty() {
            break;
        }

        // Every live school has an out-edge to a live school, so the walk
        // from any start ends on a cycle. Stamps separate walks.
        for s in 0..m {
            stamp[s] = 0;
        }
        let mut cycles: Vec<Vec<School>> = Vec::new();
        for (w, &start) in live.iter().enumerate() {
            if stamp[start] != 0 {
                continue;
            }
            let walk = w + 1;
            path.clear();
            let mut s = start;
            while stamp[s] == 0 {
                stamp[s] = walk;
                path.push(s);
                s = target[s];
            }
            if stamp[s] == walk {
                let from = path.iter().position(|&x| x == s).expect("cycle entry on path");
                cycles.push(path[from..].to_vec());
            }
        }
        debug_assert!(!cycles.is_empty());
        for cycle in cycles {
            for &s in &cycle {
                let i = market.priorities[s][school_ptr[s]];
                let t = target[s];
                alloc.set(i, Assignment::School(t));
                seats[t] -= 1;
                removed[i] = true;
            }
        }
    }
    alloc
}

/// Immediate acceptance (Boston mechanism) on reported preference lists.
///
/// Acceptances are final and consume capacity at once. A student only
/// proposes to schools that still have seats; one whose report runs out is
/// left outside. Reports may name schools that do not rank the student;
/// such proposals are rejected.
pub fn ia(market: &Market, reports: &[Vec<School>]) -> Allocation {
    let (n, m) = (market.n(), market.m());
    debug_assert_eq!(reports.len(), n);
    let ranks = market.ranks();
    let mut seats: Vec<u32> = market.capacities.clone();
    let mut ptr = vec![0usize; n];
    let mut placed = vec![false; n];
    let mut alloc = Allocation::all_outside(n);
    let mut proposals: Vec<Vec<Student>> = vec![Vec::new(); m];

    loop {
        let mut any = false;
        for i in 0..n {
            if placed[i] {
                continue;
            }
            let report = &reports[i];
            while ptr[i] < report.len() && seats[report[ptr[i]]] == 0 {
                ptr[i] += 1;
            }
            if let Some(&s) = report.get(ptr[i]) {
                ptr[i] += 1;
                proposals[s].push(i);
                any = true;
            }
        }
        if !any {
            break;
        }
        for s in 0..m {
            if proposals[s].is_empty() {
                continue;
            }
            let mut eligible: Vec<Student> = proposals[s]
                .drain(..)
                .filter(|&i| ranks.priority(s, i) != crate::market::Ranks::UNRANKED)
                .collect();
            eligible.sort_unstable_by_key(|&i| ranks.priority(s, i));
            for &i in eligible.iter().take(seats[s] as usize) {
                placed[i] = true;
                alloc.set(i, Assignment::School(s));
            }
            seats[s] -= eligible.len().min(seats[s] as usize) as u32;
        }
    }
    alloc
}

/// Immediate acceptance with every student reporting their true list.
pub fn ia_truthful(market: &Market) -> Allocation {
    ia(market, &market.preferences)
}

/// Mechanism names as accepted on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mechanism {
    StudentDa,
    SchoolDa,
    Ttc,
    Ia,
}

impl Mechanism {
    pub const ALL: [Mechanism; 4] = [
        Mechanism::StudentDa,
        Mechanism::SchoolDa,
        Mechanism::Ttc,
        Mechanism::Ia,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mechanism::StudentDa => "student-da",
            Mechanism::SchoolDa => "school-da",
            Mechanism::Ttc => "ttc",
            Mechanism::Ia => "ia",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }

    /// Runs the mechanism on truthful reports.
    pub fn run(self, market: &Market) -> Allocation {
        match self {
            Mechanism::StudentDa => student_da(market),
            Mechanism::SchoolDa => school_da(market),
            Mechanism::Ttc => ttc(market),
            Mechanism::Ia => ia_truthful(market),
        }
    }
}
