//! Random market generators and brute-force oracles shared by the
//! integration tests. The oracles are written from the definitions and do
//! not call into the library's analysis code.

#![allow(dead_code)]

use std::collections::BTreeSet;

use mbp_core::market::{restrict_priorities, Allocation, Assignment, Market};
use mbp_core::simgen::{build_market, draw, CardinalParams};
use rand::seq::SliceRandom;
use rand::Rng;

pub use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniformly sized random market: each student lists a random subset of
/// schools in random order, priorities are random orders restricted to
/// applicants.
pub fn random_market(rng: &mut impl Rng, max_n: usize, max_m: usize, max_q: u32) -> Market {
    let n = rng.gen_range(1..=max_n);
    let m = rng.gen_range(1..=max_m);
    let capacities: Vec<u32> = (0..m).map(|_| rng.gen_range(1..=max_q)).collect();
    let preferences: Vec<Vec<usize>> = (0..n)
        .map(|_| {
            let mut schools: Vec<usize> = (0..m).collect();
            schools.shuffle(rng);
            schools.truncate(rng.gen_range(0..=m));
            schools
        })
        .collect();
    let raw: Vec<Vec<usize>> = (0..m)
        .map(|_| {
            let mut students: Vec<usize> = (0..n).collect();
            students.shuffle(rng);
            students
        })
        .collect();
    let priorities = restrict_priorities(&raw, &preferences);
    Market::new(capacities, preferences, priorities).expect("generated market is valid")
}

/// Within the brute-force gates (n <= 6, m <= 4, q <= 2).
pub fn tiny_market(rng: &mut impl Rng) -> Market {
    random_market(rng, 6, 4, 2)
}

/// Cardinal-model market with random parameters.
pub fn cardinal_market(rng: &mut impl Rng, max_n: usize, max_m: usize) -> Market {
    let unit = |rng: &mut dyn rand::RngCore| -> f64 {
        // hit the grid edges often, they are the structured cases
        match rng.gen_range(0..4) {
            0 => 0.0,
            1 => 1.0,
            _ => rng.gen::<f64>(),
        }
    };
    let n = rng.gen_range(1..=max_n);
    let m = rng.gen_range(1..=max_m);
    let params = CardinalParams {
        lambda: unit(rng),
        delta: unit(rng),
        alpha: unit(rng),
        beta: unit(rng),
        n,
        m,
        q: rng.gen_range(1..=(n as u32).div_ceil(m as u32).max(1) + 1),
    };
    build_market(&params, &draw(&params, rng.gen())).expect("cardinal market")
}

/// Alternates ordinal and cardinal markets up to `n = 50`, `m = 10`.
pub fn mixed_market(rng: &mut impl Rng, k: usize) -> Market {
    if k % 2 == 0 {
        random_market(rng, 50, 10, 6)
    } else {
        cardinal_market(rng, 50, 10)
    }
}

/// Ordinal rank of an assignment for a student: list position, then the
/// outside option, then any unlisted school.
pub fn rank(market: &Market, i: usize, a: Assignment) -> usize {
    let list = &market.preferences[i];
    match a {
        Assignment::Outside => list.len(),
        Assignment::School(s) => list.iter().position(|&t| t == s).unwrap_or(list.len() + 1),
    }
}

/// Every mapping of students to schools or outside that respects capacity.
pub fn all_feasible(market: &Market) -> Vec<Allocation> {
    fn go(market: &Market, i: usize, cur: &mut Vec<Assignment>, load: &mut [u32], out: &mut Vec<Allocation>) {
        if i == market.n() {
            out.push(Allocation::new(cur.clone()));
            return;
        }
        cur.push(Assignment::Outside);
        go(market, i + 1, cur, load, out);
        cur.pop();
        for s in 0..market.m() {
            if load[s] < market.capacities[s] {
                load[s] += 1;
                cur.push(Assignment::School(s));
                go(market, i + 1, cur, load, out);
                cur.pop();
                load[s] -= 1;
            }
        }
    }
    let mut out = Vec::new();
    go(market, 0, &mut Vec::new(), &mut vec![0; market.m()], &mut out);
    out
}

/// `nu` Pareto-dominates `mu`.
pub fn dominates(market: &Market, nu: &Allocation, mu: &Allocation) -> bool {
    let mut strict = false;
    for i in 0..market.n() {
        let (a, b) = (rank(market, i, nu.get(i)), rank(market, i, mu.get(i)));
        if a > b {
            return false;
        }
        strict |= a < b;
    }
    strict
}

pub fn brute_pareto_efficient(market: &Market, mu: &Allocation) -> bool {
    !all_feasible(market).iter().any(|nu| dominates(market, nu, mu))
}

/// Students who are strictly better off in some allocation that
/// Pareto-dominates `mu`.
pub fn brute_improvable(market: &Market, mu: &Allocation) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for nu in all_feasible(market) {
        if dominates(market, &nu, mu) {
            for i in 0..market.n() {
                if rank(market, i, nu.get(i)) < rank(market, i, mu.get(i)) {
                    out.insert(i);
                }
            }
        }
    }
    out
}

/// No student prefers a school that has a free seat or admitted someone
/// they outrank; nobody sits at a school they did not list.
pub fn brute_envyfree(market: &Market, mu: &Allocation) -> bool {
    let n = market.n();
    for i in 0..n {
        let mine = rank(market, i, mu.get(i));
        if mine > market.preferences[i].len() {
            return false;
        }
        for &s in &market.preferences[i][..mine.min(market.preferences[i].len())] {
            let occupants: Vec<usize> = (0..n).filter(|&j| mu.get(j) == Assignment::School(s)).collect();
            if (occupants.len() as u32) < market.capacities[s] {
                return false;
            }
            let pos = |x: usize| market.priorities[s].iter().position(|&y| y == x);
            let me = pos(i).expect("i lists s");
            if occupants.iter().any(|&j| pos(j).map_or(true, |pj| pj > me)) {
                return false;
            }
        }
    }
    true
}

pub fn brute_envyfree_set(market: &Market) -> BTreeSet<Allocation> {
    all_feasible(market)
        .into_iter()
        .filter(|mu| brute_envyfree(market, mu))
        .collect()
}

/// Whether some ordering of students satisfies the sequential condition,
/// by depth-first search over every order. Students whose acceptable
/// schools are all full may be sent outside at any point.
pub fn brute_sequential_mbp(market: &Market) -> bool {
    fn step(market: &Market, remaining: &mut Vec<bool>, seats: &mut Vec<u32>, left: usize) -> bool {
        if left == 0 {
            return true;
        }
        for i in 0..market.n() {
            if !remaining[i] {
                continue;
            }
            let best = market.preferences[i].iter().copied().find(|&s| seats[s] > 0);
            let ok = match best {
                None => true,
                Some(s) => {
                    let ahead = market.priorities[s]
                        .iter()
                        .take_while(|&&j| j != i)
                        .filter(|&&j| remaining[j])
                        .count();
                    ahead < seats[s] as usize
                }
            };
            if !ok {
                continue;
            }
            remaining[i] = false;
            if let Some(s) = best {
                seats[s] -= 1;
            }
            let found = step(market, remaining, seats, left - 1);
            if let Some(s) = best {
                seats[s] += 1;
            }
            remaining[i] = true;
            if found {
                return true;
            }
        }
        false
    }
    step(market, &mut vec![true; market.n()], &mut market.capacities.clone(), market.n())
}

/// A random feasible allocation, not necessarily individually rational.
pub fn random_feasible_allocation(rng: &mut impl Rng, market: &Market) -> Allocation {
    let mut load = vec![0u32; market.m()];
    let mut out = Vec::with_capacity(market.n());
    for _ in 0..market.n() {
        let open: Vec<usize> = (0..market.m()).filter(|&s| load[s] < market.capacities[s]).collect();
        if open.is_empty() || rng.gen_bool(0.25) {
            out.push(Assignment::Outside);
        } else {
            let s = *open.choose(rng).expect("nonempty");
            load[s] += 1;
            out.push(Assignment::School(s));
        }
    }
    Allocation::new(out)
}

/// The sequential greedy with a fixed scan order: students sent outside
/// when nothing is left for them, otherwise the first student in `order`
/// who is within the remaining seats at their best available school.
pub fn greedy_sequential_in_order(market: &Market, order: &[usize]) -> bool {
    let n = market.n();
    let mut remaining = vec![true; n];
    let mut seats = market.capacities.clone();
    let mut left = n;
    while left > 0 {
        let mut progressed = false;
        for &i in order {
            if remaining[i] && !market.preferences[i].iter().any(|&s| seats[s] > 0) {
                remaining[i] = false;
                left -= 1;
                progressed = true;
            }
        }
        if left == 0 {
            break;
        }
        let pick = order.iter().copied().find(|&i| {
            if !remaining[i] {
                return false;
            }
            let s = market.preferences[i].iter().copied().find(|&s| seats[s] > 0).expect("has a school");
            let ahead = market.priorities[s]
                .iter()
                .take_while(|&&j| j != i)
                .filter(|&&j| remaining[j])
                .count();
            ahead < seats[s] as usize
        });
        match pick {
            Some(i) => {
                let s = market.preferences[i].iter().copied().find(|&s| seats[s] > 0).expect("has a school");
                seats[s] -= 1;
                remaining[i] = false;
                left -= 1;
            }
            None if !progressed => return false,
            None => {}
        }
    }
    true
}

pub fn shuffled(rng: &mut impl Rng, n: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).collect();
    v.shuffle(rng);
    v
}
