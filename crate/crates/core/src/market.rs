//! Market primitives: students, schools, capacities, strict preference and
//! priority lists, allocations, and the market file format.
//!
//! Preference lists hold only the acceptable schools, most preferred first.
//! The outside option sits implicitly after the last entry. A school's
//! priority list holds exactly the students who list that school.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Student = usize;
pub type School = usize;

/// Where a student ends up: a school, or the (implicit) outside option.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Assignment {
    School(School),
    Outside,
}

impl Assignment {
    pub fn school(self) -> Option<School> {
        match self {
            Assignment::School(s) => Some(s),
            Assignment::Outside => None,
        }
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Assignment::School(s) => write!(f, "s{}", s + 1),
            Assignment::Outside => write!(f, "OUTSIDE"),
        }
    }
}

/// A student-indexed assignment vector.
///
/// Feasibility is checked with [`Allocation::is_feasible`] rather than
/// enforced at construction so that brute-force oracles can represent any
/// candidate mapping.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Allocation(Vec<Assignment>);

impl Allocation {
    pub fn new(assignments: Vec<Assignment>) -> Self {
        Allocation(assignments)
    }

    pub fn all_outside(n: usize) -> Self {
        Allocation(vec![Assignment::Outside; n])
    }

    /// Builds an allocation from `(student, school)` pairs; everyone else is
    /// left outside.
    pub fn from_pairs(n: usize, pairs: &[(Student, School)]) -> Self {
        let mut a = Self::all_outside(n);
        for &(i, s) in pairs {
            a.0[i] = Assignment::School(s);
        }
        a
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, student: Student) -> Assignment {
        self.0[student]
    }

    pub fn set(&mut self, student: Student, to: Assignment) {
        self.0[student] = to;
    }

    pub fn as_slice(&self) -> &[Assignment] {
        &self.0
    }

    /// Seats taken at each of `m` schools.
    pub fn occupancy(&self, m: usize) -> Vec<u32> {
        let mut occ = vec![0u32; m];
        for a in &self.0 {
            if let Assignment::School(s) = *a {
                occ[s] += 1;
            }
        }
        occ
    }

    pub fn is_feasible(&self, market: &Market) -> bool {
        if self.0.len() != market.n() {
            return false;
        }
        if self.0.iter().any(|a| matches!(a, Assignment::School(s) if *s >= market.m())) {
            return false;
        }
        self.occupancy(market.m())
            .iter()
            .zip(&market.capacities)
            .all(|(occ, cap)| occ <= cap)
    }

    /// Every student is outside or at a school on their list.
    pub fn is_individually_rational(&self, market: &Market) -> bool {
        self.0.iter().enumerate().all(|(i, a)| match a {
            Assignment::Outside => true,
            Assignment::School(s) => market.preferences[i].contains(s),
        })
    }

    /// Sorted `(student, school)` pairs of placed students.
    pub fn pairs(&self) -> Vec<(Student, School)> {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(i, a)| a.school().map(|s| (i, s)))
            .collect()
    }
}

impl fmt::Display for Allocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "(i{},{})", i + 1, a)?;
        }
        write!(f, "}}")
    }
}

/// A school-choice market with strict preferences and priorities.
///
/// Fields are public so that malformed instances can be represented and
/// reported by [`validate_market`]; [`Market::new`] only returns valid ones.
/// Mechanisms and checkers assume a valid market.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Market {
    pub capacities: Vec<u32>,
    pub preferences: Vec<Vec<School>>,
    pub priorities: Vec<Vec<Student>>,
}

impl Market {
    pub fn new(
        capacities: Vec<u32>,
        preferences: Vec<Vec<School>>,
        priorities: Vec<Vec<Student>>,
    ) -> Result<Self> {
        let market = Market {
            capacities,
            preferences,
            priorities,
        };
        let report = validate_market(&market);
        if report.is_ok() {
            Ok(market)
        } else {
            Err(Error::InvalidMarket(report))
        }
    }

    /// Builds a market from full priority orderings, keeping on each school's
    /// list only the students who find it acceptable.
    pub fn with_raw_priorities(
        capacities: Vec<u32>,
        preferences: Vec<Vec<School>>,
        raw_priorities: &[Vec<Student>],
    ) -> Result<Self> {
        let priorities = restrict_priorities(raw_priorities, &preferences);
        Market::new(capacities, preferences, priorities)
    }

    pub fn empty() -> Self {
        Market {
            capacities: Vec::new(),
            preferences: Vec::new(),
            priorities: Vec::new(),
        }
    }

    /// Number of students.
    pub fn n(&self) -> usize {
        self.preferences.len()
    }

    /// Number of schools.
    pub fn m(&self) -> usize {
        self.capacities.len()
    }

    pub fn ranks(&self) -> Ranks {
        Ranks::new(self)
    }
}

impl fmt::Display for Market {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows = self.n().max(self.m());
        for r in 0..rows {
            let left = match self.preferences.get(r) {
                Some(list) => format!(
                    "i{}: {}",
                    r + 1,
                    list.iter()
                        .map(|s| format!("s{}", s + 1))
                        .collect::<Vec<_>>()
                        .join(" ")
                ),
                None => String::new(),
            };
            let right = match self.priorities.get(r) {
                Some(list) => format!(
                    "s{} (q={}): {}",
                    r + 1,
                    self.capacities[r],
                    list.iter()
                        .map(|i| format!("i{}", i + 1))
                        .collect::<Vec<_>>()
                        .join(" ")
                ),
                None => String::new(),
            };
            writeln!(f, "  {left:<28}{right}")?;
        }
        Ok(())
    }
}

/// Dense rank lookup tables for a market. Lower rank is better;
/// [`Ranks::UNRANKED`] marks an absent entry.
#[derive(Debug, Clone)]
pub struct Ranks {
    n: usize,
    m: usize,
    pref: Vec<u32>,
    prio: Vec<u32>,
    pref_len: Vec<u32>,
}

impl Ranks {
    pub const UNRANKED: u32 = u32::MAX;

    pub fn new(market: &Market) -> Self {
        let (n, m) = (market.n(), market.m());
        let mut pref = vec![Self::UNRANKED; n * m];
        for (i, list) in market.preferences.iter().enumerate() {
            for (r, &s) in list.iter().enumerate() {
                pref[i * m + s] = r as u32;
            }
        }
        let mut prio = vec![Self::UNRANKED; m * n];
        for (s, list) in market.priorities.iter().enumerate() {
            for (r, &i) in list.iter().enumerate() {
                prio[s * n + i] = r as u32;
            }
        }
        let pref_len = market.preferences.iter().map(|l| l.len() as u32).collect();
        Ranks {
            n,
            m,
            pref,
            prio,
            pref_len,
        }
    }

    /// Position of `school` on `student`'s list, if listed.
    pub fn preference(&self, student: Student, school: School) -> u32 {
        self.pref[student * self.m + school]
    }

    /// Position of `student` on `school`'s priority list, if listed.
    pub fn priority(&self, school: School, student: Student) -> u32 {
        self.prio[school * self.n + student]
    }

    /// Total order over assignments for one student: listed schools by
    /// position, then the outside option, then unlisted schools.
    pub fn assignment_rank(&self, student: Student, a: Assignment) -> u32 {
        let len = self.pref_len[student];
        match a {
            Assignment::Outside => len,
            Assignment::School(s) => match self.preference(student, s) {
                Self::UNRANKED => len + 1,
                r => r,
            },
        }
    }

    /// `student` strictly prefers `a` to `b`.
    pub fn prefers(&self, student: Student, a: Assignment, b: Assignment) -> bool {
        self.assignment_rank(student, a) < self.assignment_rank(student, b)
    }

    /// `school` ranks `i` strictly above `j`. Students missing from the list
    /// rank below every listed student.
    pub fn school_prefers(&self, school: School, i: Student, j: Student) -> bool {
        self.priority(school, i) < self.priority(school, j)
    }
}

/// One broken market invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    DimensionMismatch(String),
    StudentOutOfRange { school: School, student: Student },
    SchoolOutOfRange { student: Student, school: School },
    DuplicateInPreferences { student: Student, school: School },
    DuplicateInPriorities { school: School, student: Student },
    ZeroCapacity { school: School },
    PriorityAcceptabilityMismatch { school: School, student: Student },
}

impl Violation {
    /// Violations that make a file unreadable rather than semantically wrong.
    pub fn is_structural(&self) -> bool {
        !matches!(
            self,
            Violation::ZeroCapacity { .. } | Violation::PriorityAcceptabilityMismatch { .. }
        )
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DimensionMismatch(msg) => write!(f, "dimension mismatch: {msg}"),
            Violation::StudentOutOfRange { school, student } => {
                write!(f, "out of range: student {student} on priority list of school {school}")
            }
            Violation::SchoolOutOfRange { student, school } => {
                write!(f, "out of range: school {school} on preference list of student {student}")
            }
            Violation::DuplicateInPreferences { student, school } => {
                write!(f, "duplicate entry: school {school} twice in preferences of student {student}")
            }
            Violation::DuplicateInPriorities { school, student } => {
                write!(f, "duplicate entry: student {student} twice in priorities of school {school}")
            }
            Violation::ZeroCapacity { school } => write!(f, "zero capacity at school {school}"),
            Violation::PriorityAcceptabilityMismatch { school, student } => write!(
                f,
                "priority/acceptability mismatch: school {school}, student {student}"
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "OK");
        }
        let msgs: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", msgs.join("; "))
    }
}

/// Checks every market invariant and reports all violations found.
pub fn validate_market(market: &Market) -> ValidationReport {
    let (n, m) = (market.n(), market.m());
    let mut violations = Vec::new();

    if market.priorities.len() != m {
        violations.push(Violation::DimensionMismatch(format!(
            "{} capacities but {} priority lists",
            m,
            market.priorities.len()
        )));
        return ValidationReport { violations };
    }
    for (s, &q) in market.capacities.iter().enumerate() {
        if q == 0 {
            violations.push(Violation::ZeroCapacity { school: s });
        }
    }

    // listed[i * m + s] <=> student i finds school s acceptable
    let mut listed = vec![false; n * m];
    for (i, list) in market.preferences.iter().enumerate() {
        for &s in list {
            if s >= m {
                violations.push(Violation::SchoolOutOfRange { student: i, school: s });
            } else if listed[i * m + s] {
                violations.push(Violation::DuplicateInPreferences { student: i, school: s });
            } else {
                listed[i * m + s] = true;
            }
        }
    }

    for (s, list) in market.priorities.iter().enumerate() {
        let mut seen = HashSet::with_capacity(list.len());
        for &i in list {
            if i >= n {
                violations.push(Violation::StudentOutOfRange { school: s, student: i });
            } else if !seen.insert(i) {
                violations.push(Violation::DuplicateInPriorities { school: s, student: i });
            } else if !listed[i * m + s] {
                violations.push(Violation::PriorityAcceptabilityMismatch { school: s, student: i });
            }
        }
        for i in 0..n {
            if listed[i * m + s] && !seen.contains(&i) {
                violations.push(Violation::PriorityAcceptabilityMismatch { school: s, student: i });
            }
        }
    }
    ValidationReport { violations }
}

/// Filters each school's full priority ordering down to the students who list
/// that school, preserving relative order.
pub fn restrict_priorities(raw: &[Vec<Student>], preferences: &[Vec<School>]) -> Vec<Vec<Student>> {
    let m = raw.len();
    let mut listed = vec![false; preferences.len() * m];
    for (i, list) in preferences.iter().enumerate() {
        for &s in list {
            if s < m {
                listed[i * m + s] = true;
            }
        }
    }
    raw.iter()
        .enumerate()
        .map(|(s, order)| {
            order
                .iter()
                .copied()
                .filter(|&i| i < preferences.len() && listed[i * m + s])
                .collect()
        })
        .collect()
}

/// Student utilities `u` and priority scores `pi`, both `n x m`, row-major
/// by student.
#[derive(Debug, Clone, PartialEq)]
pub struct CardinalMatrices {
    n: usize,
    m: usize,
    u: Vec<f64>,
    pi: Vec<f64>,
}

impl CardinalMatrices {
    pub fn new(n: usize, m: usize, u: Vec<f64>, pi: Vec<f64>) -> Result<Self> {
        if u.len() != n * m || pi.len() != n * m {
            return Err(Error::InvalidParams(format!(
                "cardinal matrices must be {n}x{m}; got {} and {} entries",
                u.len(),
                pi.len()
            )));
        }
        Ok(CardinalMatrices { n, m, u, pi })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn utility(&self, student: Student, school: School) -> f64 {
        self.u[student * self.m + school]
    }

    pub fn priority_score(&self, student: Student, school: School) -> f64 {
        self.pi[student * self.m + school]
    }
}

/// Which schools a student finds acceptable when converting cardinal data.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum AcceptabilityRule {
    /// Every school is acceptable.
    #[default]
    All,
}

/// Converts utilities and priority scores to strict ordinal lists. Higher
/// values rank first; exact ties go to the lower index.
pub fn ordinal_from_cardinal(
    c: &CardinalMatrices,
    rule: AcceptabilityRule,
    capacities: Vec<u32>,
) -> Result<Market> {
    let (n, m) = (c.n, c.m);
    if capacities.len() != m {
        return Err(Error::InvalidParams(format!(
            "expected {m} capacities, got {}",
            capacities.len()
        )));
    }
    let preferences: Vec<Vec<School>> = (0..n)
        .map(|i| {
            let row = &c.u[i * m..(i + 1) * m];
            let mut order: Vec<School> = match rule {
                AcceptabilityRule::All => (0..m).collect(),
            };
            order.sort_unstable_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
            order
        })
        .collect();

    let mut column = vec![0.0f64; n];
    let raw: Vec<Vec<Student>> = (0..m)
        .map(|s| {
            for (i, v) in column.iter_mut().enumerate() {
                *v = c.pi[i * m + s];
            }
            let mut order: Vec<Student> = (0..n).collect();
            order.sort_unstable_by(|&a, &b| column[b].total_cmp(&column[a]).then(a.cmp(&b)));
            order
        })
        .collect();

    let priorities = match rule {
        AcceptabilityRule::All => raw,
    };
    Ok(Market {
        capacities,
        preferences,
        priorities,
    })
}

/// On-disk representation. Exactly one of `priorities` and `raw_priorities`
/// must be present; `raw_priorities` are full orderings that get restricted
/// to acceptable students on load.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MarketFile {
    n: usize,
    m: usize,
    capacities: Vec<u32>,
    preferences: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    priorities: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    raw_priorities: Option<Vec<Vec<usize>>>,
}

pub fn market_from_json(text: &str) -> Result<Market> {
    let file: MarketFile =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if file.capacities.len() != file.m {
        return Err(Error::Parse(format!(
            "m = {} but {} capacities given",
            file.m,
            file.capacities.len()
        )));
    }
    if file.preferences.len() != file.n {
        return Err(Error::Parse(format!(
            "n = {} but {} preference lists given",
            file.n,
            file.preferences.len()
        )));
    }
    let priorities = match (file.priorities, file.raw_priorities) {
        (Some(p), None) => p,
        (None, Some(raw)) => {
            if raw.len() != file.m {
                return Err(Error::Parse(format!(
                    "m = {} but {} raw priority lists given",
                    file.m,
                    raw.len()
                )));
            }
            let full = Market {
                capacities: file.capacities.clone(),
                preferences: vec![(0..file.m).collect(); file.n],
                priorities: raw.clone(),
            };
            let report = validate_market(&full);
            if !report.is_ok() {
                return Err(Error::Parse(format!("raw_priorities must be strict orderings over all students: {report}")));
            }
            restrict_priorities(&raw, &file.preferences)
        }
        (Some(_), Some(_)) => {
            return Err(Error::Parse(
                "give either \"priorities\" or \"raw_priorities\", not both".into(),
            ))
        }
        (None, None) => return Err(Error::Parse("missing \"priorities\"".into())),
    };
    let market = Market {
        capacities: file.capacities,
        preferences: file.preferences,
        priorities,
    };
    let report = validate_market(&market);
    if report.is_ok() {
        Ok(market)
    } else if report.violations.iter().any(Violation::is_structural) {
        Err(Error::Parse(report.to_string()))
    } else {
        Err(Error::InvalidMarket(report))
    }
}

pub fn market_to_json(market: &Market) -> String {
    let file = MarketFile {
        n: market.n(),
        m: market.m(),
        capacities: market.capacities.clone(),
        preferences: market.preferences.clone(),
        priorities: Some(market.priorities.clone()),
        raw_priorities: None,
    };
    let mut text = serde_json::to_string(&file).expect("market serialization is infallible");
    text.push('\n');
    text
}

pub fn read_market(path: impl AsRef<Path>) -> Result<Market> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    market_from_json(&text)
}

pub fn write_market(market: &Market, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, market_to_json(market)).map_err(|e| Error::io(path, e))
}
