use std::fmt;

use crate::analysis::{envyfree_unique, is_pareto_efficient};
use crate::conditions::{check_gmbp, check_sequential_mbp, simplify, SeqMbpCertificate};
use crate::fixtures::{example1, example2, example3};
use crate::market::{Allocation, Assignment, Market, School};
use crate::mechanisms::{ia_truthful, school_da, student_da, ttc};

/// Known answers for one reference market.
#[derive(Debug, Clone)]
pub struct Expected {
    pub student_da: Allocation,
    pub school_da: Allocation,
    pub ttc: Allocation,
    pub ia: Allocation,
    pub simplified_preferences: Vec<Vec<School>>,
    pub seq_mbp: bool,
    pub gmbp: bool,
    pub da_efficient: bool,
    pub da_eq_ttc: bool,
    pub envyfree_unique: bool,
    /// A hand-written matching order that must pass verification.
    pub printed_certificate: Option<SeqMbpCertificate>,
}

#[derive(Debug, Clone)]
pub struct ExampleFixture {
    pub name: String,
    pub market: Market,
    pub expected: Expected,
}

pub fn golden_fixtures() -> Vec<ExampleFixture> {
    let diag3 = Allocation::from_pairs(3, &[(0, 0), (1, 1), (2, 2)]);
    let e2_alloc = Allocation::from_pairs(4, &[(0, 1), (1, 0), (2, 0), (3, 2)]);
    let e3_da = Allocation::from_pairs(3, &[(0, 2), (1, 1), (2, 0)]);
    let e2 = example2();
    let e3 = example3();
    vec![
        ExampleFixture {
            name: "example 1".into(),
            market: example1(),
            expected: Expected {
                student_da: diag3.clone(),
                school_da: diag3.clone(),
                ttc: diag3.clone(),
                ia: diag3.clone(),
                simplified_preferences: vec![vec![0], vec![1], vec![2]],
                seq_mbp: false,
                gmbp: true,
                da_efficient: true,
                da_eq_ttc: true,
                envyfree_unique: true,
                printed_certificate: None,
            },
        },
        ExampleFixture {
            name: "example 2".into(),
            expected: Expected {
                student_da: e2_alloc.clone(),
                school_da: e2_alloc.clone(),
                ttc: e2_alloc.clone(),
                ia: e2_alloc,
                simplified_preferences: vec![vec![1], vec![0], vec![0], vec![0, 1, 2]],
                seq_mbp: true,
                gmbp: true,
                da_efficient: true,
                da_eq_ttc: true,
                envyfree_unique: true,
                printed_certificate: Some(SeqMbpCertificate {
                    steps: vec![
                        (1, Assignment::School(0)),
                        (0, Assignment::School(1)),
                        (2, Assignment::School(0)),
                        (3, Assignment::School(2)),
                    ],
                    initial_capacities: e2.capacities.clone(),
                }),
            },
            market: e2,
        },
        ExampleFixture {
            name: "example 3".into(),
            expected: Expected {
                student_da: e3_da.clone(),
                school_da: diag3,
                ttc: e3_da.clone(),
                ia: e3_da,
                simplified_preferences: e3.preferences.clone(),
                seq_mbp: false,
                gmbp: false,
                da_efficient: true,
                da_eq_ttc: true,
                envyfree_unique: false,
                printed_certificate: None,
            },
            market: e3,
        },
    ]
}

/// Line-per-student diff, `-` for expected and `+` for actual.
pub fn allocation_diff(expected: &Allocation, actual: &Allocation) -> String {
    let mut out = String::from("--- expected\n+++ actual\n");
    for i in 0..expected.len().max(actual.len()) {
        let show = |a: &Allocation| {
            (i < a.len())
                .then(|| a.get(i).to_string())
                .unwrap_or_else(|| "<missing>".into())
        };
        let (e, a) = (show(expected), show(actual));
        if e == a {
            out.push_str(&format!(" i{}: {e}\n", i + 1));
        } else {
            out.push_str(&format!("-i{}: {e}\n+i{}: {a}\n", i + 1, i + 1));
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct CheckLine {
    pub what: String,
    pub passed: bool,
    pub detail: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ExampleOutcome {
    pub name: String,
    pub checks: Vec<CheckLine>,
    /// Rendered certificates, for display.
    pub certificates: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ExamplesReport {
    pub examples: Vec<ExampleOutcome>,
}

impl ExamplesReport {
    pub fn all_passed(&self) -> bool {
        self.examples.iter().all(|e| e.checks.iter().all(|c| c.passed))
    }

    pub fn failures(&self) -> usize {
        self.examples
            .iter()
            .flat_map(|e| &e.checks)
            .filter(|c| !c.passed)
            .count()
    }
}

impl fmt::Display for ExamplesReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for ex in &self.examples {
            writeln!(f, "{}", ex.name)?;
            for c in &ex.checks {
                writeln!(f, "  {} {}", if c.passed { "ok  " } else { "FAIL" }, c.what)?;
                if let Some(d) = &c.detail {
                    for line in d.lines() {
                        writeln!(f, "       {line}")?;
                    }
                }
            }
            for cert in &ex.certificates {
                for line in cert.lines() {
                    writeln!(f, "  {line}")?;
                }
            }
        }
        let failures = self.failures();
        if failures == 0 {
            write!(f, "all examples match")
        } else {
            write!(f, "{failures} check(s) failed")
        }
    }
}

fn alloc_check(what: &str, expected: &Allocation, actual: &Allocation) -> CheckLine {
    let passed = expected == actual;
    CheckLine {
        what: format!("{what} = {actual}"),
        passed,
        detail: (!passed).then(|| allocation_diff(expected, actual)),
    }
}

fn flag_check(what: &str, expected: bool, actual: bool) -> CheckLine {
    CheckLine {
        what: format!("{what}: {actual}"),
        passed: expected == actual,
        detail: (expected != actual).then(|| format!("expected {expected}")),
    }
}

fn run_one(fx: &ExampleFixture) -> ExampleOutcome {
    let market = &fx.market;
    let exp = &fx.expected;
    let da = student_da(market);
    let mut checks = vec![
        alloc_check("student-proposing DA", &exp.student_da, &da),
        alloc_check("school-proposing DA", &exp.school_da, &school_da(market)),
        alloc_check("TTC", &exp.ttc, &ttc(market)),
        alloc_check("IA (truthful)", &exp.ia, &ia_truthful(market)),
    ];
    let mut certificates = Vec::new();

    let simplified = simplify(market);
    let same = simplified.market.preferences == exp.simplified_preferences;
    checks.push(CheckLine {
        what: format!("simplification ({} round(s))", simplified.rounds),
        passed: same,
        detail: (!same).then(|| {
            format!(
                "expected preferences {:?}, got {:?}",
                exp.simplified_preferences, simplified.market.preferences
            )
        }),
    });

    let seq = check_sequential_mbp(market);
    checks.push(flag_check("sequential MBP", exp.seq_mbp, seq.is_some()));
    if let Some(cert) = &seq {
        let ok = cert.verify(market);
        checks.push(CheckLine {
            what: "sequential MBP certificate verifies".into(),
            passed: ok.is_ok(),
            detail: ok.err(),
        });
        certificates.push(format!("sequential MBP order:\n{cert}"));
    }
    let gmbp = check_gmbp(market);
    checks.push(flag_check("GMBP", exp.gmbp, gmbp.is_some()));
    if let Some((s, cert)) = &gmbp {
        let ok = cert.verify(&s.market);
        checks.push(CheckLine {
            what: "GMBP certificate verifies on the simplified market".into(),
            passed: ok.is_ok(),
            detail: ok.err(),
        });
        certificates.push(format!("GMBP order:\n{cert}"));
    }
    if let Some(printed) = &exp.printed_certificate {
        let ok = printed.verify(market);
        checks.push(CheckLine {
            what: "reference matching order verifies".into(),
            passed: ok.is_ok(),
            detail: ok.err(),
        });
        let trace: Vec<String> = printed
            .remaining_capacity_trace()
            .iter()
            .map(|r| format!("{r:?}"))
            .collect();
        certificates.push(format!(
            "reference order:\n{printed}\nremaining seats before each step: {}",
            trace.join(" ")
        ));
    }

    checks.push(flag_check("DA efficient", exp.da_efficient, is_pareto_efficient(market, &da)));
    checks.push(flag_check("DA = TTC", exp.da_eq_ttc, da == ttc(market)));
    checks.push(flag_check(
        "unique envyfree allocation",
        exp.envyfree_unique,
        envyfree_unique(market),
    ));

    ExampleOutcome {
        name: fx.name.clone(),
        checks,
        certificates,
    }
}

pub fn run_examples_with(fixtures: &[ExampleFixture]) -> ExamplesReport {
    ExamplesReport {
        examples: fixtures.iter().map(run_one).collect(),
    }
}

pub fn run_examples() -> ExamplesReport {
    run_examples_with(&golden_fixtures())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_examples_pass() {
        let report = run_examples();
        assert!(report.all_passed(), "{report}");
    }

    #[test]
    fn corrupted_fixture_fails_with_diff() {
        let mut fixtures = golden_fixtures();
        fixtures[0].expected.student_da = Allocation::from_pairs(3, &[(0, 1), (1, 0), (2, 2)]);
        let report = run_examples_with(&fixtures);
        assert!(!report.all_passed());
        assert_eq!(report.failures(), 1);
        let text = report.to_string();
        assert!(text.contains("-i1: s2\n"), "{text}");
        assert!(text.contains("+i1: s1\n"), "{text}");
    }

    #[test]
    fn diff_marks_only_changed_students() {
        let a = Allocation::from_pairs(2, &[(0, 0)]);
        let b = Allocation::from_pairs(2, &[(0, 0), (1, 1)]);
        assert_eq!(
            allocation_diff(&a, &b),
            "--- expected\n+++ actual\n i1: s1\n-i2: OUTSIDE\n+i2: s2\n"
        );
    }
}
