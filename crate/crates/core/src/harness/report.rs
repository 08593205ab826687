use std::fmt;

use crate::analysis::{
    blocking_pairs, enumerate_envyfree, is_pareto_efficient, justified_envy_students,
    pareto_improvable_students, percent_of_students, BlockingPair,
};
use crate::conditions::{
    check_ergin_acyclicity, check_gmbp, check_mbp_everywhere, check_sequential_mbp,
    SeqMbpCertificate, SimplifiedMarket,
};
use crate::error::Error;
use crate::market::{Allocation, Market};
use crate::mechanisms::{school_da, student_da, ttc, Mechanism};

/// Result of a size-gated check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Gated {
    Holds(bool),
    Skipped(String),
}

impl fmt::Display for Gated {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gated::Holds(true) => write!(f, "yes"),
            Gated::Holds(false) => write!(f, "no"),
            Gated::Skipped(why) => write!(f, "skipped ({why})"),
        }
    }
}

fn gated(r: crate::error::Result<bool>) -> Gated {
    match r {
        Ok(b) => Gated::Holds(b),
        Err(Error::InputTooLarge { detail, .. }) => Gated::Skipped(detail),
        Err(e) => Gated::Skipped(e.to_string()),
    }
}

#[derive(Debug, Clone)]
pub struct CheckReport {
    pub seq_mbp: Option<SeqMbpCertificate>,
    pub gmbp: Option<(SimplifiedMarket, SeqMbpCertificate)>,
    pub mbp_everywhere: Gated,
    pub ergin_acyclic: Gated,
    pub da_efficient: bool,
    pub da_eq_ttc: bool,
    /// Whether the set of envyfree allocations is a singleton: by
    /// enumeration on small markets, otherwise by comparing student- and
    /// school-proposing DA.
    pub envyfree_unique: bool,
}

pub fn check_report(market: &Market) -> CheckReport {
    let da = student_da(market);
    let envyfree_unique = match enumerate_envyfree(market) {
        Ok(set) => set.len() == 1,
        Err(_) => da == school_da(market),
    };
    CheckReport {
        seq_mbp: check_sequential_mbp(market),
        gmbp: check_gmbp(market),
        mbp_everywhere: gated(check_mbp_everywhere(market)),
        ergin_acyclic: gated(check_ergin_acyclicity(market)),
        da_efficient: is_pareto_efficient(market, &da),
        da_eq_ttc: da == ttc(market),
        envyfree_unique,
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn indented(f: &mut fmt::Formatter<'_>, text: &str) -> fmt::Result {
    for line in text.lines() {
        writeln!(f, "    {line}")?;
    }
    Ok(())
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "sequential MBP:          {}", yes_no(self.seq_mbp.is_some()))?;
        if let Some(cert) = &self.seq_mbp {
            indented(f, &cert.to_string())?;
        }
        writeln!(f, "GMBP:                    {}", yes_no(self.gmbp.is_some()))?;
        if let Some((s, cert)) = &self.gmbp {
            writeln!(f, "  simplified in {} round(s):", s.rounds)?;
            indented(f, &s.market.to_string())?;
            indented(f, &cert.to_string())?;
        }
        writeln!(f, "MBP in every submarket:  {}", self.mbp_everywhere)?;
        writeln!(f, "Ergin-acyclic:           {}", self.ergin_acyclic)?;
        writeln!(f, "DA efficient:            {}", yes_no(self.da_efficient))?;
        writeln!(f, "DA = TTC:                {}", yes_no(self.da_eq_ttc))?;
        write!(f, "unique envyfree:         {}", yes_no(self.envyfree_unique))
    }
}

#[derive(Debug, Clone)]
pub struct Diagnosis {
    pub mechanism: Mechanism,
    pub allocation: Allocation,
    pub blocking_pairs: Vec<BlockingPair>,
    pub efficient: bool,
    pub pct_improvable: f64,
    pub pct_justified_envy: f64,
}

pub fn diagnose(market: &Market, mechanism: Mechanism) -> Diagnosis {
    let allocation = mechanism.run(market);
    let n = market.n();
    Diagnosis {
        mechanism,
        blocking_pairs: blocking_pairs(market, &allocation),
        efficient: is_pareto_efficient(market, &allocation),
        pct_improvable: percent_of_students(pareto_improvable_students(market, &allocation).len(), n),
        pct_justified_envy: percent_of_students(justified_envy_students(market, &allocation).len(), n),
        allocation,
    }
}

impl fmt::Display for Diagnosis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "mechanism:  {}", self.mechanism.name())?;
        writeln!(f, "allocation: {}", self.allocation)?;
        if self.blocking_pairs.is_empty() {
            writeln!(f, "blocking pairs: none")?;
        } else {
            writeln!(f, "blocking pairs:")?;
            for bp in &self.blocking_pairs {
                writeln!(f, "  {bp}")?;
            }
        }
        writeln!(f, "pareto efficient: {}", yes_no(self.efficient))?;
        writeln!(f, "students with a pareto improvement: {:.2}%", self.pct_improvable)?;
        write!(f, "students with justified envy: {:.2}%", self.pct_justified_envy)
    }
}
