use std::fmt;
use std::str::FromStr;

use lipdyn::lipschitz::{
    Classification, Criterion, LipschitzEstimate, OneSidedSlopes, SmoothCheck,
};
use serde::{Serialize, Serializer};

/// A double written with 17 significant digits. Non-finite values become
/// `null` in JSON.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_finite() {
            write!(f, "{:.16e}", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        serde_json::Number::from_str(&self.to_string())
            .map_err(serde::ser::Error::custom)?
            .serialize(s)
    }
}

fn nums(v: &[f64]) -> Vec<Num> {
    v.iter().copied().map(Num).collect()
}

#[derive(Debug, Serialize)]
pub struct Record {
    pub index: usize,
    pub x: Num,
}

#[derive(Debug, Serialize)]
pub struct OrbitReport {
    pub command: &'static str,
    pub map: String,
    pub x0: Num,
    pub burn_in: usize,
    pub iters: usize,
    pub escaped: bool,
    pub records: Vec<Record>,
}

#[derive(Debug, Serialize)]
pub struct Evidence {
    pub value: Num,
    pub basis: &'static str,
}

impl From<Criterion> for Evidence {
    fn from(c: Criterion) -> Self {
        Evidence {
            value: Num(c.value),
            basis: c.basis.as_str(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Estimate {
    pub c_hat: Num,
    pub r_hat: Num,
    pub deriv_sup: Option<Num>,
    pub deriv_inf: Option<Num>,
    pub pairs_used: usize,
}

impl From<LipschitzEstimate> for Estimate {
    fn from(e: LipschitzEstimate) -> Self {
        Estimate {
            c_hat: Num(e.c_hat),
            r_hat: Num(e.r_hat),
            deriv_sup: e.deriv_sup.map(Num),
            deriv_inf: e.deriv_inf.map(Num),
            pairs_used: e.pairs_used,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct OneSided {
    pub left: Num,
    pub right: Num,
}

impl From<OneSidedSlopes> for OneSided {
    fn from(s: OneSidedSlopes) -> Self {
        OneSided {
            left: Num(s.left),
            right: Num(s.right),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Oracle {
    pub abs_derivative: Num,
    pub verdict: &'static str,
}

impl From<SmoothCheck> for Oracle {
    fn from(s: SmoothCheck) -> Self {
        Oracle {
            abs_derivative: Num(s.abs_derivative),
            verdict: s.verdict.as_str(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct PointReport {
    pub p: Num,
    pub period: usize,
    pub cycle: Vec<Num>,
    pub verdict: &'static str,
    pub method: &'static str,
    pub margin: Num,
    pub c_evidence: Evidence,
    pub r_evidence: Evidence,
    pub estimate: Option<Estimate>,
    pub monotone: Option<bool>,
    pub one_sided: Option<OneSided>,
    pub smooth_oracle: Option<Oracle>,
}

impl PointReport {
    pub fn new(cycle: &[f64], c: Classification) -> Self {
        PointReport {
            p: Num(cycle[0]),
            period: cycle.len(),
            cycle: nums(cycle),
            verdict: c.verdict.as_str(),
            method: c.method.as_str(),
            margin: Num(c.margin),
            c_evidence: c.c_criterion.into(),
            r_evidence: c.r_criterion.into(),
            estimate: c.evidence.map(Into::into),
            monotone: c.monotone,
            one_sided: c.one_sided.map(Into::into),
            smooth_oracle: c.smooth.map(Into::into),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ClassifyReport {
    pub command: &'static str,
    pub map: String,
    pub radius: Num,
    pub seed: u64,
    pub points: Vec<PointReport>,
}

#[derive(Debug, Serialize)]
pub struct AnalyzeReport {
    pub command: &'static str,
    pub map: String,
    pub x0: Num,
    pub iters: usize,
    pub burn_in: usize,
    pub h_n: Num,
    #[serde(rename = "L")]
    pub l: Option<Num>,
    pub status: &'static str,
    pub n_used: usize,
    pub skipped: usize,
    pub bounded: bool,
    pub period: Option<usize>,
    pub cycle: Vec<Num>,
    pub cycle_exponent: Option<Num>,
    pub chaotic: bool,
    pub float_collapse: bool,
    pub notes: Vec<String>,
}

impl AnalyzeReport {
    pub fn set_cycle(&mut self, cycle: &[f64]) {
        self.period = Some(cycle.len());
        self.cycle = nums(cycle);
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub param: Num,
    pub h_n: Num,
    pub status: String,
    pub detected_period: Option<usize>,
    pub escaped: bool,
}

#[derive(Debug, Serialize)]
pub struct SweepReport {
    pub command: &'static str,
    pub family: String,
    pub param: String,
    pub rows: Vec<SweepRow>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [
            0.1,
            2f64.ln(),
            -0.9162907318741551,
            1e-300,
            5e-324,
            f64::MAX,
        ] {
            let s = Num(v).to_string();
            assert_eq!(s.parse::<f64>().unwrap(), v);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17);
        }
    }

    #[test]
    fn json_numbers_are_literal() {
        let json = serde_json::to_string(&vec![Num(0.25), Num(f64::NEG_INFINITY)]).unwrap();
        assert_eq!(json, "[2.5000000000000000e-1,null]");
    }
}
