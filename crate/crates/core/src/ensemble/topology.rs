use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::combine::{hard_vote, max_value, soft_vote};
use super::{EnsembleError, ProbabilityMatrix};
use crate::label::ClassLabel;

/// The four member combinations over the `mlp`, `cnn` and `lstm` roles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Topology {
    #[serde(rename = "EM1")]
    Em1,
    #[serde(rename = "EM2")]
    Em2,
    #[serde(rename = "EM3")]
    Em3,
    #[serde(rename = "EM4")]
    Em4,
}

impl Topology {
    pub const ALL: [Topology; 4] = [Topology::Em1, Topology::Em2, Topology::Em3, Topology::Em4];

    pub fn members(self) -> &'static [&'static str] {
        match self {
            Topology::Em1 => &["mlp", "cnn"],
            Topology::Em2 => &["mlp", "lstm"],
            Topology::Em3 => &["cnn", "lstm"],
            Topology::Em4 => &["mlp", "cnn", "lstm"],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Topology::Em1 => "EM1",
            Topology::Em2 => "EM2",
            Topology::Em3 => "EM3",
            Topology::Em4 => "EM4",
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Topology {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Topology::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown topology {s:?} (expected EM1..EM4)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    Soft,
    Max,
    Hard,
    Stack,
}

impl Rule {
    pub const ALL: [Rule; 4] = [Rule::Soft, Rule::Max, Rule::Hard, Rule::Stack];

    pub fn name(self) -> &'static str {
        match self {
            Rule::Soft => "soft",
            Rule::Max => "max",
            Rule::Hard => "hard",
            Rule::Stack => "stack",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Rule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "soft" | "soft_vote" | "soft-vote" => Ok(Rule::Soft),
            "max" | "max_value" | "max-value" => Ok(Rule::Max),
            "hard" | "hard_vote" | "hard-vote" => Ok(Rule::Hard),
            "stack" | "stacking" => Ok(Rule::Stack),
            other => Err(format!("unknown rule {other:?} (expected soft|max|hard|stack)")),
        }
    }
}

/// Which members are combined, and how.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub topology: Option<Topology>,
    pub members: Vec<String>,
    pub rule: Rule,
    pub member_weights: Vec<f64>,
}

impl EnsembleSpec {
    /// Equal member weights.
    pub fn new(members: Vec<String>, rule: Rule) -> Result<Self, EnsembleError> {
        let w = vec![1.0; members.len()];
        Self::weighted(members, rule, w)
    }

    pub fn weighted(members: Vec<String>, rule: Rule, member_weights: Vec<f64>) -> Result<Self, EnsembleError> {
        if members.len() < 2 {
            return Err(EnsembleError::TooFewMembers(members.len()));
        }
        if rule == Rule::Hard && members.len() % 2 == 0 {
            return Err(EnsembleError::EvenMemberCount(members.len()));
        }
        if member_weights.len() != members.len() || member_weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(EnsembleError::InvalidWeights(format!("{member_weights:?}")));
        }
        Ok(EnsembleSpec {
            topology: None,
            members,
            rule,
            member_weights,
        })
    }

    pub fn name(&self) -> String {
        match self.topology {
            Some(t) => format!("{t}-{}", self.rule),
            None => format!("{}-{}", self.members.join("+"), self.rule),
        }
    }

    /// Member matrices from `registry`, in spec order.
    pub fn gather(&self, registry: &BTreeMap<String, ProbabilityMatrix>) -> Result<Vec<ProbabilityMatrix>, EnsembleError> {
        self.members
            .iter()
            .map(|m| registry.get(m).cloned().ok_or_else(|| EnsembleError::MissingMember(m.clone())))
            .collect()
    }

    /// Applies an aggregation rule. Returns the labels and, for soft voting,
    /// the averaged probabilities. Stacking needs a trained meta-learner and
    /// is rejected here.
    pub fn combine(
        &self,
        registry: &BTreeMap<String, ProbabilityMatrix>,
    ) -> Result<(Vec<ClassLabel>, Option<ProbabilityMatrix>), EnsembleError> {
        let members = self.gather(registry)?;
        match self.rule {
            Rule::Soft => {
                let (labels, avg) = soft_vote(&members, &self.member_weights)?;
                Ok((labels, Some(avg.with_producer(self.name()))))
            }
            Rule::Max => Ok((max_value(&members)?, None)),
            Rule::Hard => Ok((hard_vote(&members)?, None)),
            Rule::Stack => Err(EnsembleError::NeedsMetaLearner),
        }
    }
}

/// Builds the spec for a named topology, checking that `registry` has every member.
pub fn build_em(
    topology: Topology,
    rule: Rule,
    registry: &BTreeMap<String, ProbabilityMatrix>,
) -> Result<EnsembleSpec, EnsembleError> {
    let members: Vec<String> = topology.members().iter().map(|s| s.to_string()).collect();
    if let Some(missing) = members.iter().find(|m| !registry.contains_key(*m)) {
        return Err(EnsembleError::MissingMember(missing.clone()));
    }
    let mut spec = EnsembleSpec::new(members, rule)?;
    spec.topology = Some(topology);
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn registry(names: &[&str]) -> BTreeMap<String, ProbabilityMatrix> {
        names
            .iter()
            .map(|n| (n.to_string(), ProbabilityMatrix::uniform(*n, 2)))
            .collect()
    }

    #[test]
    fn em3_soft_uses_cnn_and_lstm() {
        let spec = build_em(Topology::Em3, Rule::Soft, &registry(&["mlp", "cnn", "lstm"])).unwrap();
        assert_eq!(spec.members, ["cnn", "lstm"]);
        assert_eq!(spec.name(), "EM3-soft");
    }

    #[test]
    fn hard_only_for_em4() {
        let reg = registry(&["mlp", "cnn", "lstm"]);
        let spec = build_em(Topology::Em4, Rule::Hard, &reg).unwrap();
        assert_eq!(spec.members.len(), 3);
        for t in [Topology::Em1, Topology::Em2, Topology::Em3] {
            assert!(matches!(build_em(t, Rule::Hard, &reg), Err(EnsembleError::EvenMemberCount(2))));
        }
    }

    #[test]
    fn missing_member_is_named() {
        match build_em(Topology::Em2, Rule::Max, &registry(&["mlp", "cnn"])) {
            Err(EnsembleError::MissingMember(m)) => assert_eq!(m, "lstm"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn stack_rule_needs_meta_learner() {
        let reg = registry(&["mlp", "cnn", "lstm"]);
        let spec = build_em(Topology::Em4, Rule::Stack, &reg).unwrap();
        assert!(matches!(spec.combine(&reg), Err(EnsembleError::NeedsMetaLearner)));
        let (labels, avg) = build_em(Topology::Em1, Rule::Soft, &reg).unwrap().combine(&reg).unwrap();
        assert_eq!(labels.len(), 2);
        assert_eq!(avg.unwrap().producer(), "EM1-soft");
    }

    #[test]
    fn parse_names() {
        assert_eq!("em4".parse::<Topology>().unwrap(), Topology::Em4);
        assert_eq!("stacking".parse::<Rule>().unwrap(), Rule::Stack);
        assert!("EM5".parse::<Topology>().is_err());
    }
}
