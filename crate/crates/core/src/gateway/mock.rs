use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{canonical_messages, ChatRequest, GatewayError, LlmGateway};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Replies {
    One(String),
    Many(Vec<String>),
}

impl Replies {
    fn into_vec(self) -> Vec<String> {
        match self {
            Replies::One(s) => vec![s],
            Replies::Many(v) => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Select {
    /// Seeded hash of (tag, messages).
    #[default]
    Hash,
    /// Trailing integer of the tag (after the last `:` or `#`), modulo the
    /// reply count. Falls back to `hash` when the tag has no such suffix.
    Index,
}

/// A scripted response: matches on tag pattern (exact, or prefix when it
/// ends with `*`) and an optional substring of the last user message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockRule {
    pub tag: String,
    #[serde(default)]
    pub contains: Option<String>,
    pub replies: Vec<String>,
    #[serde(default)]
    pub select: Select,
}

impl MockRule {
    fn matches(&self, req: &ChatRequest) -> bool {
        let tag_ok = match self.tag.strip_suffix('*') {
            Some(prefix) => req.tag.starts_with(prefix),
            None => req.tag == self.tag,
        };
        tag_ok && self.contains.as_deref().is_none_or(|c| req.last_user().contains(c))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockConfig {
    #[serde(default)]
    pub seed: u64,
    /// Shorthand: tag pattern to reply (or replies).
    #[serde(default)]
    pub table: BTreeMap<String, Replies>,
    #[serde(default)]
    pub rules: Vec<MockRule>,
    /// TOML file with further `[[rules]]`, appended after inline rules.
    #[serde(default)]
    pub script: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Script {
    #[serde(default)]
    rules: Vec<MockRule>,
}

/// Deterministic gateway: the reply is a pure function of the seed, the tag
/// and the messages.
#[derive(Debug, Clone)]
pub struct MockGateway {
    seed: u64,
    rules: Vec<MockRule>,
}

impl MockGateway {
    pub fn new(cfg: MockConfig) -> Result<Self, GatewayError> {
        let mut rules = cfg.rules;
        if let Some(path) = &cfg.script {
            let text =
                std::fs::read_to_string(path).map_err(|e| GatewayError::Config(format!("{}: {e}", path.display())))?;
            let script: Script =
                toml::from_str(&text).map_err(|e| GatewayError::Config(format!("{}: {e}", path.display())))?;
            rules.extend(script.rules);
        }
        // Exact table keys before wildcard ones.
        let (exact, wild): (Vec<_>, Vec<_>) = cfg.table.into_iter().partition(|(k, _)| !k.ends_with('*'));
        for (tag, replies) in exact.into_iter().chain(wild) {
            rules.push(MockRule {
                tag,
                contains: None,
                replies: replies.into_vec(),
                select: Select::Hash,
            });
        }
        if let Some(r) = rules.iter().find(|r| r.replies.is_empty()) {
            return Err(GatewayError::Config(format!("mock rule `{}` has no replies", r.tag)));
        }
        Ok(MockGateway { seed: cfg.seed, rules })
    }

    pub fn from_rules(seed: u64, rules: Vec<MockRule>) -> Result<Self, GatewayError> {
        Self::new(MockConfig {
            seed,
            rules,
            ..Default::default()
        })
    }

    fn hash(&self, req: &ChatRequest) -> u64 {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(req.tag.as_bytes());
        h.update([0]);
        h.update(canonical_messages(&req.messages).as_bytes());
        let d = h.finalize();
        u64::from_le_bytes(d[..8].try_into().unwrap())
    }
}

fn tag_index(tag: &str) -> Option<u64> {
    let tail = &tag[tag.rfind([':', '#']).map_or(0, |i| i + 1)..];
    tail.parse().ok()
}

impl LlmGateway for MockGateway {
    fn complete(&self, req: &ChatRequest) -> Result<String, GatewayError> {
        req.validate()?;
        let rule = self
            .rules
            .iter()
            .find(|r| r.matches(req))
            .ok_or_else(|| GatewayError::NoMockRule(req.tag.clone()))?;
        let n = rule.replies.len() as u64;
        let idx = match (rule.select, tag_index(&req.tag)) {
            (Select::Index, Some(i)) => i % n,
            _ => self.hash(req) % n,
        };
        Ok(rule.replies[idx as usize].clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::Message;

    fn req(tag: &str, text: &str) -> ChatRequest {
        ChatRequest::new(tag, vec![Message::user(text)])
    }

    #[test]
    fn table_lookup() {
        let mut table = BTreeMap::new();
        table.insert("score".to_string(), Replies::One("7".into()));
        let g = MockGateway::new(MockConfig {
            table,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(g.complete(&req("score", "anything")).unwrap(), "7");
        assert!(matches!(
            g.complete(&req("other", "x")),
            Err(GatewayError::NoMockRule(_))
        ));
    }

    #[test]
    fn rules_in_order_with_contains() {
        let g = MockGateway::from_rules(
            0,
            vec![
                MockRule {
                    tag: "gen*".into(),
                    contains: Some("adder".into()),
                    replies: vec!["A".into()],
                    select: Select::Hash,
                },
                MockRule {
                    tag: "gen*".into(),
                    contains: None,
                    replies: vec!["B".into()],
                    select: Select::Hash,
                },
            ],
        )
        .unwrap();
        assert_eq!(g.complete(&req("gen:1", "an adder")).unwrap(), "A");
        assert_eq!(g.complete(&req("gen:2", "a mux")).unwrap(), "B");
    }

    #[test]
    fn deterministic_per_seed() {
        let rule = MockRule {
            tag: "*".into(),
            contains: None,
            replies: (0..50).map(|i| i.to_string()).collect(),
            select: Select::Hash,
        };
        let a = MockGateway::from_rules(1, vec![rule.clone()]).unwrap();
        let b = MockGateway::from_rules(1, vec![rule.clone()]).unwrap();
        let c = MockGateway::from_rules(2, vec![rule]).unwrap();
        let r = req("t", "hello");
        assert_eq!(a.complete(&r).unwrap(), b.complete(&r).unwrap());
        let differs = (0..20).any(|i| {
            let r = req(&format!("t{i}"), "hello");
            a.complete(&r).unwrap() != c.complete(&r).unwrap()
        });
        assert!(differs);
    }

    #[test]
    fn index_selection() {
        let g = MockGateway::from_rules(
            0,
            vec![MockRule {
                tag: "eval:*".into(),
                contains: None,
                replies: vec!["good".into(), "bad".into()],
                select: Select::Index,
            }],
        )
        .unwrap();
        let out: Vec<_> = (0..4)
            .map(|i| g.complete(&req(&format!("eval:t1:{i}"), "p")).unwrap())
            .collect();
        assert_eq!(out, ["good", "bad", "good", "bad"]);
    }
}
