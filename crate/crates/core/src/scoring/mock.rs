//! Context-sensitive mock scorer.
//!
//! Source text may introduce entities as `ENT<id>=<class>` tokens. The
//! hypothesis realizes ambiguous references as `PRO<id>=<class>` tokens.
//! A marked token is judged correct when its class matches the class of the
//! entity it refers to, which is only possible when that entity is visible
//! in the same chunk's source text.

use std::collections::{BTreeMap, HashMap};

pub const ANTECEDENT_PREFIX: &str = "ENT";
pub const MARKER_PREFIX: &str = "PRO";
/// Source-side token for an ambiguous reference (carries no class).
pub const SOURCE_MARKER_PREFIX: &str = "IT";

/// Score for a marker whose antecedent is out of view.
pub const UNRESOLVED: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextMock {
    pub antecedent_prefix: String,
    pub marker_prefix: String,
    /// Expected hypothesis class for each antecedent class. Classes missing
    /// from the map resolve to themselves.
    pub resolution: BTreeMap<String, String>,
}

impl Default for ContextMock {
    fn default() -> Self {
        ContextMock {
            antecedent_prefix: ANTECEDENT_PREFIX.into(),
            marker_prefix: MARKER_PREFIX.into(),
            resolution: BTreeMap::new(),
        }
    }
}

/// Parse `<prefix><id>=<class>`.
pub(crate) fn parse_tagged<'a>(token: &'a str, prefix: &str) -> Option<(u64, &'a str)> {
    let rest = token.strip_prefix(prefix)?;
    let (id, class) = rest.split_once('=')?;
    if class.is_empty() {
        return None;
    }
    Some((id.parse().ok()?, class))
}

impl ContextMock {
    fn expected<'a>(&'a self, class: &'a str) -> &'a str {
        self.resolution.get(class).map_or(class, String::as_str)
    }

    /// Mean over marked hypothesis tokens of 1 (correct), 0 (wrong) or
    /// [`UNRESOLVED`] (antecedent not in `src`). 1.0 when nothing is marked.
    pub fn score(&self, src: &str, hyp: &str) -> f64 {
        let visible: HashMap<u64, &str> = src
            .split_whitespace()
            .filter_map(|t| parse_tagged(t, &self.antecedent_prefix))
            .collect();
        let mut total = 0.0;
        let mut n = 0usize;
        for (id, class) in hyp
            .split_whitespace()
            .filter_map(|t| parse_tagged(t, &self.marker_prefix))
        {
            n += 1;
            total += match visible.get(&id) {
                Some(antecedent) if self.expected(antecedent) == class => 1.0,
                Some(_) => 0.0,
                None => UNRESOLVED,
            };
        }
        if n == 0 {
            1.0
        } else {
            total / n as f64
        }
    }
}
