//! Partial expert knowledge constraining discovery.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type Relation = BTreeMap<String, BTreeSet<String>>;

/// Six kinds of constraints over named variables.
///
/// `forbidden_links[c]` / `existing_links[c]` list parents that `c` cannot /
/// must have. The co-parent relations are consumed by Markov blanket
/// discovery. `var_names` scopes the leaf expansion rule of [`expand`].
///
/// [`expand`]: PriorKnowledge::expand
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorKnowledge {
    pub forbidden_links: Relation,
    pub existing_links: Relation,
    pub root_variables: BTreeSet<String>,
    pub leaf_variables: BTreeSet<String>,
    pub forbidden_co_parents: Relation,
    pub existing_co_parents: Relation,
    pub fix_co_parents: bool,
    pub var_names: BTreeSet<String>,
}

/// Two declarations that cannot both hold.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Contradiction {
    pub first: String,
    pub second: String,
}

impl Contradiction {
    fn new(first: String, second: String) -> Self {
        Self { first, second }
    }
}

impl fmt::Display for Contradiction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} conflicts with {}", self.first, self.second)
    }
}

fn contains(rel: &Relation, key: &str, value: &str) -> bool {
    rel.get(key).is_some_and(|s| s.contains(value))
}

fn insert(rel: &mut Relation, key: &str, value: &str) {
    rel.entry(key.to_string()).or_default().insert(value.to_string());
}

fn symmetrize(rel: &mut Relation) {
    let pairs: Vec<(String, String)> = rel
        .iter()
        .flat_map(|(k, vs)| vs.iter().map(move |v| (v.clone(), k.clone())))
        .collect();
    for (k, v) in pairs {
        insert(rel, &k, &v);
    }
}

impl PriorKnowledge {
    pub fn is_empty(&self) -> bool {
        let empty = |r: &Relation| r.values().all(BTreeSet::is_empty);
        empty(&self.forbidden_links)
            && empty(&self.existing_links)
            && self.root_variables.is_empty()
            && self.leaf_variables.is_empty()
            && empty(&self.forbidden_co_parents)
            && empty(&self.existing_co_parents)
    }

    /// Every contradiction, sorted; empty when consistent.
    pub fn validate(&self) -> Vec<Contradiction> {
        let mut found = BTreeSet::new();
        for (child, parents) in &self.existing_links {
            for parent in parents {
                if contains(&self.forbidden_links, child, parent) {
                    found.insert(Contradiction::new(
                        format!("existing_links: {parent} -> {child}"),
                        format!("forbidden_links: {parent} -> {child}"),
                    ));
                }
                if self.leaf_variables.contains(parent) {
                    found.insert(Contradiction::new(
                        format!("existing_links: {parent} -> {child}"),
                        format!("leaf_variables: {parent}"),
                    ));
                }
            }
            if !parents.is_empty() && self.root_variables.contains(child) {
                let listed: Vec<&str> = parents.iter().map(String::as_str).collect();
                found.insert(Contradiction::new(
                    format!("existing_links: {{{}}} -> {child}", listed.join(", ")),
                    format!("root_variables: {child}"),
                ));
            }
        }
        for (a, bs) in &self.existing_co_parents {
            for b in bs {
                if contains(&self.forbidden_co_parents, a, b) || contains(&self.forbidden_co_parents, b, a) {
                    let (x, y) = if a <= b { (a, b) } else { (b, a) };
                    found.insert(Contradiction::new(
                        format!("existing_co_parents: {x} ~ {y}"),
                        format!("forbidden_co_parents: {x} ~ {y}"),
                    ));
                }
            }
        }
        found.into_iter().collect()
    }

    /// Adds co-parent relations implied by the other constraints.
    ///
    /// With `fix_co_parents`: every pair of required parents of a common child
    /// becomes an existing co-parent pair, and every leaf variable becomes a
    /// forbidden co-parent of every other variable in `var_names`. Both
    /// co-parent relations are then made symmetric regardless of the flag.
    pub fn expand(&self) -> std::result::Result<PriorKnowledge, Vec<Contradiction>> {
        let before = self.validate();
        if !before.is_empty() {
            return Err(before);
        }
        let mut out = self.clone();
        if self.fix_co_parents {
            for parents in self.existing_links.values() {
                let list: Vec<&String> = parents.iter().collect();
                for (i, a) in list.iter().enumerate() {
                    for b in &list[i + 1..] {
                        insert(&mut out.existing_co_parents, a, b);
                        insert(&mut out.existing_co_parents, b, a);
                    }
                }
            }
            for v in &self.var_names {
                for leaf in &self.leaf_variables {
                    if leaf != v {
                        insert(&mut out.forbidden_co_parents, v, leaf);
                    }
                }
            }
        }
        symmetrize(&mut out.existing_co_parents);
        symmetrize(&mut out.forbidden_co_parents);
        let after = out.validate();
        if after.is_empty() {
            Ok(out)
        } else {
            Err(after)
        }
    }

    fn check_known(&self, name: &str) -> Result<()> {
        if self.var_names.is_empty() || self.var_names.contains(name) {
            Ok(())
        } else {
            Err(Error::UnknownVariable(name.to_string()))
        }
    }

    /// Whether `parent` may cause `child`. For time series the verdict holds
    /// at every lag.
    pub fn is_edge_allowed(&self, parent: &str, child: &str) -> Result<bool> {
        self.check_known(parent)?;
        self.check_known(child)?;
        Ok(!(contains(&self.forbidden_links, child, parent)
            || self.root_variables.contains(child)
            || self.leaf_variables.contains(parent)))
    }

    fn mentioned(&self) -> BTreeSet<&str> {
        let mut names = BTreeSet::new();
        for rel in [
            &self.forbidden_links,
            &self.existing_links,
            &self.forbidden_co_parents,
            &self.existing_co_parents,
        ] {
            for (k, vs) in rel {
                names.insert(k.as_str());
                names.extend(vs.iter().map(String::as_str));
            }
        }
        names.extend(self.root_variables.iter().map(String::as_str));
        names.extend(self.leaf_variables.iter().map(String::as_str));
        names
    }
}

/// Index-based view of validated, expanded prior knowledge for one variable universe.
#[derive(Debug, Clone)]
pub struct Constraints {
    n: usize,
    forbidden: Vec<bool>,
    required: Vec<bool>,
    forbidden_co: Vec<BTreeSet<usize>>,
    existing_co: Vec<BTreeSet<usize>>,
}

impl Constraints {
    pub fn none(n: usize) -> Self {
        Self {
            n,
            forbidden: vec![false; n * n],
            required: vec![false; n * n],
            forbidden_co: vec![BTreeSet::new(); n],
            existing_co: vec![BTreeSet::new(); n],
        }
    }

    /// Validates and expands `pk` against `var_names`. When `pk.var_names` is
    /// empty the expansion scope defaults to `var_names`.
    pub fn build(pk: &PriorKnowledge, var_names: &[String]) -> Result<Self> {
        let index: BTreeMap<&str, usize> = var_names
            .iter()
            .enumerate()
            .map(|(i, v)| (v.as_str(), i))
            .collect();
        if let Some(unknown) = pk.mentioned().into_iter().find(|v| !index.contains_key(v)) {
            return Err(Error::UnknownVariable(unknown.to_string()));
        }
        let mut scoped = pk.clone();
        if scoped.var_names.is_empty() {
            scoped.var_names = var_names.iter().cloned().collect();
        }
        let pk = scoped.expand().map_err(Error::Contradictions)?;

        let n = var_names.len();
        let mut c = Self::none(n);
        for (child, parents) in &pk.forbidden_links {
            for parent in parents {
                c.forbidden[index[parent.as_str()] * n + index[child.as_str()]] = true;
            }
        }
        for root in &pk.root_variables {
            let r = index[root.as_str()];
            for p in 0..n {
                c.forbidden[p * n + r] = true;
            }
        }
        for leaf in &pk.leaf_variables {
            let l = index[leaf.as_str()];
            for ch in 0..n {
                c.forbidden[l * n + ch] = true;
            }
        }
        for (child, parents) in &pk.existing_links {
            for parent in parents {
                c.required[index[parent.as_str()] * n + index[child.as_str()]] = true;
            }
        }
        for (a, bs) in &pk.forbidden_co_parents {
            for b in bs {
                c.forbidden_co[index[a.as_str()]].insert(index[b.as_str()]);
            }
        }
        for (a, bs) in &pk.existing_co_parents {
            for b in bs {
                c.existing_co[index[a.as_str()]].insert(index[b.as_str()]);
            }
        }
        Ok(c)
    }

    pub fn n_vars(&self) -> usize {
        self.n
    }

    pub fn allowed(&self, parent: usize, child: usize) -> bool {
        !self.forbidden[parent * self.n + child]
    }

    pub fn required(&self, parent: usize, child: usize) -> bool {
        self.required[parent * self.n + child]
    }

    pub fn required_edges(&self) -> Vec<(usize, usize)> {
        let n = self.n;
        (0..n * n)
            .filter(|&i| self.required[i])
            .map(|i| (i / n, i % n))
            .collect()
    }

    pub fn forbidden_co_parents(&self, v: usize) -> &BTreeSet<usize> {
        &self.forbidden_co[v]
    }

    pub fn existing_co_parents(&self, v: usize) -> &BTreeSet<usize> {
        &self.existing_co[v]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(pairs: &[(&str, &[&str])]) -> Relation {
        pairs
            .iter()
            .map(|(k, vs)| (k.to_string(), vs.iter().map(|v| v.to_string()).collect()))
            .collect()
    }

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn link_contradictions() {
        let pk = PriorKnowledge {
            existing_links: rel(&[("B", &["A"])]),
            forbidden_links: rel(&[("B", &["A"])]),
            ..Default::default()
        };
        let found = pk.validate();
        assert_eq!(found.len(), 1);
        assert!(found[0].first.contains("existing_links") && found[0].second.contains("forbidden_links"));

        let pk = PriorKnowledge {
            existing_links: rel(&[("B", &["A"])]),
            root_variables: set(&["B"]),
            ..Default::default()
        };
        assert_eq!(pk.validate().len(), 1);
        assert!(pk.validate()[0].second.contains("root_variables: B"));

        let pk = PriorKnowledge {
            existing_links: rel(&[("B", &["A"])]),
            leaf_variables: set(&["A"]),
            ..Default::default()
        };
        assert!(pk.validate()[0].second.contains("leaf_variables: A"));
    }

    #[test]
    fn all_contradictions_are_reported() {
        let pk = PriorKnowledge {
            existing_links: rel(&[("B", &["A"]), ("C", &["A"])]),
            forbidden_links: rel(&[("B", &["A"])]),
            root_variables: set(&["C"]),
            leaf_variables: set(&["A"]),
            ..Default::default()
        };
        assert_eq!(pk.validate().len(), 4);
    }

    #[test]
    fn expansion_rules() {
        let pk = PriorKnowledge {
            existing_links: rel(&[("C", &["A", "B"])]),
            fix_co_parents: true,
            ..Default::default()
        };
        let e = pk.expand().unwrap();
        assert!(contains(&e.existing_co_parents, "A", "B"));
        assert!(contains(&e.existing_co_parents, "B", "A"));

        let pk = PriorKnowledge {
            forbidden_co_parents: rel(&[("A", &["B"])]),
            ..Default::default()
        };
        let e = pk.expand().unwrap();
        assert!(contains(&e.forbidden_co_parents, "B", "A"));

        let pk = PriorKnowledge {
            leaf_variables: set(&["L"]),
            var_names: set(&["X", "Y"]),
            fix_co_parents: true,
            ..Default::default()
        };
        let e = pk.expand().unwrap();
        assert!(contains(&e.forbidden_co_parents, "X", "L"));
        assert!(contains(&e.forbidden_co_parents, "Y", "L"));
        assert!(contains(&e.forbidden_co_parents, "L", "X"));
    }

    #[test]
    fn expansion_can_surface_contradictions() {
        let pk = PriorKnowledge {
            existing_links: rel(&[("C", &["A", "B"])]),
            forbidden_co_parents: rel(&[("A", &["B"])]),
            fix_co_parents: true,
            ..Default::default()
        };
        assert!(pk.validate().is_empty());
        let err = pk.expand().unwrap_err();
        assert!(err[0].first.contains("existing_co_parents: A ~ B"));
    }

    #[test]
    fn edge_permissions() {
        let pk = PriorKnowledge {
            forbidden_links: rel(&[("B", &["A"])]),
            root_variables: set(&["R"]),
            var_names: set(&["A", "B", "R", "X"]),
            ..Default::default()
        };
        assert!(!pk.is_edge_allowed("A", "B").unwrap());
        assert!(pk.is_edge_allowed("B", "A").unwrap());
        assert!(!pk.is_edge_allowed("X", "R").unwrap());
        assert!(pk.is_edge_allowed("R", "X").unwrap());
        assert!(matches!(pk.is_edge_allowed("Q", "A"), Err(Error::UnknownVariable(_))));
        assert!(PriorKnowledge::default().is_edge_allowed("p", "q").unwrap());
    }

    #[test]
    fn constraints_from_names() {
        let names: Vec<String> = ["A", "B", "C"].iter().map(|s| s.to_string()).collect();
        let pk = PriorKnowledge {
            forbidden_links: rel(&[("B", &["A"])]),
            existing_links: rel(&[("C", &["B"])]),
            leaf_variables: set(&["C"]),
            fix_co_parents: true,
            ..Default::default()
        };
        let c = Constraints::build(&pk, &names).unwrap();
        assert!(!c.allowed(0, 1));
        assert!(c.allowed(1, 0));
        assert!(!c.allowed(2, 0));
        assert!(c.required(1, 2));
        assert_eq!(c.required_edges(), vec![(1, 2)]);
        // leaf C becomes a forbidden co-parent of A and B in the default scope
        assert!(c.forbidden_co_parents(0).contains(&2));

        let bad = PriorKnowledge {
            root_variables: set(&["Z"]),
            ..Default::default()
        };
        assert!(matches!(Constraints::build(&bad, &names), Err(Error::UnknownVariable(v)) if v == "Z"));
    }

    use proptest::prelude::*;

    fn arb_relation() -> impl Strategy<Value = Relation> {
        let name = prop::sample::select(vec!["a", "b", "c", "d", "e"]);
        prop::collection::btree_map(
            name.clone().prop_map(String::from),
            prop::collection::btree_set(name.prop_map(String::from), 0..3),
            0..4,
        )
    }

    proptest! {
        #[test]
        fn expand_is_idempotent_and_monotone(
            existing in arb_relation(),
            forbidden_co in arb_relation(),
            existing_co in arb_relation(),
            fix in any::<bool>(),
        ) {
            let pk = PriorKnowledge {
                existing_links: existing,
                forbidden_co_parents: forbidden_co,
                existing_co_parents: existing_co,
                leaf_variables: set(&["e"]),
                var_names: set(&["a", "b", "c", "d", "e"]),
                fix_co_parents: fix,
                ..Default::default()
            };
            if let Ok(once) = pk.expand() {
                prop_assert_eq!(once.expand().unwrap(), once.clone());
                for (k, vs) in &pk.existing_co_parents {
                    for v in vs {
                        prop_assert!(contains(&once.existing_co_parents, k, v));
                    }
                }
                for (k, vs) in &pk.forbidden_co_parents {
                    for v in vs {
                        prop_assert!(contains(&once.forbidden_co_parents, k, v));
                    }
                }
            }
        }
    }
}
