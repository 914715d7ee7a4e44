//! Generating networks: TOML description, validation, random construction
//! and forward sampling of data.
//!
//! ```toml
//! # format=1
//! [[variable]]
//! name = "A"
//! states = ["no", "yes"]
//! parents = []
//! cpt = [[0.7, 0.3]]
//! ```
//!
//! CPT rows are indexed by parent configuration with the first listed
//! parent most significant; each row lists child-state probabilities.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::io::{Labels, FORMAT_LINE};
use crate::nodeset::NodeSet;
use crate::rng::{stream_rng, DATA_STREAM};
use crate::scoring::Dataset;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub states: Vec<String>,
    #[serde(default)]
    pub parents: Vec<String>,
    pub cpt: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    #[serde(rename = "variable")]
    pub variables: Vec<Variable>,
}

/// A validated network with parents resolved to indices.
#[derive(Clone, Debug)]
struct Resolved {
    parents: Vec<Vec<usize>>,
    order: Vec<usize>,
}

impl NetworkSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let net: NetworkSpec = toml::from_str(text)?;
        net.validate()?;
        Ok(net)
    }

    pub fn to_toml(&self) -> Result<String> {
        let body = toml::to_string(self).map_err(|e| Error::InvalidInput(format!("cannot serialize network: {e}")))?;
        Ok(format!("{FORMAT_LINE}\n{body}"))
    }

    pub fn n(&self) -> usize {
        self.variables.len()
    }

    pub fn names(&self) -> Vec<String> {
        self.variables.iter().map(|v| v.name.clone()).collect()
    }

    fn resolve(&self) -> Result<Resolved> {
        let n = self.n();
        if n == 0 {
            return Err(Error::InvalidInput("network has no variables".into()));
        }
        let mut index = HashMap::with_capacity(n);
        for (i, v) in self.variables.iter().enumerate() {
            if index.insert(v.name.as_str(), i).is_some() {
                return Err(Error::InvalidInput(format!("duplicate variable name {:?}", v.name)));
            }
        }
        let mut parents = Vec::with_capacity(n);
        for v in &self.variables {
            let mut ps = Vec::with_capacity(v.parents.len());
            for p in &v.parents {
                let &pi = index
                    .get(p.as_str())
                    .ok_or_else(|| Error::InvalidInput(format!("{}: unknown parent {p:?}", v.name)))?;
                if ps.contains(&pi) || p == &v.name {
                    return Err(Error::InvalidInput(format!("{}: bad parent list", v.name)));
                }
                ps.push(pi);
            }
            parents.push(ps);
        }
        let sets = parents.iter().map(|ps| NodeSet::from_nodes(n, ps.iter().copied())).collect();
        let dag = Dag::from_parent_sets(sets).map_err(|_| Error::InvalidInput("network graph has a directed cycle".into()))?;
        let order = dag.topological_order().expect("checked acyclic");
        Ok(Resolved { parents, order })
    }

    /// Checks names, parent references, acyclicity and every CPT row.
    pub fn validate(&self) -> Result<()> {
        let r = self.resolve()?;
        for (v, ps) in self.variables.iter().zip(&r.parents) {
            if v.states.is_empty() {
                return Err(Error::InvalidInput(format!("{} has no states", v.name)));
            }
            let configs: usize = ps.iter().map(|&p| self.variables[p].states.len()).product();
            if v.cpt.len() != configs {
                return Err(Error::InvalidInput(format!(
                    "{}: CPT has {} rows, expected {configs}",
                    v.name,
                    v.cpt.len()
                )));
            }
            for (k, row) in v.cpt.iter().enumerate() {
                if row.len() != v.states.len() {
                    return Err(Error::InvalidInput(format!("{}: CPT row {k} has {} entries", v.name, row.len())));
                }
                if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                    return Err(Error::InvalidInput(format!("{}: CPT row {k} has an entry outside [0, 1]", v.name)));
                }
                let s: f64 = row.iter().sum();
                if (s - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidInput(format!("{}: CPT row {k} sums to {s}", v.name)));
                }
            }
        }
        Ok(())
    }

    /// The network's graph.
    pub fn dag(&self) -> Result<Dag> {
        let r = self.resolve()?;
        let n = self.n();
        Dag::from_parent_sets(r.parents.iter().map(|ps| NodeSet::from_nodes(n, ps.iter().copied())).collect())
    }

    /// A random network: nodes in index order, each taking up to
    /// `max_parents` parents among its predecessors with probability
    /// `density` each, and CPT rows drawn from a symmetric Dirichlet(`alpha`).
    pub fn random(n: usize, arity: usize, max_parents: usize, density: f64, alpha: f64, seed: u64) -> Result<Self> {
        if n == 0 || arity < 2 {
            return Err(Error::InvalidInput("need n >= 1 and arity >= 2".into()));
        }
        if !(0.0..=1.0).contains(&density) {
            return Err(Error::InvalidInput(format!("density {density} outside [0, 1]")));
        }
        let gamma = Gamma::new(alpha, 1.0).map_err(|e| Error::InvalidInput(format!("alpha {alpha}: {e}")))?;
        let mut rng = stream_rng(seed, DATA_STREAM);
        let names: Vec<String> = (0..n).map(|i| format!("X{i}")).collect();
        let states: Vec<String> = (0..arity).map(|s| s.to_string()).collect();
        let mut variables = Vec::with_capacity(n);
        for i in 0..n {
            let mut ps: Vec<usize> = (0..i).filter(|_| rng.random::<f64>() < density).collect();
            while ps.len() > max_parents {
                let k = rng.random_range(0..ps.len());
                ps.remove(k);
            }
            let rows = arity.pow(ps.len() as u32);
            let cpt = (0..rows)
                .map(|_| {
                    let raw: Vec<f64> = (0..arity).map(|_| gamma.sample(&mut rng).max(1e-300)).collect();
                    let t: f64 = raw.iter().sum();
                    raw.iter().map(|x| x / t).collect()
                })
                .collect();
            variables.push(Variable {
                name: names[i].clone(),
                states: states.clone(),
                parents: ps.iter().map(|&p| names[p].clone()).collect(),
                cpt,
            });
        }
        let net = NetworkSpec { variables };
        net.validate()?;
        Ok(net)
    }
}

/// Draws `m` rows by ancestral sampling. Deterministic given `seed`.
pub fn forward_sample(net: &NetworkSpec, m: usize, seed: u64) -> Result<(Dataset, Labels)> {
    net.validate()?;
    let r = net.resolve()?;
    let n = net.n();
    let mut rng = stream_rng(seed, DATA_STREAM);
    let mut columns = vec![Vec::with_capacity(m); n];
    let mut row = vec![0u32; n];
    for _ in 0..m {
        for &v in &r.order {
            let var = &net.variables[v];
            let mut cfg = 0usize;
            for &p in &r.parents[v] {
                cfg = cfg * net.variables[p].states.len() + row[p] as usize;
            }
            let probs = &var.cpt[cfg];
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut state = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
            for (s, &p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    state = s;
                    break;
                }
            }
            row[v] = state as u32;
        }
        for v in 0..n {
            columns[v].push(row[v]);
        }
    }
    let arity = net.variables.iter().map(|v| v.states.len()).collect();
    let labels = net.variables.iter().map(|v| v.states.clone()).collect();
    Ok((Dataset::new(net.names(), arity, columns)?, labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn var(name: &str, parents: &[&str], cpt: Vec<Vec<f64>>) -> Variable {
        Variable {
            name: name.into(),
            states: (0..cpt[0].len()).map(|s| s.to_string()).collect(),
            parents: parents.iter().map(|s| s.to_string()).collect(),
            cpt,
        }
    }

    #[test]
    fn degenerate_cpt() {
        let net = NetworkSpec {
            variables: vec![var("A", &[], vec![vec![1.0, 0.0]])],
        };
        let (d, _) = forward_sample(&net, 1000, 3).unwrap();
        assert!(d.column(0).iter().all(|&x| x == 0));
    }

    #[test]
    fn independent_fair_coins() {
        let net = NetworkSpec {
            variables: vec![var("A", &[], vec![vec![0.5, 0.5]]), var("B", &[], vec![vec![0.5, 0.5]])],
        };
        let m = 100_000;
        let (d, _) = forward_sample(&net, m, 4).unwrap();
        let sigma = (0.25f64 * 0.75 / m as f64).sqrt();
        for a in 0..2 {
            for b in 0..2 {
                let c = (0..m).filter(|&r| d.column(0)[r] == a && d.column(1)[r] == b).count();
                let f = c as f64 / m as f64;
                assert!((f - 0.25).abs() < 3.0 * sigma, "cell ({a},{b}) = {f}");
            }
        }
    }

    #[test]
    fn copy_chain_agreement() {
        let net = NetworkSpec {
            variables: vec![
                var("A", &[], vec![vec![0.5, 0.5]]),
                var("B", &["A"], vec![vec![0.9, 0.1], vec![0.1, 0.9]]),
            ],
        };
        let m = 100_000;
        let (d, _) = forward_sample(&net, m, 5).unwrap();
        let agree = (0..m).filter(|&r| d.column(0)[r] == d.column(1)[r]).count() as f64 / m as f64;
        assert!((agree - 0.9).abs() < 3.0 * (0.09f64 / m as f64).sqrt(), "agreement {agree}");
    }

    #[test]
    fn first_parent_is_most_significant() {
        // C copies A when B = 0 and is constant 1 when B = 1
        let net = NetworkSpec {
            variables: vec![
                var("A", &[], vec![vec![0.5, 0.5]]),
                var("B", &[], vec![vec![0.5, 0.5]]),
                var(
                    "C",
                    &["A", "B"],
                    vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 1.0], vec![0.0, 1.0]],
                ),
            ],
        };
        let (d, _) = forward_sample(&net, 2000, 6).unwrap();
        for r in 0..2000 {
            let (a, b, c) = (d.column(0)[r], d.column(1)[r], d.column(2)[r]);
            assert_eq!(c, u32::from(a == 1 || b == 1));
        }
    }

    #[test]
    fn validation_errors() {
        let bad_sum = NetworkSpec {
            variables: vec![var("A", &[], vec![vec![0.5, 0.4]])],
        };
        assert!(bad_sum.validate().is_err());
        let bad_rows = NetworkSpec {
            variables: vec![var("A", &[], vec![vec![0.5, 0.5]]), var("B", &["A"], vec![vec![0.5, 0.5]])],
        };
        assert!(bad_rows.validate().is_err());
        let cyclic = NetworkSpec {
            variables: vec![
                var("A", &["B"], vec![vec![0.5, 0.5], vec![0.5, 0.5]]),
                var("B", &["A"], vec![vec![0.5, 0.5], vec![0.5, 0.5]]),
            ],
        };
        assert!(cyclic.validate().is_err());
        let unknown = NetworkSpec {
            variables: vec![var("A", &["Z"], vec![vec![0.5, 0.5], vec![0.5, 0.5]])],
        };
        assert!(unknown.validate().is_err());
    }

    #[test]
    fn toml_round_trip_and_determinism() {
        let net = NetworkSpec::random(6, 3, 2, 0.5, 1.0, 11).unwrap();
        let text = net.to_toml().unwrap();
        assert!(text.starts_with(FORMAT_LINE));
        let back = NetworkSpec::from_toml(&text).unwrap();
        assert_eq!(back, net);
        let (a, _) = forward_sample(&net, 500, 9).unwrap();
        let (b, _) = forward_sample(&back, 500, 9).unwrap();
        assert_eq!(a, b);
        assert!(net.dag().unwrap().parent_sets().iter().all(|p| p.len() <= 2));
    }
}
