//! Discretization of hidden-node activations: a one-pass clustering of each
//! node's activation values, a merge-radius search that keeps the network's
//! classifications intact, and conversion of the training set into the
//! discrete hidden-value space.

use serde::{Deserialize, Serialize};

use crate::dataset::{AttributeKind, AttributeSchema, Dataset, Pattern, Value};
use crate::network::{argmax, Network};
use crate::{Error, Result, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster<S: Scalar> {
    /// Arithmetic mean of the member activations.
    pub representative: S,
    /// Smallest member.
    pub lo: S,
    /// Largest member.
    pub hi: S,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterTable<S: Scalar> {
    pub delta: S,
    /// One cluster list per hidden node, ascending by representative.
    pub nodes: Vec<Vec<Cluster<S>>>,
}

/// One-pass clustering: values are sorted ascending; a value joins the open
/// cluster while it is within `delta` of that cluster's first member,
/// otherwise it starts a new one. Empty input gives an empty list.
pub fn cluster_values<S: Scalar>(values: &[S], delta: S) -> Vec<Cluster<S>> {
    let mut sorted: Vec<S> = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("activations are finite"));
    let mut clusters = Vec::new();
    let mut start = 0;
    for end in 0..=sorted.len() {
        if end == sorted.len() || sorted[end] - sorted[start] > delta {
            if end > start {
                let members = &sorted[start..end];
                let sum: S = members.iter().copied().sum();
                clusters.push(Cluster {
                    representative: sum / S::of(members.len() as f64),
                    lo: members[0],
                    hi: members[end - start - 1],
                });
            }
            start = end;
        }
    }
    clusters
}

/// Index of the cluster whose representative is nearest to `value`; ties go
/// to the lower representative. Panics on an empty cluster list.
pub fn assign<S: Scalar>(clusters: &[Cluster<S>], value: S) -> usize {
    assert!(!clusters.is_empty(), "no clusters to assign to");
    let mut best = 0;
    let mut best_dist = (value - clusters[0].representative).abs();
    for (k, c) in clusters.iter().enumerate().skip(1) {
        let d = (value - c.representative).abs();
        if d < best_dist {
            best = k;
            best_dist = d;
        }
    }
    best
}

/// Builds the per-node cluster lists for one merge radius over the hidden
/// activations of every input.
pub fn build_table<S: Scalar>(net: &Network<S>, inputs: &[Vec<S>], delta: S) -> ClusterTable<S> {
    let mut activations: Vec<Vec<S>> = vec![Vec::with_capacity(inputs.len()); net.hidden_count];
    for x in inputs {
        let (hidden, _) = net.forward(x);
        for (node, a) in activations.iter_mut().zip(hidden) {
            node.push(a);
        }
    }
    ClusterTable {
        delta,
        nodes: activations
            .iter()
            .map(|vals| cluster_values(vals, delta))
            .collect(),
    }
}

/// Output activations computed after snapping each hidden activation to its
/// cluster representative.
pub fn rep_forward<S: Scalar>(net: &Network<S>, table: &ClusterTable<S>, input: &[S]) -> Vec<S> {
    let (hidden, _) = net.forward(input);
    let snapped: Vec<S> = hidden
        .iter()
        .zip(&table.nodes)
        .map(|(&a, clusters)| clusters[assign(clusters, a)].representative)
        .collect();
    net.forward_from_hidden(&snapped)
}

/// Fraction of inputs whose predicted class is unchanged by snapping hidden
/// activations to representatives.
pub fn table_agreement<S: Scalar>(
    net: &Network<S>,
    table: &ClusterTable<S>,
    inputs: &[Vec<S>],
) -> f64 {
    if inputs.is_empty() {
        return 1.0;
    }
    let hits = inputs
        .iter()
        .filter(|x| argmax(&rep_forward(net, table, x)) == argmax(&net.forward(x).1))
        .count();
    hits as f64 / inputs.len() as f64
}

/// The default merge-radius search grid: 0.05, 0.10, ..., 1.00.
pub fn default_grid<S: Scalar>() -> Vec<S> {
    (1..=20).map(|i| S::of(i as f64 * 0.05)).collect()
}

/// Picks the largest radius in `grid` whose discretized classifications
/// agree with the continuous network on every input; if none does, the
/// smallest grid radius is used. Fewer clusters mean shorter rules
/// downstream, hence the preference for large radii.
pub fn select_delta<S: Scalar>(
    net: &Network<S>,
    inputs: &[Vec<S>],
    grid: &[S],
) -> Result<ClusterTable<S>> {
    if grid.is_empty() {
        return Err(Error::Config("delta grid is empty".to_string()));
    }
    if grid.iter().any(|d| !(*d > S::zero())) {
        return Err(Error::Config("delta grid entries must be positive".to_string()));
    }
    let mut sorted: Vec<S> = grid.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("grid deltas are finite"));
    for &delta in sorted.iter().rev() {
        let table = build_table(net, inputs, delta);
        if table_agreement(net, &table, inputs) == 1.0 {
            return Ok(table);
        }
    }
    Ok(build_table(net, inputs, sorted[0]))
}

/// Re-expresses the training set in the discrete hidden space: one
/// categorical attribute per hidden node whose symbols are that node's
/// cluster indices, labeled with the class the snapped network predicts.
/// Class names carry over so downstream rules read naturally.
pub fn discretize_dataset<S: Scalar>(
    net: &Network<S>,
    inputs: &[Vec<S>],
    classes: &[String],
    table: &ClusterTable<S>,
) -> Dataset<S> {
    let schema: Vec<AttributeSchema<S>> = table
        .nodes
        .iter()
        .enumerate()
        .map(|(j, clusters)| AttributeSchema {
            name: format!("H{}", j + 1),
            kind: AttributeKind::Categorical {
                symbols: (0..clusters.len()).map(|k| format!("c{k}")).collect(),
            },
        })
        .collect();
    let patterns = inputs
        .iter()
        .map(|x| {
            let (hidden, _) = net.forward(x);
            let values: Vec<Value<S>> = hidden
                .iter()
                .zip(&table.nodes)
                .map(|(&a, clusters)| Value::Symbol(assign(clusters, a)))
                .collect();
            let snapped: Vec<S> = values
                .iter()
                .zip(&table.nodes)
                .map(|(v, clusters)| clusters[v.symbol()].representative)
                .collect();
            Pattern {
                values,
                label: argmax(&net.forward_from_hidden(&snapped)),
            }
        })
        .collect();
    Dataset {
        schema,
        classes: classes.to_vec(),
        patterns,
    }
}
