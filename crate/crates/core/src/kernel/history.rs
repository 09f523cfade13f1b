use super::{theta_scale, CoeffFamily, FamilyOptions, WeightBuilder};
use crate::error::{Error, Result};
use crate::grid::GridField;

/// Stored half-step differences `δ_t U^l`, node-major.
#[derive(Debug, Clone, Default)]
pub struct HistoryBuffer {
    nodes: Vec<Vec<f64>>,
    count: usize,
}

impl HistoryBuffer {
    pub fn new(nodes: usize) -> Self {
        HistoryBuffer { nodes: vec![Vec::new(); nodes], count: 0 }
    }

    pub fn with_capacity(nodes: usize, steps: usize) -> Self {
        HistoryBuffer { nodes: (0..nodes).map(|_| Vec::with_capacity(steps)).collect(), count: 0 }
    }

    /// Append `δ_t U^l` for the next `l`.
    pub fn push(&mut self, delta: &[f64]) -> Result<()> {
        if delta.len() != self.nodes.len() {
            return Err(Error::Dimension { expected: self.nodes.len(), got: delta.len() });
        }
        for (col, d) in self.nodes.iter_mut().zip(delta) {
            col.push(*d);
        }
        self.count += 1;
        Ok(())
    }

    /// Append `(next - curr) / (k/2)`.
    pub fn push_difference(&mut self, next: &GridField, curr: &GridField, k: f64) -> Result<()> {
        let d = crate::grid::delta_t(next, curr, k)?;
        self.push(d.values())
    }

    /// Number of stored differences.
    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// All differences at node `j`, oldest first.
    pub fn node(&self, j: usize) -> &[f64] {
        &self.nodes[j]
    }
}

/// Per-node scaled weights `θ_{l+1/2,j} = k^{1-β_j} Γ(2-β_j)^{-1} a_{·,l+1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaWeights {
    pub family: CoeffFamily,
    pub lead: usize,
    /// `per_node[j][m]` multiplies `δ_t U_j^{m/2}`.
    pub per_node: Vec<Vec<f64>>,
}

impl ThetaWeights {
    /// Weights at every node, with `beta_at(j)` the order at node `j` and the target time.
    pub fn build(
        family: CoeffFamily,
        lead: usize,
        k: f64,
        alpha: f64,
        nodes: usize,
        opts: FamilyOptions,
        beta_at: impl Fn(usize) -> f64,
    ) -> Result<Self> {
        if !(k > 0.0) {
            return Err(Error::parameter(format!("time step must be positive, got {k}")));
        }
        crate::grid::check_alpha(alpha)?;
        let mut builder = WeightBuilder::new(alpha, lead + 1, opts);
        let mut per_node = Vec::with_capacity(nodes);
        for j in 0..nodes {
            let beta = beta_at(j);
            if !(beta > 0.0 && beta < 2.0) {
                return Err(Error::Domain(format!("order {beta} at node {j} outside (0, 2)")));
            }
            let mut w = Vec::new();
            builder.build(family, lead, beta, &mut w);
            let s = theta_scale(k, beta);
            w.iter_mut().for_each(|a| *a *= s);
            per_node.push(w);
        }
        Ok(ThetaWeights { family, lead, per_node })
    }
}

/// `Σ_m θ_{(m+1)/2, j} δ_t U_j^{m/2}` over every weight of the family.
pub fn discrete_caputo(history: &HistoryBuffer, weights: &ThetaWeights, node: usize) -> Result<f64> {
    let w = weights
        .per_node
        .get(node)
        .ok_or_else(|| Error::Index { index: node.to_string(), range: format!("0..{}", weights.per_node.len()) })?;
    if history.len() < w.len() {
        return Err(Error::State(format!("history holds {} differences, the sum needs {}", history.len(), w.len())));
    }
    Ok(w.iter().zip(history.node(node)).map(|(a, d)| a * d).sum())
}

/// Discrete Caputo derivative of a scalar function `u` at the family's target time,
/// `(lead + α) k` for `Int` and `(lead + 1/2 + α) k` for `Half`.
pub fn discrete_caputo_of(
    u: impl Fn(f64) -> f64,
    family: CoeffFamily,
    lead: usize,
    k: f64,
    alpha: f64,
    beta: f64,
    opts: FamilyOptions,
) -> Result<f64> {
    let w = super::family_weights(family, lead, alpha, beta, opts)?;
    let half = k / 2.0;
    let mut prev = u(0.0);
    let mut s = 0.0;
    for (m, a) in w.iter().enumerate() {
        let next = u((m + 1) as f64 * half);
        s += a * (next - prev) / half;
        prev = next;
    }
    Ok(theta_scale(k, beta) * s)
}
