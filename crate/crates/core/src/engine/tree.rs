use crate::error::Result;
use crate::model::Instance;
use crate::policies::{Encode, EncodeCtx};

#[derive(Debug, Clone)]
pub struct PrefixNode {
    /// Index in the previous stage; unused at stage 1.
    pub parent: usize,
    pub xs: Vec<usize>,
    /// `P(x_{1:t} | A = a)`.
    pub lik: Vec<f64>,
}

/// All positive-probability observation prefixes of one encoder, by stage.
#[derive(Debug, Clone)]
pub struct PrefixTree {
    pub encoder: usize,
    pub stages: Vec<Vec<PrefixNode>>,
}

impl PrefixTree {
    pub fn build(inst: &Instance, i: usize) -> Self {
        let prior = inst.a_prior();
        let a_size = inst.a_size();
        let alive = |lik: &[f64]| lik.iter().zip(prior).any(|(l, p)| l * p > 0.0);
        let mut stages: Vec<Vec<PrefixNode>> = Vec::with_capacity(inst.horizon());
        let first: Vec<PrefixNode> = (0..inst.x_size(i))
            .map(|x| PrefixNode { parent: usize::MAX, xs: vec![x], lik: (0..a_size).map(|a| inst.init(i)[a][x]).collect() })
            .filter(|n| alive(&n.lik))
            .collect();
        stages.push(first);
        for t in 1..inst.horizon() {
            let ker = inst.kernel(i, t);
            let mut next = Vec::new();
            for (pi, node) in stages[t - 1].iter().enumerate() {
                let xl = *node.xs.last().unwrap();
                for x in 0..inst.x_size(i) {
                    let lik: Vec<f64> = (0..a_size).map(|a| node.lik[a] * ker[a][xl][x]).collect();
                    if alive(&lik) {
                        let mut xs = node.xs.clone();
                        xs.push(x);
                        next.push(PrefixNode { parent: pi, xs, lik });
                    }
                }
            }
            stages.push(next);
        }
        Self { encoder: i, stages }
    }

    pub fn node_count(&self) -> usize {
        self.stages.iter().map(|s| s.len()).sum()
    }

    /// Symbol histories `z_{1:t-1}` per node given per-node outputs.
    pub fn symbol_histories(&self, outputs: &[Vec<usize>]) -> Vec<Vec<Vec<usize>>> {
        let mut out: Vec<Vec<Vec<usize>>> = Vec::with_capacity(self.stages.len());
        out.push(vec![Vec::new(); self.stages[0].len()]);
        for t in 1..self.stages.len() {
            let h = self.stages[t]
                .iter()
                .map(|n| {
                    let mut zs = out[t - 1][n.parent].clone();
                    zs.push(outputs[t - 1][n.parent]);
                    zs
                })
                .collect();
            out.push(h);
        }
        out
    }

    /// Outputs of a deterministic encoder on every node.
    pub fn assign(&self, enc: &dyn Encode, ctx: &EncodeCtx<'_>) -> Result<Vec<Vec<usize>>> {
        let mut outputs: Vec<Vec<usize>> = Vec::with_capacity(self.stages.len());
        let mut hist: Vec<Vec<usize>> = vec![Vec::new(); self.stages[0].len()];
        for t in 0..self.stages.len() {
            if t > 0 {
                hist = self.stages[t]
                    .iter()
                    .map(|n| {
                        let mut zs = hist[n.parent].clone();
                        zs.push(outputs[t - 1][n.parent]);
                        zs
                    })
                    .collect();
            }
            let z = self.stages[t].iter().zip(&hist).map(|(n, zs)| enc.encode(ctx, t + 1, &n.xs, zs)).collect::<Result<Vec<_>>>()?;
            outputs.push(z);
        }
        Ok(outputs)
    }
}

impl PrefixTree {
    /// History table of a deterministic encoder with the given node outputs.
    pub fn general_encoder(&self, outputs: &[Vec<usize>]) -> crate::policies::GeneralEncoder {
        let hist = self.symbol_histories(outputs);
        let mut enc = crate::policies::GeneralEncoder::new(self.stages.len());
        for (t, stage) in self.stages.iter().enumerate() {
            for (k, node) in stage.iter().enumerate() {
                enc.set(&node.xs, &hist[t][k], outputs[t][k]);
            }
        }
        enc
    }
}
