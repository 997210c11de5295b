use super::tree::PrefixTree;
use crate::model::{Instance, ReceiverSpec};

/// `P(X_t = x, M_{t-1} = m, Y_t = y | A = a)` for one encoder and stage,
/// laid out `[((a * |X| + x) * |M| + m) * |Y| + y]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StageMarginal {
    pub a_size: usize,
    pub x_size: usize,
    pub m_size: usize,
    pub y_size: usize,
    pub data: Vec<f64>,
}

impl StageMarginal {
    pub fn zeros(a_size: usize, x_size: usize, m_size: usize, y_size: usize) -> Self {
        Self { a_size, x_size, m_size, y_size, data: vec![0.0; a_size * x_size * m_size * y_size] }
    }

    #[inline]
    pub fn idx(&self, a: usize, x: usize, m: usize, y: usize) -> usize {
        ((a * self.x_size + x) * self.m_size + m) * self.y_size + y
    }

    #[inline]
    pub fn get(&self, a: usize, x: usize, m: usize, y: usize) -> f64 {
        self.data[self.idx(a, x, m, y)]
    }

    pub fn add_scaled(&mut self, other: &StageMarginal, w: f64) {
        for (d, s) in self.data.iter_mut().zip(&other.data) {
            *d += w * s;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderMarginals {
    pub stages: Vec<StageMarginal>,
}

impl EncoderMarginals {
    pub fn add_scaled(&mut self, other: &EncoderMarginals, w: f64) {
        for (a, b) in self.stages.iter_mut().zip(&other.stages) {
            a.add_scaled(b, w);
        }
    }
}

/// Per-node law of `M_{t-1}` given the node's symbol history.
pub fn memory_laws(inst: &Instance, receiver: &ReceiverSpec, tree: &PrefixTree, outputs: &[Vec<usize>]) -> Vec<Vec<Vec<f64>>> {
    let i = tree.encoder;
    let mut laws: Vec<Vec<Vec<f64>>> = Vec::with_capacity(tree.stages.len());
    laws.push(vec![vec![1.0]; tree.stages[0].len()]);
    for t in 1..tree.stages.len() {
        // Law of M_t for each stage-t node (index t-1), shared by its children.
        let m_size = receiver.memory_size(&inst.alphabets, i, t);
        let ch = inst.channel(i, t);
        let parent_next: Vec<Vec<f64>> = tree.stages[t - 1]
            .iter()
            .enumerate()
            .map(|(pi, _)| {
                let prev = &laws[t - 1][pi];
                let z = outputs[t - 1][pi];
                let mut next = vec![0.0; m_size];
                for (m, &pm) in prev.iter().enumerate() {
                    if pm == 0.0 {
                        continue;
                    }
                    for (y, &py) in ch[z].iter().enumerate() {
                        if py > 0.0 {
                            next[receiver.step(&inst.alphabets, i, t, m, y)] += pm * py;
                        }
                    }
                }
                next
            })
            .collect();
        laws.push(tree.stages[t].iter().map(|n| parent_next[n.parent].clone()).collect());
    }
    laws
}

/// Stage marginals of one deterministic encoder whose node outputs are given.
pub fn encoder_marginals(inst: &Instance, receiver: &ReceiverSpec, tree: &PrefixTree, outputs: &[Vec<usize>]) -> EncoderMarginals {
    let laws = memory_laws(inst, receiver, tree, outputs);
    encoder_marginals_with_laws(inst, receiver, tree, outputs, &laws)
}

pub fn encoder_marginals_with_laws(inst: &Instance, receiver: &ReceiverSpec, tree: &PrefixTree, outputs: &[Vec<usize>], laws: &[Vec<Vec<f64>>]) -> EncoderMarginals {
    let i = tree.encoder;
    let a_size = inst.a_size();
    let stages = (0..tree.stages.len())
        .map(|t| {
            let mut sm = StageMarginal::zeros(a_size, inst.x_size(i), receiver.memory_size(&inst.alphabets, i, t), inst.y_size(i));
            let ch = inst.channel(i, t + 1);
            for (ni, node) in tree.stages[t].iter().enumerate() {
                let x = *node.xs.last().unwrap();
                let z = outputs[t][ni];
                for (m, &pm) in laws[t][ni].iter().enumerate() {
                    if pm == 0.0 {
                        continue;
                    }
                    for (y, &py) in ch[z].iter().enumerate() {
                        if py == 0.0 {
                            continue;
                        }
                        for a in 0..a_size {
                            let k = sm.idx(a, x, m, y);
                            sm.data[k] += node.lik[a] * pm * py;
                        }
                    }
                }
            }
            sm
        })
        .collect();
    EncoderMarginals { stages }
}
