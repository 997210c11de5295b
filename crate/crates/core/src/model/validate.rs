use std::fmt;

use serde::{Deserialize, Serialize};

use super::instance::{is_identity, Instance, MemoryMode, Matrix};
use super::staged::Staged;

pub const ROW_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub constraint: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
    fn push(&mut self, path: impl Into<String>, constraint: impl Into<String>) {
        self.violations.push(Violation { path: path.into(), constraint: constraint.into() });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.violations.iter().map(|v| format!("{}: {}", v.path, v.constraint)).collect();
        write!(f, "{}", parts.join("; "))
    }
}

fn check_pmf(rep: &mut ValidationReport, path: &str, row: &[f64], len: usize) {
    if row.len() != len {
        rep.push(path, format!("expected {} entries, found {}", len, row.len()));
        return;
    }
    if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
        rep.push(path, "entries must be finite and non-negative");
        return;
    }
    let s: f64 = row.iter().sum();
    if (s - 1.0).abs() > ROW_TOL {
        rep.push(path, format!("row not normalized (sum {s})"));
    }
}

fn check_matrix(rep: &mut ValidationReport, path: &str, m: &Matrix, rows: usize, cols: usize) {
    if m.len() != rows {
        rep.push(path, format!("expected {rows} rows, found {}", m.len()));
        return;
    }
    let before = rep.violations.len();
    for (r, row) in m.iter().enumerate() {
        let mut sub = ValidationReport::default();
        check_pmf(&mut sub, path, row, cols);
        for v in sub.violations {
            rep.push(v.path, format!("{} at row {r}", v.constraint));
        }
        if rep.violations.len() > before {
            return;
        }
    }
}

fn check_stage_count<T>(rep: &mut ValidationReport, path: &str, s: &Staged<T>, expected: usize) {
    if let Some(n) = s.listed_len() {
        if n != expected {
            rep.push(path, format!("expected {expected} stages, found {n}"));
        }
    }
}

/// Check every structural and stochastic constraint; never fails, reports instead.
pub fn validate(inst: &Instance) -> ValidationReport {
    let mut rep = ValidationReport::default();
    let al = &inst.alphabets;
    let n = al.n_encoders;
    if n == 0 {
        rep.push("alphabets.n_encoders", "must be at least 1");
        return rep;
    }
    if al.horizon == 0 {
        rep.push("alphabets.horizon", "must be at least 1");
    }
    if al.a_size == 0 {
        rep.push("alphabets.a_size", "must be at least 1");
    }
    for (name, v) in [("x_sizes", &al.x_sizes), ("z_sizes", &al.z_sizes), ("y_sizes", &al.y_sizes), ("m_sizes", &al.m_sizes)] {
        if v.len() != n {
            rep.push(format!("alphabets.{name}"), format!("expected {n} entries, found {}", v.len()));
        } else if let Some(i) = v.iter().position(|&s| s == 0) {
            rep.push(format!("alphabets.{name}[{i}]"), "must be at least 1");
        }
    }
    if !rep.ok() {
        return rep;
    }
    let t_len = al.horizon;

    check_pmf(&mut rep, "source.a_prior", &inst.source.a_prior, al.a_size);
    if inst.source.init.len() != n {
        rep.push("source.init", format!("expected {n} encoders"));
    }
    if inst.source.kernel.len() != n {
        rep.push("source.kernel", format!("expected {n} encoders"));
    }
    if inst.channels.matrix.len() != n {
        rep.push("channels.matrix", format!("expected {n} encoders"));
    }
    if !rep.ok() {
        return rep;
    }
    for i in 0..n {
        let xs = al.x_sizes[i];
        check_matrix(&mut rep, &format!("source.init[{i}]"), &inst.source.init[i], al.a_size, xs);
        let kpath = format!("source.kernel[{i}]");
        check_stage_count(&mut rep, &kpath, &inst.source.kernel[i], t_len.saturating_sub(1));
        for (k, ker) in inst.source.kernel[i].stored() {
            let path = format!("source.kernel[{i}][{k}]");
            if ker.len() != al.a_size {
                rep.push(&path, format!("expected {} per-a tables", al.a_size));
                continue;
            }
            for tab in ker {
                let before = rep.violations.len();
                check_matrix(&mut rep, &path, tab, xs, xs);
                if rep.violations.len() > before {
                    break;
                }
            }
        }
        check_stage_count(&mut rep, &format!("channels.matrix[{i}]"), &inst.channels.matrix[i], t_len);
        for (k, m) in inst.channels.matrix[i].stored() {
            check_matrix(&mut rep, &format!("channels.matrix[{i}][{k}]"), m, al.z_sizes[i], al.y_sizes[i]);
        }
    }

    match inst.receiver.mode {
        MemoryMode::Perfect => {
            for i in 0..n {
                let identity = al.z_sizes[i] == al.y_sizes[i]
                    && inst.channels.matrix[i].stored().iter().all(|(_, m)| is_identity(m));
                if !identity {
                    rep.push(format!("channels.matrix[{i}]"), "P2 requires noiseless channels");
                }
            }
            if !inst.receiver.memory_rules.is_empty() {
                rep.push("receiver.memory_rules", "perfect memory takes no rule tables");
            }
        }
        MemoryMode::Finite => {
            if inst.receiver.memory_rules.len() != n {
                rep.push("receiver.memory_rules", format!("expected {n} encoders"));
            } else {
                for i in 0..n {
                    let r = &inst.receiver.memory_rules[i];
                    let (ms, ys) = (al.m_sizes[i], al.y_sizes[i]);
                    let path = format!("receiver.memory_rules[{i}].first");
                    if r.first.len() != ys {
                        rep.push(&path, format!("expected {ys} entries"));
                    } else if r.first.iter().any(|&m| m >= ms) {
                        rep.push(&path, "memory value out of range");
                    }
                    check_stage_count(&mut rep, &format!("receiver.memory_rules[{i}].later"), &r.later, t_len.saturating_sub(2));
                    for (k, tab) in r.later.stored() {
                        let path = format!("receiver.memory_rules[{i}].later[{k}]");
                        if tab.len() != ms || tab.iter().any(|row| row.len() != ys) {
                            rep.push(&path, format!("expected a {ms}x{ys} table"));
                        } else if tab.iter().flatten().any(|&m| m >= ms) {
                            rep.push(&path, "memory value out of range");
                        }
                    }
                }
            }
        }
    }

    let d = &inst.distortion;
    if d.estimate_size == 0 {
        rep.push("distortion.estimate_size", "must be at least 1");
    }
    check_stage_count(&mut rep, "distortion.rho", &d.rho, t_len);
    let want = inst.xa_size() * d.estimate_size;
    for (k, tab) in d.rho.stored() {
        let path = format!("distortion.rho[{k}]");
        if tab.len() != want {
            rep.push(&path, format!("expected {want} entries, found {}", tab.len()));
        } else if tab.iter().any(|v| !v.is_finite() || *v < 0.0) {
            rep.push(&path, "entries must be finite and non-negative");
        }
    }
    rep
}
