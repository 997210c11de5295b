use crate::error::{Error, Result};
use crate::model::{Alphabets, MemoryRules, Staged};

/// Latching memory: holds `blank` until the first non-blank reception, then
/// keeps that symbol. Memory values share indices with received symbols.
pub fn detection_memory_rule(alph: &Alphabets, i: usize, blank: usize) -> Result<MemoryRules> {
    let ys = alph.y_sizes[i];
    if blank >= ys {
        return Err(Error::InvalidArgument("blank symbol outside the received alphabet".into()));
    }
    if alph.m_sizes[i] < ys {
        return Err(Error::InvalidArgument("memory must be able to hold every received symbol".into()));
    }
    let ms = alph.m_sizes[i];
    let later = (0..ms).map(|m| (0..ys).map(|y| if m == blank { y } else { m }).collect()).collect();
    Ok(MemoryRules { first: (0..ys).collect(), later: Staged::Invariant(later) })
}
