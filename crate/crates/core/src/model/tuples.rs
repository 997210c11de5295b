/// Indexing of all tuples over `0..base` with lengths `1..=max_len`.
/// Shorter tuples come first; within a length, oldest symbol is most significant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TupleSpace {
    pub base: usize,
    pub max_len: usize,
}

impl TupleSpace {
    pub fn new(base: usize, max_len: usize) -> Self {
        Self { base, max_len }
    }

    pub fn offset(&self, len: usize) -> usize {
        (1..len).map(|j| self.base.pow(j as u32)).sum()
    }

    pub fn size(&self) -> usize {
        self.offset(self.max_len + 1)
    }

    pub fn encode(&self, tuple: &[usize]) -> usize {
        let code = tuple.iter().fold(0, |acc, &x| acc * self.base + x);
        self.offset(tuple.len()) + code
    }

    pub fn decode(&self, idx: usize) -> Vec<usize> {
        let mut len = 1;
        while self.offset(len + 1) <= idx {
            len += 1;
        }
        let mut code = idx - self.offset(len);
        let mut out = vec![0; len];
        for slot in out.iter_mut().rev() {
            *slot = code % self.base;
            code /= self.base;
        }
        out
    }
}
