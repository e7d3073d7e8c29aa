//! Invariant subspaces spanned by basis states reachable from a seed.
//!
//! Every generator here is sparse in the product basis, so the dynamics of a
//! state never leave the span of basis states connected to its support by
//! non-zero matrix elements. Restricting to that span is exact and keeps the
//! dense linear algebra small.

use crate::sparse::CsrMatrix;

/// Sorted basis indices closed under the given maps, plus a lookup table.
#[derive(Clone, Debug)]
pub struct Subspace {
    indices: Vec<usize>,
    position: Vec<u32>,
}

const ABSENT: u32 = u32::MAX;

impl Subspace {
    /// Closure of `seed` under each map `M` (edge `i -> j` whenever `M[j, i] != 0`).
    pub fn reachable(dim: usize, seed: &[usize], maps: &[&CsrMatrix]) -> Self {
        let transposes: Vec<CsrMatrix> = maps.iter().map(|m| m.adjoint()).collect();
        let mut seen = vec![false; dim];
        let mut stack: Vec<usize> = Vec::new();
        for &i in seed {
            if !seen[i] {
                seen[i] = true;
                stack.push(i);
            }
        }
        while let Some(i) = stack.pop() {
            for t in &transposes {
                for (j, _) in t.row(i) {
                    if !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        let indices: Vec<usize> = (0..dim).filter(|&i| seen[i]).collect();
        Self::from_sorted(dim, indices)
    }

    pub fn from_sorted(dim: usize, indices: Vec<usize>) -> Self {
        let mut position = vec![ABSENT; dim];
        for (p, &i) in indices.iter().enumerate() {
            position[i] = p as u32;
        }
        Subspace { indices, position }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn position(&self, i: usize) -> Option<usize> {
        match self.position[i] {
            ABSENT => None,
            p => Some(p as usize),
        }
    }

    pub fn restrict(&self, m: &CsrMatrix) -> CsrMatrix {
        m.restrict(&self.indices)
    }
}
