use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use super::{check_capacity, DdgError, LinearEncoding, ProbabilityMatrix};
use crate::numsys::PrecisionSpec;

/// Leaf labels keyed by `(level, position)`, where position counts nodes of
/// the complete binary tree from the left end of the level. Labels are
/// 1-based.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LeafTable {
    entries: BTreeMap<(u32, u64), u32>,
}

impl LeafTable {
    pub fn get(&self, level: u32, pos: u64) -> Option<u32> {
        self.entries.get(&(level, pos)).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, u64, u32)> + '_ {
        self.entries.iter().map(|(&(level, pos), &label)| (level, pos, label))
    }

    /// Entries keyed by heap index `2^level - 1 + pos`, when that fits.
    pub fn by_heap_index(&self) -> Option<BTreeMap<u128, u32>> {
        self.iter()
            .map(|(level, pos, label)| {
                let base = 1u128.checked_shl(level)? - 1;
                Some((base.checked_add(pos as u128)?, label))
            })
            .collect()
    }
}

/// Assigns leaf positions level by level, right to left, in row order.
pub fn leaf_table(p: &ProbabilityMatrix) -> Result<LeafTable, DdgError> {
    let mut entries = BTreeMap::new();
    // rightmost node of level 1
    let mut pos: i64 = 1;
    for c in 0..p.k() as usize {
        let level = c as u32 + 1;
        for r in 0..p.n() {
            if p.bit(r, c) {
                if pos < 0 {
                    return Err(DdgError::Structural("more leaves than free nodes on a level"));
                }
                entries.insert((level, pos as u64), r as u32 + 1);
                pos -= 1;
            }
        }
        // right child of the rightmost remaining branch
        pos = pos
            .checked_mul(2)
            .and_then(|x| x.checked_add(1))
            .ok_or(DdgError::Structural("level too wide"))?;
    }
    Ok(LeafTable { entries })
}

/// A node of the pseudotree. Children are indices into [`DdgTree::nodes`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DdgNode {
    /// 1-based outcome for leaves.
    pub label: Option<u32>,
    pub left: Option<usize>,
    pub right: Option<usize>,
    pub level: u32,
    pub pos: u64,
}

impl DdgNode {
    pub fn is_leaf(&self) -> bool {
        self.label.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DdgTree {
    nodes: Vec<DdgNode>,
    n: usize,
    spec: PrecisionSpec,
}

impl DdgTree {
    /// Node 0 is the root.
    pub fn nodes(&self) -> &[DdgNode] {
        &self.nodes
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spec(&self) -> PrecisionSpec {
        self.spec
    }

    /// `(level, outcome)` of every leaf, outcomes 0-based.
    pub fn leaves(&self) -> impl Iterator<Item = (u32, usize)> + '_ {
        self.nodes.iter().filter_map(|n| n.label.map(|label| (n.level, label as usize - 1)))
    }

    /// Edges `(parent, child)` that do not descend exactly one level.
    pub fn back_edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, node) in self.nodes.iter().enumerate() {
            for child in [node.left, node.right].into_iter().flatten() {
                if self.nodes[child].level != node.level + 1 {
                    out.push((i, child));
                }
            }
        }
        out
    }
}

struct Builder<'a> {
    leaves: &'a LeafTable,
    nodes: Vec<DdgNode>,
    ancestors: VecDeque<usize>,
    k: u32,
    l: u32,
    limit: usize,
}

impl Builder<'_> {
    fn visit(&mut self, level: u32, pos: u64) -> Result<usize, DdgError> {
        if self.nodes.len() >= self.limit {
            return Err(DdgError::Structural("tree exceeds 2nk nodes"));
        }
        let idx = self.nodes.len();
        let label = self.leaves.get(level, pos);
        self.nodes.push(DdgNode { label, left: None, right: None, level, pos });
        if label.is_none() {
            if level >= self.k {
                return Err(DdgError::Structural("branch below level k - 1"));
            }
            if level == self.l {
                self.ancestors.push_back(idx);
            }
        }
        Ok(idx)
    }
}

/// Builds the pseudotree. Right children are built before left ones, and a
/// missing child of a level `k - 1` branch is replaced by the oldest pending
/// level-`l` ancestor.
pub fn make_tree(p: &ProbabilityMatrix) -> Result<DdgTree, DdgError> {
    let (k, l) = (p.k(), p.l());
    check_capacity(p.n(), k)?;
    let leaves = leaf_table(p)?;
    let mut b = Builder {
        leaves: &leaves,
        nodes: Vec::new(),
        ancestors: VecDeque::new(),
        k,
        l,
        limit: 2 * p.n() * k as usize + 2,
    };
    let root = b.visit(0, 0)?;
    // (node, building its right child)
    let mut stack = vec![(root, true)];
    while let Some((idx, right)) = stack.pop() {
        let (level, pos) = (b.nodes[idx].level, b.nodes[idx].pos);
        let child_pos = pos
            .checked_mul(2)
            .map(|x| x + right as u64)
            .ok_or(DdgError::Structural("level too wide"))?;
        let (child, fresh) = if level + 1 == k && leaves.get(k, child_pos).is_none() {
            let a = b.ancestors.pop_front().ok_or(DdgError::Structural("ancestor list exhausted"))?;
            (a, false)
        } else {
            (b.visit(level + 1, child_pos)?, true)
        };
        if right {
            b.nodes[idx].right = Some(child);
            stack.push((idx, false));
        } else {
            b.nodes[idx].left = Some(child);
        }
        if fresh && !b.nodes[child].is_leaf() {
            stack.push((child, true));
        }
    }
    let placed = b.nodes.iter().filter(|n| n.is_leaf()).count();
    if placed != leaves.len() {
        return Err(DdgError::Structural("leaf below another leaf"));
    }
    Ok(DdgTree { nodes: b.nodes, n: p.n(), spec: p.spec() })
}

enum Frame {
    Left { node: usize, offset: usize },
    AfterLeft { node: usize, offset: usize },
    AfterRight,
}

/// Lays the tree out depth first, left subtree before right. A child that
/// already has a cell (a back-edge target) is referenced, not copied.
pub fn pack_tree(tree: &DdgTree) -> Result<LinearEncoding, DdgError> {
    let nodes = &tree.nodes;
    let size: usize = nodes.iter().map(|n| if n.is_leaf() { 1 } else { 2 }).sum();
    if size > i64::MAX as usize {
        return Err(DdgError::Capacity { n: tree.n, k: tree.spec.k() });
    }
    let mut enc = vec![0i64; size];
    let mut loc: Vec<Option<usize>> = vec![None; nodes.len()];
    let mut stack: Vec<Frame> = Vec::new();
    // next free cell returned by the most recent finished call
    let mut ret;

    let enter = |node: usize, offset: usize, enc: &mut [i64], loc: &mut [Option<usize>], stack: &mut Vec<Frame>| {
        loc[node] = Some(offset);
        match nodes[node].label {
            Some(label) => {
                enc[offset] = -(label as i64);
                Some(offset + 1)
            }
            None => {
                stack.push(Frame::Left { node, offset });
                None
            }
        }
    };

    ret = enter(0, 0, &mut enc, &mut loc, &mut stack);
    while let Some(frame) = stack.pop() {
        match frame {
            Frame::Left { node, offset } => {
                let left = nodes[node].left.ok_or(DdgError::Structural("branch without left child"))?;
                match loc[left] {
                    Some(at) => {
                        enc[offset] = at as i64;
                        ret = Some(offset + 2);
                        stack.push(Frame::AfterLeft { node, offset });
                    }
                    None => {
                        enc[offset] = (offset + 2) as i64;
                        stack.push(Frame::AfterLeft { node, offset });
                        ret = enter(left, offset + 2, &mut enc, &mut loc, &mut stack);
                    }
                }
            }
            Frame::AfterLeft { node, offset } => {
                let w = ret.expect("left subtree finished");
                let right = nodes[node].right.ok_or(DdgError::Structural("branch without right child"))?;
                match loc[right] {
                    Some(at) => {
                        enc[offset + 1] = at as i64;
                        ret = Some(w);
                    }
                    None => {
                        enc[offset + 1] = w as i64;
                        stack.push(Frame::AfterRight);
                        ret = enter(right, w, &mut enc, &mut loc, &mut stack);
                    }
                }
            }
            Frame::AfterRight => {}
        }
    }
    debug_assert_eq!(ret, Some(size));
    LinearEncoding::new(enc, tree.n, tree.spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use dashu_int::UBig;

    use crate::ddg::build_matrix;
    use crate::optimize::Assignment;

    fn matrix(m: &[u64], k: u32, l: u32) -> ProbabilityMatrix {
        let spec = PrecisionSpec::new(k, l).unwrap();
        let a = Assignment::new(m.iter().map(|&x| UBig::from(x)).collect(), spec.z()).unwrap();
        build_matrix(&a, spec).unwrap()
    }

    #[test]
    fn leaf_table_example() {
        let t = leaf_table(&matrix(&[2, 1, 1], 2, 2)).unwrap();
        let heap: Vec<(u128, u32)> = t.by_heap_index().unwrap().into_iter().collect();
        assert_eq!(heap, vec![(2, 1), (3, 3), (4, 2)]);
    }

    #[test]
    fn fair_coin() {
        let tree = make_tree(&matrix(&[1, 1], 1, 1)).unwrap();
        let enc = pack_tree(&tree).unwrap();
        // the right child gets the first row
        assert_eq!(enc.cells(), &[2, 3, -2, -1]);
    }

    #[test]
    fn dyadic_example_layout() {
        let tree = make_tree(&matrix(&[2, 1, 1], 2, 2)).unwrap();
        assert!(tree.back_edges().is_empty());
        assert_eq!(pack_tree(&tree).unwrap().cells(), &[2, 6, 4, 5, -3, -2, -1]);
    }

    #[test]
    fn pseudotree_back_edge() {
        let tree = make_tree(&matrix(&[9, 21], 5, 1)).unwrap();
        let back = tree.back_edges();
        assert_eq!(back.len(), 1);
        let (from, to) = back[0];
        assert_eq!(tree.nodes()[from].level, 4);
        assert_eq!(tree.nodes()[to].level, 1);
        let enc = pack_tree(&tree).unwrap();
        let cells = enc.cells();
        let cyc = (0..cells.len())
            .filter(|&c| cells[c] >= 0 && c + 1 < cells.len())
            .any(|c| (cells[c] as usize) <= c || (cells[c + 1] as usize) <= c);
        assert!(cyc);
    }

    #[test]
    fn malformed_matrices() {
        let spec = PrecisionSpec::dyadic(2).unwrap();
        let over = ProbabilityMatrix::from_rows(&[vec![true, true], vec![true, false]], spec).unwrap();
        assert!(matches!(make_tree(&over), Err(DdgError::Structural(_))));
        let under = ProbabilityMatrix::from_rows(&[vec![true, false], vec![false, false]], spec).unwrap();
        assert!(matches!(make_tree(&under), Err(DdgError::Structural(_))));
        let spec = PrecisionSpec::new(2, 0).unwrap();
        let empty = ProbabilityMatrix::from_rows(&[vec![false, false], vec![false, false]], spec).unwrap();
        assert!(make_tree(&empty).is_err());
    }
}
