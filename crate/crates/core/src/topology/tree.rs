//! Sampled trees under the canonical labeling.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{CoreError, Result};
use crate::rng::{tag, CounterRng};
use crate::topology::boundary::Adjacency;
use crate::topology::label::UhnLabel;
use crate::topology::offspring::{size_biased, OffspringLaw};

/// A prefix-closed set of labels with offspring counts, sampled within a
/// depth cap and a width cap (offspring counts clamped at the width cap,
/// generations beyond the depth cap cut).
///
/// Vertices are stored in breadth-first order, root first; children of a
/// vertex are contiguous and ordered by digit.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledTree {
    labels: Vec<UhnLabel>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    counts: Vec<u32>,
    adjacency: Vec<Vec<usize>>,
    index: BTreeMap<UhnLabel, usize>,
    depth_cap: usize,
    width_cap: usize,
}

impl SampledTree {
    fn assemble(
        labels: Vec<UhnLabel>,
        parent: Vec<Option<usize>>,
        counts: Vec<u32>,
        depth_cap: usize,
        width_cap: usize,
    ) -> Self {
        let n = labels.len();
        let mut children = vec![Vec::new(); n];
        for (i, p) in parent.iter().enumerate() {
            if let Some(p) = p {
                children[*p].push(i);
            }
        }
        let mut adjacency = vec![Vec::new(); n];
        for v in 0..n {
            if let Some(p) = parent[v] {
                adjacency[v].push(p);
            }
            adjacency[v].extend(children[v].iter().copied());
        }
        let index = labels.iter().cloned().enumerate().map(|(i, l)| (l, i)).collect();
        SampledTree { labels, parent, children, counts, adjacency, index, depth_cap, width_cap }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        false // the root is always a member
    }

    pub fn depth_cap(&self) -> usize {
        self.depth_cap
    }

    pub fn width_cap(&self) -> usize {
        self.width_cap
    }

    pub fn label(&self, v: usize) -> &UhnLabel {
        &self.labels[v]
    }

    pub fn labels(&self) -> &[UhnLabel] {
        &self.labels
    }

    pub fn index_of(&self, label: &UhnLabel) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn contains(&self, label: &UhnLabel) -> bool {
        self.index.contains_key(label)
    }

    /// Offspring count `c_v` of the sampled tree.
    pub fn offspring_count(&self, v: usize) -> u32 {
        self.counts[v]
    }

    pub fn parent_of(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn children_of(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn depth_of(&self, v: usize) -> usize {
        self.labels[v].depth()
    }

    /// Root degree `|N_root|`.
    pub fn root_degree(&self) -> usize {
        self.children[0].len()
    }

    pub fn max_depth(&self) -> usize {
        self.labels.iter().map(|l| l.depth()).max().unwrap_or(0)
    }

    /// Vertex indices at a given generation.
    pub fn generation(&self, depth: usize) -> Vec<usize> {
        (0..self.len()).filter(|&v| self.depth_of(v) == depth).collect()
    }

    /// Graph distances from `from` to every vertex.
    pub fn distances_from(&self, from: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.len()];
        let mut queue = std::collections::VecDeque::new();
        dist[from] = 0;
        queue.push_back(from);
        while let Some(v) = queue.pop_front() {
            for &u in &self.adjacency[v] {
                if dist[u] == usize::MAX {
                    dist[u] = dist[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        dist
    }

    /// One line per vertex: `label<TAB>offspring_count`, breadth-first.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (v, label) in self.labels.iter().enumerate() {
            let _ = writeln!(out, "{label}\t{}", self.counts[v]);
        }
        out
    }

    /// Parses the `to_text` format, validating prefix closure and the
    /// child-count membership rule.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (label, count) = line.split_once('\t').ok_or_else(|| {
                CoreError::Serialization(format!("line {}: expected label<TAB>count", lineno + 1))
            })?;
            let label = UhnLabel::parse(label)?;
            let count: u32 = count.parse().map_err(|_| {
                CoreError::Serialization(format!("line {}: bad count {count:?}", lineno + 1))
            })?;
            entries.push((label, count));
        }
        entries.sort_by(|a, b| (a.0.depth(), &a.0).cmp(&(b.0.depth(), &b.0)));
        let counts_by_label: BTreeMap<&UhnLabel, u32> =
            entries.iter().map(|(l, c)| (l, *c)).collect();
        if counts_by_label.len() != entries.len() {
            return Err(CoreError::Serialization("duplicate label".into()));
        }
        if !counts_by_label.keys().any(|l| l.is_root()) {
            return Err(CoreError::Serialization("missing root".into()));
        }
        for (label, &count) in &counts_by_label {
            if let Some(parent) = label.parent() {
                let pc = counts_by_label.get(&parent).ok_or_else(|| {
                    CoreError::Serialization(format!("{label}: parent {parent} missing"))
                })?;
                let last = *label.digits().last().unwrap();
                if last > *pc {
                    return Err(CoreError::Serialization(format!(
                        "{label}: digit {last} exceeds parent count {pc}"
                    )));
                }
            }
            for k in 1..=count {
                if !counts_by_label.contains_key(&label.child(k)) {
                    return Err(CoreError::Serialization(format!(
                        "{label}: child {k} of {count} missing"
                    )));
                }
            }
        }
        let labels: Vec<UhnLabel> = entries.iter().map(|(l, _)| l.clone()).collect();
        let index: BTreeMap<UhnLabel, usize> =
            labels.iter().cloned().enumerate().map(|(i, l)| (l, i)).collect();
        let parent = labels
            .iter()
            .map(|l| l.parent().map(|p| index[&p]))
            .collect();
        let counts = entries.iter().map(|(_, c)| *c).collect();
        let depth_cap = labels.iter().map(|l| l.depth()).max().unwrap_or(0);
        let width_cap = entries.iter().map(|(_, c)| *c as usize).max().unwrap_or(0).max(1);
        Ok(SampledTree::assemble(labels, parent, counts, depth_cap, width_cap))
    }
}

impl Adjacency for SampledTree {
    fn vertex_count(&self) -> usize {
        self.len()
    }
    fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }
}

/// Samples a unimodular Galton-Watson tree: the root draws its offspring
/// count from `rho`, every later vertex from the size-biased law, all counts
/// clamped at `width_cap`, and generations beyond `depth_cap` are cut.
///
/// Each vertex draws from a stream keyed by its label, so the sample is a
/// pure function of `(rho, caps, seed)`.
pub fn sample_ugw(
    rho: &OffspringLaw,
    depth_cap: usize,
    width_cap: usize,
    seed: u64,
) -> Result<SampledTree> {
    if depth_cap < 1 || width_cap < 1 {
        return Err(CoreError::InvalidArgument("caps must be >= 1".into()));
    }
    let hat = size_biased(rho);

    let mut labels = vec![UhnLabel::root()];
    let mut parent: Vec<Option<usize>> = vec![None];
    let mut counts: Vec<u32> = Vec::new();

    let mut cursor = 0usize;
    while cursor < labels.len() {
        let label = labels[cursor].clone();
        let depth = label.depth();
        let count = if depth >= depth_cap {
            0
        } else {
            let law = if depth == 0 {
                rho
            } else {
                // The size-biased law is only needed once a vertex actually
                // has to reproduce; rho = delta_0 never reaches this branch.
                match &hat {
                    Ok(h) => h,
                    Err(_) => {
                        return Err(CoreError::InvalidLaw(
                            "size-biased law undefined but non-root offspring requested".into(),
                        ))
                    }
                }
            };
            let mut rng = CounterRng::new(seed, &[tag::TREE, label.stream_key()]);
            law.sample(&mut rng).min(width_cap)
        };
        counts.push(count as u32);
        for k in 1..=count as u32 {
            labels.push(label.child(k));
            parent.push(Some(cursor));
        }
        cursor += 1;
    }
    Ok(SampledTree::assemble(labels, parent, counts, depth_cap, width_cap))
}
