//! Directed acyclic graphs, adjustment sets and the backdoor criterion.
//!
//! Nodes are zero-based indices `0..p`. Edge lists are kept in ascending
//! `(src, dst)` order so that every derived quantity (paths, adjustment sets,
//! sampled graphs) is deterministic.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};
use std::io::{BufRead, Write};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Default cap on enumerated paths. Exceeding it is an error, never a silent
/// truncation.
pub const DEFAULT_PATH_CAP: usize = 100_000;

/// A directed acyclic graph over nodes `0..p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    p: usize,
    edges: Vec<(usize, usize)>,
    children: Vec<Vec<usize>>,
    parents: Vec<Vec<usize>>,
}

impl Dag {
    /// Builds a DAG, rejecting out-of-range indices, self-loops, duplicate
    /// edges and cycles.
    pub fn new(p: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidParam("graph needs at least one node".into()));
        }
        let mut sorted: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= p {
                return Err(Error::NodeOutOfRange { node: a, p });
            }
            if b >= p {
                return Err(Error::NodeOutOfRange { node: b, p });
            }
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            sorted.push((a, b));
        }
        sorted.sort_unstable();
        for w in sorted.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateEdge { src: w[0].0, dst: w[0].1 });
            }
        }
        let mut children = vec![Vec::new(); p];
        let mut parents = vec![Vec::new(); p];
        for &(a, b) in &sorted {
            children[a].push(b);
            parents[b].push(a);
        }
        for list in children.iter_mut().chain(parents.iter_mut()) {
            list.sort_unstable();
        }
        let dag = Dag { p, edges: sorted, children, parents };
        if dag.kahn_order().is_none() {
            return Err(Error::Cyclic);
        }
        Ok(dag)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Edges in ascending `(src, dst)` order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, src: usize, dst: usize) -> bool {
        self.edges.binary_search(&(src, dst)).is_ok()
    }

    fn check_node(&self, j: usize) -> Result<()> {
        if j >= self.p {
            return Err(Error::NodeOutOfRange { node: j, p: self.p });
        }
        Ok(())
    }

    /// Parents of `j`, ascending.
    pub fn parents(&self, j: usize) -> Result<&[usize]> {
        self.check_node(j)?;
        Ok(&self.parents[j])
    }

    /// Children of `j`, ascending.
    pub fn children(&self, j: usize) -> Result<&[usize]> {
        self.check_node(j)?;
        Ok(&self.children[j])
    }

    /// Proper descendants of `j` (nodes reachable by a directed path of
    /// length >= 1), ascending.
    pub fn descendants(&self, j: usize) -> Result<Vec<usize>> {
        self.check_node(j)?;
        Ok(self.reach(&[j], &self.children))
    }

    /// Proper ancestors of `j`, ascending.
    pub fn ancestors(&self, j: usize) -> Result<Vec<usize>> {
        self.check_node(j)?;
        Ok(self.reach(&[j], &self.parents))
    }

    fn reach(&self, starts: &[usize], step: &[Vec<usize>]) -> Vec<usize> {
        let mut seen = vec![false; self.p];
        let mut stack: Vec<usize> = starts.to_vec();
        let mut out = Vec::new();
        while let Some(v) = stack.pop() {
            for &w in &step[v] {
                if !seen[w] {
                    seen[w] = true;
                    out.push(w);
                    stack.push(w);
                }
            }
        }
        out.retain(|v| !starts.contains(v));
        out.sort_unstable();
        out
    }

    fn kahn_order(&self) -> Option<Vec<usize>> {
        let mut indeg: Vec<usize> = (0..self.p).map(|j| self.parents[j].len()).collect();
        let mut heap: BinaryHeap<Reverse<usize>> = (0..self.p)
            .filter(|&j| indeg[j] == 0)
            .map(Reverse)
            .collect();
        let mut order = Vec::with_capacity(self.p);
        while let Some(Reverse(v)) = heap.pop() {
            order.push(v);
            for &w in &self.children[v] {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    heap.push(Reverse(w));
                }
            }
        }
        (order.len() == self.p).then_some(order)
    }

    /// A topological order; ties broken by ascending node index.
    pub fn topological_order(&self) -> Vec<usize> {
        self.kahn_order().expect("constructed DAGs are acyclic")
    }

    /// The graph with all edges into `x` removed (`x` becomes a root).
    pub fn without_in_edges(&self, x: usize) -> Result<Dag> {
        self.check_node(x)?;
        let edges: Vec<(usize, usize)> =
            self.edges.iter().copied().filter(|&(_, b)| b != x).collect();
        Dag::new(self.p, &edges)
    }
}

/// A directed path: consecutive nodes joined by edges of the host DAG.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodePath {
    nodes: Vec<usize>,
}

impl NodePath {
    /// Validates adjacency and node-distinctness against `dag`.
    pub fn new(dag: &Dag, nodes: Vec<usize>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidParam("empty path".into()));
        }
        let mut seen = BTreeSet::new();
        for &v in &nodes {
            dag.check_node(v)?;
            if !seen.insert(v) {
                return Err(Error::InvalidParam(format!("path repeats node {v}")));
            }
        }
        for w in nodes.windows(2) {
            if !dag.has_edge(w[0], w[1]) {
                return Err(Error::InvalidParam(format!("missing edge {} -> {}", w[0], w[1])));
            }
        }
        Ok(NodePath { nodes })
    }

    fn from_nodes(nodes: Vec<usize>) -> Self {
        NodePath { nodes }
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// How an adjustment set was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Explicit,
    Parents,
    OrderSuperset,
}

/// A candidate backdoor adjustment set. Members iterate in ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjustmentSet {
    members: BTreeSet<usize>,
    provenance: Provenance,
}

impl AdjustmentSet {
    pub fn explicit<I: IntoIterator<Item = usize>>(members: I) -> Self {
        AdjustmentSet { members: members.into_iter().collect(), provenance: Provenance::Explicit }
    }

    pub fn empty() -> Self {
        AdjustmentSet { members: BTreeSet::new(), provenance: Provenance::Explicit }
    }

    /// The parents of `x` in `dag`.
    pub fn parents_of(dag: &Dag, x: usize) -> Result<Self> {
        Ok(AdjustmentSet {
            members: dag.parents(x)?.iter().copied().collect(),
            provenance: Provenance::Parents,
        })
    }

    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().copied()
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.members.iter().copied().collect()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.members.contains(&j)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Removes `j` if present (e.g. dropping the response from a
    /// predecessor-based set).
    pub fn without(&self, j: usize) -> Self {
        let mut members = self.members.clone();
        members.remove(&j);
        AdjustmentSet { members, provenance: self.provenance }
    }
}

/// The at most `p_max` immediate predecessors of `j` in `order`.
///
/// `order` must be a permutation of `0..order.len()` containing `j`.
pub fn order_superset(order: &[usize], j: usize, p_max: usize) -> Result<AdjustmentSet> {
    let p = order.len();
    let mut seen = vec![false; p];
    for &v in order {
        if v >= p {
            return Err(Error::InvalidOrder(format!("index {v} out of range for {p} nodes")));
        }
        if seen[v] {
            return Err(Error::InvalidOrder(format!("index {v} repeated")));
        }
        seen[v] = true;
    }
    let pos = order
        .iter()
        .position(|&v| v == j)
        .ok_or_else(|| Error::InvalidOrder(format!("node {j} not in order")))?;
    let lo = pos.saturating_sub(p_max);
    Ok(AdjustmentSet {
        members: order[lo..pos].iter().copied().collect(),
        provenance: Provenance::OrderSuperset,
    })
}

/// Checks the backdoor criterion: `s` contains no descendant of `x`, and
/// every path between `x` and `y` whose first edge points into `x` is blocked
/// by `s`. A non-collider blocks when it lies in `s`; a collider blocks
/// unless it or one of its descendants lies in `s`.
pub fn is_valid_backdoor_set(dag: &Dag, x: usize, y: usize, s: &AdjustmentSet) -> Result<bool> {
    dag.check_node(x)?;
    dag.check_node(y)?;
    if x == y {
        return Err(Error::InvalidParam("x and y must differ".into()));
    }
    if s.contains(x) {
        return Err(Error::AdjustmentContains { node: x, role: "intervention variable" });
    }
    if s.contains(y) {
        return Err(Error::AdjustmentContains { node: y, role: "response variable" });
    }
    for m in s.members() {
        dag.check_node(m)?;
    }

    let desc_x = dag.descendants(x)?;
    if s.members().any(|m| desc_x.binary_search(&m).is_ok()) {
        return Ok(false);
    }

    // Collider m keeps a path open iff m or a proper descendant of m is in s,
    // i.e. m is in s or m is an ancestor of some member.
    let mut in_s = vec![false; dag.p];
    let mut collider_open = vec![false; dag.p];
    for m in s.members() {
        in_s[m] = true;
        collider_open[m] = true;
        for a in dag.ancestors(m)? {
            collider_open[a] = true;
        }
    }

    // Reachability over (node, arrival) states. `FromChild`: the previous
    // node on the walk is a child of the current one (we moved against an
    // edge). `FromParent`: the previous node is a parent (we moved along an
    // edge). x itself is never re-entered; backdoor paths visit it only once.
    const FROM_CHILD: usize = 0;
    const FROM_PARENT: usize = 1;
    let mut visited = vec![[false; 2]; dag.p];
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for &pa in dag.parents(x)? {
        if !visited[pa][FROM_CHILD] {
            visited[pa][FROM_CHILD] = true;
            stack.push((pa, FROM_CHILD));
        }
    }
    while let Some((v, arrival)) = stack.pop() {
        if v == y {
            return Ok(false);
        }
        let via_parents = match arrival {
            // ... w -> v -> prev: chain; open iff v not in s.
            FROM_CHILD => !in_s[v],
            // ... prev -> v <- w: collider.
            _ => collider_open[v],
        };
        // Continuations prev <- v -> w (fork) and prev -> v -> w (chain) both
        // require v outside s.
        let via_children = !in_s[v];
        if via_parents {
            for &w in &dag.parents[v] {
                if w != x && !visited[w][FROM_CHILD] {
                    visited[w][FROM_CHILD] = true;
                    stack.push((w, FROM_CHILD));
                }
            }
        }
        if via_children {
            for &w in &dag.children[v] {
                if w != x && !visited[w][FROM_PARENT] {
                    visited[w][FROM_PARENT] = true;
                    stack.push((w, FROM_PARENT));
                }
            }
        }
    }
    Ok(true)
}

/// All directed paths from `x` to `y`, in lexicographic node order. Errors
/// once more than `cap` paths exist.
pub fn directed_paths(dag: &Dag, x: usize, y: usize, cap: usize) -> Result<Vec<NodePath>> {
    dag.check_node(x)?;
    dag.check_node(y)?;
    if x == y {
        return Err(Error::InvalidParam("x and y must differ".into()));
    }
    let mut can_reach_y = vec![false; dag.p];
    can_reach_y[y] = true;
    for a in dag.ancestors(y)? {
        can_reach_y[a] = true;
    }
    let mut out = Vec::new();
    if !can_reach_y[x] {
        return Ok(out);
    }
    let mut prefix = vec![x];
    collect_paths(dag, y, cap, &can_reach_y, &mut prefix, &mut out)?;
    Ok(out)
}

fn collect_paths(
    dag: &Dag,
    y: usize,
    cap: usize,
    can_reach_y: &[bool],
    prefix: &mut Vec<usize>,
    out: &mut Vec<NodePath>,
) -> Result<()> {
    let v = *prefix.last().expect("non-empty prefix");
    if v == y {
        if out.len() == cap {
            return Err(Error::PathCapExceeded { x: prefix[0], y, cap });
        }
        out.push(NodePath::from_nodes(prefix.clone()));
        return Ok(());
    }
    for &w in &dag.children[v] {
        // A DAG path cannot revisit a node; the reachability filter keeps the
        // search linear in the emitted output.
        if can_reach_y[w] {
            prefix.push(w);
            collect_paths(dag, y, cap, can_reach_y, prefix, out)?;
            prefix.pop();
        }
    }
    Ok(())
}

/// All directed paths ending at `y` that start at a root of the graph in
/// which the in-edges of `x` have been removed (so `x` is itself a root).
/// Ordered by root index, then lexicographically. Shares `cap` across roots.
pub fn root_paths(dag: &Dag, x: usize, y: usize, cap: usize) -> Result<Vec<NodePath>> {
    dag.check_node(x)?;
    dag.check_node(y)?;
    if x == y {
        return Err(Error::InvalidParam("x and y must differ".into()));
    }
    let cut = dag.without_in_edges(x)?;
    let mut can_reach_y = vec![false; cut.p];
    can_reach_y[y] = true;
    for a in cut.ancestors(y)? {
        can_reach_y[a] = true;
    }
    let mut out = Vec::new();
    for r in 0..cut.p {
        if r != y && cut.parents[r].is_empty() && can_reach_y[r] {
            let mut prefix = vec![r];
            let mut paths = Vec::new();
            collect_paths(&cut, y, cap - out.len(), &can_reach_y, &mut prefix, &mut paths)
                .map_err(|e| match e {
                    Error::PathCapExceeded { .. } => Error::PathCapExceeded { x, y, cap },
                    other => other,
                })?;
            out.extend(paths);
        }
    }
    Ok(out)
}

/// Samples a DAG: a node order is drawn uniformly, then each of the
/// `p*(p-1)/2` forward pairs becomes an edge independently with probability
/// `pc`.
pub fn random_dag(p: usize, pc: f64, seed: u64) -> Result<Dag> {
    if p == 0 {
        return Err(Error::InvalidParam("graph needs at least one node".into()));
    }
    if !(0.0..=1.0).contains(&pc) {
        return Err(Error::InvalidParam(format!("edge probability {pc} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..p).collect();
    for i in (1..p).rev() {
        let j = rng.random_range(0..=i);
        perm.swap(i, j);
    }
    let mut edges = Vec::new();
    for i in 0..p {
        for j in (i + 1)..p {
            if rng.random::<f64>() < pc {
                edges.push((perm[i], perm[j]));
            }
        }
    }
    Dag::new(p, &edges)
}

/// Perturbs a DAG at structural Hamming distance exactly `h`: removes `h/2`
/// edges uniformly, then adds `h/2` edges by rejection sampling among absent
/// ordered pairs, re-checking acyclicity per addition. Removed edges are
/// never re-added, so the distance cannot collapse below `h`.
pub fn perturb_dag(dag: &Dag, h: usize, seed: u64) -> Result<Dag> {
    if h % 2 != 0 {
        return Err(Error::InvalidParam(format!("perturbation size {h} must be even")));
    }
    let half = h / 2;
    if half > dag.n_edges() {
        return Err(Error::PerturbInfeasible(format!(
            "cannot remove {half} of {} edges",
            dag.n_edges()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<(usize, usize)> = dag.edges.clone();
    for i in (1..pool.len()).rev() {
        let j = rng.random_range(0..=i);
        pool.swap(i, j);
    }
    let removed: BTreeSet<(usize, usize)> = pool.iter().take(half).copied().collect();
    let mut current: Vec<(usize, usize)> =
        dag.edges.iter().copied().filter(|e| !removed.contains(e)).collect();

    let max_attempts = 1000 + 400 * half.max(1);
    let mut added = 0usize;
    let mut attempts = 0usize;
    let mut graph = Dag::new(dag.p, &current)?;
    while added < half {
        attempts += 1;
        if attempts > max_attempts {
            return Err(Error::PerturbInfeasible(format!(
                "exhausted {max_attempts} attempts while adding edge {} of {half}",
                added + 1
            )));
        }
        let a = rng.random_range(0..dag.p);
        let b = rng.random_range(0..dag.p);
        if a == b || graph.has_edge(a, b) || removed.contains(&(a, b)) {
            continue;
        }
        current.push((a, b));
        match Dag::new(dag.p, &current) {
            Ok(next) => {
                graph = next;
                added += 1;
            }
            Err(Error::Cyclic) => {
                current.pop();
            }
            Err(e) => return Err(e),
        }
    }
    Ok(graph)
}

/// Structural Hamming distance: size of the symmetric difference of the
/// directed edge sets.
pub fn shd(a: &Dag, b: &Dag) -> Result<usize> {
    if a.p != b.p {
        return Err(Error::ShapeMismatch(format!(
            "graphs have {} and {} nodes",
            a.p, b.p
        )));
    }
    let ea: BTreeSet<_> = a.edges.iter().copied().collect();
    let eb: BTreeSet<_> = b.edges.iter().copied().collect();
    Ok(ea.symmetric_difference(&eb).count())
}

/// Reads the edge-list format: `#` starts a comment, the first content line
/// is `p=<nodes>`, each further line is `<src> <dst>` (zero-based).
pub fn read_edge_list<R: BufRead>(reader: R) -> Result<Dag> {
    let mut p: Option<usize> = None;
    let mut edges = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let human = lineno + 1;
        match p {
            None => {
                let rest = content
                    .strip_prefix("p=")
                    .or_else(|| content.strip_prefix("p ="))
                    .ok_or_else(|| {
                        Error::DataFormat(format!(
                            "line {human}: expected 'p=<nodes>' before any edge, found '{content}'"
                        ))
                    })?;
                let nodes: usize = rest.trim().parse().map_err(|_| {
                    Error::DataFormat(format!("line {human}: invalid node count '{rest}'"))
                })?;
                p = Some(nodes);
            }
            Some(_) => {
                let mut it = content.split_whitespace();
                let src = it.next().and_then(|t| t.parse::<usize>().ok());
                let dst = it.next().and_then(|t| t.parse::<usize>().ok());
                match (src, dst, it.next()) {
                    (Some(a), Some(b), None) => edges.push((a, b)),
                    _ => {
                        return Err(Error::DataFormat(format!(
                            "line {human}: expected '<src> <dst>', found '{content}'"
                        )))
                    }
                }
            }
        }
    }
    let p = p.ok_or_else(|| Error::DataFormat("missing 'p=<nodes>' line".into()))?;
    Dag::new(p, &edges)
}

/// Writes the edge-list format read by [`read_edge_list`].
pub fn write_edge_list<W: Write>(dag: &Dag, mut writer: W) -> Result<()> {
    writeln!(writer, "p={}", dag.p)?;
    for &(a, b) in &dag.edges {
        writeln!(writer, "{a} {b}")?;
    }
    Ok(())
}
