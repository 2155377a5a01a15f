//! Shared oracles for the integration suites, implemented independently of
//! the library's algorithms: explicit path enumeration instead of
//! reachability states, closed-form least squares instead of kernel fits.

#![allow(dead_code)]

use smint::graph::Dag;

/// Least-squares slope of y on x.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// `reach[i][j]` = there is a directed path from `i` to `j` (proper: the
/// diagonal stays false unless a cycle existed, which a DAG forbids).
pub fn reachability(dag: &Dag) -> Vec<Vec<bool>> {
    let p = dag.p();
    let mut reach = vec![vec![false; p]; p];
    for i in 0..p {
        let mut stack: Vec<usize> = dag.children(i).unwrap().to_vec();
        while let Some(v) = stack.pop() {
            if !reach[i][v] {
                reach[i][v] = true;
                stack.extend_from_slice(dag.children(v).unwrap());
            }
        }
    }
    reach
}

/// All simple paths between `x` and `y` in the undirected skeleton. Each
/// path is the node sequence plus, per step, whether the edge runs in walk
/// direction (`true` = nodes[i] -> nodes[i+1] in the DAG).
fn skeleton_paths(dag: &Dag, x: usize, y: usize) -> Vec<(Vec<usize>, Vec<bool>)> {
    let p = dag.p();
    let mut neighbours: Vec<Vec<usize>> = vec![Vec::new(); p];
    for v in 0..p {
        for &c in dag.children(v).unwrap() {
            neighbours[v].push(c);
            neighbours[c].push(v);
        }
    }
    let mut paths = Vec::new();
    let mut nodes = vec![x];
    let mut dirs: Vec<bool> = Vec::new();
    let mut on_path = vec![false; p];
    on_path[x] = true;
    fn walk(
        v: usize,
        y: usize,
        dag: &Dag,
        neighbours: &[Vec<usize>],
        nodes: &mut Vec<usize>,
        dirs: &mut Vec<bool>,
        on_path: &mut Vec<bool>,
        paths: &mut Vec<(Vec<usize>, Vec<bool>)>,
    ) {
        for &w in &neighbours[v] {
            if on_path[w] {
                continue;
            }
            let forward = dag.children(v).unwrap().binary_search(&w).is_ok();
            nodes.push(w);
            dirs.push(forward);
            if w == y {
                paths.push((nodes.clone(), dirs.clone()));
            } else {
                on_path[w] = true;
                walk(w, y, dag, neighbours, nodes, dirs, on_path, paths);
                on_path[w] = false;
            }
            nodes.pop();
            dirs.pop();
        }
    }
    walk(x, y, dag, &neighbours, &mut nodes, &mut dirs, &mut on_path, &mut paths);
    paths
}

/// Brute-force backdoor check: no member of `s` descends from `x`, and
/// every skeleton path whose first edge points into `x` is blocked.
/// An interior collider blocks unless it or a descendant lies in `s`;
/// any other interior node blocks exactly when it lies in `s`.
pub fn backdoor_oracle(dag: &Dag, x: usize, y: usize, s: &[usize]) -> bool {
    let reach = reachability(dag);
    if s.iter().any(|&m| reach[x][m]) {
        return false;
    }
    let in_s = |v: usize| s.contains(&v);
    let opens_collider =
        |v: usize| in_s(v) || s.iter().any(|&m| reach[v][m]);
    for (nodes, dirs) in skeleton_paths(dag, x, y) {
        if dirs[0] {
            continue; // first edge leaves x: not a backdoor path
        }
        let blocked = (1..nodes.len() - 1).any(|i| {
            let collider = dirs[i - 1] && !dirs[i];
            if collider {
                !opens_collider(nodes[i])
            } else {
                in_s(nodes[i])
            }
        });
        if !blocked {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod self_checks {
    use super::*;

    #[test]
    fn oracle_handles_the_textbook_graphs() {
        // Confounder w -> x, w -> y, x -> y.
        let dag = Dag::new(3, &[(2, 0), (2, 1), (0, 1)]).unwrap();
        assert!(!backdoor_oracle(&dag, 0, 1, &[]));
        assert!(backdoor_oracle(&dag, 0, 1, &[2]));
        // Collider x -> c <- y stays blocked without conditioning.
        let dag = Dag::new(3, &[(0, 2), (1, 2)]).unwrap();
        assert!(backdoor_oracle(&dag, 0, 1, &[]));
        assert!(!backdoor_oracle(&dag, 0, 1, &[2]));
        // Mediator x -> m -> y: conditioning on a descendant of x fails.
        let dag = Dag::new(3, &[(0, 2), (2, 1)]).unwrap();
        assert!(backdoor_oracle(&dag, 0, 1, &[]));
        assert!(!backdoor_oracle(&dag, 0, 1, &[2]));
    }
}
