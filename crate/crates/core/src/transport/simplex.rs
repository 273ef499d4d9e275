//! Transportation simplex on the bipartite transport polytope.
//!
//! Solves `min sum c_ij x_ij` subject to row sums = supply, column sums =
//! demand, `x >= 0`, and returns the optimal flows together with the dual
//! node potentials read off the final spanning-tree basis. The initial basis
//! comes from the north-west corner rule, which for sorted 1-D inputs with
//! squared-distance costs is already the optimal monotone coupling.

use crate::{Error, Result};

#[derive(Debug, Clone)]
pub(crate) struct TransportSolution {
    pub flows: Vec<(usize, usize, f64)>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub cost: f64,
}

#[derive(Debug, Clone, Copy)]
struct Arc {
    src: usize,
    snk: usize,
    flow: f64,
}

pub(crate) fn solve_transport(supply: &[f64], demand: &[f64], cost: &[f64]) -> Result<TransportSolution> {
    let m = supply.len();
    let n = demand.len();
    if m == 0 || n == 0 || cost.len() != m * n {
        return Err(Error::Transport("empty marginal or wrong cost size".into()));
    }
    let total_s: f64 = supply.iter().sum();
    let total_d: f64 = demand.iter().sum();
    if (total_s - total_d).abs() > 1e-9 {
        return Err(Error::Transport(format!(
            "unbalanced marginals: {total_s} vs {total_d}"
        )));
    }

    // north-west corner initial basis: exactly m + n - 1 arcs
    let mut arcs: Vec<Arc> = Vec::with_capacity(m + n - 1);
    {
        let mut rem_s = supply.to_vec();
        let mut rem_d = demand.to_vec();
        let (mut i, mut j) = (0usize, 0usize);
        loop {
            let f = rem_s[i].min(rem_d[j]).max(0.0);
            arcs.push(Arc { src: i, snk: j, flow: f });
            rem_s[i] -= f;
            rem_d[j] -= f;
            if i == m - 1 && j == n - 1 {
                break;
            }
            // advance along the exhausted side, never past the last row/column
            if i == m - 1 {
                j += 1;
            } else if j == n - 1 || rem_s[i] <= rem_d[j] {
                i += 1;
            } else {
                j += 1;
            }
        }
    }
    debug_assert_eq!(arcs.len(), m + n - 1);

    let cmax = cost.iter().fold(0.0_f64, |a, &c| a.max(c.abs()));
    let eps = 1e-11 * (1.0 + cmax);
    let max_pivots = 2000 + 50 * m * n;
    // switch to Bland's rule after a while; it cannot cycle
    let bland_after = 100 + 10 * (m + n);

    let mut u = vec![0.0; m];
    let mut v = vec![0.0; n];
    // node ids: sources 0..m, sinks m..m+n
    let nodes = m + n;
    let mut parent = vec![usize::MAX; nodes];
    let mut parent_arc = vec![usize::MAX; nodes];
    let mut order: Vec<usize> = Vec::with_capacity(nodes);

    for pivot in 0..max_pivots {
        let bland = pivot >= bland_after;
        // rebuild adjacency and the BFS tree rooted at source 0
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes];
        for (a, arc) in arcs.iter().enumerate() {
            adj[arc.src].push(a);
            adj[m + arc.snk].push(a);
        }
        parent.iter_mut().for_each(|p| *p = usize::MAX);
        parent_arc.iter_mut().for_each(|p| *p = usize::MAX);
        order.clear();
        order.push(0);
        parent[0] = 0;
        let mut head = 0;
        while head < order.len() {
            let x = order[head];
            head += 1;
            for &a in &adj[x] {
                let y = if x < m { m + arcs[a].snk } else { arcs[a].src };
                if parent[y] == usize::MAX {
                    parent[y] = x;
                    parent_arc[y] = a;
                    order.push(y);
                }
            }
        }
        if order.len() != nodes {
            return Err(Error::Transport("basis is not a spanning tree".into()));
        }

        // duals along the tree: u_i + v_j = c_ij on basic arcs, u_0 = 0
        u[0] = 0.0;
        for &x in order.iter().skip(1) {
            let a = parent_arc[x];
            let (i, j) = (arcs[a].src, arcs[a].snk);
            if x < m {
                u[x] = cost[i * n + j] - v[j];
            } else {
                v[x - m] = cost[i * n + j] - u[i];
            }
        }

        // entering arc: most negative reduced cost, or the first negative one
        // under Bland's rule
        let mut best = -eps;
        let mut enter: Option<(usize, usize)> = None;
        'scan: for i in 0..m {
            let ui = u[i];
            let row = &cost[i * n..(i + 1) * n];
            for j in 0..n {
                let r = row[j] - ui - v[j];
                if r < best {
                    best = r;
                    enter = Some((i, j));
                    if bland {
                        break 'scan;
                    }
                }
            }
        }
        let Some((ei, ej)) = enter else {
            break;
        };

        // cycle: path from source ei up to the root, path from sink ej up to
        // the root; flows alternate sign walking from the sink back to the
        // source, starting with a decrease.
        let path_to_root = |mut x: usize| -> Vec<usize> {
            let mut p = vec![x];
            while x != 0 {
                x = parent[x];
                p.push(x);
            }
            p
        };
        let pi = path_to_root(ei);
        let pj = path_to_root(m + ej);
        // drop the common suffix to get the tree path ei .. ej
        let (mut a, mut b) = (pi.len(), pj.len());
        while a > 1 && b > 1 && pi[a - 2] == pj[b - 2] {
            a -= 1;
            b -= 1;
        }
        // node sequence around the cycle, from sink ej to source ei
        let mut cycle_nodes: Vec<usize> = pj[..b].to_vec();
        cycle_nodes.extend(pi[..a - 1].iter().rev());
        // arcs between consecutive nodes, alternating -theta, +theta, ...
        let mut minus_arcs: Vec<usize> = Vec::new();
        let mut plus_arcs: Vec<usize> = Vec::new();
        for (k, w) in cycle_nodes.windows(2).enumerate() {
            let (x, y) = (w[0], w[1]);
            let arc_id = if parent[x] == y { parent_arc[x] } else { parent_arc[y] };
            if k % 2 == 0 {
                minus_arcs.push(arc_id);
            } else {
                plus_arcs.push(arc_id);
            }
        }
        // leaving arc: minimum flow among reverse arcs; ties broken by the
        // smallest variable index i*n+j so Bland's rule terminates
        let theta = minus_arcs
            .iter()
            .map(|&aid| arcs[aid].flow)
            .fold(f64::INFINITY, f64::min);
        let leave_arc = minus_arcs
            .iter()
            .copied()
            .filter(|&aid| arcs[aid].flow <= theta)
            .min_by_key(|&aid| arcs[aid].src * n + arcs[aid].snk)
            .expect("cycle has at least one reverse arc");
        for &aid in &minus_arcs {
            arcs[aid].flow = (arcs[aid].flow - theta).max(0.0);
        }
        for &aid in &plus_arcs {
            arcs[aid].flow += theta;
        }
        arcs[leave_arc] = Arc { src: ei, snk: ej, flow: theta };
    }

    // final duals correspond to the last recomputation; recompute once more so
    // they match the final basis after the last pivot
    {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes];
        for (a, arc) in arcs.iter().enumerate() {
            adj[arc.src].push(a);
            adj[m + arc.snk].push(a);
        }
        parent.iter_mut().for_each(|p| *p = usize::MAX);
        parent_arc.iter_mut().for_each(|p| *p = usize::MAX);
        order.clear();
        order.push(0);
        parent[0] = 0;
        let mut head = 0;
        while head < order.len() {
            let x = order[head];
            head += 1;
            for &a in &adj[x] {
                let y = if x < m { m + arcs[a].snk } else { arcs[a].src };
                if parent[y] == usize::MAX {
                    parent[y] = x;
                    parent_arc[y] = a;
                    order.push(y);
                }
            }
        }
        u[0] = 0.0;
        for &x in order.iter().skip(1) {
            let a = parent_arc[x];
            let (i, j) = (arcs[a].src, arcs[a].snk);
            if x < m {
                u[x] = cost[i * n + j] - v[j];
            } else {
                v[x - m] = cost[i * n + j] - u[i];
            }
        }
        // optimality check on the final basis
        let mut worst = 0.0_f64;
        for i in 0..m {
            for j in 0..n {
                worst = worst.min(cost[i * n + j] - u[i] - v[j]);
            }
        }
        if worst < -100.0 * eps {
            return Err(Error::Transport(format!(
                "pivot limit reached with reduced cost {worst}"
            )));
        }
    }

    let cost_total: f64 = arcs.iter().map(|a| a.flow * cost[a.src * n + a.snk]).sum();
    let flows = arcs
        .iter()
        .filter(|a| a.flow > 0.0)
        .map(|a| (a.src, a.snk, a.flow))
        .collect();
    Ok(TransportSolution { flows, u: u.clone(), v: v.clone(), cost: cost_total })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_pair() {
        let sol = solve_transport(&[1.0], &[1.0], &[3.5]).unwrap();
        assert_eq!(sol.flows, vec![(0, 0, 1.0)]);
        assert!((sol.cost - 3.5).abs() < 1e-12);
    }

    #[test]
    fn two_by_two_cross() {
        // cheaper to swap
        let cost = [1.0, 0.0, 0.0, 1.0];
        let sol = solve_transport(&[0.5, 0.5], &[0.5, 0.5], &cost).unwrap();
        assert!(sol.cost.abs() < 1e-12, "cost {}", sol.cost);
    }

    #[test]
    fn duals_are_feasible_and_tight() {
        let supply = [0.2, 0.3, 0.5];
        let demand = [0.4, 0.6];
        let cost = [2.0, 7.0, 1.0, 3.0, 5.0, 2.0];
        let sol = solve_transport(&supply, &demand, &cost).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                assert!(sol.u[i] + sol.v[j] <= cost[i * 2 + j] + 1e-9);
            }
        }
        let dual: f64 = (0..3).map(|i| supply[i] * sol.u[i]).sum::<f64>()
            + (0..2).map(|j| demand[j] * sol.v[j]).sum::<f64>();
        assert!((dual - sol.cost).abs() < 1e-9);
    }
}
