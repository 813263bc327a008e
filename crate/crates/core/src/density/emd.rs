use super::Density;
use crate::error::{Error, Result};

pub const DEFAULT_EMD_GRID: usize = 2048;

/// Weighted point set on the real line.
#[derive(Debug, Clone, PartialEq)]
pub struct Signature {
    points: Vec<f64>,
    masses: Vec<f64>,
}

impl Signature {
    pub fn new(points: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        if points.len() != masses.len() {
            return Err(Error::InvalidArgument("signature points and masses differ in length".into()));
        }
        if masses.iter().any(|&m| !(m >= 0.0) || !m.is_finite()) || points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument("signature masses must be finite and non-negative".into()));
        }
        if !points.is_empty() && !masses.iter().any(|&m| m > 0.0) {
            return Err(Error::InvalidArgument("signature needs a positive mass".into()));
        }
        Ok(Self { points, masses })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }
}

/// Earth Mover's Distance with ground distance `|x − y|`: the optimal
/// transport cost of the total flow `min(ΣP, ΣQ)` divided by that flow.
/// Unequal totals go through a dense min-cost flow, which is only practical
/// for signatures of a few hundred points.
pub fn emd_discrete(p: &Signature, q: &Signature) -> Result<f64> {
    if p.is_empty() && q.is_empty() {
        return Err(Error::Domain("EMD of two empty signatures".into()));
    }
    let (wp, wq) = (p.total(), q.total());
    let flow = wp.min(wq);
    if !(flow > 0.0) {
        return Err(Error::Domain("EMD needs mass on both sides".into()));
    }
    if (wp - wq).abs() <= 1e-12 * wp.max(wq) {
        Ok(cdf_difference(p, q) / flow)
    } else {
        Ok(min_cost_flow(p, q, flow) / flow)
    }
}

/// `∫ |F_P − F_Q|` for signatures of equal total mass.
fn cdf_difference(p: &Signature, q: &Signature) -> f64 {
    let mut events: Vec<(f64, f64)> = p
        .points
        .iter()
        .zip(&p.masses)
        .map(|(&x, &m)| (x, m))
        .chain(q.points.iter().zip(&q.masses).map(|(&x, &m)| (x, -m)))
        .collect();
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut total = 0.0;
    let mut diff = 0.0;
    for pair in events.windows(2) {
        diff += pair[0].1;
        total += diff.abs() * (pair[1].0 - pair[0].0);
    }
    total
}

/// Successive shortest paths on the bipartite transport network.
fn min_cost_flow(p: &Signature, q: &Signature, flow: f64) -> f64 {
    let (n, m) = (p.points.len(), q.points.len());
    // nodes: 0 source, 1..=n supplies, n+1..=n+m demands, n+m+1 sink
    let (source, sink) = (0, n + m + 1);
    let nodes = n + m + 2;
    let mut edges: Vec<Edge> = Vec::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    let mut add = |from: usize, to: usize, cap: f64, cost: f64, edges: &mut Vec<Edge>| {
        adj[from].push(edges.len());
        edges.push(Edge { to, cap, cost });
        adj[to].push(edges.len());
        edges.push(Edge { to: from, cap: 0.0, cost: -cost });
    };
    for i in 0..n {
        add(source, 1 + i, p.masses[i], 0.0, &mut edges);
        for j in 0..m {
            add(1 + i, 1 + n + j, f64::INFINITY, (p.points[i] - q.points[j]).abs(), &mut edges);
        }
    }
    for j in 0..m {
        add(1 + n + j, sink, q.masses[j], 0.0, &mut edges);
    }
    let eps = 1e-15 * flow.max(1.0);
    let mut remaining = flow;
    let mut cost = 0.0;
    while remaining > eps {
        // Bellman–Ford shortest path in the residual graph
        let mut dist = vec![f64::INFINITY; nodes];
        let mut prev: Vec<Option<usize>> = vec![None; nodes];
        dist[source] = 0.0;
        for _ in 0..nodes {
            let mut changed = false;
            for u in 0..nodes {
                if dist[u] == f64::INFINITY {
                    continue;
                }
                for &e in &adj[u] {
                    let edge = &edges[e];
                    if edge.cap > eps && dist[u] + edge.cost < dist[edge.to] - 1e-15 {
                        dist[edge.to] = dist[u] + edge.cost;
                        prev[edge.to] = Some(e);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if dist[sink] == f64::INFINITY {
            break;
        }
        let mut push = remaining;
        let mut v = sink;
        while let Some(e) = prev[v] {
            push = push.min(edges[e].cap);
            v = edges[e ^ 1].to;
        }
        let mut v = sink;
        while let Some(e) = prev[v] {
            edges[e].cap -= push;
            edges[e ^ 1].cap += push;
            v = edges[e ^ 1].to;
        }
        cost += push * dist[sink];
        remaining -= push;
    }
    cost
}

struct Edge {
    to: usize,
    cap: f64,
    cost: f64,
}

/// 1-Wasserstein distance between two densities: trapezoid integral of
/// `|F_A − F_B|` on `grid` points spanning both effective supports. Closed-form
/// distribution functions are used where available, so narrow densities that
/// fall between grid points still carry their mass.
pub fn emd_density(a: &dyn Density, b: &dyn Density, grid: usize) -> Result<f64> {
    if grid < 2 {
        return Err(Error::InvalidArgument("EMD grid needs at least two points".into()));
    }
    let (la, ha) = a.effective_support();
    let (lb, hb) = b.effective_support();
    let (lo, hi) = (la.min(lb), ha.max(hb));
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::InvalidArgument("densities have no common finite range".into()));
    }
    let h = (hi - lo) / (grid - 1) as f64;
    let xs: Vec<f64> = (0..grid).map(|k| lo + k as f64 * h).collect();
    let cdf = |d: &dyn Density| -> Result<Vec<f64>> {
        if let (Some(f0), Some(f1)) = (d.cdf(lo), d.cdf(hi)) {
            let total = f1 - f0;
            if !(total > 0.0) {
                return Err(Error::Numeric("density has no mass on the EMD grid".into()));
            }
            return Ok(xs.iter().map(|&x| (d.cdf(x).unwrap_or(f0) - f0) / total).collect());
        }
        let pdf: Vec<f64> = xs.iter().map(|&x| d.pdf(x)).collect();
        let mut c = vec![0.0; grid];
        for k in 1..grid {
            c[k] = c[k - 1] + 0.5 * h * (pdf[k - 1] + pdf[k]);
        }
        let total = c[grid - 1];
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::Numeric("density has no mass on the EMD grid".into()));
        }
        Ok(c.into_iter().map(|v| v / total).collect())
    };
    let (ca, cb) = (cdf(a)?, cdf(b)?);
    let diff: Vec<f64> = ca.iter().zip(&cb).map(|(x, y)| (x - y).abs()).collect();
    Ok(diff.windows(2).map(|w| 0.5 * h * (w[0] + w[1])).sum())
}
