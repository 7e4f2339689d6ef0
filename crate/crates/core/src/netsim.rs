//! Explicit-graph Monte Carlo check of the mean-field model.
//!
//! A voter is informed when anyone in her connected component acquires a
//! signal, so only the partition into components matters for diffusion.

use std::collections::HashSet;
use std::io::{self, Write};

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::distributions::{value_of_information, ConnectionDistribution};
use crate::equilibrium::{Policy, Scenario, Solver};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Uniform points in the policy table used for simulation lookups.
pub const POLICY_TABLE_POINTS: usize = 4096;

/// Truncated tail mass above which a cross-validation is flagged.
pub const TRUNCATION_FLAG: f64 = 1e-3;

/// Undirected simple graph on voters `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Validates and stores the edge list. Edges are kept as given.
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(edges.len());
        for &(u, v) in &edges {
            if u >= n || v >= n {
                return Err(Error::invalid(
                    "graph",
                    format!("edge ({u}, {v}) out of range for n = {n}"),
                ));
            }
            if u == v {
                return Err(Error::invalid("graph", format!("self-loop at {u}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::invalid("graph", format!("duplicate edge ({u}, {v})")));
            }
        }
        Ok(Graph { n, edges })
    }

    pub fn empty(n: usize) -> Self {
        Graph { n, edges: Vec::new() }
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        Graph { n, edges }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Mean degree `2E/n`.
    pub fn mean_degree(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            2.0 * self.edges.len() as f64 / self.n as f64
        }
    }

    /// Writes one `u v` pair per line.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> io::Result<()> {
        for &(u, v) in &self.edges {
            writeln!(out, "{u} {v}")?;
        }
        Ok(())
    }

    /// Connected components by union-find.
    pub fn components(&self) -> Components {
        let mut parent: Vec<usize> = (0..self.n).collect();
        let mut rank = vec![0u8; self.n];
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &(u, v) in &self.edges {
            let (a, b) = (find(&mut parent, u), find(&mut parent, v));
            if a == b {
                continue;
            }
            match rank[a].cmp(&rank[b]) {
                std::cmp::Ordering::Less => parent[a] = b,
                std::cmp::Ordering::Greater => parent[b] = a,
                std::cmp::Ordering::Equal => {
                    parent[b] = a;
                    rank[a] += 1;
                }
            }
        }
        let mut id = vec![usize::MAX; self.n];
        let mut label = Vec::with_capacity(self.n);
        let mut sizes = Vec::new();
        for x in 0..self.n {
            let root = find(&mut parent, x);
            if id[root] == usize::MAX {
                id[root] = sizes.len();
                sizes.push(0);
            }
            label.push(id[root]);
            sizes[id[root]] += 1;
        }
        Components { label, sizes }
    }
}

/// Partition of voters into connected components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Components {
    /// Component index of each voter.
    pub label: Vec<usize>,
    /// Size of each component.
    pub sizes: Vec<usize>,
}

/// Disjoint cliques whose per-voter size distribution matches `target`:
/// component sizes `m` are drawn with probability proportional to
/// `p_{m−1}/m` until `n` voters are placed, truncating the last one.
pub fn plant_components<T: Scalar, R: Rng + ?Sized>(
    n: usize,
    target: &ConnectionDistribution<T>,
    rng: &mut R,
) -> Result<Graph> {
    let masses = target.masses();
    if let Some(k) = masses.iter().rposition(|&m| m > T::zero()) {
        if k >= n {
            return Err(Error::invalid(
                "planted target",
                format!("p_{k} > 0 needs components larger than n = {n}"),
            ));
        }
    }
    let weights: Vec<f64> = masses
        .iter()
        .enumerate()
        .map(|(k, m)| m.as_f64() / (k + 1) as f64)
        .collect();
    let pick = WeightedIndex::new(&weights).map_err(|e| Error::invalid("planted target", e.to_string()))?;
    let mut edges = Vec::new();
    let mut start = 0;
    while start < n {
        let size = (pick.sample(rng) + 1).min(n - start);
        for u in start..start + size {
            for v in u + 1..start + size {
                edges.push((u, v));
            }
        }
        start += size;
    }
    Ok(Graph { n, edges })
}

/// G(n, q) by geometric skipping over the pairs, in time linear in the
/// number of edges.
pub fn erdos_renyi<T: Scalar, R: Rng + ?Sized>(n: usize, q: T, rng: &mut R) -> Result<Graph> {
    let q = q.as_f64();
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::domain("edge probability", q, "0 <= q <= 1"));
    }
    if q == 0.0 || n < 2 {
        return Ok(Graph::empty(n));
    }
    if q == 1.0 {
        return Ok(Graph::complete(n));
    }
    let log_miss = (-q).ln_1p();
    let mut edges = Vec::new();
    let (mut v, mut w) = (1usize, -1i64);
    while v < n {
        let u: f64 = rng.gen();
        let skip = ((-u).ln_1p() / log_miss).floor();
        w += 1 + skip.min(i64::MAX as f64 / 2.0) as i64;
        while w >= v as i64 && v < n {
            w -= v as i64;
            v += 1;
        }
        if v < n {
            edges.push((w as usize, v));
        }
    }
    Ok(Graph { n, edges })
}

/// Keeps each edge independently with probability `1 − φ`.
pub fn apply_edge_failure<T: Scalar, R: Rng + ?Sized>(graph: &Graph, failure: T, rng: &mut R) -> Result<Graph> {
    let phi = failure.as_f64();
    if !(0.0..=1.0).contains(&phi) {
        return Err(Error::domain("edge failure probability", phi, "0 <= phi <= 1"));
    }
    let edges = graph
        .edges
        .iter()
        .copied()
        .filter(|_| rng.gen::<f64>() >= phi)
        .collect();
    Ok(Graph { n: graph.n, edges })
}

/// Per-voter distribution of `component size − 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSizes<T> {
    pub distribution: ConnectionDistribution<T>,
    /// Share of voters whose count exceeded the cap and was folded into it.
    pub truncated_mass: T,
}

pub fn component_sizes<T: Scalar>(graph: &Graph, cap: usize) -> Result<ComponentSizes<T>> {
    if graph.n == 0 {
        return Err(Error::invalid("graph", "no voters"));
    }
    let comps = graph.components();
    let mut counts = vec![0usize; cap + 1];
    let mut over = 0usize;
    for &s in &comps.sizes {
        let k = s - 1;
        if k > cap {
            over += s;
        }
        counts[k.min(cap)] += s;
    }
    let n = T::from_usize_lossy(graph.n);
    let masses = counts.iter().map(|&c| T::from_usize_lossy(c) / n).collect();
    Ok(ComponentSizes {
        distribution: ConnectionDistribution::new(masses)?,
        truncated_mass: T::from_usize_lossy(over) / n,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport<T> {
    pub replications: usize,
    /// Informed share of voters in each replication.
    pub fractions: Vec<T>,
    pub mean: T,
    /// Sample standard deviation over `√replications`.
    pub std_error: T,
    /// Empirical connection distribution of the simulated graph.
    pub connections: ConnectionDistribution<T>,
    pub truncated_mass: T,
    /// Analytic informedness to compare against, when one was supplied.
    pub analytic_pi: Option<T>,
}

/// Random stream for replication `r`; stream 0 is reserved for graph building.
pub fn replication_rng(seed: u64, replication: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication as u64 + 1);
    rng
}

/// Draws types, looks up efforts in `policy`, draws successes and floods
/// them through components. Replications run in parallel on independent
/// streams, so the result depends only on the inputs and `seed`.
pub fn simulate<T: Scalar>(
    graph: &Graph,
    policy: &Policy<T>,
    scenario: &Scenario<T>,
    replications: usize,
    seed: u64,
) -> Result<SimReport<T>> {
    if replications == 0 {
        return Err(Error::Precondition("at least one replication is needed".into()));
    }
    let comps = graph.components();
    let cap = comps.sizes.iter().copied().max().unwrap_or(1).saturating_sub(1);
    let sizes = component_sizes::<T>(graph, cap)?;
    let n = graph.n;
    let fractions: Vec<T> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = replication_rng(seed, r);
            let mut hit = vec![false; comps.sizes.len()];
            for &c in &comps.label {
                let lambda = scenario.types.sample(&mut rng);
                let v = value_of_information(lambda, scenario.prior)?;
                let x = policy.effort(v)?;
                let u = T::lit(rng.gen::<f64>());
                if u < scenario.tech.psi(x) {
                    hit[c] = true;
                }
            }
            let informed: usize = comps.sizes.iter().zip(&hit).filter(|(_, &h)| h).map(|(s, _)| s).sum();
            Ok(T::from_usize_lossy(informed) / T::from_usize_lossy(n))
        })
        .collect::<Result<_>>()?;
    let reps = T::from_usize_lossy(replications);
    let mean = fractions.iter().copied().sum::<T>() / reps;
    let std_error = if replications > 1 {
        let ss: T = fractions.iter().map(|&f| (f - mean) * (f - mean)).sum();
        (ss / (reps - T::one())).sqrt() / reps.sqrt()
    } else {
        T::zero()
    };
    Ok(SimReport {
        replications,
        fractions,
        mean,
        std_error,
        connections: sizes.distribution,
        truncated_mass: sizes.truncated_mass,
        analytic_pi: None,
    })
}

/// How the cross-validation graph is built.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GraphMode<T> {
    /// Disjoint cliques matching the scenario's connection distribution.
    Planted,
    /// `G(n, q)` followed by independent edge failure with probability `failure`;
    /// component counts above `cap` are folded into the top bucket.
    ErdosRenyi { edge_prob: T, failure: T, cap: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossValidation<T> {
    pub simulated: SimReport<T>,
    pub analytic_pi: T,
    /// `|π̂ − π| − 3·SE`; the check passes when this is within round-off of zero or below.
    pub excess: T,
    pub passed: bool,
    /// Truncated tail mass exceeded [`TRUNCATION_FLAG`].
    pub truncation_flag: bool,
}

impl<T: Scalar> CrossValidation<T> {
    pub fn compare(mut simulated: SimReport<T>, analytic_pi: T) -> Self {
        simulated.analytic_pi = Some(analytic_pi);
        let excess = (simulated.mean - analytic_pi).abs() - T::lit(3.0) * simulated.std_error;
        CrossValidation {
            // Empirical masses are count/n and need not sum to one exactly.
            passed: excess <= T::resolution(),
            truncation_flag: simulated.truncated_mass > T::lit(TRUNCATION_FLAG),
            analytic_pi,
            excess,
            simulated,
        }
    }
}

/// Builds the graph for `mode` on stream 0 of `seed`.
pub fn build_graph<T: Scalar>(scenario: &Scenario<T>, mode: GraphMode<T>, n: usize, seed: u64) -> Result<Graph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match mode {
        GraphMode::Planted => plant_components(n, &scenario.connections, &mut rng),
        GraphMode::ErdosRenyi { edge_prob, failure, .. } => {
            let g = erdos_renyi(n, edge_prob, &mut rng)?;
            apply_edge_failure(&g, failure, &mut rng)
        }
    }
}

/// Builds a graph, re-solves the equilibrium with its empirical connection
/// distribution, simulates the equilibrium policy and checks
/// `|π̂ − π| ≤ 3·SE`.
pub fn cross_validate<T: Scalar>(
    scenario: &Scenario<T>,
    mode: GraphMode<T>,
    n: usize,
    replications: usize,
    seed: u64,
) -> Result<CrossValidation<T>> {
    cross_validate_with(scenario, mode, n, replications, seed, None)
}

/// As [`cross_validate`], but simulating `policy` instead of the
/// equilibrium policy when one is given.
pub fn cross_validate_with<T: Scalar>(
    scenario: &Scenario<T>,
    mode: GraphMode<T>,
    n: usize,
    replications: usize,
    seed: u64,
    policy: Option<&Policy<T>>,
) -> Result<CrossValidation<T>> {
    let graph = build_graph(scenario, mode, n, seed)?;
    let cap = match mode {
        GraphMode::Planted => scenario.connections.max_count(),
        GraphMode::ErdosRenyi { cap, .. } => cap,
    };
    let empirical = component_sizes::<T>(&graph, cap)?;
    let solver = Solver::new(&scenario.with_connections(empirical.distribution.clone()))?;
    let solution = solver.solve()?;
    let own;
    let policy = match policy {
        Some(p) => p,
        None => {
            own = solver.policy(solution.q, POLICY_TABLE_POINTS)?;
            &own
        }
    };
    let mut report = simulate(&graph, policy, scenario, replications, seed)?;
    report.connections = empirical.distribution;
    report.truncated_mass = empirical.truncated_mass;
    Ok(CrossValidation::compare(report, solution.pi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::PreferenceDistribution;
    use crate::equilibrium::Settings;
    use crate::technology::{CostFunction, SuccessTechnology};

    fn tv(a: &ConnectionDistribution<f64>, b: &ConnectionDistribution<f64>) -> f64 {
        let len = a.masses().len().max(b.masses().len());
        let get = |d: &ConnectionDistribution<f64>, i: usize| d.masses().get(i).copied().unwrap_or(0.0);
        0.5 * (0..len).map(|i| (get(a, i) - get(b, i)).abs()).sum::<f64>()
    }

    fn exp_scenario(gamma: f64) -> Scenario<f64> {
        Scenario::new(
            0.5,
            PreferenceDistribution::uniform(0.0, 1.0).unwrap(),
            SuccessTechnology::exponential(1.0).unwrap(),
            CostFunction::linear(gamma).unwrap(),
            ConnectionDistribution::new(vec![0.5, 0.0, 0.5]).unwrap(),
            Settings::default(),
        )
        .unwrap()
    }

    #[test]
    fn graph_validation() {
        assert!(Graph::new(3, vec![(0, 1), (1, 2)]).is_ok());
        assert!(Graph::new(3, vec![(0, 0)]).is_err());
        assert!(Graph::new(3, vec![(0, 1), (1, 0)]).is_err());
        assert!(Graph::new(3, vec![(0, 3)]).is_err());
    }

    #[test]
    fn planted_trivial_targets() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = plant_components(30, &ConnectionDistribution::<f64>::point_mass(0), &mut rng).unwrap();
        assert_eq!(g.edge_count(), 0);
        let g = plant_components(30, &ConnectionDistribution::<f64>::point_mass(2), &mut rng).unwrap();
        assert_eq!(g.edge_count(), 30);
        let cs = component_sizes::<f64>(&g, 2).unwrap();
        assert_eq!(cs.distribution.masses(), &[0.0, 0.0, 1.0]);
        assert!(plant_components(2, &ConnectionDistribution::<f64>::point_mass(2), &mut rng).is_err());
    }

    #[test]
    fn planted_round_trip() {
        let target = ConnectionDistribution::new(vec![0.5, 0.0, 0.5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = plant_components(100_000, &target, &mut rng).unwrap();
        let cs = component_sizes::<f64>(&g, 2).unwrap();
        assert!(tv(&cs.distribution, &target) <= 0.01);
        assert_eq!(cs.truncated_mass, 0.0);
    }

    #[test]
    fn erdos_renyi_extremes_and_degree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(erdos_renyi(50, 0.0, &mut rng).unwrap().edge_count(), 0);
        assert_eq!(erdos_renyi(50, 1.0, &mut rng).unwrap().edge_count(), 50 * 49 / 2);
        let n = 10_000;
        let q = 0.5 / n as f64;
        let g = erdos_renyi(n, q, &mut rng).unwrap();
        let pairs = (n * (n - 1) / 2) as f64;
        let sd_edges = (pairs * q * (1.0 - q)).sqrt();
        let expected = pairs * q;
        assert!((g.edge_count() as f64 - expected).abs() <= 3.0 * sd_edges);
        assert!(Graph::new(n, g.edges().to_vec()).is_ok());
    }

    #[test]
    fn edge_failure() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = Graph::complete(200);
        assert_eq!(apply_edge_failure(&g, 0.0, &mut rng).unwrap(), g);
        assert_eq!(apply_edge_failure(&g, 1.0, &mut rng).unwrap().edge_count(), 0);
        let e = g.edge_count() as f64;
        let kept = apply_edge_failure(&g, 0.5, &mut rng).unwrap().edge_count() as f64;
        assert!((kept - e / 2.0).abs() <= 3.0 * (e * 0.25).sqrt());
    }

    #[test]
    fn caps_fold_into_top_bucket() {
        let g = Graph::complete(5);
        let cs = component_sizes::<f64>(&g, 2).unwrap();
        assert_eq!(cs.distribution.masses(), &[0.0, 0.0, 1.0]);
        assert_eq!(cs.truncated_mass, 1.0);
    }

    #[test]
    fn zero_policy_informs_nobody() {
        let sc = exp_scenario(0.02);
        let g = Graph::complete(20);
        let rep = simulate(&g, &Policy::zero(0.25), &sc, 4, 1).unwrap();
        assert!(rep.fractions.iter().all(|&f| f == 0.0));
        assert_eq!(rep.std_error, 0.0);
    }

    #[test]
    fn certain_success_informs_everyone() {
        let sc = Scenario::new(
            0.5,
            PreferenceDistribution::uniform(0.0, 1.0).unwrap(),
            SuccessTechnology::smooth_step(1.0, 0.2).unwrap(),
            CostFunction::linear(1.0).unwrap(),
            ConnectionDistribution::point_mass(9),
            Settings::default(),
        )
        .unwrap();
        let policy = Policy::new(vec![(0.0, 2.0), (0.25, 2.0)]).unwrap();
        let rep = simulate(&Graph::complete(10), &policy, &sc, 3, 9).unwrap();
        assert_eq!(rep.mean, 1.0);
    }

    #[test]
    fn deterministic_and_coupled() {
        let sc = exp_scenario(0.02);
        let solver = Solver::new(&sc).unwrap();
        let sol = solver.solve().unwrap();
        let policy = solver.policy(sol.q, 512).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let sparse = erdos_renyi(2000, 0.0005, &mut rng).unwrap();
        let mut edges = sparse.edges().to_vec();
        let extra = erdos_renyi(2000, 0.0005, &mut rng).unwrap();
        let have: HashSet<_> = edges.iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
        edges.extend(
            extra
                .edges()
                .iter()
                .filter(|&&(u, v)| !have.contains(&(u.min(v), u.max(v)))),
        );
        let dense = Graph::new(2000, edges).unwrap();
        let a = simulate(&sparse, &policy, &sc, 8, 42).unwrap();
        let b = simulate(&sparse, &policy, &sc, 8, 42).unwrap();
        assert_eq!(a, b);
        let c = simulate(&dense, &policy, &sc, 8, 42).unwrap();
        for (lo, hi) in a.fractions.iter().zip(&c.fractions) {
            assert!(hi >= lo);
        }
    }

    #[test]
    fn edge_list_dump() {
        let g = Graph::new(3, vec![(0, 1), (2, 1)]).unwrap();
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "0 1\n2 1\n");
    }
}
