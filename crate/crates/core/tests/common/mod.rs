#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::Rng;
use rankone_core::{
    build_bipartite, build_network, make_larson_wogen, BNetwork, BandSystem, OrientedFlow, PseudoFlow, Rational,
    Scalar, Side, VertexId, WeightSequenceSpec, WeightTail,
};

/// Larson–Wogen truncation with random dyadic weights, exact.
pub fn random_lw<R: Rng>(rng: &mut R, n_max: usize) -> (BandSystem<Rational>, BNetwork<Rational>) {
    let prefix = (0..=n_max)
        .map(|_| {
            let x = f64::from(rng.random_range(1..=12)) / 4.0;
            if rng.random_bool(0.5) {
                x
            } else {
                -x
            }
        })
        .collect();
    let weights = WeightSequenceSpec::with_prefix(prefix, WeightTail::ExplicitL1 { summable: true, bound: None });
    let sys = make_larson_wogen::<Rational>(&weights, n_max).unwrap();
    let net = build_network(build_bipartite(&sys)).unwrap();
    (sys, net)
}

/// Random flow on the B-network that preserves at every interior vertex;
/// boundary vertices get arbitrary terminal flow.
pub fn random_balanced_flow<R: Rng>(rng: &mut R, sys: &BandSystem<Rational>, net: &BNetwork<Rational>) -> PseudoFlow<Rational> {
    let mut flow = PseudoFlow::new();
    for (l, r, _) in net.graph().edges() {
        let x = rng.random_range(-3..=3);
        flow.set(l, r, Rational::from_ratio(x, 1));
    }
    for v in 1..=sys.n_max() {
        let terminal = match sys.side_of(v) {
            Side::Left => net.source(),
            Side::Right => net.sink(),
        };
        if v <= sys.interior_limit() {
            // d(v) = F̂(v, terminal) + Σ_w F̂(v, w) = 0
            let inner = net
                .graph()
                .edges()
                .filter_map(|(l, r, _)| {
                    if l == v {
                        Some(flow.get(v, r))
                    } else if r == v {
                        Some(flow.get(v, l))
                    } else {
                        None
                    }
                })
                .fold(Rational::from_ratio(0, 1), |a, b| a + b);
            flow.set(terminal, v, inner);
        } else {
            flow.set(terminal, v, Rational::from_ratio(rng.random_range(-3..=3), 1));
        }
    }
    flow
}

/// Graph with levels `0..levels`: the root alone on level 0, one to three
/// vertices on each other level, edges only inside a level or between
/// neighbouring levels. The flow sends path flows from the root to the last
/// level and adds circulations, so orienting it yields back arcs and
/// same-level arcs as well as forward ones.
pub fn layered_flow<S: Scalar, R: Rng>(rng: &mut R, levels: usize) -> OrientedFlow<S> {
    let mut level_vertices: Vec<Vec<VertexId>> = vec![vec![0]];
    let mut next = 1;
    for _ in 1..levels {
        let width = rng.random_range(1..=3);
        level_vertices.push((next..next + width).collect());
        next += width;
    }
    let mut edges = BTreeSet::new();
    for i in 1..levels {
        for &v in &level_vertices[i] {
            let &u = level_vertices[i - 1].choose(rng).unwrap();
            edges.insert((u, v));
            if rng.random_bool(0.8) {
                let &u = level_vertices[i - 1].choose(rng).unwrap();
                edges.insert((u, v));
            }
        }
        for pair in level_vertices[i].windows(2) {
            if rng.random_bool(0.6) {
                edges.insert((pair[0], pair[1]));
            }
        }
    }
    let mut adjacency: BTreeMap<VertexId, Vec<VertexId>> = BTreeMap::new();
    for &(a, b) in &edges {
        adjacency.entry(a).or_default().push(b);
        adjacency.entry(b).or_default().push(a);
    }
    let level_of: BTreeMap<VertexId, usize> =
        level_vertices.iter().enumerate().flat_map(|(i, l)| l.iter().map(move |&v| (v, i))).collect();

    let mut pf = PseudoFlow::<S>::new();
    for _ in 0..rng.random_range(2..=5) {
        let amount = S::from_ratio(rng.random_range(1..=4), 1);
        let top = *level_vertices[levels - 1].choose(rng).unwrap();
        let path = walk_down(rng, &adjacency, &level_of, top, 12).unwrap_or_else(|| walk_down(rng, &adjacency, &level_of, top, 0).unwrap());
        for w in path.windows(2) {
            pf.add(w[1], w[0], amount.clone());
        }
    }
    for _ in 0..rng.random_range(0..=4) {
        let start = rng.random_range(1..next);
        if let Some(cycle) = random_cycle(rng, &adjacency, start, 3 * levels) {
            let amount = S::from_ratio(rng.random_range(1..=4), 1);
            for i in 0..cycle.len() {
                pf.add(cycle[i], cycle[(i + 1) % cycle.len()], amount.clone());
            }
        }
    }
    let mut flow = OrientedFlow::new();
    for (u, v, x) in pf.iter() {
        let length = S::from_ratio(rng.random_range(1..=8), rng.random_range(1..=4));
        if *x > S::zero() {
            flow.insert(u, v, x.clone(), length).unwrap();
        } else if *x < S::zero() {
            flow.insert(v, u, -x.clone(), length).unwrap();
        }
    }
    flow
}

// Every vertex has a neighbour one level down, so a walk from the top
// reaches the root. Up to `detours` steps go sideways or back up instead;
// reversed, those are the back arcs that survive cycle cancellation.
fn walk_down<R: Rng>(
    rng: &mut R,
    adjacency: &BTreeMap<VertexId, Vec<VertexId>>,
    level_of: &BTreeMap<VertexId, usize>,
    top: VertexId,
    mut detours: usize,
) -> Option<Vec<VertexId>> {
    let levels = level_of.values().max().unwrap() + 1;
    let mut path = vec![top];
    let mut here = top;
    while here != 0 {
        let level = level_of[&here];
        let fresh = |w: &&VertexId| !path.contains(*w);
        let sideways: Vec<VertexId> =
            adjacency[&here].iter().filter(fresh).copied().filter(|w| level_of[w] >= level && level_of[w] + 1 < levels).collect();
        let down: Vec<VertexId> = adjacency[&here].iter().filter(fresh).copied().filter(|w| level_of[w] + 1 == level).collect();
        here = match (sideways.choose(rng), down.choose(rng)) {
            (Some(&w), _) if detours > 0 && rng.random_bool(0.5) => {
                detours -= 1;
                w
            }
            (_, Some(&w)) => w,
            _ => return None,
        };
        path.push(here);
    }
    Some(path)
}

fn random_cycle<R: Rng>(
    rng: &mut R,
    adjacency: &BTreeMap<VertexId, Vec<VertexId>>,
    start: VertexId,
    max_steps: usize,
) -> Option<Vec<VertexId>> {
    let mut path = vec![start];
    for _ in 0..max_steps {
        let here = *path.last().unwrap();
        let previous = path.len().checked_sub(2).map(|i| path[i]);
        let options: Vec<VertexId> = adjacency[&here].iter().copied().filter(|&w| Some(w) != previous).collect();
        let &w = options.choose(rng)?;
        if let Some(at) = path.iter().position(|&x| x == w) {
            return Some(path[at..].to_vec());
        }
        path.push(w);
    }
    None
}

/// `Σ_{k=from}^{to} 1/|a_k|` computed term by term.
pub fn partial_sum(a: impl Fn(usize) -> f64, from: usize, to: usize) -> f64 {
    (from..=to).map(|k| 1.0 / a(k).abs()).sum()
}
