//! Rank-one density verdicts: an analytic series test for catalog weight
//! tails, a frontier-distance profile otherwise, and end-to-end
//! cross-validation of ray witnesses through the operator bridge.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::distance::{bfs_layers, dijkstra_with, Distances};
use crate::error::{Error, Result};
use crate::flow::flow_stats;
use crate::graph::{build_bipartite, build_network, BipartiteGraph, LazyBipartite, Neighbors, RootedNetwork, VertexId};
use crate::layers::ReferenceFlow;
use crate::operator::{annihilation_check, flow_to_operator, OperatorMatrix};
use crate::ray::{extract_ray, flow_from_ray, RayWitness, WitnessDump};
use crate::scalar::Scalar;
use crate::system::{validate_system, BandSystem, LarsonWogenRows, RowSource, Side};
use crate::weights::{LengthSeries, WeightSequenceSpec, WeightTail};

/// Input to [`decide`].
#[derive(Debug, Clone)]
pub enum SystemFamily {
    /// Infinite Larson–Wogen system, generated on demand.
    LarsonWogen(WeightSequenceSpec),
    /// Finite truncation given entry by entry.
    Explicit(BandSystem<f64>),
    /// Bipartite graph given directly.
    Graph(BipartiteGraph<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecideOptions {
    /// Profile depth `D` for the numeric test.
    pub depth: usize,
    /// Profile value `M` beyond which the numeric test reports density.
    pub threshold: f64,
    /// Edges in a NotDense witness for catalog tails.
    pub witness_depth: usize,
    /// Numeric NotDense needs `m_D − m_{D/2}` at most this.
    pub stability_tol: f64,
}

impl Default for DecideOptions {
    fn default() -> Self {
        Self { depth: 10_000, threshold: 1_000.0, witness_depth: 50, stability_tol: 1e-9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    Dense,
    NotDense,
    Inconclusive,
}

/// Why a Dense verdict was returned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DivergenceCertificate {
    /// The length series of the tail diverges.
    Analytic { series: LengthSeries, reason: String },
    /// The profile passed the threshold at this depth.
    Threshold { depth: usize, value: f64, threshold: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    /// Ray in `B(F)` for NotDense.
    pub ray: Option<WitnessDump>,
    pub certificate: Option<DivergenceCertificate>,
    /// `m_0, m_1, …`: least distance from the anchor vertex over each BFS layer.
    pub profile: Vec<f64>,
    /// Deepest layer in the profile.
    pub depth: usize,
}

/// Profile of least layer distances, with the search it came from.
#[derive(Debug, Clone)]
pub struct Profile {
    pub values: Vec<f64>,
    /// Argmin of each layer, lowest id on ties.
    pub argmins: Vec<VertexId>,
    pub distances: Distances<f64>,
    /// True when BFS ran out of vertices before the requested depth.
    pub exhausted: bool,
}

/// `m_n = min_{v ∈ L_n} φ(v)` for BFS layers `L_n` around `start`.
/// Distances are measured inside the explored ball of radius `max_depth`.
pub fn frontier_distance_profile<N: Neighbors<f64> + ?Sized>(
    net: &N,
    start: VertexId,
    max_depth: usize,
) -> Result<Profile> {
    let layers = bfs_layers(net, start, max_depth)?;
    let ball: BTreeSet<VertexId> = layers.iter().flatten().copied().collect();
    let distances = dijkstra_with(
        start,
        |v| Ok(net.neighbors(v)?.into_iter().filter(|(w, _)| ball.contains(w)).collect()),
        None,
    )?;
    let mut values = Vec::with_capacity(layers.len());
    let mut argmins = Vec::with_capacity(layers.len());
    for layer in &layers {
        let (v, d) = layer
            .iter()
            .map(|&v| (v, *distances.get(v).expect("layer vertices are reachable")))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .expect("BFS layers are nonempty");
        values.push(d);
        argmins.push(v);
    }
    let exhausted = layers.len() <= max_depth;
    Ok(Profile { values, argmins, distances, exhausted })
}

// Grows the profile by quadrupling the depth until it passes `threshold`,
// runs out of graph or reaches `max_depth`. Generation errors past the first
// round end the growth and keep the last good profile.
fn grow_profile<N: Neighbors<f64> + ?Sized>(
    net: &N,
    start: VertexId,
    max_depth: usize,
    threshold: f64,
) -> Result<Profile> {
    let mut depth = max_depth.min(64);
    let mut profile = frontier_distance_profile(net, start, depth)?;
    while !profile.exhausted && depth < max_depth && profile.values.iter().all(|&m| m <= threshold) {
        depth = max_depth.min(depth * 4);
        match frontier_distance_profile(net, start, depth) {
            Ok(p) => profile = p,
            Err(_) => break,
        }
    }
    Ok(profile)
}

fn first_exceeding(values: &[f64], threshold: f64) -> Option<usize> {
    values.iter().position(|&m| m > threshold)
}

pub fn decide(family: &SystemFamily, options: &DecideOptions) -> Result<Verdict> {
    if options.depth < 2 {
        return Err(Error::Precondition(format!("depth must be at least 2, got {}", options.depth)));
    }
    if !(options.threshold > 0.0) {
        return Err(Error::Precondition(format!("threshold must be positive, got {}", options.threshold)));
    }
    match family {
        SystemFamily::LarsonWogen(weights) => decide_larson_wogen(weights, options),
        SystemFamily::Explicit(sys) => {
            let report = validate_system(sys);
            if !report.is_valid() {
                return Err(Error::MalformedSystem(format!("{} condition violations", report.violations.len())));
            }
            decide_numeric(&build_bipartite(sys), options)
        }
        SystemFamily::Graph(graph) => decide_numeric(graph, options),
    }
}

fn decide_larson_wogen(weights: &WeightSequenceSpec, options: &DecideOptions) -> Result<Verdict> {
    let rows = LarsonWogenRows::new(weights.clone())?;
    let series = weights.length_series();
    // Explicit tails only define the prefix: vertices 1..=prefix.len().
    let available = match weights.tail {
        WeightTail::ExplicitL1 { .. } => Some(weights.prefix.len()),
        _ => None,
    };
    let graph = LazyBipartite::new(&rows as &dyn RowSource<f64>);
    if series.converges() {
        let witness_depth = match available {
            Some(n) if n < 5 => return Err(Error::TailUndefined { index: n + 1 }),
            // rows up to n − 1 exist, and a right vertex's neighbours need the next row
            Some(n) => options.witness_depth.min(n - 4),
            None => options.witness_depth,
        };
        let profile = frontier_distance_profile(&graph, 1, witness_depth)?;
        let candidate = profile
            .distances
            .path_to(*profile.argmins.last().expect("profile has layer 0"))
            .expect("argmins are reachable");
        let witness = certify_ray(Arc::new(rows.clone()), &candidate)?;
        return Ok(Verdict {
            kind: VerdictKind::NotDense,
            ray: Some(witness.to_dump()),
            certificate: None,
            depth: profile.values.len() - 1,
            profile: profile.values,
        });
    }
    let max_depth = match available {
        Some(n) => options.depth.min(n.saturating_sub(4)).max(1),
        None => options.depth,
    };
    let mut profile = grow_profile(&graph, 1, max_depth, options.threshold)?;
    if let Some(n) = first_exceeding(&profile.values, options.threshold) {
        profile.values.truncate(n + 1);
    }
    Ok(Verdict {
        kind: VerdictKind::Dense,
        ray: None,
        certificate: Some(DivergenceCertificate::Analytic { reason: series.describe(), series }),
        depth: profile.values.len() - 1,
        profile: profile.values,
    })
}

/// Runs a `B(F)` path through the flow machinery: unit flow from the root
/// along it, cycle elimination, layering and König extraction. The
/// extracted ray must reproduce the path.
fn certify_ray(rows: Arc<dyn RowSource<f64>>, path: &[VertexId]) -> Result<RayWitness<f64>> {
    let n_max = *path.iter().max().expect("paths are nonempty");
    let rooted = RootedNetwork::from_rows(rows, n_max)?;
    let mut rooted_path = vec![rooted.root()];
    rooted_path.extend_from_slice(path);
    let flow = flow_from_ray(&rooted, &rooted_path)?;
    let reference = Arc::new(ReferenceFlow::from_pseudo(&rooted, &flow, rooted.root())?);
    let extracted = extract_ray(Arc::clone(&reference), path.len())?;
    if extracted.ray != rooted_path {
        return Err(Error::CertificateFailure(format!(
            "extracted ray {:?} differs from the profile path",
            extracted.ray
        )));
    }
    let tail = RayWitness::measure(rooted.graph(), path.to_vec(), 0.0)?;
    let bound = tail.total_length();
    Ok(RayWitness { bound, ..tail })
}

fn decide_numeric(graph: &BipartiteGraph<f64>, options: &DecideOptions) -> Result<Verdict> {
    let start = graph
        .vertices()
        .next()
        .ok_or_else(|| Error::MalformedGraph("graph has no vertices".to_owned()))?;
    let profile = grow_profile(graph, start, options.depth, options.threshold)?;
    let mut values = profile.values.clone();
    if let Some(n) = first_exceeding(&values, options.threshold) {
        values.truncate(n + 1);
        return Ok(Verdict {
            kind: VerdictKind::Dense,
            ray: None,
            certificate: Some(DivergenceCertificate::Threshold {
                depth: n,
                value: values[n],
                threshold: options.threshold,
            }),
            depth: n,
            profile: values,
        });
    }
    let depth = values.len() - 1;
    let inconclusive = |values: Vec<f64>| Verdict {
        kind: VerdictKind::Inconclusive,
        ray: None,
        certificate: None,
        depth,
        profile: values,
    };
    if profile.exhausted {
        return Ok(inconclusive(values));
    }
    if values[depth] - values[depth / 2] <= options.stability_tol {
        let end = profile.argmins[depth];
        let path = profile.distances.path_to(end).expect("argmins are reachable");
        let witness = RayWitness::measure(graph, path, values[depth])?;
        return Ok(Verdict {
            kind: VerdictKind::NotDense,
            ray: Some(witness.to_dump()),
            certificate: None,
            depth,
            profile: values,
        });
    }
    Ok(inconclusive(values))
}

/// End-to-end certificate for a NotDense verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub n_max: usize,
    pub trace: f64,
    pub max_defect: f64,
    pub mass: f64,
    pub l1_norm: f64,
    pub operator: crate::operator::OperatorDump,
}

/// Truncates `source` at the ray's largest index, sends a unit flow from
/// the source (or sink, for a right first vertex) along the ray and out
/// through the truncation, converts it to an operator and checks that it
/// annihilates with trace one.
pub fn cross_validate<S: Scalar, R: RowSource<S> + ?Sized>(
    source: &R,
    verdict: &Verdict,
    tol: f64,
) -> Result<CrossValidation> {
    if verdict.kind != VerdictKind::NotDense {
        return Err(Error::Precondition(format!("cross-validation needs a NotDense verdict, got {:?}", verdict.kind)));
    }
    let ray = &verdict
        .ray
        .as_ref()
        .ok_or_else(|| Error::Precondition("NotDense verdict carries no ray".to_owned()))?
        .ray;
    let (&first, &last) = match (ray.first(), ray.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::CertificateFailure("empty ray".to_owned())),
    };
    let n_max = *ray.iter().max().expect("nonempty");
    let sys = BandSystem::from_source(source, n_max)?;
    if n_max <= 2 * sys.bandwidth() {
        return Err(Error::TruncationTooShallow { n_max, bandwidth: sys.bandwidth() });
    }
    if last <= sys.interior_limit() {
        return Err(Error::CertificateFailure(format!("ray ends at interior vertex {last}")));
    }
    let net = build_network(build_bipartite(&sys))?;
    let terminal = match sys.side_of(first) {
        Side::Left => net.source(),
        Side::Right => net.sink(),
    };
    let mut full = vec![terminal];
    full.extend_from_slice(ray);
    let flow = flow_from_ray::<S, _>(&net, &full).map_err(|e| Error::CertificateFailure(e.to_string()))?;
    let op: OperatorMatrix<S> = flow_to_operator(&net, &flow)?;
    let mass = flow_stats(&net, &flow)?.mass;
    let trace = op.trace();
    let defect = annihilation_check(&sys, &op).max_defect;
    let l1 = op.l1_norm();
    let report = CrossValidation {
        n_max,
        trace: trace.as_f64(),
        max_defect: defect.as_f64(),
        mass: mass.as_f64(),
        l1_norm: l1.as_f64(),
        operator: op.to_dump(),
    };
    if (report.trace - 1.0).abs() > tol {
        return Err(Error::CertificateFailure(format!("trace {} is not 1", report.trace)));
    }
    if report.max_defect > tol {
        return Err(Error::CertificateFailure(format!("annihilation defect {}", report.max_defect)));
    }
    if (report.mass - report.l1_norm).abs() > tol {
        return Err(Error::CertificateFailure(format!("mass {} differs from l1 norm {}", report.mass, report.l1_norm)));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn lw(weights: WeightSequenceSpec) -> Verdict {
        decide(&SystemFamily::LarsonWogen(weights), &DecideOptions::default()).unwrap()
    }

    #[test]
    fn unit_weights_are_dense() {
        let v = lw(WeightSequenceSpec::constant(1.0));
        assert_eq!(v.kind, VerdictKind::Dense);
        assert_eq!(v.profile[10], 10.0);
        assert!(*v.profile.last().unwrap() > 1000.0);
        assert_eq!(v.depth, 1001);
    }

    #[test]
    fn harmonic_weights_are_dense() {
        let v = lw(WeightSequenceSpec::power(1.0, -1.0));
        assert_eq!(v.kind, VerdictKind::Dense);
        assert!(matches!(v.certificate, Some(DivergenceCertificate::Analytic { .. })));
        assert!(v.ray.is_none());
    }

    #[test]
    fn geometric_weights_give_a_ray() {
        let v = lw(WeightSequenceSpec::geometric(1.0, 2.0));
        assert_eq!(v.kind, VerdictKind::NotDense);
        let ray = v.ray.as_ref().unwrap();
        assert_eq!(ray.ray, (1..=51).collect::<Vec<_>>());
        let oracle: f64 = (2..=51).map(|k| 0.5f64.powi(k)).sum();
        assert!((ray.bound - oracle).abs() < 1e-12);
        let rows = LarsonWogenRows::new(WeightSequenceSpec::geometric(1.0, 2.0)).unwrap();
        let report = cross_validate::<Rational, _>(&rows, &v, 1e-10).unwrap();
        assert_eq!(report.trace, 1.0);
        assert_eq!(report.max_defect, 0.0);
        assert!(report.mass <= 3.0);
    }

    #[test]
    fn cross_validate_rejects_dense_and_corrupted() {
        let rows = LarsonWogenRows::new(WeightSequenceSpec::power(1.0, -2.0)).unwrap();
        let dense = lw(WeightSequenceSpec::constant(1.0));
        assert!(matches!(cross_validate::<f64, _>(&rows, &dense, 1e-10), Err(Error::Precondition(_))));
        let mut v = lw(WeightSequenceSpec::power(1.0, -2.0));
        v.ray.as_mut().unwrap().ray[3] = 7;
        assert!(matches!(cross_validate::<f64, _>(&rows, &v, 1e-10), Err(Error::CertificateFailure(_))));
    }

    #[test]
    fn explicit_prefix_limits_the_witness() {
        let prefix: Vec<f64> = (1..=10).map(|k| (k * k) as f64).collect();
        let weights = WeightSequenceSpec::with_prefix(prefix, WeightTail::ExplicitL1 { summable: true, bound: Some(1.0) });
        let v = lw(weights);
        assert_eq!(v.kind, VerdictKind::NotDense);
        assert_eq!(v.ray.unwrap().ray, (1..=7).collect::<Vec<_>>());
    }

    #[test]
    fn numeric_profile_on_finite_graph() {
        let sys = crate::system::make_larson_wogen::<f64>(&WeightSequenceSpec::constant(1.0), 40).unwrap();
        let options = DecideOptions { depth: 20, threshold: 1000.0, ..DecideOptions::default() };
        let v = decide(&SystemFamily::Explicit(sys.clone()), &options).unwrap();
        assert_eq!(v.kind, VerdictKind::Inconclusive);
        let options = DecideOptions { depth: 100, threshold: 10.0, ..DecideOptions::default() };
        let v = decide(&SystemFamily::Explicit(sys), &options).unwrap();
        assert_eq!(v.kind, VerdictKind::Dense);
        assert_eq!(v.depth, 11);
    }

    #[test]
    fn numeric_not_dense_on_stable_profile() {
        let sys = crate::system::make_larson_wogen::<f64>(&WeightSequenceSpec::geometric(1.0, 2.0), 80).unwrap();
        let options = DecideOptions { depth: 60, ..DecideOptions::default() };
        let v = decide(&SystemFamily::Explicit(sys), &options).unwrap();
        assert_eq!(v.kind, VerdictKind::NotDense);
        let ray = v.ray.unwrap();
        assert!(ray.bound <= 0.5);
    }

    #[test]
    fn rejects_bad_options() {
        let family = SystemFamily::LarsonWogen(WeightSequenceSpec::constant(1.0));
        assert!(decide(&family, &DecideOptions { depth: 1, ..DecideOptions::default() }).is_err());
        assert!(decide(&family, &DecideOptions { threshold: 0.0, ..DecideOptions::default() }).is_err());
    }
}
