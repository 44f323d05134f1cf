//! Sociogram construction (conversation, proximity, shared attention) and
//! real-vs-simulated graph comparison metrics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logmodel::GroupSession;

/// Default turn-taking window, seconds.
pub const DEFAULT_TAU_TURN: f64 = 2.0;

/// Default proximity threshold, length units.
pub const DEFAULT_D_THRESH: f64 = 1.5;

/// Default proximity resampling grid step, seconds.
pub const DEFAULT_GRID_DT: f64 = 0.5;

/// Binarization threshold for the isomorphism score, as a fraction of each
/// graph's maximum edge weight.
pub const BINARIZE_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    Conversation,
    Proximity,
    SharedAttention,
}

impl GraphKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            GraphKind::Conversation => "conversation",
            GraphKind::Proximity => "proximity",
            GraphKind::SharedAttention => "shared_attention",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: String,
    pub to: String,
    pub weight: f64,
}

/// Weighted interaction graph over a group's participants. Undirected
/// graphs store each pair once with `from < to`; no self-loops.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sociogram {
    pub kind: GraphKind,
    pub directed: bool,
    pub nodes: Vec<String>,
    pub edges: Vec<Edge>,
}

impl Sociogram {
    /// Build from raw weighted pairs; canonicalizes undirected pairs,
    /// drops non-positive weights, and rejects self-loops and unknown nodes.
    pub fn from_edges(
        kind: GraphKind,
        directed: bool,
        mut nodes: Vec<String>,
        raw: &[(String, String, f64)],
    ) -> Result<Sociogram> {
        nodes.sort();
        nodes.dedup();
        let mut map: BTreeMap<(String, String), f64> = BTreeMap::new();
        for (u, v, w) in raw {
            if u == v {
                return Err(Error::GraphMismatch(format!("self-loop on {u}")));
            }
            if !nodes.contains(u) || !nodes.contains(v) {
                return Err(Error::GraphMismatch(format!("edge endpoint not in node set: {u}-{v}")));
            }
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::GraphMismatch(format!("invalid weight {w} on {u}-{v}")));
            }
            if *w == 0.0 {
                continue;
            }
            let key = if directed || u < v {
                (u.clone(), v.clone())
            } else {
                (v.clone(), u.clone())
            };
            *map.entry(key).or_insert(0.0) += w;
        }
        Ok(Sociogram {
            kind,
            directed,
            nodes,
            edges: map
                .into_iter()
                .map(|((from, to), weight)| Edge { from, to, weight })
                .collect(),
        })
    }

    /// Divide all weights by their sum (no-op on an empty edge set).
    pub fn normalized(mut self) -> Sociogram {
        let total: f64 = self.edges.iter().map(|e| e.weight).sum();
        if total > 0.0 {
            for e in self.edges.iter_mut() {
                e.weight /= total;
            }
        }
        self
    }

    pub fn weight_map(&self) -> BTreeMap<(&str, &str), f64> {
        self.edges
            .iter()
            .map(|e| ((e.from.as_str(), e.to.as_str()), e.weight))
            .collect()
    }

    /// Node strength: sum of incident edge weights (in + out for directed).
    pub fn strengths(&self) -> BTreeMap<&str, f64> {
        let mut out: BTreeMap<&str, f64> = self.nodes.iter().map(|n| (n.as_str(), 0.0)).collect();
        for e in &self.edges {
            *out.get_mut(e.from.as_str()).unwrap() += e.weight;
            *out.get_mut(e.to.as_str()).unwrap() += e.weight;
        }
        out
    }

    /// DOT serialization with a `kind` graph attribute and `weight` edge
    /// attributes.
    pub fn to_dot(&self) -> String {
        let (gtype, arrow) = if self.directed { ("digraph", "->") } else { ("graph", "--") };
        let mut out = format!("{gtype} sociogram {{\n  graph [kind=\"{}\"];\n", self.kind.as_str());
        for n in &self.nodes {
            out.push_str(&format!("  \"{n}\";\n"));
        }
        for e in &self.edges {
            out.push_str(&format!(
                "  \"{}\" {arrow} \"{}\" [weight={}];\n",
                e.from, e.to, e.weight
            ));
        }
        out.push_str("}\n");
        out
    }
}

/// Directed turn-taking graph: edge A→B accumulates B's utterance duration
/// whenever B starts within `(0, tau_turn]` after A stops. Weights are
/// normalized to sum 1.
pub fn conversation_graph(session: &GroupSession, tau_turn: f64) -> Result<Sociogram> {
    let nodes: Vec<String> = session
        .participants
        .iter()
        .map(|p| p.participant_id.clone())
        .collect();
    let mut utterances: Vec<(&str, f64, f64)> = Vec::new();
    for log in &session.participants {
        for e in &log.speaking {
            utterances.push((log.participant_id.as_str(), e.start, e.duration));
        }
    }
    utterances.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(b.0)));
    let starts: Vec<f64> = utterances.iter().map(|u| u.1).collect();
    let mut raw = Vec::new();
    for &(speaker_a, start_a, dur_a) in &utterances {
        let end_a = start_a + dur_a;
        // every utterance starting within (end_a, end_a + tau] is a turn
        // taken in response to A, regardless of intervening speech
        let lo = starts.partition_point(|&s| s <= end_a);
        let hi = starts.partition_point(|&s| s <= end_a + tau_turn);
        for &(speaker_b, _, dur_b) in &utterances[lo..hi] {
            if speaker_a != speaker_b {
                raw.push((speaker_a.to_string(), speaker_b.to_string(), dur_b));
            }
        }
    }
    Ok(Sociogram::from_edges(GraphKind::Conversation, true, nodes, &raw)?.normalized())
}

/// Undirected proximity graph: positions are held onto a common `grid_dt`
/// grid; each pair's weight is the fraction of co-sampled instants with
/// distance below `d_thresh`. Weights are normalized to sum 1.
pub fn proximity_graph(session: &GroupSession, d_thresh: f64, grid_dt: f64) -> Result<Sociogram> {
    if !(grid_dt > 0.0) || !(d_thresh > 0.0) {
        return Err(Error::InvalidInput("d_thresh and grid_dt must be positive".into()));
    }
    let nodes: Vec<String> = session
        .participants
        .iter()
        .map(|p| p.participant_id.clone())
        .collect();
    let n_steps = (session.duration / grid_dt).floor() as usize + 1;
    // zero-order hold per participant over the common grid
    let mut held: Vec<Vec<Option<[f64; 3]>>> = Vec::with_capacity(session.participants.len());
    for log in &session.participants {
        let mut row = Vec::with_capacity(n_steps);
        let mut idx = 0usize;
        let mut last: Option<[f64; 3]> = None;
        for step in 0..n_steps {
            let t = step as f64 * grid_dt;
            while idx < log.locations.len() && log.locations[idx].t <= t {
                let s = &log.locations[idx];
                last = Some([s.x, s.y, s.z]);
                idx += 1;
            }
            row.push(last);
        }
        held.push(row);
    }
    let mut raw = Vec::new();
    for i in 0..held.len() {
        for j in i + 1..held.len() {
            let mut close = 0usize;
            let mut both = 0usize;
            for step in 0..n_steps {
                if let (Some(a), Some(b)) = (held[i][step], held[j][step]) {
                    both += 1;
                    let d2 = (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2);
                    if d2.sqrt() < d_thresh {
                        close += 1;
                    }
                }
            }
            if both > 0 && close > 0 {
                raw.push((
                    nodes[i].clone(),
                    nodes[j].clone(),
                    close as f64 / both as f64,
                ));
            }
        }
    }
    Ok(Sociogram::from_edges(GraphKind::Proximity, false, nodes, &raw)?.normalized())
}

/// Undirected gaze-synchrony graph: for each pair and object, accumulate
/// the temporal overlap of their fixations on that object. Weights are
/// normalized to sum 1.
pub fn shared_attention_graph(session: &GroupSession) -> Result<Sociogram> {
    let nodes: Vec<String> = session
        .participants
        .iter()
        .map(|p| p.participant_id.clone())
        .collect();
    let mut raw = Vec::new();
    for i in 0..session.participants.len() {
        for j in i + 1..session.participants.len() {
            let (a, b) = (&session.participants[i], &session.participants[j]);
            let mut overlap = 0.0;
            for ea in &a.gaze {
                for eb in &b.gaze {
                    if ea.target_object_id != eb.target_object_id {
                        continue;
                    }
                    let lo = ea.start.max(eb.start);
                    let hi = ea.end().min(eb.end());
                    if hi > lo {
                        overlap += hi - lo;
                    }
                }
            }
            if overlap > 0.0 {
                raw.push((nodes[i].clone(), nodes[j].clone(), overlap));
            }
        }
    }
    Ok(Sociogram::from_edges(GraphKind::SharedAttention, false, nodes, &raw)?.normalized())
}

/// Real-vs-simulated graph comparison metrics (Table 2 style).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFidelity {
    pub mean_weight_diff: f64,
    pub mean_node_interaction_diff: f64,
    pub jaccard_edges: f64,
    pub cosine_similarity: f64,
    pub isomorphism_score: f64,
}

fn binarized_edges(g: &Sociogram) -> std::collections::BTreeSet<(String, String)> {
    let max_w = g.edges.iter().map(|e| e.weight).fold(0.0f64, f64::max);
    let thresh = BINARIZE_FRACTION * max_w;
    g.edges
        .iter()
        .filter(|e| e.weight > thresh)
        .map(|e| (e.from.clone(), e.to.clone()))
        .collect()
}

/// Compare two sociograms over the same node set and kind. All metrics use
/// weights normalized per graph, so they are invariant to positive weight
/// rescaling.
pub fn compare_graphs(g_real: &Sociogram, g_sim: &Sociogram) -> Result<GraphFidelity> {
    if g_real.kind != g_sim.kind || g_real.directed != g_sim.directed {
        return Err(Error::GraphMismatch("graph kind mismatch".into()));
    }
    if g_real.nodes != g_sim.nodes {
        return Err(Error::GraphMismatch("node set mismatch".into()));
    }
    let a = g_real.clone().normalized();
    let b = g_sim.clone().normalized();
    let wa = a.weight_map();
    let wb = b.weight_map();
    let union: std::collections::BTreeSet<(&str, &str)> =
        wa.keys().chain(wb.keys()).cloned().collect();
    let inter = wa.keys().filter(|k| wb.contains_key(*k)).count();
    let jaccard_edges = if union.is_empty() {
        1.0
    } else {
        inter as f64 / union.len() as f64
    };
    let (mut dot, mut na, mut nb, mut diff_sum) = (0.0, 0.0, 0.0, 0.0);
    for key in &union {
        let x = wa.get(key).copied().unwrap_or(0.0);
        let y = wb.get(key).copied().unwrap_or(0.0);
        dot += x * y;
        na += x * x;
        nb += y * y;
        diff_sum += (x - y).abs();
    }
    let cosine_similarity = if na == 0.0 && nb == 0.0 {
        1.0
    } else if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        // sqrt of the product (not the product of sqrts) so that
        // self-comparison yields exactly 1.0
        dot / (na * nb).sqrt()
    };
    let mean_weight_diff = if union.is_empty() {
        0.0
    } else {
        diff_sum / union.len() as f64
    };
    let sa = a.strengths();
    let sb = b.strengths();
    let mean_node_interaction_diff = if a.nodes.is_empty() {
        0.0
    } else {
        a.nodes
            .iter()
            .map(|n| (sa[n.as_str()] - sb[n.as_str()]).abs())
            .sum::<f64>()
            / a.nodes.len() as f64
    };
    let ba = binarized_edges(&a);
    let bb = binarized_edges(&b);
    let n = a.nodes.len();
    let n_possible = if a.directed { n * (n - 1) } else { n * (n - 1) / 2 }.max(1);
    let hamming = ba.symmetric_difference(&bb).count();
    let isomorphism_score = 1.0 - hamming as f64 / n_possible as f64;
    Ok(GraphFidelity {
        mean_weight_diff,
        mean_node_interaction_diff,
        jaccard_edges,
        cosine_similarity,
        isomorphism_score,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logmodel::{GazeEvent, GroupSession, LocationSample, ParticipantLog, SpeakingEvent};

    fn speaking(pid: &str, events: &[(f64, f64)]) -> ParticipantLog {
        let mut log = ParticipantLog::empty(pid);
        for &(start, duration) in events {
            log.speaking.push(SpeakingEvent {
                participant_id: pid.into(),
                start,
                duration,
            });
        }
        log
    }

    fn session(logs: Vec<ParticipantLog>, duration: f64) -> GroupSession {
        GroupSession::new("g", duration, logs, vec!["x".into(), "y".into()], None).unwrap()
    }

    #[test]
    fn lone_speaker_yields_no_edges() {
        let s = session(
            vec![speaking("a", &[(0.0, 2.0), (5.0, 1.0)]), speaking("b", &[])],
            20.0,
        );
        let g = conversation_graph(&s, DEFAULT_TAU_TURN).unwrap();
        assert!(g.edges.is_empty());
    }

    #[test]
    fn hand_traced_turn_edge() {
        // a speaks [0,2], b speaks [3,5]: gap 1 <= tau -> edge a->b, weight
        // 1.0 after normalization
        let s = session(
            vec![speaking("a", &[(0.0, 2.0)]), speaking("b", &[(3.0, 2.0)])],
            20.0,
        );
        let g = conversation_graph(&s, 2.0).unwrap();
        assert_eq!(g.edges.len(), 1);
        assert_eq!(g.edges[0].from, "a");
        assert_eq!(g.edges[0].to, "b");
        assert_eq!(g.edges[0].weight, 1.0);
    }

    #[test]
    fn window_exceeded_yields_empty() {
        let s = session(
            vec![speaking("a", &[(0.0, 2.0)]), speaking("b", &[(10.0, 2.0)])],
            20.0,
        );
        let g = conversation_graph(&s, 2.0).unwrap();
        assert!(g.edges.is_empty());
    }

    fn walker(pid: &str, samples: &[(f64, f64, f64, f64)]) -> ParticipantLog {
        let mut log = ParticipantLog::empty(pid);
        for &(t, x, y, z) in samples {
            log.locations.push(LocationSample {
                participant_id: pid.into(),
                t,
                x,
                y,
                z,
            });
        }
        log
    }

    #[test]
    fn static_close_pair_has_full_weight() {
        let s = session(
            vec![
                walker("a", &[(0.0, 0.0, 0.0, 0.0)]),
                walker("b", &[(0.0, 0.1, 0.0, 0.0)]),
            ],
            10.0,
        );
        let g = proximity_graph(&s, 1.5, 0.5).unwrap();
        assert_eq!(g.edges.len(), 1);
        assert_eq!(g.edges[0].weight, 1.0);
    }

    #[test]
    fn static_far_pair_has_no_edge() {
        let s = session(
            vec![
                walker("a", &[(0.0, 0.0, 0.0, 0.0)]),
                walker("b", &[(0.0, 10.0, 0.0, 0.0)]),
            ],
            10.0,
        );
        let g = proximity_graph(&s, 1.5, 0.5).unwrap();
        assert!(g.edges.is_empty());
    }

    #[test]
    fn scripted_crossing_matches_hand_grid_trace() {
        // grid_dt = 1 over [0,4]: 5 instants. p0 static at origin; p1 jumps
        // from x=10 to x=0.5 at t=2; p2 static at y=1.
        // Hand trace: p0-p1 close at t=2,3,4 -> 3/5; p0-p2 always -> 5/5;
        // p1-p2 close at t=2,3,4 -> 3/5. Normalized: 3/11, 5/11, 3/11.
        let s = session(
            vec![
                walker("p0", &[(0.0, 0.0, 0.0, 0.0)]),
                walker("p1", &[(0.0, 10.0, 0.0, 0.0), (2.0, 0.5, 0.0, 0.0)]),
                walker("p2", &[(0.0, 0.0, 1.0, 0.0)]),
            ],
            4.0,
        );
        let g = proximity_graph(&s, 1.5, 1.0).unwrap();
        let w = g.weight_map();
        assert!((w[&("p0", "p1")] - 3.0 / 11.0).abs() < 1e-12);
        assert!((w[&("p0", "p2")] - 5.0 / 11.0).abs() < 1e-12);
        assert!((w[&("p1", "p2")] - 3.0 / 11.0).abs() < 1e-12);
    }

    fn gazer(pid: &str, fixations: &[(f64, f64, &str)]) -> ParticipantLog {
        let mut log = ParticipantLog::empty(pid);
        for &(start, duration, obj) in fixations {
            log.gaze.push(GazeEvent {
                participant_id: pid.into(),
                start,
                duration,
                target_object_id: obj.into(),
            });
        }
        log
    }

    #[test]
    fn no_common_objects_no_edges() {
        let s = session(
            vec![gazer("a", &[(0.0, 5.0, "x")]), gazer("b", &[(0.0, 5.0, "y")])],
            20.0,
        );
        assert!(shared_attention_graph(&s).unwrap().edges.is_empty());
    }

    #[test]
    fn interval_intersection_overlap() {
        // both on object x over [0,10] and [5,15] -> 5 s overlap
        let s = session(
            vec![gazer("a", &[(0.0, 10.0, "x")]), gazer("b", &[(5.0, 10.0, "x")])],
            20.0,
        );
        let g = shared_attention_graph(&s).unwrap();
        assert_eq!(g.edges.len(), 1);
        // single edge -> normalized weight 1; overlap seconds checked by
        // rebuilding without normalization via a second participant pair
        assert_eq!(g.edges[0].weight, 1.0);
        let s2 = session(
            vec![
                gazer("a", &[(0.0, 10.0, "x")]),
                gazer("b", &[(5.0, 10.0, "x")]),
                gazer("c", &[(0.0, 15.0, "x")]),
            ],
            20.0,
        );
        let g2 = shared_attention_graph(&s2).unwrap();
        let w = g2.weight_map();
        // overlaps: a-b 5, a-c 10, b-c 10 -> normalized 0.2, 0.4, 0.4
        assert!((w[&("a", "b")] - 0.2).abs() < 1e-12);
        assert!((w[&("a", "c")] - 0.4).abs() < 1e-12);
        assert!((w[&("b", "c")] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn identical_logs_make_maximal_edge() {
        let s = session(
            vec![gazer("a", &[(0.0, 10.0, "x")]), gazer("b", &[(0.0, 10.0, "x")])],
            20.0,
        );
        let g = shared_attention_graph(&s).unwrap();
        assert_eq!(g.edges[0].weight, 1.0);
    }

    fn graph(nodes: &[&str], edges: &[(&str, &str, f64)]) -> Sociogram {
        Sociogram::from_edges(
            GraphKind::Proximity,
            false,
            nodes.iter().map(|s| s.to_string()).collect(),
            &edges
                .iter()
                .map(|(u, v, w)| (u.to_string(), v.to_string(), *w))
                .collect::<Vec<_>>(),
        )
        .unwrap()
    }

    #[test]
    fn identity_comparison_is_exact() {
        let g = graph(&["a", "b", "c"], &[("a", "b", 0.7), ("b", "c", 0.3)]);
        let f = compare_graphs(&g, &g).unwrap();
        assert_eq!(f.mean_weight_diff, 0.0);
        assert_eq!(f.mean_node_interaction_diff, 0.0);
        assert_eq!(f.jaccard_edges, 1.0);
        assert_eq!(f.cosine_similarity, 1.0);
        assert_eq!(f.isomorphism_score, 1.0);
    }

    #[test]
    fn empty_vs_complete_graph() {
        let empty = graph(&["a", "b", "c", "d"], &[]);
        let full = graph(
            &["a", "b", "c", "d"],
            &[
                ("a", "b", 1.0),
                ("a", "c", 1.0),
                ("a", "d", 1.0),
                ("b", "c", 1.0),
                ("b", "d", 1.0),
                ("c", "d", 1.0),
            ],
        );
        let f = compare_graphs(&empty, &full).unwrap();
        assert_eq!(f.jaccard_edges, 0.0);
        assert_eq!(f.isomorphism_score, 0.0);
        assert_eq!(f.cosine_similarity, 0.0);
    }

    #[test]
    fn hand_built_four_node_fixture() {
        // g1 edges ab, ac, ad, bc; g2 edges ab, ac, ad (subset) -> jaccard 3/4
        let g1 = graph(
            &["a", "b", "c", "d"],
            &[("a", "b", 0.4), ("a", "c", 0.3), ("a", "d", 0.2), ("b", "c", 0.1)],
        );
        let g2 = graph(
            &["a", "b", "c", "d"],
            &[("a", "b", 0.5), ("a", "c", 0.3), ("a", "d", 0.2)],
        );
        let f = compare_graphs(&g1, &g2).unwrap();
        assert!((f.jaccard_edges - 0.75).abs() < 1e-12);
        // mean weight diff over 4 union edges: (0.1 + 0 + 0 + 0.1)/4 = 0.05
        assert!((f.mean_weight_diff - 0.05).abs() < 1e-12);
        // strengths: g1 a=.9 b=.5 c=.4 d=.2; g2 a=1.0 b=.5 c=.3 d=.2
        assert!((f.mean_node_interaction_diff - 0.05).abs() < 1e-12);
        let expected_cosine = 0.33 / (0.30f64.sqrt() * 0.38f64.sqrt());
        assert!((f.cosine_similarity - expected_cosine).abs() < 1e-12);
        // binarized: g1 keeps all 4, g2 keeps its 3 -> hamming 1 of 6
        assert!((f.isomorphism_score - 5.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn positive_rescaling_leaves_metrics_unchanged() {
        let g1 = graph(&["a", "b", "c"], &[("a", "b", 0.6), ("b", "c", 0.4)]);
        let g2 = graph(&["a", "b", "c"], &[("a", "b", 0.5), ("a", "c", 0.5)]);
        let f = compare_graphs(&g1, &g2).unwrap();
        let mut scaled = g2.clone();
        for e in scaled.edges.iter_mut() {
            e.weight *= 37.5;
        }
        let f2 = compare_graphs(&g1, &scaled).unwrap();
        assert_eq!(f, f2);
    }

    #[test]
    fn mismatched_graphs_rejected() {
        let g1 = graph(&["a", "b"], &[("a", "b", 1.0)]);
        let g2 = graph(&["a", "c"], &[("a", "c", 1.0)]);
        assert!(compare_graphs(&g1, &g2).is_err());
        let mut g3 = g1.clone();
        g3.kind = GraphKind::Conversation;
        g3.directed = true;
        assert!(compare_graphs(&g1, &g3).is_err());
    }

    #[test]
    fn construction_is_event_order_invariant() {
        // GroupSession::new sorts streams, so shuffled input produces the
        // same graphs
        let ordered = session(
            vec![
                gazer("a", &[(0.0, 5.0, "x"), (6.0, 3.0, "y")]),
                gazer("b", &[(2.0, 5.0, "x"), (7.0, 3.0, "y")]),
            ],
            20.0,
        );
        let shuffled = session(
            vec![
                gazer("a", &[(6.0, 3.0, "y"), (0.0, 5.0, "x")]),
                gazer("b", &[(7.0, 3.0, "y"), (2.0, 5.0, "x")]),
            ],
            20.0,
        );
        assert_eq!(
            shared_attention_graph(&ordered).unwrap(),
            shared_attention_graph(&shuffled).unwrap()
        );
    }

    #[test]
    fn dot_export_well_formed() {
        let g = graph(&["a", "b"], &[("a", "b", 0.5)]);
        let dot = g.to_dot();
        assert!(dot.starts_with("graph sociogram {"));
        assert!(dot.contains("\"a\" -- \"b\" [weight=0.5];"));
        assert!(dot.trim_end().ends_with('}'));
    }

    #[test]
    fn self_loops_rejected() {
        let r = Sociogram::from_edges(
            GraphKind::Proximity,
            false,
            vec!["a".into()],
            &[("a".into(), "a".into(), 1.0)],
        );
        assert!(r.is_err());
    }
}
