use std::collections::BTreeSet;
use std::sync::OnceLock;

use thd_core::data::{label_distribution, Dataset, Group, Schema};
use thd_core::fixtures::TwoBlobs;
use thd_core::mapper::connected_components;
use thd_core::report::{
    explain_individual, export_network, export_tree, import_tree_json, summarize_split, summarize_tree, Coloring,
    NetworkFormat, TreeFormat, Verdict,
};
use thd_core::stats::{node_coloring, Direction, StatsConfig};
use thd_core::thd::{run_thd, trace_point_path, tree_statistics, PathEnd, ThdParams, ThdTree};
use thd_core::ThdError;

fn blob() -> &'static (Dataset, ThdTree) {
    static CELL: OnceLock<(Dataset, ThdTree)> = OnceLock::new();
    CELL.get_or_init(|| {
        let d = TwoBlobs::default().dataset().unwrap();
        let t = run_thd(&d, &TwoBlobs::params()).unwrap();
        (d, t)
    })
}

fn single_blob() -> &'static (Dataset, ThdTree) {
    static CELL: OnceLock<(Dataset, ThdTree)> = OnceLock::new();
    CELL.get_or_init(|| {
        let d = TwoBlobs { sizes: (300, 0), ..Default::default() }.dataset().unwrap();
        let p = ThdParams { max_resolution: 5, ..TwoBlobs::params() };
        let t = run_thd(&d, &p).unwrap();
        (d, t)
    })
}

#[test]
fn blob_tree_splits_into_the_two_blobs() {
    let (d, tree) = blob();
    let fx = TwoBlobs::default();
    assert_eq!(tree.nodes().len(), 3);
    assert_eq!(tree.root.children.len(), 2);
    let ids: Vec<&str> = tree.root.children.iter().map(|c| c.id.as_str()).collect();
    assert_eq!(ids, ["1.1", "1.2"]);
    // Larger blob first.
    assert!(tree.root.children[0].group.len() >= tree.root.children[1].group.len());
    for child in &tree.root.children {
        let a = child.group.rows().iter().filter(|&&r| fx.in_a(r)).count();
        let majority = a.max(child.group.len() - a);
        assert!(majority as f64 >= 0.99 * child.group.len() as f64);
        assert!(child.is_leaf());
    }
    // Children and outliers partition the root.
    let mut all: Vec<usize> = tree.root.children.iter().flat_map(|c| c.group.rows().to_vec()).collect();
    all.extend(&tree.root.outliers);
    all.sort_unstable();
    assert_eq!(all, (0..d.rows()).collect::<Vec<_>>());
}

#[test]
fn resolution_history_is_monotone_and_ends_at_the_split() {
    let (_, tree) = blob();
    let h = &tree.root.resolution_history;
    assert_eq!(h[0].resolution, 1);
    assert!(h.windows(2).all(|w| w[1].resolution == w[0].resolution + 1));
    assert!(h[..h.len() - 1].iter().all(|s| s.summary.large_components < 2));
    assert!(h.last().unwrap().summary.large_components >= 2);
    for child in &tree.root.children {
        assert_eq!(child.resolution_history[0].resolution, 1);
        assert_eq!(child.final_resolution(), 30);
    }
}

#[test]
fn single_blob_stays_one_leaf() {
    let (_, tree) = single_blob();
    assert_eq!(tree.nodes().len(), 1);
    assert!(tree.root.is_leaf());
    assert_eq!(tree.root.resolution_history.len(), 5);
}

#[test]
fn threshold_above_row_count_is_rejected() {
    let d = TwoBlobs { sizes: (5, 5), ..Default::default() }.dataset().unwrap();
    let p = ThdParams { split_threshold: 11, ..Default::default() };
    assert!(matches!(run_thd(&d, &p), Err(ThdError::InvalidInput(_))));
}

#[test]
fn runs_are_deterministic_across_thread_pools() {
    let d = TwoBlobs { sizes: (60, 90), seed: 3, ..Default::default() }.dataset().unwrap();
    let p = TwoBlobs::params();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| run_thd(&d, &p)).unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(|| run_thd(&d, &p)).unwrap();
    assert_eq!(one, four);
    assert_eq!(serde_json::to_string(&one).unwrap(), serde_json::to_string(&four).unwrap());
}

#[test]
fn point_paths() {
    let (d, tree) = blob();
    for r in 0..d.rows() {
        let path = trace_point_path(tree, r).unwrap();
        assert_eq!(path.nodes[0], "1");
        let last = tree.node(path.last()).unwrap();
        match path.end {
            PathEnd::Leaf => assert!(last.is_leaf() && last.group.contains(r)),
            PathEnd::Outlier => assert!(last.outliers.contains(&r)),
        }
        for w in path.nodes.windows(2) {
            assert_eq!(tree.parent_of(&w[1]).unwrap().id, w[0]);
        }
    }
    assert!(matches!(trace_point_path(tree, d.rows()), Err(ThdError::InvalidRow(_))));
}

#[test]
fn statistics_agree_with_the_tree() {
    let (d, tree) = blob();
    let s = tree_statistics(tree, d);
    assert_eq!(s.node_count, 3);
    assert_eq!(s.leaf_count, 2);
    assert_eq!(s.max_depth, 1);
    assert_eq!(s.root_size, 500);
    assert_eq!(s.leaf_rows + s.total_outliers, 500);
    for n in &s.nodes {
        let node = tree.node(&n.id).unwrap();
        assert_eq!(n.size, node.group.len());
        let summary = summarize_split(tree, d, &n.id, &StatsConfig::default()).unwrap();
        assert_eq!(summary.size, n.size);
        assert_eq!(summary.label_distribution, n.label_distribution);
    }
}

#[test]
fn split_summaries_name_the_shifted_coordinate() {
    let (d, tree) = blob();
    let cfg = StatsConfig::default();
    let root = summarize_split(tree, d, "1", &cfg).unwrap();
    assert!(root.parent_id.is_none() && root.top_features.is_empty());
    assert_eq!(root.label_distribution.unwrap()["A"], 0.4);
    for child in &tree.root.children {
        let s = summarize_split(tree, d, &child.id, &cfg).unwrap();
        assert_eq!(s.parent_id.as_deref(), Some("1"));
        let top = &s.top_features[0];
        assert_eq!(top.feature, "x0");
        assert!(top.effect > 0.9);
        let is_a = child.group.rows().iter().filter(|&&r| r < 200).count() * 2 > child.group.len();
        let expected = if is_a { Direction::Lower } else { Direction::Higher };
        assert_eq!(top.direction, expected);
        assert_eq!(s.phrases[0], format!("{} x0 than peers", if is_a { "lower" } else { "higher" }));
        assert!(s.top_features.iter().all(|f| f.feature != TwoBlobs::LABEL));
    }
    assert_eq!(summarize_tree(tree, d, &cfg).unwrap().len(), 3);
    assert!(matches!(summarize_split(tree, d, "1.9", &cfg), Err(ThdError::UnknownNode(_))));
}

#[test]
fn explanations_follow_the_path_and_never_name_the_label() {
    let (d, tree) = blob();
    let cfg = StatsConfig::default();
    for r in (0..d.rows()).step_by(37) {
        let e = explain_individual(tree, d, r, "A", None, &cfg).unwrap();
        let path = trace_point_path(tree, r).unwrap();
        let ids: Vec<&str> = e.path.iter().map(|h| h.node_id.as_str()).collect();
        assert_eq!(ids, path.nodes.iter().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(e.end, path.end);
        assert!(e.global_fraction == 0.4);
        let expected = if r < 200 { Verdict::DenyLeaning } else { Verdict::GrantLeaning };
        if path.end == PathEnd::Leaf {
            assert_eq!(e.verdict, expected, "row {r}");
            assert!(e.text().contains("x0"), "{}", e.text());
        }
        assert!(e.path.iter().all(|h| h.reasons.len() <= 3));
        assert!(e.sentences.iter().all(|s| !s.contains(TwoBlobs::LABEL)));
    }
    assert!(explain_individual(tree, d, 0, "C", None, &cfg).is_err());
    assert!(explain_individual(tree, d, 999, "A", None, &cfg).is_err());
    let forced = explain_individual(tree, d, 300, "A", Some(1.0), &cfg).unwrap();
    assert_eq!(forced.verdict, Verdict::GrantLeaning);
}

#[test]
fn root_only_tree_gives_a_neutral_verdict() {
    let (d, tree) = single_blob();
    let e = explain_individual(tree, d, 7, "A", None, &StatsConfig::default()).unwrap();
    assert_eq!(e.path.len(), 1);
    assert_eq!(e.verdict, Verdict::Neutral);
    assert_eq!(e.sentences.len(), 1);
}

#[test]
fn tree_json_round_trips() {
    let (d, tree) = blob();
    let json = export_tree(tree, d, TreeFormat::Json).unwrap();
    let back = import_tree_json(&json).unwrap();
    assert_eq!(&back, tree);
    assert_eq!(export_tree(&back, d, TreeFormat::Json).unwrap(), json);
    // The row index of each network is rebuilt on load.
    assert_eq!(back.root.network.nodes_of(0), tree.root.network.nodes_of(0));
    back.check_dataset(d).unwrap();
}

fn count(text: &str, pat: &str) -> usize {
    text.lines().filter(|l| l.contains(pat)).count()
}

#[test]
fn tree_dot_statements() {
    let (d, tree) = blob();
    let dot = export_tree(tree, d, TreeFormat::Dot).unwrap();
    assert_eq!(count(&dot, "[label="), 3);
    assert_eq!(count(&dot, " -> "), 2);
    assert!(dot.contains("\"1\" [label=\"1\\nn=500\\nA 40%, B 60%\"]"), "{dot}");

    let (d1, single) = single_blob();
    let dot = export_tree(single, d1, TreeFormat::Dot).unwrap();
    assert_eq!(count(&dot, "[label="), 1);
    assert_eq!(count(&dot, " -> "), 0);
    assert!("yaml".parse::<TreeFormat>().is_err());
}

/// Node ids, sizes, edge endpoints, and color values read back from GraphML.
fn parse_graphml(text: &str) -> (Vec<(usize, usize, Option<f64>)>, Vec<(usize, usize)>) {
    let field = |line: &str, open: &str, close: &str| -> Option<String> {
        let start = line.find(open)? + open.len();
        let end = start + line[start..].find(close)?;
        Some(line[start..end].to_string())
    };
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.starts_with("<node ") {
            let id = field(line, "id=\"n", "\"").unwrap().parse().unwrap();
            let size = field(line, "<data key=\"size\">", "<").unwrap().parse().unwrap();
            let color = field(line, "<data key=\"color\">", "<").map(|c| c.parse().unwrap());
            nodes.push((id, size, color));
        } else if line.starts_with("<edge ") {
            let s = field(line, "source=\"n", "\"").unwrap().parse().unwrap();
            let t = field(line, "target=\"n", "\"").unwrap().parse().unwrap();
            edges.push((s, t));
        }
    }
    (nodes, edges)
}

#[test]
fn network_exports_preserve_counts_and_colors() {
    let (d, tree) = blob();
    let net = &tree.root.network;
    let coloring = Coloring { feature: "x0".into(), level: None };
    let colors = node_coloring(d, net, "x0", None).unwrap();

    let gml = export_network(net, d, NetworkFormat::Graphml, Some(&coloring)).unwrap();
    let (nodes, edges) = parse_graphml(&gml);
    assert_eq!(nodes.len(), net.nodes.len());
    assert_eq!(edges.len(), net.edges.len());
    for (id, size, color) in nodes {
        assert_eq!(size, net.nodes[id].rows.len());
        let expected = colors[&id].unwrap();
        assert!((color.unwrap() - expected).abs() <= 1e-5 * expected.abs().max(1.0));
    }
    let got: BTreeSet<(usize, usize)> = edges.into_iter().collect();
    let want: BTreeSet<(usize, usize)> = net.edges.iter().map(|e| (e.source, e.target)).collect();
    assert_eq!(got, want);

    let dot = export_network(net, d, NetworkFormat::Dot, None).unwrap();
    assert_eq!(count(&dot, "[label="), net.nodes.len());
    assert_eq!(count(&dot, " -- "), net.edges.len());

    let json: serde_json::Value =
        serde_json::from_str(&export_network(net, d, NetworkFormat::Json, Some(&coloring)).unwrap()).unwrap();
    assert_eq!(json["nodes"].as_array().unwrap().len(), net.nodes.len());
    assert_eq!(json["edges"].as_array().unwrap().len(), net.edges.len());
    assert!(json["nodes"][0]["means"]["x0"].is_f64());
    assert!(json["nodes"][0]["means"].get(TwoBlobs::LABEL).is_none());

    // The blob split shows up as separate components after the round trip.
    let large = connected_components(net).iter().filter(|c| c.rows.len() >= 20).count();
    assert_eq!(large, 2);
    assert!(export_network(net, d, NetworkFormat::Json, Some(&Coloring { feature: "nope".into(), level: None })).is_err());
    assert!("png".parse::<NetworkFormat>().is_err());
}

#[test]
fn label_coloring_is_the_level_fraction() {
    let (d, tree) = blob();
    let net = &tree.root.network;
    let colors = node_coloring(d, net, TwoBlobs::LABEL, Some("A")).unwrap();
    for node in &net.nodes {
        let g = Group::new(d.rows(), node.rows.iter().copied()).unwrap();
        let want = label_distribution(d, &g).unwrap().get("A").copied().unwrap_or(0.0);
        assert_eq!(colors[&node.node_id], Some(want));
    }
    assert!(node_coloring(d, net, TwoBlobs::LABEL, None).is_err());
    assert!(node_coloring(d, net, "x0", Some("A")).is_err());
}

#[test]
fn constant_feature_colors_every_node_alike() {
    let text = "a,b,c\n".to_string() + &(0..40).map(|i| format!("{},{},7\n", i % 5, (i * 7) % 11)).collect::<String>();
    let d = thd_core::data::ingest_reader(text.as_bytes(), &Schema::default()).unwrap();
    let net = thd_core::mapper::mapper(
        &d,
        &Group::all(&d),
        Default::default(),
        &thd_core::geometry::Lens::mds(),
        thd_core::mapper::CoverParams::new(3, 2.0).unwrap(),
        10,
    )
    .unwrap();
    let out = export_network(&net, &d, NetworkFormat::Graphml, Some(&Coloring { feature: "c".into(), level: None }))
        .unwrap();
    let (nodes, _) = parse_graphml(&out);
    assert!(nodes.len() > 1);
    assert!(nodes.iter().all(|n| n.2 == Some(7.0)));
}

#[test]
fn one_node_network_in_every_format() {
    let text = "a,b\n".to_string() + &(0..10).map(|i| format!("{i},{}\n", i * 2)).collect::<String>();
    let d = thd_core::data::ingest_reader(text.as_bytes(), &Schema::default()).unwrap();
    let net = thd_core::mapper::mapper(
        &d,
        &Group::all(&d),
        Default::default(),
        &thd_core::geometry::Lens::mds(),
        thd_core::mapper::CoverParams::new(1, 1.0).unwrap(),
        10,
    )
    .unwrap();
    assert_eq!(net.nodes.len(), 1);
    let (nodes, edges) = parse_graphml(&export_network(&net, &d, NetworkFormat::Graphml, None).unwrap());
    assert_eq!((nodes.len(), edges.len()), (1, 0));
    let dot = export_network(&net, &d, NetworkFormat::Dot, None).unwrap();
    assert_eq!((count(&dot, "[label="), count(&dot, " -- ")), (1, 0));
    let json: serde_json::Value =
        serde_json::from_str(&export_network(&net, &d, NetworkFormat::Json, None).unwrap()).unwrap();
    assert_eq!((json["nodes"].as_array().unwrap().len(), json["edges"].as_array().unwrap().len()), (1, 0));
}
