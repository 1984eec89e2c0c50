use super::*;
use crate::eval::hl_post_rate;
use crate::text::UserCorpus;

fn small(seed: u64) -> SynthConfig {
    SynthConfig {
        n: 200,
        posts_min: 10,
        posts_max: 12,
        seed,
        ..SynthConfig::default()
    }
}

#[test]
fn disconnected_cliques_without_cross_edges() {
    let cfg = SynthConfig {
        p_in: 1.0,
        p_out: 0.0,
        reciprocity: 0.0,
        degree_sigma_hateful: 0.0,
        degree_sigma_non_hateful: 0.0,
        ..small(1)
    };
    let d = generate(&cfg).unwrap();
    let cross = d.graph.edges().filter(|&(u, v, _)| d.labels[u] != d.labels[v]).count();
    assert_eq!(cross, 0);
    let h = cfg.num_hateful();
    let expected = h * (h - 1) + (200 - h) * (199 - h);
    assert_eq!(d.graph.num_edges(), expected);
}

#[test]
fn extreme_hl_rates() {
    let cfg = SynthConfig { hl_rate_hateful: 1.0, hl_rate_non_hateful: 0.0, ..small(2) };
    let d = generate(&cfg).unwrap();
    let corpus = UserCorpus::from_posts(d.posts.clone());
    for (i, u) in corpus.users().iter().enumerate() {
        let rate = hl_post_rate(&u.posts, &d.lexicon).unwrap();
        let want = if d.labels[i] == HATEFUL { 100.0 } else { 0.0 };
        assert_eq!(rate, want, "user {}", u.user);
    }
}

#[test]
fn default_fixture_matches_configured_statistics() {
    let cfg = SynthConfig::default();
    let d = generate(&cfg).unwrap();
    // Base SBM edges are the generated ones minus added reverses, so measure
    // density on the symmetric closure against its expected value.
    let n_h = cfg.num_hateful() as f64;
    let n_n = cfg.n as f64 - n_h;
    let intra: usize = d.graph.edges().filter(|&(u, v, _)| d.labels[u] == d.labels[v]).count();
    let pairs = n_h * (n_h - 1.0) + n_n * (n_n - 1.0);
    let rho = cfg.reciprocity / (2.0 - cfg.reciprocity);
    let p = cfg.p_in;
    // P(edge u->v present) = p + (1 - p) p rho.
    let expected = p + (1.0 - p) * p * rho;
    let density = intra as f64 / pairs;
    assert!((density / expected - 1.0).abs() < 0.1, "intra density {density} vs {expected}");
    let base_density = density / (1.0 + rho * (1.0 - p));
    assert!((base_density / p - 1.0).abs() < 0.1, "base density {base_density} vs p_in {p}");

    let corpus = UserCorpus::from_posts(d.posts.clone());
    for class in [HATEFUL, NON_HATEFUL] {
        let (mut hits, mut total) = (0usize, 0usize);
        for (i, u) in corpus.users().iter().enumerate() {
            if d.labels[i] == class {
                hits += u.posts.iter().filter(|p| d.lexicon.hits(&p.text)).count();
                total += u.posts.len();
            }
        }
        let want = if class == HATEFUL { cfg.hl_rate_hateful } else { cfg.hl_rate_non_hateful };
        let got = hits as f64 / total as f64;
        assert!((got - want).abs() < 0.01, "class {class}: HL rate {got} vs {want}");
    }
    assert!(corpus.users().iter().all(|u| u.posts.len() >= 10));
}

#[test]
fn reciprocity_is_close_to_configured() {
    for r in [0.0, 0.3, 0.7] {
        let cfg = SynthConfig {
            n: 1000,
            reciprocity: r,
            degree_sigma_hateful: 0.0,
            degree_sigma_non_hateful: 0.0,
            posts_min: 1,
            posts_max: 1,
            ..SynthConfig::default()
        };
        let d = generate(&cfg).unwrap();
        let mutual = d.graph.edges().filter(|&(u, v, _)| d.graph.has_edge(v, u)).count();
        let got = mutual as f64 / d.graph.num_edges() as f64;
        assert!((got - r).abs() < 0.05, "reciprocity {got} vs {r}");
    }
}

#[test]
fn same_seed_gives_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let files_a = generate(&small(9)).unwrap().write(a.path()).unwrap();
    let files_b = generate(&small(9)).unwrap().write(b.path()).unwrap();
    for (fa, fb) in files_a.iter().zip(&files_b) {
        assert_eq!(std::fs::read(fa).unwrap(), std::fs::read(fb).unwrap(), "{}", fa.display());
    }
    let other = generate(&small(10)).unwrap();
    assert_ne!(other.posts, generate(&small(9)).unwrap().posts);
}

#[test]
fn written_files_pass_ingestion() {
    let dir = tempfile::tempdir().unwrap();
    let d = generate(&small(4)).unwrap();
    d.write(dir.path()).unwrap();
    let names: Vec<String> = (0..200).map(node_name).collect();
    let g = crate::graph::io::read_graph(&dir.path().join(EDGES_FILE), &names).unwrap();
    assert_eq!(g.num_edges(), d.graph.num_edges());
    let corpus = crate::text::io::read_corpus(&dir.path().join(POSTS_FILE)).unwrap();
    assert_eq!(corpus.num_posts(), d.posts.len());
    let labels = crate::labels::read_labels(&dir.path().join(LABELS_FILE)).unwrap();
    assert_eq!(crate::labels::resolve(&labels, &g).unwrap(), d.labeled());
    let lex = Lexicon::load(&dir.path().join(LEXICON_FILE)).unwrap();
    assert_eq!(lex, d.lexicon);
    let mut times = read_edge_times(&dir.path().join(EDGE_TIMES_FILE), &g).unwrap();
    let mut want = d.edge_times.clone();
    times.sort_by_key(|e| (e.src, e.dst));
    want.sort_by_key(|e| (e.src, e.dst));
    assert_eq!(times, want);
    let cfg: SynthConfig =
        serde_json::from_slice(&std::fs::read(dir.path().join(CONFIG_FILE)).unwrap()).unwrap();
    assert_eq!(cfg, d.config);
    let series = crate::posthoc::build_snapshots(&corpus, g.num_nodes(), &times, &d.months).unwrap();
    assert_eq!(series.eligible(d.months.len() - 1).len(), 200);
}

#[test]
fn infeasible_configs_are_rejected() {
    assert!(generate(&SynthConfig { hateful_fraction: 0.0, ..small(0) }).is_err());
    assert!(generate(&SynthConfig { p_in: 1.5, ..small(0) }).is_err());
    assert!(generate(&SynthConfig { posts_max: 5, ..small(0) }).is_err());
    assert!(generate(&SynthConfig { lexicon: vec![], ..small(0) }).is_err());
    assert!(generate(&SynthConfig { hateful_fraction: 0.0, loud_fraction: 0.5, hl_rate_hateful: 0.0, ..small(0) }).is_err());
    let quiet = SynthConfig { hateful_fraction: 0.0, loud_fraction: 0.0, hl_rate_hateful: 0.0, ..small(0) };
    assert!(generate(&quiet).is_ok());
}

#[test]
fn calibration_restores_capped_density() {
    let a = [0.1, 0.5, 1.0, 4.0, 30.0];
    let b = [0.2, 1.0, 50.0];
    let p = 0.05;
    let s = calibrate_scale(p, &a, &b);
    let mean = a.iter().flat_map(|x| b.iter().map(move |y| (s * p * x * y).min(1.0))).sum::<f64>() / 15.0;
    assert!((mean - p).abs() < 1e-12, "{mean}");
    let s = calibrate_scale(p, &[1.0; 4], &[1.0; 3]);
    assert!((s - 1.0).abs() < 1e-12, "{s}");
    assert_eq!(calibrate_scale(0.0, &a, &b), 1.0);
}

#[test]
fn skewed_class_has_dispersed_degrees() {
    let d = generate(&SynthConfig { n: 600, posts_min: 10, posts_max: 10, ..SynthConfig::default() }).unwrap();
    let indeg = d.graph.in_degrees();
    let dispersion = |class: u8| {
        let xs: Vec<f64> = (0..600)
            .filter(|&v| d.labels[v] == class)
            .map(|v| (d.graph.out_degree(v) + indeg[v]) as f64)
            .collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
        var.sqrt() / mean
    };
    assert!(dispersion(NON_HATEFUL) > 2.0 * dispersion(HATEFUL));
}
