use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};

use crate::error::{fail, from_io, Categorize, Category, CliResult};
use crate::manifest::{check_schema, RunManifest};
use traitsim::analytics::{
    chain_length_table, cluster_agents, content_mix, mann_whitney_u, order_dynamics, per_topic_chain_stats,
    probability_vectors, trace_chains, Chain, Clustering,
};
use traitsim::io::{
    centrality_csv, centroids_csv, chain_table_csv, chains_csv, clusters_csv, content_mix_csv, curve_csv, edges_csv,
    group_summary_csv, order_dynamics_csv, parse_agents, parse_content, parse_log, read_file, topic_stats_csv,
    vectors_csv, write_file, AGENTS_FILE, CONTENT_FILE, LOG_FILE,
};
use traitsim::model::{Characterization, Topic};
use traitsim::networks::{
    build_interaction_network, build_resharing_network, centrality_by_trait, degree_centrality, Direction,
    WeightedDigraph,
};
use traitsim::{ActionRecord, AgentId, AgentProfile, ContentStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    /// Everything below.
    All,
    /// Behavioral vectors and clustering.
    Rq1,
    /// Chains, engagement order and content mix.
    Rq2,
    /// Re-sharing and interaction networks.
    Rq3,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Artifact directory written by `simulate` (or any directory holding
    /// log.jsonl and content.jsonl).
    pub run: PathBuf,
    #[arg(long, value_enum, default_value_t = Which::All)]
    pub which: Which,
    /// Second run to compare chain lengths against.
    #[arg(long)]
    pub compare: Option<PathBuf>,
    /// Where to write the CSVs; defaults to `<run>/analysis`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub k_min: usize,
    #[arg(long, default_value_t = 10)]
    pub k_max: usize,
    /// Seed for k-means initialisation.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub struct Loaded {
    pub dir: PathBuf,
    pub profiles: Vec<AgentProfile>,
    pub log: Vec<ActionRecord>,
    pub content: ContentStore,
    pub digests: Vec<(String, Vec<u8>)>,
}

pub fn load(dir: &Path) -> CliResult<Loaded> {
    check_schema(dir)?;
    let log_text = read_file(&dir.join(LOG_FILE)).category(Category::Input)?;
    let content_text = read_file(&dir.join(CONTENT_FILE)).category(Category::Input)?;
    let log = parse_log(&log_text).map_err(from_io)?;
    let content = parse_content(&content_text).map_err(from_io)?;
    let agents_path = dir.join(AGENTS_FILE);
    let mut digests = vec![(LOG_FILE.to_string(), log_text.into_bytes()), (CONTENT_FILE.to_string(), content_text.into_bytes())];
    let profiles = if agents_path.exists() {
        let text = read_file(&agents_path).category(Category::Input)?;
        let p = parse_agents(&text).map_err(from_io)?;
        digests.push((AGENTS_FILE.to_string(), text.into_bytes()));
        p
    } else {
        // External logs may come without profiles; agents are then unlabelled.
        let ids: BTreeSet<&AgentId> = log.iter().map(|r| &r.agent).chain(content.iter().map(|c| &c.author)).collect();
        ids.into_iter()
            .map(|id| AgentProfile {
                id: id.clone(),
                identity_text: String::new(),
                characterization: Characterization::None,
                topic: Topic::Other("unknown".into()),
                following: BTreeSet::new(),
            })
            .collect()
    };
    let known: BTreeSet<&AgentId> = profiles.iter().map(|p| &p.id).collect();
    if let Some(r) = log.iter().find(|r| !known.contains(&r.agent)) {
        return fail(Category::Schema, format!("{}: log names unknown agent {}", dir.display(), r.agent));
    }
    if let Some(r) = log.iter().find(|r| r.action.content_target().is_some_and(|t| content.get(t).is_none())) {
        return fail(Category::Schema, format!("{}: log targets content missing from {CONTENT_FILE}: {:?}", dir.display(), r.action));
    }
    Ok(Loaded { dir: dir.to_path_buf(), profiles, log, content, digests })
}

fn empty_clustering() -> Clustering {
    Clustering { k: 0, centroids: Vec::new(), assignments: Vec::new(), inertia: 0.0, silhouette: 0.0, curve: Vec::new() }
}

pub struct Rq1 {
    pub ids: Vec<AgentId>,
    pub clustering: Option<Clustering>,
}

fn rq1(run: &Loaded, k_min: usize, k_max: usize, seed: u64, files: &mut Vec<(String, String)>) -> CliResult<Rq1> {
    let vectors = probability_vectors(&run.log);
    let ids: Vec<AgentId> = vectors.keys().cloned().collect();
    let points: Vec<[f64; 4]> = vectors.values().map(|v| v.as_array()).collect();
    // Silhouette needs at least one cluster with two members.
    let k_max = k_max.min(points.len().saturating_sub(1));
    let clustering = if k_max >= k_min.max(2) {
        Some(cluster_agents(&points, k_min, k_max, seed).category(Category::Runtime)?)
    } else {
        log::warn!("{} agent vectors: too few to cluster", points.len());
        None
    };
    let c = clustering.clone().unwrap_or_else(empty_clustering);
    files.push(("vectors.csv".into(), vectors_csv(&vectors, &run.profiles)));
    files.push(("clusters.csv".into(), clusters_csv(&ids, &c, &run.profiles)));
    files.push(("centroids.csv".into(), centroids_csv(&c)));
    files.push(("cluster_curve.csv".into(), curve_csv(&c)));
    Ok(Rq1 { ids, clustering })
}

fn chains_of(run: &Loaded) -> CliResult<Vec<Chain>> {
    trace_chains(&run.content).map_err(|e| anyhow::anyhow!("{}: {e}", run.dir.display())).category(Category::Schema)
}

fn rq2(run: &Loaded, files: &mut Vec<(String, String)>) -> CliResult<Vec<Chain>> {
    let chains = chains_of(run)?;
    files.push(("chains.csv".into(), chains_csv(&chains, &run.profiles)));
    files.push(("chain_table.csv".into(), chain_table_csv(&chain_length_table(&chains))));
    files.push(("topic_chains.csv".into(), topic_stats_csv(&per_topic_chain_stats(&chains))));
    files.push(("order_dynamics.csv".into(), order_dynamics_csv(&order_dynamics(&run.log))));
    files.push(("content_mix.csv".into(), content_mix_csv(&content_mix(&run.log))));
    Ok(chains)
}

pub struct Networks {
    pub reshare: WeightedDigraph,
    pub interact: WeightedDigraph,
    pub summaries: Vec<(String, String, String, traitsim::networks::GroupSummary)>,
}

fn centralities(g: &WeightedDigraph, n: usize) -> (BTreeMap<AgentId, f64>, BTreeMap<AgentId, f64>) {
    // A population of one has no defined centrality; report nothing.
    let c = |d| degree_centrality(g, d, n).unwrap_or_default();
    (c(Direction::In), c(Direction::Out))
}

fn rq3(run: &Loaded, files: &mut Vec<(String, String)>) -> CliResult<Networks> {
    let ids = || run.profiles.iter().map(|p| p.id.clone());
    let reshare = build_resharing_network(&run.log, &run.content, ids()).category(Category::Schema)?;
    let interact = build_interaction_network(&run.log, &run.content, ids()).category(Category::Schema)?;
    let n = run.profiles.len();
    let mut summaries = Vec::new();
    for (name, g) in [("reshare", &reshare), ("interaction", &interact)] {
        let (inn, out) = centralities(g, n);
        files.push((format!("{name}_edges.csv"), edges_csv(g)));
        files.push((format!("{name}_centrality.csv"), centrality_csv(&inn, &out, &run.profiles)));
        for (dir, c) in [("in", &inn), ("out", &out)] {
            for (label, s) in centrality_by_trait(c, &run.profiles).category(Category::Runtime)? {
                summaries.push((name.to_string(), dir.to_string(), label, s));
            }
        }
    }
    files.push(("centrality_by_trait.csv".into(), group_summary_csv(&summaries)));
    Ok(Networks { reshare, interact, summaries })
}

fn chain_lengths(chains: &[Chain]) -> Vec<f64> {
    chains.iter().map(|c| c.length() as f64).collect()
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{x:.3}"))
}

/// Everything the text summary needs.
pub struct Analysis {
    pub rq1: Option<Rq1>,
    pub chains: Option<Vec<Chain>>,
    pub networks: Option<Networks>,
    /// Other run, this run's chains, the other run's chains.
    pub comparison: Option<(PathBuf, Vec<Chain>, Vec<Chain>)>,
    pub files: Vec<(String, String)>,
}

pub fn analyze(run: &Loaded, which: Which, compare: Option<&Loaded>, k: (usize, usize), seed: u64) -> CliResult<Analysis> {
    let mut files = Vec::new();
    let wants = |w| which == Which::All || which == w;
    let rq1 = if wants(Which::Rq1) { Some(rq1(run, k.0, k.1, seed, &mut files)?) } else { None };
    let chains = if wants(Which::Rq2) { Some(rq2(run, &mut files)?) } else { None };
    let networks = if wants(Which::Rq3) { Some(rq3(run, &mut files)?) } else { None };
    let comparison = match compare {
        Some(other) => {
            let b = chains_of(other)?;
            let a = match &chains {
                Some(c) => c.clone(),
                None => chains_of(run)?,
            };
            files.push(("comparison.csv".into(), comparison_csv(&a, &b)));
            Some((other.dir.clone(), a, b))
        }
        None => None,
    };
    Ok(Analysis { rq1, chains, networks, comparison, files })
}

fn comparison_csv(a: &[Chain], b: &[Chain]) -> String {
    let (la, lb) = (chain_lengths(a), chain_lengths(b));
    let mut s = String::from("metric,n_a,n_b,mean_a,mean_b,u,p,exact\n");
    let (u, p, exact) = match mann_whitney_u(&la, &lb) {
        Ok(m) => (format!("{}", m.u), format!("{:.6}", m.p), m.exact.to_string()),
        Err(_) => (String::new(), String::new(), String::new()),
    };
    let m = |v: &[f64]| mean(v).map(|x| format!("{x:.6}")).unwrap_or_default();
    let _ = writeln!(s, "chain_length,{},{},{},{},{u},{p},{exact}", la.len(), lb.len(), m(&la), m(&lb));
    s
}

pub fn summary(run: &Loaded, a: &Analysis) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "run: {}", run.dir.display());
    let _ = writeln!(s, "agents: {}  actions: {}  content items: {}", run.profiles.len(), run.log.len(), run.content.len());
    if let Some(r) = &a.rq1 {
        match &r.clustering {
            Some(c) => {
                let _ = writeln!(s, "\nclusters: k={} silhouette={:.3} inertia={:.4} sizes={:?}", c.k, c.silhouette, c.inertia, c.sizes());
                let labels: BTreeMap<&AgentId, String> = run.profiles.iter().map(|p| (&p.id, p.characterization.label())).collect();
                for k in 0..c.k {
                    let mut comp: BTreeMap<&str, usize> = BTreeMap::new();
                    for (id, x) in r.ids.iter().zip(&c.assignments) {
                        if *x == k {
                            *comp.entry(labels.get(id).map_or("?", String::as_str)).or_default() += 1;
                        }
                    }
                    let parts: Vec<String> = comp.iter().map(|(l, n)| format!("{l}:{n}")).collect();
                    let _ = writeln!(s, "  cluster {k}: {}", parts.join(" "));
                }
            }
            None => {
                let _ = writeln!(s, "\nclusters: too few agent vectors to cluster");
            }
        }
    }
    if let Some(chains) = &a.chains {
        let t = chain_length_table(chains);
        let _ = writeln!(s, "\nchains: {}  mean length: {}  max length: {}", t.total, fmt_opt(t.mean), t.max.map_or("n/a".into(), |m| m.to_string()));
        for r in &t.rows {
            let _ = writeln!(s, "  length {}: {} ({:.1}%)", r.length, r.count, r.percent);
        }
        let mix = content_mix(&run.log);
        if let Some(last) = mix.last() {
            let _ = writeln!(s, "final content mix: {} original / {} re-shared", fmt_opt(last.pct_original), fmt_opt(last.pct_reshared));
        }
    }
    if let Some(n) = &a.networks {
        let _ = writeln!(s, "\nre-share edges: {} (weight {})  interaction edges: {} (weight {})",
            n.reshare.edges.len(), n.reshare.total_weight(), n.interact.edges.len(), n.interact.total_weight());
        let _ = writeln!(s, "median out-degree centrality by group:");
        for (net, dir, label, g) in &n.summaries {
            if dir == "out" {
                let _ = writeln!(s, "  {net:<12} {label:<6} {:.4} (n={})", g.median, g.n);
            }
        }
    }
    if let Some((other, mine, b)) = &a.comparison {
        let own = chain_lengths(mine);
        let lb = chain_lengths(b);
        let _ = writeln!(s, "\ncomparison with {}:", other.display());
        let _ = writeln!(s, "  mean chain length {} vs {}", fmt_opt(mean(&own)), fmt_opt(mean(&lb)));
        match mann_whitney_u(&own, &lb) {
            Ok(m) => {
                let _ = writeln!(s, "  Mann-Whitney U={} p={:.4} ({})", m.u, m.p, if m.exact { "exact" } else { "normal approximation" });
            }
            Err(e) => {
                let _ = writeln!(s, "  Mann-Whitney: {e}");
            }
        }
    }
    s
}

pub fn run(args: AnalyzeArgs) -> CliResult<()> {
    let data = load(&args.run)?;
    let other = args.compare.as_deref().map(load).transpose()?;
    let which = args.which;
    let analysis = analyze(&data, which, other.as_ref(), (args.k_min, args.k_max), args.seed)?;
    let text = summary(&data, &analysis);
    let out = args.out.clone().unwrap_or_else(|| args.run.join("analysis"));
    std::fs::create_dir_all(&out).map_err(|e| anyhow::anyhow!("{}: {e}", out.display())).category(Category::Runtime)?;
    let mut manifest = RunManifest::new(
        "analyze",
        serde_json::json!({
            "which": format!("{which:?}").to_lowercase(),
            "k_min": args.k_min,
            "k_max": args.k_max,
            "compare": args.compare.as_ref().map(|p| p.display().to_string()),
        }),
    );
    manifest.master_seed = Some(args.seed);
    for (name, bytes) in &data.digests {
        manifest.input(name, bytes);
    }
    if let Some(o) = &other {
        for (name, bytes) in &o.digests {
            manifest.input(&format!("compare/{name}"), bytes);
        }
    }
    for (name, body) in analysis.files.iter().chain(std::iter::once(&("summary.txt".to_string(), text.clone()))) {
        write_file(&out.join(name), body).category(Category::Runtime)?;
        manifest.outputs.push(name.clone());
    }
    manifest.write(&out)?;
    print!("{text}");
    Ok(())
}
