use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use clap::Args;

use crate::error::{Categorize, Category, CliResult};
use crate::manifest::RunManifest;
use crate::simulate::CONFIG_SNAPSHOT;
use traitsim::grounding::{
    assign_users, build_engagement_graph, extract_ego_network, infer_identity, init_from_empirical, parse_follows,
    parse_records, PlatformKind, DAY_SECONDS, PLACEHOLDER_IDENTITY,
};
use traitsim::io::{assignments_csv, edges_csv, read_file, to_jsonl, write_file, AGENTS_FILE};
use traitsim::model::{ArchetypeTable, Topic};
use traitsim::reasoning::{EndpointConfig, LlmClient};
use traitsim::SimulationConfig;

#[derive(Debug, Args)]
pub struct GroundArgs {
    /// Platform activity, one JSON record per line.
    #[arg(long)]
    pub records: PathBuf,
    /// Follow relations as `follower,followee` CSV.
    #[arg(long)]
    pub follows: PathBuf,
    /// Maximum community size excluding the ego.
    #[arg(long, default_value_t = 1000)]
    pub cap: usize,
    /// Width of one activity slot in seconds.
    #[arg(long, default_value_t = DAY_SECONDS)]
    pub slot_width: i64,
    /// Topic given to every grounded agent.
    #[arg(long, default_value = "General")]
    pub topic: Topic,
    /// Use the placeholder identity for everyone and never call a backend.
    #[arg(long)]
    pub no_identity_inference: bool,
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Bundle directory.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: GroundArgs) -> CliResult<()> {
    let records_text = read_file(&args.records).category(Category::Input)?;
    let follows_text = read_file(&args.follows).category(Category::Input)?;
    let records = parse_records(&records_text)
        .map_err(|e| anyhow::anyhow!("{}: {e}", args.records.display()))
        .category(Category::Input)?;
    let follows = parse_follows(&follows_text)
        .map_err(|e| anyhow::anyhow!("{}: {e}", args.follows.display()))
        .category(Category::Input)?;

    let graph = build_engagement_graph(&records).category(Category::Input)?;
    let ego = extract_ego_network(&graph, args.cap).category(Category::Input)?;
    let users: BTreeSet<String> = ego.graph.nodes.iter().map(|n| n.0.clone()).collect();
    log::info!("ego {} with {} users of {}", ego.ego, users.len(), graph.nodes.len());
    let assigned = assign_users(&records, &users, args.slot_width, &ArchetypeTable::default()).category(Category::Input)?;

    let identities: BTreeMap<String, String> = if args.no_identity_inference {
        users.iter().map(|u| (u.clone(), PLACEHOLDER_IDENTITY.to_string())).collect()
    } else {
        let mut endpoint = EndpointConfig::default().with_env();
        if let Some(v) = &args.endpoint {
            endpoint.base_url = v.clone();
        }
        if let Some(v) = &args.model {
            endpoint.model = v.clone();
        }
        if let Some(v) = args.temperature {
            endpoint.temperature = v;
        }
        let client = LlmClient::new(endpoint).category(Category::Backend)?;
        let mut posts: BTreeMap<&str, Vec<(i64, &str)>> = BTreeMap::new();
        for r in &records {
            if let (PlatformKind::Post, Some(t)) = (r.kind, &r.text) {
                posts.entry(r.user.as_str()).or_default().push((r.timestamp, t.as_str()));
            }
        }
        let mut out = BTreeMap::new();
        for u in &users {
            let mut mine = posts.remove(u.as_str()).unwrap_or_default();
            mine.sort();
            let texts: Vec<&str> = mine.iter().map(|p| p.1).collect();
            let identity = infer_identity(&texts, &client)
                .map_err(|e| anyhow::anyhow!("identity for {u}: {e}"))
                .category(Category::Backend)?;
            out.insert(u.clone(), identity);
        }
        out
    };

    let config = SimulationConfig::default();
    let world = init_from_empirical(&assigned, &identities, &follows, &args.topic, &config).category(Category::Input)?;

    let out = &args.out;
    std::fs::create_dir_all(out).map_err(|e| anyhow::anyhow!("{}: {e}", out.display())).category(Category::Runtime)?;
    let files = [
        (AGENTS_FILE, to_jsonl(&world.agents)),
        ("assignments.csv", assignments_csv(&assigned)),
        ("ego_edges.csv", edges_csv(&ego.graph)),
        (CONFIG_SNAPSHOT, config.to_toml()),
    ];
    let mut manifest = RunManifest::new(
        "ground",
        serde_json::json!({
            "cap": args.cap,
            "slot_width": args.slot_width,
            "topic": args.topic.as_str(),
            "identity_inference": !args.no_identity_inference,
            "ego": ego.ego.as_str(),
        }),
    );
    manifest.input("records", records_text.as_bytes());
    manifest.input("follows", follows_text.as_bytes());
    for (name, body) in &files {
        write_file(&out.join(name), body).category(Category::Runtime)?;
        manifest.outputs.push(name.to_string());
    }
    manifest.write(out)?;

    let mut census: BTreeMap<&str, usize> = BTreeMap::new();
    for a in &assigned {
        *census.entry(a.assigned.code()).or_default() += 1;
    }
    let parts: Vec<String> = census.iter().map(|(k, v)| format!("{k}:{v}")).collect();
    println!("ego {}: {} users ({}) -> {}", ego.ego, world.agents.len(), parts.join(" "), out.display());
    Ok(())
}
