use std::path::{Path, PathBuf};

use clap::Args;

use crate::error::{fail, from_engine, from_io, Categorize, Category, CliResult};
use crate::manifest::{check_schema, RunManifest};
use crate::BackendArg;
use traitsim::engine::{init_population, synthetic_personas, BackendKind, Configuration, Persona};
use traitsim::io::{
    load_checkpoint, parse_agents, parse_personas, read_file, save_checkpoint, to_jsonl, write_file, AGENTS_FILE,
    CONTENT_FILE, LOG_FILE, MEMORY_FILE, STATE_FILE,
};
use traitsim::model::{AgentProfile, ArchetypeTable};
use traitsim::reasoning::{LlmClient, StubPolicy};
use traitsim::{Engine, Policy, SimulationConfig, World};

pub const CONFIG_SNAPSHOT: &str = "config.toml";
pub const PERSONAS_COPY: &str = "personas.jsonl";
pub const POPULATION_COPY: &str = "population.jsonl";
pub const ARCHETYPES_COPY: &str = "archetypes.tsv";

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Persona file (JSON lines); overrides `personas` in the config.
    #[arg(long)]
    pub personas: Option<PathBuf>,
    /// Generate this many placeholder personas instead of reading a file.
    #[arg(long, conflicts_with_all = ["personas", "agents"])]
    pub synthetic: Option<usize>,
    /// Ready-made agent profiles, e.g. from `ground`.
    #[arg(long, conflicts_with = "personas")]
    pub agents: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub backend: Option<BackendArg>,
    /// Base URL of an OpenAI-compatible endpoint.
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub iterations: Option<u32>,
    #[arg(long)]
    pub feed_size: Option<usize>,
    /// FullModel, IdentityOnly, RandomRecommendation or PsychometricTraits.
    #[arg(long)]
    pub configuration: Option<Configuration>,
    /// Decide agents one at a time instead of on a thread pool.
    #[arg(long)]
    pub sequential: bool,
    /// Save a checkpoint every N iterations (the last one is always saved).
    #[arg(long, default_value_t = 1)]
    pub checkpoint_every: u32,
    /// Continue the run checkpointed in `--out`.
    #[arg(long)]
    pub resume: bool,
    /// Artifact directory.
    #[arg(long)]
    pub out: PathBuf,
}

fn load_config(path: &Path) -> CliResult<(SimulationConfig, String)> {
    let text = read_file(path).category(Category::Input)?;
    let cfg = SimulationConfig::from_toml(&text)
        .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
        .category(Category::Config)?;
    Ok((cfg, text))
}

/// Resolve `p` against the directory of the config file.
fn relative_to(config: Option<&Path>, p: &str) -> PathBuf {
    let p = Path::new(p);
    match config.and_then(Path::parent) {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p.to_path_buf(),
    }
}

fn apply_overrides(cfg: &mut SimulationConfig, a: &SimulateArgs) {
    if let Some(b) = a.backend {
        cfg.backend = match b {
            BackendArg::Stub => BackendKind::Stub,
            BackendArg::Llm => BackendKind::Llm,
        };
    }
    if let Some(v) = &a.endpoint {
        cfg.endpoint.base_url = v.clone();
    }
    if let Some(v) = &a.model {
        cfg.endpoint.model = v.clone();
    }
    if let Some(v) = a.temperature {
        cfg.endpoint.temperature = v;
    }
    if let Some(v) = a.seed {
        cfg.master_seed = v;
    }
    if let Some(v) = a.iterations {
        cfg.iterations = v;
    }
    if let Some(v) = a.feed_size {
        cfg.feed_size = v;
    }
    if let Some(v) = a.configuration {
        cfg.configuration = v;
    }
    if a.sequential {
        cfg.parallel = false;
    }
}

pub fn policy(cfg: &SimulationConfig) -> CliResult<Policy> {
    Ok(match cfg.backend {
        BackendKind::Stub => {
            let mut stub = StubPolicy { interact_mix: cfg.interact_mix, ..StubPolicy::default() };
            if let Some(p) = &cfg.archetypes {
                let text = read_file(Path::new(p)).category(Category::Input)?;
                stub.archetypes =
                    ArchetypeTable::parse(&text).map_err(|e| anyhow::anyhow!("{p}: {e}")).category(Category::Input)?;
            }
            Policy::Stub(stub)
        }
        BackendKind::Llm => {
            let endpoint = cfg.endpoint.clone();
            Policy::Backend(Box::new(LlmClient::new(endpoint).category(Category::Backend)?))
        }
    })
}

fn run_engine(cfg: &SimulationConfig, world: &mut World, out: &Path, every: u32) -> CliResult<()> {
    let engine = Engine::new(cfg.clone(), policy(cfg)?).map_err(from_engine)?;
    let every = every.max(1);
    while world.iteration < cfg.iterations {
        let report = engine.run_iteration(world).map_err(from_engine)?;
        log::info!(
            "iteration {}/{}: {} actions logged, {} retries, {} fallbacks",
            report.iteration,
            cfg.iterations,
            world.log.len(),
            report.retries,
            report.fallbacks
        );
        if world.iteration.is_multiple_of(every) || world.iteration == cfg.iterations {
            save_checkpoint(out, world).map_err(from_io)?;
        }
    }
    if world.iteration == 0 {
        save_checkpoint(out, world).map_err(from_io)?;
    }
    Ok(())
}

const CHECKPOINT_FILES: [&str; 5] = [AGENTS_FILE, CONTENT_FILE, LOG_FILE, MEMORY_FILE, STATE_FILE];

pub fn run(args: SimulateArgs) -> CliResult<()> {
    if args.resume {
        return resume(args);
    }
    let out = &args.out;
    if out.join(STATE_FILE).exists() {
        return fail(Category::Input, format!("{} already holds a run; pass --resume to continue it", out.display()));
    }
    let (mut cfg, config_text) = match &args.config {
        Some(p) => {
            let (c, t) = load_config(p)?;
            (c, Some(t))
        }
        None => (SimulationConfig::default(), None),
    };
    // Flags win over the environment, which wins over the file.
    cfg.endpoint = cfg.endpoint.clone().with_env();
    apply_overrides(&mut cfg, &args);
    cfg.validate().map_err(anyhow::Error::msg).category(Category::Config)?;

    let mut manifest = RunManifest::new("simulate", serde_json::Value::Null);
    if let Some(t) = &config_text {
        manifest.input("config", t.as_bytes());
    }
    std::fs::create_dir_all(out).map_err(|e| anyhow::anyhow!("{}: {e}", out.display())).category(Category::Runtime)?;

    if let Some(p) = cfg.archetypes.clone() {
        let src = relative_to(args.config.as_deref(), &p);
        let text = read_file(&src).category(Category::Input)?;
        ArchetypeTable::parse(&text).map_err(|e| anyhow::anyhow!("{}: {e}", src.display())).category(Category::Input)?;
        manifest.input("archetypes", text.as_bytes());
        write_file(&out.join(ARCHETYPES_COPY), &text).category(Category::Runtime)?;
        manifest.outputs.push(ARCHETYPES_COPY.into());
        cfg.archetypes = Some(ARCHETYPES_COPY.into());
    }

    let agents: Vec<AgentProfile> = if let Some(p) = &args.agents {
        let text = read_file(p).category(Category::Input)?;
        manifest.input("agents", text.as_bytes());
        let agents = parse_agents(&text).category(Category::Input)?;
        write_file(&out.join(POPULATION_COPY), &text).category(Category::Runtime)?;
        manifest.outputs.push(POPULATION_COPY.into());
        cfg.personas = None;
        agents
    } else {
        let personas: Vec<Persona> = if let Some(n) = args.synthetic {
            synthetic_personas(n)
        } else {
            let path = match (&args.personas, &cfg.personas) {
                (Some(p), _) => p.clone(),
                (None, Some(p)) => relative_to(args.config.as_deref(), p),
                (None, None) => {
                    return fail(Category::Input, "no personas: pass --personas, --synthetic or --agents, or set `personas` in the config")
                }
            };
            let text = read_file(&path).category(Category::Input)?;
            manifest.input("personas", text.as_bytes());
            parse_personas(&text).category(Category::Input)?
        };
        write_file(&out.join(PERSONAS_COPY), &to_jsonl(&personas)).category(Category::Runtime)?;
        manifest.outputs.push(PERSONAS_COPY.into());
        cfg.personas = Some(PERSONAS_COPY.into());
        init_population(&personas, cfg.configuration)
            .map_err(from_engine)?
    };

    // Relative paths in the snapshot resolve against the artifact directory.
    write_file(&out.join(CONFIG_SNAPSHOT), &cfg.to_toml()).category(Category::Runtime)?;
    manifest.outputs.push(CONFIG_SNAPSHOT.into());

    let mut run_cfg = cfg.clone();
    run_cfg.archetypes = cfg.archetypes.as_ref().map(|a| out.join(a).display().to_string());
    let mut world = World::new(agents, &run_cfg)
        .map_err(from_engine)?;
    run_engine(&run_cfg, &mut world, out, args.checkpoint_every)?;

    manifest.master_seed = Some(cfg.master_seed);
    manifest.config = serde_json::to_value(&cfg).expect("config serializes");
    manifest.outputs.extend(CHECKPOINT_FILES.iter().map(|s| s.to_string()));
    let path = manifest.write(out)?;
    println!("{} agents, {} iterations, {} actions -> {}", world.agents.len(), world.iteration, world.log.len(), path.display());
    Ok(())
}

fn resume(args: SimulateArgs) -> CliResult<()> {
    let out = &args.out;
    if args.seed.is_some() || args.configuration.is_some() || args.feed_size.is_some() {
        return fail(Category::Config, "--seed, --configuration and --feed-size cannot change when resuming");
    }
    if args.personas.is_some() || args.synthetic.is_some() || args.agents.is_some() {
        return fail(Category::Config, "the population comes from the checkpoint when resuming");
    }
    let mut manifest = check_schema(out)?.unwrap_or_else(|| RunManifest::new("simulate", serde_json::Value::Null));
    let snapshot = args.config.clone().unwrap_or_else(|| out.join(CONFIG_SNAPSHOT));
    let (mut cfg, _) = load_config(&snapshot)?;
    cfg.endpoint = cfg.endpoint.clone().with_env();
    apply_overrides(&mut cfg, &args);
    cfg.validate().map_err(anyhow::Error::msg).category(Category::Config)?;
    let mut world = load_checkpoint(out).map_err(from_io)?;
    if world.iteration > cfg.iterations {
        return fail(
            Category::Config,
            format!("checkpoint is at iteration {} but the run stops at {}", world.iteration, cfg.iterations),
        );
    }
    let start = world.iteration;
    let mut run_cfg = cfg.clone();
    run_cfg.archetypes = cfg.archetypes.as_ref().map(|a| out.join(a).display().to_string());
    run_engine(&run_cfg, &mut world, out, args.checkpoint_every)?;
    write_file(&out.join(CONFIG_SNAPSHOT), &cfg.to_toml()).category(Category::Runtime)?;
    manifest.master_seed = Some(cfg.master_seed);
    manifest.config = serde_json::to_value(&cfg).expect("config serializes");
    manifest.outputs.extend(CHECKPOINT_FILES.iter().map(|s| s.to_string()));
    manifest.outputs.push(CONFIG_SNAPSHOT.into());
    let path = manifest.write(out)?;
    println!("resumed at iteration {start}, now {} with {} actions -> {}", world.iteration, world.log.len(), path.display());
    Ok(())
}
