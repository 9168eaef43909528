//! Command-line surface tying the engine together: tagger training and
//! tagging, dictionary building, landmark mining, coordinate selection,
//! geolocation, simulator runs, and the landmark-density benchmark.
//!
//! Every command is reproducible: fixed seeds and fixed inputs give
//! byte-identical output files.

pub mod bench;
pub mod measurements;

use std::net::Ipv4Addr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use geomark::cbg::CandidateCoordinate;
use geomark::config::EngineConfig;
use geomark::geo::GeoCoordinate;
use geomark::geolocate::{geolocate_target, GeolocationResult};
use geomark::measure::MeasurementSource;
use geomark::mine::{
    build_database, read_pages_dir, read_whois, Blacklist, GeocoderStub, MiningDeps,
};
use geomark::netsim::{self, SimConfig};
use geomark::orgdict::OrgDictionary;
use geomark::selection::{self, LandmarkScore};
use geomark::store;
use geomark::tagger::{
    self, corpus, load_checkpoint, metrics::format_metrics_table, save_checkpoint, train,
    TrainConfig,
};

use measurements::Measurements;

#[derive(Parser)]
#[command(
    name = "geomark",
    about = "Landmark mining and IP geolocation over a deterministic network simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sequence-tagger training, evaluation, and tagging.
    Tagger {
        #[command(subcommand)]
        command: TaggerCommand,
    },
    /// Organization-name dictionary tools.
    Orgdict {
        #[command(subcommand)]
        command: OrgdictCommand,
    },
    /// Mine a landmark database from page fixtures.
    Mine(MineArgs),
    /// Score candidate coordinates against landmarks by measurements.
    SelectCoord(SelectCoordArgs),
    /// Geolocate a target IP against a landmark database.
    Geolocate(GeolocateArgs),
    /// Synthetic-network simulator.
    Sim {
        #[command(subcommand)]
        command: SimCommand,
    },
    /// Benchmarks.
    Bench {
        #[command(subcommand)]
        command: BenchCommand,
    },
}

#[derive(Subcommand)]
enum TaggerCommand {
    /// Train on a labeled corpus and write the best checkpoint.
    Train(TaggerTrainArgs),
    /// Evaluate a checkpoint on a labeled corpus.
    Eval(TaggerEvalArgs),
    /// Tag a raw page file and print entities.
    Tag(TaggerTagArgs),
}

#[derive(Args)]
struct TaggerTrainArgs {
    /// Labeled corpus (page id, tokens, tags; tab-separated).
    #[arg(long)]
    corpus: PathBuf,
    /// Separate validation corpus; defaults to a split of the corpus.
    #[arg(long)]
    val: Option<PathBuf>,
    /// Fraction of the corpus held out for validation when --val is absent.
    #[arg(long, default_value_t = 0.3)]
    val_split: f64,
    /// Output checkpoint path.
    #[arg(long)]
    out: PathBuf,
    /// Metrics table output (validation metrics of the best epoch).
    #[arg(long)]
    metrics_out: Option<PathBuf>,
    #[command(flatten)]
    overrides: EngineOverrides,
    /// Override tagger epochs.
    #[arg(long)]
    epochs: Option<usize>,
    /// Override the distinguishing coefficient.
    #[arg(long)]
    alpha: Option<f64>,
    /// Override the learning rate.
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Override the batch size.
    #[arg(long)]
    batch_size: Option<usize>,
    /// Override the embedding dimension.
    #[arg(long)]
    embedding_dim: Option<usize>,
    /// Override encoder units.
    #[arg(long)]
    encoder_units: Option<usize>,
    /// Override decoder units.
    #[arg(long)]
    decoder_units: Option<usize>,
}

#[derive(Args)]
struct TaggerEvalArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    metrics_out: Option<PathBuf>,
}

#[derive(Args)]
struct TaggerTagArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Raw text file to tag.
    #[arg(long)]
    page: PathBuf,
}

#[derive(Subcommand)]
enum OrgdictCommand {
    /// Build a dictionary from one organization name per line.
    Build {
        names_file: PathBuf,
        out: PathBuf,
    },
    /// Match a page file against a built dictionary.
    Match {
        dict: PathBuf,
        page_file: PathBuf,
    },
}

#[derive(Args)]
struct EngineOverrides {
    /// Engine config file (key=value).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the engine seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl EngineOverrides {
    fn load(&self) -> Result<EngineConfig> {
        let mut cfg = match &self.config {
            Some(path) => EngineConfig::load(path)?,
            None => EngineConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct MineArgs {
    /// Directory of page files named <ip>_<home|contact>[.txt].
    #[arg(long)]
    pages: PathBuf,
    /// Whois fixture (ip<TAB>org).
    #[arg(long)]
    whois: PathBuf,
    /// Proxy-provider blacklist (one name per line).
    #[arg(long)]
    blacklist: PathBuf,
    /// Geocoder table (query, name, lat, lon; tab-separated).
    #[arg(long)]
    geocoder: PathBuf,
    /// Trained tagger checkpoint.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Organization dictionary file (optional).
    #[arg(long)]
    orgdict: Option<PathBuf>,
    /// Measurement source: snapshot file or sim config.
    #[arg(long)]
    measurements: PathBuf,
    /// Existing landmark db to score selection candidates against.
    #[arg(long)]
    seed_db: Option<PathBuf>,
    /// Output landmark database.
    #[arg(long)]
    db_out: PathBuf,
    /// Output mining report.
    #[arg(long)]
    report_out: Option<PathBuf>,
    #[command(flatten)]
    overrides: EngineOverrides,
}

#[derive(Args)]
struct SelectCoordArgs {
    /// Candidate coordinates (lat, lon[, label[, merged_count]]; tabs).
    #[arg(long)]
    candidates: PathBuf,
    /// Landmark database to score against.
    #[arg(long)]
    db: PathBuf,
    /// Measurement source: snapshot file or sim config.
    #[arg(long)]
    measurements: PathBuf,
    /// Target IP the candidates locate.
    #[arg(long)]
    target: Ipv4Addr,
    /// Score-table output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    overrides: EngineOverrides,
}

#[derive(Args)]
struct GeolocateArgs {
    /// Target IP.
    target: Ipv4Addr,
    /// Landmark database.
    #[arg(long)]
    db: PathBuf,
    /// Measurement source: snapshot file or sim config.
    #[arg(long)]
    measurements: PathBuf,
    /// Probes used (closest to the target).
    #[arg(long)]
    k_probes: Option<usize>,
    /// Candidate landmarks kept after delay scoring.
    #[arg(long)]
    k_candidates: Option<usize>,
    /// Write the per-landmark audit table here.
    #[arg(long)]
    audit: Option<PathBuf>,
    /// Write the result record here (also printed to stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    overrides: EngineOverrides,
}

#[derive(Subcommand)]
enum SimCommand {
    /// Generate a topology file from a sim config.
    Generate {
        #[arg(long)]
        config: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Measure a full snapshot (delay vectors + traceroutes).
    Snapshot {
        #[arg(long)]
        config: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Median error distance vs landmark density.
    Med {
        /// Comma-separated landmark counts.
        #[arg(long, default_value = "10,100,1000")]
        landmarks: String,
        #[arg(long, default_value_t = 30)]
        trials: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 500.0)]
        region_km: f64,
        #[arg(long, default_value_t = 250)]
        routers: usize,
        #[arg(long, default_value_t = 24)]
        probes: usize,
        /// Report output; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parse argv and run. Returns the process exit code: 0 on success, 2 on
/// usage errors, 1 on runtime failures (reason on stderr).
pub fn cli_dispatch<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            // clap prints help/usage itself; keep its exit semantics but
            // collapse all usage problems to 2.
            let _ = err.print();
            return match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err:#}");
            1
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Tagger { command } => match command {
            TaggerCommand::Train(args) => tagger_train(args),
            TaggerCommand::Eval(args) => tagger_eval(args),
            TaggerCommand::Tag(args) => tagger_tag(args),
        },
        Command::Orgdict { command } => match command {
            OrgdictCommand::Build { names_file, out } => {
                let dict = OrgDictionary::read_names(&names_file)?;
                dict.write(&out)?;
                println!("indexed {} names", dict.len());
                Ok(())
            }
            OrgdictCommand::Match { dict, page_file } => {
                let dict = OrgDictionary::read(&dict)?;
                let text = std::fs::read_to_string(&page_file)
                    .with_context(|| format!("cannot read page {}", page_file.display()))?;
                let tokens = tagger::tokenize(&text);
                for m in dict.match_organizations(&tokens) {
                    println!(
                        "match\t{}\t{}\t{}\t{}",
                        m.entity.token_range.start,
                        m.entity.token_range.end,
                        if m.low_confidence { 1 } else { 0 },
                        m.entity.text
                    );
                }
                Ok(())
            }
        },
        Command::Mine(args) => mine(args),
        Command::SelectCoord(args) => select_coord(args),
        Command::Geolocate(args) => geolocate(args),
        Command::Sim { command } => match command {
            SimCommand::Generate { config, seed, out } => {
                let mut sim = SimConfig::load(&config)?;
                if let Some(seed) = seed {
                    sim.seed = seed;
                }
                let topo = netsim::generate(&sim)?;
                netsim::write_topology(&topo, &out)?;
                println!(
                    "generated {} routers, {} hosts ({} probes)",
                    topo.routers.len(),
                    topo.hosts.len(),
                    topo.probe_count
                );
                Ok(())
            }
            SimCommand::Snapshot { config, seed, out } => {
                let mut sim = SimConfig::load(&config)?;
                if let Some(seed) = seed {
                    sim.seed = seed;
                }
                let topo = netsim::generate(&sim)?;
                let model = netsim::build_delay_model(&sim.delay)?;
                let snap = netsim::snapshot(&topo, model.as_ref(), sim.trace_nonresponse_prob)?;
                snap.write(&out)?;
                println!(
                    "measured {} hosts from {} probes",
                    snap.delays.len(),
                    snap.probe_count
                );
                Ok(())
            }
        },
        Command::Bench { command } => match command {
            BenchCommand::Med {
                landmarks,
                trials,
                seed,
                region_km,
                routers,
                probes,
                out,
            } => {
                let landmark_counts: Vec<usize> = landmarks
                    .split(',')
                    .map(|s| s.trim().parse().context("bad landmark count"))
                    .collect::<Result<_>>()?;
                let cfg = bench::MedBenchConfig {
                    landmark_counts,
                    trials,
                    seed,
                    region_km,
                    routers,
                    probes,
                };
                let rows = bench::run_med_bench(&cfg)?;
                let report = bench::med_report(&rows);
                match out {
                    Some(path) => std::fs::write(&path, &report)
                        .with_context(|| format!("writing {}", path.display()))?,
                    None => print!("{report}"),
                }
                Ok(())
            }
        },
    }
}

fn tagger_train(args: TaggerTrainArgs) -> Result<()> {
    let cfg = args.overrides.load()?;
    let mut hyper = cfg.tagger.clone();
    if let Some(v) = args.epochs {
        hyper.epochs = v;
    }
    if let Some(v) = args.alpha {
        hyper.alpha_distinguish = v;
    }
    if let Some(v) = args.learning_rate {
        hyper.learning_rate = v;
    }
    if let Some(v) = args.batch_size {
        hyper.batch_size = v;
    }
    if let Some(v) = args.embedding_dim {
        hyper.embedding_dim = v;
    }
    if let Some(v) = args.encoder_units {
        hyper.encoder_units = v;
    }
    if let Some(v) = args.decoder_units {
        hyper.decoder_units = v;
    }

    let pages = corpus::read_corpus(&args.corpus)?;
    let (train_pages, val_pages) = match &args.val {
        Some(path) => (pages, corpus::read_corpus(path)?),
        None => {
            if !(0.0..1.0).contains(&args.val_split) || args.val_split == 0.0 {
                bail!("--val-split must be in (0, 1)");
            }
            // Deterministic tail split; the corpus order is the fixture's.
            let n_val = ((pages.len() as f64) * args.val_split).round() as usize;
            let n_val = n_val.clamp(1, pages.len().saturating_sub(1).max(1));
            let split = pages.len() - n_val;
            let (t, v) = pages.split_at(split);
            (t.to_vec(), v.to_vec())
        }
    };
    let train_cfg = TrainConfig {
        hyper,
        seed: cfg.seed,
    };
    let (params, report) = train(&train_pages, &val_pages, &train_cfg)?;
    save_checkpoint(&params, &args.out)?;
    let best = report
        .epochs
        .iter()
        .find(|e| e.epoch == report.best_epoch)
        .expect("best epoch recorded");
    println!(
        "trained {} epochs; best epoch {} with validation F1 {:.4}",
        report.epochs.len(),
        report.best_epoch,
        report.best_validation_f1
    );
    if let Some(path) = &args.metrics_out {
        std::fs::write(path, format_metrics_table(&best.validation))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn tagger_eval(args: TaggerEvalArgs) -> Result<()> {
    let params = load_checkpoint(&args.checkpoint)?;
    let pages = corpus::read_corpus(&args.corpus)?;
    let mut predicted = Vec::new();
    let mut gold = Vec::new();
    for page in &pages {
        let tags = params.predict_tags(&page.tokens)?;
        predicted.push((
            page.id.clone(),
            tagger::decode_bieso(&page.tokens, &tags)?,
        ));
        gold.push((page.id.clone(), page.entities()));
    }
    let metrics = tagger::compute_metrics(&predicted, &gold)?;
    let table = format_metrics_table(&metrics);
    print!("{table}");
    if let Some(path) = &args.metrics_out {
        std::fs::write(path, &table).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn tagger_tag(args: TaggerTagArgs) -> Result<()> {
    let params = load_checkpoint(&args.checkpoint)?;
    let text = std::fs::read_to_string(&args.page)
        .with_context(|| format!("cannot read page {}", args.page.display()))?;
    let tokens = tagger::tokenize(&text);
    if tokens.is_empty() {
        bail!("page contains no tokens");
    }
    let tags = params.predict_tags(&tokens)?;
    for (i, (token, tag)) in tokens.iter().zip(&tags).enumerate() {
        println!("token\t{i}\t{token}\t{tag}");
    }
    for e in tagger::decode_bieso(&tokens, &tags)? {
        println!(
            "entity\t{}\t{}\t{}\t{}",
            e.entity_type,
            e.token_range.start,
            e.token_range.end,
            e.text
        );
    }
    Ok(())
}

fn mine(args: MineArgs) -> Result<()> {
    let cfg = args.overrides.load()?;
    let pages = read_pages_dir(&args.pages)?;
    let whois = read_whois(&args.whois)?;
    let blacklist = Blacklist::read(&args.blacklist)?;
    let geocoder = GeocoderStub::read(&args.geocoder)?;
    let params = load_checkpoint(&args.checkpoint)?;
    let dict = match &args.orgdict {
        Some(path) => OrgDictionary::read(path)?,
        None => OrgDictionary::default(),
    };
    let seed_db = match &args.seed_db {
        Some(path) => store::read_landmarks(path)?,
        None => Vec::new(),
    };
    let measurements = Measurements::load(&args.measurements)?;
    let source = measurements.source();
    let deps = MiningDeps {
        params: &params,
        dict: &dict,
        geocoder: &geocoder,
        whois: &whois,
        blacklist: &blacklist,
        source,
        seed_db,
    };
    let (landmarks, report) = build_database(pages, &deps, &cfg);
    store::write_landmarks(&landmarks, &args.db_out)?;
    if let Some(path) = &args.report_out {
        std::fs::write(path, report.to_text())
            .with_context(|| format!("writing {}", path.display()))?;
    }
    println!(
        "mined {} landmarks from {} pages ({} skipped, {} proxy-filtered)",
        landmarks.len(),
        report.pages,
        report.skipped.len(),
        report.proxy_filtered
    );
    Ok(())
}

fn read_candidates(path: &Path) -> Result<Vec<CandidateCoordinate>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read candidates {}", path.display()))?;
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        if fields.len() < 2 {
            bail!("candidates line {}: need lat<TAB>lon", idx + 1);
        }
        let lat: f64 = fields[0]
            .parse()
            .with_context(|| format!("candidates line {}: bad latitude", idx + 1))?;
        let lon: f64 = fields[1]
            .parse()
            .with_context(|| format!("candidates line {}: bad longitude", idx + 1))?;
        let mut candidate = CandidateCoordinate::new(
            GeoCoordinate::new(lat, lon)
                .map_err(|e| anyhow::anyhow!("candidates line {}: {e}", idx + 1))?,
        );
        if let Some(label) = fields.get(2) {
            if !label.is_empty() && *label != "-" {
                candidate.label = Some((*label).to_string());
            }
        }
        if let Some(count) = fields.get(3) {
            candidate.merged_count = count
                .parse()
                .with_context(|| format!("candidates line {}: bad merged count", idx + 1))?;
        }
        out.push(candidate);
    }
    if out.is_empty() {
        bail!("no candidates in {}", path.display());
    }
    Ok(out)
}

fn landmark_table_rows(scored: &[LandmarkScore]) -> String {
    let mut out = String::from("landmark\tip\tlat\tlon\ts_d\ts_t\ts\tlow_confidence\n");
    for l in scored {
        out.push_str(&format!(
            "landmark\t{}\t{}\t{}\t{:.6}\t{}\t{:.6}\t{}\n",
            l.ip,
            l.position.lat(),
            l.position.lon(),
            l.delay_score,
            l.topology_score
                .map(|t| format!("{t:.6}"))
                .unwrap_or_else(|| "-".to_string()),
            l.combined,
            if l.low_confidence { 1 } else { 0 }
        ));
    }
    out
}

fn select_coord(args: SelectCoordArgs) -> Result<()> {
    let cfg = args.overrides.load()?;
    let candidates = read_candidates(&args.candidates)?;
    let db = store::read_landmarks(&args.db)?;
    if db.is_empty() {
        bail!("landmark database {} is empty", args.db.display());
    }
    let measurements = Measurements::load(&args.measurements)?;
    let source = measurements.source();
    let full_vector = source
        .delay_vector(args.target)
        .with_context(|| format!("target {} unmeasurable", args.target))?;
    let probes = geomark::geolocate::select_probes(&full_vector, cfg.k_probes);
    let landmark_list: Vec<(Ipv4Addr, GeoCoordinate)> =
        db.iter().map(|l| (l.ip, l.position)).collect();
    let landmark_measures = selection::measure_landmarks(source, &probes, &landmark_list);
    let (target_vector, target_routes) =
        selection::measure_target(source, &probes, args.target)
            .with_context(|| format!("target {} unmeasurable over probe subset", args.target))?;
    let (best, table, scored) = selection::select_coordinate(
        &candidates,
        &landmark_measures,
        &target_vector,
        &target_routes,
        cfg.alpha_delay,
        cfg.beta_topo,
    )?;

    let mut out = String::from("#geomark score-table v1\n");
    out.push_str(&landmark_table_rows(&scored));
    out.push_str("candidate\tlat\tlon\tlabel\tmerged\tscore\tgates\n");
    for cs in &table {
        let gates: Vec<String> = cs.gates.iter().map(|g| format!("{g:.6}")).collect();
        out.push_str(&format!(
            "candidate\t{}\t{}\t{}\t{}\t{:.6}\t{}\n",
            cs.candidate.position.lat(),
            cs.candidate.position.lon(),
            cs.candidate.label.as_deref().unwrap_or("-"),
            cs.candidate.merged_count,
            cs.score,
            gates.join(",")
        ));
    }
    out.push_str(&format!(
        "best\t{}\t{}\n",
        best.position.lat(),
        best.position.lon()
    ));
    match &args.out {
        Some(path) => {
            std::fs::write(path, &out).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{out}"),
    }
    Ok(())
}

fn geolocation_record(result: &GeolocationResult) -> String {
    let probes: Vec<String> = result.probes_used.iter().map(|p| p.to_string()).collect();
    format!(
        "#geomark geolocation v1\ntarget\t{}\nestimated\t{}\t{}\nlandmark\t{}\nprobes\t{}\nunreachable_landmarks\t{}\n",
        result.target,
        result.position.lat(),
        result.position.lon(),
        result.landmark_ip,
        probes.join(","),
        result.unreachable_landmarks
    )
}

fn geolocate(args: GeolocateArgs) -> Result<()> {
    let mut cfg = args.overrides.load()?;
    if let Some(k) = args.k_probes {
        cfg.k_probes = k;
    }
    if let Some(k) = args.k_candidates {
        cfg.k_candidates = k;
    }
    let db = store::read_landmarks(&args.db)?;
    let measurements = Measurements::load(&args.measurements)?;
    let source = measurements.source();
    let result = geolocate_target(args.target, &db, source, &cfg)?;
    let record = geolocation_record(&result);
    print!("{record}");
    if let Some(path) = &args.out {
        std::fs::write(path, &record).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &args.audit {
        let mut audit = String::from("#geomark score-table v1\n");
        audit.push_str(&landmark_table_rows(&result.score_table));
        std::fs::write(path, audit).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
