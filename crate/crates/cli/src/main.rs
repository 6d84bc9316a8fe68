mod error;
mod output;
mod reports;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use partlex::alignment::{
    rewritten_tokens, CrossValConfig, Ibm1Config, SynthConfig, DEFAULT_BATCH, DEFAULT_FLOOR,
    DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use partlex::domain::{Subdomain, LEVELS};
use partlex::library::build_library;
use partlex::semantics::evaluate;
use partlex::stimgen::StimulusCorpus;
use partlex::textstats::{DescriptionCorpus, DEFAULT_N_PERM, PMI_MIN_COUNT};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::output::{read_input, sha256_hex, sidecar_manifest, Outputs};

#[derive(Debug, Parser)]
#[command(
    name = "partlex",
    version,
    about = "Part-concept libraries for graphics programs"
)]
struct Cli {
    /// Worker threads; outputs are identical for any value.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a stimulus corpus (JSONL), optionally with SVG renderings.
    Generate(GenerateArgs),
    /// Render every stimulus of a corpus to SVG.
    Render(RenderArgs),
    /// Rewrite a corpus into one library level.
    Rewrite(RewriteArgs),
    /// Combined library cost for levels 0 to 3.
    Cost(CostArgs),
    /// Synthetic descriptions emitted from one library level.
    Synth(SynthArgs),
    /// Cross-validated alignment of descriptions to each library level.
    Align(AlignArgs),
    /// Text statistics reports.
    #[command(subcommand)]
    Stats(StatsCommand),
    /// generate, cost, synth, align and stats in one reproducible run.
    Pipeline(PipelineArgs),
}

fn parse_subdomain(s: &str) -> Result<Subdomain, String> {
    s.parse()
        .map_err(|e: partlex::domain::UnknownSubdomain| e.to_string())
}

#[derive(Debug, Clone, Args, Serialize)]
struct SubdomainArgs {
    /// Subdomain to use; repeat for several.
    #[arg(long = "subdomain", value_parser = parse_subdomain)]
    subdomains: Vec<Subdomain>,
    /// Use all eight subdomains.
    #[arg(long, conflicts_with = "subdomains")]
    all_subdomains: bool,
}

impl SubdomainArgs {
    fn resolve(&self) -> Option<Vec<Subdomain>> {
        if self.all_subdomains {
            return Some(Subdomain::ALL.to_vec());
        }
        let mut v = self.subdomains.clone();
        v.sort();
        v.dedup();
        (!v.is_empty()).then_some(v)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
struct GenerateArgs {
    #[command(flatten)]
    select: SubdomainArgs,
    /// Stimuli per subdomain.
    #[arg(long, default_value_t = 250)]
    n: usize,
    #[arg(long)]
    seed: u64,
    /// Corpus JSONL to write.
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
    /// Also render SVGs into this directory.
    #[arg(long)]
    #[serde(skip)]
    svg_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
struct RenderArgs {
    #[arg(long)]
    #[serde(skip)]
    corpus: PathBuf,
    /// Directory receiving `<subdomain>/<id>.svg` and a manifest.
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
struct RewriteArgs {
    #[arg(long)]
    #[serde(skip)]
    corpus: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=3))]
    level: u8,
    /// JSONL of rewritten programs and their token sequences.
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
struct CostArgs {
    #[arg(long)]
    #[serde(skip)]
    corpus: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
struct SynthArgs {
    #[arg(long)]
    #[serde(skip)]
    corpus: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=3))]
    level: u8,
    /// Probability of replacing a word with a random corpus word.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Spellings per token word.
    #[arg(long, default_value_t = 1)]
    synonyms: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, Args, Serialize, Deserialize)]
struct EmArgs {
    /// Stimuli per held-out fold.
    #[arg(long, default_value_t = DEFAULT_BATCH)]
    batch: usize,
    /// Probability floor applied when scoring.
    #[arg(long, default_value_t = DEFAULT_FLOOR)]
    floor: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,
    /// Convergence tolerance on the corpus log-likelihood.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Add a NULL source token to every sequence.
    #[arg(long)]
    null_token: bool,
}

impl Default for EmArgs {
    fn default() -> Self {
        EmArgs {
            batch: DEFAULT_BATCH,
            floor: DEFAULT_FLOOR,
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
            null_token: false,
        }
    }
}

impl EmArgs {
    fn crossval(&self, seed: u64) -> CrossValConfig {
        CrossValConfig {
            batch: self.batch,
            seed,
            floor: self.floor,
            em: Ibm1Config {
                max_iter: self.max_iter,
                tol: self.tol,
                null_token: self.null_token,
            },
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
struct AlignArgs {
    #[arg(long)]
    #[serde(skip)]
    corpus: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    descriptions: PathBuf,
    /// Library levels to score; repeat for several (default: all).
    #[arg(long = "level", value_parser = clap::value_parser!(u8).range(0..=3))]
    levels: Vec<u8>,
    #[command(flatten)]
    em: EmArgs,
    /// Seed of the fold shuffle.
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum StatsCommand {
    /// Word-subdomain PMI tables and top-k listings.
    Pmi(PmiArgs),
    /// Jensen-Shannon distance between subdomains with a permutation test.
    Jsd(JsdArgs),
    /// Permutation ANOVA of program length across library levels.
    Anova(AnovaArgs),
    /// Word count regressed on base program length.
    Regress(RegressArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
struct TextInputs {
    #[arg(long)]
    #[serde(skip)]
    corpus: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    descriptions: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
struct PmiArgs {
    #[command(flatten)]
    inputs: TextInputs,
    #[arg(long, default_value_t = 10)]
    top_k: usize,
    /// Minimum occurrences for a word to be listed.
    #[arg(long, default_value_t = PMI_MIN_COUNT)]
    min_count: usize,
    /// Full table CSV.
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
    /// Top-k listing CSV.
    #[arg(long)]
    #[serde(skip)]
    top_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
struct JsdArgs {
    #[command(flatten)]
    inputs: TextInputs,
    #[arg(long, default_value_t = DEFAULT_N_PERM)]
    n_perm: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
struct AnovaArgs {
    #[arg(long)]
    #[serde(skip)]
    corpus: PathBuf,
    #[arg(long, default_value_t = DEFAULT_N_PERM)]
    n_perm: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
struct RegressArgs {
    #[command(flatten)]
    inputs: TextInputs,
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
}

#[derive(Debug, Clone, Args)]
struct PipelineArgs {
    /// JSON file with any of the pipeline settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    select: SubdomainArgs,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Level the synthetic descriptions are emitted from.
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=3))]
    synth_level: Option<u8>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    synonyms: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    floor: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    null_token: bool,
    #[arg(long)]
    n_perm: Option<usize>,
    #[arg(long)]
    svg: bool,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

/// Fully resolved pipeline settings; this is what the manifest records.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PipelineConfig {
    subdomains: Vec<Subdomain>,
    n: usize,
    seed: Option<u64>,
    synth_level: u8,
    noise: f64,
    synonyms: usize,
    em: EmArgs,
    n_perm: usize,
    top_k: usize,
    min_count: usize,
    svg: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            subdomains: Subdomain::ALL.to_vec(),
            n: 250,
            seed: None,
            synth_level: 2,
            noise: 0.2,
            synonyms: 2,
            em: EmArgs::default(),
            n_perm: DEFAULT_N_PERM,
            top_k: 10,
            min_count: PMI_MIN_COUNT,
            svg: false,
        }
    }
}

impl PipelineArgs {
    fn resolve(&self) -> Result<PipelineConfig, CliError> {
        let mut c = match &self.config {
            Some(path) => serde_json::from_str(&read_input(path)?)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?,
            None => PipelineConfig::default(),
        };
        if let Some(s) = self.select.resolve() {
            c.subdomains = s;
        }
        macro_rules! take {
            ($($field:ident => $target:expr),*) => {
                $(if let Some(v) = self.$field { $target = v; })*
            };
        }
        take!(n => c.n, synth_level => c.synth_level, noise => c.noise, synonyms => c.synonyms,
              batch => c.em.batch, floor => c.em.floor, max_iter => c.em.max_iter, tol => c.em.tol,
              n_perm => c.n_perm);
        if self.seed.is_some() {
            c.seed = self.seed;
        }
        c.em.null_token |= self.null_token;
        c.svg |= self.svg;
        if c.seed.is_none() {
            return Err(CliError::Usage(
                "pipeline needs a seed (--seed or \"seed\" in the config)".into(),
            ));
        }
        if c.subdomains.is_empty() {
            return Err(CliError::Usage("no subdomains selected".into()));
        }
        Ok(c)
    }
}

fn load_corpus(
    path: &Path,
    inputs: &mut BTreeMap<String, String>,
) -> Result<StimulusCorpus, CliError> {
    let text = read_input(path)?;
    inputs.insert(path.display().to_string(), sha256_hex(text.as_bytes()));
    Ok(StimulusCorpus::from_jsonl(&text)?)
}

fn load_descriptions(
    path: &Path,
    inputs: &mut BTreeMap<String, String>,
) -> Result<DescriptionCorpus, CliError> {
    let text = read_input(path)?;
    inputs.insert(path.display().to_string(), sha256_hex(text.as_bytes()));
    Ok(DescriptionCorpus::from_jsonl(&text)?)
}

/// Refuses to overwrite an input file.
fn check_distinct(out: &Path, inputs: &[&Path]) -> Result<(), CliError> {
    let canon = |p: &Path| std::fs::canonicalize(p).ok();
    if let Some(o) = canon(out) {
        if inputs.iter().any(|i| canon(i).as_ref() == Some(&o)) {
            return Err(CliError::Usage(format!(
                "output {} would overwrite an input",
                out.display()
            )));
        }
    }
    Ok(())
}

fn render_svgs(corpus: &StimulusCorpus, dir: &Path, outputs: &mut Outputs) -> Result<(), CliError> {
    for s in &corpus.stimuli {
        let lib = build_library(s.subdomain, 0)?;
        let svg = evaluate(s.domain(), &lib.expand(s.base())?)
            .and_then(|r| r.to_svg())
            .map_err(|e| CliError::Data(format!("stimulus {}: {e}", s.id)))?;
        outputs.write(
            &dir.join(s.subdomain.as_str()).join(format!("{}.svg", s.id)),
            svg.as_bytes(),
        )?;
    }
    Ok(())
}

/// Writes one report file plus its sidecar manifest.
fn single_output<C: Serialize>(
    outputs: &mut Outputs,
    out: &Path,
    bytes: &[u8],
    command: &str,
    config: &C,
    inputs: &BTreeMap<String, String>,
) -> Result<(), CliError> {
    outputs.write(out, bytes)?;
    outputs.write_manifest(&sidecar_manifest(out), command, config, inputs)
}

fn run_generate(a: &GenerateArgs, outputs: &mut Outputs) -> Result<(), CliError> {
    let subs = a
        .select
        .resolve()
        .ok_or_else(|| CliError::Usage("give --subdomain or --all-subdomains".into()))?;
    let corpus = reports::generate(&subs, a.n, a.seed)?;
    if let Some(dir) = &a.svg_dir {
        render_svgs(&corpus, dir, outputs)?;
    }
    let config = serde_json::json!({ "subdomains": subs, "n": a.n, "seed": a.seed });
    single_output(
        outputs,
        &a.out,
        corpus.to_jsonl().as_bytes(),
        "generate",
        &config,
        &BTreeMap::new(),
    )
}

fn run_render(a: &RenderArgs, outputs: &mut Outputs) -> Result<(), CliError> {
    let mut inputs = BTreeMap::new();
    let corpus = load_corpus(&a.corpus, &mut inputs)?;
    *outputs = Outputs::new(Some(&a.out));
    render_svgs(&corpus, &a.out, outputs)?;
    outputs.write_manifest(&a.out.join("manifest.json"), "render", a, &inputs)
}

#[derive(Serialize)]
struct RewriteRecord<'a> {
    id: &'a str,
    subdomain: Subdomain,
    level: usize,
    program: String,
    tokens: Vec<String>,
}

fn run_rewrite(a: &RewriteArgs, outputs: &mut Outputs) -> Result<(), CliError> {
    check_distinct(&a.out, &[&a.corpus])?;
    let mut inputs = BTreeMap::new();
    let corpus = load_corpus(&a.corpus, &mut inputs)?;
    let level = a.level as usize;
    let mut text = String::new();
    for (sub, part) in reports::split(&corpus) {
        let lib = build_library(sub, level)?;
        let tokens = rewritten_tokens(&part, &lib)?;
        for (s, toks) in part.stimuli.iter().zip(tokens) {
            let rec = RewriteRecord {
                id: &s.id,
                subdomain: sub,
                level,
                program: lib.rewrite(s.base())?.to_string(),
                tokens: toks,
            };
            text.push_str(&serde_json::to_string(&rec).expect("records serialize"));
            text.push('\n');
        }
    }
    single_output(outputs, &a.out, text.as_bytes(), "rewrite", a, &inputs)
}

fn run_cost(a: &CostArgs, outputs: &mut Outputs) -> Result<(), CliError> {
    check_distinct(&a.out, &[&a.corpus])?;
    let mut inputs = BTreeMap::new();
    let corpus = load_corpus(&a.corpus, &mut inputs)?;
    let csv = reports::cost_report(&corpus)?;
    single_output(outputs, &a.out, csv.as_bytes(), "cost", a, &inputs)
}

fn run_synth(a: &SynthArgs, outputs: &mut Outputs) -> Result<(), CliError> {
    check_distinct(&a.out, &[&a.corpus])?;
    let mut inputs = BTreeMap::new();
    let corpus = load_corpus(&a.corpus, &mut inputs)?;
    let cfg = SynthConfig {
        level: a.level as usize,
        noise: a.noise,
        synonyms: a.synonyms,
        seed: a.seed,
    };
    let descs = reports::synth(&corpus, cfg)?;
    single_output(
        outputs,
        &a.out,
        descs.to_jsonl().as_bytes(),
        "synth",
        a,
        &inputs,
    )
}

fn levels_or_all(levels: &[u8]) -> Vec<usize> {
    if levels.is_empty() {
        return LEVELS.to_vec();
    }
    let mut v: Vec<usize> = levels.iter().map(|&l| l as usize).collect();
    v.sort_unstable();
    v.dedup();
    v
}

fn run_align(a: &AlignArgs, outputs: &mut Outputs) -> Result<(), CliError> {
    check_distinct(&a.out, &[&a.corpus, &a.descriptions])?;
    let mut inputs = BTreeMap::new();
    let corpus = load_corpus(&a.corpus, &mut inputs)?;
    let descs = load_descriptions(&a.descriptions, &mut inputs)?;
    let csv = reports::align_report(
        &corpus,
        &descs,
        &levels_or_all(&a.levels),
        a.em.crossval(a.seed),
    )?;
    single_output(outputs, &a.out, csv.as_bytes(), "align", a, &inputs)
}

fn load_text_inputs(
    t: &TextInputs,
    out: &Path,
    inputs: &mut BTreeMap<String, String>,
) -> Result<(StimulusCorpus, DescriptionCorpus), CliError> {
    check_distinct(out, &[&t.corpus, &t.descriptions])?;
    Ok((
        load_corpus(&t.corpus, inputs)?,
        load_descriptions(&t.descriptions, inputs)?,
    ))
}

fn run_stats(cmd: &StatsCommand, outputs: &mut Outputs) -> Result<(), CliError> {
    let mut inputs = BTreeMap::new();
    match cmd {
        StatsCommand::Pmi(a) => {
            let (corpus, descs) = load_text_inputs(&a.inputs, &a.out, &mut inputs)?;
            let (table, top) = reports::pmi_reports(&corpus, &descs, a.top_k, a.min_count)?;
            outputs.write(&a.out, table.as_bytes())?;
            if let Some(t) = &a.top_out {
                outputs.write(t, top.as_bytes())?;
            }
            outputs.write_manifest(&sidecar_manifest(&a.out), "stats pmi", a, &inputs)
        }
        StatsCommand::Jsd(a) => {
            let (corpus, descs) = load_text_inputs(&a.inputs, &a.out, &mut inputs)?;
            let csv = reports::jsd_report(&corpus, &descs, a.n_perm, a.seed)?;
            single_output(outputs, &a.out, csv.as_bytes(), "stats jsd", a, &inputs)
        }
        StatsCommand::Anova(a) => {
            check_distinct(&a.out, &[&a.corpus])?;
            let corpus = load_corpus(&a.corpus, &mut inputs)?;
            let csv = reports::anova_report(&corpus, a.n_perm, a.seed)?;
            single_output(outputs, &a.out, csv.as_bytes(), "stats anova", a, &inputs)
        }
        StatsCommand::Regress(a) => {
            let (corpus, descs) = load_text_inputs(&a.inputs, &a.out, &mut inputs)?;
            let csv = reports::regress_report(&corpus, &descs)?;
            single_output(outputs, &a.out, csv.as_bytes(), "stats regress", a, &inputs)
        }
    }
}

fn run_pipeline(a: &PipelineArgs, outputs: &mut Outputs) -> Result<(), CliError> {
    let c = a.resolve()?;
    let seed = c.seed.expect("resolve checks the seed");
    let dir = &a.out;
    *outputs = Outputs::new(Some(dir));
    let mut inputs = BTreeMap::new();
    if let Some(path) = &a.config {
        inputs.insert(
            "config".to_string(),
            sha256_hex(read_input(path)?.as_bytes()),
        );
    }

    let corpus = reports::generate(&c.subdomains, c.n, seed)?;
    outputs.write(&dir.join("corpus.jsonl"), corpus.to_jsonl().as_bytes())?;
    if c.svg {
        render_svgs(&corpus, &dir.join("svg"), outputs)?;
    }
    outputs.write(
        &dir.join("cost.csv"),
        reports::cost_report(&corpus)?.as_bytes(),
    )?;

    let synth = SynthConfig {
        level: c.synth_level as usize,
        noise: c.noise,
        synonyms: c.synonyms,
        seed,
    };
    let descs = reports::synth(&corpus, synth)?;
    outputs.write(&dir.join("descriptions.jsonl"), descs.to_jsonl().as_bytes())?;
    let crossval = reports::align_report(&corpus, &descs, &LEVELS, c.em.crossval(seed))?;
    outputs.write(&dir.join("crossval.csv"), crossval.as_bytes())?;

    let (table, top) = reports::pmi_reports(&corpus, &descs, c.top_k, c.min_count)?;
    outputs.write(&dir.join("pmi.csv"), table.as_bytes())?;
    outputs.write(&dir.join("pmi_top.csv"), top.as_bytes())?;
    if c.subdomains.iter().any(|a| {
        c.subdomains
            .iter()
            .any(|b| a != b && a.domain() == b.domain())
    }) {
        let jsd = reports::jsd_report(&corpus, &descs, c.n_perm, seed)?;
        outputs.write(&dir.join("jsd.csv"), jsd.as_bytes())?;
    }
    outputs.write(
        &dir.join("anova.csv"),
        reports::anova_report(&corpus, c.n_perm, seed)?.as_bytes(),
    )?;
    outputs.write(
        &dir.join("regress.csv"),
        reports::regress_report(&corpus, &descs)?.as_bytes(),
    )?;
    outputs.write_manifest(&dir.join("manifest.json"), "pipeline", &c, &inputs)
}

fn run(cli: &Cli, outputs: &mut Outputs) -> Result<(), CliError> {
    match &cli.command {
        Command::Generate(a) => run_generate(a, outputs),
        Command::Render(a) => run_render(a, outputs),
        Command::Rewrite(a) => run_rewrite(a, outputs),
        Command::Cost(a) => run_cost(a, outputs),
        Command::Synth(a) => run_synth(a, outputs),
        Command::Align(a) => run_align(a, outputs),
        Command::Stats(s) => run_stats(s, outputs),
        Command::Pipeline(a) => run_pipeline(a, outputs),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let msg = text
                .lines()
                .take_while(|l| !l.starts_with("Usage:"))
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .collect::<Vec<_>>()
                .join(" ");
            let msg = msg.trim_start_matches("error: ").to_string();
            eprintln!("{}", CliError::Usage(msg).to_line());
            return ExitCode::from(2);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
        {
            eprintln!("{}", CliError::Usage(e.to_string()).to_line());
            return ExitCode::from(2);
        }
    }
    let mut outputs = Outputs::new(None);
    match run(&cli, &mut outputs) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            outputs.rollback();
            eprintln!("{}", e.to_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
