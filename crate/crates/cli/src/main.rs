use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use genie_core::datagen::gaussian_blobs;
use genie_core::eval::{median_fm_protocol, summarize};
use genie_core::io::{format_sig, load_labels, load_points, load_strings, BenchmarkCase};
use genie_core::linkage::Merge;
use genie_core::pipeline::build_mst;
use genie_core::{
    cluster, cut, fm_index, Algorithm, Dataset, MergeHistory, Metric, MstBackend, Node, RunOptions,
    Space,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Genie hierarchical clustering and the benchmark driver around it.
#[derive(Debug, Parser)]
#[command(name = "genie", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cluster one dataset and write its merge history.
    Cluster(ClusterArgs),
    /// Median FM index over permuted runs for a grid of datasets and algorithms.
    Benchmark(BenchmarkArgs),
    /// Count dissimilarity calls of an MST backend on Gaussian blobs.
    Callcount(CallcountArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Worker threads.
    #[arg(long, env = "GENIE_THREADS", default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    threads: u32,
    /// MST backend for genie and single linkage.
    #[arg(long, default_value = "prim", value_parser = parse_backend)]
    backend: MstBackend,
}

#[derive(Debug, Args)]
struct ClusterArgs {
    /// Point file (whitespace-separated rows) or string file, optionally gzipped.
    #[arg(long)]
    input: PathBuf,
    /// Treat the input as one string per line (implied by levenshtein).
    #[arg(long)]
    strings: bool,
    /// Reference labels; the cut is scored with the FM index.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long, default_value = "euclidean", value_parser = parse_metric)]
    metric: Metric,
    #[arg(long, default_value = "genie", value_parser = ["genie", "single", "complete", "average", "ward"])]
    algorithm: String,
    /// Gini threshold in (0, 1].
    #[arg(long, default_value_t = 0.3, value_parser = parse_threshold)]
    g: f64,
    /// Number of clusters to cut at; defaults to the reference cluster count.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    k: Option<u64>,
    /// Shuffle the input with this seed before clustering; output refers to
    /// the original object numbers.
    #[arg(long)]
    seed: Option<u64>,
    /// Merge history destination (`-` or absent: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write the cut labels, one per line.
    #[arg(long)]
    labels_out: Option<PathBuf>,
    /// Where to write the MST edges (genie and single only).
    #[arg(long)]
    mst_out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct BenchmarkArgs {
    /// Comma-separated dataset names, looked up as `<name>.data[.gz]` and
    /// `<name>.labels[.gz]`. An empty list yields a header-only CSV.
    #[arg(long, default_value = "iris", value_delimiter = ',')]
    datasets: Vec<String>,
    #[arg(long, default_value = "genie,single,complete,average,ward", value_delimiter = ',')]
    algorithms: Vec<String>,
    /// Thresholds used for every genie cell.
    #[arg(long = "g", default_value = "0.2,0.3,0.4,0.5,0.6", value_delimiter = ',', value_parser = parse_threshold)]
    thresholds: Vec<f64>,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    runs: u64,
    /// Run r shuffles with seed + r.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "GENIE_DATA_DIR", default_value = "data")]
    data_dir: PathBuf,
    /// CSV destination (`-` or absent: standard output).
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Print min/Q1/median/Q3/max/mean/sd of the median FM column to stderr.
    #[arg(long)]
    summary: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct CallcountArgs {
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 0.5)]
    sigma: f64,
    #[arg(long, default_value_t = 10)]
    centers: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    common: Common,
}

fn parse_threshold(s: &str) -> Result<f64, String> {
    let g: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if g > 0.0 && g <= 1.0 {
        Ok(g)
    } else {
        Err(format!("threshold must lie in (0, 1], got {g}"))
    }
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    s.parse::<Metric>().map_err(|e| e.to_string())
}

fn parse_backend(s: &str) -> Result<MstBackend, String> {
    s.parse::<MstBackend>().map_err(|e| e.to_string())
}

impl Common {
    fn options(&self) -> RunOptions {
        RunOptions {
            threads: self.threads as usize,
            backend: self.backend,
            ..RunOptions::default()
        }
    }
}

fn write_output(path: Option<&Path>, body: &str) -> Result<()> {
    match path {
        Some(p) if p != Path::new("-") => {
            fs::write(p, body).with_context(|| format!("cannot write {}", p.display()))
        }
        _ => {
            std::io::stdout().write_all(body.as_bytes())?;
            Ok(())
        }
    }
}

/// Renames objects after clustering a permuted copy: position `p` was object `order[p]`.
fn unpermute(history: &MergeHistory, order: &[usize]) -> Result<MergeHistory> {
    let rename = |node: Node| match node {
        Node::Object(p) => Node::Object(order[p]),
        c => c,
    };
    let merges = history
        .merges()
        .iter()
        .map(|m| Merge::new(rename(m.left), rename(m.right), m.height))
        .collect();
    Ok(MergeHistory::new(history.n(), merges)?)
}

fn run_cluster(args: &ClusterArgs) -> Result<()> {
    let strings = args.strings || args.metric == Metric::Levenshtein;
    let data = if strings {
        load_strings(&args.input)?
    } else {
        load_points(&args.input)?
    };
    let reference = args.labels.as_deref().map(load_labels).transpose()?;
    if let Some(r) = &reference {
        if r.len() != data.len() {
            bail!("{} labels for {} objects", r.len(), data.len());
        }
    }
    let algo = Algorithm::from_name(&args.algorithm, Some(args.g))?;
    let opts = args.common.options();

    let order: Option<Vec<usize>> = args.seed.map(|seed| {
        let mut o: Vec<usize> = (0..data.len()).collect();
        o.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        o
    });
    let work: Dataset = match &order {
        Some(o) => data.reordered(o),
        None => data.clone(),
    };
    let space = Space::new(&work, args.metric)?;
    let start = Instant::now();
    let (history, mst_text) = if algo.uses_mst() {
        let mst = build_mst(&space, &opts)?;
        let h = match algo {
            Algorithm::Genie { g } => genie_core::genie(&mst, g)?,
            _ => genie_core::single_linkage(&mst)?,
        };
        (h, Some(mst))
    } else {
        (cluster(&space, algo, &opts)?, None)
    };
    let seconds = start.elapsed().as_secs_f64();
    let history = match &order {
        Some(o) => unpermute(&history, o)?,
        None => history,
    };

    write_output(args.out.as_deref(), &history.to_text())?;
    if let (Some(path), Some(mst)) = (&args.mst_out, &mst_text) {
        let text = match &order {
            Some(o) => {
                let mut s = String::new();
                for e in mst.edges() {
                    let (a, b) = (o[e.index1], o[e.index2]);
                    let _ = writeln!(s, "{} {} {}", a.min(b) + 1, a.max(b) + 1, format_sig(e.dist, 12));
                }
                s
            }
            None => mst.to_text(),
        };
        fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
    }

    let backend = if algo.uses_mst() { opts.backend.name() } else { "matrix" };
    eprintln!(
        "n={} calls={} backend={backend} seconds={seconds:.6}",
        data.len(),
        space.calls()
    );

    let k = args.k.map(|k| k as usize).or(reference.as_ref().map(|r| r.k()));
    if let Some(k) = k {
        let labels = cut(&history, k)?;
        if let Some(path) = &args.labels_out {
            let body: String = labels.labels().iter().map(|l| format!("{l}\n")).collect();
            fs::write(path, body).with_context(|| format!("cannot write {}", path.display()))?;
        }
        if let Some(r) = &reference {
            eprintln!("k={k} fm={}", format_sig(fm_index(&labels, r)?, 6));
        }
    }
    Ok(())
}

fn threshold_cell(algo: &Algorithm) -> String {
    algo.threshold().map_or_else(|| "NA".to_string(), |g| format_sig(g, 6))
}

fn run_benchmark(args: &BenchmarkArgs) -> Result<()> {
    let mut grid = Vec::new();
    for name in &args.algorithms {
        if name.eq_ignore_ascii_case("genie") {
            for &g in &args.thresholds {
                grid.push(Algorithm::Genie { g });
            }
        } else {
            grid.push(Algorithm::from_name(name, None)?);
        }
    }
    let opts = args.common.options();
    let mut csv = String::from("dataset,algorithm,threshold,metric,k,median_fm,calls\n");
    let mut medians = Vec::new();
    for name in args.datasets.iter().filter(|d| !d.is_empty()) {
        let case = BenchmarkCase::load(&args.data_dir, name)?;
        for algo in &grid {
            let Some(case) = &case else {
                let _ = writeln!(csv, "{name},{},{},NA,NA,SKIPPED,NA", algo.name(), threshold_cell(algo));
                continue;
            };
            let out = median_fm_protocol(
                &case.data,
                case.metric,
                *algo,
                &opts,
                &case.reference,
                case.k,
                args.runs as usize,
                args.seed,
            )?;
            let calls = out.calls.iter().sum::<u64>() / out.calls.len() as u64;
            let _ = writeln!(
                csv,
                "{name},{},{},{},{},{},{calls}",
                algo.name(),
                threshold_cell(algo),
                case.metric,
                case.k,
                format_sig(out.median, 6)
            );
            medians.push(out.median);
        }
    }
    write_output(args.csv.as_deref(), &csv)?;
    if args.summary {
        match summarize(&medians) {
            Some(s) => eprintln!(
                "min={} q1={} median={} q3={} max={} mean={} sd={}",
                format_sig(s.min, 6),
                format_sig(s.q1, 6),
                format_sig(s.median, 6),
                format_sig(s.q3, 6),
                format_sig(s.max, 6),
                format_sig(s.mean, 6),
                format_sig(s.sd, 6)
            ),
            None => eprintln!("no completed rows to summarise"),
        }
    }
    Ok(())
}

fn run_callcount(args: &CallcountArgs) -> Result<()> {
    let (data, _) = gaussian_blobs(args.n, args.d, args.centers, args.sigma, args.seed)?;
    let space = Space::new(&data, Metric::Euclidean)?;
    let opts = args.common.options();
    let start = Instant::now();
    build_mst(&space, &opts)?;
    let seconds = start.elapsed().as_secs_f64();
    let n = args.n as u64;
    let full = (n * n - n) / 2;
    let pct = if full == 0 { 100.0 } else { 100.0 * space.calls() as f64 / full as f64 };
    println!(
        "n={} d={} sigma={} backend={} calls={} ratio={pct:.1}% seconds={seconds:.6}",
        args.n,
        args.d,
        format_sig(args.sigma, 6),
        opts.backend,
        space.calls()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Cluster(a) => run_cluster(a),
        Command::Benchmark(a) => run_benchmark(a),
        Command::Callcount(a) => run_callcount(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
