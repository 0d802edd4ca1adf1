use std::io;
use std::path::PathBuf;

use active_pets::data::{load_pair_dataset, reserve_test_split, save_pair_dataset, TerminalOracle};
use active_pets::predictor::CommitteeMember;
use active_pets::retrieval::{build_pairs, load_claims, load_corpus, Bm25Index};
use active_pets::runner::analysis::{corpus_report, summarize};
use active_pets::runner::{
    load_datasets, load_labelled, load_results, Experiment, ExperimentConfig,
};
use active_pets::Partition;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "active-pets",
    version,
    about = "Committee-based active learning for claim verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the budget loop described by a config file.
    Run {
        config: PathBuf,
        /// Ask for labels on the terminal instead of using gold labels.
        #[arg(long)]
        interactive: bool,
        /// Override the config's output directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Summarize a results table and, optionally, dumped labelled pools.
    Analyze {
        results: PathBuf,
        #[arg(long = "labelled")]
        labelled: Vec<PathBuf>,
        /// Size units of the mock encoder used for similarity.
        #[arg(long, default_value_t = 24)]
        encoder_size: u32,
    },
    /// Build a pair dataset from an abstract corpus and claims with BM25.
    Retrieve {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        claims: PathBuf,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reserve a balanced test split from a pair dataset.
    Split {
        input: PathBuf,
        #[arg(long, default_value_t = 150)]
        per_class: usize,
        #[arg(long, default_value_t = 123)]
        seed: u64,
        #[arg(long)]
        test_out: PathBuf,
        #[arg(long)]
        pool_out: PathBuf,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> active_pets::Result<()> {
    match cli.command {
        Command::Run {
            config,
            interactive,
            output,
        } => {
            let mut config = ExperimentConfig::load(config)?;
            if let Some(out) = output {
                config.output = out;
            }
            let (pool, test) = load_datasets(&config)?;
            let mut experiment = Experiment::new(config.clone())?;
            if interactive {
                experiment = experiment.with_oracle(Box::new(TerminalOracle::new(
                    io::BufReader::new(io::stdin()),
                    io::stderr(),
                )));
            }
            let report = experiment.run_on(&pool, &test)?;
            let files = report.emit(&config)?;
            println!("{} rows -> {}", report.rows.len(), files.results.display());
            println!("manifest -> {}", files.manifest.display());
        }
        Command::Analyze {
            results,
            labelled,
            encoder_size,
        } => {
            let rows = load_results(results)?;
            println!("strategy,budget,macro_f1,frac_support,frac_neutral,frac_contradict,weighted_support,weighted_neutral,weighted_contradict");
            for s in summarize(&rows) {
                println!(
                    "{},{},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4}",
                    s.strategy,
                    s.budget,
                    s.macro_f1,
                    s.unique[0],
                    s.unique[1],
                    s.unique[2],
                    s.weighted[0],
                    s.weighted[1],
                    s.weighted[2]
                );
            }
            let mut encoder = CommitteeMember::mock("encoder", encoder_size, 0)?;
            for path in labelled {
                let records = load_labelled(&path)?;
                let r = corpus_report(&records, &mut encoder)?;
                println!(
                    "{}: instances={} weighted={} maas_ttr={:.4} similarity={:.4}",
                    path.display(),
                    r.instances,
                    r.weighted_instances,
                    r.maas_ttr,
                    r.semantic_similarity
                );
            }
        }
        Command::Retrieve {
            corpus,
            claims,
            k,
            out,
        } => {
            let corpus = load_corpus(corpus)?;
            let claims = load_claims(claims)?;
            let index = Bm25Index::build(&corpus)?;
            let pairs = build_pairs(&claims, &corpus, &index, k)?;
            save_pair_dataset(&out, &pairs)?;
            let pool = active_pets::Pool::new(pairs)?;
            println!("{} pairs -> {}", pool.len(), out.display());
            println!("{}", pool.stats(Partition::Unlabelled));
        }
        Command::Split {
            input,
            per_class,
            seed,
            test_out,
            pool_out,
        } => {
            let pool = load_pair_dataset(input)?;
            let (test, rest) = reserve_test_split(pool, per_class, seed)?;
            save_pair_dataset(&test_out, &test)?;
            save_pair_dataset(&pool_out, rest.instances())?;
            println!("test:  {}", active_pets::data::label_stats(&test));
            println!("pool:  {}", rest.stats(Partition::Unlabelled));
        }
    }
    Ok(())
}
