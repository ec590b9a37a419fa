//! `poflow`: label, decide, check and analyse partial-order data flows.
//!
//! Exit codes: 0 success, 1 negative analysis result (deny, violations,
//! non-lattice under `--expect-lattice`), 2 usage or input error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "poflow", version, about = "Partial-order data-flow security analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the provenance label of every entity.
    Labels {
        net: PathBuf,
        /// Only this flow.
        #[arg(long)]
        flow: Option<String>,
    },
    /// Decide whether data may move from SRC to DST.
    Decide {
        net: PathBuf,
        flow: String,
        src: String,
        dst: String,
        /// Operation tag recorded with the request.
        #[arg(long, default_value = "")]
        op: String,
        /// Print the audit record instead of the bare decision.
        #[arg(long)]
        audit: bool,
    },
    /// Verify a flow against a policy file.
    Check { net: PathBuf, policy: PathBuf },
    /// Report join/meet failures, optionally with the lattice completion.
    Lattice {
        net: PathBuf,
        #[arg(long)]
        complete: bool,
        /// Exit 1 unless every flow is a lattice.
        #[arg(long)]
        expect_lattice: bool,
        #[arg(long)]
        flow: Option<String>,
    },
    /// Union of two single-flow files.
    Merge {
        net1: PathBuf,
        net2: PathBuf,
        /// Identify entities with the same name instead of rejecting them.
        #[arg(long)]
        shared: bool,
    },
    /// Restrict a flow to the given entities.
    Extract {
        net: PathBuf,
        #[arg(required = true)]
        entities: Vec<String>,
    },
    /// Graphviz DOT export.
    Dot { net: PathBuf },
    /// Token propagation from SOURCE; prints every entity reached.
    Simulate {
        net: PathBuf,
        flow: String,
        source: String,
    },
    /// Add or remove one channel and print the updated file.
    #[command(group(ArgGroup::new("edit").required(true).args(["add", "remove"])))]
    Edit {
        net: PathBuf,
        #[arg(long, num_args = 2, value_names = ["SRC", "DST"])]
        add: Option<Vec<String>>,
        #[arg(long, num_args = 2, value_names = ["SRC", "DST"])]
        remove: Option<Vec<String>>,
        /// Print the edited flow's labels instead of the file.
        #[arg(long)]
        labels: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Labels { net, flow } => commands::labels(&net, flow.as_deref()),
        Command::Decide {
            net,
            flow,
            src,
            dst,
            op,
            audit,
        } => commands::decide(&net, &flow, &src, &dst, &op, audit),
        Command::Check { net, policy } => commands::check(&net, &policy),
        Command::Lattice {
            net,
            complete,
            expect_lattice,
            flow,
        } => commands::lattice(&net, flow.as_deref(), complete, expect_lattice),
        Command::Merge { net1, net2, shared } => commands::merge(&net1, &net2, shared),
        Command::Extract { net, entities } => commands::extract(&net, &entities),
        Command::Dot { net } => commands::dot(&net),
        Command::Simulate { net, flow, source } => commands::simulate(&net, &flow, &source),
        Command::Edit {
            net,
            add,
            remove,
            labels,
        } => {
            let (adding, pair) = match (add, remove) {
                (Some(p), _) => (true, p),
                (None, Some(p)) => (false, p),
                (None, None) => unreachable!("clap requires one of --add/--remove"),
            };
            commands::edit(&net, adding, &pair[0], &pair[1], labels)
        }
    };
    match result {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            ExitCode::from(outcome.code)
        }
        Err(err) => {
            eprintln!("poflow: error: {err:#}");
            ExitCode::from(2)
        }
    }
}
