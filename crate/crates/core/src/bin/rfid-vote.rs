use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rfid_vote::cli;

#[derive(Parser)]
#[command(name = "rfid-vote", version, about = "RFID voting terminals, vote logs and batch sync, simulated")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random AES-128 key file.
    GenKey {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write an encrypted voter registry of seeded random UIDs.
    GenRegistry {
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Registry key file.
        #[arg(long)]
        key: PathBuf,
    },
    /// Issue a card image for every voter in a registry.
    IssueCards {
        #[arg(long)]
        registry: PathBuf,
        #[arg(long)]
        registry_key: PathBuf,
        #[arg(long)]
        card_key: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a scenario file and write its report and artifacts.
    Run {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Verify a device log and its sync journal.
    VerifyLog {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        journal: PathBuf,
        /// Device MAC key file.
        #[arg(long)]
        key: PathBuf,
    },
    /// Tally an archive of accepted votes.
    Report {
        #[arg(long)]
        archive: PathBuf,
        /// Keyring JSON as written by `run`.
        #[arg(long)]
        keys: PathBuf,
        #[arg(long)]
        ballot: PathBuf,
    },
}

fn main() -> ExitCode {
    let args = Args::parse();
    let out = &mut io::stdout();
    let result = match args.command {
        Command::GenKey { seed, out: path } => cli::cmd_gen_key(seed, &path, out),
        Command::GenRegistry { count, seed, out: path, key } => cli::cmd_gen_registry(count, seed, &path, &key, out),
        Command::IssueCards { registry, registry_key, card_key, out: path } => {
            cli::cmd_issue_cards(&registry, &registry_key, &card_key, &path, out)
        }
        Command::Run { scenario, out_dir } => cli::cmd_run(&scenario, &out_dir, out),
        Command::VerifyLog { log, journal, key } => cli::cmd_verify_log(&log, &journal, &key, out),
        Command::Report { archive, keys, ballot } => cli::cmd_report(&archive, &keys, &ballot, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rfid-vote: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
