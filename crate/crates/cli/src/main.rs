use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use qct::config::{ExperimentConfig, Format, Overrides};
use qct::report::Metadata;

#[derive(Parser)]
#[command(name = "qct", version, about = "Circuit-testing experiments at desk scale")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Used when the config has no seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Report path; metadata goes to `<out>.meta.json`. Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Print the fixture registry with example documents.
    Fixtures {
        /// Also write every example to `<dir>/<group>/<name>.json`.
        #[arg(long)]
        write: Option<PathBuf>,
    },
    /// Circuit document tools.
    Circuit {
        #[command(subcommand)]
        command: CircuitCommand,
    },
}

#[derive(Subcommand)]
enum CircuitCommand {
    /// Parse and validate a JSON document.
    Validate {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = DocKind::Circuit)]
        kind: DocKind,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DocKind {
    Circuit,
    Verifier,
    KeyedFamily,
    CtInstance,
    DiInstance,
}

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            config,
            seed,
            out,
            format,
        } => run(&config, Overrides { seed, out, format }),
        Command::Fixtures { write } => fixtures(write.as_deref()),
        Command::Circuit {
            command: CircuitCommand::Validate { file, kind },
        } => validate(&file, kind),
    }
}

fn run(path: &Path, overrides: Overrides) -> ExitCode {
    let cfg = match ExperimentConfig::load(path, &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let (body, timings) = match qct::run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    };
    for row in &body.rows {
        eprintln!(
            "{} {}/{}: measured {:.12} bound {:.12}",
            if row.pass { "PASS" } else { "FAIL" },
            row.experiment,
            row.claim,
            row.measured,
            row.bound
        );
    }
    let text = match cfg.format {
        Format::Json => body.to_json(),
        Format::Csv => body.to_csv(&timings),
    };
    let meta = Metadata::new(timings);
    let meta_text = serde_json::to_string_pretty(&meta).expect("metadata serializes") + "\n";
    match &cfg.out {
        Some(out) => {
            let mut meta_path = out.clone().into_os_string();
            meta_path.push(".meta.json");
            if let Err(e) = std::fs::write(out, text)
                .and_then(|_| std::fs::write(PathBuf::from(meta_path), meta_text))
            {
                eprintln!("error: cannot write {}: {e}", out.display());
                return ExitCode::from(EXIT_RUNTIME);
            }
        }
        None => print!("{text}"),
    }
    if body.all_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}

fn fixtures(write: Option<&Path>) -> ExitCode {
    let cat = match qct::fixtures::catalog() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    };
    println!("{}", serde_json::to_string_pretty(&cat).expect("catalog serializes"));
    if let Some(dir) = write {
        let groups = [
            ("verifiers", &cat.verifiers),
            ("families", &cat.families),
            ("instances", &cat.instances),
        ];
        for (group, entries) in groups {
            let sub = dir.join(group);
            for e in entries {
                let text = serde_json::to_string_pretty(&e.example).expect("fixtures serialize") + "\n";
                let written = std::fs::create_dir_all(&sub)
                    .and_then(|_| std::fs::write(sub.join(format!("{}.json", e.name)), text));
                if let Err(err) = written {
                    eprintln!("error: cannot write into {}: {err}", sub.display());
                    return ExitCode::from(EXIT_RUNTIME);
                }
            }
        }
    }
    ExitCode::SUCCESS
}

fn describe(text: &[u8], kind: DocKind) -> qct_core::Result<String> {
    Ok(match kind {
        DocKind::Circuit => {
            let c = qct_core::circuit::parse_circuit(text)?;
            format!(
                "circuit: {} input qubits, {} output qubits, {} ops, peak width {}",
                c.input_qubits(),
                c.output_qubits(),
                c.ops().len(),
                c.peak_qubits()
            )
        }
        DocKind::Verifier => {
            let v = qct_core::verifier::VerifierCircuit::parse(text)?;
            format!(
                "verifier: {} witness qubits, {} ancilla qubits, max acceptance {:.12}",
                v.witness_qubits(),
                v.ancilla_qubits(),
                v.max_accept_probability().0
            )
        }
        DocKind::KeyedFamily => {
            let f = qct_core::channel::KeyedChannelFamily::parse(text)?;
            format!(
                "keyed family: {} key bits, {} input qubits, {} output qubits",
                f.key_bits(),
                f.input_qubits(),
                f.output_qubits()
            )
        }
        DocKind::CtInstance => {
            let i = qct_core::reduction::CTInstance::parse(text)?;
            format!(
                "circuit-testing instance: {} witness, {} dummy, {} ancilla qubits",
                i.witness_qubits(),
                i.dummy_qubits(),
                i.ancilla_qubits()
            )
        }
        DocKind::DiInstance => {
            let i = qct_core::protocol::DIInstance::parse(text)?;
            format!(
                "protocol instance: {} message qubits, {} key bits, eps {}",
                i.message_qubits(),
                i.key_bits(),
                i.eps()
            )
        }
    })
}

fn validate(file: &Path, kind: DocKind) -> ExitCode {
    let text = match std::fs::read(file) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", file.display());
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match describe(&text, kind) {
        Ok(summary) => {
            println!("valid {summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("invalid: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
