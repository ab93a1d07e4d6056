use std::collections::BTreeMap;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use modsynth_core::assembler::assemble_posed;
use modsynth_core::component::{load_catalog, validate_catalog};
use modsynth_core::crosscheck::{check_case, random_case};
use modsynth_core::export::{export, ExportFormat, MeshCache};
use modsynth_core::oracle::{inhabitants, DEFAULT_TERM_LIMIT};
use modsynth_core::pipeline::{solve_with, DEFAULT_EXPANSION_CAP};
use modsynth_core::repo_gen::{dynamic_expand_capped, static_repository, translate_request};
use modsynth_core::types::{parse_atom_set, typecheck};
use modsynth_core::{bom, interpret, Catalog, Request, Term};

#[derive(Debug, Parser)]
#[command(name = "modsynth", version, about = "Synthesise modular designs from typed component catalogs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a catalog and print diagnostics.
    Validate {
        #[arg(long, required = true, num_args = 1..)]
        catalog: Vec<PathBuf>,
    },
    /// Solve a request and write results.json.
    Solve {
        #[arg(long, required = true, num_args = 1..)]
        catalog: Vec<PathBuf>,
        #[arg(long)]
        request: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the pruned tree grammar, one rule per line.
        #[arg(long)]
        dump_grammar: Option<PathBuf>,
        /// Write the (dynamic) repository, one combinator per line.
        #[arg(long)]
        dump_repo: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_EXPANSION_CAP)]
        expansion_cap: u64,
    },
    /// Print the bill of materials of a term.
    Bom {
        #[arg(long, required = true, num_args = 1..)]
        catalog: Vec<PathBuf>,
        /// e.g. `base.ground(cap.bottom)`; bare component ids are accepted
        /// for components with a single provided point.
        #[arg(long)]
        term: String,
    },
    /// Assemble a term and export the scene.
    Assemble {
        #[arg(long, required = true, num_args = 1..)]
        catalog: Vec<PathBuf>,
        #[arg(long)]
        term: String,
        #[arg(long, default_value = "scene-json")]
        format: ExportFormat,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Revolute joint angle in radians for a child instance, `i3=0.5`.
        #[arg(long = "angle", value_parser = parse_angle)]
        angles: Vec<(String, f64)>,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        /// Storage root; defaults to $MODSYNTH_STORAGE.
        #[arg(long)]
        storage: Option<PathBuf>,
        /// Static UI directory served at `/`.
        #[arg(long)]
        ui: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_EXPANSION_CAP)]
        expansion_cap: u64,
    },
    /// Brute-force enumeration, for cross-checking `solve`.
    Oracle {
        #[arg(long, required = true, num_args = 1..)]
        catalog: Vec<PathBuf>,
        /// Goal atom set, e.g. `tower` or `arm & base`.
        #[arg(long, conflicts_with = "request", required_unless_present = "request")]
        goal: Option<String>,
        #[arg(long)]
        request: Option<PathBuf>,
        /// Defaults to the request's bound, or 6 with `--goal`.
        #[arg(long)]
        max_size: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_TERM_LIMIT)]
        limit: usize,
    },
    /// Compare `solve` with the oracle on seeded random catalogs.
    Crosscheck {
        #[arg(long, default_value_t = 256)]
        cases: u64,
        #[arg(long, default_value_t = 0)]
        first_seed: u64,
        #[arg(long, default_value_t = 6)]
        max_size: usize,
        #[arg(long, default_value_t = DEFAULT_TERM_LIMIT)]
        limit: usize,
    },
}

/// Exit 1 for bad input, 2 for everything else.
enum Failure {
    Invalid(String),
    Internal(String),
}

type CliResult = Result<(), Failure>;

fn invalid(e: impl std::fmt::Display) -> Failure {
    Failure::Invalid(e.to_string())
}

fn internal(e: impl std::fmt::Display) -> Failure {
    Failure::Internal(e.to_string())
}

fn parse_angle(s: &str) -> Result<(String, f64), String> {
    let (id, value) = s.split_once('=').ok_or("expected INSTANCE=RADIANS")?;
    let value: f64 = value.parse().map_err(|e| format!("bad angle `{value}`: {e}"))?;
    Ok((id.to_string(), value))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Internal(m)) => {
            eprintln!("internal error: {m}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> CliResult {
    match command {
        Command::Validate { catalog } => validate(&catalog),
        Command::Solve { catalog, request, out, dump_grammar, dump_repo, expansion_cap } => {
            let catalog = catalog_at(&catalog)?;
            let request = read_request(&request)?;
            let outcome = solve_with(&catalog, &request, expansion_cap, |_| {}).map_err(|e| match e {
                modsynth_core::SolveError::Request(_) | modsynth_core::SolveError::Expansion(_) => invalid(e),
                other => internal(other),
            })?;
            if let Some(path) = dump_grammar {
                write_out(Some(&path), outcome.grammar.dump().as_bytes())?;
            }
            if let Some(path) = dump_repo {
                write_out(Some(&path), outcome.repository.dump().as_bytes())?;
            }
            let doc = &outcome.document;
            write_out(out.as_deref(), doc.to_json().as_bytes())?;
            eprintln!(
                "count: {}; {} result(s){}; {:.1} ms",
                doc.count,
                doc.results.len(),
                if doc.truncated { " (truncated)" } else { "" },
                outcome.elapsed.as_secs_f64() * 1e3
            );
            Ok(())
        }
        Command::Bom { catalog, term } => {
            let catalog = catalog_at(&catalog)?;
            let term = checked_term(&catalog, &term)?;
            let program = interpret(&term, &static_repository(&catalog), &catalog).map_err(invalid)?;
            let b = bom(&program, &catalog).map_err(internal)?;
            let text = serde_json::to_string_pretty(&b).map_err(internal)? + "\n";
            write_out(None, text.as_bytes())
        }
        Command::Assemble { catalog, term, format, out, angles } => {
            let catalog = catalog_at(&catalog)?;
            let term = checked_term(&catalog, &term)?;
            let program = interpret(&term, &static_repository(&catalog), &catalog).map_err(invalid)?;
            let angles: BTreeMap<String, f64> = angles.into_iter().collect();
            let scene = assemble_posed(&program, &catalog, &angles).map_err(internal)?;
            let exported = export(&scene, format, &catalog, &MeshCache::new());
            for w in &exported.warnings {
                eprintln!("warning: {w}");
            }
            write_out(out.as_deref(), &exported.bytes)
        }
        Command::Serve { port, host, storage, ui, expansion_cap } => {
            let storage = modsynth_service::storage_root(storage);
            let config = modsynth_service::Config { expansion_cap, ui_dir: ui, ..Default::default() };
            let runtime = tokio::runtime::Runtime::new().map_err(internal)?;
            runtime.block_on(modsynth_service::serve(SocketAddr::new(host, port), storage, config)).map_err(internal)
        }
        Command::Oracle { catalog, goal, request, max_size, limit } => {
            let catalog = catalog_at(&catalog)?;
            let request = match (goal, request) {
                (Some(goal), _) => Request::new(parse_atom_set(&goal).map_err(invalid)?).bounded(6, usize::MAX),
                (None, Some(path)) => read_request(&path)?,
                (None, None) => return Err(invalid("either --goal or --request is required")),
            };
            request.validate(&catalog).map_err(invalid)?;
            let repo = dynamic_expand_capped(&static_repository(&catalog), &request, &catalog, DEFAULT_EXPANSION_CAP)
                .map_err(invalid)?;
            let max_size = max_size.unwrap_or(request.max_size);
            let terms = inhabitants(&repo, catalog.taxonomy(), &translate_request(&request), max_size, limit)
                .map_err(invalid)?;
            let mut text = String::new();
            for t in &terms {
                text.push_str(&t.map_ids(&|id| repo.origin_of(id).to_string()).to_string());
                text.push('\n');
            }
            eprintln!("{} term(s) up to size {max_size}", terms.len());
            write_out(None, text.as_bytes())
        }
        Command::Crosscheck { cases, first_seed, max_size, limit } => {
            let mut terms = 0;
            let mut failures = 0;
            for seed in first_seed..first_seed.saturating_add(cases) {
                match check_case(&random_case(seed, max_size), limit) {
                    Ok(report) => terms += report.terms.len(),
                    Err(v) => {
                        failures += 1;
                        println!("{v}");
                    }
                }
            }
            println!("{cases} case(s), {terms} term(s), {failures} failure(s)");
            if failures > 0 {
                Err(internal(format!("{failures} case(s) disagree with the oracle")))
            } else {
                Ok(())
            }
        }
    }
}

fn validate(paths: &[PathBuf]) -> CliResult {
    let catalog = catalog_at(paths)?;
    let mut errors = 0;
    for (id, diags) in validate_catalog(&catalog) {
        for d in diags {
            errors += usize::from(d.is_error());
            println!("{id}: {d}");
        }
    }
    println!(
        "{} component(s), {} taxonomy node(s), {errors} error(s)",
        catalog.len(),
        catalog.taxonomy().nodes().len()
    );
    if errors > 0 {
        Err(Failure::Invalid(format!("catalog has {errors} error(s)")))
    } else {
        Ok(())
    }
}

fn catalog_at(paths: &[PathBuf]) -> Result<Catalog, Failure> {
    let catalog = load_catalog(paths).map_err(invalid)?;
    // meshes resolve against the first directory given
    Ok(match paths.iter().find(|p| p.is_dir()) {
        Some(dir) => catalog.with_root(dir),
        None => catalog,
    })
}

fn read_request(path: &Path) -> Result<Request, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

/// Parses a term, expanding bare component ids, and typechecks it.
fn checked_term(catalog: &Catalog, text: &str) -> Result<Term, Failure> {
    let term = Term::parse(text).map_err(invalid)?;
    let repo = static_repository(catalog);
    let term = term.map_ids(&|id| {
        if repo.get(id).is_some() {
            return id.to_string();
        }
        let provided: Vec<&String> = catalog
            .component(id)
            .map(|c| c.connection_points.iter().filter(|p| p.provided.is_some()).map(|p| &p.id).collect())
            .unwrap_or_default();
        match provided[..] {
            [only] => format!("{id}.{only}"),
            _ => id.to_string(),
        }
    });
    typecheck(&repo, catalog.taxonomy(), &term).map_err(invalid)?;
    Ok(term)
}

fn write_out(path: Option<&Path>, bytes: &[u8]) -> CliResult {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| internal(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes).and_then(|_| out.flush()).map_err(internal)
        }
    }
}
