//! Batch command-line front end: group closure, normaliser searches,
//! entangling classification, circuit simulation, and teleportation checks.
//!
//! Exit codes: 0 success, 1 classification verdict mismatch, 2 input error,
//! 3 budget exceeded.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gencliff::catalog::{
    base_group_of, run_u2_classification, CatalogError, ClassificationConfig,
};
use gencliff::cyclotomic::Cyclo;
use gencliff::group::GroupError;
use gencliff::io::{self, IoError};
use gencliff::normaliser::{
    find_normalisers, find_projective_normalisers, is_entangling, NormaliserError, SearchOptions,
};
use gencliff::simulator::{
    build_teleportation_povm, dilate_measurements, verify_teleportation, Simulator,
};

#[derive(Parser)]
#[command(name = "gencliff", version, about)]
struct Cli {
    /// Element budget for closures, tensor squares and extensions.
    #[arg(long, global = true, env = "GENCLIFF_BUDGET_ORDER", default_value_t = 10_000)]
    budget_order: usize,
    /// Ceiling on enumerated + pruned image assignments.
    #[arg(long, global = true, env = "GENCLIFF_BUDGET_ASSIGNMENTS", default_value_t = 10_000_000)]
    budget_assignments: u64,
    #[arg(long, global = true, value_enum, env = "GENCLIFF_FORMAT", default_value_t = Format::Human)]
    format: Format,
    /// Seed for any randomized sampling (teleport-check states).
    #[arg(long, global = true, env = "GENCLIFF_SEED", default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Structured,
}

#[derive(Subcommand)]
enum Cmd {
    /// Close a group from generators and report order, centre, irreducibility.
    Closure {
        /// Catalog name or path to a group file.
        group: String,
    },
    /// Linear normalisers of a group.
    Normaliser {
        group: String,
        /// Emit every representative instead of the first 32.
        #[arg(long)]
        full: bool,
    },
    /// Projective normalisers of a group.
    Projective {
        group: String,
        #[arg(long)]
        full: bool,
    },
    /// Test whether a two-qudit matrix is entangling.
    EntanglingTest { matrix: PathBuf },
    /// Classify the whole bundled catalog; nonzero exit on any verdict mismatch.
    ClassifyU2 {
        /// Odd dihedral orders to sample, comma-separated.
        #[arg(long, value_delimiter = ',')]
        dihedral_n: Option<Vec<u32>>,
        /// Root-of-Z exponents to sample, comma-separated.
        #[arg(long, value_delimiter = ',')]
        gm_m: Option<Vec<u32>>,
        /// Restrict to these entry names (default: everything).
        #[arg(long, value_delimiter = ',')]
        entries: Option<Vec<String>>,
    },
    /// Simulate a circuit file: expectation of a single-wire observable.
    Simulate {
        circuit: PathBuf,
        /// Observable: a built-in gate name (default Z).
        #[arg(long, default_value = "Z")]
        observable: String,
        #[arg(long, default_value_t = 0)]
        wire: usize,
        /// Evaluate A + A† instead of A.
        #[arg(long)]
        hermitize: bool,
    },
    /// Build the teleportation POVM of a group and verify it on sampled states.
    TeleportCheck {
        group: String,
        #[arg(long, default_value_t = 5)]
        samples: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

enum CliError {
    Io(IoError),
    Normaliser(NormaliserError),
    Catalog(CatalogError),
    Sim(gencliff::simulator::SimError),
    Input(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Io(e) => write!(f, "{e}"),
            CliError::Normaliser(e) => write!(f, "{e}"),
            CliError::Catalog(e) => write!(f, "{e}"),
            CliError::Sim(e) => write!(f, "{e}"),
            CliError::Input(m) => write!(f, "{m}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> ExitCode {
        let budget = match self {
            CliError::Io(IoError::Group(g)) => is_budget_group(g),
            CliError::Normaliser(e) => is_budget_norm(e),
            CliError::Catalog(CatalogError::Group(g)) => is_budget_group(g),
            CliError::Catalog(CatalogError::Normaliser(e)) => is_budget_norm(e),
            CliError::Sim(gencliff::simulator::SimError::Group(g)) => is_budget_group(g),
            _ => false,
        };
        if budget {
            ExitCode::from(3)
        } else {
            ExitCode::from(2)
        }
    }
}

fn is_budget_group(g: &GroupError) -> bool {
    matches!(
        g,
        GroupError::ClosureBudgetExceeded(_) | GroupError::ConductorCapExceeded(_, _)
    )
}

fn is_budget_norm(e: &NormaliserError) -> bool {
    match e {
        NormaliserError::SearchBudgetExceeded(_) => true,
        NormaliserError::Group(g) => is_budget_group(g),
        _ => false,
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Io(e)
    }
}
impl From<NormaliserError> for CliError {
    fn from(e: NormaliserError) -> Self {
        CliError::Normaliser(e)
    }
}
impl From<gencliff::simulator::SimError> for CliError {
    fn from(e: gencliff::simulator::SimError) -> Self {
        CliError::Sim(e)
    }
}

fn run(cli: &Cli) -> Result<ExitCode, CliError> {
    let opts = SearchOptions {
        max_assignments: cli.budget_assignments,
        max_order: cli.budget_order,
        ..SearchOptions::default()
    };
    match &cli.cmd {
        Cmd::Closure { group } => {
            let g = io::resolve_group(group, cli.budget_order)?;
            let centre = g
                .centre_indices()
                .iter()
                .map(|&i| g.element(i).canonical_key())
                .collect::<Vec<_>>();
            let base = base_group_of(&g).ok();
            if cli.format == Format::Structured {
                let out = serde_json::json!({
                    "order": g.len(),
                    "dim": g.dim(),
                    "irreducible": g.is_irreducible(),
                    "scalar_centre_order": g.scalar_order(),
                    "minimal_central_phase": g.minimal_central_phase().to_string(),
                    "centre_is_scalar": g.centre_is_scalar(),
                    "centre": centre,
                    "base_group": base,
                });
                println!("{}", serde_json::to_string_pretty(&out).unwrap());
            } else {
                println!("order {}, dim {}", g.len(), g.dim());
                println!("irreducible: {}", g.is_irreducible());
                println!(
                    "centre: {} elements, scalar subgroup <{} * I> of order {}",
                    centre.len(),
                    g.minimal_central_phase(),
                    g.scalar_order()
                );
                if let Some(b) = base {
                    println!("base group: {} (order {})", b.family, b.quotient_order);
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Normaliser { group, full } | Cmd::Projective { group, full } => {
            let projective = matches!(cli.cmd, Cmd::Projective { .. });
            let g = io::resolve_group(group, cli.budget_order)?;
            let report = if projective {
                find_projective_normalisers(&g, &opts)?
            } else {
                find_normalisers(&g, &opts)?
            };
            let file = io::report_to_file(&report, group, *full);
            if cli.format == Format::Structured {
                println!("{}", serde_json::to_string_pretty(&file).unwrap());
            } else {
                println!(
                    "{} normalisers found ({} mode), search group order {}",
                    file.found_count,
                    if projective { "projective" } else { "linear" },
                    file.search_group_order
                );
                for w in &file.warnings {
                    println!("warning: {w}");
                }
                for (i, f) in file.found.iter().enumerate().take(8) {
                    println!("[{i}] assignment {:?} matrix {:?}", f.assignment, f.matrix);
                }
                if file.found_count > 8 {
                    println!(
                        "... and {} more (use --format structured --full)",
                        file.found_count - 8
                    );
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::EntanglingTest { matrix } => {
            let text = std::fs::read_to_string(matrix)
                .map_err(|e| CliError::Input(format!("cannot read {matrix:?}: {e}")))?;
            let m = io::parse_matrix_file(&text)?;
            let verdict = is_entangling(&m).map_err(|e| CliError::Input(e.to_string()))?;
            if cli.format == Format::Structured {
                println!("{}", serde_json::json!({ "entangling": verdict }));
            } else {
                println!("entangling: {verdict}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::ClassifyU2 { dihedral_n, gm_m, entries } => {
            let mut config = ClassificationConfig { options: opts, ..Default::default() };
            if let Some(ns) = dihedral_n {
                config.odd_dihedral_n = ns.clone();
            }
            if let Some(ms) = gm_m {
                config.gm_m = ms.clone();
            }
            config.only_entries = entries.clone();
            match run_u2_classification(&config) {
                Ok(table) => {
                    print_table(cli.format, &table);
                    Ok(ExitCode::SUCCESS)
                }
                Err(CatalogError::VerdictMismatch(names)) => {
                    eprintln!("verdict mismatch for: {}", names.join(", "));
                    Ok(ExitCode::from(1))
                }
                Err(e) => Err(CliError::Catalog(e)),
            }
        }
        Cmd::Simulate { circuit, observable, wire, hermitize } => {
            let text = std::fs::read_to_string(circuit)
                .map_err(|e| CliError::Input(format!("cannot read {circuit:?}: {e}")))?;
            let loaded = io::load_circuit(&text, cli.budget_order)?;
            let mut sim = Simulator::new(loaded.group.clone(), cli.budget_order);
            let dilated = dilate_measurements(&mut sim, &loaded)?;
            let compiled = sim.compile(&dilated)?;
            let obs = io::named_gate(observable)?;
            let report = compiled.expectation(*wire, &obs, *hermitize)?;
            let (re, im) = report.value.to_complex();
            if cli.format == Format::Structured {
                let out = serde_json::json!({
                    "observable": observable,
                    "wire": wire,
                    "hermitized": hermitize,
                    "expectation": report.value.to_string(),
                    "expectation_float": [re, im],
                    "hermitian": report.hermitian,
                    "complex_flag": report.complex_flag,
                    "p0": report.outcome_probabilities.as_ref().map(|(p0, _)| p0.to_string()),
                    "p1": report.outcome_probabilities.as_ref().map(|(_, p1)| p1.to_string()),
                    "gate_lookups": report.gate_lookups,
                    "wires": dilated.n_wires,
                });
                println!("{}", serde_json::to_string_pretty(&out).unwrap());
            } else {
                println!(
                    "<{observable}> on wire {wire} = {} (approx {re:.12}{im:+.12}i)",
                    report.value
                );
                if let Some((p0, p1)) = &report.outcome_probabilities {
                    let (p0f, _) = p0.to_complex();
                    let (p1f, _) = p1.to_complex();
                    println!("p0 = {p0} (approx {p0f:.12})");
                    println!("p1 = {p1} (approx {p1f:.12})");
                }
                if report.complex_flag {
                    println!(
                        "note: observable is not Hermitian; expectation is complex (consider --hermitize)"
                    );
                }
                println!(
                    "propagation: {} table lookups over {} wires",
                    report.gate_lookups, dilated.n_wires
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::TeleportCheck { group, samples } => {
            let g = io::resolve_group(group, cli.budget_order)?;
            let povm = build_teleportation_povm(&g)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
            let mut all_ok = true;
            let mut reports = Vec::new();
            for _ in 0..*samples {
                let alpha = sample_state(&mut rng, g.dim());
                let report = verify_teleportation(&povm, &alpha)?;
                all_ok &= report.all_match && report.uniform_probability;
                reports.push((
                    alpha.iter().map(Cyclo::to_string).collect::<Vec<_>>(),
                    report,
                ));
            }
            if cli.format == Format::Structured {
                let out = serde_json::json!({
                    "group_order": g.len(),
                    "outcomes_per_state": povm.elements.len(),
                    "uniform_probability": format!("1/{}", g.len()),
                    "all_states_verified": all_ok,
                    "states": reports.iter().map(|(a, r)| serde_json::json!({
                        "state": a,
                        "all_match": r.all_match,
                        "uniform_probability": r.uniform_probability,
                    })).collect::<Vec<_>>(),
                });
                println!("{}", serde_json::to_string_pretty(&out).unwrap());
            } else {
                println!(
                    "POVM with {} rank-1 outcomes, completeness exact, outcome probability 1/{}",
                    povm.elements.len(),
                    g.len()
                );
                for (a, r) in &reports {
                    println!(
                        "state [{}]: conditional states {} / probabilities {}",
                        a.join(", "),
                        if r.all_match { "match exactly" } else { "MISMATCH" },
                        if r.uniform_probability { "uniform" } else { "NON-UNIFORM" },
                    );
                }
            }
            if all_ok {
                Ok(ExitCode::SUCCESS)
            } else {
                Err(CliError::Input("teleportation verification failed".into()))
            }
        }
    }
}

fn print_table(format: Format, table: &gencliff::catalog::ClassificationTable) {
    if format == Format::Structured {
        println!("{}", serde_json::to_string_pretty(table).unwrap());
        return;
    }
    println!(
        "{:<24} {:>6} {:<22} {:<26} {:>10} {:>8} verdict",
        "entry", "order", "base group", "phase classes", "entangling", "expect"
    );
    for row in &table.rows {
        println!(
            "{:<24} {:>6} {:<22} {:<26} {:>10} {:>8} {}",
            row.name,
            row.order,
            row.base_group,
            row.phase_values.join(","),
            row.entangling,
            row.expected_entangling,
            if row.verdict_match { "ok" } else { "MISMATCH" },
        );
    }
    println!("all verdicts match: {}", table.all_match);
}

/// Exact random unit vector: Pythagorean magnitudes with random root-of-unity
/// phases, so states stay inside the cyclotomic field.
fn sample_state(rng: &mut ChaCha8Rng, d: usize) -> Vec<Cyclo> {
    use gencliff::cyclotomic::CRational;
    assert_eq!(d, 2, "sampled states cover the qubit catalog");
    let triples = [(3i64, 4i64, 5i64), (5, 12, 13), (8, 15, 17), (20, 21, 29), (1, 0, 1)];
    let (a, b, c) = triples[rng.gen_range(0..triples.len())];
    let phase1 = Cyclo::root_of_unity(24, rng.gen_range(0..24));
    let phase2 = Cyclo::root_of_unity(24, rng.gen_range(0..24));
    vec![
        phase1.scale(&CRational::new(a.into(), c.into())),
        phase2.scale(&CRational::new(b.into(), c.into())),
    ]
}
