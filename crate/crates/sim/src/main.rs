use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use trust_gossip::protocol::{AttestationProtocolSet, Variant};
use trust_gossip_sim::{
    emit_csv, run_experiment, run_experiment_serial, ProtocolAssignment, SimConfig, SimError,
    TopologySpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Original,
    NoBloom,
    Naive,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Original => Variant::Original,
            VariantArg::NoBloom => Variant::NoBloom,
            VariantArg::Naive => Variant::Naive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TopologyArg {
    Er,
    Ws,
    Ba,
    Complete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Sweep {
    /// Every topology × variant × n in {20, 50, 100, 200}.
    Paper,
    /// ASR in {1.0, 0.75, 0.5, 0.25} × variant on a complete graph.
    Asr,
}

/// Simulate trust propagation over a gossip attestation network and write
/// per-round metrics as CSV.
#[derive(Debug, Parser)]
#[command(name = "trust-gossip-sim", version)]
struct Cli {
    #[arg(long, value_enum, default_value = "original")]
    variant: VariantArg,
    #[arg(long, value_enum, default_value = "complete")]
    topology: TopologyArg,
    /// Number of nodes.
    #[arg(long, default_value_t = 50)]
    n: usize,
    /// Edge probability (er, default 0.05) or rewiring probability (ws, default 0.1).
    #[arg(long)]
    p: Option<f64>,
    /// Lattice degree for ws.
    #[arg(long, default_value_t = 4)]
    k: usize,
    /// Edges per arriving node for ba.
    #[arg(long, default_value_t = 2)]
    m: usize,
    /// Resample er graphs until connected.
    #[arg(long)]
    connected: bool,
    #[arg(long, default_value_t = 500)]
    rounds: u64,
    /// Interactions sampled per round.
    #[arg(long, default_value_t = 100)]
    interactions: usize,
    /// Attestation success rate.
    #[arg(long, default_value_t = 1.0)]
    asr: f64,
    #[arg(long, default_value_t = 5)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Gate connections on certificates from the simulation's issuer.
    #[arg(long)]
    permissioned: bool,
    /// Enable epoch-keyed policy signatures.
    #[arg(long)]
    extension: bool,
    /// Rounds per key epoch with --extension.
    #[arg(long, default_value_t = 100)]
    epoch_rounds: u64,
    /// Policies expire this many rounds after attestation.
    #[arg(long)]
    expiry_rounds: Option<u64>,
    /// Split nodes into thirds supporting {1}, {1,2} and {2}.
    #[arg(long)]
    heterogeneous: bool,
    /// Also write each trial's graph as an edge list.
    #[arg(long)]
    edge_lists: bool,
    /// Run trials on the calling thread.
    #[arg(long)]
    serial: bool,
    #[arg(long, value_enum)]
    sweep: Option<Sweep>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn topology(kind: TopologyArg, cli: &Cli) -> TopologySpec {
    match kind {
        TopologyArg::Er => TopologySpec::ErdosRenyi {
            p: cli.p.unwrap_or(0.05),
            connected: cli.connected,
        },
        TopologyArg::Ws => TopologySpec::WattsStrogatz {
            k: cli.k,
            p: cli.p.unwrap_or(0.1),
        },
        TopologyArg::Ba => TopologySpec::BarabasiAlbert { m: cli.m },
        TopologyArg::Complete => TopologySpec::Complete,
    }
}

fn base_config(cli: &Cli) -> SimConfig {
    SimConfig {
        variant: cli.variant.into(),
        topology: topology(cli.topology, cli),
        n: cli.n,
        rounds: cli.rounds,
        interactions_per_round: cli.interactions,
        asr: cli.asr,
        trials: cli.trials,
        seed: cli.seed,
        permissioned: cli.permissioned,
        extension_enabled: cli.extension,
        expiry_rounds: cli.expiry_rounds,
        protocol_assignment: if cli.heterogeneous {
            ProtocolAssignment::Heterogeneous { p: 1, q: 2 }
        } else {
            ProtocolAssignment::Uniform(AttestationProtocolSet::single(1))
        },
        epoch_rounds: cli.epoch_rounds,
        ..SimConfig::default()
    }
}

fn plan(cli: &Cli) -> Vec<(SimConfig, PathBuf)> {
    let base = base_config(cli);
    match cli.sweep {
        None => vec![(base, cli.out.clone())],
        Some(Sweep::Paper) => {
            let mut jobs = Vec::new();
            for kind in [
                TopologyArg::Er,
                TopologyArg::Ws,
                TopologyArg::Ba,
                TopologyArg::Complete,
            ] {
                for variant in Variant::ALL {
                    for n in [20, 50, 100, 200] {
                        let topo = topology(kind, cli);
                        let dir = format!("{}_{}_n{n}", topo.short_name(), variant.as_str());
                        let config = SimConfig {
                            variant,
                            topology: topo,
                            n,
                            ..base.clone()
                        };
                        jobs.push((config, cli.out.join(dir)));
                    }
                }
            }
            jobs
        }
        Some(Sweep::Asr) => {
            let mut jobs = Vec::new();
            for asr in [1.0, 0.75, 0.5, 0.25] {
                for variant in Variant::ALL {
                    let config = SimConfig {
                        variant,
                        topology: TopologySpec::Complete,
                        asr,
                        ..base.clone()
                    };
                    jobs.push((
                        config,
                        cli.out.join(format!("asr{asr}_{}", variant.as_str())),
                    ));
                }
            }
            jobs
        }
    }
}

fn run(config: &SimConfig, dir: &Path, cli: &Cli) -> Result<(), SimError> {
    let result = if cli.serial {
        run_experiment_serial(config)?
    } else {
        run_experiment(config)?
    };
    emit_csv(&result, dir, cli.edge_lists)?;
    eprintln!(
        "{}: final avg_trust {:.3} ({:.1}%), mean bytes_sync/round {:.0}",
        dir.display(),
        result.final_mean("avg_trust"),
        100.0 * result.final_mean("avg_trust_pct"),
        result.round_average("bytes_sync"),
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let jobs = plan(&cli);
    // validate everything before running anything
    for (config, _) in &jobs {
        if let Err(e) = config.validate() {
            eprintln!("error: {e}\n\nFor more information, try '--help'.");
            return ExitCode::from(2);
        }
    }
    for (config, dir) in &jobs {
        if let Err(e) = run(config, dir, &cli) {
            eprintln!("error: {e}");
            return ExitCode::from(if matches!(e, SimError::Config(_)) {
                2
            } else {
                1
            });
        }
    }
    ExitCode::SUCCESS
}
