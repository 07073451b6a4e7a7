use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use trinity_core::archsim::{build_kernel_graph, ckks_workload, pbs_graph, HardwareConfig, TfheShape, WorkloadParams};
use trinity_core::bench::{self, BenchOutput, BreakdownOp};
use trinity_core::ckks::CkksParams;
use trinity_core::error::BenchError;
use trinity_core::tfhe::TfheParams;

#[derive(Parser)]
#[command(name = "trinity", version, about = "FHE kernel benchmarks and accelerator model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Table destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Summary document destination.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Format written to stdout when --out is absent.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Exit with status 1 if any check fails.
    #[arg(long)]
    check: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum CkksSet {
    Desk,
    Default,
}

impl CkksSet {
    fn params(self) -> CkksParams {
        match self {
            CkksSet::Desk => CkksParams::desk(),
            CkksSet::Default => CkksParams::default_set(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TfheSet {
    #[value(name = "Set-I")]
    SetI,
    #[value(name = "Set-II")]
    SetII,
    #[value(name = "Set-III")]
    SetIII,
}

impl TfheSet {
    fn params(self) -> TfheParams {
        match self {
            TfheSet::SetI => TfheParams::set_i(),
            TfheSet::SetII => TfheParams::set_ii(),
            TfheSet::SetIII => TfheParams::set_iii(),
        }
    }

    fn shape(self) -> TfheShape {
        match self {
            TfheSet::SetI => TfheShape::set_i(),
            TfheSet::SetII => TfheShape::set_ii(),
            TfheSet::SetIII => TfheShape::set_iii(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OpArg {
    Keyswitch,
    Pbs,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scenario {
    /// Bootstrap throughput table with and without CUs.
    Throughput,
    /// Concurrent bootstraps.
    Pbs,
    /// Multiply-rotate chains on the default CKKS set.
    Ckks,
    /// The list given by --ops.
    Ops,
}

#[derive(Args, Clone)]
struct ConfigArg {
    /// Hardware config file, or `default` for the built-in inventory.
    #[arg(long, env = "TRINITY_SIM_CONFIG", default_value = "default")]
    config: String,
}

impl ConfigArg {
    fn load(&self) -> Result<HardwareConfig, String> {
        if self.config == "default" {
            return Ok(HardwareConfig::default());
        }
        let text = std::fs::read_to_string(&self.config).map_err(|e| format!("{}: {e}", self.config))?;
        HardwareConfig::parse(&text).map_err(|e| format!("{}: {e}", self.config))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Transform round trips, convolutions and four-step equivalence.
    Kernels {
        #[command(flatten)]
        common: Common,
    },
    /// Random depth-two CKKS circuits against plaintext evaluation.
    CkksBench {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = CkksSet::Desk)]
        params: CkksSet,
        /// Shorthand for --params default.
        #[arg(long)]
        full: bool,
        #[arg(long, default_value_t = 50)]
        circuits: usize,
    },
    /// Identity-table bootstraps and NAND gates.
    TfheBench {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = TfheSet::SetI)]
        set: TfheSet,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 400)]
        nand_trials: usize,
    },
    /// CKKS to LWE to CKKS round trips.
    ConvertBench {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = CkksSet::Desk)]
        params: CkksSet,
        #[arg(long)]
        full: bool,
        #[arg(long, value_delimiter = ',', default_values_t = bench::CONVERT_SLOTS)]
        slots: Vec<usize>,
    },
    /// Transform utilization per strategy and length.
    NttUtil {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Share of multiplies spent in transforms, MACs and the rest.
    Breakdown {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = OpArg::All)]
        op: OpArg,
        #[arg(long = "N", default_value_t = 1 << 16)]
        n: usize,
        #[arg(long = "L", default_value_t = 23)]
        levels: usize,
        #[arg(long, default_value_t = 3)]
        dnum: usize,
    },
    /// Schedules a workload on the accelerator model.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, value_enum, default_value_t = Scenario::Throughput)]
        scenario: Scenario,
        #[arg(long, value_enum, default_value_t = TfheSet::SetI)]
        set: TfheSet,
        /// Concurrent streams for the pbs and ckks scenarios.
        #[arg(long, default_value_t = 16)]
        streams: usize,
        /// Comma-separated `op@level[:stream]` items.
        #[arg(long, value_delimiter = ',', value_parser = parse_op)]
        ops: Vec<trinity_core::archsim::OpDesc>,
        /// Occupancy trace destination.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
}

fn parse_op(s: &str) -> Result<trinity_core::archsim::OpDesc, String> {
    bench::parse_op(s).map_err(|e| e.to_string())
}

enum Failure {
    Usage(String),
    Run(BenchError),
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Self {
        Failure::Run(e)
    }
}

fn emit(name: &str, common: &Common, out: &BenchOutput) -> Result<bool, Failure> {
    let summary = out.summary(name, common.seed);
    let csv = format!("{}{}", summary.header.comment(), out.table.to_csv());
    match &common.out {
        Some(p) => bench::write_file(p, &csv)?,
        None => match common.format {
            Format::Csv => print!("{csv}"),
            Format::Json => print!("{}", summary.to_json()),
        },
    }
    if let Some(p) = &common.summary {
        bench::write_file(p, &summary.to_json())?;
    }
    if common.check {
        for c in &out.checks {
            eprintln!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
    }
    Ok(!common.check || out.passed())
}

fn execute(command: Command) -> Result<bool, Failure> {
    match command {
        Command::Kernels { common } => {
            let out = bench::kernels(common.seed)?;
            emit("kernels", &common, &out)
        }
        Command::CkksBench {
            common,
            params,
            full,
            circuits,
        } => {
            let p = if full {
                CkksParams::default_set()
            } else {
                params.params()
            };
            let out = bench::ckks_bench(p, common.seed, circuits)?;
            emit("ckks-bench", &common, &out)
        }
        Command::TfheBench {
            common,
            set,
            trials,
            nand_trials,
        } => {
            let out = bench::tfhe_bench(set.params(), common.seed, trials, nand_trials)?;
            emit("tfhe-bench", &common, &out)
        }
        Command::ConvertBench {
            common,
            params,
            full,
            slots,
        } => {
            let p = if full {
                CkksParams::default_set()
            } else {
                params.params()
            };
            let out = bench::convert_bench(p, common.seed, &slots)?;
            emit("convert-bench", &common, &out)
        }
        Command::NttUtil { common, config } => {
            let cfg = config.load().map_err(Failure::Usage)?;
            emit("ntt-util", &common, &bench::ntt_util(&cfg)?)
        }
        Command::Breakdown {
            common,
            op,
            n,
            levels,
            dnum,
        } => {
            let op = match op {
                OpArg::Keyswitch => BreakdownOp::KeySwitch,
                OpArg::Pbs => BreakdownOp::Pbs,
                OpArg::All => BreakdownOp::All,
            };
            emit("breakdown", &common, &bench::breakdown(op, n, levels, dnum)?)
        }
        Command::Simulate {
            common,
            config,
            scenario,
            set,
            streams,
            ops,
            trace,
        } => {
            let cfg = config.load().map_err(Failure::Usage)?;
            let graph = match scenario {
                Scenario::Throughput => return emit("simulate", &common, &bench::throughput(&cfg)?),
                Scenario::Pbs => pbs_graph(set.shape(), streams).map_err(BenchError::from)?,
                Scenario::Ckks => {
                    let shape = WorkloadParams::default().ckks;
                    ckks_workload(shape, streams, 12).map_err(BenchError::from)?
                }
                Scenario::Ops => {
                    if ops.is_empty() {
                        return Err(Failure::Usage("--scenario ops needs --ops".into()));
                    }
                    let params = WorkloadParams {
                        tfhe: set.shape(),
                        ..WorkloadParams::default()
                    };
                    build_kernel_graph(&ops, &params).map_err(BenchError::from)?
                }
            };
            let (out, trace_text) = bench::simulate(&graph, &cfg)?;
            if let Some(p) = &trace {
                bench::write_file(p, &trace_text)?;
            }
            emit("simulate", &common, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
