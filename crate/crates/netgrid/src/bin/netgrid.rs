use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use netgrid::ir::{parse::parse_netlist_named, print_netlist};
use netgrid::lower::{build::lower_netlist, text::print_lower};
use netgrid::machine::{simulate, GridConfig};
use netgrid::opt::OptConfig;
use netgrid::pipeline::{build_lowered, BuildOptions, Partitioner};
use netgrid::report::{report, to_json};
use netgrid::sched::bootstream;
use netgrid::{gen, Error};

#[derive(Parser)]
#[command(name = "netgrid", about = "Compile and simulate netlists on a grid of 16-bit cores")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compile a netlist (.mntl) to a bootstream.
    Compile(CompileArgs),
    /// Execute a bootstream on the cycle-accurate machine.
    Run(RunArgs),
    /// Emit a built-in benchmark netlist.
    Gen(GenArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum PartitionerArg {
    Balanced,
    Lpt,
}

#[derive(Args)]
struct CompileArgs {
    /// Netlist source file.
    input: PathBuf,
    /// Output bootstream path; defaults to the input with extension `.boot`.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Grid size as WxH, e.g. 4x4.
    #[arg(long, default_value = "2x2")]
    grid: String,
    #[arg(long, value_enum, default_value = "balanced")]
    partitioner: PartitionerArg,
    /// Placement seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Disable custom-function synthesis.
    #[arg(long)]
    no_custom_functions: bool,
    /// Disable constant folding.
    #[arg(long)]
    no_fold: bool,
    /// Disable common-subexpression elimination.
    #[arg(long)]
    no_cse: bool,
    /// Disable dead-code elimination.
    #[arg(long)]
    no_dce: bool,
    /// Override the def-use latency.
    #[arg(long)]
    def_use_latency: Option<u32>,
    /// Override the per-hop message latency.
    #[arg(long)]
    hop_latency: Option<u32>,
    /// Write a JSON compilation report here.
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Dump the optimized, partitioned intermediate program here.
    #[arg(long)]
    dump_lower: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Bootstream produced by `compile`.
    bootstream: PathBuf,
    /// Vcycles to execute (stops early on a stop exception).
    #[arg(long, default_value_t = 1024)]
    vcycles: u64,
    #[arg(long, default_value_t = 100)]
    dram_latency: u32,
    #[arg(long, default_value_t = 0)]
    cache_hit_latency: u32,
    /// Print every traced register after every vcycle.
    #[arg(long)]
    trace: bool,
    /// Write a JSON run report here.
    #[arg(long)]
    metrics: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[command(subcommand)]
    kind: GenKind,
    /// Output path; stdout if omitted.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GenKind {
    /// k independent counters of the given width.
    Counters {
        #[arg(long, default_value_t = 8)]
        k: usize,
        #[arg(long, default_value_t = 13)]
        width: u32,
    },
    /// Sequential read-modify-write sweep over a buffer.
    Fifo {
        #[arg(long, default_value_t = 1024)]
        bytes: u64,
        /// Place the buffer in global (DRAM-backed) memory.
        #[arg(long)]
        global: bool,
    },
    /// Pseudo-random loads and stores over a buffer.
    Ram {
        #[arg(long, default_value_t = 4096)]
        bytes: u64,
        /// Place the buffer in global (DRAM-backed) memory.
        #[arg(long)]
        global: bool,
    },
    /// Random feed-forward dataflow design.
    Dag {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 60)]
        instrs: usize,
        #[arg(long, default_value_t = 6)]
        regs: usize,
        #[arg(long, default_value_t = 48)]
        max_width: u32,
        #[arg(long, default_value_t = 0)]
        mems: usize,
        /// Bias operation choice towards bitwise logic.
        #[arg(long)]
        logic_bias: bool,
        #[arg(long, default_value_t = 0)]
        displays: usize,
    },
}

fn parse_grid(s: &str) -> Result<(u32, u32), Error> {
    let bad = || Error::Invalid(format!("bad grid `{s}`, expected WxH"));
    let (w, h) = s.split_once('x').ok_or_else(bad)?;
    let w = w.parse().map_err(|_| bad())?;
    let h = h.parse().map_err(|_| bad())?;
    if w == 0 || h == 0 {
        return Err(bad());
    }
    Ok((w, h))
}

fn compile(args: CompileArgs) -> Result<ExitCode, Error> {
    let src = fs::read_to_string(&args.input)?;
    let file = args.input.display().to_string();
    let net = parse_netlist_named(&src, &file)?;

    let (w, h) = parse_grid(&args.grid)?;
    let mut grid = GridConfig::new(w, h);
    if let Some(l) = args.def_use_latency {
        grid.model.def_use_latency = l;
    }
    if let Some(l) = args.hop_latency {
        grid.model.hop_latency = l;
    }
    let opts = BuildOptions {
        grid,
        partitioner: match args.partitioner {
            PartitionerArg::Balanced => Partitioner::Balanced,
            PartitionerArg::Lpt => Partitioner::Lpt,
        },
        seed: args.seed,
        custom_functions: !args.no_custom_functions,
        opt: OptConfig {
            fold: !args.no_fold,
            cse: !args.no_cse,
            dce: !args.no_dce,
        },
    };

    let low = lower_netlist(&net)?;
    if let Some(path) = &args.dump_lower {
        // dump reflects the program as scheduled: optimized and partitioned
        let mut dumped = low.clone();
        netgrid::opt::optimize(&mut dumped, &opts.opt);
        let mut dumped = netgrid::parallel::split(&dumped)?;
        netgrid::parallel::merge_balanced(&mut dumped, grid.cores() as usize)?;
        if opts.custom_functions {
            netgrid::cf::synthesize(&mut dumped);
        }
        fs::write(path, print_lower(&dumped))?;
    }
    let sched = build_lowered(low, &opts)?;

    let out = args
        .output
        .unwrap_or_else(|| args.input.with_extension("boot"));
    fs::write(&out, bootstream::encode(&sched))?;
    eprintln!(
        "{}: {} cores, vcycle length {}, {} messages/vcycle -> {}",
        sched.name,
        sched.width * sched.height,
        sched.vcycle_len,
        sched.total_sends(),
        out.display()
    );
    if let Some(path) = &args.metrics {
        fs::write(path, to_json(&report(&sched, None)))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn run(args: RunArgs) -> Result<ExitCode, Error> {
    let bytes = fs::read(&args.bootstream)?;
    let sched = bootstream::decode(&bytes)?;
    let mut cfg = GridConfig::new(sched.width, sched.height);
    cfg.model = sched.model;
    cfg.dram_latency = args.dram_latency;
    cfg.cache_hit_latency = args.cache_hit_latency;

    let out = simulate(&sched, &cfg, args.vcycles)?;
    if args.trace {
        for (v, snap) in out.trace.regs.iter().enumerate() {
            let cells: Vec<String> = sched
                .trace_regs
                .iter()
                .zip(snap)
                .map(|(tr, val)| format!("{}=0x{:x}", tr.name, val))
                .collect();
            println!("vcycle {v}: {}", cells.join(" "));
        }
    }
    for (eid, v, val) in &out.trace.displays {
        println!("display {} @ vcycle {v}: 0x{val:x}", eid & 0x7fff);
    }
    if let Some(path) = &args.metrics {
        fs::write(path, to_json(&report(&sched, Some(&out.metrics))))?;
    }
    let m = &out.metrics;
    eprintln!(
        "{} vcycles, {} cycles ({} stalled, {} exception), cache {}/{} hit/miss",
        m.vcycles, m.total_cycles, m.stalled_cycles, m.exception_cycles, m.cache_hits, m.cache_misses
    );
    if m.dropped_messages > 0 || m.hazard_violations > 0 {
        eprintln!(
            "SCHEDULE BUG: {} dropped messages, {} hazard violations",
            m.dropped_messages, m.hazard_violations
        );
        return Ok(ExitCode::from(3));
    }
    if let Some(stop) = &out.trace.stop {
        eprintln!("stop exception {} at vcycle {}", stop.eid, stop.vcycle);
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn generate(args: GenArgs) -> Result<ExitCode, Error> {
    let net = match args.kind {
        GenKind::Counters { k, width } => gen::counters(k, width),
        GenKind::Fifo { bytes, global } => gen::fifo(bytes, global),
        GenKind::Ram { bytes, global } => gen::ram(bytes, global),
        GenKind::Dag {
            seed,
            instrs,
            regs,
            max_width,
            mems,
            logic_bias,
            displays,
        } => gen::random_dag(
            seed,
            &gen::DagConfig {
                instrs,
                regs,
                max_width,
                mems,
                logic_bias,
                displays,
            },
        ),
    };
    let text = print_netlist(&net);
    match &args.output {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Compile(a) => compile(a),
        Cmd::Run(a) => run(a),
        Cmd::Gen(a) => generate(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
