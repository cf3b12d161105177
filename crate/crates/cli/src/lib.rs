//! Command-line driver: `generate`, `place`, `ablate` and `report`.
//!
//! Exit codes: 0 on success or convergence, 2 on bad input, 3 when placement
//! stopped at the iteration cap or diverged (outputs are still written).

pub mod config;
pub mod report;
pub mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use flowplace::bench::{generate, AcceleratorSpec};
use flowplace::density::BinGrid;
use flowplace::exchange::{read_design, read_pl, write_design, write_pl};
use flowplace::hierarchy::{extract_hierarchy, write_cluster_dump};
use flowplace::netlist::{hpwl, Placement};
use flowplace::optimizer::{
    dg_place_observed, intra_cluster_spread, write_trace, FlowFlags, PlacerConfig, Status,
};
use flowplace::{PlaceError, Result};

use report::{ablation_table, ArmResult, RunReport, ARMS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_CAP: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "flowplace", version, about = "Dataflow-driven global placement")]
pub struct Cli {
    /// Worker threads; 0 uses every hardware thread.
    #[arg(long, global = true, env = "FLOWPLACE_WORKERS", default_value_t = 0)]
    pub workers: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize an accelerator-style benchmark.
    Generate(GenerateArgs),
    /// Place a design.
    Place(PlaceArgs),
    /// Run the full flow and its three reduced arms and compare them.
    Ablate(AblateArgs),
    /// Measure an existing placement.
    Report(ReportArgs),
}

fn positive(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

fn fraction(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v <= 1.0 => Ok(v),
        Ok(_) => Err("must lie in (0, 1]".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn non_negative(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        Ok(_) => Err("must be a finite value >= 0".into()),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 4, value_parser = positive)]
    pub pu: usize,
    #[arg(long, default_value_t = 8, value_parser = positive)]
    pub pe: usize,
    #[arg(long, default_value_t = 16, value_parser = positive)]
    pub bitwidth: usize,
    #[arg(long, default_value_t = 20, value_parser = positive)]
    pub cells_per_bit: usize,
    /// Macros per input and per output buffer.
    #[arg(long, default_value_t = 4)]
    pub buffer_macros: usize,
    #[arg(long, default_value_t = 4)]
    pub glue_per_pe: usize,
    /// Movable area over core area.
    #[arg(long, default_value_t = 0.7, value_parser = fraction)]
    pub density: f64,
    /// Macro area over core area.
    #[arg(long, default_value_t = 0.5, value_parser = non_negative)]
    pub macro_util: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(short, long)]
    pub out: PathBuf,
    /// Design name; defaults to the output directory name.
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct ConfigArgs {
    /// `key = value` file applied before the flags below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = fraction)]
    pub target_density: Option<f64>,
    #[arg(long, value_parser = fraction)]
    pub stop_overflow: Option<f64>,
    #[arg(long)]
    pub iter0: Option<f64>,
    #[arg(long, value_parser = positive)]
    pub max_iters: Option<usize>,
    #[arg(long, value_parser = positive)]
    pub ignore_net_degree: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<PlacerConfig> {
        let mut cfg = PlacerConfig::default();
        if let Some(path) = &self.config {
            config::apply_config_file(&mut cfg, path)?;
        }
        if let Some(v) = self.target_density {
            cfg.target_density = v;
        }
        if let Some(v) = self.stop_overflow {
            cfg.stop_overflow = v;
        }
        if let Some(v) = self.iter0 {
            cfg.iter0 = v;
        }
        if let Some(v) = self.max_iters {
            cfg.max_iterations = v;
        }
        if let Some(v) = self.ignore_net_degree {
            cfg.ignore_net_degree = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct PlaceArgs {
    /// Design directory or manifest.
    pub design: PathBuf,
    #[arg(short, long)]
    pub out: PathBuf,
    #[arg(long)]
    pub no_dataflow: bool,
    #[arg(long)]
    pub no_datapath: bool,
    /// Write an SVG snapshot every N iterations, plus a final one.
    #[arg(long, value_name = "N", value_parser = positive)]
    pub svg: Option<usize>,
    /// Also write the cluster dump.
    #[arg(long)]
    pub dump: bool,
    #[command(flatten)]
    pub cfg: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    pub design: PathBuf,
    /// Write the table here as well as to stdout.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub cfg: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    pub design: PathBuf,
    /// Placement to measure instead of the design's own.
    #[arg(long)]
    pub pl: Option<PathBuf>,
    #[command(flatten)]
    pub cfg: ConfigArgs,
}

pub fn exit_code(err: &PlaceError) -> i32 {
    match err {
        PlaceError::Dimension { .. } => EXIT_INTERNAL,
        _ => EXIT_INPUT,
    }
}

fn status_code(s: Status) -> i32 {
    match s {
        Status::Converged => EXIT_OK,
        Status::MaxIterations | Status::Diverged => EXIT_CAP,
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.workers).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start {} workers: {e}", cli.workers);
            return EXIT_INTERNAL;
        }
    };
    let result = pool.install(|| match &cli.command {
        Command::Generate(a) => cmd_generate(a).map(|_| EXIT_OK),
        Command::Place(a) => cmd_place(a).map(|r| status_code(r.status)),
        Command::Ablate(a) => cmd_ablate(a).map(|t| {
            print!("{t}");
            EXIT_OK
        }),
        Command::Report(a) => cmd_report(a).map(|t| {
            print!("{t}");
            EXIT_OK
        }),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn design_name(path: &Path) -> String {
    let p = if path.is_dir() { path } else { path.parent().unwrap_or(path) };
    p.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "design".into())
}

pub fn cmd_generate(a: &GenerateArgs) -> Result<()> {
    if a.buffer_macros > 0 && a.macro_util >= a.density {
        return Err(PlaceError::Parameter(format!(
            "--macro-util ({}) must be below --density ({})",
            a.macro_util, a.density
        )));
    }
    let spec = AcceleratorSpec {
        pu_rows: a.pu,
        pes_per_pu: a.pe,
        bitwidth: a.bitwidth,
        cells_per_bit: a.cells_per_bit,
        buffer_macros: a.buffer_macros,
        glue_per_pe: a.glue_per_pe,
        target_density: a.density,
        macro_util: a.macro_util,
        seed: a.seed,
    };
    let nl = generate::<f64>(&spec)?;
    let (cx, cy) = nl.core.center();
    let pl = Placement::uniform(&nl, cx, cy);
    let name = a.name.clone().unwrap_or_else(|| {
        a.out
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "design".into())
    });
    let d = write_design(&nl, &pl, &a.out, &name)?;
    log::info!(
        "wrote {} ({} instances, {} nets) to {}",
        d.name,
        nl.instances.len(),
        nl.nets.len(),
        d.dir.display()
    );
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| PlaceError::io(path, e))
}

pub fn cmd_place(a: &PlaceArgs) -> Result<RunReport> {
    let start = Instant::now();
    let cfg = a.cfg.resolve()?;
    let flags = FlowFlags {
        use_dataflow: !a.no_dataflow,
        use_datapath: !a.no_datapath,
    };
    let t_read = Instant::now();
    let (nl, _) = read_design::<f64>(&a.design)?;
    let mut io = t_read.elapsed();
    fs::create_dir_all(&a.out).map_err(|e| PlaceError::io(&a.out, e))?;
    let name = design_name(&a.design);

    // The flow extracts the same clusters internally; this copy colors snapshots.
    let clusters = match a.svg {
        Some(_) => {
            let (min, max) = cfg.cluster_bounds(nl.movable_count());
            extract_hierarchy(&nl, min, max)?
        }
        None => Vec::new(),
    };
    let mut svg_err = None;
    let mut svg_time = Duration::ZERO;
    let svg_dir = a.out.join("svg");
    if a.svg.is_some() {
        fs::create_dir_all(&svg_dir).map_err(|e| PlaceError::io(&svg_dir, e))?;
    }
    let res = dg_place_observed(&nl, &cfg, flags, &mut |row, pl| {
        let Some(every) = a.svg else { return };
        if row.iter % every != 0 || svg_err.is_some() {
            return;
        }
        let t = Instant::now();
        let path = svg_dir.join(format!("iter_{:05}.svg", row.iter));
        let title = format!("{name} iter {}", row.iter);
        if let Err(e) = svg::write_layout_svg(&nl, pl, &clusters, &title, &path) {
            svg_err = Some(e);
        }
        svg_time += t.elapsed();
    })?;
    if let Some(e) = svg_err {
        return Err(e);
    }

    let t_write = Instant::now();
    write_pl(&nl, &res.placement, &a.out.join("placed.pl"))?;
    write_trace(&res.trace, &a.out.join("trace.csv"))?;
    if a.svg.is_some() {
        svg::write_layout_svg(&nl, &res.placement, &res.clusters, &format!("{name} final"), &svg_dir.join("final.svg"))?;
    }
    if a.dump {
        write_cluster_dump(&nl, &res.clusters, &a.out.join("clusters.txt"))?;
    }
    io += t_write.elapsed() + svg_time;

    let mut rep = RunReport {
        design: name,
        flags,
        hpwl: res.hpwl,
        overflow: res.final_overflow(),
        spread: intra_cluster_spread(&res.clusters, &res.placement),
        iterations: res.trace.len(),
        status: res.status,
        extraction: res.times.extraction,
        cluster_place: res.times.cluster_place,
        flat_place: res.times.flat_place.saturating_sub(svg_time),
        io,
        wall: Duration::ZERO,
    };
    let report_path = a.out.join("report.txt");
    rep.wall = start.elapsed();
    write_file(&report_path, &rep.render())?;
    log::info!(
        "{}: {} after {} iterations, hpwl {:.1}, overflow {:.4}",
        rep.design,
        report::status_name(rep.status),
        rep.iterations,
        rep.hpwl,
        rep.overflow
    );
    Ok(rep)
}

pub fn cmd_ablate(a: &AblateArgs) -> Result<String> {
    let cfg = a.cfg.resolve()?;
    let (nl, _) = read_design::<f64>(&a.design)?;
    let mut rows = Vec::with_capacity(ARMS.len());
    for (arm, flags) in ARMS {
        let res = dg_place_observed(&nl, &cfg, flags, &mut |_, _| {})?;
        log::info!("arm {arm}: {} iterations", res.trace.len());
        rows.push(ArmResult {
            arm,
            hpwl: res.hpwl,
            spread: intra_cluster_spread(&res.clusters, &res.placement),
            iterations: res.trace.len(),
            status: res.status,
        });
    }
    let table = ablation_table(&rows);
    if let Some(path) = &a.out {
        write_file(path, &table)?;
    }
    Ok(table)
}

pub fn cmd_report(a: &ReportArgs) -> Result<String> {
    let cfg = a.cfg.resolve()?;
    let (nl, own) = read_design::<f64>(&a.design)?;
    let pl = match &a.pl {
        Some(p) => read_pl(&nl, p)?,
        None => own,
    };
    let mut grid = BinGrid::for_netlist(&nl, cfg.target_density)?;
    grid.deposit(&nl, &pl)?;
    let (min, max) = cfg.cluster_bounds(nl.movable_count());
    let clusters = extract_hierarchy(&nl, min, max)?;
    Ok(format!(
        "design {}\ninstances {}\nnets {}\nclusters {}\nhpwl {:.4}\noverflow {:.6}\nspread {:.4}\n",
        design_name(&a.design),
        nl.instances.len(),
        nl.nets.len(),
        clusters.len(),
        hpwl(&nl, &pl)?,
        grid.overflow(),
        intra_cluster_spread(&clusters, &pl)
    ))
}
