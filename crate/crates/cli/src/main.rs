//! `cloplan`: plan, encode, decode and check three-clothoid motion plans.

mod scenario;

use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use cloplan::chart::{feasibility_boundary, ChartWindow};
use cloplan::codec::{sample_trajectory, CodecError, MotionPlanMessage, MESSAGE_LEN};
use cloplan::collision::{path_conflicts, ConflictReport, Verdict, DEFAULT_GAP_THRESHOLD};
use cloplan::export;
use cloplan::swept::swept_boundary;
use cloplan::{plan_motion, MotionPlan, PathError, PlanError, VehicleGeometry, VehicleLimits};
use serde::{Deserialize, Serialize};

use scenario::{read_json, Scenario};

#[derive(Debug, Parser)]
#[command(name = "cloplan", version, about = "Three-clothoid motion planning for car-like vehicles")]
struct Cli {
    /// JSON vehicle limits overriding scenario and defaults.
    #[arg(long, global = true)]
    limits_file: Option<PathBuf>,
    /// JSON body geometry overriding scenario and defaults.
    #[arg(long, global = true)]
    geometry_file: Option<PathBuf>,
    /// Directory receiving the output files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Also write SVG renderings.
    #[arg(long, global = true)]
    svg: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a scenario: plan.json, trajectory.csv, plan.bin.
    Plan { scenario: PathBuf },
    /// Feasibility chart in the (Δx, Δy) plane: chart.csv.
    Chart {
        #[arg(long, default_value_t = FRAC_PI_2, allow_hyphen_values = true)]
        dpsi: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        kappa0: f64,
        #[arg(long, default_value_t = 5.0)]
        s0: f64,
        /// dx_min,dx_max,dy_min,dy_max [m].
        #[arg(long, value_delimiter = ',', num_args = 4, allow_hyphen_values = true)]
        window: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0.25)]
        resolution: f64,
    },
    /// Decode a 162-byte message into trajectory.csv.
    Decode {
        message: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        ds: f64,
    },
    /// Re-encode the message stored in a plan.json into plan.bin.
    Encode { plan: PathBuf },
    /// Check two scenarios (or one with `agent_b`) for conflicts: conflict.json.
    Conflict {
        scenario_a: PathBuf,
        scenario_b: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_GAP_THRESHOLD)]
        gap_threshold: f64,
    },
    /// Swept-volume boundary of a scenario: swept.json, swept.csv.
    Sweep { scenario: PathBuf },
}

/// Exit status with a one-line reason.
#[derive(Debug)]
struct Failure {
    code: u8,
    kind: &'static str,
    detail: String,
}

impl Failure {
    fn input(detail: impl Into<String>) -> Self {
        Failure { code: 1, kind: "invalid_input", detail: detail.into() }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Failure { code: 5, kind: "io", detail: format!("{}: {e}", path.display()) }
    }
}

impl From<PlanError> for Failure {
    fn from(e: PlanError) -> Self {
        let detail = e.to_string();
        match e {
            PlanError::Path(PathError::NoConvergence { .. }) => Failure { code: 2, kind: "no_convergence", detail },
            PlanError::InfeasibleCurvature { .. } => Failure { code: 3, kind: "infeasible_curvature", detail },
            PlanError::Velocity(_) => Failure { code: 5, kind: "speed_plan", detail },
            PlanError::Path(_) => Failure::input(detail),
        }
    }
}

impl From<CodecError> for Failure {
    fn from(e: CodecError) -> Self {
        match e {
            CodecError::Velocity(v) => Failure { code: 5, kind: "speed_plan", detail: v.to_string() },
            other => Failure { code: 1, kind: "invalid_message", detail: format!("{} (field {})", other, other.field()) },
        }
    }
}

/// Everything `plan` knows about the solved scenario.
#[derive(Debug, Serialize, Deserialize)]
struct PlanReport {
    scenario: Scenario,
    limits: VehicleLimits,
    s_f_m: f64,
    total_time_s: f64,
    max_abs_curvature_per_m: f64,
    message: MotionPlanMessage,
}

struct Context {
    limits: Option<VehicleLimits>,
    geometry: Option<VehicleGeometry>,
    out_dir: PathBuf,
    svg: bool,
}

impl Context {
    fn limits(&self, sc: &Scenario) -> VehicleLimits {
        self.limits.or(sc.limits).unwrap_or_default()
    }

    fn geometry(&self, sc: &Scenario) -> VehicleGeometry {
        self.geometry.or(sc.geometry).unwrap_or_default()
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<(), Failure> {
        let path = self.out_dir.join(name);
        fs::write(&path, bytes).map_err(|e| Failure::io(&path, e))
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), Failure> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::input(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn write_trajectory(&self, name: &str, plan: &MotionPlan, ds: f64) -> Result<Vec<cloplan::codec::TrajectorySample>, Failure> {
        let samples = sample_trajectory(plan, ds)?;
        let mut buf = Vec::new();
        export::write_trajectory_csv(&samples, &mut buf).expect("writing to memory");
        self.write(name, &buf)?;
        Ok(samples)
    }
}

/// Plans every tunable candidate and keeps the quickest feasible one.
fn plan_scenario(ctx: &Context, sc: &Scenario) -> Result<(MotionPlan, Scenario), Failure> {
    let limits = ctx.limits(sc);
    let bc = sc.boundary_condition();
    let mut best: Option<(f64, MotionPlan, (f64, f64))> = None;
    let mut first_err: Option<PlanError> = None;
    for (s0, s2) in sc.candidates() {
        match plan_motion(&bc, s0, s2, sc.v0_mps, sc.origin(), &limits) {
            Ok(p) => {
                let t = p.velocity.total_time().map_err(|e| Failure::from(PlanError::Velocity(e)))?;
                if best.as_ref().map_or(true, |b| t < b.0) {
                    best = Some((t, p, (s0, s2)));
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    match best {
        Some((_, p, (s0, s2))) => {
            let mut chosen = sc.clone();
            chosen.s0_m = s0;
            chosen.s2_m = s2;
            chosen.tunables.clear();
            chosen.agent_b = None;
            Ok((p, chosen))
        }
        None => Err(first_err.map(Failure::from).unwrap_or_else(|| Failure::input("scenario has no tunables"))),
    }
}

fn cmd_plan(ctx: &Context, file: &Path) -> Result<(), Failure> {
    let sc: Scenario = read_json(file).map_err(Failure::input)?;
    let (plan, chosen) = plan_scenario(ctx, &sc)?;
    let message = MotionPlanMessage::from_plan(&plan.path, &plan.velocity)?;
    let feas = cloplan::check_feasible(&plan.path, &ctx.limits(&sc));
    let report = PlanReport {
        limits: ctx.limits(&sc),
        scenario: chosen,
        s_f_m: plan.path.s_f(),
        total_time_s: plan.velocity.total_time().map_err(|e| Failure::from(PlanError::Velocity(e)))?,
        max_abs_curvature_per_m: feas.max_abs_curvature,
        message,
    };
    ctx.write_json("plan.json", &report)?;
    ctx.write("plan.bin", &message.to_bytes())?;
    let samples = ctx.write_trajectory("trajectory.csv", &plan, 0.1)?;
    if ctx.svg {
        ctx.write("plan.svg", export::trajectory_svg(&samples).as_bytes())?;
    }
    println!("plan: s_f = {:.3} m, T = {:.3} s, {} samples", report.s_f_m, report.total_time_s, samples.len());
    Ok(())
}

fn cmd_chart(ctx: &Context, dpsi: f64, kappa0: f64, s0: f64, window: Option<Vec<f64>>, resolution: f64) -> Result<(), Failure> {
    let window = match window.as_deref() {
        None => ChartWindow::standard(),
        Some([a, b, c, d]) => ChartWindow::new(*a, *b, *c, *d),
        Some(_) => return Err(Failure::input("--window needs dx_min,dx_max,dy_min,dy_max")),
    };
    let limits = ctx.limits.unwrap_or_default();
    let chart = feasibility_boundary(dpsi, kappa0, s0, window, resolution, &limits).map_err(|e| Failure::input(e.to_string()))?;
    let mut buf = Vec::new();
    chart.write_csv(&mut buf).expect("writing to memory");
    ctx.write("chart.csv", &buf)?;
    if ctx.svg {
        ctx.write("chart.svg", export::chart_svg(&chart).as_bytes())?;
    }
    println!("chart: {} boundary points", chart.boundary.len());
    Ok(())
}

fn cmd_decode(ctx: &Context, file: &Path, ds: f64) -> Result<(), Failure> {
    let bytes = fs::read(file).map_err(|e| Failure::input(format!("cannot read {}: {e}", file.display())))?;
    let start = Instant::now();
    let msg = MotionPlanMessage::from_bytes(&bytes)?;
    let plan = msg.to_plan()?;
    let samples = sample_trajectory(&plan, ds)?;
    let elapsed = start.elapsed();
    let mut buf = Vec::new();
    export::write_trajectory_csv(&samples, &mut buf).expect("writing to memory");
    ctx.write("trajectory.csv", &buf)?;
    if ctx.svg {
        ctx.write("plan.svg", export::trajectory_svg(&samples).as_bytes())?;
    }
    println!("decode: {} samples at ds = {ds} m in {:.3} ms", samples.len(), elapsed.as_secs_f64() * 1e3);
    Ok(())
}

fn cmd_encode(ctx: &Context, file: &Path) -> Result<(), Failure> {
    let report: PlanReport = read_json(file).map_err(Failure::input)?;
    report.message.validate()?;
    let bytes = report.message.to_bytes();
    debug_assert_eq!(bytes.len(), MESSAGE_LEN);
    ctx.write("plan.bin", &bytes)?;
    println!("encode: {MESSAGE_LEN} bytes");
    Ok(())
}

fn cmd_conflict(ctx: &Context, a: &Path, b: Option<&Path>, gap_threshold: f64) -> Result<ConflictReport, Failure> {
    let sa: Scenario = read_json(a).map_err(Failure::input)?;
    let sb: Scenario = match b {
        Some(b) => read_json(b).map_err(Failure::input)?,
        None => *sa.agent_b.clone().ok_or_else(|| Failure::input(format!("{}: no second scenario and no agent_b", a.display())))?,
    };
    let (pa, _) = plan_scenario(ctx, &sa)?;
    let (pb, _) = plan_scenario(ctx, &sb)?;
    let report = path_conflicts(&pa, &pb, gap_threshold).map_err(|e| Failure::input(e.to_string()))?;
    ctx.write_json("conflict.json", &report)?;
    if ctx.svg {
        let ta = sample_trajectory(&pa, 0.1)?;
        let tb = sample_trajectory(&pb, 0.1)?;
        ctx.write("conflict.svg", export::conflict_svg(&ta, &tb, &report).as_bytes())?;
    }
    let verdict = match report.verdict() {
        Verdict::Clear => "clear",
        Verdict::Marginal => "marginal",
        Verdict::Conflict => "conflict",
        Verdict::OverlappingPaths => "overlapping_paths",
    };
    println!(
        "conflict: {verdict}, {} crossings, {} shared stretches, min gap {}",
        report.intersections.len(),
        report.overlaps.len(),
        report
            .intersections
            .iter()
            .map(|c| c.time_gap)
            .chain(report.overlaps.iter().map(|o| o.min_time_gap))
            .fold(f64::INFINITY, f64::min)
    );
    Ok(report)
}

fn cmd_sweep(ctx: &Context, file: &Path) -> Result<(), Failure> {
    let sc: Scenario = read_json(file).map_err(Failure::input)?;
    let (plan, _) = plan_scenario(ctx, &sc)?;
    let boundary = swept_boundary(&plan.path, &ctx.geometry(&sc)).map_err(|e| Failure::input(e.to_string()))?;
    ctx.write_json("swept.json", &boundary)?;
    let mut buf = Vec::new();
    export::write_boundary_csv(&boundary, &mut buf).expect("writing to memory");
    ctx.write("swept.csv", &buf)?;
    if ctx.svg {
        let samples = sample_trajectory(&plan, 0.1)?;
        ctx.write("swept.svg", export::swept_svg(&boundary, &samples).as_bytes())?;
    }
    println!("sweep: {} curves, area {:.3} m², closure gap {:e} m", boundary.curves.len(), boundary.area(), boundary.max_gap);
    Ok(())
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("CLOPLAN_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| Failure::input(format!("CLOPLAN_THREADS={v} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Failure::input(e.to_string()))
}

fn run(cli: Cli) -> Result<u8, Failure> {
    configure_threads()?;
    let limits = cli.limits_file.as_deref().map(read_json::<VehicleLimits>).transpose().map_err(Failure::input)?;
    let geometry = cli.geometry_file.as_deref().map(read_json::<VehicleGeometry>).transpose().map_err(Failure::input)?;
    if let Some(l) = &limits {
        l.validate().map_err(|m| Failure::input(format!("limits: {m}")))?;
    }
    if let Some(g) = &geometry {
        g.validate().map_err(|m| Failure::input(format!("geometry: {m}")))?;
    }
    fs::create_dir_all(&cli.out_dir).map_err(|e| Failure::io(&cli.out_dir, e))?;
    let ctx = Context { limits, geometry, out_dir: cli.out_dir, svg: cli.svg };
    match cli.command {
        Command::Plan { scenario } => cmd_plan(&ctx, &scenario)?,
        Command::Chart { dpsi, kappa0, s0, window, resolution } => cmd_chart(&ctx, dpsi, kappa0, s0, window, resolution)?,
        Command::Decode { message, ds } => cmd_decode(&ctx, &message, ds)?,
        Command::Encode { plan } => cmd_encode(&ctx, &plan)?,
        Command::Conflict { scenario_a, scenario_b, gap_threshold } => {
            if cmd_conflict(&ctx, &scenario_a, scenario_b.as_deref(), gap_threshold)?.has_conflict() {
                return Ok(4);
            }
        }
        Command::Sweep { scenario } => cmd_sweep(&ctx, &scenario)?,
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("cloplan: exit={} reason={} detail={:?}", f.code, f.kind, f.detail);
            ExitCode::from(f.code)
        }
    }
}
