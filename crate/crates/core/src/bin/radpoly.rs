use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use radar_polygon::collision::{batch_collision, build_kernel, predictive_collision, QueryMatrix};
use radar_polygon::deformation::predict_polygon;
use radar_polygon::error::{Error, Result};
use radar_polygon::formation::form_polygon;
use radar_polygon::io::{
    format_frames, format_masks, format_polygons, load_frames, load_masks, load_polygons,
    load_queries, Config, FrameRecord, MaskRecord,
};
use radar_polygon::ism::PolygonTracker;
use radar_polygon::metrics::{
    evaluate_frames, evaluate_polygon_stream, median, prediction_iou, report_row, sweep_theta,
    Method, Report,
};
use radar_polygon::sim::{simulate, Scenario};
use radar_polygon::svg::{polygon_svg, SvgStyle};

#[derive(Parser)]
#[command(
    name = "radpoly",
    version,
    about = "Deformable radar polygon occupancy tools"
)]
struct Cli {
    /// TOML configuration file (see `default-config`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Output {
    /// Write here instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SceneArgs {
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Truncate the scenario to this many frames.
    #[arg(long)]
    frames: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Single-shot polygon per frame.
    Form {
        frames: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Recursive polygon update with the inverse sensor model.
    Track {
        frames: PathBuf,
        /// Compensate ego motion with vertex Doppler instead of poses.
        #[arg(long)]
        doppler_compensation: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Deform each polygon `dt` seconds ahead.
    Predict {
        polygons: PathBuf,
        #[arg(long)]
        dt: f64,
        /// Write `index iou` lines comparing each prediction with the next polygon.
        #[arg(long)]
        series: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Inside/outside flags for query points.
    Collide {
        polygons: PathBuf,
        queries: PathBuf,
        /// Which polygon of the stream to test against.
        #[arg(long, default_value_t = 0)]
        index: usize,
        /// Test against the polygon predicted this far ahead.
        #[arg(long)]
        dt: Option<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// Generate a frame stream and ground-truth masks.
    Simulate {
        scenario: String,
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long)]
        frames_out: PathBuf,
        #[arg(long)]
        gt_out: PathBuf,
    },
    /// Accuracy and runtime report.
    Eval {
        /// Scenario to simulate and evaluate.
        #[arg(long, conflicts_with_all = ["polygons", "gt"])]
        scenario: Option<String>,
        /// Comma separated: polygon, polygon_ism, grid.
        #[arg(
            long,
            default_value = "polygon,polygon_ism,grid",
            value_delimiter = ','
        )]
        methods: Vec<String>,
        /// Evaluate an existing polygon stream instead.
        #[arg(long, requires = "gt")]
        polygons: Option<PathBuf>,
        #[arg(long, requires = "polygons")]
        gt: Option<PathBuf>,
        #[command(flatten)]
        scene: SceneArgs,
        /// Leave timing out so the output is reproducible.
        #[arg(long)]
        omit_timing: bool,
        /// Write the machine-readable report here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// IoU and runtime against the sector width (degrees).
    SweepTheta {
        #[arg(required = true)]
        deltas: Vec<f64>,
        #[arg(long, default_value = "static_lot")]
        scenario: String,
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long)]
        omit_timing: bool,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// One SVG per polygon.
    Plot {
        polygons: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Ground-truth masks drawn underneath.
        #[arg(long)]
        gt: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        every: usize,
    },
    /// Print the default configuration.
    DefaultConfig {
        /// Include the full scenario library.
        #[arg(long)]
        with_scenarios: bool,
    },
}

fn emit(output: &Output, text: &str) -> Result<()> {
    match &output.out {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn scenario(cfg: &Config, name: &str, scene: &SceneArgs) -> Result<Scenario> {
    let mut scn = cfg.scenario(name)?;
    if let Some(seed) = scene.seed {
        scn = scn.with_seed(seed);
    }
    if let Some(n) = scene.frames {
        scn = scn.with_frames(n);
    }
    Ok(scn)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(fs::write(path, text)?)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let eval = cfg.eval;
    match cli.command {
        Command::Form { frames, output } => {
            let polys = load_frames(&frames)?
                .iter()
                .map(|f| form_polygon(&f.points, &eval.ism.formation, f.timestamp))
                .collect::<Result<Vec<_>>>()?;
            emit(&output, &format_polygons(&polys)?)
        }
        Command::Track {
            frames,
            doppler_compensation,
            output,
        } => {
            let mut tracker = PolygonTracker::new(eval.ism)?;
            let mut polys = Vec::new();
            for f in load_frames(&frames)? {
                let pose = if doppler_compensation {
                    None
                } else {
                    Some(f.pose.ok_or(Error::MissingPose(f.timestamp))?)
                };
                tracker.update(&f.points, pose, f.timestamp)?;
                polys.push(tracker.state().polygon.clone());
            }
            emit(&output, &format_polygons(&polys)?)
        }
        Command::Predict {
            polygons,
            dt,
            series,
            output,
        } => {
            let polys = load_polygons(&polygons)?;
            let predicted = polys
                .iter()
                .map(|p| predict_polygon(p, dt))
                .collect::<Result<Vec<_>>>()?;
            let res = eval.ism.formation.sector.max_range / 200.0;
            let mut ious = Vec::new();
            let mut lines = String::new();
            for (k, w) in polys.windows(2).enumerate() {
                if w[0].is_degenerate() || w[1].is_degenerate() {
                    continue;
                }
                let iou = prediction_iou(&w[0], dt, &w[1], res)?;
                lines.push_str(&format!("{k} {iou}\n"));
                ious.push(iou);
            }
            if let Some(p) = series {
                fs::write(p, lines)?;
            }
            if let Some(m) = median(&ious) {
                eprintln!("median prediction IoU over {} pairs: {m:.4}", ious.len());
            }
            emit(&output, &format_polygons(&predicted)?)
        }
        Command::Collide {
            polygons,
            queries,
            index,
            dt,
            output,
        } => {
            let polys = load_polygons(&polygons)?;
            let poly = polys.get(index).ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "polygon index {index} out of range ({} polygons)",
                    polys.len()
                ))
            })?;
            let points = load_queries(&queries)?;
            let q = QueryMatrix::from_points(&points);
            let flags = match dt {
                Some(dt) => predictive_collision(poly, dt, &q)?,
                None => batch_collision(&build_kernel(poly)?, &q),
            };
            let text: String = points
                .iter()
                .zip(flags)
                .map(|(p, f)| format!("{} {} {f}\n", p.x, p.y))
                .collect();
            emit(&output, &text)
        }
        Command::Simulate {
            scenario: name,
            scene,
            frames_out,
            gt_out,
        } => {
            let frames = simulate(&scenario(&cfg, &name, &scene)?)?;
            let records: Vec<FrameRecord> = frames.iter().map(FrameRecord::from).collect();
            let masks: Vec<MaskRecord> = frames
                .iter()
                .map(|f| MaskRecord::encode(f.timestamp, f.pose, &f.gt))
                .collect();
            fs::write(frames_out, format_frames(&records))?;
            fs::write(gt_out, format_masks(&masks)?)?;
            Ok(())
        }
        Command::Eval {
            scenario: name,
            methods,
            polygons,
            gt,
            scene,
            omit_timing,
            json,
        } => {
            let report = match (polygons, gt) {
                (Some(p), Some(g)) => {
                    let polys = load_polygons(&p)?;
                    let masks = load_masks(&g)?;
                    let poses: Vec<_> = masks.iter().map(|m| m.pose).collect();
                    let gts = masks
                        .iter()
                        .map(MaskRecord::decode)
                        .collect::<Result<Vec<_>>>()?;
                    let series = evaluate_polygon_stream(&polys, &poses, &gts, &eval)?;
                    let mut row = report_row(Method::Polygon, &series, false);
                    row.method = "external".into();
                    Report {
                        scenario: p.display().to_string(),
                        seed: cfg.seed,
                        frames: polys.len(),
                        rows: vec![row],
                    }
                }
                _ => {
                    let name = name.ok_or_else(|| {
                        Error::InvalidConfig("eval needs --scenario or --polygons with --gt".into())
                    })?;
                    let methods = methods
                        .iter()
                        .map(|m| Method::parse(m.trim()))
                        .collect::<Result<Vec<_>>>()?;
                    let scn = scenario(&cfg, &name, &scene)?;
                    let frames = simulate(&scn)?;
                    evaluate_frames(
                        &scn.name,
                        scn.rng_seed,
                        &frames,
                        &methods,
                        &eval,
                        !omit_timing,
                    )?
                }
            };
            print!("{}", report.to_table());
            if let Some(p) = json {
                write_json(&p, &report)?;
            }
            Ok(())
        }
        Command::SweepTheta {
            deltas,
            scenario: name,
            scene,
            omit_timing,
            json,
        } => {
            let scn = scenario(&cfg, &name, &scene)?;
            let frames = simulate(&scn)?;
            let rows = sweep_theta(&frames, &deltas, &eval, !omit_timing)?;
            println!(
                "{:>7} {:>7} {:>9} {:>9} {:>8} {:>9} {:>9} {:>8} {:>8} {:>8}",
                "dtheta",
                "sectors",
                "poly-gt",
                "poly-smth",
                "poly-n",
                "ism-gt",
                "ism-smth",
                "ism-n",
                "poly-ms",
                "ism-ms"
            );
            let ms = |m: Option<f64>| m.map_or("--".to_string(), |m| format!("{m:.3}"));
            for r in &rows {
                println!(
                    "{:>7} {:>7} {:>8.2}% {:>8.2}% {:>8.1} {:>8.2}% {:>8.2}% {:>8.1} {:>8} {:>8}",
                    r.delta_theta_deg,
                    r.sectors,
                    100.0 * r.polygon_iou_gt,
                    100.0 * r.polygon_iou_smooth,
                    r.polygon_vertices,
                    100.0 * r.ism_iou_gt,
                    100.0 * r.ism_iou_smooth,
                    r.ism_vertices,
                    ms(r.polygon_ms),
                    ms(r.ism_ms)
                );
            }
            if let Some(p) = json {
                write_json(&p, &rows)?;
            }
            Ok(())
        }
        Command::Plot {
            polygons,
            out_dir,
            gt,
            every,
        } => {
            let polys = load_polygons(&polygons)?;
            let masks = match gt {
                Some(g) => Some(load_masks(&g)?),
                None => None,
            };
            fs::create_dir_all(&out_dir)?;
            let style = SvgStyle::default();
            for (k, poly) in polys.iter().enumerate().step_by(every.max(1)) {
                let mask = match masks.as_ref().and_then(|m| m.get(k)) {
                    Some(m) => Some(m.decode()?),
                    None => None,
                };
                let svg = polygon_svg(poly, &eval.ism.formation.sector, mask.as_ref(), &style);
                fs::write(out_dir.join(format!("frame_{k:05}.svg")), svg)?;
            }
            Ok(())
        }
        Command::DefaultConfig { with_scenarios } => {
            let c = if with_scenarios {
                Config::with_scenario_library()
            } else {
                Config::default()
            };
            print!("{}", c.to_toml()?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        // reader went away (`radpoly form f.txt | head`)
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::UnknownName { .. } => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
