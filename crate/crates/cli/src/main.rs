//! `smokedet`: run the detector over a clip, train its classifiers,
//! benchmark texture kernels, score event streams against ground truth
//! and generate synthetic test clips.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use smokedet_core::classify::SvmModel;
use smokedet_core::ingest::{load_sequence, write_pgm, write_ppm, Frame};
use smokedet_core::pipeline::{
    annotate_frame, evaluate, read_events_jsonl, read_video_manifest, run_detection,
    train_from_paths, write_events_jsonl, Detector, GroundTruth, PipelineConfig, SpacetimeModel,
};
use smokedet_core::synth::{
    flicker_scene, gray_mover_scene, plume_scene, red_intruder_scene, static_scene, SceneParams,
};
use smokedet_core::texture::{
    benchmark_descriptors, load_image_set, write_benchmark_csv, BenchmarkParams, Kernel,
    ALL_KERNELS,
};

#[derive(Parser)]
#[command(name = "smokedet", version, about = "Block-based video smoke detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the detection pipeline over a clip; alarmed frames go to stdout
    /// as JSON lines
    Detect {
        /// Y4M file, or a directory of PPM/PGM frames in name order
        #[arg(long)]
        input: PathBuf,
        /// Pipeline configuration (JSON)
        #[arg(long)]
        config: PathBuf,
        /// Trained texture classifier
        #[arg(long)]
        texture_model: PathBuf,
        /// Trained space-time classifier
        #[arg(long)]
        spacetime_model: PathBuf,
        /// Write annotated frames and alarm-history maps here
        #[arg(long)]
        dump_frames: Option<PathBuf>,
        /// Write per-frame stage counts and timings as CSV
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Train the texture and space-time classifiers from labeled clips
    Train {
        /// Manifest listing smoke clips, one path per line
        #[arg(long)]
        smoke: PathBuf,
        /// Manifest listing smoke-free clips, one path per line
        #[arg(long)]
        nonsmoke: PathBuf,
        /// Pipeline configuration (JSON)
        #[arg(long)]
        config: PathBuf,
        /// Output directory for texture.json, spacetime.json, report.json
        #[arg(long)]
        out: PathBuf,
    },
    /// Score texture kernels on a labeled image set and write a CSV report
    BenchDescriptors {
        /// Manifest of `path<TAB>label` lines (labels: smoke / nonsmoke)
        #[arg(long)]
        dataset: PathBuf,
        /// Comma-separated kernel names, or "all"
        #[arg(long, default_value = "all")]
        kernels: String,
        /// Output CSV path
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare a detection event stream against ground-truth smoke spans
    Eval {
        /// Events as JSON lines (the `detect` stdout)
        #[arg(long)]
        events: PathBuf,
        /// Ground truth: `frames N` then `smoke START END` lines
        #[arg(long)]
        truth: PathBuf,
    },
    /// Generate a synthetic clip as numbered PPM frames
    Synth {
        #[arg(long, value_enum)]
        scene: SceneKind,
        /// Output directory (created if missing)
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 320)]
        width: usize,
        #[arg(long, default_value_t = 240)]
        height: usize,
        #[arg(long, default_value_t = 60)]
        frames: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Frame the plume starts growing (plume scenes only)
        #[arg(long, default_value_t = 5)]
        onset: usize,
        /// Consecutive puff frames per burst (flicker scenes only)
        #[arg(long, default_value_t = 3)]
        burst_len: usize,
        /// Frames between burst starts (flicker scenes only)
        #[arg(long, default_value_t = 20)]
        period: usize,
    },
    /// Print the default pipeline configuration as JSON
    InitConfig {
        /// Write to a file instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SceneKind {
    /// Textured background with sensor noise only
    Static,
    /// Smoke plume rising from the bottom center
    Plume,
    /// Red-and-black striped body moving down
    RedIntruder,
    /// Gray checkerboard body moving up
    GrayMover,
    /// Short smoke puffs separated by clean gaps
    Flicker,
}

fn main() {
    if let Err(err) = run(Cli::parse()) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Detect {
            input,
            config,
            texture_model,
            spacetime_model,
            dump_frames,
            metrics,
        } => detect(input, config, texture_model, spacetime_model, dump_frames, metrics),
        Command::Train {
            smoke,
            nonsmoke,
            config,
            out,
        } => train(smoke, nonsmoke, config, out),
        Command::BenchDescriptors {
            dataset,
            kernels,
            out,
        } => bench_descriptors(dataset, &kernels, out),
        Command::Eval { events, truth } => eval(events, truth),
        Command::Synth {
            scene,
            out,
            width,
            height,
            frames,
            seed,
            onset,
            burst_len,
            period,
        } => synth(scene, out, width, height, frames, seed, onset, burst_len, period),
        Command::InitConfig { out } => init_config(out),
    }
}

fn detect(
    input: PathBuf,
    config: PathBuf,
    texture_model: PathBuf,
    spacetime_model: PathBuf,
    dump_frames: Option<PathBuf>,
    metrics: Option<PathBuf>,
) -> Result<()> {
    let cfg = PipelineConfig::load(&config)?;
    let texture = SvmModel::load(&texture_model)?;
    let spacetime = SpacetimeModel::load(&spacetime_model)?;

    let mut source = load_sequence(&input)?;
    let first = match source.next() {
        Some(frame) => frame?,
        None => bail!("no frames in {}", input.display()),
    };
    let mut detector = Detector::new(cfg, texture, spacetime, first.width, first.height)?;
    let grid = *detector.grid();

    if let Some(dir) = &dump_frames {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating {}", dir.display()))?;
    }
    let (events, report) = run_detection(
        std::iter::once(Ok(first)).chain(source),
        &mut detector,
        |frame, result, shi| {
            if let Some(dir) = &dump_frames {
                let annotated = annotate_frame(frame, &grid, &result.blocks);
                write_ppm(
                    &dir.join(format!("frame_{:06}.ppm", frame.index)),
                    annotated.width,
                    annotated.height,
                    &annotated.pixels,
                )?;
                write_pgm(
                    &dir.join(format!("shi_{:06}.pgm", frame.index)),
                    grid.cols,
                    grid.rows,
                    &shi.to_gray(),
                )?;
            }
            Ok(())
        },
    )?;

    let stdout = std::io::stdout();
    write_events_jsonl(&mut stdout.lock(), &events)?;

    if let Some(path) = &metrics {
        let mut file = fs::File::create(path)
            .with_context(|| format!("creating {}", path.display()))?;
        report.write_csv(&mut file)?;
    }
    eprintln!(
        "{} frames, {} alarmed, first alarm {}, {:.1} ms/frame",
        report.frames,
        report.alarm_frames,
        report
            .first_alarm_frame
            .map_or_else(|| "-".into(), |f| f.to_string()),
        1000.0 * report.mean_frame_s,
    );
    Ok(())
}

fn train(smoke: PathBuf, nonsmoke: PathBuf, config: PathBuf, out: PathBuf) -> Result<()> {
    let cfg = PipelineConfig::load(&config)?;
    let smoke_paths = read_video_manifest(&smoke)?;
    let nonsmoke_paths = read_video_manifest(&nonsmoke)?;
    eprintln!(
        "training on {} smoke and {} smoke-free clips",
        smoke_paths.len(),
        nonsmoke_paths.len()
    );
    let trained = train_from_paths(&smoke_paths, &nonsmoke_paths, &cfg)?;
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    trained.save_to_dir(&out)?;

    let report = &trained.report;
    println!(
        "samples: {} smoke, {} smoke-free",
        report.smoke.kept, report.nonsmoke.kept
    );
    let best = report.texture.best();
    println!(
        "texture: C={} gamma={} mean accuracy {:.4}",
        best.c, best.gamma, best.mean_accuracy
    );
    for part in &report.spacetime {
        let best = part.report.best();
        println!(
            "space-time [{}]: C={} gamma={} mean accuracy {:.4}",
            part.part, best.c, best.gamma, best.mean_accuracy
        );
    }
    println!("models written to {}", out.display());
    Ok(())
}

fn bench_descriptors(dataset: PathBuf, kernels: &str, out: PathBuf) -> Result<()> {
    let set = load_image_set(&dataset)?;
    let kernels: Vec<Kernel> = if kernels.trim().eq_ignore_ascii_case("all") {
        ALL_KERNELS.to_vec()
    } else {
        kernels
            .split(',')
            .map(Kernel::parse)
            .collect::<smokedet_core::Result<_>>()?
    };
    let rows = benchmark_descriptors(&set, &kernels, &BenchmarkParams::default())?;
    fs::write(&out, write_benchmark_csv(&rows))
        .with_context(|| format!("writing {}", out.display()))?;
    for row in &rows {
        println!(
            "{:<12} accuracy {:.4}  extract {:>8.3}s  dims {:>3}  recognize {:.3}s",
            row.kernel.name(),
            row.accuracy,
            row.extract_s,
            row.dims,
            row.recognize_s
        );
    }
    println!("report written to {}", out.display());
    Ok(())
}

fn eval(events: PathBuf, truth: PathBuf) -> Result<()> {
    let events = read_events_jsonl(&events)?;
    let truth = GroundTruth::load(&truth)?;
    let summary = evaluate(&events, &truth)?;
    let show = |frame: Option<u64>| frame.map_or_else(|| "-".into(), |f| f.to_string());
    println!("frames: {}", summary.frames);
    println!("alarm frames: {}", summary.alarm_frames);
    println!("hits: {}", summary.hits);
    println!("false alarms: {}", summary.false_alarms);
    println!("first alarm: {}", show(summary.first_alarm));
    println!("first hit: {}", show(summary.first_hit));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn synth(
    scene: SceneKind,
    out: PathBuf,
    width: usize,
    height: usize,
    frames: usize,
    seed: u64,
    onset: usize,
    burst_len: usize,
    period: usize,
) -> Result<()> {
    let params = SceneParams::new(width, height, frames, seed);
    let clip: Vec<Frame> = match scene {
        SceneKind::Static => static_scene(&params),
        SceneKind::Plume => plume_scene(&params, onset),
        SceneKind::RedIntruder => red_intruder_scene(&params),
        SceneKind::GrayMover => gray_mover_scene(&params),
        SceneKind::Flicker => flicker_scene(&params, burst_len, period),
    };
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    for frame in &clip {
        write_ppm(
            &out.join(format!("frame_{:06}.ppm", frame.index)),
            frame.width,
            frame.height,
            &frame.pixels,
        )?;
    }
    eprintln!("{} frames written to {}", clip.len(), out.display());
    Ok(())
}

fn init_config(out: Option<PathBuf>) -> Result<()> {
    let json = PipelineConfig::default().to_json_pretty();
    match out {
        Some(path) => {
            let mut file = fs::File::create(&path)
                .with_context(|| format!("creating {}", path.display()))?;
            writeln!(file, "{json}")?;
        }
        None => println!("{json}"),
    }
    Ok(())
}
