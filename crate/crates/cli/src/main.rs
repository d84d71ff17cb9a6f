use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use distraxion::background::{load_background_set, BackgroundSet, Split};
use distraxion::frame::save_png;
use distraxion::harness::{
    evaluate, write_eval_csv, write_eval_json, Agent, EvalRecord, QtOptAgent, RandomAgent, ScriptedAgent,
};
use distraxion::protocol::{serve_stdio, Server, ServerOptions};
use distraxion::qtopt::{train_with_callback, write_log_csv, AugConfig, AugKind, TrainConfig};
use distraxion::{DifficultyConfig, EnvConfig, Environment, Frame, ObservationMode, Preset, TaskName};

#[derive(Parser)]
#[command(name = "distraxion", version, about = "Continuous control from pixels under visual distractions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve environments over the length-prefixed wire protocol.
    Serve(ServeArgs),
    /// Write frame grids for a task and preset.
    Render(RenderArgs),
    /// Evaluate a baseline agent.
    Eval(EvalArgs),
    /// Train the QT-Opt baseline.
    Train(TrainArgs),
}

#[derive(Args, Clone)]
struct VideoArgs {
    /// Root of a `<split>/<video>/<frame>.ppm` tree; procedural videos otherwise.
    #[arg(long)]
    backgrounds: Option<PathBuf>,
    #[arg(long, default_value = "train")]
    split: String,
}

impl VideoArgs {
    fn load(&self) -> Result<Option<Arc<BackgroundSet>>> {
        let Some(root) = &self.backgrounds else {
            return Ok(None);
        };
        let split: Split = self.split.parse()?;
        let set = load_background_set(root, split, None)
            .with_context(|| format!("loading backgrounds from {}", root.display()))?;
        Ok(Some(set.into_shared()))
    }
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 7000)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    /// Serve a single session on stdin/stdout instead of TCP.
    #[arg(long)]
    stdio: bool,
    #[command(flatten)]
    videos: VideoArgs,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long, value_parser = parse_task)]
    task: TaskName,
    #[arg(long, value_parser = parse_preset, default_value = "medium")]
    preset: Preset,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Frame side in pixels.
    #[arg(long, default_value_t = 100)]
    size: usize,
    /// Episodes (rows) in the episode grid.
    #[arg(long, default_value_t = 4)]
    episodes: usize,
    /// Frames (columns) per episode row.
    #[arg(long, default_value_t = 6)]
    frames: usize,
    /// Agent steps between columns.
    #[arg(long, default_value_t = 10)]
    stride: usize,
    #[arg(long)]
    r#static: bool,
    #[command(flatten)]
    videos: VideoArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum AgentKind {
    Random,
    Scripted,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, value_enum)]
    agent: AgentKind,
    #[arg(long, default_value_t = 100)]
    episodes: usize,
    /// Comma-separated; all tasks by default.
    #[arg(long, value_parser = parse_task, value_delimiter = ',')]
    task: Vec<TaskName>,
    /// Comma-separated; all presets by default.
    #[arg(long, value_parser = parse_preset, value_delimiter = ',')]
    preset: Vec<Preset>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    r#static: bool,
    #[arg(long, default_value_t = 64)]
    size: usize,
    #[arg(long, default_value = "eval")]
    out: PathBuf,
    #[command(flatten)]
    videos: VideoArgs,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, value_parser = parse_task)]
    task: TaskName,
    #[arg(long, value_parser = parse_preset, default_value = "none")]
    preset: Preset,
    #[arg(long, value_parser = parse_aug, default_value = "none")]
    aug: AugKind,
    /// Agent steps.
    #[arg(long, default_value_t = 10_000)]
    steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    r#static: bool,
    /// Train on physics state instead of pixels.
    #[arg(long)]
    state: bool,
    #[arg(long, default_value_t = 64)]
    size: usize,
    #[arg(long, default_value_t = 56)]
    crop: usize,
    #[arg(long, default_value_t = 256)]
    hidden: usize,
    #[arg(long, default_value_t = 512)]
    batch_size: usize,
    #[arg(long, default_value_t = 1e-4)]
    lr: f64,
    #[arg(long, default_value_t = 1000)]
    learning_starts: usize,
    /// Defaults to half of `--steps`.
    #[arg(long)]
    epsilon_decay_steps: Option<usize>,
    /// Greedy evaluation episodes after training.
    #[arg(long, default_value_t = 10)]
    eval_episodes: usize,
    #[command(flatten)]
    videos: VideoArgs,
}

fn parse_task(s: &str) -> Result<TaskName, String> {
    s.parse().map_err(|e: distraxion::Error| e.to_string())
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    s.parse().map_err(|e: distraxion::Error| e.to_string())
}

fn parse_aug(s: &str) -> Result<AugKind, String> {
    s.parse().map_err(|e: distraxion::Error| e.to_string())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Serve(args) => serve(args),
        Command::Render(args) => render(args),
        Command::Eval(args) => eval(args),
        Command::Train(args) => train(args),
    }
}

fn serve(args: ServeArgs) -> Result<()> {
    let options = ServerOptions { backgrounds: args.videos.load()? };
    if args.stdio {
        return Ok(serve_stdio(&options)?);
    }
    let server = Server::bind((args.host.as_str(), args.port), options)?;
    eprintln!("listening on {}", server.local_addr()?);
    Ok(server.run()?)
}

fn save(frame: &Frame, path: &Path) -> Result<()> {
    save_png(frame, path)?;
    println!("wrote {}", path.display());
    Ok(())
}

/// First observation of an episode under `difficulty`.
fn first_frame(
    task: TaskName,
    difficulty: DifficultyConfig,
    size: usize,
    videos: &Option<Arc<BackgroundSet>>,
) -> Result<Frame> {
    let config = EnvConfig::new(task, difficulty).with_render_size((size, size));
    let mut env = Environment::new(config, videos.clone())?;
    let ts = env.reset()?;
    Ok(ts.observation.frame().context("pixel observation")?.clone())
}

fn render(args: RenderArgs) -> Result<()> {
    if args.episodes == 0 || args.frames == 0 {
        bail!("--episodes and --frames must be positive");
    }
    fs::create_dir_all(&args.out)?;
    let videos = args.videos.load()?;
    let size = (args.size, args.size);
    let dynamic = !args.r#static;

    let mut grid = Vec::new();
    for e in 0..args.episodes as u64 {
        let config = EnvConfig::from_preset(args.task, args.preset, dynamic, args.seed + e).with_render_size(size);
        let mut env = Environment::new(config, videos.clone())?;
        let mut agent = ScriptedAgent;
        let mut ts = env.reset()?;
        for col in 0..args.frames {
            grid.push(ts.observation.frame().context("pixel observation")?.clone());
            if col + 1 == args.frames {
                break;
            }
            for _ in 0..args.stride {
                if ts.last {
                    break;
                }
                let state = env.physics_observation().context("episode state")?;
                let action = agent.act(&ts, &state, env.spec())?;
                ts = env.step(&action)?;
            }
        }
    }
    let stem = format!("{}_{}", args.task, args.preset);
    save(&Frame::tile(&grid, args.frames)?, &args.out.join(format!("{stem}_episodes.png")))?;

    let scales = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5];
    let strip = scales
        .iter()
        .map(|&beta| {
            let difficulty = DifficultyConfig {
                beta_cam: beta,
                beta_rgb: beta,
                beta_bg: if beta > 0.0 { 1.0 } else { 0.0 },
                num_videos: if beta > 0.0 { 8 } else { 0 },
                ..DifficultyConfig::none()
            };
            first_frame(args.task, difficulty.with_seed(args.seed), args.size, &videos)
        })
        .collect::<Result<Vec<_>>>()?;
    save(&Frame::tile(&strip, strip.len())?, &args.out.join(format!("{}_difficulty.png", args.task)))?;

    let weights = [0.0, 0.25, 0.5, 0.75, 1.0];
    let strip = weights
        .iter()
        .map(|&beta_bg| {
            let difficulty = DifficultyConfig { beta_bg, num_videos: 1, ..DifficultyConfig::none() };
            first_frame(args.task, difficulty.with_seed(args.seed), args.size, &videos)
        })
        .collect::<Result<Vec<_>>>()?;
    save(&Frame::tile(&strip, strip.len())?, &args.out.join(format!("{}_blend.png", args.task)))?;
    Ok(())
}

fn eval(args: EvalArgs) -> Result<()> {
    let tasks = if args.task.is_empty() { TaskName::ALL.to_vec() } else { args.task.clone() };
    let presets = if args.preset.is_empty() { Preset::ALL.to_vec() } else { args.preset.clone() };
    let videos = args.videos.load()?;
    let dynamic = !args.r#static;
    fs::create_dir_all(&args.out)?;

    let mut records = Vec::new();
    for &task in &tasks {
        for &preset in &presets {
            let config =
                EnvConfig::from_preset(task, preset, dynamic, args.seed).with_render_size((args.size, args.size));
            let mut env = Environment::new(config, videos.clone())?;
            let mut agent: Box<dyn Agent> = match args.agent {
                AgentKind::Random => Box::new(RandomAgent::new(args.seed)),
                AgentKind::Scripted => Box::new(ScriptedAgent),
            };
            let t0 = Instant::now();
            let (_, summary) = evaluate(&mut env, agent.as_mut(), args.episodes)?;
            println!(
                "{task:<18} {preset:<7} {:<9} {:8.1} ± {:6.1}  ({:.1}s)",
                agent.name(),
                summary.mean,
                summary.std_error,
                t0.elapsed().as_secs_f64()
            );
            records.push(EvalRecord {
                task: task.to_string(),
                preset: preset.to_string(),
                dynamic,
                agent: agent.name().to_string(),
                seed: args.seed,
                episodes: summary.episodes,
                mean_return: summary.mean,
                std_error: summary.std_error,
            });
        }
    }
    write_eval_csv(&args.out.join("eval.csv"), &records)?;
    write_eval_json(&args.out.join("eval.json"), &records)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn train(args: TrainArgs) -> Result<()> {
    fs::create_dir_all(&args.out)?;
    let videos = args.videos.load()?;
    let dynamic = !args.r#static;
    let observation = if args.state { ObservationMode::State } else { ObservationMode::Pixels };
    let env_config = |seed| {
        EnvConfig::from_preset(args.task, args.preset, dynamic, seed)
            .with_render_size((args.size, args.size))
            .with_observation(observation)
    };
    let config = TrainConfig {
        aug: AugConfig::new(args.aug, args.crop),
        hidden: args.hidden,
        batch_size: args.batch_size,
        learning_rate: args.lr,
        learning_starts: args.learning_starts,
        epsilon_decay_steps: args.epsilon_decay_steps.unwrap_or(args.steps / 2),
        seed: args.seed,
        ..TrainConfig::default()
    };
    fs::write(args.out.join("config.json"), serde_json::to_string_pretty(&config)? + "\n")?;

    let mut env = Environment::new(env_config(args.seed), videos.clone())?;
    let t0 = Instant::now();
    let outcome = train_with_callback(&mut env, config, args.steps, |r| {
        let loss = r.loss.map_or("-".to_string(), |l| format!("{l:.4}"));
        eprintln!(
            "step {:>7} episode {:>4} return {:8.1} loss {loss} eps {:.2} [{:.0}s]",
            r.step,
            r.episode,
            r.episode_return,
            r.epsilon,
            t0.elapsed().as_secs_f64()
        );
    })?;
    let log_path = args.out.join("log.csv");
    write_log_csv(&log_path, &outcome.log)?;
    println!("wrote {}", log_path.display());

    if args.eval_episodes > 0 {
        let eval_seed = args.seed.wrapping_add(1000);
        let mut env = Environment::new(env_config(eval_seed), videos)?;
        let mut agent = QtOptAgent(outcome.agent);
        let (_, summary) = evaluate(&mut env, &mut agent, args.eval_episodes)?;
        println!("eval {} episodes: {:.1} ± {:.1}", summary.episodes, summary.mean, summary.std_error);
        let record = EvalRecord {
            task: args.task.to_string(),
            preset: args.preset.to_string(),
            dynamic,
            agent: format!("qtopt-{}", args.aug),
            seed: eval_seed,
            episodes: summary.episodes,
            mean_return: summary.mean,
            std_error: summary.std_error,
        };
        write_eval_json(&args.out.join("eval.json"), &[record])?;
    }
    Ok(())
}
