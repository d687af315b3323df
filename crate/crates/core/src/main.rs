use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use npfs::analysis::{apriori_report, rate_table, solve_study};
use npfs::checks::check_trajectory;
use npfs::config::{parse_config, Config};
use npfs::io::{self, Metadata};
use npfs::scheme::{solve_trajectory, Stepper};
use npfs::Error;

#[derive(Parser)]
#[command(
    name = "npfs",
    version,
    about = "Time stepping for a nonlocal phase-field system with inertia"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured scenario and write the time series.
    Run(Common),
    /// Run the convergence study from the [study] section.
    Converge(Common),
    /// Solve and run the invariant suite; exits with 3 on any failure.
    Check(Common),
}

#[derive(Args)]
struct Common {
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "npfs_out")]
    out: PathBuf,
    /// Worker threads (defaults to the number of cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Write field snapshots every k steps.
    #[arg(long, value_name = "EVERY_K")]
    snapshots: Option<usize>,
    /// Perturb theta at this step before checking (testing hook).
    #[arg(long, hide = true)]
    inject_fault: Option<usize>,
}

enum Failure {
    Error(Error),
    Invariant,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let (name, common) = match &cli.command {
        Command::Run(c) => ("run", c),
        Command::Converge(c) => ("converge", c),
        Command::Check(c) => ("check", c),
    };
    if let Some(n) = common.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot start thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let result = parse_config(&common.config)
        .map_err(Failure::from)
        .and_then(|config| {
            let start = Instant::now();
            match &cli.command {
                Command::Run(c) => cmd_run(&config, c),
                Command::Converge(c) => cmd_converge(&config, c),
                Command::Check(c) => cmd_check(&config, c),
            }?;
            let meta = Metadata {
                version: io::version_string(),
                command: name.into(),
                config_file: common.config.display().to_string(),
                threads: rayon::current_num_threads(),
                wall_time_seconds: start.elapsed().as_secs_f64(),
            };
            io::write_metadata(&common.out, &config, &meta)?;
            Ok(())
        });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invariant) => ExitCode::from(3),
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<(), Error> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), text)?;
    Ok(())
}

fn cmd_run(config: &Config, c: &Common) -> Result<(), Failure> {
    let traj = solve_trajectory(&config.scenario)?;
    let written = io::write_run(&c.out, &traj, c.snapshots)?;
    let last = traj.state(traj.steps());
    println!(
        "solved {} steps (h = {:e}); final mass {:.12e}; wrote {} files to {}",
        traj.steps(),
        traj.h(),
        last.mass(),
        written.len(),
        c.out.display()
    );
    Ok(())
}

fn cmd_converge(config: &Config, c: &Common) -> Result<(), Failure> {
    let study = config
        .study()
        .ok_or_else(|| Error::config("converge needs a [study] section"))?;
    let (reference, coarse) = solve_study(&config.scenario, &study.steps, study.reference_steps)?;
    let table = rate_table(&reference, &coarse)?;
    let estimates: Vec<_> = coarse.iter().map(apriori_report).collect();
    let csv = io::rate_table_csv(&table);
    write_text(&c.out, "rate_table.csv", &csv)?;
    write_text(&c.out, "estimates.csv", &io::estimates_csv(&estimates))?;
    print!("{csv}");
    if table.is_degenerate() {
        println!("slope undefined: fewer than two step sizes with nonzero error");
    }
    Ok(())
}

fn cmd_check(config: &Config, c: &Common) -> Result<(), Failure> {
    let mut traj = solve_trajectory(&config.scenario)?;
    if let Some(n) = c.inject_fault {
        let n = n.min(traj.steps());
        let bumped = traj.state(n).theta.map(|x| x + 1e-3);
        traj.states_mut()[n].theta = bumped;
    }
    let stepper = Stepper::new(&config.scenario)?;
    let report = check_trajectory(&traj, Some(&stepper))?;
    let text = io::check_report_text(&report);
    write_text(&c.out, "check_report.txt", &text)?;
    print!("{text}");
    if report.all_passed() {
        println!("all invariants hold");
        Ok(())
    } else {
        let names: Vec<&str> = report.failures().map(|r| r.name.as_str()).collect();
        eprintln!("invariant failures: {}", names.join(", "));
        Err(Failure::Invariant)
    }
}
