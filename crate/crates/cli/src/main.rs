use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{value_parser, Arg, ArgAction, ArgMatches, Command};
use sigma_damped::experiments::acceptance::{acceptance_suite, run_criterion, SuiteOptions, SuiteReport, CRITERIA};
use sigma_damped::experiments::{exit, exit_code, run_experiment, ExperimentName, ExperimentSpec, Params, Report};
use sigma_damped::Error;

const EXIT_CODES: &str = "Exit codes: 0 all claims pass, 1 a claim or criterion failed, 2 usage error \
(unknown experiment or key, malformed config), 3 runtime error, 4 parameter without a value, \
5 output not writable.";

fn experiment_help(name: ExperimentName) -> String {
    let mut s = format!("Outputs: {}\n\nParameters (key = default):\n", name.outputs());
    for k in name.keys() {
        s.push_str(&format!("  {:<14} {:<24} {}\n", k.key, k.default, k.help));
    }
    s
}

fn cli() -> Command {
    let mut cmd = Command::new("sigma-lab")
        .about("Spectral experiments for the doubly damped sigma-evolution equation")
        .after_help(EXIT_CODES)
        .subcommand_required(true)
        .arg(
            Arg::new("out")
                .long("out")
                .global(true)
                .default_value("out")
                .value_parser(value_parser!(PathBuf))
                .help("output directory; each experiment writes into <out>/<name>"),
        )
        .arg(
            Arg::new("seed")
                .long("seed")
                .global(true)
                .default_value("0")
                .value_parser(value_parser!(u64))
                .help("seed for randomized data"),
        )
        .arg(
            Arg::new("jobs")
                .long("jobs")
                .short('j')
                .global(true)
                .value_parser(value_parser!(usize))
                .help("worker threads (default: all cores)"),
        )
        .arg(
            Arg::new("quick")
                .long("quick")
                .global(true)
                .action(ArgAction::SetTrue)
                .help("half grids, fewer samples, base step 0.1, tolerances x1.5"),
        )
        .arg(
            Arg::new("config")
                .long("config")
                .global(true)
                .value_parser(value_parser!(PathBuf))
                .help("flat `key = value` parameter file"),
        )
        .arg(
            Arg::new("set")
                .long("set")
                .global(true)
                .action(ArgAction::Append)
                .value_name("KEY=VALUE")
                .help("override one parameter (repeatable, applied after --config)"),
        );
    for name in ExperimentName::ALL {
        cmd = cmd.subcommand(
            Command::new(name.as_str())
                .about(format!("run the {name} experiment"))
                .after_help(experiment_help(name)),
        );
    }
    cmd.subcommand(Command::new("all").about("run every experiment with its defaults, in parallel up to --jobs"))
        .subcommand(
            Command::new("acceptance")
                .about("run the acceptance criteria and write acceptance_summary.txt")
                .arg(
                    Arg::new("criterion")
                        .long("criterion")
                        .action(ArgAction::Append)
                        .value_parser(value_parser!(u32).range(1..=CRITERIA.len() as i64))
                        .help("run only these criteria (repeatable)"),
                )
                .arg(
                    Arg::new("inject")
                        .long("inject")
                        .value_parser(value_parser!(u32))
                        .help("corrupt the predicted exponents of one criterion (harness self-test)"),
                ),
        )
}

fn overrides(m: &ArgMatches) -> Result<Params, Error> {
    let mut params = match m.get_one::<PathBuf>("config") {
        Some(path) => Params::parse(&fs::read_to_string(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?)?,
        None => Params::new(),
    };
    for kv in m.get_many::<String>("set").into_iter().flatten() {
        let (k, v) = Params::parse_assignment(kv)?;
        params.set(k, v);
    }
    Ok(params)
}

fn print_report(report: &Report, dir: &Path) {
    for c in &report.claims {
        println!("{}: {}", report.experiment, c.summary_line());
    }
    println!(
        "{}: result={} dir={}",
        report.experiment,
        if report.passed() { "pass" } else { "fail" },
        dir.display()
    );
}

fn fail(err: &Error) -> i32 {
    eprintln!("error: {err}");
    exit_code(err)
}

fn verdict(passed: bool) -> i32 {
    if passed {
        exit::PASS
    } else {
        exit::CRITERION_FAILED
    }
}

fn run_one(name: ExperimentName, m: &ArgMatches, params: Params) -> i32 {
    let out = m.get_one::<PathBuf>("out").expect("defaulted").join(name.as_str());
    let mut spec = ExperimentSpec::new(name, &out);
    spec.seed = *m.get_one::<u64>("seed").expect("defaulted");
    spec.params = params;
    if m.get_flag("quick") {
        spec = spec.quickened();
    }
    match run_experiment(&spec) {
        Ok(report) => {
            print_report(&report, &out);
            verdict(report.passed())
        }
        Err(e) => fail(&e),
    }
}

/// The largest code wins, so errors outrank claim failures.
fn run_all(m: &ArgMatches) -> i32 {
    parallel_map(&ExperimentName::ALL, |&name| run_one(name, m, Params::new()))
        .into_iter()
        .max()
        .unwrap_or(exit::PASS)
}

#[cfg(feature = "parallel")]
fn parallel_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, R>(items: &[T], f: impl Fn(&T) -> R) -> Vec<R> {
    items.iter().map(f).collect()
}

fn run_acceptance(sub: &ArgMatches) -> i32 {
    let opts = SuiteOptions {
        quick: sub.get_flag("quick"),
        seed: *sub.get_one::<u64>("seed").expect("defaulted"),
        inject: sub.get_one::<u32>("inject").copied(),
    };
    let report = match sub.get_many::<u32>("criterion") {
        Some(ids) => SuiteReport {
            options: opts,
            outcomes: ids.map(|&id| run_criterion(id, &opts)).collect(),
        },
        None => acceptance_suite(&opts),
    };
    for o in &report.outcomes {
        println!("{}", o.line());
    }
    let out = sub.get_one::<PathBuf>("out").expect("defaulted");
    let path = out.join("acceptance_summary.txt");
    let written = fs::create_dir_all(out).and_then(|_| fs::write(&path, report.summary()));
    if let Err(source) = written {
        return fail(&Error::Output {
            path: path.display().to_string(),
            source,
        });
    }
    println!("suite={} summary={}", if report.passed() { "pass" } else { "fail" }, path.display());
    verdict(report.passed())
}

fn dispatch(m: &ArgMatches) -> i32 {
    let (sub, sm) = m.subcommand().expect("subcommand required");
    #[cfg(feature = "parallel")]
    if let Some(&jobs) = sm.get_one::<usize>("jobs") {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: cannot size the thread pool: {e}");
            return exit::RUNTIME;
        }
    }
    match sub {
        "acceptance" => run_acceptance(sm),
        "all" => {
            if sm.contains_id("config") || sm.get_many::<String>("set").is_some() {
                eprintln!("error: `all` runs defaults; pass --config or --set to a single experiment");
                return exit::USAGE;
            }
            run_all(sm)
        }
        name => {
            let name: ExperimentName = name.parse().expect("subcommands mirror experiment names");
            match overrides(sm) {
                Ok(p) => run_one(name, sm, p),
                Err(e) => fail(&e),
            }
        }
    }
}

fn main() -> ExitCode {
    let code = match cli().try_get_matches() {
        Ok(m) => dispatch(&m),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                exit::USAGE
            } else {
                exit::PASS
            }
        }
    };
    ExitCode::from(code as u8)
}
