//! Command-line front end.
//!
//! Exit codes: 0 success, 1 verification failure, 2 input error, 3 I/O error.
//! Alternative indices in files and vectors are 0-based.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dcprox::io::{emit_trace, fmt_f64, load_instance, load_model, LoadError};
use dcprox::{
    conjugate, conjugate_numeric, mc_choice_frequencies, mc_surplus_ml, run_cycle, smoothness_certificate,
    verify, Error, Model, SimplexPoint, UtilityVector,
};

#[derive(Parser)]
#[command(name = "dcprox", version, about = "Discrete choice prox-functions on the simplex")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print choice probabilities at u as one CSV line.
    Probs {
        /// Model file (JSON).
        #[arg(long)]
        model: PathBuf,
        /// Comma-separated utilities, e.g. "0,1.5,-2".
        #[arg(long, allow_hyphen_values = true)]
        u: String,
    },
    /// Print the convexity parameter of the prox-function.
    Beta {
        #[arg(long)]
        model: PathBuf,
    },
    /// Evaluate the conjugate of the surplus at p and recover the utilities.
    Conjugate {
        #[arg(long)]
        model: PathBuf,
        /// Comma-separated probabilities summing to 1.
        #[arg(long)]
        p: String,
    },
    /// Sample the Hessian norm and compare it with 1/beta.
    Certify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
        samples: u64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Run the consumption cycle and write its trace as CSV.
    Solve {
        /// Instance file (JSON).
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
        iters: u64,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare analytic values with Monte Carlo estimates.
    Mc {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        u: String,
        #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
        samples: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Run the randomized property checks.
    Verify {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

enum Failure {
    Verification(String),
    Input(String),
    Io(String),
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        match e.exit_code() {
            3 => Failure::Io(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e.to_string())
    }
}

fn parse_vector(name: &str, text: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Failure::Input(format!("--{name}: cannot parse {:?}: {e}", s.trim())))
        })
        .collect()
}

fn utilities(model: &Model, text: &str) -> Result<Vec<f64>, Failure> {
    let u = UtilityVector::new(parse_vector("u", text)?)?.into_vec();
    if u.len() != model.n() {
        return Err(Failure::Input(format!(
            "--u: {} entries given, model has {} alternatives",
            u.len(),
            model.n()
        )));
    }
    Ok(u)
}

fn csv(v: &[f64]) -> String {
    v.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(",")
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Probs { model, u } => {
            let model = load_model(&model)?;
            let u = utilities(&model, &u)?;
            println!("{}", csv(&model.choice_probabilities(&u)));
        }
        Command::Beta { model } => {
            println!("{}", fmt_f64(load_model(&model)?.convexity_parameter()));
        }
        Command::Conjugate { model, p } => {
            let model = load_model(&model)?;
            let p = SimplexPoint::new(parse_vector("p", &p)?)?;
            if p.len() != model.n() {
                return Err(Failure::Input(format!(
                    "--p: {} entries given, model has {} alternatives",
                    p.len(),
                    model.n()
                )));
            }
            println!("value,{}", fmt_f64(conjugate(&model, &p)?));
            match conjugate_numeric(&model, &p) {
                Ok(sol) => println!("u,{}", csv(&sol.utilities)),
                Err(Error::BoundaryPoint { min }) => {
                    println!("u,none (no finite maximizer: min entry {})", fmt_f64(min))
                }
                Err(e) => return Err(e.into()),
            }
        }
        Command::Certify { model, samples, seed } => {
            let model = load_model(&model)?;
            let cert = smoothness_certificate(&model, samples as usize, seed)?;
            println!("max_observed,{}", fmt_f64(cert.max_observed));
            println!("bound,{}", fmt_f64(cert.bound));
            println!("argmax,{}", csv(&cert.argmax));
            if cert.holds() {
                println!("PASS");
            } else {
                println!("FAIL");
                return Err(Failure::Verification("sampled norm exceeds 1/beta".into()));
            }
        }
        Command::Solve { instance, model, iters, out } => {
            let inst = load_instance(&instance)?;
            let model = load_model(&model)?;
            let trace = run_cycle(&inst, &model, iters as usize)?;
            emit_trace(&trace, &out)?;
            let last = trace.last();
            println!("k,{}", last.k);
            println!("U_avg,{}", fmt_f64(last.utility_avg));
            println!("Phi_avg,{}", fmt_f64(last.price_avg));
            println!("gap,{}", fmt_f64(last.gap));
            println!("bound,{}", fmt_f64(last.bound));
        }
        Command::Mc { model, u, samples, seed } => {
            let model = load_model(&model)?;
            let u = utilities(&model, &u)?;
            let samples = samples as usize;
            let analytic = model.choice_probabilities(&u);
            let freq = mc_choice_frequencies(&model, &u, samples, seed)?;
            println!("quantity,analytic,empirical,std_error");
            if model.is_multinomial_logit() {
                let est = mc_surplus_ml(&model, &u, samples, seed)?;
                println!(
                    "surplus,{},{},{}",
                    fmt_f64(model.surplus(&u)),
                    fmt_f64(est.mean),
                    fmt_f64(est.std_error)
                );
            }
            for (i, (&p, &f)) in analytic.iter().zip(freq.iter()).enumerate() {
                let se = (p * (1.0 - p) / samples as f64).sqrt();
                println!("p_{i},{},{},{}", fmt_f64(p), fmt_f64(f), fmt_f64(se));
            }
        }
        Command::Verify { seed } => {
            let report = verify::run_all(seed);
            for check in &report.checks {
                println!("{check}");
            }
            if !report.passed() {
                return Err(Failure::Verification("at least one check failed".into()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
