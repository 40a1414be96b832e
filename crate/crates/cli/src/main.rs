//! `vacuum-euler simulate | iterate | verify | converge`
//!
//! Exit status: 0 when every checked property holds, 1 when one fails, 2 for a bad
//! configuration or an input the solver cannot set up.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use vacuum_euler::coords::eulerian_reconstruct;
use vacuum_euler::harness::io::{
    write_checkpoint, write_field, write_iteration_trace, write_json, write_profile_csv, write_time_series,
    write_triplets,
};
use vacuum_euler::harness::{
    converge, picard_study, run_suite, Config, ConvergeReport, Scenario, Summary, SummaryParams, Verdict,
};
use vacuum_euler::{Error, OperatorStack, State};

#[derive(Parser)]
#[command(name = "vacuum-euler", version, about = "Compressible Euler flow with a physical vacuum boundary")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
    /// JSON configuration; the built-in gamma = 3 scenario when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed for the random test fields; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; all cores when omitted.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Verb {
    /// Evolve the scenario and certify the time T*.
    Simulate,
    /// Run the Picard iteration and compare its limit with a direct run.
    Iterate,
    /// Run the verification suite.
    Verify,
    /// Self-convergence study under doubling of n.
    Converge,
}

impl Verb {
    fn name(self) -> &'static str {
        match self {
            Verb::Simulate => "simulate",
            Verb::Iterate => "iterate",
            Verb::Verify => "verify",
            Verb::Converge => "converge",
        }
    }
}

/// Errors the user can fix by changing the input, as opposed to numerical failures.
fn is_setup_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Config(_)
            | Error::InvalidParameter(_)
            | Error::Admissibility(_)
            | Error::Domain { .. }
            | Error::Io(_)
            | Error::Json(_)
            | Error::Csv(_)
    )
}

struct Ctx {
    cfg: Config,
    scenario: Scenario,
    out: PathBuf,
    seed: u64,
    threads: usize,
}

impl Ctx {
    fn summary(&self, verb: Verb, verdicts: Vec<Verdict>) -> Result<Summary, Error> {
        let passed = verdicts.iter().all(|v| v.pass);
        Ok(Summary {
            verb: verb.name().into(),
            scenario: self.scenario.name.clone(),
            params: SummaryParams::of(&self.scenario)?,
            certified_t_star: None,
            max_energy_ratio: None,
            phi_over_xi_envelope: None,
            verdicts,
            seed: self.seed,
            threads: self.threads,
            passed,
        })
    }

    fn path(&self, file: &str) -> PathBuf {
        self.out.join(file)
    }
}

fn verdict(name: &str, pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { name: name.into(), pass, detail: detail.into() }
}

fn write_state(ctx: &Ctx, state: &State, t: f64) -> Result<(), Error> {
    write_checkpoint(&ctx.path("checkpoint.json"), state, t)?;
    write_field(&ctx.path("phi_over_xi.csv"), &state.psi)?;
    write_field(&ctx.path("u.csv"), &state.u)
}

fn simulate(ctx: &Ctx) -> Result<Summary, Error> {
    let sc = &ctx.scenario;
    let params = sc.params()?;
    let k = params.k();
    let init = sc.initial_state()?;
    let run = sc.simulate()?;
    write_time_series(&ctx.path("time_series.csv"), &run, k)?;
    let fin = run.final_state();
    write_state(ctx, fin, run.t_star)?;
    let a_now = run.boundary.a_of_t.last().copied().unwrap_or(0.0);
    let prof = eulerian_reconstruct(fin, a_now, &params)?;
    write_profile_csv(&ctx.path("profile.csv"), &prof)?;
    write_json(&ctx.path("profile.json"), &prof)?;
    let stack = OperatorStack::from_state(&init, k)?;
    write_triplets(&ctx.path("v_triplets.csv"), &stack.v_triplets())?;
    write_triplets(&ctx.path("vstar_triplets.csv"), &stack.vstar_triplets())?;

    let mut verdicts = vec![verdict(
        "certification",
        run.t_star > 0.0,
        match &run.violation {
            Some(v) => format!("T* = {} ({v})", run.t_star),
            None => format!("T* = {}, reached t_final", run.t_star),
        },
    )];
    for (p, fail) in sc.check_expected(&run) {
        verdicts.push(verdict(p.name(), fail.is_none(), fail.unwrap_or_else(|| "holds".into())));
    }
    let mut s = ctx.summary(Verb::Simulate, verdicts)?;
    s.certified_t_star = Some(run.t_star);
    s.max_energy_ratio = Some(run.max_energy_ratio);
    s.phi_over_xi_envelope = Some([run.psi_envelope.0, run.psi_envelope.1]);
    Ok(s)
}

fn iterate(ctx: &Ctx) -> Result<Summary, Error> {
    let sc = &ctx.scenario;
    let settings = &ctx.cfg.picard;
    let direct = sc.simulate()?;
    let horizon = match settings.horizon {
        Some(h) => h,
        None => ((settings.horizon_fraction * direct.t_star / sc.dt).round() * sc.dt).max(sc.dt),
    };
    let study = picard_study(sc, horizon, settings)?;
    if let Some(res) = &study.result {
        write_iteration_trace(&ctx.path("iteration_trace.csv"), &res.trace)?;
        write_state(ctx, res.final_state(), horizon)?;
    }
    let verdicts = match &study.error {
        Some(e) => vec![verdict("iteration", false, format!("horizon {horizon}: {e}"))],
        None => vec![
            verdict("contraction", study.contracts(), format!("{} consecutive halvings of the iterate difference", study.run)),
            verdict("identities", study.identities_hold(), format!("reconstruction identity residual {:.2e}", study.identity)),
            verdict("agrees_with_direct", study.agrees(), format!("D = {:.3e}, bound {:.3e}", study.d, study.bound)),
        ],
    };
    let mut s = ctx.summary(Verb::Iterate, verdicts)?;
    s.certified_t_star = Some(direct.t_star);
    s.max_energy_ratio = Some(direct.max_energy_ratio);
    s.phi_over_xi_envelope = study.result.as_ref().map(|r| {
        let recs = &r.trace.records;
        let last = &recs[recs.len() - 1];
        [last.psi_min, last.psi_max]
    });
    Ok(s)
}

fn verify(ctx: &Ctx) -> Result<Summary, Error> {
    let report = run_suite(&ctx.cfg.verify.criteria, ctx.seed);
    for r in &report.results {
        println!("{}", r.line());
    }
    write_json(&ctx.path("verify.json"), &report)?;
    let verdicts = report
        .results
        .iter()
        .map(|r| verdict(&format!("criterion {}: {}", r.id, r.name), r.pass, r.checks.join("; ")))
        .collect();
    ctx.summary(Verb::Verify, verdicts)
}

#[derive(Serialize)]
struct ConvergeLine {
    n: usize,
    probe: f64,
    phi_over_xi: f64,
    u: f64,
}

fn write_converge(path: &Path, rep: &ConvergeReport) -> Result<(), Error> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["n", "diff_phi_over_xi", "diff_u", "order_phi_over_xi", "order_u"])?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
    for r in &rep.rows {
        w.write_record([r.n.to_string(), opt(r.diff_phi_over_xi), opt(r.diff_u), opt(r.order_phi_over_xi), opt(r.order_u)])?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(path.with_file_name("converge_probes.csv"))?;
    for r in &rep.rows {
        for (i, &probe) in rep.probes.iter().enumerate() {
            w.serialize(ConvergeLine { n: r.n, probe, phi_over_xi: r.phi_over_xi[i], u: r.u[i] })?;
        }
    }
    w.flush()?;
    Ok(())
}

fn run_converge(ctx: &Ctx) -> Result<Summary, Error> {
    let settings = &ctx.cfg.converge;
    let rep = converge(&ctx.scenario, settings)?;
    write_converge(&ctx.path("converge.csv"), &rep)?;
    write_json(&ctx.path("converge.json"), &rep)?;
    let verdicts = vec![verdict(
        "phi_over_xi_order",
        rep.pass,
        format!(
            "observed order {:.3} (u {:.3}) at t = {} against {}",
            rep.min_order_phi_over_xi, rep.min_order_u, rep.t, settings.min_order
        ),
    )];
    ctx.summary(Verb::Converge, verdicts)
}

fn setup(cli: &Cli) -> Result<Ctx, Error> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let scenario = cfg.scenario()?;
    let threads = match cli.threads {
        Some(0) => return Err(Error::Config("--threads must be at least 1".into())),
        Some(t) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build_global()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            t
        }
        None => rayon::current_num_threads(),
    };
    std::fs::create_dir_all(&cli.out)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", cli.out.display())))?;
    let seed = cli.seed.unwrap_or_else(|| cfg.seed());
    Ok(Ctx { cfg, scenario, out: cli.out.clone(), seed, threads })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = match setup(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let out = match cli.verb {
        Verb::Simulate => simulate(&ctx),
        Verb::Iterate => iterate(&ctx),
        Verb::Verify => verify(&ctx),
        Verb::Converge => run_converge(&ctx),
    };
    let summary = match out {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(if is_setup_error(&e) { 2 } else { 1 });
        }
    };
    if let Err(e) = write_json(&ctx.path("summary.json"), &summary) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    for v in &summary.verdicts {
        if !v.pass {
            eprintln!("{} failed: {}", v.name, v.detail);
        }
    }
    println!(
        "{} {}: {} (summary in {})",
        summary.verb,
        summary.scenario,
        if summary.passed { "ok" } else { "FAILED" },
        ctx.path("summary.json").display()
    );
    if summary.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
