use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use champagne::builder::{
    audit, build_general, build_one_bubble_sequence, check_k0, reference_stack, ChampagneConfig, GeneralParams,
    OneBubbleParams, RadiiRule, UnitBallParams, DEFAULT_MAX_LAYERS,
};
use champagne::gauge::{annulus_hit_exact, equilibrium_potential_sigma, eta, Gauge, GaugeSet};
use champagne::geometry::{make_exhaustion_with, Domain, ExhaustionParams};
use champagne::io::{
    load_config, read_json, render_svg, report_csv, save_config, write_json, FileDigest, RunManifest,
};
use champagne::wos::{
    one_bubble_minorant, stack_kappa, unavoidability_report, KappaEstimate, MinorantProbe, ReportOptions,
    UnavoidabilityReport, WosParams,
};
use champagne::{Error, Point, Result};

const EXIT_IO: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_INVARIANT: u8 = 3;
const EXIT_INFEASIBLE: u8 = 4;
const EXIT_VERIFICATION: u8 = 5;

#[derive(Parser, Debug)]
#[command(name = "champagne", version, about = "Build and verify champagne subdomains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Layers of bubbles in the unit ball under a capacity budget.
    BuildUnitBall(BuildUnitBall),
    /// Annulus fills along an exhaustion of a preset domain.
    BuildGeneral(BuildGeneral),
    /// The single-bubble-per-layer sequence in the unit ball.
    BuildOneBubble(BuildOneBubble),
    /// Walk-on-spheres estimates for a configuration or a reference stack.
    Verify(Verify),
    /// Recompute sums and geometric invariants of a configuration.
    Audit(Audit),
    /// Closed-form values.
    Exact(Exact),
    /// SVG picture of a configuration.
    Render(Render),
    /// Re-run a recorded command and compare its outputs.
    Replay(Replay),
}

#[derive(Args, Debug, Serialize)]
struct Common {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Record this run (parameters, seeds, file digests) here.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct BuildUnitBall {
    #[arg(short = 'd', long = "dim", default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 1e-3)]
    delta: f64,
    /// phi-eps:ε, loglog, or file:path.csv
    #[arg(long, default_value = "phi-eps:0.5")]
    gauge: String,
    #[arg(long, default_value_t = 8)]
    layers: usize,
    /// geometric or log2
    #[arg(long, default_value = "geometric")]
    radii_rule: String,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Serialize)]
struct BuildGeneral {
    #[arg(short = 'd', long = "dim", default_value_t = 2)]
    dim: usize,
    /// ball, box or lshape
    #[arg(long, default_value = "lshape")]
    domain: String,
    #[arg(long, default_value_t = 1e-2)]
    delta: f64,
    #[arg(long, default_value = "phi-eps:8")]
    gauge: String,
    /// Number of exhaustion levels.
    #[arg(long, default_value_t = 4)]
    levels: usize,
    /// Inward offset of the first level (default: a quarter of the inradius).
    #[arg(long)]
    first_offset: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    offset_ratio: f64,
    /// Per-layer hitting probability to plan with.
    #[arg(long, conflicts_with = "kappa_from")]
    kappa_hat: Option<f64>,
    /// Read the hitting probability from a `verify --reference-stack` summary.
    #[arg(long)]
    kappa_from: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Serialize)]
struct BuildOneBubble {
    #[arg(short = 'd', long = "dim", default_value_t = 2)]
    dim: usize,
    /// First layer index (default: the smallest admissible one).
    #[arg(long)]
    k_start: Option<u64>,
    #[arg(long)]
    k_end: Option<u64>,
    /// Exponent of the reported sum Σφ(r)^(1+ε).
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Serialize)]
struct Verify {
    /// Configuration to verify.
    #[arg(long, required_unless_present = "reference_stack")]
    config: Option<PathBuf>,
    /// Walks per direct estimate.
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = 1e-4)]
    epsilon: f64,
    /// Probe points per layer.
    #[arg(long, default_value_t = 16)]
    probes: usize,
    /// Walks per layer probe.
    #[arg(long, default_value_t = 20_000)]
    layer_samples: u64,
    /// Comma-separated layer indices (default: all).
    #[arg(long, value_delimiter = ',')]
    layers: Option<Vec<usize>>,
    /// Skip per-layer estimates.
    #[arg(long)]
    no_layers: bool,
    /// Start point of a direct run, as comma-separated coordinates.
    #[arg(long = "start", value_parser = parse_point)]
    starts: Vec<Point>,
    /// Repeat direct runs with ε/2.
    #[arg(long)]
    sensitivity: bool,
    /// One-bubble configurations: probe this many points next to a bubble
    /// of the first layer against the analytic minorant.
    #[arg(long)]
    minorant: Option<usize>,
    /// Measure κ̂ on a reference annulus stack instead of a configuration.
    #[arg(long)]
    reference_stack: bool,
    #[arg(short = 'd', long = "dim", default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value = "phi-eps:8")]
    gauge: String,
    #[arg(long, default_value_t = 1e-2)]
    delta: f64,
    /// Inner radius of the reference stack relative to its outer radius.
    #[arg(long, default_value_t = 6.0 / 7.0)]
    tau: f64,
    #[arg(long, default_value_t = 3)]
    stack_layers: usize,
    /// Per-layer CSV report.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON summary.
    #[arg(long)]
    summary: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Serialize)]
struct Audit {
    #[arg(long)]
    config: PathBuf,
    /// JSON copy of the audit report.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct Exact {
    #[arg(short = 'd', long = "dim", default_value_t = 2)]
    dim: usize,
    /// Probability of hitting B̄(0,1/7) from |z| = 1/2 before leaving B(0,1).
    #[arg(long)]
    eta: bool,
    /// s,z: hitting probability of B̄(0,s) from |z| before leaving B(0,1).
    #[arg(long, value_delimiter = ',', num_args = 2)]
    annulus: Option<Vec<f64>>,
    /// y,R,ρ: potential of the normalized measure on ∂B(0,R) in B(0,R+2ρ).
    #[arg(long, value_delimiter = ',', num_args = 3)]
    potential: Option<Vec<f64>>,
}

#[derive(Args, Debug, Serialize)]
struct Render {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Width in pixels.
    #[arg(long, default_value_t = 800)]
    size: u32,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Serialize)]
struct Replay {
    manifest: PathBuf,
}

/// κ̂ measured on a reference stack, read back by `build-general`.
#[derive(Debug, Serialize, Deserialize)]
struct StackKappaReport {
    kappa_hat: f64,
    d: usize,
    gauge: Gauge,
    tau: f64,
    layers: Vec<KappaEstimate>,
}

#[derive(Debug, Serialize)]
struct VerifySummary<'a> {
    report: Option<&'a UnavoidabilityReport>,
    minorant: Option<&'a [MinorantProbe]>,
    passed: bool,
}

fn parse_point(s: &str) -> std::result::Result<Point, String> {
    let coords: std::result::Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse::<f64>()).collect();
    let coords = coords.map_err(|e| e.to_string())?;
    Point::from_slice(&coords).map_err(|e| e.to_string())
}

/// Files a run read and wrote, and the seeds it used.
#[derive(Default)]
struct Trace {
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    seeds: Vec<u64>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Domain(_) | Error::InvalidInput(_) => EXIT_INVALID,
        Error::Invariant(_) => EXIT_INVARIANT,
        Error::Infeasible(_) => EXIT_INFEASIBLE,
        Error::Verification(_) => EXIT_VERIFICATION,
        Error::Io { .. } | Error::Format { .. } => EXIT_IO,
    }
}

fn gauge_set(d: usize, spec: &str) -> Result<GaugeSet> {
    GaugeSet::new(d, Gauge::parse(spec)?)
}

fn print_build(cfg: &ChampagneConfig, out: &Path) {
    println!(
        "{:?} d={} layers={} bubbles={} Σφh={:e} δ={:e} -> {}",
        cfg.kind,
        cfg.d,
        cfg.layers.len(),
        cfg.totals.bubble_count,
        cfg.totals.weighted_sum,
        cfg.delta,
        out.display()
    );
}

fn build_unit_ball(a: &BuildUnitBall, t: &mut Trace) -> Result<()> {
    let gauges = gauge_set(a.dim, &a.gauge)?;
    let params = UnitBallParams {
        delta: a.delta,
        layers: a.layers,
        rule: RadiiRule::parse(&a.radii_rule)?,
        seed: a.common.seed,
    };
    let cfg = params.build(&gauges)?;
    save_config(&cfg, &a.out)?;
    t.seeds.push(a.common.seed);
    t.outputs.push(a.out.clone());
    print_build(&cfg, &a.out);
    Ok(())
}

fn build_general_cmd(a: &BuildGeneral, t: &mut Trace) -> Result<()> {
    let gauges = gauge_set(a.dim, &a.gauge)?;
    let domain = Domain::preset(&a.domain, a.dim)?;
    let kappa_hat = match (&a.kappa_hat, &a.kappa_from) {
        (Some(k), _) => *k,
        (None, Some(path)) => {
            t.inputs.push(path.clone());
            let rep: StackKappaReport = read_json(path)?;
            rep.kappa_hat
        }
        (None, None) => GeneralParams::default().kappa_hat,
    };
    let ex = make_exhaustion_with(
        &domain,
        a.levels,
        ExhaustionParams {
            first_offset: a.first_offset,
            ratio: a.offset_ratio,
            seed: a.common.seed,
            ..ExhaustionParams::default()
        },
    )?;
    let params = GeneralParams {
        delta: a.delta,
        kappa_hat,
        gamma: a.gamma,
        max_layers: DEFAULT_MAX_LAYERS,
        seed: a.common.seed,
        ..GeneralParams::default()
    };
    let cfg = build_general(&domain, &ex, &gauges, &params)?;
    save_config(&cfg, &a.out)?;
    t.seeds.push(a.common.seed);
    t.outputs.push(a.out.clone());
    print_build(&cfg, &a.out);
    Ok(())
}

fn build_one_bubble(a: &BuildOneBubble, t: &mut Trace) -> Result<()> {
    let k_start = match a.k_start {
        Some(k) => k,
        None => (2..10_000)
            .find(|&k| check_k0(k, a.dim).is_ok())
            .ok_or_else(|| Error::Infeasible("no admissible first layer below 10000".into()))?,
    };
    let params = OneBubbleParams {
        k_start,
        k_end: a.k_end.unwrap_or(k_start),
        eps: a.eps,
        seed: a.common.seed,
    };
    let cfg = build_one_bubble_sequence(a.dim, &params)?;
    save_config(&cfg, &a.out)?;
    t.seeds.push(a.common.seed);
    t.outputs.push(a.out.clone());
    print_build(&cfg, &a.out);
    Ok(())
}

fn verify_stack(a: &Verify, t: &mut Trace) -> Result<()> {
    let gauges = gauge_set(a.dim, &a.gauge)?;
    let stack = reference_stack(a.tau, a.stack_layers, 1.0, a.delta, &gauges, a.common.seed)?;
    let params = WosParams::new(a.epsilon, a.layer_samples, a.common.seed);
    let (kappa_hat, layers) = stack_kappa(&stack, a.probes, &params)?;
    for k in &layers {
        println!(
            "stack layer {}: κ̂ = {:.4} (estimate {:.4}, upper {:.4})",
            k.layer, k.kappa_hat, k.kappa_point, k.kappa_high
        );
    }
    println!("reference stack κ̂ = {kappa_hat:.6}");
    t.seeds.push(a.common.seed);
    if let Some(path) = &a.summary {
        let rep = StackKappaReport {
            kappa_hat,
            d: a.dim,
            gauge: gauges.gauge().clone(),
            tau: a.tau,
            layers,
        };
        write_json(path, &rep)?;
        t.outputs.push(path.clone());
    }
    if kappa_hat > 0.0 {
        Ok(())
    } else {
        Err(Error::Verification("reference stack κ̂ is not positive".into()))
    }
}

fn verify(a: &Verify, t: &mut Trace) -> Result<()> {
    if a.reference_stack {
        return verify_stack(a, t);
    }
    let path = a.config.as_ref().expect("clap requires --config");
    t.inputs.push(path.clone());
    t.seeds.push(a.common.seed);
    let mut cfg = load_config(path)?;
    let mut passed = true;

    let minorant = match a.minorant {
        Some(n) => {
            let probes = one_bubble_minorant(&cfg, 0, n, &WosParams::new(a.epsilon, a.samples, a.common.seed))?;
            for p in &probes {
                let ok = p.dominates_floor(3.0);
                passed &= ok;
                println!(
                    "{} |z−x| = {:.3e}: p̂ = {:.4} ± {:.4}, (2/3)k⁻¹ = {:.4}, minorant = {:.4}",
                    if ok { "PASS" } else { "FAIL" },
                    p.distance,
                    p.estimate.p_hat,
                    3.0 * p.estimate.sigma(),
                    p.floor,
                    p.minorant
                );
            }
            Some(probes)
        }
        None => None,
    };

    let report = if a.minorant.is_none() || !a.starts.is_empty() {
        let layers = if a.no_layers { Some(Vec::new()) } else { a.layers.clone() };
        let opts = ReportOptions {
            layers,
            probes_per_layer: a.probes,
            layer_params: WosParams::new(a.epsilon, a.layer_samples, a.common.seed),
            direct_params: WosParams::new(a.epsilon, a.samples, a.common.seed.wrapping_add(1 << 32)),
            starts: a.starts.clone(),
            sensitivity: a.sensitivity,
        };
        let rep = unavoidability_report(&mut cfg, &opts)?;
        for k in &rep.layers {
            println!(
                "layer {}: κ̂ = {:.4} (estimate {:.4}, upper {:.4})",
                k.layer, k.kappa_hat, k.kappa_point, k.kappa_high
            );
        }
        if let Some(b) = rep.ladder_bound {
            println!("ladder bound 1 − ∏(1 − κ̂) = {b:.4}");
        }
        for d in &rep.direct {
            let verdict = match d.ladder_holds {
                Some(true) => "PASS ",
                Some(false) => "FAIL ",
                None => "",
            };
            println!(
                "{verdict}direct from {:?}: p̂ = {:.4} [{:.4}, {:.4}], margin {:.4}, mean steps {:.1}",
                d.start.coords(),
                d.estimate.p_hat,
                d.estimate.ci_low,
                d.estimate.ci_high,
                d.margin,
                d.estimate.mean_steps
            );
            if let Some(h) = &d.halved_epsilon {
                println!("  with ε/2: p̂ = {:.4} (shift {:+.4})", h.p_hat, h.p_hat - d.estimate.p_hat);
            }
        }
        passed &= rep.passed();
        Some(rep)
    } else {
        None
    };

    if let (Some(path), Some(rep)) = (&a.out, &report) {
        std::fs::write(path, report_csv(&cfg, rep)).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
        t.outputs.push(path.clone());
    }
    if let Some(path) = &a.summary {
        write_json(
            path,
            &VerifySummary {
                report: report.as_ref(),
                minorant: minorant.as_deref(),
                passed,
            },
        )?;
        t.outputs.push(path.clone());
    }
    if passed {
        Ok(())
    } else {
        Err(Error::Verification("a verification check failed".into()))
    }
}

fn audit_cmd(a: &Audit, t: &mut Trace) -> Result<()> {
    t.inputs.push(a.config.clone());
    let cfg = load_config(&a.config)?;
    let rep = audit(&cfg)?;
    for c in &rep.checks {
        let status = if c.passed() { "PASS" } else { "FAIL" };
        if c.detail.is_empty() {
            println!("{status} {} ({} checked)", c.name, c.checked);
        } else {
            println!("{status} {} ({} checked): {}", c.name, c.checked, c.detail);
        }
    }
    if let Some(path) = &a.out {
        write_json(path, &rep)?;
        t.outputs.push(path.clone());
    }
    let first = rep.failures().next().map(|c| format!("{}: {}", c.name, c.detail));
    match first {
        None => Ok(()),
        Some(msg) => Err(Error::Invariant(msg)),
    }
}

fn exact(a: &Exact) -> Result<()> {
    let mut any = false;
    if a.eta {
        println!("eta(d={}) = {}", a.dim, eta(a.dim)?);
        any = true;
    }
    if let Some(v) = &a.annulus {
        println!("annulus(s={}, z={}, d={}) = {}", v[0], v[1], a.dim, annulus_hit_exact(v[0], v[1], a.dim)?);
        any = true;
    }
    if let Some(v) = &a.potential {
        println!(
            "potential(y={}, R={}, rho={}, d={}) = {}",
            v[0],
            v[1],
            v[2],
            a.dim,
            equilibrium_potential_sigma(v[0], v[1], v[2], a.dim)?
        );
        any = true;
    }
    if any {
        Ok(())
    } else {
        Err(Error::InvalidInput("nothing requested: pass --eta, --annulus or --potential".into()))
    }
}

fn render(a: &Render, t: &mut Trace) -> Result<()> {
    t.inputs.push(a.config.clone());
    let cfg = load_config(&a.config)?;
    let svg = render_svg(&cfg, a.size)?;
    std::fs::write(&a.out, svg).map_err(|e| Error::Io {
        path: a.out.clone(),
        source: e,
    })?;
    t.outputs.push(a.out.clone());
    println!("wrote {}", a.out.display());
    Ok(())
}

fn replay(a: &Replay) -> Result<()> {
    let m: RunManifest = read_json(&a.manifest)?;
    let changed = m.changed_inputs()?;
    if !changed.is_empty() {
        return Err(Error::InvalidInput(format!("inputs changed since the run: {changed:?}")));
    }
    let argv = std::iter::once("champagne".to_string()).chain(m.args.iter().cloned());
    let cli = Cli::try_parse_from(argv).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut t = Trace::default();
    dispatch(&cli.command, &mut t)?;
    let diff = m.changed_outputs()?;
    if diff.is_empty() {
        println!("replay reproduced {} output file(s) byte for byte", m.outputs.len());
        Ok(())
    } else {
        Err(Error::Verification(format!("replayed outputs differ: {diff:?}")))
    }
}

fn dispatch(cmd: &Command, t: &mut Trace) -> Result<()> {
    match cmd {
        Command::BuildUnitBall(a) => build_unit_ball(a, t),
        Command::BuildGeneral(a) => build_general_cmd(a, t),
        Command::BuildOneBubble(a) => build_one_bubble(a, t),
        Command::Verify(a) => verify(a, t),
        Command::Audit(a) => audit_cmd(a, t),
        Command::Exact(a) => exact(a),
        Command::Render(a) => render(a, t),
        Command::Replay(a) => replay(a),
    }
}

fn manifest_path(cmd: &Command) -> Option<&PathBuf> {
    match cmd {
        Command::BuildUnitBall(a) => a.common.manifest.as_ref(),
        Command::BuildGeneral(a) => a.common.manifest.as_ref(),
        Command::BuildOneBubble(a) => a.common.manifest.as_ref(),
        Command::Verify(a) => a.common.manifest.as_ref(),
        Command::Render(a) => a.common.manifest.as_ref(),
        _ => None,
    }
}

fn write_manifest(path: &Path, cmd: &Command, t: &Trace) -> Result<()> {
    // drop the manifest flag itself so a replay does not rewrite it
    let mut args = Vec::new();
    let mut skip = false;
    for a in std::env::args().skip(1) {
        if skip {
            skip = false;
            continue;
        }
        if a == "--manifest" {
            skip = true;
            continue;
        }
        if a.starts_with("--manifest=") {
            continue;
        }
        args.push(a);
    }
    let digests = |paths: &[PathBuf]| paths.iter().map(|p| FileDigest::of(p)).collect::<Result<Vec<_>>>();
    let parameters = serde_json::to_value(cmd).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let command = parameters
        .as_object()
        .and_then(|o| o.keys().next().cloned())
        .unwrap_or_default();
    let m = RunManifest {
        command,
        args,
        parameters,
        seeds: t.seeds.clone(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        inputs: digests(&t.inputs)?,
        outputs: digests(&t.outputs)?,
    };
    write_json(path, &m)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut trace = Trace::default();
    let result = dispatch(&cli.command, &mut trace).and_then(|()| match manifest_path(&cli.command) {
        Some(p) => write_manifest(p, &cli.command, &trace),
        None => Ok(()),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
