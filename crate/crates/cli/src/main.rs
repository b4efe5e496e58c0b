use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use supertr::svir::{check_airy_axioms, verify_algebra, AlgebraReport, Shift};
use supertr::{run_airy, run_tr, CorrTensor, CurveData, Rat, ZOO_NAMES};
use supertr_cli::cache::{Cache, Lookup};
use supertr_cli::results::{first_divergence, ResultFile};
use supertr_cli::spec::{curve_hash, CurveSpecFile};
use supertr_cli::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "supertr", version, about = "Exact N=1 super topological recursion")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Engine {
    Tr,
    Airy,
    Both,
}

impl Engine {
    fn name(self) -> &'static str {
        match self {
            Engine::Tr => "tr",
            Engine::Airy => "airy",
            Engine::Both => "both",
        }
    }
}

#[derive(clap::Args, Clone)]
struct CurveArgs {
    /// Spec file, or the name of a built-in curve (see `list-curves`).
    #[arg(long)]
    curve: String,
    /// Built-in curve parameter, e.g. `t=2`, `seed=3`, `epsilon=1`.
    #[arg(long = "param", value_parser = parse_kv)]
    params: Vec<(String, String)>,
    /// Coefficients of M(x) for the NS and Ramond curves, constant term first.
    #[arg(long = "m", value_delimiter = ',')]
    m: Vec<String>,
    /// Truncation order for built-in curves (default: the minimum for χ_max).
    #[arg(long)]
    trunc: Option<u32>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute F_{g,n|2m} for all 3 ≤ χ ≤ χ_max and write a result file.
    Compute {
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(long, default_value_t = 6)]
        chi_max: u32,
        #[arg(long, value_enum, default_value_t = Engine::Airy)]
        engine: Engine,
        /// Output file (stdout if absent).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a flat CSV export.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Recompute even when cached (and compare with the cached copy).
        #[arg(long)]
        no_cache: bool,
    },
    /// Run both engines and require identical canonical output.
    Crosscheck {
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(long, default_value_t = 6)]
        chi_max: u32,
    },
    /// Check the free-field super-Virasoro relations on sample monomials.
    VerifyAlgebra {
        #[arg(long, default_value_t = 6)]
        degree: u32,
        #[arg(long, default_value_t = 3)]
        mode_range: i64,
        /// Negative control: use central term 1/3 in L_0 instead of 1/4.
        #[arg(long)]
        corrupt_central: bool,
        /// Also check the Airy-structure properties of the hatted operators on
        /// the Airy curve for i ≤ 4.
        #[arg(long)]
        axioms: bool,
    },
    /// Check pairing normalizations and the σ-sum identities of a curve.
    VerifyCurve {
        #[command(flatten)]
        curve: CurveArgs,
    },
    /// List the built-in curves.
    ListCurves,
    /// Re-emit a result file as canonical JSON or CSV.
    Export {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: bool,
    },
}

fn parse_kv(s: &str) -> Result<(String, String), String> {
    s.split_once('=').map(|(k, v)| (k.trim().to_string(), v.trim().to_string())).ok_or_else(|| format!("expected key=value, got `{s}`"))
}

fn spec_of(a: &CurveArgs) -> CliResult<CurveSpecFile> {
    let p = Path::new(&a.curve);
    if p.exists() {
        let mut s = CurveSpecFile::read(p)?;
        if a.trunc.is_some() && s.zoo.is_some() {
            s.trunc = a.trunc;
        }
        return Ok(s);
    }
    if !ZOO_NAMES.contains(&a.curve.as_str()) {
        return Err(CliError::Spec(format!("`{}` is neither a spec file nor a built-in curve", a.curve)));
    }
    Ok(CurveSpecFile::zoo(&a.curve, &a.params, &a.m, a.trunc))
}

fn resolve(a: &CurveArgs, chi_max: u32) -> CliResult<CurveData> {
    let s = spec_of(a)?;
    let eps = match &s.zoo {
        Some(_) => s.zoo_spec(3)?.map(|z| z.epsilon()).transpose()?.unwrap_or(3),
        None => s.epsilon.unwrap_or(3),
    };
    s.resolve(CurveData::required_trunc(eps, chi_max.max(3)))
}

fn check_chi(chi_max: u32) -> CliResult<()> {
    if chi_max < 3 {
        return Err(supertr::Error::Stability(format!("chi-max must be at least 3, got {chi_max}")).into());
    }
    if chi_max > 9 {
        eprintln!("warning: chi-max {chi_max} above 9; the number of coefficients grows quickly");
    }
    Ok(())
}

fn run(c: &CurveData, chi: u32, engine: Engine) -> CliResult<CorrTensor> {
    c.check_trunc(chi)?;
    Ok(match engine {
        Engine::Tr => run_tr(c, chi)?,
        Engine::Airy => run_airy(c, chi)?,
        Engine::Both => {
            let a = run_tr(c, chi)?;
            let b = run_airy(c, chi)?;
            if let Some(d) = first_divergence(&a, &b) {
                return Err(CliError::Mismatch(format!("tr vs airy at {d}")));
            }
            a
        }
    })
}

fn write_out(out: Option<&Path>, body: &str) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, body)?,
        None => print!("{body}"),
    }
    Ok(())
}

fn compute(a: &CurveArgs, chi: u32, engine: Engine, out: Option<&Path>, csv: Option<&Path>, no_cache: bool) -> CliResult<()> {
    check_chi(chi)?;
    let c = resolve(a, chi)?;
    let hash = curve_hash(&c);
    let cache = Cache::from_env();
    let cached = cache.get(&hash, chi, engine.name());
    if cached == Lookup::Evicted {
        eprintln!("note: evicted a corrupt cache entry");
    }
    let body = match (&cached, no_cache) {
        (Lookup::Hit(b), false) => b.clone(),
        _ => {
            let t = match run(&c, chi, engine) {
                Err(CliError::Mismatch(m)) => {
                    if let Some(p) = out {
                        fs::write(p.with_extension("diff"), format!("{m}\n"))?;
                    }
                    return Err(CliError::Mismatch(m));
                }
                r => r?,
            };
            let body = ResultFile::from_tensor(&t, &hash, engine.name()).to_json();
            if let Lookup::Hit(old) = &cached {
                if *old != body {
                    eprintln!("warning: cached result differed from the recomputation; replacing it");
                }
            }
            cache.put(&hash, chi, engine.name(), &body)?;
            body
        }
    };
    write_out(out, &body)?;
    if let Some(p) = csv {
        fs::write(p, ResultFile::parse(&body)?.to_csv())?;
    }
    Ok(())
}

fn crosscheck(a: &CurveArgs, chi: u32) -> CliResult<()> {
    check_chi(chi)?;
    let c = resolve(a, chi)?;
    c.check_trunc(chi)?;
    let hash = curve_hash(&c);
    let t = run_tr(&c, chi)?;
    let s = run_airy(&c, chi)?;
    // byte-identical canonical output apart from the engine tag
    let rt = ResultFile::from_tensor(&t, &hash, "both").to_json();
    let rs = ResultFile::from_tensor(&s, &hash, "both").to_json();
    if rt != rs {
        let d = first_divergence(&t, &s).unwrap_or_else(|| "outputs differ".into());
        return Err(CliError::Mismatch(format!("first divergence {d}")));
    }
    println!("ok: {} ({} nonzero coefficients, chi <= {chi}) identical for tr and airy", c.name, t.len());
    Ok(())
}

fn print_algebra(rep: &AlgebraReport) {
    println!("{:<12} {:>8} {:>8}  first failure", "family", "checked", "failed");
    for r in &rep.rows {
        println!("{:<12} {:>8} {:>8}  {}", r.family, r.checked, r.failed, r.first_failure.clone().unwrap_or_default());
    }
}

fn verify_alg(degree: u32, r: i64, corrupt: bool, axioms: bool) -> CliResult<()> {
    if degree < 1 || r < 1 {
        return Err(CliError::Spec("degree and mode-range must be at least 1".into()));
    }
    let central = if corrupt { Rat::new(1, 3) } else { Rat::new(1, 4) };
    let rep = verify_algebra(degree, r, central)?;
    print_algebra(&rep);
    let mut ok = rep.all_pass();
    if axioms {
        let shift = Shift::from_curve(&CurveData::airy(20), 20);
        let ax = check_airy_axioms(&shift, 3, 4, degree.min(2), r.min(2))?;
        for ((name, exact), (_, tri)) in ax.degree_one.iter().zip(&ax.triangular) {
            println!("{name:<8} degree-1 part exact: {exact}, unitriangular: {tri}");
        }
        println!("no zero-mode derivative or constant: {}", ax.no_zero_mode);
        println!("closure of conjugated relations: {}", ax.closure.all_pass());
        ok &= ax.all_pass() && ax.degree_one.iter().all(|(_, e)| *e);
    }
    if ok {
        println!("all pass");
        Ok(())
    } else {
        Err(CliError::Failed("operator relations".into()))
    }
}

fn verify_curve(a: &CurveArgs) -> CliResult<()> {
    let s = spec_of(a)?;
    let c = resolve(a, 3)?;
    let checks = match s.zoo_spec(c.trunc)? {
        Some(z) => supertr::zoo_validate(&c, &z)?.checks,
        None => vec![("pairing".to_string(), supertr::zoo::pairings_ok(&c, (c.trunc as i64).min(6)))],
    };
    for (name, ok) in &checks {
        println!("{} {name}", if *ok { "PASS" } else { "FAIL" });
    }
    if checks.iter().all(|(_, ok)| *ok) {
        Ok(())
    } else {
        Err(CliError::Failed(format!("curve {}", c.name)))
    }
}

fn list_curves() {
    let rows = [
        ("airy", "ε=3, ω01 = z² dz, zero polarization"),
        ("bessel", "ε=1, ω01 = dz, zero polarization"),
        ("phi11", "Airy with φ11 = t (param t, default 1)"),
        ("super_jt", "ε=1, ω01 = √2 cos(2πz) dz; symbols sqrt2, pi2 = (2π)²"),
        ("ns_plus", "supereigenvalue model, NS sector, + component (M coefficients)"),
        ("ns_minus", "supereigenvalue model, NS sector, − component; symbol im"),
        ("ramond", "supereigenvalue model, Ramond sector; symbol sqrt2"),
        ("random", "sparse rational τ/φ/ψ (params seed, epsilon)"),
    ];
    for (n, d) in rows {
        println!("{n:<10} {d}");
    }
}

fn export(input: &Path, out: Option<&Path>, csv: bool) -> CliResult<()> {
    let text = fs::read_to_string(input).map_err(|e| CliError::Spec(format!("{}: {e}", input.display())))?;
    let r = ResultFile::parse(&text)?;
    write_out(out, &if csv { r.to_csv() } else { r.to_json() })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Cmd::Compute { curve, chi_max, engine, out, csv, no_cache } => compute(curve, *chi_max, *engine, out.as_deref(), csv.as_deref(), *no_cache),
        Cmd::Crosscheck { curve, chi_max } => crosscheck(curve, *chi_max),
        Cmd::VerifyAlgebra { degree, mode_range, corrupt_central, axioms } => verify_alg(*degree, *mode_range, *corrupt_central, *axioms),
        Cmd::VerifyCurve { curve } => verify_curve(curve),
        Cmd::ListCurves => {
            list_curves();
            Ok(())
        }
        Cmd::Export { input, out, csv } => export(input, out.as_deref(), *csv),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
