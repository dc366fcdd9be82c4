//! Command-line entry point.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::curve::{distortion_curve, predict_csv, predict_iterated};
use crate::derivation::{replay_derivation, Derivation};
use crate::error::{Error, Result};
use crate::hnn::{verify_free_basis, Hnn};
use crate::presentation::{build_presentation, check_params, derive_hnn_data, Presentation};
use crate::qgroup::{
    binom_u64, binomial_counts, check_phi_inverse_properties, fence_normalize, qpq_oracle,
    random_fence_triple, Phi,
};
use crate::sc::{analytic_rips_margins, brute_report, DEFAULT_BRUTE_BUDGET};
use crate::witness::{assemble_witness, letter_budget, Mode, WitnessBundle, WitnessContext};
use crate::words::{Alphabet, Word};

/// `println!` that ignores a closed stdout, so piping into `head` is not
/// a panic.
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

#[derive(Parser, Debug)]
#[command(name = "dforge", version, about = "Presentations, small-cancellation checks and distortion witnesses")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GroupArgs {
    #[arg(long, default_value_t = 2)]
    pub p: u32,
    #[arg(long, default_value_t = 1)]
    pub q: u32,
    /// Rips scale; each subcommand has its own default.
    #[arg(long)]
    pub scale: Option<u32>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScMode {
    Analytic,
    Brute,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum WitnessMode {
    Explicit,
    Counting,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write the presentation file.
    Gen {
        #[command(flatten)]
        group: GroupArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report the four small-cancellation conditions.
    CheckSc {
        #[command(flatten)]
        group: GroupArgs,
        #[arg(long, value_enum, default_value_t = ScMode::Analytic)]
        mode: ScMode,
    },
    /// Build the witness pair for one `n`.
    Witness {
        #[command(flatten)]
        group: GroupArgs,
        #[arg(long, default_value_t = 1)]
        n: u64,
        #[arg(long, value_enum, default_value_t = WitnessMode::Counting)]
        mode: WitnessMode,
        /// Derivation file (explicit mode).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay the witness derivation and cross-check it by Britton reduction.
    Verify {
        #[command(flatten)]
        group: GroupArgs,
        #[arg(long, default_value_t = 1)]
        n: u64,
        /// Replay this derivation file instead of a freshly built one.
        #[arg(long)]
        derivation: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep the quasi-isometry oracle over short words.
    QOracle {
        #[arg(long, default_value_t = 2)]
        p: u32,
        #[arg(long, default_value_t = 1)]
        q: u32,
        #[arg(long, default_value_t = 4)]
        mu_max: usize,
        #[arg(long, default_value_t = 6)]
        l_max: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Distortion lower-bound curve as CSV.
    Curve {
        #[command(flatten)]
        group: GroupArgs,
        #[arg(long, default_value_t = 60)]
        n_max: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Iterated prediction in nested-log coordinates.
    Predict {
        #[command(flatten)]
        group: GroupArgs,
        #[arg(long, default_value_t = 60)]
        n_max: u64,
        #[arg(long, default_value_t = 2)]
        k: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every module's invariant suite at desk scale.
    SelfTest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Validated parameters shared by the subcommands.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Config {
    pub p: u32,
    pub q: u32,
    pub scale: u32,
    pub letter_budget: u64,
}

impl Config {
    pub fn new(group: &GroupArgs, default_scale: u32) -> Result<Config> {
        let scale = group.scale.unwrap_or(default_scale);
        check_params(group.p, group.q, scale)?;
        let letter_budget = letter_budget();
        if letter_budget == 0 {
            return Err(Error::Param("letter budget must be positive".into()));
        }
        Ok(Config {
            p: group.p,
            q: group.q,
            scale,
            letter_budget,
        })
    }

    pub fn presentation(&self) -> Result<Presentation> {
        build_presentation(self.p, self.q, self.scale)
    }
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| Error::Param(format!("bad output path {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, text),
        None => {
            let _ = std::io::stdout().write_all(text.as_bytes());
            Ok(())
        }
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Param(_) => "param",
        Error::Alphabet(_) => "alphabet",
        Error::Parse { .. } => "parse",
        Error::MissingGenerator(_) => "missing_generator",
        Error::Allocation(_) => "allocation",
        Error::TemplateMismatch(_) => "template",
        Error::Budget { .. } => "budget",
        Error::Precondition(_) => "precondition",
        Error::StepMismatch { .. } => "step_mismatch",
        Error::Assertion(_) => "assertion",
        Error::NotFree(_) => "not_free",
        Error::Verification(_) => "verification",
        Error::Io(_) => "io",
    }
}

/// Parses `argv` (including the program name) and runs the subcommand.
/// Returns the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error kind={} code={} msg={}", error_kind(&e), e.exit_code(), e);
            e.exit_code()
        }
    }
}

/// Runs one subcommand; `Ok(false)` means a check ran and failed.
pub fn execute(cmd: &Command) -> Result<bool> {
    match cmd {
        Command::Gen { group, out } => {
            let cfg = Config::new(group, 2)?;
            let pres = cfg.presentation()?;
            let census = pres.census()?;
            emit(out, &pres.serialize())?;
            if out.is_some() {
                say!(
                    "relators={} x_words={} y_words={}",
                    census.relators, census.x_used, census.y_used
                );
            }
            Ok(true)
        }
        Command::CheckSc { group, mode } => {
            let cfg = Config::new(group, 200)?;
            let pres = cfg.presentation()?;
            let report = match mode {
                ScMode::Analytic => analytic_rips_margins(&pres)?,
                ScMode::Brute => brute_report(&pres, DEFAULT_BRUTE_BUDGET.max(pres.total_letters() + 1))?,
            };
            for l in report.lines() {
                say!("{l}");
            }
            Ok(report.all_hold())
        }
        Command::Witness { group, n, mode, out } => {
            let cfg = Config::new(group, 2)?;
            let pres = cfg.presentation()?;
            let ctx = WitnessContext::with_budget(&pres, cfg.letter_budget)?;
            let mode = match mode {
                WitnessMode::Explicit => Mode::Explicit,
                WitnessMode::Counting => Mode::Counting,
            };
            let b = assemble_witness(&ctx, *n, mode)?;
            say!("{}", WitnessBundle::CSV_HEADER);
            say!("{}", b.csv_row());
            if let Some(e) = &b.explicit {
                say!(
                    "explicit steps={} chi_len={} z_len={} mu_len={}",
                    e.derivation.steps.len(),
                    e.chi.len_u64(),
                    e.z.len_u64(),
                    e.mu.len_u64()
                );
                if let Some(path) = out {
                    write_atomic(path, &e.derivation.to_text(&pres.alphabet))?;
                }
            }
            Ok(true)
        }
        Command::Verify {
            group,
            n,
            derivation,
            out,
        } => {
            let cfg = Config::new(group, 2)?;
            let pres = cfg.presentation()?;
            verify(&pres, cfg.letter_budget, *n, derivation.as_deref(), out.as_deref())
        }
        Command::QOracle {
            p,
            q,
            mu_max,
            l_max,
            out,
        } => {
            if *mu_max == 0 || *l_max == 0 {
                return Err(Error::Param("mu-max and l-max must be positive".into()));
            }
            let rep = qpq_oracle(*p, *q, *mu_max, *l_max, letter_budget())?;
            let alpha = Alphabet::new(*p)?;
            let mut text = rep.lines(&alpha).join("\n");
            text.push('\n');
            emit(out, &text)?;
            if out.is_some() {
                say!("{}", rep.summary());
            }
            Ok(rep.holds)
        }
        Command::Curve { group, n_max, out } => {
            let cfg = Config::new(group, 200)?;
            let c = distortion_curve(cfg.p, cfg.q, cfg.scale, *n_max)?;
            emit(out, &c.to_csv())?;
            say!("{}", c.summary());
            say!(
                "sparsity max_ratio={:.6} constant={}",
                c.max_sparsity_ratio, c.sparsity_constant
            );
            Ok(c.max_sparsity_ratio <= c.sparsity_constant as f64)
        }
        Command::Predict {
            group,
            n_max,
            k,
            out,
        } => {
            let cfg = Config::new(group, 200)?;
            let c = distortion_curve(cfg.p, cfg.q, cfg.scale, *n_max)?;
            let rows = predict_iterated(&c, *k)?;
            emit(out, &predict_csv(&rows, *k))?;
            Ok(true)
        }
        Command::SelfTest { seed } => {
            let results = self_test(*seed);
            for r in &results {
                say!(
                    "selftest {} {} {}",
                    r.name,
                    if r.pass { "pass" } else { "fail" },
                    r.detail
                );
            }
            Ok(results.iter().all(|r| r.pass))
        }
    }
}

fn verify(
    pres: &Presentation,
    budget: u64,
    n: u64,
    file: Option<&Path>,
    out: Option<&Path>,
) -> Result<bool> {
    let ctx = WitnessContext::with_budget(pres, budget)?;
    let b = assemble_witness(&ctx, n, Mode::Explicit)?;
    let e = b.explicit.as_ref().expect("explicit mode");
    let alpha = &pres.alphabet;
    let text = match file {
        Some(p) => std::fs::read_to_string(p)?,
        None => e.derivation.to_text(alpha),
    };
    if let Some(p) = out {
        write_atomic(p, &text)?;
    }
    let d = Derivation::parse(alpha, &text)?;
    let replay_ok = match replay_derivation(ctx.table(), &d) {
        Ok(()) => {
            let starts = d.start == b.w;
            let ends = d.end.free_reduce() == e.chi;
            say!(
                "replay={} steps={} start_is_w={starts} end_is_chi={ends}",
                if starts && ends { "pass" } else { "fail" },
                d.steps.len()
            );
            starts && ends
        }
        Err(err) => {
            say!("replay=fail {err}");
            false
        }
    };
    let data = derive_hnn_data(pres)?;
    let hnn = Hnn::new(pres, &data)?;
    let rep = hnn.britton_reduce(&b.w.concat(&e.chi.inverse()));
    say!(
        "britton={} pinches={} remaining_t={}",
        if rep.trivial { "pass" } else { "fail" },
        rep.pinches,
        rep.normal_form.t_count()
    );
    Ok(replay_ok && rep.trivial)
}

/// One line of the self-test report.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SelfTestResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn suite(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> SelfTestResult {
    match f() {
        Ok((pass, detail)) => SelfTestResult { name, pass, detail },
        Err(e) => SelfTestResult {
            name,
            pass: false,
            detail: format!("error: {e}"),
        },
    }
}

/// Invariant suites at desk scale. The seed only changes sampling order.
pub fn self_test(seed: u64) -> Vec<SelfTestResult> {
    let mut out = Vec::new();
    out.push(suite("census", || {
        let mut total = 0;
        for p in 2..=4 {
            for q in 1..p {
                let c = build_presentation(p, q, 1)?.census()?;
                total += c.relators;
            }
        }
        Ok((true, format!("relators={total}")))
    }));
    out.push(suite("census-rejects-corruption", || {
        let mut pres = build_presentation(2, 1, 1)?;
        pres.inject_duplicate_rips();
        Ok(match pres.census() {
            Err(e) => (true, format!("rejected: {e}")),
            Ok(_) => (false, "corrupted allocation accepted".into()),
        })
    }));
    out.push(suite("sc-modes-agree", || {
        let pres = build_presentation(2, 1, 1)?;
        let brute = brute_report(&pres, DEFAULT_BRUTE_BUDGET)?;
        let analytic = analytic_rips_margins(&pres)?;
        let ub = analytic.relator_bound.as_ref().map_or(0, |b| b.piece_ub);
        let bp = brute.conditions[0].max_piece;
        let agree = brute.conditions[0].holds == analytic.conditions[0].holds;
        Ok((bp <= ub && agree, format!("brute_piece={bp} analytic_ub={ub}")))
    }));
    out.push(suite("binomial-counts", || {
        let mut checked = 0;
        for p in 2..=4 {
            let phi = Phi::new(Alphabet::new(p)?);
            for n in 0..=10 {
                for i in 0..=p {
                    let c = binomial_counts(&phi, n, i)?;
                    for (j, &v) in c.iter().enumerate() {
                        let want = if (j as u32) < i { 0 } else { binom_u64(n, j as u64 - i as u64) };
                        if v != want {
                            return Ok((false, format!("p={p} n={n} i={i} j={j}: {v} != {want}")));
                        }
                        checked += 1;
                    }
                }
            }
        }
        Ok((true, format!("entries={checked}")))
    }));
    out.push(suite("phi-inverse", || {
        let phi = Phi::new(Alphabet::new(2)?);
        let r = check_phi_inverse_properties(&phi, 6)?;
        Ok((r.ok(), format!("pairs={}", r.pairs_checked)))
    }));
    out.push(suite("fence-normalize", || {
        let phi = Phi::new(Alphabet::new(3)?);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..50 {
            let t = random_fence_triple(&phi, &mut rng, 4, 3)?;
            let (nf, _) = fence_normalize(&phi, &t)?;
            nf.validate(&phi)?;
        }
        Ok((true, "triples=50".into()))
    }));
    out.push(suite("q-oracle", || {
        let r = qpq_oracle(2, 1, 3, 4, u64::MAX)?;
        Ok((r.holds, format!("max_ratio={:.6}", r.max_ratio)))
    }));
    out.push(suite("witness-identities", || {
        let pres = build_presentation(2, 1, 1)?;
        let ctx = WitnessContext::new(&pres)?;
        for n in 1..=10 {
            assemble_witness(&ctx, n, Mode::Counting)?;
        }
        Ok((true, "n<=10".into()))
    }));
    out.push(suite("witness-replay-britton", || {
        let pres = build_presentation(2, 1, 1)?;
        let ok = verify_quiet(&pres, 1)?;
        Ok((ok, "scale=1 n=1".into()))
    }));
    out.push(suite("free-bases", || {
        let pres = build_presentation(2, 1, 1)?;
        let d = derive_hnn_data(&pres)?;
        let mut all = true;
        let mut ranks = Vec::new();
        for set in [&d.s_set, &d.u_set, &d.s1, &d.s2] {
            let v = verify_free_basis(set)?;
            all &= v.is_basis;
            ranks.push(v.rank.to_string());
        }
        Ok((all, format!("ranks={}", ranks.join(","))))
    }));
    out.push(suite("curve-slope", || {
        let c = distortion_curve(2, 1, 4, 60)?;
        Ok((c.rel_err() < 0.2, c.summary()))
    }));
    out
}

fn verify_quiet(pres: &Presentation, n: u64) -> Result<bool> {
    let ctx = WitnessContext::new(pres)?;
    let b = assemble_witness(&ctx, n, Mode::Explicit)?;
    let e = b.explicit.as_ref().expect("explicit mode");
    replay_derivation(ctx.table(), &e.derivation)?;
    let data = derive_hnn_data(pres)?;
    let hnn = Hnn::new(pres, &data)?;
    let w: Word = b.w.concat(&e.chi.inverse());
    Ok(hnn.britton_reduce(&w).trivial && e.derivation.end == e.chi)
}
