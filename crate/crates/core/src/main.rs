use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use toral_rigidity::dual_dynamics::{ergodicity_check, freeness_check, Outcome};
use toral_rigidity::group_model::{
    random_h1, sl_generators, AlphaSurrogate, FamilyTag, GroupElement, GroupPresentation, LoadedFamily,
    PresentationDoc, SubgroupTag,
};
use toral_rigidity::relt_certificate::{
    build_certificate, check_certificate, k_row_decompose, klkl_decompose, RelTCertificate,
};
use toral_rigidity::replay::{parse_matrix, run_theorem1_replay, ReplayOptions};
use toral_rigidity::report::{emit_report, Format, Report, Status};
use toral_rigidity::small_n_classify::classify_small_n;
use toral_rigidity::spectral_witness::{
    affine_asi_witness, compression_norm, cosine_test_functions, strong_ergodicity_verdict, validate_measure_sequence,
    DiscreteMeasure, Exclusion, SpectralOptions, SpectralReport, StrongOutcome, Tolerances,
};
use toral_rigidity::{Error, IntMatrix, Result};

#[derive(Parser, Debug)]
#[command(name = "toral", version, about = "Block matrix-group actions on tori: build, certify, replay")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Json)]
    format: OutFormat,
    /// Seed for every randomized step; runs with equal seeds are byte-identical.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OutFormat {
    Json,
    Text,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Json => Format::Json,
            OutFormat::Text => Format::Text,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FamilyArg {
    Theorem1,
    Remark4,
    Quotient,
    Diagonal,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ActionArg {
    Lambda,
    Sl,
    Gamma,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ExcludeArg {
    None,
    Origin,
    Sublattice,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Candidate {
    Product,
    Diagonal,
    Graph,
}

#[derive(Args, Debug, Clone)]
struct SpectralKnobs {
    #[arg(long, default_value_t = 12)]
    radius: u32,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long = "max-iter", default_value_t = 100_000)]
    max_iter: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Emit a presentation document for a family.
    Build {
        #[arg(long, default_value_t = 0)]
        k: usize,
        #[arg(long)]
        n: usize,
        /// Λ generator as a matrix literal, e.g. [[2,1],[1,1]]; repeatable.
        #[arg(long = "A", value_name = "MATRIX")]
        a: Vec<String>,
        #[arg(long, value_enum, default_value_t = FamilyArg::Theorem1)]
        family: FamilyArg,
        /// Rotation number for the affine family, as a decimal.
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Decide or bound ergodicity through the dual-lattice orbit criterion.
    Ergodicity {
        presentation: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        bound: usize,
        #[arg(long, default_value_t = 12)]
        radius: u32,
    },
    /// Compression-norm estimates of the averaging operator.
    Spectral {
        presentation: PathBuf,
        #[command(flatten)]
        knobs: SpectralKnobs,
        /// Comma-separated radii for a trend table; overrides --radius.
        #[arg(long, value_delimiter = ',')]
        radii: Vec<u32>,
        #[arg(long, value_enum)]
        action: Option<ActionArg>,
        #[arg(long, value_enum, default_value_t = ExcludeArg::Origin)]
        exclude: ExcludeArg,
    },
    /// Strong-ergodicity verdict with an explicit almost invariant witness.
    Witness {
        presentation: PathBuf,
        #[arg(long, default_value_t = 128)]
        window: usize,
        #[command(flatten)]
        knobs: SpectralKnobs,
    },
    /// Validate candidate couplings on a torus grid.
    #[command(name = "validate-nu")]
    ValidateNu {
        /// Measure files (JSON or binary grid weights).
        measures: Vec<PathBuf>,
        /// JSON list of generator matrices acting on the grid.
        #[arg(long)]
        generators: PathBuf,
        /// Grid resolution for synthetic candidates.
        #[arg(long, default_value_t = 64)]
        grid: u64,
        /// Add a synthetic candidate at the given grid; repeatable.
        #[arg(long, value_enum)]
        synthetic: Vec<Candidate>,
    },
    /// Decompose H₁ elements as K·L·K·L and K rows as products of K_i.
    Decompose {
        presentation: PathBuf,
        /// An H₁ element as a matrix literal or file; random samples otherwise.
        #[arg(long)]
        element: Option<String>,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 1_000_000)]
        bound: i64,
    },
    /// Build and check the relative property (T) certificate.
    Certify {
        presentation: PathBuf,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Check a stored certificate instead of building one.
        #[arg(long)]
        certificate: Option<PathBuf>,
        /// Include the certificate itself in the output.
        #[arg(long)]
        emit_certificate: bool,
    },
    /// Small-dimension classification of a subgroup of SL(n, Z).
    Classify {
        /// JSON list of generator matrices.
        generators: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u8).range(2..=3))]
        n: u8,
    },
    /// Fixed-subtorus dimensions of all short words.
    Freeness {
        presentation: PathBuf,
        #[arg(long, default_value_t = 6)]
        words: usize,
    },
    /// Full profile replay for the family built from a single A.
    Replay {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        #[arg(long = "A", value_name = "MATRIX", default_value = "[]")]
        a: String,
        #[arg(long, default_value_t = 100_000)]
        bound: usize,
        #[command(flatten)]
        knobs: SpectralKnobs,
        #[arg(long, default_value_t = 128)]
        window: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 6)]
        words: usize,
    },
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// Reads a presentation document, either bare or inside the report envelope
/// that `build` emits.
fn load_doc(path: &Path) -> Result<PresentationDoc> {
    let mut v: serde_json::Value =
        serde_json::from_str(&read_text(path)?).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    if let Some(body) = v.pointer_mut("/presentation/body") {
        v = body.take();
    }
    serde_json::from_value(v).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn load_block(path: &Path) -> Result<GroupPresentation> {
    load_doc(path)?.build_block()
}

fn load_matrices(path: &Path) -> Result<Vec<IntMatrix>> {
    serde_json::from_str(&read_text(path)?).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn matrix_arg(s: &str) -> Result<IntMatrix> {
    let p = Path::new(s);
    if p.is_file() {
        parse_matrix(&read_text(p)?)
    } else {
        parse_matrix(s)
    }
}

fn single<T: Serialize>(name: &str, citation: &str, body: &T) -> Result<Report> {
    let mut r = Report::new();
    r.push(name, citation, body)?;
    Ok(r)
}

fn build(k: usize, n: usize, a: &[String], family: FamilyArg, alpha: Option<f64>) -> Result<(Report, Status)> {
    let lambda = a.iter().map(|s| matrix_arg(s)).collect::<Result<Vec<_>>>()?;
    let doc = match family {
        FamilyArg::Remark4 => {
            let alpha = match alpha {
                Some(x) => AlphaSurrogate::from_f64(x, 1_000_000_000_000)?,
                None => AlphaSurrogate::default_irrational(),
            };
            PresentationDoc { k: 0, n, lambda: Vec::new(), family: FamilyTag::Remark4, alpha: Some(alpha) }
        }
        other => {
            let family = match other {
                FamilyArg::Quotient => FamilyTag::Quotient,
                FamilyArg::Diagonal => FamilyTag::Diagonal,
                _ => FamilyTag::Theorem1,
            };
            PresentationDoc { k, n, lambda, family, alpha: None }
        }
    };
    doc.build()?;
    Ok((single("presentation", "block family Λ ⋉ (M_{k,n}(Z) ⋊ SL(n,Z)) acting on H = Z^{k+n}", &doc)?, Status::Consistent))
}

fn ergodicity(path: &Path, bound: usize, radius: u32) -> Result<(Report, Status)> {
    let p = load_block(path)?;
    let v = ergodicity_check(&p, bound, radius)?;
    let status = if v.outcome == Outcome::Inconclusive { Status::Inconclusive } else { Status::Consistent };
    Ok((single("ergodicity", "Γ ↷ Ĥ is ergodic iff Λ ↷ T^k is, iff no nonzero point of Z^k has a finite Λ-orbit", &v)?, status))
}

#[derive(Serialize)]
struct SpectralTable {
    action: &'static str,
    rows: Vec<SpectralReport>,
    monotone_in_radius: bool,
    label: &'static str,
}

fn spectral(
    path: &Path,
    knobs: &SpectralKnobs,
    radii: &[u32],
    action: Option<ActionArg>,
    exclude: ExcludeArg,
    seed: u64,
) -> Result<(Report, Status)> {
    let p = load_block(path)?;
    let (k, n) = (p.spec.k, p.spec.n);
    let action = action.unwrap_or(if k > 0 { ActionArg::Lambda } else { ActionArg::Sl });
    let (name, gens) = match action {
        ActionArg::Lambda => ("lambda", p.lambda_generators.clone()),
        ActionArg::Sl => ("sl", sl_generators(n)),
        ActionArg::Gamma => ("gamma", p.gamma_linear_generators()),
    };
    if gens.is_empty() {
        return Err(Error::Precondition(format!("the {name} action has no generators")));
    }
    let exclusion = match exclude {
        ExcludeArg::None => Exclusion::None,
        ExcludeArg::Origin => Exclusion::Origin,
        ExcludeArg::Sublattice => Exclusion::Sublattice { k },
    };
    let radii = if radii.is_empty() { vec![knobs.radius] } else { radii.to_vec() };
    let rows = radii
        .iter()
        .map(|&r| compression_norm(&gens, exclusion, r, knobs.tol, knobs.max_iter, seed))
        .collect::<Result<Vec<_>>>()?;
    let monotone = rows.windows(2).all(|w| w[1].norm_estimate >= w[0].norm_estimate - 1e-9);
    let status = if rows.iter().all(|r| r.converged) { Status::Consistent } else { Status::Inconclusive };
    let table = SpectralTable { action: name, rows, monotone_in_radius: monotone, label: "evidence" };
    Ok((single("spectral", "finite compressions bound the averaging-operator norm from below", &table)?, status))
}

fn witness(path: &Path, window: usize, knobs: &SpectralKnobs, seed: u64) -> Result<(Report, Status)> {
    match load_doc(path)?.build()? {
        LoadedFamily::Affine(family) => {
            let w = affine_asi_witness(&family, window)?;
            let cite = "functions of x₁ alone are fixed by the linear part; the α-rotation moves them slightly";
            Ok((single("witness", cite, &w)?, Status::Consistent))
        }
        LoadedFamily::Block(p) => {
            let opts =
                SpectralOptions { radius: knobs.radius, tolerance: knobs.tol, max_iterations: knobs.max_iter, seed, window };
            let r = strong_ergodicity_verdict(&p, &opts)?;
            let status = match r.outcome {
                StrongOutcome::Inconclusive => Status::Inconclusive,
                StrongOutcome::NotStronglyErgodic if !r.lift.iter().all(|l| l.equal) => Status::Contradiction,
                _ => Status::Consistent,
            };
            Ok((single("strong_ergodicity", &r.citation.clone(), &r)?, status))
        }
    }
}

fn validate_nu(measures: &[PathBuf], generators: &Path, grid: u64, synthetic: &[Candidate]) -> Result<(Report, Status)> {
    let gens = load_matrices(generators)?;
    let Some(first) = gens.first() else {
        return Err(Error::Precondition("at least one generator is required".into()));
    };
    let dim = first.rows() as u32;
    let mut list = measures.iter().map(|p| DiscreteMeasure::read_any(p)).collect::<Result<Vec<_>>>()?;
    for c in synthetic {
        list.push(match c {
            Candidate::Product => DiscreteMeasure::product(dim, grid)?,
            Candidate::Diagonal => DiscreteMeasure::diagonal(dim, grid)?,
            Candidate::Graph => DiscreteMeasure::graph(first, grid)?,
        });
    }
    let Some(m0) = list.first() else {
        return Err(Error::Precondition("no measures given; pass files or --synthetic".into()));
    };
    let tests = cosine_test_functions(m0.dim, m0.resolution);
    let report = validate_measure_sequence(&list, &gens, &tests, Tolerances::default())?;
    let cite = "rigidity test: couplings with uniform marginals, no diagonal mass, decorrelating, asymptotically invariant";
    Ok((single("validate_nu", cite, &report)?, Status::Consistent))
}

#[derive(Serialize)]
struct DecomposeLine {
    element: GroupElement,
    klkl: toral_rigidity::relt_certificate::KLKLWitness,
    k_rows: Vec<Vec<GroupElement>>,
    recomposed: bool,
}

#[derive(Serialize)]
struct DecomposeSummary {
    samples: usize,
    bound: i64,
    all_recomposed: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    detail: Vec<DecomposeLine>,
}

fn decompose(path: &Path, element: Option<&str>, samples: usize, bound: i64, seed: u64) -> Result<(Report, Status)> {
    let p = load_block(path)?;
    let elems: Vec<GroupElement> = match element {
        Some(s) => vec![GroupElement::new(p.spec, matrix_arg(s)?)?],
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..samples).map(|_| random_h1(p.spec, bound, &mut rng)).collect()
        }
    };
    let keep_detail = element.is_some();
    let mut detail = Vec::new();
    let mut all = true;
    for h in &elems {
        let w = klkl_decompose(h)?;
        let ok = w.verify().is_ok();
        let k_rows = w
            .factors
            .iter()
            .filter(|f| f.belongs_to(SubgroupTag::K))
            .map(k_row_decompose)
            .collect::<Result<Vec<_>>>()?;
        all &= ok;
        if keep_detail {
            detail.push(DecomposeLine { element: h.clone(), klkl: w, k_rows, recomposed: ok });
        }
    }
    let summary = DecomposeSummary { samples: elems.len(), bound, all_recomposed: all, detail };
    let status = if all { Status::Consistent } else { Status::Contradiction };
    Ok((single("decompose", "bounded generation H₁ = K·L·K·L with K = K_1 ⋯ K_k", &summary)?, status))
}

#[derive(Serialize)]
struct CertifyOut<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<&'a RelTCertificate>,
    report: toral_rigidity::relt_certificate::CertificateReport,
}

fn certify(path: &Path, samples: usize, stored: Option<&Path>, emit: bool, seed: u64) -> Result<(Report, Status)> {
    let p = load_block(path)?;
    let cert: RelTCertificate = match stored {
        Some(f) => serde_json::from_str(&read_text(f)?)?,
        None => build_certificate(&p)?,
    };
    let report = check_certificate(&cert, &p, samples, seed)?;
    let status = if report.all_passed && report.conclusion_reached { Status::Consistent } else { Status::Contradiction };
    let out = CertifyOut { certificate: emit.then_some(&cert), report };
    Ok((single("rigidity", "relative property (T) of (Γ ⋉ H, H) derived from Z^n ⊂ Z^n ⋊ SL(n,Z)", &out)?, status))
}

fn classify(path: &Path, n: usize) -> Result<(Report, Status)> {
    let gens = load_matrices(path)?;
    let r = classify_small_n(&gens, n)?;
    Ok((single("classification", "for n ≤ 3 a rigid non-strongly-ergodic action forces a common eigenvector", &r)?, Status::Consistent))
}

fn freeness(path: &Path, words: usize) -> Result<(Report, Status)> {
    let p = load_block(path)?;
    let r = freeness_check(&p, words)?;
    let status = if r.all_free { Status::Consistent } else { Status::Contradiction };
    Ok((single("freeness", "a nonidentity automorphism fixes a proper closed subtorus, which is a null set", &r)?, status))
}

fn run(cli: &Cli) -> Result<(Report, Status)> {
    let seed = cli.seed;
    match &cli.command {
        Command::Build { k, n, a, family, alpha } => build(*k, *n, a, *family, *alpha),
        Command::Ergodicity { presentation, bound, radius } => ergodicity(presentation, *bound, *radius),
        Command::Spectral { presentation, knobs, radii, action, exclude } => {
            spectral(presentation, knobs, radii, *action, *exclude, seed)
        }
        Command::Witness { presentation, window, knobs } => witness(presentation, *window, knobs, seed),
        Command::ValidateNu { measures, generators, grid, synthetic } => {
            validate_nu(measures, generators, *grid, synthetic)
        }
        Command::Decompose { presentation, element, samples, bound } => {
            decompose(presentation, element.as_deref(), *samples, *bound, seed)
        }
        Command::Certify { presentation, samples, certificate, emit_certificate } => {
            certify(presentation, *samples, certificate.as_deref(), *emit_certificate, seed)
        }
        Command::Classify { generators, n } => classify(generators, *n as usize),
        Command::Freeness { presentation, words } => freeness(presentation, *words),
        Command::Replay { k, n, a, bound, knobs, window, samples, words } => {
            let opts = ReplayOptions {
                bound: *bound,
                radius: knobs.radius,
                tolerance: knobs.tol,
                max_iterations: knobs.max_iter,
                window: *window,
                samples: *samples,
                word_length: *words,
                seed,
                ..Default::default()
            };
            let r = run_theorem1_replay(*k, *n, &matrix_arg(a)?, &opts)?;
            Ok((r.to_report()?, r.status))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (report, status) = match run(&cli) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let text = emit_report(&report, cli.format.into());
    let written = match &cli.out {
        Some(path) => fs::write(path, &text).map_err(Error::from),
        None => {
            print!("{text}");
            Ok(())
        }
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    ExitCode::from(status.exit_code() as u8)
}
