//! `paramodular`: command-line front end for theta-block searches, Jacobi
//! bases, inflation, Borcherds products, Jacobi restriction and the
//! Atkin–Lehner coefficient tools.

mod manifest;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use paramodular::borcherds::{borcherds_expand, BorcherdsError};
use paramodular::field::{Field, FieldError, FieldTag, PrimeField, Rat, Rationals};
use paramodular::jacobi::{gritsenko_lift, space_basis, BasisOptions, DimensionTable, JacobiError, JacobiFormFragment, Strategy};
use paramodular::linalg::Echelon;
use paramodular::paramodular::{
    certify_nonlift, infill, parse_eigen, polarize, prolong, IndexWindow, ParamodularError, ParamodularFragment,
};
use paramodular::restriction::{jrmj_basis_resumable, JrmjState, RestrictionError, RestrictionProblem};
use paramodular::store::{CoeffDB, JacobiDB, StoreError};
use paramodular::theta::{search, ThetaBlock, ThetaError};
use paramodular::weak::{inflate, inflate_case3, validate_weight0, InflationSpec, WeakError, WeakJacobiFragment};

use manifest::RunManifest;

/// Environment variable naming a directory for cached bases and
/// restriction checkpoints.
const CACHE_ENV: &str = "PARAMODULAR_CACHE";

/// Restriction runs whose slice indices sum past this need `--confirm-long`.
const LONG_RUN_INDEX: i64 = 2000;

/// `println!` that tolerates a closed stdout, e.g. when piped into `head`.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Exit {
    Io = 3,
    Input = 4,
    Construction = 5,
    Validation = 6,
    SelfCheck = 7,
    Coefficients = 8,
    Restriction = 9,
    Dependent = 10,
    NeedsConfirm = 11,
}

#[derive(Debug)]
struct CliError {
    code: Exit,
    msg: String,
}

fn fail(code: Exit, msg: impl Into<String>) -> CliError {
    CliError { code, msg: msg.into() }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        fail(Exit::Io, e.to_string())
    }
}
impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        fail(Exit::Input, e.to_string())
    }
}
impl From<FieldError> for CliError {
    fn from(e: FieldError) -> Self {
        fail(Exit::Input, e.to_string())
    }
}
impl From<ThetaError> for CliError {
    fn from(e: ThetaError) -> Self {
        fail(Exit::Construction, e.to_string())
    }
}
impl From<JacobiError> for CliError {
    fn from(e: JacobiError) -> Self {
        fail(Exit::Construction, e.to_string())
    }
}
impl From<WeakError> for CliError {
    fn from(e: WeakError) -> Self {
        let code = match e {
            WeakError::InvalidSpec(_) => Exit::Input,
            WeakError::ValidationFailure(_) => Exit::Validation,
            _ => Exit::Construction,
        };
        fail(code, e.to_string())
    }
}
impl From<BorcherdsError> for CliError {
    fn from(e: BorcherdsError) -> Self {
        let code = match e {
            BorcherdsError::SelfCheckFailure { .. } => Exit::SelfCheck,
            BorcherdsError::ValidationFailure(_) | BorcherdsError::InsufficientCoverage { .. } => Exit::Validation,
            _ => Exit::Construction,
        };
        fail(code, e.to_string())
    }
}
impl From<ParamodularError> for CliError {
    fn from(e: ParamodularError) -> Self {
        fail(Exit::Coefficients, e.to_string())
    }
}
impl From<RestrictionError> for CliError {
    fn from(e: RestrictionError) -> Self {
        fail(Exit::Restriction, e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "paramodular", version, about = "Weight-2 paramodular forms from Jacobi forms")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct OutArg {
    /// Output path; a manifest is written next to it.
    #[arg(long = "out")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Theta blocks of a given weight and index.
    ThetaSearch {
        #[arg(long)]
        weight: i64,
        /// Index of the blocks.
        #[arg(long)]
        level: i64,
        /// Number of thetas (default 12 - weight).
        #[arg(long)]
        len: Option<usize>,
        /// Keep only blocks with positive order everywhere.
        #[arg(long)]
        cusp: bool,
    },
    /// Basis of Jacobi cusp forms of the given weight and index.
    JacobiBasis {
        #[arg(long, default_value_t = 2)]
        weight: i64,
        #[arg(long)]
        level: i64,
        /// Coverage n <= trunc of the returned forms.
        #[arg(long)]
        trunc: Option<i64>,
        #[arg(long, default_value_t = 12347)]
        prime: u64,
        /// Dimension table file (defaults to the built-in rows).
        #[arg(long)]
        dims: Option<PathBuf>,
        /// Comma-separated strategies: theta-blocks, products, v2, quotients.
        #[arg(long, default_value = "theta-blocks,products,v2,quotients")]
        strategy: String,
        /// Output directory, one file per form.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Weight-0 form psi by the inflation method.
    Inflate {
        #[arg(long)]
        level: i64,
        /// Theta block phi, e.g. "eta^-6 th1 th1 th2 ...".
        #[arg(long)]
        phi: String,
        /// Inflation Theta of phi.
        #[arg(long)]
        theta: String,
        #[arg(long, default_value = "-1", allow_hyphen_values = true)]
        beta: String,
        /// 2 for (-1)^nu (phi|V2)/phi + beta Theta/phi, 3 for Theta/phi.
        #[arg(long, default_value_t = 2)]
        case: u8,
        #[arg(long)]
        trunc: Option<i64>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Fourier–Jacobi expansion of a Borcherds product.
    Borcherds {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 2)]
        depth: usize,
        #[arg(long, default_value_t = 4)]
        trunc: i64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Gritsenko lift of a Jacobi form on slices m <= depth, n <= trunc.
    Lift {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 2)]
        depth: i64,
        #[arg(long, default_value_t = 4)]
        trunc: i64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Jacobi restriction.
    Restrict {
        #[arg(long)]
        level: i64,
        #[arg(long, default_value_t = 2)]
        weight: i64,
        #[arg(long)]
        depth: i64,
        /// Bound on n m N - r^2 / 4 (a rational).
        #[arg(long)]
        detmax: String,
        /// Signed exact divisors, e.g. "-2,+461".
        #[arg(long, default_value = "")]
        eigen: String,
        /// Work over F_p instead of Q.
        #[arg(long)]
        prime: Option<u64>,
        #[arg(long)]
        dims: Option<PathBuf>,
        /// Allow runs expected to take hours.
        #[arg(long)]
        confirm_long: bool,
        /// Window indices between checkpoints written to the cache.
        #[arg(long, default_value_t = 500)]
        checkpoint_every: usize,
        /// Output directory for the kernel basis.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Projection onto an Atkin–Lehner eigenspace at level 2N.
    Polarize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        eps2: i8,
        #[arg(long = "eps-n", allow_hyphen_values = true)]
        eps_n: i8,
        #[command(flatten)]
        out: OutArg,
    },
    /// Propagates known coefficients along Atkin–Lehner orbits.
    Infill {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
    /// Extends a fragment to the coverage of a basis.
    Prolong {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        basis: Vec<PathBuf>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Tests a fragment for independence from Gritsenko lifts.
    CertifyNonlift {
        #[arg(long = "in")]
        input: PathBuf,
        /// Lift fragments; computed from a Jacobi basis when omitted.
        #[arg(long, num_args = 1..)]
        lifts: Vec<PathBuf>,
        #[arg(long)]
        prime: Option<u64>,
        #[arg(long)]
        dims: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global();
    }
    match run(cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.msg);
            ExitCode::from(e.code as u8)
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| fail(Exit::Io, format!("{}: {e}", path.display())))
}

fn dims_table(path: &Option<PathBuf>) -> Result<DimensionTable, CliError> {
    match path {
        Some(p) => read(p)?.parse().map_err(|e: String| fail(Exit::Input, e)),
        None => Ok(DimensionTable::established()),
    }
}

fn parse_rat(s: &str) -> Result<Rat, CliError> {
    s.parse().map_err(|e: FieldError| fail(Exit::Input, e.to_string()))
}

fn cache_dir() -> Option<PathBuf> {
    std::env::var_os(CACHE_ENV).map(PathBuf::from)
}

/// Writes `text` and returns the path for the manifest.
fn write_out(path: &Path, text: &str) -> Result<PathBuf, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(path.to_path_buf())
}

/// Jacobi basis, read from the cache directory when present there.
fn cached_basis(weight: i64, index: i64, dims: &DimensionTable, prime: u64) -> Result<Vec<JacobiFormFragment<Rationals>>, CliError> {
    let opts = BasisOptions { prime, ..BasisOptions::for_index(index) };
    let dir = cache_dir().map(|c| c.join(format!("basis-k{weight}-m{index}-n{}", opts.n_max)));
    if let Some(d) = &dir {
        if d.join("done").exists() {
            let mut forms = Vec::new();
            let mut files: Vec<PathBuf> = fs::read_dir(d)?.filter_map(|e| e.ok().map(|e| e.path())).collect();
            files.retain(|p| p.extension().is_some_and(|x| x == "jdb"));
            files.sort();
            for f in files {
                forms.push(JacobiDB::parse(&read(&f)?)?.to_form(Rationals)?);
            }
            return Ok(forms);
        }
    }
    let strategies = [Strategy::ThetaBlocks, Strategy::ThetaBlockProducts, Strategy::V2Images, Strategy::ExactQuotients];
    let res = space_basis(weight, index, &strategies, dims, &opts)?;
    if let Some(d) = &dir {
        fs::create_dir_all(d)?;
        for (i, f) in res.forms.iter().enumerate() {
            fs::write(d.join(format!("{i:04}.jdb")), JacobiDB::from_form(f).serialize())?;
        }
        fs::write(d.join("done"), "")?;
    }
    Ok(res.forms)
}

fn run(cmd: Cmd) -> Result<ExitCode, CliError> {
    let start = Instant::now();
    let mut man = RunManifest::default();
    match cmd {
        Cmd::ThetaSearch { weight, level, len, cusp } => {
            let len = len.unwrap_or((12 - weight).max(0) as usize);
            for b in search(weight, level, len)? {
                if !cusp || b.min_order() > Rat::zero() {
                    say!("{b}");
                }
            }
            return Ok(ExitCode::SUCCESS);
        }
        Cmd::JacobiBasis { weight, level, trunc, prime, dims, strategy, out } => {
            let table = dims_table(&dims)?;
            let strategies = strategy
                .split(',')
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<Strategy>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| fail(Exit::Input, e))?;
            let mut opts = BasisOptions { prime, ..BasisOptions::for_index(level) };
            if let Some(t) = trunc {
                opts.n_max = t;
            }
            let res = space_basis(weight, level, &strategies, &table, &opts)?;
            say!("dimension {}", res.forms.len());
            for s in &res.sources {
                say!("  {s}");
            }
            if let Some(dir) = out {
                fs::create_dir_all(&dir)?;
                man.command = "jacobi-basis".into();
                man.param("weight", weight).param("level", level).param("trunc", opts.n_max).param("prime", prime).param("strategy", &strategy);
                for (i, f) in res.forms.iter().enumerate() {
                    let p = dir.join(format!("{i:04}.jdb"));
                    fs::write(&p, JacobiDB::from_form(f).serialize())?;
                    man.output(&p)?;
                }
                man.finish(start, &dir.join("manifest.json"))?;
            }
        }
        Cmd::Inflate { level, phi, theta, beta, case, trunc, out } => {
            let phi: ThetaBlock = phi.parse()?;
            let big: ThetaBlock = theta.parse()?;
            let n_max = trunc.unwrap_or((level + 3) / 4 + 1);
            let psi = match case {
                2 => inflate(&InflationSpec { level, ..InflationSpec::case2(phi.clone(), big.clone(), parse_rat(&beta)?) }, n_max)?,
                3 => inflate_case3(&phi, &big, n_max)?,
                _ => return Err(fail(Exit::Input, "case must be 2 or 3")),
            };
            let rep = validate_weight0(&psi);
            say!("c(0,0) {} weight {} valid {}", rep.c00, rep.weight, rep.passes());
            for v in &rep.violations {
                say!("  {v}");
            }
            if let Some(p) = out.out {
                man.command = "inflate".into();
                man.param("level", level).param("phi", &phi).param("theta", &big).param("beta", &beta).param("case", case).param("trunc", n_max);
                let p = write_out(&p, &JacobiDB::from_form(psi.form()).serialize())?;
                man.output(&p)?;
                man.finish(start, &manifest_path(&p))?;
            }
            if !rep.passes() {
                return Err(fail(Exit::Validation, "psi failed validation"));
            }
        }
        Cmd::Borcherds { input, depth, trunc, out } => {
            let psi = WeakJacobiFragment::new(JacobiDB::parse(&read(&input)?)?.to_form(Rationals)?)?;
            let b = borcherds_expand(&psi, depth, trunc)?;
            say!("weight {} leading slice {} fricke {:?}", b.exponents.weight, b.exponents.leading_slice(), b.fricke_sign);
            if let Some(p) = out.out {
                man.command = "borcherds".into();
                man.param("depth", depth).param("trunc", trunc);
                man.input(&input)?;
                let frag = match b.fricke_sign {
                    Some(s) => b.fragment.clone().with_eigen(BTreeMap::from([(b.exponents.level, s)]))?,
                    None => b.fragment.clone(),
                };
                let cov = format!("n<={trunc} m<={}", b.exponents.leading_slice() + depth as i64 - 1);
                let p = write_out(&p, &CoeffDB::from_fragment(&frag, &cov).serialize())?;
                man.output(&p)?;
                man.finish(start, &manifest_path(&p))?;
            }
        }
        Cmd::Lift { input, depth, trunc, out } => {
            let phi = JacobiDB::parse(&read(&input)?)?.to_form(Rationals)?;
            let cover = IndexWindow { n_max: trunc, m_max: depth }.indices(phi.index());
            let sign = if phi.weight() % 2 == 0 { 1 } else { -1 };
            let lift = gritsenko_lift(&phi, &cover)?.with_eigen(BTreeMap::from([(phi.index(), sign)]))?;
            say!("{} coefficients", lift.len());
            if let Some(p) = out.out {
                man.command = "lift".into();
                man.param("depth", depth).param("trunc", trunc);
                man.input(&input)?;
                let p = write_out(&p, &CoeffDB::from_fragment(&lift, &format!("n<={trunc} m<={depth}")).serialize())?;
                man.output(&p)?;
                man.finish(start, &manifest_path(&p))?;
            }
        }
        Cmd::Restrict { level, weight, depth, detmax, eigen, prime, dims, confirm_long, checkpoint_every, out } => {
            let total: i64 = (1..=depth).map(|j| j * level).sum();
            if total > LONG_RUN_INDEX && !confirm_long {
                return Err(fail(
                    Exit::NeedsConfirm,
                    format!("slice indices sum to {total}; this run takes hours, pass --confirm-long"),
                ));
            }
            let eig = parse_eigen(&eigen).map_err(|e| fail(Exit::Input, e))?;
            let prob = RestrictionProblem::new(level, weight, depth, parse_rat(&detmax)?, eig)?;
            let table = dims_table(&dims)?;
            let mut bases = Vec::new();
            for j in 1..=depth {
                bases.push(cached_basis(weight, j * level, &table, prime.unwrap_or(12347))?);
            }
            let key = format!("jrmj-N{level}-k{weight}-d{depth}-det{}-e{}-p{}", detmax.replace('/', "_"), eigen.replace(',', "_"), prime.unwrap_or(0));
            man.command = "restrict".into();
            man.param("level", level).param("weight", weight).param("depth", depth).param("detmax", &detmax).param("eigen", &eigen);
            man.param("prime", prime.map(|p| p.to_string()).unwrap_or_else(|| "Q".into()));
            let dim = match prime {
                Some(p) => {
                    let fp = PrimeField::new(p)?;
                    let red = bases
                        .iter()
                        .map(|b| b.iter().map(|f| f.reduce_mod_p(p)).collect::<Result<Vec<_>, _>>())
                        .collect::<Result<Vec<_>, _>>()?;
                    restrict_with(&prob, &red, fp, &key, checkpoint_every, out.as_deref(), &mut man)?
                }
                None => restrict_with(&prob, &bases, Rationals, &key, checkpoint_every, out.as_deref(), &mut man)?,
            };
            say!("dimension {dim}");
            if let Some(dir) = out {
                man.finish(start, &dir.join("manifest.json"))?;
            }
        }
        Cmd::Polarize { input, eps2, eps_n, out } => {
            let f = load_fragment_q(&input)?;
            let g = polarize(&f, eps2, eps_n)?;
            say!("{} coefficients", g.len());
            if let Some(p) = out.out {
                man.command = "polarize".into();
                man.param("eps2", eps2).param("eps-n", eps_n);
                man.input(&input)?;
                let p = write_out(&p, &CoeffDB::from_fragment(&g, "polarized").serialize())?;
                man.output(&p)?;
                man.finish(start, &manifest_path(&p))?;
            }
        }
        Cmd::Infill { input, out } => {
            let db = CoeffDB::parse(&read(&input)?)?;
            let text = match db.header.field {
                FieldTag::Rationals => infill_text(&db, Rationals)?,
                FieldTag::Prime(p) => infill_text(&db, PrimeField::new(p)?)?,
            };
            if let Some(p) = out.out {
                man.command = "infill".into();
                man.input(&input)?;
                let p = write_out(&p, &text)?;
                man.output(&p)?;
                man.finish(start, &manifest_path(&p))?;
            }
        }
        Cmd::Prolong { input, basis, out } => {
            let db = CoeffDB::parse(&read(&input)?)?;
            let bdbs = basis.iter().map(|b| Ok(CoeffDB::parse(&read(b)?)?)).collect::<Result<Vec<_>, CliError>>()?;
            let text = match db.header.field {
                FieldTag::Rationals => prolong_text(&db, &bdbs, Rationals)?,
                FieldTag::Prime(p) => prolong_text(&db, &bdbs, PrimeField::new(p)?)?,
            };
            if let Some(p) = out.out {
                man.command = "prolong".into();
                man.input(&input)?;
                for b in &basis {
                    man.input(b)?;
                }
                let p = write_out(&p, &text)?;
                man.output(&p)?;
                man.finish(start, &manifest_path(&p))?;
            }
        }
        Cmd::CertifyNonlift { input, lifts, prime, dims } => {
            let db = CoeffDB::parse(&read(&input)?)?;
            let lift_dbs: Vec<CoeffDB> = if lifts.is_empty() {
                let table = dims_table(&dims)?;
                let basis = cached_basis(db.header.weight, db.header.level, &table, prime.unwrap_or(12347))?;
                let cover: Vec<_> = db.records.keys().copied().collect();
                basis
                    .iter()
                    .map(|phi| Ok(CoeffDB::from_fragment(&gritsenko_lift(phi, &cover)?, "lift")))
                    .collect::<Result<_, CliError>>()?
            } else {
                lifts.iter().map(|p| Ok(CoeffDB::parse(&read(p)?)?)).collect::<Result<_, CliError>>()?
            };
            let independent = match (prime, db.header.field) {
                (Some(p), _) | (None, FieldTag::Prime(p)) => certify_in(&db, &lift_dbs, PrimeField::new(p)?)?,
                (None, FieldTag::Rationals) => certify_in(&db, &lift_dbs, Rationals)?,
            };
            say!("{}", if independent { "independent" } else { "dependent" });
            if !independent {
                return Ok(ExitCode::from(Exit::Dependent as u8));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn manifest_path(p: &Path) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn load_fragment_q(path: &Path) -> Result<ParamodularFragment<Rationals>, CliError> {
    Ok(CoeffDB::parse(&read(path)?)?.to_fragment(Rationals)?)
}

/// Reads a database into `field`, reducing rational values when needed.
fn into_field<F: Field>(db: &CoeffDB, field: F) -> Result<ParamodularFragment<F>, CliError> {
    if db.header.field == field.tag() {
        return Ok(db.to_fragment(field)?);
    }
    let q = db.to_fragment(Rationals)?;
    Ok(q.map_field(field.clone(), |x| field.from_rat(x))?)
}

fn infill_text<F: Field>(db: &CoeffDB, field: F) -> Result<String, CliError> {
    let f = db.to_fragment(field)?;
    let g = infill(&f)?;
    say!("{} -> {} coefficients", f.len(), g.len());
    Ok(CoeffDB::from_fragment(&g, "infilled").serialize())
}

fn prolong_text<F: Field>(db: &CoeffDB, basis: &[CoeffDB], field: F) -> Result<String, CliError> {
    let f = db.to_fragment(field.clone())?;
    let b = basis.iter().map(|d| into_field(d, field.clone())).collect::<Result<Vec<_>, _>>()?;
    let g = prolong(&f, &b)?;
    say!("{} -> {} coefficients", f.len(), g.len());
    Ok(CoeffDB::from_fragment(&g, "prolonged").serialize())
}

fn certify_in<F: Field>(db: &CoeffDB, lifts: &[CoeffDB], field: F) -> Result<bool, CliError> {
    let f = into_field(db, field.clone())?;
    let ls = lifts.iter().map(|d| into_field(d, field.clone())).collect::<Result<Vec<_>, _>>()?;
    Ok(certify_nonlift(&f, &ls)?)
}

/// Runs the restriction, checkpointing the echelon form into the cache
/// directory every `every` window indices.
fn restrict_with<F: Field>(
    prob: &RestrictionProblem,
    bases: &[Vec<JacobiFormFragment<F>>],
    field: F,
    key: &str,
    every: usize,
    out: Option<&Path>,
    man: &mut RunManifest,
) -> Result<usize, CliError> {
    let ckpt = cache_dir().map(|c| c.join(format!("{key}.ckpt")));
    let ncols: usize = bases.iter().map(|b| b.len()).sum();
    let state = match &ckpt {
        Some(p) if p.exists() => Some(load_checkpoint(&read(p)?, field.clone(), ncols)?),
        _ => None,
    };
    let mut save_err = None;
    let res = jrmj_basis_resumable(prob, bases, state, every, |st| {
        if let Some(p) = &ckpt {
            if let Err(e) = save_checkpoint(p, &field, st) {
                save_err = Some(e);
            }
        }
    })?;
    if let Some(e) = save_err {
        return Err(e);
    }
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        for (i, e) in res.expansions.iter().enumerate() {
            let p = dir.join(format!("{i:04}.db"));
            fs::write(&p, CoeffDB::from_fragment(e, &format!("det<={} m<={}", prob.detmax, prob.depth)).serialize())?;
            man.output(&p)?;
        }
    }
    Ok(res.dimension)
}

fn save_checkpoint<F: Field>(path: &Path, field: &F, st: &JrmjState<F>) -> Result<(), CliError> {
    let mut text = format!("next={}\n", st.next);
    for row in st.echelon.rows() {
        let parts: Vec<String> = row.iter().map(|x| field.format(x)).collect();
        text.push_str(&parts.join(" "));
        text.push('\n');
    }
    let tmp = path.with_extension("tmp");
    if let Some(d) = path.parent() {
        fs::create_dir_all(d)?;
    }
    fs::write(&tmp, text)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn load_checkpoint<F: Field>(text: &str, field: F, ncols: usize) -> Result<JrmjState<F>, CliError> {
    let mut lines = text.lines();
    let next = lines
        .next()
        .and_then(|l| l.strip_prefix("next="))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| fail(Exit::Input, "bad checkpoint header"))?;
    let mut rows = Vec::new();
    for l in lines {
        let row = l.split_whitespace().map(|s| field.parse(s)).collect::<Result<Vec<_>, _>>()?;
        if row.len() != ncols {
            return Err(fail(Exit::Input, "checkpoint row length does not match the bases"));
        }
        rows.push(row);
    }
    let echelon = Echelon::from_rows(field, ncols, rows.iter().map(|r| r.as_slice()));
    Ok(JrmjState { echelon, next })
}
