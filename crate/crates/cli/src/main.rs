use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use num_rational::BigRational;

use limitgroups::clg::{
    criterion_nontrivial, discriminate, sufficient_exponent, validate_clg, Clg, ClgError,
    CriterionInstance, Mode,
};
use limitgroups::gad::Gad;
use limitgroups::homs::stable_kernel_window;
use limitgroups::laminations::{first_violation, Complex2, Weights};
use limitgroups::representations::{
    embed_clg, numeric_solve, schottky_pair, so3_pair, NumericOptions, RepError, Target,
};
use limitgroups::shortening::{
    certify_local_min, moves_to_text, shorten, twist_generators, ShorteningProblem,
};
use limitgroups::{Alphabet, Hom, Presentation, Word};

#[derive(Parser)]
#[command(name = "lgt", version, about = "Limit group toolkit")]
struct Cli {
    /// Seed for randomized procedures.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Maximum worker threads.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find a homomorphism to F(a, b) that is nontrivial or injective on a set.
    Discriminate {
        #[arg(long)]
        clg: PathBuf,
        #[arg(long)]
        elements: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Injective)]
        mode: ModeArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Shorten a homomorphism by edge twists of a graph of groups.
    Shorten {
        #[arg(long)]
        gad: PathBuf,
        #[arg(long)]
        hom: PathBuf,
        /// Disable conjugation in the target.
        #[arg(long)]
        no_conj: bool,
        /// Radius of the local-minimality certificate.
        #[arg(long, default_value_t = 2)]
        radius: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Where to write the move list.
        #[arg(long)]
        moves: Option<PathBuf>,
    },
    /// Embed a constructible limit group into SL2 or SO(3), or search for a
    /// numerical SL2 representation.
    Embed {
        #[arg(long, required_unless_present = "presentation")]
        clg: Option<PathBuf>,
        /// Presentation file for `--numeric`.
        #[arg(long)]
        presentation: Option<PathBuf>,
        #[arg(long)]
        elements: PathBuf,
        #[arg(long, value_enum, default_value_t = TargetArg::Sl2)]
        target: TargetArg,
        /// Depth of the freeness certificate sweep.
        #[arg(long, default_value_t = 8)]
        depth: usize,
        /// Numerical search; the elements are the hyperbolic targets.
        #[arg(long)]
        numeric: bool,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 50)]
        attempts: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the triangle inequalities of edge weights on a 2-complex.
    LamValidate {
        #[arg(long)]
        complex: PathBuf,
        #[arg(long)]
        weights: PathBuf,
        /// Floating-point weights with tolerance 1e-12.
        #[arg(long)]
        float: bool,
    },
    /// Validate the structure of a constructible limit group.
    Check {
        #[arg(long)]
        clg: PathBuf,
        #[arg(long, default_value_t = 2)]
        radius: usize,
    },
    /// Evaluate a free-group criterion instance.
    Criterion {
        #[arg(long)]
        z: String,
        /// Words separated by `|`.
        #[arg(long)]
        a: String,
        /// Exponents separated by `|` or `,`.
        #[arg(long)]
        exp: String,
        #[arg(long, default_value_t = 2)]
        rank: u32,
    },
    /// Windowed stable-kernel verdicts for a sequence of homomorphisms.
    Stable {
        #[arg(long)]
        presentation: PathBuf,
        /// Homomorphism files in sequence order.
        #[arg(long = "hom", required = true)]
        homs: Vec<PathBuf>,
        #[arg(long)]
        elements: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Nontrivial,
    Injective,
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetArg {
    Sl2,
    So3,
}

/// A completed run whose answer is negative.
struct Negative(String);

type Outcome = Result<std::result::Result<(), Negative>>;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// One word per line; blank lines and `#` comments are skipped.
fn read_words(path: &Path, alphabet: &Alphabet) -> Result<Vec<Word>> {
    let text = read(path)?;
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(no, l)| {
            alphabet
                .parse(l)
                .with_context(|| format!("{}:{no}", path.display()))
        })
        .collect()
}

fn comment_lines(s: &mut String, text: &str) {
    for line in text.lines() {
        writeln!(s, "# {line}").unwrap();
    }
}

fn run_discriminate(clg: &Path, elements: &Path, mode: ModeArg, out: Option<&Path>) -> Outcome {
    let c = Clg::from_file(clg)?;
    let al = c.alphabet();
    let xs = read_words(elements, &al)?;
    let mode = match mode {
        ModeArg::Nontrivial => Mode::Nontrivial,
        ModeArg::Injective => Mode::Injective,
    };
    let d = match discriminate(&c, &xs, mode) {
        Ok(d) => d,
        Err(
            e @ (ClgError::TrivialElement(_)
            | ClgError::Hypothesis(_)
            | ClgError::NoExponent { .. }
            | ClgError::Invalid(_)
            | ClgError::Verification(_)),
        ) => return Ok(Err(Negative(e.to_string()))),
        Err(e) => return Err(e.into()),
    };
    let mut s = d.hom.to_text();
    let label = match mode {
        Mode::Nontrivial => "nontrivial",
        Mode::Injective => "injective",
    };
    writeln!(s, "# {label} on {} elements: verified", xs.len()).unwrap();
    for step in &d.trace {
        writeln!(s, "# {}", step.to_line()).unwrap();
    }
    for x in &xs {
        writeln!(
            s,
            "# {} -> {}",
            al.format(x),
            d.hom.target().format(&d.hom.evaluate(x)?)
        )
        .unwrap();
    }
    emit(out, &s)?;
    Ok(Ok(()))
}

fn run_shorten(
    gad: &Path,
    hom: &Path,
    conj: bool,
    radius: usize,
    out: Option<&Path>,
    moves: Option<&Path>,
) -> Outcome {
    let g = Gad::from_text(&read(gad)?)?;
    let f = Hom::from_text(g.fundamental_presentation(), &read(hom)?)?;
    let gens = twist_generators(&g)?;
    let r = shorten(&ShorteningProblem::new(f.clone(), gens.clone(), conj)?)?;
    let certified = certify_local_min(&r.f_short, &gens, radius)?;
    let mut s = r.f_short.to_text();
    writeln!(s, "# length {} -> {}", f.length(), r.f_short.length()).unwrap();
    writeln!(s, "# local minimum at radius {radius}: {certified}").unwrap();
    emit(out, &s)?;
    let move_text = moves_to_text(&r.applied, &gens, g.alphabet(), r.f_short.target());
    match moves {
        Some(p) => fs::write(p, &move_text).with_context(|| format!("writing {}", p.display()))?,
        None if out.is_some() => print!("{move_text}"),
        None => {}
    }
    Ok(if certified {
        Ok(())
    } else {
        Err(Negative(format!("not a local minimum at radius {radius}")))
    })
}

#[allow(clippy::too_many_arguments)]
fn run_embed(
    clg: Option<&Path>,
    presentation: Option<&Path>,
    elements: &Path,
    target: TargetArg,
    depth: usize,
    numeric: bool,
    opts: NumericOptions,
    out: Option<&Path>,
) -> Outcome {
    if numeric {
        let p = match (presentation, clg) {
            (Some(p), _) => Presentation::from_text(&read(p)?)?,
            (None, Some(c)) => Clg::from_file(c)?.presentation().clone(),
            (None, None) => bail!("--numeric needs --presentation or --clg"),
        };
        if opts.tolerance <= 0.0 {
            bail!("--tol must be positive");
        }
        let xs = read_words(elements, &p.alphabet())?;
        let rep = numeric_solve(&p, &xs, &opts);
        emit(out, &rep.to_text(&p))?;
        return Ok(if rep.success {
            Ok(())
        } else {
            Err(Negative(format!("best residual {:.3e}", rep.residual)))
        });
    }
    let Some(clg) = clg else {
        bail!("--clg is required unless --numeric is given")
    };
    let c = Clg::from_file(clg)?;
    let al = c.alphabet();
    let xs = read_words(elements, &al)?;
    let e = match embed_clg(
        &c,
        &xs,
        if matches!(target, TargetArg::Sl2) {
            Target::Sl2
        } else {
            Target::So3
        },
    ) {
        Ok(e) => e,
        Err(RepError::Clg(
            e @ (ClgError::Hypothesis(_) | ClgError::NoExponent { .. } | ClgError::Invalid(_)),
        )) => return Ok(Err(Negative(e.to_string()))),
        Err(e) => return Err(e.into()),
    };
    let mut s = e.matrices.to_text(c.presentation().generators());
    let cert_holds = match target {
        TargetArg::Sl2 => {
            let (_, cert) = schottky_pair(depth);
            writeln!(
                s,
                "# schottky sweep depth {depth}: {} words, hyperbolic {}",
                cert.words_checked,
                cert.holds()
            )
            .unwrap();
            cert.holds()
        }
        TargetArg::So3 => {
            let (_, cert) = so3_pair(depth);
            writeln!(
                s,
                "# rotation sweep depth {depth}: {} words, none the identity {}, {} fix (1,0,0)",
                cert.words_checked,
                cert.holds(),
                cert.fixing_e1.len()
            )
            .unwrap();
            cert.holds()
        }
    };
    for (i, x) in xs.iter().enumerate() {
        let class = e
            .report
            .classes
            .get(i)
            .map_or("non-identity", |k| k.label());
        writeln!(s, "# {} {class}", al.format(x)).unwrap();
    }
    writeln!(
        s,
        "# parabolic samples {}/{}",
        e.report.parabolic_samples, e.report.samples
    )
    .unwrap();
    comment_lines(&mut s, &e.hom.to_text());
    emit(out, &s)?;
    Ok(if e.report.passed() && cert_holds {
        Ok(())
    } else {
        Err(Negative("embedding report failed".into()))
    })
}

fn run_lam_validate(complex: &Path, weights: &Path, float: bool) -> Outcome {
    let k = Complex2::from_text(&read(complex)?)?;
    let text = read(weights)?;
    let bad = if float {
        first_violation(&k, &Weights::<f64>::from_text(&k, &text)?)
    } else {
        first_violation(&k, &Weights::<BigRational>::from_text(&k, &text)?)
    };
    match bad {
        None => {
            println!("valid true");
            Ok(Ok(()))
        }
        Some(i) => {
            let c = k.cells()[i];
            let e = k.edges();
            println!("valid false cell {} {} {}", e[c[0]], e[c[1]], e[c[2]]);
            Ok(Err(Negative("triangle inequality violated".into())))
        }
    }
}

fn run_check(clg: &Path, radius: usize) -> Outcome {
    let c = Clg::from_file(clg)?;
    let report = validate_clg(&c, radius)?;
    print!("{}", report.to_text());
    Ok(if report.passed() {
        Ok(())
    } else {
        Err(Negative("validation failed".into()))
    })
}

fn run_criterion(z: &str, a: &str, exp: &str, rank: u32) -> Outcome {
    let al = Alphabet::standard(rank);
    let z = al.parse(z)?;
    let a: Vec<Word> = a
        .split('|')
        .map(|w| al.parse(w.trim()))
        .collect::<std::result::Result<_, _>>()?;
    let exps: Vec<i64> = exp
        .split(['|', ','])
        .map(|e| {
            e.trim()
                .parse::<i64>()
                .with_context(|| format!("bad exponent {e:?}"))
        })
        .collect::<Result<_>>()?;
    let inst = CriterionInstance::new(z.clone(), a.clone(), exps)?;
    let nontrivial = criterion_nontrivial(&inst);
    println!(
        "nontrivial {nontrivial} bound {}",
        sufficient_exponent(&z, &a)?
    );
    Ok(if nontrivial {
        Ok(())
    } else {
        Err(Negative("the element is trivial".into()))
    })
}

fn run_stable(presentation: &Path, homs: &[PathBuf], elements: &Path) -> Outcome {
    let p = Presentation::from_text(&read(presentation)?)?;
    let fs: Vec<Hom> = homs
        .iter()
        .map(|h| Hom::from_text(p.clone(), &read(h)?).with_context(|| h.display().to_string()))
        .collect::<Result<_>>()?;
    let xs = read_words(elements, &p.alphabet())?;
    let al = p.alphabet();
    for r in stable_kernel_window(&fs, &xs)? {
        let pattern: String = r
            .pattern
            .iter()
            .map(|&t| if t { '1' } else { '.' })
            .collect();
        println!("{} {} {pattern}", al.format(&r.element), r.verdict.label());
    }
    Ok(Ok(()))
}

fn run(cli: Cli) -> Outcome {
    if cli.jobs == 0 {
        bail!("--jobs must be at least 1");
    }
    match cli.command {
        Command::Discriminate {
            clg,
            elements,
            mode,
            out,
        } => run_discriminate(&clg, &elements, mode, out.as_deref()),
        Command::Shorten {
            gad,
            hom,
            no_conj,
            radius,
            out,
            moves,
        } => run_shorten(
            &gad,
            &hom,
            !no_conj,
            radius,
            out.as_deref(),
            moves.as_deref(),
        ),
        Command::Embed {
            clg,
            presentation,
            elements,
            target,
            depth,
            numeric,
            tol,
            attempts,
            out,
        } => {
            let opts = NumericOptions {
                attempts,
                tolerance: tol,
                seed: cli.seed,
                ..NumericOptions::default()
            };
            run_embed(
                clg.as_deref(),
                presentation.as_deref(),
                &elements,
                target,
                depth,
                numeric,
                opts,
                out.as_deref(),
            )
        }
        Command::LamValidate {
            complex,
            weights,
            float,
        } => run_lam_validate(&complex, &weights, float),
        Command::Check { clg, radius } => run_check(&clg, radius),
        Command::Criterion { z, a, exp, rank } => run_criterion(&z, &a, &exp, rank),
        Command::Stable {
            presentation,
            homs,
            elements,
        } => run_stable(&presentation, &homs, &elements),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Negative(msg))) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
