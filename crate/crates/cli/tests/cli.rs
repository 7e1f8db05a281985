use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use limitgroups::clg::Clg;
use limitgroups::gad::Gad;
use limitgroups::representations::{Matrices, NumericRep};
use limitgroups::shortening::{moves_from_text, replay, twist_generators};
use limitgroups::{Hom, Presentation};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .display()
        .to_string()
}

fn lgt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lgt"))
        .args(args)
        .output()
        .expect("run lgt")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn criterion_example() {
    let o = lgt(&["criterion", "--z", "a b", "--a", "b|b", "--exp", "2"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "nontrivial true bound 2\n");
    assert_eq!(
        code(&lgt(&[
            "criterion",
            "--z",
            "a b",
            "--a",
            "b|b",
            "--exp",
            "x"
        ])),
        2
    );
    assert_eq!(
        code(&lgt(&["criterion", "--z", "a b", "--a", "q", "--exp", "2"])),
        2
    );
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&lgt(&[])), 2);
    assert_eq!(code(&lgt(&["frobnicate"])), 2);
    assert_eq!(
        code(&lgt(&["--jobs", "0", "check", "--clg", &fixture("z2.clg")])),
        2
    );
    assert_eq!(code(&lgt(&["check", "--clg", &fixture("missing.clg")])), 2);
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.clg");
    fs::write(&bad, "clg level=0 form=sideways gens=a\n").unwrap();
    assert_eq!(code(&lgt(&["check", "--clg", bad.to_str().unwrap()])), 2);
}

#[test]
fn check_reports_each_line() {
    let o = lgt(&["check", "--clg", &fixture("z2.clg"), "--radius", "2"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(
        out.lines()
            .all(|l| l.starts_with("check ") && l.contains(" pass")),
        "{out}"
    );
}

#[test]
fn discriminate_round_trips_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("h.hom");
    let args = |o: &str| {
        lgt(&[
            "discriminate",
            "--clg",
            &fixture("z2.clg"),
            "--elements",
            &fixture("z2.elements"),
            "--mode",
            "injective",
            "--out",
            o,
        ])
    };
    assert_eq!(code(&args(out.to_str().unwrap())), 0);
    let text = fs::read_to_string(&out).unwrap();
    let c = Clg::from_file(fixture("z2.clg").as_ref()).unwrap();
    let h = Hom::from_text(c.presentation().clone(), &text).unwrap();
    h.check_relators().unwrap();
    let xs: Vec<_> = ["a", "t", "a t^-1", "a^2 t"]
        .iter()
        .map(|s| c.parse_word(s).unwrap())
        .collect();
    assert!(h.injective_on(&xs));

    let again = dir.path().join("h2.hom");
    assert_eq!(code(&args(again.to_str().unwrap())), 0);
    assert_eq!(fs::read_to_string(&again).unwrap(), text);
}

#[test]
fn discriminate_rejects_trivial_element() {
    let dir = tempfile::tempdir().unwrap();
    let xs = dir.path().join("x");
    fs::write(&xs, "a t a^-1 t^-1\n").unwrap();
    let o = lgt(&[
        "discriminate",
        "--clg",
        &fixture("z2.clg"),
        "--elements",
        xs.to_str().unwrap(),
        "--mode",
        "nontrivial",
    ]);
    assert_eq!(code(&o), 1);
    fs::write(&xs, "a zz\n").unwrap();
    let o = lgt(&[
        "discriminate",
        "--clg",
        &fixture("z2.clg"),
        "--elements",
        xs.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn shorten_outputs_replay() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.hom");
    let moves = dir.path().join("m");
    let o = lgt(&[
        "shorten",
        "--gad",
        &fixture("double.gad"),
        "--hom",
        &fixture("twisted.hom"),
        "--out",
        out.to_str().unwrap(),
        "--moves",
        moves.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let g = Gad::from_text(&fs::read_to_string(fixture("double.gad")).unwrap()).unwrap();
    let p = g.fundamental_presentation();
    let f = Hom::from_text(
        p.clone(),
        &fs::read_to_string(fixture("twisted.hom")).unwrap(),
    )
    .unwrap();
    let short = Hom::from_text(p.clone(), &fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(short.length(), 1);
    let gens = twist_generators(&g).unwrap();
    let applied = moves_from_text(
        &fs::read_to_string(&moves).unwrap(),
        &gens,
        g.alphabet(),
        f.target(),
    )
    .unwrap();
    assert_eq!(replay(&f, &gens, &applied).unwrap(), short);
}

#[test]
fn embed_matrices_round_trip() {
    let c = Clg::from_file(fixture("z2.clg").as_ref()).unwrap();
    for target in ["sl2", "so3"] {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("m");
        let o = lgt(&[
            "embed",
            "--clg",
            &fixture("z2.clg"),
            "--elements",
            &fixture("z2.elements"),
            "--target",
            target,
            "--depth",
            "5",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{target}");
        let text = fs::read_to_string(&out).unwrap();
        let m = Matrices::from_text(&text, c.presentation().generators()).unwrap();
        assert_eq!(
            m.to_text(c.presentation().generators()),
            text.lines()
                .filter(|l| !l.starts_with('#'))
                .map(|l| format!("{l}\n"))
                .collect::<String>()
        );
    }
}

#[test]
fn numeric_embedding_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: &str, name: &str| {
        let out = dir.path().join(name);
        let o = lgt(&[
            "--seed",
            seed,
            "embed",
            "--numeric",
            "--presentation",
            &fixture("double.pres"),
            "--elements",
            &fixture("double.elements"),
            "--out",
            out.to_str().unwrap(),
        ]);
        (code(&o), fs::read_to_string(out).unwrap())
    };
    let (c1, t1) = run("7", "a");
    let (c2, t2) = run("7", "b");
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(t1, t2);
    let p = Presentation::from_text(&fs::read_to_string(fixture("double.pres")).unwrap()).unwrap();
    let rep = NumericRep::from_text(&p, &t1).unwrap();
    assert!(rep.success && rep.residual < 1e-9);
    assert!(rep.traces.iter().all(|t| t.abs() > 2.0));
    assert_eq!(rep.to_text(&p), t1);
}

#[test]
fn lamination_exit_codes() {
    let k = fixture("triangle.complex");
    let run = |w: &str, float: bool| {
        let w = fixture(w);
        let mut args = vec![
            "lam-validate",
            "--complex",
            k.as_str(),
            "--weights",
            w.as_str(),
        ];
        if float {
            args.push("--float");
        }
        code(&lgt(&args))
    };
    assert_eq!(run("good.weights", false), 0);
    assert_eq!(run("bad.weights", false), 1);
    assert_eq!(run("near.weights", true), 0);
    assert_eq!(run("near.weights", false), 1);
    assert_eq!(run("missing.weights", false), 2);
}

#[test]
fn stable_verdicts() {
    let o = lgt(&[
        "stable",
        "--presentation",
        &fixture("z2.pres"),
        "--hom",
        &fixture("f1.hom"),
        "--hom",
        &fixture("f2.hom"),
        "--hom",
        &fixture("f3.hom"),
        "--elements",
        &fixture("z2.stable"),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        stdout(&o),
        "a eventually-nontrivial ...\nt eventually-trivial .11\na^-1 t eventually-nontrivial 1..\n"
    );
}
