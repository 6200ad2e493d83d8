use std::path::Path;

use super::*;

fn run(args: &[&str]) -> i32 {
    main_with_args(std::iter::once("adkl").chain(args.iter().copied()))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

const SMALL: [&str; 8] = ["--hidden", "8", "--lr", "0.01", "--epochs", "25", "--grid-resolution", "5"];

fn write_dataset(dir: &Path, n: usize) -> PathBuf {
    let ds = data::synthetic_dataset(n, 3, "mologp").unwrap();
    let mut text = String::from("id,smiles,target\n");
    for r in ds.records() {
        text.push_str(&format!("{},{},{}\n", r.id, r.smiles, r.target));
    }
    let path = dir.join("ds.csv");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn exit_codes_for_usage() {
    assert_eq!(run(&["--help"]), EXIT_OK);
    assert_eq!(run(&["frobnicate"]), EXIT_USAGE);
    assert_eq!(run(&["featurize"]), EXIT_USAGE);
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["featurize", "--out", p(dir.path())]), EXIT_USAGE);
}

#[test]
fn help_lists_defaults() {
    let help = Cli::command()
        .find_subcommand_mut("active")
        .unwrap()
        .render_long_help()
        .to_string();
    for needle in ["[default: 100]", "[default: 250]", "[default: 500]", "[default: maximize]", "[default: 128,32]"] {
        assert!(help.contains(needle), "missing {needle}");
    }
}

#[test]
fn featurize_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("in.csv");
    std::fs::write(&csv, "id,smiles\na,CCO\nb,c1ccccc1\nc,CC(=O)N\n").unwrap();
    let out = dir.path().join("f");
    assert_eq!(run(&["featurize", "--out", p(&out), "--input", p(&csv)]), EXIT_OK);
    let desc = read(&out.join("descriptors.csv"));
    let lines: Vec<&str> = desc.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0], "id,smiles,mw,ringct,rotb,hbd,hba,tpsa,mologp");
    assert!(out.join("alphabet.txt").exists() && out.join("encoding.json").exists());
    let manifest = read(&out.join("manifest.json"));
    assert!(!manifest.contains("seconds"));

    let again = dir.path().join("g");
    assert_eq!(run(&["featurize", "--out", p(&again), "--input", p(&csv)]), EXIT_OK);
    for f in ["descriptors.csv", "selfies.csv", "alphabet.txt", "encoding.json", "manifest.json"] {
        assert_eq!(read(&out.join(f)), read(&again.join(f)), "{f}");
    }

    std::fs::write(&csv, "id,smiles\na,CCO\nb,C1CC\n").unwrap();
    assert_eq!(run(&["featurize", "--out", p(&out), "--input", p(&csv)]), EXIT_DATA);
    assert_eq!(run(&["featurize", "--out", p(&out), "--input", p(&csv), "--allow-skip"]), EXIT_OK);
}

#[test]
fn train_dkl_outputs_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_dataset(dir.path(), 16);
    let go = |name: &str| {
        let out = dir.path().join(name);
        let mut args = vec!["train-dkl", "--out", p(&out), "--input", p(&csv)];
        args.extend(SMALL);
        assert_eq!(run(&args), EXIT_OK);
        out
    };
    let (a, b) = (go("a"), go("b"));
    for f in ["checkpoint.json", "latent.csv", "loss.csv", "grid.csv", "manifest.json"] {
        assert_eq!(read(&a.join(f)), read(&b.join(f)), "{f}");
    }
    assert_eq!(read(&a.join("latent.csv")).lines().count(), 17);
    assert_eq!(read(&a.join("grid.csv")).lines().count(), 26);
    let loss: Vec<f64> = read(&a.join("loss.csv"))
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(loss.last() < loss.first());
}

#[test]
fn config_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_dataset(dir.path(), 12);
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "epochs = 7\nhidden = [4]\nunrelated = \"x\"\n").unwrap();
    let out = dir.path().join("o");
    let args = ["train-dkl", "--out", p(&out), "--input", p(&csv), "--config", p(&cfg), "--grid-resolution", "0"];
    assert_eq!(run(&args), EXIT_OK);
    let loss = read(&out.join("loss.csv"));
    assert_eq!(loss.lines().count(), 8);
    let m: serde_json::Value = serde_json::from_str(&read(&out.join("manifest.json"))).unwrap();
    assert_eq!(m["config"]["dkl"]["hidden"], serde_json::json!([4]));
    assert_eq!(m["config"]["dkl"]["lr"], serde_json::json!(5e-3));

    let mut with_flag = args.to_vec();
    with_flag.extend(["--epochs", "3"]);
    assert_eq!(run(&with_flag), EXIT_OK);
    assert_eq!(read(&out.join("loss.csv")).lines().count(), 4);

    std::fs::write(&cfg, "epochs = \"many\"\n").unwrap();
    assert_eq!(run(&args), EXIT_USAGE);
}

#[test]
fn active_run_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let go = |name: &str| {
        let out = dir.path().join(name);
        let mut args = vec![
            "active", "--out", p(&out), "--synthetic", "50", "--n-init", "5", "--cycle-epochs", "3",
            "--with-baseline", "--log-every", "20",
        ];
        args.extend(&SMALL[..6]);
        assert_eq!(run(&args), EXIT_OK);
        out
    };
    let (a, b) = (go("a"), go("b"));
    assert_eq!(read(&a.join("trajectory.csv")).lines().count(), 46);
    assert_eq!(read(&a.join("trajectory_random.csv")).lines().count(), 46);
    assert_eq!(read(&a.join("rmse.csv")).lines().next(), Some("cycle,measured,rmse_active,rmse_random"));
    for f in ["latent_c00000.csv", "latent_c00020.csv", "latent_c00040.csv", "latent_c00045.csv"] {
        assert!(a.join(f).exists(), "{f}");
    }
    let comparison: serde_json::Value = serde_json::from_str(&read(&a.join("comparison.json"))).unwrap();
    assert_eq!(comparison["cycles"], 45);
    assert_eq!(read(&a.join("manifest.json")), read(&b.join("manifest.json")));
}

#[test]
fn active_with_reference() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_dataset(dir.path(), 30);
    let refdir = dir.path().join("ref");
    let mut args = vec!["train-dkl", "--out", p(&refdir), "--input", p(&csv)];
    args.extend(SMALL);
    assert_eq!(run(&args), EXIT_OK);
    let ck = refdir.join("checkpoint.json");
    let out = dir.path().join("act");
    let mut args = vec![
        "active", "--out", p(&out), "--input", p(&csv), "--reference", p(&ck), "--n-init", "10", "--budget", "8",
        "--cycle-epochs", "3",
    ];
    args.extend(&SMALL[..6]);
    assert_eq!(run(&args), EXIT_OK);
    let traj = read(&out.join("trajectory.csv"));
    assert_eq!(traj.lines().count(), 9);
    assert!(traj.lines().skip(1).all(|l| !l.contains(",,")));
    let cmp: serde_json::Value = serde_json::from_str(&read(&out.join("comparison.json"))).unwrap();
    assert!(cmp["pearson_mean"].is_number());
    assert_eq!(read(&out.join("panel_similarity.csv")).lines().count(), 21);

    let other = dir.path().join("other.csv");
    std::fs::write(&other, "id,smiles,target\na,CCCCCCCCCCCCCCCCCCCCCCCCCCCCCCCC,1\nb,CC,2\n").unwrap();
    args[4] = p(&other);
    assert_eq!(run(&args), EXIT_ARTIFACT);

    let bumped = read(&ck).replacen("\"version\":1", "\"version\":9", 1);
    std::fs::write(&ck, bumped).unwrap();
    args[4] = p(&csv);
    assert_eq!(run(&args), EXIT_ARTIFACT);
}

#[test]
fn similar_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_dataset(dir.path(), 50);
    let refdir = dir.path().join("ref");
    let mut args = vec!["train-dkl", "--out", p(&refdir), "--input", p(&csv)];
    args.extend(SMALL);
    assert_eq!(run(&args), EXIT_OK);
    let ck = refdir.join("checkpoint.json");
    let out = dir.path().join("s");
    let ids: Vec<String> = (0..20).map(|i| format!("syn{i:05}")).collect();
    let joined = ids.join(",");
    let args = [
        "similar", "--out", p(&out), "--input", p(&csv), "--checkpoint", p(&ck), "--anchor", "syn00007", "--k", "5",
        "--matrix", &joined,
    ];
    assert_eq!(run(&args), EXIT_OK);
    let nn = read(&out.join("neighbors.csv"));
    assert_eq!(nn.lines().count(), 6);
    assert!(nn.starts_with("rank,id,smiles,distance\n1,"));
    let sim = read(&out.join("similarity.csv"));
    let rows: Vec<Vec<&str>> = sim.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 21);
    for i in 1..=20 {
        assert_eq!(rows[i].len(), 21);
        for j in 1..=20 {
            assert_eq!(rows[i][j], rows[j][i]);
        }
    }
    let mut missing = args.to_vec();
    missing[8] = "nope";
    assert_eq!(run(&missing), EXIT_LOOKUP);
}

#[test]
fn ingest_qm9_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let xyz = dir.path().join("xyz");
    std::fs::create_dir(&xyz).unwrap();
    std::fs::write(xyz.join("dsgdb9nsd_000001.xyz"), crate::data::tests_support::METHANE).unwrap();
    let out = dir.path().join("o");
    assert_eq!(run(&["ingest-qm9", "--out", p(&out), "--qm9-dir", p(&xyz)]), EXIT_OK);
    let text = read(&out.join("qm9.csv"));
    assert!(text.starts_with("id,smiles,smiles_gdb17,A,B,C,mu,alpha,homo,lumo,gap,r2,zpve,U0,U,H,G,Cv\ngdb_1,C,C,"));
    std::fs::write(xyz.join("broken.xyz"), "3\n").unwrap();
    assert_eq!(run(&["ingest-qm9", "--out", p(&out), "--qm9-dir", p(&xyz)]), EXIT_DATA);
    assert_eq!(run(&["ingest-qm9", "--out", p(&out), "--qm9-dir", p(&xyz), "--allow-skip"]), EXIT_OK);
}

#[test]
fn train_vae_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v");
    let args = ["train-vae", "--out", p(&out), "--synthetic", "24", "--epochs", "30", "--hidden", "16"];
    assert_eq!(run(&args), EXIT_OK);
    assert_eq!(read(&out.join("latent.csv")).lines().count(), 25);
    assert_eq!(read(&out.join("loss.csv")).lines().count(), 31);
    let ck: VaeCheckpoint = read_checkpoint(&out.join("checkpoint.json")).unwrap();
    assert_eq!(ck.config.hidden, 16);
    let first = read(&out.join("checkpoint.json"));
    assert_eq!(run(&args), EXIT_OK);
    assert_eq!(first, read(&out.join("checkpoint.json")));
}

#[test]
fn error_mapping() {
    assert_eq!(CliError::from(GpError::NumericalFailure("x".into())).exit_code(), EXIT_NUMERICAL);
    let cycle = ActiveError::Cycle {
        cycle: 4,
        source: GpError::NumericalFailure("not positive definite".into()),
    };
    let e = CliError::from(cycle);
    assert_eq!(e.exit_code(), EXIT_NUMERICAL);
    assert!(e.to_string().contains("cycle 4"));
    assert_eq!(CliError::from(VaeError::NonFinite(3)).exit_code(), EXIT_NUMERICAL);
    assert_eq!(CliError::from(DataError::CorruptFile("x".into())).exit_code(), EXIT_ARTIFACT);
    assert_eq!(CliError::from(SimilarityError::AnchorNotFound("a".into())).exit_code(), EXIT_LOOKUP);
    assert_eq!(CliError::from(DataError::DuplicateId("a".into())).exit_code(), EXIT_DATA);
}
