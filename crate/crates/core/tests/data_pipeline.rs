use rnnmla::data::{gen_synth_blobs, load_manifest, load_split, split_indices, write_csv_matrix};
use rnnmla::format::write_matrix;
use rnnmla::numerics::Matrix;

#[test]
fn manifest_with_whitening_and_split_channels() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen_synth_blobs(90, 2, 3, 6, 4.0, 1).unwrap();
    // one channel as CSV, the other pair joined into a binary file cut in two
    write_csv_matrix(dir.path().join("a.csv"), &data.channels()[0], &[]).unwrap();
    let joined = data.concatenated();
    write_matrix(dir.path().join("b.rnmm"), &joined).unwrap();
    let mut labels = String::from("label\n");
    for id in data.class_ids() {
        labels.push_str(["walk\n", "run\n", "sit\n"][id]);
    }
    std::fs::write(dir.path().join("y.csv"), labels).unwrap();
    std::fs::write(
        dir.path().join("m.toml"),
        r#"
name = "mixed"
labels = "y.csv"
classes = ["walk", "run", "sit"]
seed = 3
preprocess = [{ kind = "standardize" }, { kind = "zca", eps = 1e-5 }]

[[channel]]
name = "a"
path = "a.csv"

[[channel]]
name = "b"
path = "b.rnmm"
cols = 12
split = 2
"#,
    )
    .unwrap();

    let all = load_manifest(dir.path().join("m.toml")).unwrap();
    assert_eq!(all.channel_names(), &["a", "b/0", "b/1"]);
    assert_eq!(all.channel_dims(), vec![6, 6, 6]);
    assert_eq!(all.class_ids(), data.class_ids());
    assert!(all.channels().iter().flatten().all(|v| (0.0..=1.0).contains(v)));

    let split = load_split(dir.path().join("m.toml")).unwrap();
    assert_eq!((split.train.rows(), split.test.rows(), split.all.rows()), (60, 30, 90));
    // training rows are mapped onto [0, 1] exactly; test rows may be clamped
    for c in split.train.channels() {
        for col in c.columns() {
            let (lo, hi) = col.iter().fold((f64::MAX, f64::MIN), |(a, b), v| (a.min(*v), b.max(*v)));
            assert!(lo.abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
        }
    }
    let mut per_class = [0; 3];
    for id in split.test.class_ids() {
        per_class[id] += 1;
    }
    assert_eq!(per_class, [10, 10, 10]);
}

#[test]
fn split_is_deterministic_and_partitions() {
    let ids: Vec<usize> = (0..101).map(|i| (i * 5) % 4).collect();
    let (a_train, a_test) = split_indices(&ids, 2.0 / 3.0, 8).unwrap();
    let (b_train, b_test) = split_indices(&ids, 2.0 / 3.0, 8).unwrap();
    assert_eq!((&a_train, &a_test), (&b_train, &b_test));
    assert_eq!(a_train.len(), 67);
    let mut all: Vec<usize> = a_train.iter().chain(&a_test).copied().collect();
    all.sort_unstable();
    assert_eq!(all, (0..101).collect::<Vec<_>>());
    let (c_train, _) = split_indices(&ids, 2.0 / 3.0, 9).unwrap();
    assert_ne!(a_train, c_train);
}

#[test]
fn bad_inputs_are_reported_with_location() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.csv"), "p,q\n0.1,0.2\n0.3,abc\n").unwrap();
    std::fs::write(dir.path().join("y.csv"), "label\n0\n1\n").unwrap();
    std::fs::write(
        dir.path().join("m.toml"),
        "labels = \"y.csv\"\n[[channel]]\nname = \"a\"\npath = \"a.csv\"\n",
    )
    .unwrap();
    let err = load_manifest(dir.path().join("m.toml")).unwrap_err().to_string();
    assert!(err.contains("row 2, column 2"), "{err}");

    write_matrix(dir.path().join("x.rnmm"), &Matrix::zeros((3, 2))).unwrap();
    std::fs::write(
        dir.path().join("m.toml"),
        "labels = \"y.csv\"\n[[channel]]\nname = \"x\"\npath = \"x.rnmm\"\n",
    )
    .unwrap();
    let err = load_manifest(dir.path().join("m.toml")).unwrap_err().to_string();
    assert!(err.contains("3 rows"), "{err}");
}
