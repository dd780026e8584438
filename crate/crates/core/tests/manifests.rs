use std::path::PathBuf;

use advlabel::experiment::{load_dataset, ClassSelection, Manifest};

fn repo() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

#[test]
fn shipped_manifests_parse() {
    let dir = repo().join("datasets");
    let mut count = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "manifest") {
            let m = Manifest::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert!(m.file.is_some(), "{}", path.display());
            count += 1;
        }
    }
    assert_eq!(count, 11);
}

#[test]
fn fashion_pairs_select_two_classes() {
    let m = Manifest::load(repo().join("datasets/fashion_sva.manifest")).unwrap();
    assert_eq!(m.image, Some((28, 28)));
    assert!(matches!(m.classes, ClassSelection::Pair(ref a, ref b) if a == "5" && b == "9"));
}

#[test]
fn breast_cancer_manifest_matches_the_bundled_copy() {
    let m = Manifest::load(repo().join("datasets/breast_cancer.manifest")).unwrap();
    let ds = load_dataset(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/breast_cancer.csv"), &m).unwrap();
    assert_eq!(ds.data.n(), 569);
    assert_eq!(ds.data.d(), 30);
    assert_eq!(ds.positive, "M");
    let positives = ds.data.labels().unwrap().iter().sum::<f64>();
    assert_eq!(positives, 212.0);
    let names: Vec<&str> = ds.ws_features.iter().map(|&j| ds.data.feature_names()[j].as_str()).collect();
    assert_eq!(names, ["mean_radius", "radius_error", "worst_radius"]);
}
