mod common;

use common::{artifact_differences, pipeline_artifacts};

#[test]
fn every_subcommand_is_byte_identical_across_runs_and_thread_counts() {
    let one = tempfile::tempdir().unwrap();
    let eight = tempfile::tempdir().unwrap();
    let again = tempfile::tempdir().unwrap();
    let a = pipeline_artifacts(one.path(), 1);
    let b = pipeline_artifacts(eight.path(), 8);
    let c = pipeline_artifacts(again.path(), 8);
    assert!(a.len() > 40, "{} artifacts", a.len());
    assert_eq!(artifact_differences(&a, &b), Vec::<String>::new());
    assert_eq!(artifact_differences(&b, &c), Vec::<String>::new());
}
