use std::path::Path;

use stochexp::model::{build_q_table, Model, ModelConfig};
use stochexp::picard::{picard_direct, picard_q, qexpr_eval_in_memory};
use stochexp::pipeline::{
    aggregate, expand_monomials_j, expand_monomials_q, instantiate_ncp, run_pipeline, substitute_q,
    ShardSet, StageConfig,
};
use stochexp::{Error, LinComb};

const LOGISTIC: &str = r#"
drivers = 2
time_driver = 0
y0 = "0"
f = [["a", "-a"], ["0", "0", "b"]]
picard_iterations = 4
"#;

const OU: &str = r#"
drivers = 2
time_driver = 0
f = [["a", "-a"], ["b"]]
picard_iterations = 3
"#;

fn model(toml: &str) -> Model {
    ModelConfig::from_toml(toml)
        .unwrap()
        .into_model()
        .unwrap()
        .0
}

fn symbolic(m: &Model) -> Model {
    m.with_y0("y0".parse().unwrap())
}

fn pipeline_text(m: &Model, r: usize, cfg: &StageConfig, dir: &Path) -> String {
    let out = dir.join("expansion.txt");
    run_pipeline(m, r, cfg, &out).unwrap();
    std::fs::read_to_string(out).unwrap()
}

fn eval_expr_records(set: &ShardSet, m: &Model) -> LinComb {
    let table = build_q_table(m);
    let mut sum = LinComb::zero();
    set.for_each_record(|_, _, text| {
        sum += &qexpr_eval_in_memory(&text.parse().unwrap(), &table, None).unwrap();
        Ok(())
    })
    .unwrap();
    sum
}

#[test]
fn matches_direct_iteration_for_every_worker_count() {
    let m = model(LOGISTIC);
    for r in 1..=4 {
        let expected = picard_direct(&m, r, None).to_text();
        for workers in [1, 2, 8] {
            let dir = tempfile::tempdir().unwrap();
            let cfg = StageConfig::new(dir.path().join("work")).workers(workers);
            assert_eq!(
                pipeline_text(&m, r, &cfg, dir.path()),
                expected,
                "R = {r}, workers = {workers}"
            );
        }
    }
}

#[test]
fn ou_third_iterate() {
    let m = model(OU);
    let dir = tempfile::tempdir().unwrap();
    let text = pipeline_text(&m, 3, &StageConfig::new(dir.path()).workers(2), dir.path());
    assert_eq!(
        text,
        "a ; 0\nb ; 1\n-a^2 ; 0,0\n-a*b ; 1,0\na^3 ; 0,0,0\na^2*b ; 1,0,0\n"
    );
}

#[test]
fn truncated_runs_match_truncated_direct_iteration() {
    let m = symbolic(&model(LOGISTIC));
    for l in [0, 1, 3, 6] {
        let dir = tempfile::tempdir().unwrap();
        let cfg = StageConfig::new(dir.path())
            .workers(3)
            .max_word_length(Some(l));
        assert_eq!(
            pipeline_text(&m, 4, &cfg, dir.path()),
            picard_direct(&m, 4, Some(l)).to_text(),
            "L = {l}"
        );
    }
}

#[test]
fn every_stage_preserves_the_sum() {
    let m = symbolic(&model(LOGISTIC));
    let r = 3;
    let dir = tempfile::tempdir().unwrap();
    let cfg = StageConfig::new(dir.path()).workers(3);
    let table = build_q_table(&m);
    let expected = picard_direct(&m, r, None);

    let input = dir.path().join("input.qexpr");
    std::fs::write(&input, format!("{}\n", picard_q(r, m.degree()).unwrap())).unwrap();
    let s1 = expand_monomials_q(&input, &cfg).unwrap();
    assert_eq!(eval_expr_records(&s1, &m), expected);
    let s2 = substitute_q(&s1, &table, &cfg).unwrap();
    assert_eq!(eval_expr_records(&s2, &m), expected);
    let s3 = expand_monomials_j(&s2, &cfg).unwrap();
    assert_eq!(eval_expr_records(&s3, &m), expected);
    let (s4, _) = instantiate_ncp(&s3, &cfg).unwrap();
    let mut sum = LinComb::zero();
    s4.for_each_record(|_, _, text| {
        sum += &text.parse().unwrap();
        Ok(())
    })
    .unwrap();
    assert_eq!(sum, expected);
    let out = dir.path().join("out.txt");
    aggregate(&s4, &out, &cfg).unwrap();
    assert_eq!(std::fs::read_to_string(out).unwrap(), expected.to_text());
}

#[test]
fn shards_and_manifests() {
    let m = model(LOGISTIC);
    let dir = tempfile::tempdir().unwrap();
    let cfg = StageConfig::new(dir.path())
        .workers(4)
        .keep_intermediate(true);
    let out = dir.path().join("expansion.txt");
    let report = run_pipeline(&m, 3, &cfg, &out).unwrap();
    assert_eq!(report.stages[0].records_out, 10);
    for stage in 1..=4 {
        let set =
            ShardSet::from_manifest(&dir.path().join(format!("stage{stage}.manifest"))).unwrap();
        assert_eq!(set.shards.len(), 4);
        for (k, shard) in set.shards.iter().enumerate() {
            assert!(shard
                .path
                .ends_with(format!("stage{stage}_worker{k}.terms")));
            let lines = std::fs::read_to_string(&shard.path)
                .unwrap()
                .lines()
                .count();
            assert_eq!(lines, shard.records);
        }
        assert_eq!(set.records(), report.stages[stage as usize - 1].records_out);
    }

    let cfg = StageConfig::new(dir.path().join("clean")).workers(4);
    run_pipeline(&m, 3, &cfg, &out).unwrap();
    assert_eq!(
        std::fs::read_dir(dir.path().join("clean")).unwrap().count(),
        0
    );
}

#[test]
fn small_term_cap_is_reported_not_truncated() {
    let m = symbolic(&model(LOGISTIC));
    let dir = tempfile::tempdir().unwrap();
    let cfg = StageConfig::new(dir.path()).workers(2).memory_term_cap(5);
    let err = run_pipeline(&m, 4, &cfg, &dir.path().join("out")).unwrap_err();
    assert!(
        matches!(
            err,
            Error::TermCapExceeded {
                stage: 4,
                cap: 5,
                ..
            }
        ),
        "{err}"
    );
    assert!(!dir.path().join("out").exists());
}

#[test]
fn bad_configuration_and_records() {
    let m = model(OU);
    let dir = tempfile::tempdir().unwrap();
    let cfg = StageConfig::new(dir.path()).workers(0);
    assert!(matches!(
        run_pipeline(&m, 2, &cfg, &dir.path().join("o")),
        Err(Error::Config { .. })
    ));
    let cfg = StageConfig::new(dir.path());
    assert!(matches!(
        run_pipeline(&m, 0, &cfg, &dir.path().join("o")),
        Err(Error::NoIterations)
    ));

    let table = build_q_table(&m);
    let input = dir.path().join("q.txt");
    std::fs::write(&input, "Q0\n(> Q0 Q5)\n").unwrap();
    let set = ShardSet::from_files(&[&input]).unwrap();
    assert!(matches!(
        substitute_q(&set, &table, &cfg),
        Err(Error::MissingQ(5))
    ));
    std::fs::write(&input, "Q0\n(> Q0 Q1\n").unwrap();
    match expand_monomials_q(&input, &cfg) {
        Err(Error::Record { record, .. }) => assert_eq!(record, 2),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn headline_word_counts_under_a_small_term_cap() {
    let m = model(LOGISTIC);
    for (model, words) in [(m.clone(), 676), (symbolic(&m), 10_710)] {
        let dir = tempfile::tempdir().unwrap();
        let cfg = StageConfig::new(dir.path())
            .workers(4)
            .memory_term_cap(2_000);
        let report = run_pipeline(&model, 4, &cfg, &dir.path().join("out")).unwrap();
        assert_eq!(report.distinct_words, words);
        assert!(report.peak_terms() <= 2_000, "peak {}", report.peak_terms());
        assert!(report.aggregate.runs > 1 || words < 2_000);
    }
}
