//! Cross-module contracts: index persistence, corpus file loading, policy
//! wiring into the gazetteer, and the evaluation orchestrator.

use std::fs;

use flexner::eval::{self, load_corpus, parse_concatenated, CorpusError, LabelIndex};
use flexner::lexicon::{load_gazetteer, PolicyConfigError};
use flexner::mlfst::EngineError;
use flexner::morphology::{load_lemma_table, DEFAULT_TAG_PREFIXES};
use flexner::recognizer::{RecognizerConfig, UpdateOp};
use flexner::{
    Annotator, EntityId, Gazetteer, HierarchicalRecognizer, MlfstEngine, PolicyConfig, StemFst,
    TolerancePolicy,
};

const GAZETTEER_SRC: &str = "E1\tK\u{fc}nstliche Intelligenz\tthing\n\
                             P1\tM\u{fc}ller\tperson\n\
                             A1\tDFKI\torg\n";
const TABLE_SRC: &str = "K\u{fc}nstliche\tK\u{fc}nstlich\tADJ:NOM:SIN:FEM\n\
                         K\u{fc}nstlichen\tK\u{fc}nstlich\tADJ:DAT:SIN:FEM\n\
                         Intelligenz\tIntelligenz\tSUB:NOM:SIN:FEM\n\
                         Intelligenzen\tIntelligenz\tSUB:NOM:PLU:FEM\n";
const SAMPLE: &str =
    "Die K\u{fc}nstlichen Intelligenzen am DFKI helfen M\u{fc}llers Arbeit.";

fn build_recognizer() -> HierarchicalRecognizer {
    let gazetteer = load_gazetteer(GAZETTEER_SRC, &PolicyConfig::default()).gazetteer;
    let table = load_lemma_table(TABLE_SRC, DEFAULT_TAG_PREFIXES).table;
    HierarchicalRecognizer::build(&gazetteer, table, RecognizerConfig::default())
}

#[test]
fn engine_dump_load_round_trips_behavior() {
    let mut engine = MlfstEngine::new("t");
    engine
        .add_term(
            &[
                vec!["rote".into(), "roten".into()],
                vec!["Ampel".into(), "Ampeln".into()],
            ],
            &EntityId::new("E1"),
        )
        .unwrap();
    engine
        .add_term(&[vec!["Ampel".into()]], &EntityId::new("E2"))
        .unwrap();
    let mut dump = Vec::new();
    engine.dump(&mut dump).unwrap();
    let restored = MlfstEngine::load(dump.as_slice()).unwrap();
    for text in ["die roten Ampeln dort", "eine Ampel hier", "nichts"] {
        assert_eq!(engine.annotate(text), restored.annotate(text));
    }
    assert_eq!(engine.word_count(), restored.word_count());
    assert_eq!(
        engine.accepted_sequence_count(&EntityId::new("E1")),
        restored.accepted_sequence_count(&EntityId::new("E1"))
    );
}

#[test]
fn recognizer_dump_load_round_trips_and_stays_updatable() {
    let recognizer = build_recognizer();
    let mut dump = Vec::new();
    recognizer.dump(&mut dump).unwrap();
    let mut restored = HierarchicalRecognizer::load(dump.as_slice()).unwrap();
    assert_eq!(
        serde_json::to_string(&recognizer.annotate(SAMPLE)).unwrap(),
        serde_json::to_string(&restored.annotate(SAMPLE)).unwrap()
    );
    let entry = flexner::TermEntry {
        entity: EntityId::new("E9"),
        label: "Ampel".to_string(),
        entity_type: flexner::EntityType::new("thing"),
        policy: TolerancePolicy::High,
    };
    restored.update(UpdateOp::Add, &entry);
    let matches = restored.annotate("die Ampel dort");
    assert_eq!(matches.len(), 1);
    assert_eq!(matches[0].entity_ids, ["E9"]);
}

#[test]
fn foreign_and_corrupt_dumps_are_rejected() {
    let mut engine_dump = Vec::new();
    MlfstEngine::new("t").dump(&mut engine_dump).unwrap();
    match HierarchicalRecognizer::load(engine_dump.as_slice()) {
        Err(EngineError::IndexFormat { expected, found, .. }) => {
            assert_eq!(expected, "flexner-recognizer");
            assert!(found.contains("flexner-mlfst"), "found tag was {found:?}");
        }
        other => panic!("expected a format error, got {other:?}"),
    }
    let mut recognizer_dump = Vec::new();
    build_recognizer().dump(&mut recognizer_dump).unwrap();
    assert!(matches!(
        MlfstEngine::load(recognizer_dump.as_slice()),
        Err(EngineError::IndexFormat { .. })
    ));
    assert!(matches!(
        MlfstEngine::load(&b"{ not json"[..]),
        Err(EngineError::IndexParse(_))
    ));
}

#[test]
fn stemfst_serializes_round_trip() {
    let gazetteer = load_gazetteer(GAZETTEER_SRC, &PolicyConfig::default()).gazetteer;
    let index = StemFst::build(&gazetteer);
    let json = serde_json::to_string(&index).unwrap();
    let restored: StemFst = serde_json::from_str(&json).unwrap();
    assert_eq!(index, restored);
    assert_eq!(
        index.annotate("die Intelligenz hilft"),
        restored.annotate("die Intelligenz hilft")
    );
}

#[test]
fn corpus_single_file_uses_filename_as_doc_id() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("probe.txt");
    fs::write(&path, "Die [[H\u{e4}user|Haus]] stehen.").unwrap();
    let docs = load_corpus(&path).unwrap();
    assert_eq!(docs.len(), 1);
    assert_eq!(docs[0].doc_id, "probe.txt");
    assert_eq!(docs[0].plain_text, "Die H\u{e4}user stehen.");
    assert_eq!(docs[0].annotations.len(), 1);
    assert_eq!(docs[0].annotations[0].link, "Haus");
}

#[test]
fn corpus_concatenated_file_splits_on_separator() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("stream.txt");
    fs::write(
        &path,
        "\u{1}d1\nErster [[Text|Probe]] hier.\u{1}d2\nZweiter Teil.",
    )
    .unwrap();
    let docs = load_corpus(&path).unwrap();
    let ids: Vec<&str> = docs.iter().map(|d| d.doc_id.as_str()).collect();
    assert_eq!(ids, ["d1", "d2"]);
    assert_eq!(docs[0].annotations.len(), 1);
    assert_eq!(docs[1].plain_text, "Zweiter Teil.");
    assert!(matches!(
        parse_concatenated("kein Separator am Anfang"),
        Err(CorpusError::Unbalanced { .. })
    ));
    assert!(parse_concatenated("").unwrap().is_empty());
}

#[test]
fn corpus_directory_loads_files_sorted_by_name() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("b.txt"), "Zweites [[Dokument]].").unwrap();
    fs::write(
        dir.path().join("a.txt"),
        "\u{1}a1\nErstes Dokument.\u{1}a2\nNoch eines.",
    )
    .unwrap();
    let docs = load_corpus(dir.path()).unwrap();
    let ids: Vec<&str> = docs.iter().map(|d| d.doc_id.as_str()).collect();
    assert_eq!(ids, ["a1", "a2", "b.txt"]);
}

#[test]
fn corpus_parse_error_names_document_and_offset() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.txt");
    fs::write(&path, "Ein [[offener Rest").unwrap();
    match load_corpus(&path) {
        Err(CorpusError::Unbalanced { doc_id, offset }) => {
            assert_eq!(doc_id, "broken.txt");
            assert_eq!(offset, 4);
        }
        other => panic!("expected an unbalanced error, got {other:?}"),
    }
}

#[test]
fn policy_file_drives_gazetteer_policies() {
    let config = PolicyConfig::parse(
        "# Kommentar\n\
         film = LOW\n\
         protein = HIGH\n\
         default = LOW\n",
    )
    .unwrap();
    let load = load_gazetteer(
        "F1\tDer lange Abschied\tfilm\n\
         X1\tHexokinase\tprotein\n\
         Y1\tIrgendwas\tunbekannt\n\
         A1\tDFKI\tunbekannt\n",
        &config,
    );
    assert!(load.malformed.is_empty());
    let policies: Vec<TolerancePolicy> =
        load.gazetteer.entries.iter().map(|e| e.policy).collect();
    assert_eq!(
        policies,
        [
            TolerancePolicy::Low,
            TolerancePolicy::High,
            TolerancePolicy::Low,
            TolerancePolicy::Acronym,
        ]
    );
}

#[test]
fn policy_file_errors_carry_line_numbers() {
    assert!(matches!(
        PolicyConfig::parse("person = MEDIUM"),
        Err(PolicyConfigError::UnknownPolicy { line: 1, .. })
    ));
    assert!(matches!(
        PolicyConfig::parse("person LOW"),
        Err(PolicyConfigError::Syntax { line: 1, .. })
    ));
}

#[test]
fn compare_reports_metrics_for_every_recognizer() {
    let gazetteer = load_gazetteer(GAZETTEER_SRC, &PolicyConfig::default()).gazetteer;
    let table = load_lemma_table(TABLE_SRC, DEFAULT_TAG_PREFIXES).table;
    let recognizer =
        HierarchicalRecognizer::build(&gazetteer, table, RecognizerConfig::default());
    let stemfst = StemFst::build(&gazetteer);
    let labels = LabelIndex::from_gazetteer(&gazetteer);
    let docs = vec![eval::parse_annotated(
        "d1",
        "Die [[K\u{fc}nstliche Intelligenz|K\u{fc}nstliche Intelligenz]] am [[DFKI]] hilft.",
    )
    .unwrap()];
    let pairs: Vec<(&str, &dyn Annotator)> =
        vec![("mlfst", &recognizer), ("stemfst", &stemfst)];
    let reports = eval::compare(&pairs, &docs, &labels, 2);
    let names: Vec<&str> = reports.keys().map(String::as_str).collect();
    assert_eq!(names, ["mlfst", "stemfst"]);
    let mlfst_report = &reports["mlfst"];
    assert_eq!(mlfst_report.recall_by_ld["0"].total, 2);
    assert_eq!(mlfst_report.recall_by_ld["0"].hits, 2);
    assert!(mlfst_report.throughput_chars_per_ms > 0.0);
    assert!(mlfst_report.match_count >= 2);
    let encoded = serde_json::to_string(&reports).unwrap();
    assert!(encoded.contains("recall_by_ld"));
}

#[test]
fn annotators_share_the_output_contract() {
    let gazetteer = load_gazetteer(GAZETTEER_SRC, &PolicyConfig::default()).gazetteer;
    let table = load_lemma_table(TABLE_SRC, DEFAULT_TAG_PREFIXES).table;
    let recognizer =
        HierarchicalRecognizer::build(&gazetteer, table.clone(), RecognizerConfig::default());
    let stemfst = StemFst::build(&gazetteer);
    let annotators: Vec<&dyn Annotator> = vec![&recognizer, &stemfst];
    for annotator in annotators {
        let matches = annotator.annotate(SAMPLE);
        let mut previous_end = 0;
        for m in &matches {
            assert!(m.start >= previous_end, "unsorted or overlapping spans");
            assert!(m.end > m.start);
            previous_end = m.end;
            assert!(!m.entity_ids.is_empty());
            assert!(!m.recognizer.is_empty());
        }
    }
}

#[test]
fn rebuilding_from_updated_entries_equals_incremental_updates() {
    let gazetteer = load_gazetteer(GAZETTEER_SRC, &PolicyConfig::default()).gazetteer;
    let table = load_lemma_table(TABLE_SRC, DEFAULT_TAG_PREFIXES).table;
    let mut incremental =
        HierarchicalRecognizer::build(&gazetteer, table.clone(), RecognizerConfig::default());
    let extra = flexner::TermEntry {
        entity: EntityId::new("E2"),
        label: "Tiefes Lernen".to_string(),
        entity_type: flexner::EntityType::new("thing"),
        policy: TolerancePolicy::High,
    };
    incremental.update(UpdateOp::Add, &extra);
    incremental.update(UpdateOp::Remove, &gazetteer.entries[1].clone());
    let mut net_entries = gazetteer.entries.clone();
    net_entries.remove(1);
    net_entries.push(extra);
    let net = Gazetteer {
        entries: net_entries,
        policy_config: PolicyConfig::default(),
    };
    let rebuilt = HierarchicalRecognizer::build(&net, table, RecognizerConfig::default());
    for text in [SAMPLE, "Tiefes Lernen hilft M\u{fc}llers Arbeit."] {
        assert_eq!(
            serde_json::to_string(&incremental.annotate(text)).unwrap(),
            serde_json::to_string(&rebuilt.annotate(text)).unwrap()
        );
    }
}
