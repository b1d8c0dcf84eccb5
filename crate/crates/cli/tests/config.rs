use xchurn::methods::MethodSpec;
use xchurn::nn::TrainConfig;
use xchurn_cli::config::{parse_pairs, DataSource, RunConfig};
use xchurn_cli::CliError;

fn cfg(text: &str) -> Result<RunConfig, CliError> {
    RunConfig::from_layers(&[parse_pairs(text).unwrap()])
}

fn key_of(e: CliError) -> String {
    match e {
        CliError::Config { key, .. } => key,
        other => panic!("expected a config error, got {other}"),
    }
}

#[test]
fn minimal_config_gets_defaults() {
    let c = cfg("dataset = synthetic\nmethods = bagging:5\n").unwrap();
    let d = TrainConfig::default();
    assert_eq!(c.comparison.train.hidden_dims, d.hidden_dims);
    assert_eq!(c.comparison.train.epochs, 30);
    assert_eq!(c.comparison.train.learning_rate, 1e-3);
    assert_eq!(c.comparison.train.weight_decay, 1e-4);
    assert_eq!(c.comparison.train.batch_size, 64);
    assert_eq!(c.comparison.seeds, (0..10).collect::<Vec<u64>>());
    assert_eq!(c.comparison.canonical_seeds, vec![0, 1, 2]);
    assert_eq!(c.methods, vec![MethodSpec::bagging(5)]);
    assert!(matches!(c.data, DataSource::Synthetic(_)));
}

#[test]
fn unknown_method_names_the_key() {
    let e = cfg("methods = erm,boosting:3\n").unwrap_err();
    let msg = e.to_string();
    assert!(msg.contains("boosting"), "{msg}");
    assert_eq!(key_of(e), "methods");
}

#[test]
fn unknown_key_is_rejected() {
    assert_eq!(key_of(cfg("epochz = 3\n").unwrap_err()), "epochz");
}

#[test]
fn lambda_grid_is_a_real_list() {
    let c = cfg("lambda_grid = 0, 0.5, 2.5e1, 300\n").unwrap();
    assert_eq!(c.lambda_grid, vec![0.0, 0.5, 25.0, 300.0]);
    assert_eq!(key_of(cfg("lambda_grid = 1,x\n").unwrap_err()), "lambda_grid");
    assert_eq!(key_of(cfg("lambda_grid = -1\n").unwrap_err()), "lambda_grid");
}

#[test]
fn type_mismatch_names_the_key() {
    assert_eq!(key_of(cfg("epochs = many\n").unwrap_err()), "epochs");
    assert_eq!(key_of(cfg("seeds = 3\n").unwrap_err()), "seeds");
}

#[test]
fn missing_dataset_file_is_an_error() {
    assert_eq!(key_of(cfg("dataset = /no/such/file.csv\n").unwrap_err()), "dataset");
}

#[test]
fn syntax_errors_report_the_line() {
    match parse_pairs("# comment\n\nepochs 3\n") {
        Err(CliError::Syntax { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
}

#[test]
fn seed_ranges_and_lists() {
    assert_eq!(cfg("seeds = 3..6\n").unwrap().comparison.seeds, vec![3, 4, 5]);
    assert_eq!(cfg("seeds = 7, 1\n").unwrap().comparison.seeds, vec![7, 1]);
}

#[test]
fn later_layers_override_earlier_ones() {
    let file = parse_pairs("epochs = 5\nseed = 1\n").unwrap();
    let flags = vec![("epochs".to_string(), "7".to_string())];
    let c = RunConfig::from_layers(&[file, flags]).unwrap();
    assert_eq!(c.comparison.train.epochs, 7);
    assert_eq!(c.seed, 1);
}

#[test]
fn hash_tracks_resolved_values() {
    let a = cfg("epochs = 5\n").unwrap();
    let b = cfg("# same thing\nepochs=5\n").unwrap();
    let c = cfg("epochs = 6\n").unwrap();
    assert_eq!(a.hash(), b.hash());
    assert_ne!(a.hash(), c.hash());
    assert_eq!(a.hash().len(), 64);
    assert!(a.canonical().contains("epochs=5\n"));
}
